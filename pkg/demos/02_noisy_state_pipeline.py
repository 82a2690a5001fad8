"""
From a fused cluster to the mixed target state
==============================================

Fuse a Bell pair into a GHZ state on a polarizing beam splitter, mix in
white noise and dephase photon 4 in the D/A basis. The result is compared
with the ideal mixed state rho_psi along the way.
"""
import numpy as np

from ghzmixed.factory import NoiseSpec, cluster_state, ghz4, pipeline_stages, rho_phi, rho_psi
from ghzmixed.pauli import t_shaped
from ghzmixed.states import HADAMARD, apply_local, densify, eigenvalues, fidelity, partial_trace

# losing qubits 5..N of a T-shaped cluster leaves the same four-qubit state
for n in (5, 6, 7):
    red = partial_trace(densify(cluster_state(t_shaped(n))), [1, 2, 3, 4])
    print(f"N={n}: fidelity(reduced, rho_phi) = {fidelity(red, rho_phi()):.12f}")

# local Hadamards on 1, 3, 4 map rho_phi onto rho_psi
i2 = np.eye(2)
print("H I H H rho_phi vs rho_psi:", round(fidelity(apply_local([HADAMARD, i2, HADAMARD, HADAMARD], rho_phi()), rho_psi()), 12))
print("rho_psi eigenvalues:", np.round(eigenvalues(rho_psi())[:3], 6))

for p in (1.0, 0.625, 0.4):
    st = pipeline_stages(NoiseSpec(p))
    g = ghz4()
    overlap = np.real(np.vdot(g, st.noisy @ g))
    f = fidelity(st.final, rho_psi())
    print(f"p={p:5.3f}  fusion success {st.success_probability:.3f}  "
          f"GHZ overlap before dephasing {overlap:.4f}  fidelity to rho_psi {f:.4f}  "
          f"(closed form {p + (1 - p) / 8:.4f})")
