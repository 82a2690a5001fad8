"""Named states and the simulated four-photon generation pipeline.

The pipeline works at the level of states: two Bell pairs are fused on a
polarizing beam splitter, a white-noise admixture stands in for the
experimental imperfections, and the quartz plates on photon 4 become a full
dephasing channel in the D/A basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import GraphSpec
from .states import (
    MAX_QUBITS,
    apply_cz_ket,
    check_ket,
    dephase,
    densify,
    ket,
    num_qubits,
    white_noise,
)

_S = 1 / np.sqrt(2)

POLARIZATION = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, 1j * _S], dtype=complex),
    "L": np.array([_S, -1j * _S], dtype=complex),
}

# measurement basis -> (+1 eigenket label, -1 eigenket label)
BASIS_LABELS = {"X": ("D", "A"), "Y": ("R", "L"), "Z": ("H", "V")}
LABEL_BASIS = {lab: (b, bit) for b, pair in BASIS_LABELS.items() for bit, lab in enumerate(pair)}


def polarization(labels: str) -> np.ndarray:
    """Product ket for a label string such as ``"VVVD"``."""
    try:
        return ket(*(POLARIZATION[c] for c in labels))
    except KeyError as exc:
        raise ValueError(f"unknown polarization label {exc.args[0]!r}") from None


def basis_pair(basis: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigenkets (+1, -1) of X, Y or Z; also accepts ``"DA"``-style names."""
    key = {"DA": "X", "RL": "Y", "HV": "Z"}.get(basis, basis)
    if key not in BASIS_LABELS:
        raise ValueError(f"unknown basis {basis!r}")
    a, b = BASIS_LABELS[key]
    return POLARIZATION[a], POLARIZATION[b]


def bell_phi_plus() -> np.ndarray:
    return (polarization("HH") + polarization("VV")) * _S


def pbs_fusion(psi: np.ndarray, pair: tuple[int, int]) -> tuple[np.ndarray, float]:
    """Post-select both photons of ``pair`` leaving the PBS in different ports.

    Keeps only the HH and VV components on the pair. Returns the
    renormalized state and the post-selection probability.
    """
    psi = check_ket(psi)
    n = num_qubits(psi)
    i, j = pair
    if i == j or not (1 <= i <= n) or not (1 <= j <= n):
        raise ValueError(f"bad fusion pair {pair} for {n} qubits")
    idx = np.arange(2**n)
    same = ((idx >> (n - i)) & 1) == ((idx >> (n - j)) & 1)
    out = np.where(same, psi, 0)
    prob = float(np.vdot(out, out).real)
    if prob < 1e-15:
        raise ValueError("empty post-selection: no fourfold coincidence possible")
    return out / np.sqrt(prob), prob


def ghz4() -> np.ndarray:
    return (polarization("HHHH") + polarization("VVVV")) * _S


def ghz3(sign: int = 1) -> np.ndarray:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return (polarization("HHH") + sign * polarization("VVV")) * _S


def cluster_state(g: GraphSpec) -> np.ndarray:
    if g.n > MAX_QUBITS:
        raise ValueError(f"{g.n} qubits exceeds the dense limit of {MAX_QUBITS}")
    psi = np.full(2**g.n, 2 ** (-g.n / 2), dtype=complex)
    for u, v in g.sorted_edges():
        psi = apply_cz_ket(psi, u, v)
    return psi


def rho_phi() -> np.ndarray:
    """Four-qubit partial state of the T-shaped cluster."""
    dhd, ava = polarization("DHD"), polarization("AVA")
    phi1 = ket((dhd + ava) * _S, POLARIZATION["H"])
    phi2 = ket((dhd - ava) * _S, POLARIZATION["V"])
    return 0.5 * (densify(phi1) + densify(phi2))


def rho_psi() -> np.ndarray:
    """Locally equivalent target state: GHZ+ with photon 4 in D, GHZ- with A."""
    psi1 = ket(ghz3(+1), POLARIZATION["D"])
    psi2 = ket(ghz3(-1), POLARIZATION["A"])
    return 0.5 * (densify(psi1) + densify(psi2))


@dataclass
class NoiseSpec:
    """Imperfection model for the generation pipeline.

    white_noise_p is the weight of the ideal state in p*rho + (1-p)*I/16.
    Each dephasing entry is (qubit, basis, strength) with basis one of
    X/Y/Z (or DA/RL/HV).
    """

    white_noise_p: float = 1.0
    dephasing: list = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.white_noise_p <= 1.0):
            raise ValueError(f"white_noise_p={self.white_noise_p} outside [0, 1]")
        clean = []
        for entry in self.dephasing:
            q, basis, lam = entry
            if not (0.0 <= float(lam) <= 1.0):
                raise ValueError(f"dephasing strength {lam} outside [0, 1]")
            basis_pair(basis)
            clean.append((int(q), str(basis), float(lam)))
        self.dephasing = clean

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(
            white_noise_p=float(d.get("white_noise_p", 1.0)),
            dephasing=[tuple(e) for e in d.get("dephasing", [])],
        )

    def to_dict(self) -> dict:
        return {"white_noise_p": self.white_noise_p, "dephasing": [list(e) for e in self.dephasing]}


@dataclass
class PipelineStages:
    fused: np.ndarray
    success_probability: float
    noisy: np.ndarray
    final: np.ndarray


def pipeline_stages(noise: NoiseSpec | None = None, quartz_strength: float = 1.0) -> PipelineStages:
    """Run the generation pipeline and keep every intermediate state."""
    noise = noise or NoiseSpec()
    pairs = ket(bell_phi_plus(), bell_phi_plus())
    fused, prob = pbs_fusion(pairs, (2, 3))
    noisy = white_noise(densify(fused), noise.white_noise_p)
    rho = noisy
    for q, basis, lam in noise.dephasing:
        rho = dephase(rho, q, basis_pair(basis), lam)
    final = dephase(rho, 4, basis_pair("X"), quartz_strength)
    return PipelineStages(densify(fused), prob, noisy, final)


def generation_pipeline(noise: NoiseSpec | None = None) -> np.ndarray:
    return pipeline_stages(noise).final
