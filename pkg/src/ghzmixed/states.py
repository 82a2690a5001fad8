"""Dense qubit-register linear algebra.

States are plain numpy arrays: kets of shape (2**n,) and density matrices of
shape (2**n, 2**n). Qubit 1 is the most significant bit of the computational
index, and qubit arguments are 1-based.
"""
from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .pauli import PauliString

MAX_QUBITS = 12
STRUCT_TOL = 1e-12
SPECTRAL_TOL = 1e-9
# eigenvalues below this are treated as null space in fidelity
RANK_TOL = 1e-13

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def num_qubits(a: np.ndarray) -> int:
    dim = a.shape[0]
    n = int(round(np.log2(dim)))
    if 2**n != dim or n < 1:
        raise ValueError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
    return n


def check_ket(psi: np.ndarray, tol: float = STRUCT_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state vector must be one-dimensional")
    num_qubits(psi)
    norm = np.vdot(psi, psi).real
    if abs(norm - 1) > tol:
        raise ValueError(f"state vector has squared norm {norm}")
    return psi


def check_density_matrix(
    rho: np.ndarray, tol: float = STRUCT_TOL, spectral_tol: float = SPECTRAL_TOL
) -> np.ndarray:
    """Raise ValueError unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    num_qubits(rho)
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValueError(f"density matrix has trace {tr}")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -spectral_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo}")
    return rho


def is_density_matrix(rho: np.ndarray, **kw) -> bool:
    try:
        check_density_matrix(rho, **kw)
    except ValueError:
        return False
    return True


def ket(*factors: np.ndarray) -> np.ndarray:
    """Tensor product of single-qubit (or larger) kets, left factor = qubit 1."""
    out = np.array([1.0 + 0j])
    for f in factors:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def densify(psi: np.ndarray) -> np.ndarray:
    psi = check_ket(psi)
    return np.outer(psi, psi.conj())


def maximally_mixed(n: int) -> np.ndarray:
    return np.eye(2**n, dtype=complex) / 2**n


def tensor(*ops: np.ndarray) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def apply_local(unitaries: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Conjugate ``rho`` by a product of single-qubit unitaries (one per qubit)."""
    n = num_qubits(rho)
    if len(unitaries) != n:
        raise ValueError(f"{len(unitaries)} local factors for a {n}-qubit state")
    for u in unitaries:
        u = np.asarray(u, dtype=complex)
        if u.shape != (2, 2) or np.max(np.abs(u @ u.conj().T - np.eye(2))) > STRUCT_TOL:
            raise ValueError("local factor is not a 2x2 unitary")
    full = tensor(*unitaries)
    return full @ rho @ full.conj().T


def _cz_diagonal(n: int, i: int, j: int) -> np.ndarray:
    if i == j or not (1 <= i <= n) or not (1 <= j <= n):
        raise ValueError(f"bad CZ qubits ({i}, {j}) for {n} qubits")
    idx = np.arange(2**n)
    bi = (idx >> (n - i)) & 1
    bj = (idx >> (n - j)) & 1
    return np.where(bi & bj, -1.0, 1.0)


def apply_cz(rho: np.ndarray, i: int, j: int) -> np.ndarray:
    n = num_qubits(rho)
    d = _cz_diagonal(n, i, j)
    return d[:, None] * rho * d[None, :]


def apply_cz_ket(psi: np.ndarray, i: int, j: int) -> np.ndarray:
    return _cz_diagonal(num_qubits(psi), i, j) * psi


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced state on the qubits in ``keep`` (returned in ascending order)."""
    n = num_qubits(rho)
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise ValueError("keep set is empty")
    if keep[0] < 1 or keep[-1] > n:
        raise ValueError(f"keep set {keep} outside 1..{n}")
    drop = [q for q in range(1, n + 1) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    # trace the highest-index qubits first so earlier axis numbers stay valid
    m = n
    for q in reversed(drop):
        t = np.trace(t, axis1=q - 1, axis2=q - 1 + m)
        m -= 1
    d = 2 ** len(keep)
    return t.reshape(d, d)


def expectation(rho: np.ndarray, p: PauliString) -> float:
    """Tr(rho P) for a Hermitian Pauli string (sign included)."""
    if not p.is_hermitian:
        raise ValueError(f"{p} has an imaginary phase and is not an observable")
    n = num_qubits(rho)
    if p.n != n:
        raise ValueError(f"{p.n}-qubit string on a {n}-qubit state")
    return float(np.real(np.trace(rho @ p.to_matrix())))


def _check_psd(a: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(a)
    if w.min() < -SPECTRAL_TOL:
        raise ValueError(f"{name} is not PSD (eigenvalue {w.min():.3e})")
    return w, v


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2.

    The square root is taken on the lower-rank argument and the problem is
    compressed onto its support, so rank-deficient states (the usual case
    here) do not pick up sqrt-amplified round-off from their null space.
    """
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    wr, vr = _check_psd(rho, "first argument")
    ws, vs = _check_psd(sigma, "second argument")
    if np.sum(ws > RANK_TOL) < np.sum(wr > RANK_TOL):
        wr, vr, sigma = ws, vs, rho
    keep = wr > RANK_TOL
    half = vr[:, keep] * np.sqrt(wr[keep])
    inner = half.conj().T @ sigma @ half
    inner = (inner + inner.conj().T) / 2
    mu = np.clip(np.linalg.eigvalsh(inner), 0, None)
    f = float(np.sum(np.sqrt(mu)) ** 2)
    return min(f, 1.0)


def dephase(
    rho: np.ndarray, q: int, basis: Sequence[np.ndarray], lam: float
) -> np.ndarray:
    """Shrink coherences between the two basis states on qubit ``q`` by (1 - lam)."""
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"dephasing strength {lam} outside [0, 1]")
    n = num_qubits(rho)
    if not (1 <= q <= n):
        raise ValueError(f"qubit {q} outside 1..{n}")
    b0, b1 = (np.asarray(b, dtype=complex) for b in basis)
    gram = np.array([[np.vdot(b0, b0), np.vdot(b0, b1)], [np.vdot(b1, b0), np.vdot(b1, b1)]])
    if np.max(np.abs(gram - np.eye(2))) > STRUCT_TOL:
        raise ValueError("dephasing basis is not orthonormal")
    if lam == 0:
        return rho.copy()
    projs = []
    for b in (b0, b1):
        factors = [np.eye(2)] * n
        factors[q - 1] = np.outer(b, b.conj())
        projs.append(tensor(*factors))
    blocked = sum(p @ rho @ p for p in projs)
    return (1 - lam) * rho + lam * blocked


def eigenvalues(rho: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(rho)[::-1]


def white_noise(rho: np.ndarray, p: float) -> np.ndarray:
    """p * rho + (1 - p) * I/d."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"white-noise weight {p} outside [0, 1]")
    return p * rho + (1 - p) * maximally_mixed(num_qubits(rho))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def density_to_dict(rho: np.ndarray) -> dict:
    n = num_qubits(rho)
    flat = np.asarray(rho, dtype=complex).ravel()
    return {"n": n, "entries": [[float(z.real), float(z.imag)] for z in flat]}


def density_from_dict(d: dict) -> np.ndarray:
    n = int(d["n"])
    entries = np.array(d["entries"], dtype=float)
    dim = 2**n
    if entries.shape != (dim * dim, 2):
        raise ValueError(f"expected {dim * dim} [re, im] pairs for n={n}")
    return (entries[:, 0] + 1j * entries[:, 1]).reshape(dim, dim)


def dumps_density(rho: np.ndarray, meta: dict | None = None) -> str:
    d = density_to_dict(rho)
    if meta is not None:
        d["meta"] = meta
    return json.dumps(d, sort_keys=True)


def loads_density(text: str) -> np.ndarray:
    return density_from_dict(json.loads(text))
