"""Polarization state tomography from {H, V, D, R}^n projector counts.

Reconstruction maximizes the Poisson log-likelihood

    L(M) = sum_i c_i log mu_i - mu_i,   mu_i = <p_i| M |p_i>,

over unnormalized PSD matrices M = T T^dagger with T lower triangular; the
fitted state is M / Tr M and Tr M plays the role of the total count scale.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .factory import POLARIZATION, ghz3
from .measurement import (
    CountsTable,
    derive_seed,
    expectation_from_counts,
    fraction_predicted,
)
from .states import MAX_QUBITS, fidelity, num_qubits, tensor

TOMO_ALPHABET = "HVDR"

# rows: H, V, D, R; columns: <a|sigma_k|a> for sigma_k in I, X, Y, Z
_BLOCH = np.array(
    [[1, 0, 0, 1], [1, 0, 0, -1], [1, 1, 0, 0], [1, 0, 1, 0]], dtype=float
)
_PAULI_1Q = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def tomography_settings(n: int) -> list[str]:
    if not (1 <= n <= MAX_QUBITS):
        raise ValueError(f"qubit count {n} outside 1..{MAX_QUBITS}")
    return ["".join(p) for p in itertools.product(TOMO_ALPHABET, repeat=n)]


@dataclass
class TomographySet:
    projectors: list
    counts: np.ndarray
    duration_s: float = 60.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.projectors[0]) if self.projectors else 0
        if list(self.projectors) != tomography_settings(max(n, 1)):
            raise ValueError("projectors must be the 4^n {H,V,D,R} strings in canonical order")
        if self.counts.shape != (len(self.projectors),):
            raise ValueError("one count per projector required")
        if np.any(self.counts < 0):
            raise ValueError("negative counts")

    @property
    def n(self) -> int:
        return len(self.projectors[0])

    def with_counts(self, counts: np.ndarray) -> "TomographySet":
        return TomographySet(list(self.projectors), counts, self.duration_s, dict(self.meta))


def projector_kets(n: int) -> np.ndarray:
    """Rows are the product kets of :func:`tomography_settings` (n)."""
    singles = [POLARIZATION[c] for c in TOMO_ALPHABET]
    return np.array([tensor(*[singles[TOMO_ALPHABET.index(c)][:, None] for c in p]).ravel()
                     for p in tomography_settings(n)])


def expected_counts(rho: np.ndarray, scale: float) -> np.ndarray:
    kets = projector_kets(num_qubits(rho))
    probs = np.real(np.einsum("ij,jk,ik->i", kets.conj(), rho, kets))
    return scale * np.clip(probs, 0, None)


def simulate_tomography(
    rho: np.ndarray, rate_constant: float, duration_s: float, seed: int
) -> TomographySet:
    """Poisson counts with mean rate_constant * duration_s * <p|rho|p> per projector."""
    if rate_constant <= 0 or duration_s <= 0:
        raise ValueError("rate_constant and duration_s must be positive")
    n = num_qubits(rho)
    means = expected_counts(rho, rate_constant * duration_s)
    rng = np.random.default_rng(derive_seed(seed, "tomography"))
    return TomographySet(
        tomography_settings(n),
        rng.poisson(means),
        duration_s,
        {"seed": int(seed), "rate_constant": float(rate_constant)},
    )


def _pauli_basis(n: int) -> list[np.ndarray]:
    return [tensor(*[_PAULI_1Q[k] for k in ks]) for ks in itertools.product(range(4), repeat=n)]


def linear_inversion(t: TomographySet) -> np.ndarray:
    """Direct inversion of the projector data in the Pauli basis.

    The result is Hermitian with unit trace but may have negative eigenvalues.
    """
    n = t.n
    counts = t.counts.astype(float)
    inv = np.linalg.inv(_BLOCH)
    # apply inv to each qubit axis of the count tensor
    r = counts.reshape((4,) * n)
    for axis in range(n):
        r = np.moveaxis(np.tensordot(inv, r, axes=([1], [axis])), 0, axis)
    r = r.ravel()
    if r[0] <= 0:
        raise ValueError("total intensity from the data is not positive")
    coeffs = r / r[0]
    rho = sum(c * p for c, p in zip(coeffs, _pauli_basis(n))) / 2**n
    return (rho + rho.conj().T) / 2


def project_to_psd(a: np.ndarray) -> np.ndarray:
    """Clamp negative eigenvalues to zero and renormalize the trace."""
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    w = np.clip(w, 0, None)
    if w.sum() <= 0:
        raise ValueError("matrix has no positive part")
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


@dataclass
class MleResult:
    rho: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    initializer: str
    history: list = field(default_factory=list, repr=False)

    def metadata(self) -> dict:
        return {
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "initializer": self.initializer,
        }


class _Likelihood:
    """Poisson log-likelihood of a lower-triangular factor, packed as a real vector."""

    def __init__(self, kets: np.ndarray, counts: np.ndarray):
        self.kets = kets
        self.counts = counts.astype(float)
        d = kets.shape[1]
        self.d = d
        self.lower = np.tril_indices(d)
        self.strict = np.tril_indices(d, -1)

    def pack(self, t: np.ndarray) -> np.ndarray:
        return np.concatenate([t[self.lower].real, t[self.strict].imag])

    def unpack(self, x: np.ndarray) -> np.ndarray:
        t = np.zeros((self.d, self.d), dtype=complex)
        m = len(self.lower[0])
        t[self.lower] = x[:m]
        t[self.strict] += 1j * x[m:]
        return t

    def mu(self, t: np.ndarray) -> np.ndarray:
        # mu_i = || T^dagger p_i ||^2
        y = self.kets.conj() @ t
        return np.sum(np.abs(y) ** 2, axis=1), y

    def value(self, x: np.ndarray) -> float:
        mu, _ = self.mu(self.unpack(x))
        return self._loglik(mu)

    def _loglik(self, mu: np.ndarray) -> float:
        pos = self.counts > 0
        if np.any(mu[pos] <= 0):
            return -np.inf
        return float(np.sum(self.counts[pos] * np.log(mu[pos])) - mu.sum())

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        t = self.unpack(x)
        mu, y = self.mu(t)
        val = self._loglik(mu)
        if not np.isfinite(val):
            return val, np.zeros_like(x)
        w = np.where(self.counts > 0, self.counts / np.where(mu > 0, mu, 1.0), 0.0) - 1.0
        # dL/dRe T + i dL/dIm T = 2 * sum_i w_i p_i p_i^dagger T
        g = 2 * (self.kets.T * w) @ y
        return val, np.concatenate([g[self.lower].real, g[self.strict].imag])


def _lbfgs_ascent(fun, x0, tol, max_iter, memory=10, patience=5):
    """Maximize ``fun`` with L-BFGS directions and Armijo backtracking.

    Only steps that increase the objective are accepted, so the recorded
    history is non-decreasing. Convergence needs ``patience`` consecutive
    steps with relative improvement below ``tol``; a single short step on a
    flat stretch is common and does not mean the optimum was reached.
    """
    x = x0.copy()
    f, g = fun(x)
    history = [f]
    s_list, y_list = [], []
    converged = False
    stalled = 0
    it = 0
    for it in range(1, max_iter + 1):
        # two-loop recursion on the negated problem
        q = -g
        alphas = []
        for s, y in reversed(list(zip(s_list, y_list))):
            a = np.dot(s, q) / np.dot(y, s)
            alphas.append(a)
            q = q - a * y
        if s_list:
            s, y = s_list[-1], y_list[-1]
            q = q * (np.dot(s, y) / np.dot(y, y))
        else:
            q = q / max(np.linalg.norm(g), 1e-300)
        for (s, y), a in zip(zip(s_list, y_list), reversed(alphas)):
            b = np.dot(y, q) / np.dot(y, s)
            q = q + s * (a - b)
        direction = -q
        slope = np.dot(g, direction)
        if slope <= 0:
            s_list.clear()
            y_list.clear()
            direction = g / max(np.linalg.norm(g), 1e-300)
            slope = np.dot(g, direction)
        step = 1.0
        accepted = False
        for _ in range(60):
            x_new = x + step * direction
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new >= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        s_vec, y_vec = x_new - x, g - g_new
        if np.dot(s_vec, y_vec) > 1e-12 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            s_list.append(s_vec)
            y_list.append(y_vec)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
        change = abs(f_new - f) / max(abs(f_new), 1.0)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        stalled = stalled + 1 if change < tol else 0
        if stalled >= patience:
            converged = True
            break
    return x, f, it, converged, history


def mle_reconstruct(
    t: TomographySet,
    tol: float = 1e-10,
    max_iter: int = 5000,
    init: np.ndarray | None = None,
    floor: float = 1e-3,
) -> MleResult:
    """Maximum-likelihood density matrix from a complete projector data set.

    Starts from ``init`` or from the PSD-clamped linear inversion, mixed with
    ``floor`` of the maximally mixed state so no projector starts with zero
    predicted counts.
    """
    if t.counts.sum() <= 0:
        raise ValueError("tomography set has no counts")
    kets = projector_kets(t.n)
    d = 2**t.n
    if init is None:
        start = project_to_psd(linear_inversion(t))
        note = "linear inversion, PSD-clamped"
    else:
        start = init / np.trace(init).real
        note = "user-supplied"
    start = (1 - floor) * start + floor * np.eye(d) / d
    probs = np.real(np.einsum("ij,jk,ik->i", kets.conj(), start, kets))
    scale = t.counts.sum() / probs.sum()
    lik = _Likelihood(kets, t.counts)
    chol = np.linalg.cholesky(scale * start)
    x, f, iters, conv, hist = _lbfgs_ascent(lik.value_and_grad, lik.pack(chol), tol, max_iter)
    tm = lik.unpack(x)
    m = tm @ tm.conj().T
    rho = m / np.trace(m).real
    rho = (rho + rho.conj().T) / 2
    return MleResult(rho, f, iters, conv, note, hist)


def log_likelihood(t: TomographySet, rho: np.ndarray) -> float:
    """Poisson log-likelihood of a normalized state with the best-fit count scale."""
    mu = expected_counts(rho, 1.0)
    mu = mu * t.counts.sum() / mu.sum()
    return _Likelihood(projector_kets(t.n), t.counts)._loglik(mu)


def conditional_state(rho: np.ndarray, q: int, k: np.ndarray) -> tuple[np.ndarray, float]:
    """Project qubit ``q`` onto ket ``k`` and return the remaining state and its probability."""
    n = num_qubits(rho)
    if n < 2 or not (1 <= q <= n):
        raise ValueError(f"cannot condition qubit {q} of a {n}-qubit state")
    k = np.asarray(k, dtype=complex)
    t = rho.reshape((2,) * (2 * n))
    t = np.tensordot(k.conj(), t, axes=([0], [q - 1]))
    t = np.tensordot(t, k, axes=([n - 1 + q - 1], [0]))
    d = 2 ** (n - 1)
    out = t.reshape(d, d)
    prob = float(np.trace(out).real)
    if prob <= 1e-12:
        raise ValueError("conditioning on a zero-probability branch")
    return out / prob, prob


@dataclass(frozen=True)
class WitnessResult:
    value: float
    sigma: float
    target: str


def ghz_witness(rho3: np.ndarray, sign: int, sigma: float = 0.0) -> WitnessResult:
    """<1/2 - |GHZ+-><GHZ+-|>; negative values certify genuine tripartite entanglement."""
    if rho3.shape != (8, 8):
        raise ValueError("GHZ witness needs a three-qubit state")
    g = ghz3(sign)
    overlap = float(np.real(np.vdot(g, rho3 @ g)))
    return WitnessResult(0.5 - overlap, float(sigma), "GHZ+" if sign == 1 else "GHZ-")


def branch_witness(rho4: np.ndarray, label: str) -> float:
    """Witness value on qubits 1-3 after finding photon 4 in D (GHZ+) or A (GHZ-)."""
    sign = {"D": 1, "A": -1}[label]
    cond, _ = conditional_state(rho4, 4, POLARIZATION[label])
    return ghz_witness(cond, sign).value


# --- bootstrap --------------------------------------------------------------


def _tomo_stat(fn: Callable[[np.ndarray], float]):
    def stat(t: TomographySet, warm: np.ndarray | None = None) -> float:
        return fn(mle_reconstruct(t, tol=1e-9, init=warm).rho)
    return stat


STATISTICS = {
    "fraction+": lambda t: fraction_predicted(t, +1).value,
    "fraction-": lambda t: fraction_predicted(t, -1).value,
    "expectation": lambda t: expectation_from_counts(t)[0],
    "witness_D": _tomo_stat(lambda rho: branch_witness(rho, "D")),
    "witness_A": _tomo_stat(lambda rho: branch_witness(rho, "A")),
}


def bootstrap_sigma(
    data: TomographySet | CountsTable,
    statistic: str | Callable,
    B: int = 500,
    seed: int = 0,
    warm_start: np.ndarray | None = None,
) -> float:
    """Poisson parametric bootstrap standard deviation of a statistic.

    Each replica redraws every count as Poisson(observed count). Replicas are
    drawn from one seeded generator in index order, so the result only
    depends on ``seed``. Tomography statistics accept a ``warm_start`` state
    for the per-replica reconstruction.
    """
    if B < 100:
        raise ValueError("need at least 100 bootstrap replicas")
    if data.counts.sum() <= 0:
        raise ValueError("all counts are zero")
    fn = STATISTICS[statistic] if isinstance(statistic, str) else statistic
    tomo = isinstance(data, TomographySet)
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(B):
        resampled = data.with_counts(rng.poisson(data.counts))
        if resampled.counts.sum() == 0:
            continue
        if tomo and warm_start is not None:
            values.append(fn(resampled, warm_start))
        else:
            values.append(fn(resampled))
    return float(np.std(values, ddof=1))


def fidelity_statistic(target: np.ndarray):
    """Bootstrap statistic: fidelity of the reconstruction to ``target``."""
    return _tomo_stat(lambda rho: fidelity(rho, target))
