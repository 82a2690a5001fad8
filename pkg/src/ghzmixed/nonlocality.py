"""GHZ-argument analysis: predicted outcomes, local-realist bounds, Mermin statistics."""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .factory import rho_psi
from .measurement import (
    CountsTable,
    FractionStat,
    expectation_from_counts,
    fraction_predicted,
    outcome_label,
    outcome_parity,
)
from .pauli import ParadoxCertificate, PauliString
from .states import expectation

MERMIN_SETTINGS = ("XXXX", "XYYX", "YXYX", "YYXX")
MERMIN_SIGNS = (1, -1, -1, -1)
LR_BOUND = 2.0

_parity_cache: dict[str, int] = {}


def target_parity(setting: str, rho: np.ndarray | None = None) -> int:
    """Sign of the perfect correlation of ``rho`` (default rho_psi) at ``setting``."""
    if rho is None and setting in _parity_cache:
        return _parity_cache[setting]
    state = rho_psi() if rho is None else rho
    e = expectation(state, PauliString(0, setting))
    if abs(abs(e) - 1) > 1e-9:
        raise ValueError(f"{setting} is not a perfect correlation of the target state (<P> = {e:.3f})")
    par = 1 if e > 0 else -1
    if rho is None:
        _parity_cache[setting] = par
    return par


def predicted_outcome_set(setting: str, expected_parity: int | None = None) -> set[str]:
    """Outcome labels allowed by quantum mechanics for a perfectly correlated setting."""
    if expected_parity is None:
        if setting not in MERMIN_SETTINGS:
            raise ValueError(f"unknown setting {setting!r}; pass expected_parity explicitly")
        expected_parity = target_parity(setting)
    n = len(setting)
    return {
        outcome_label(setting, i) for i in range(2**n) if outcome_parity(i) == expected_parity
    }


def mermin_S(expectations) -> tuple[float, float]:
    """S = E(XXXX) - E(XYYX) - E(YXYX) - E(YYXX) with quadrature sigma.

    ``expectations`` holds four (value, sigma) pairs in MERMIN_SETTINGS order.
    """
    vals = np.array([e[0] for e in expectations], dtype=float)
    sig = np.array([e[1] for e in expectations], dtype=float)
    if vals.shape != (4,):
        raise ValueError("need exactly four expectations")
    return float(np.dot(MERMIN_SIGNS, vals)), float(np.sqrt(np.sum(sig**2)))


def _strategies(n_vars: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=n_vars)), dtype=int)


def _lr_outcomes() -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Deterministic +-1 values of each Mermin product for all 256 (X_j, Y_j) strategies."""
    strat = _strategies(8)
    xs, ys = strat[:, :4], strat[:, 4:]
    values = {}
    for setting in MERMIN_SETTINGS:
        cols = [xs[:, j] if b == "X" else ys[:, j] for j, b in enumerate(setting)]
        values[setting] = np.prod(cols, axis=0)
    return strat, values


def lr_S_values() -> np.ndarray:
    _, v = _lr_outcomes()
    return sum(sign * v[s] for sign, s in zip(MERMIN_SIGNS, MERMIN_SETTINGS))


def lr_enumerate_max_S() -> float:
    """Maximum of S over all deterministic local strategies.

    Mixed local models are convex combinations of these, so the maximum over
    deterministic strategies bounds every local-realist model.
    """
    return float(lr_S_values().max())


def lr_enumerate_S_range() -> tuple[float, float]:
    s = lr_S_values()
    return float(s.min()), float(s.max())


def lr_counting_bound(fractions) -> tuple[float, float]:
    """Largest XXXX predicted fraction a local model can build from the observed spurious events."""
    fractions = list(fractions)
    if len(fractions) != 3:
        raise ValueError("need the three XYYX, YXYX, YYXX fractions")
    bound = sum(1 - f.value for f in fractions)
    sigma = float(np.sqrt(sum(f.sigma**2 for f in fractions)))
    return float(bound), sigma


def verify_counting_bound() -> bool:
    """Every local strategy hitting a predicted XXXX outcome must be spurious somewhere else."""
    _, v = _lr_outcomes()
    hit = (v["XXXX"] == target_parity("XXXX")).astype(int)
    spurious = sum(
        (v[s] != target_parity(s)).astype(int) for s in MERMIN_SETTINGS[1:]
    )
    return bool(np.all(hit <= spurious))


def strategy_outcome(xs, ys, setting: str) -> str:
    """Outcome label produced by a deterministic strategy at a given setting."""
    bits = 0
    for j, b in enumerate(setting):
        v = xs[j] if b == "X" else ys[j]
        bits = (bits << 1) | (0 if v == 1 else 1)
    return outcome_label(setting, bits)


def significance(observed: FractionStat | tuple, bound: tuple) -> float:
    """(observed - bound) / sqrt(sigma_obs**2 + sigma_bound**2)."""
    if isinstance(observed, FractionStat):
        ov, os_ = observed.value, observed.sigma
    else:
        ov, os_ = observed
    bv, bs = bound
    combined = np.hypot(os_, bs)
    if combined <= 0:
        raise ValueError("combined sigma must be positive")
    return float((ov - bv) / combined)


def paradox_lr_contradiction(cert: ParadoxCertificate) -> bool:
    """True iff no local +-1 assignment can satisfy all certificate equations.

    Enumerates every assignment to the (qubit, observable) pairs that occur
    in the certificate, and requires that each gives a left-hand-side product
    of +1 against the quantum eigenvalue product of -1.
    """
    if not cert.strings or any(s.n != len(cert.support) for s in cert.strings):
        raise ValueError("malformed certificate")
    variables = sorted(cert.observable_counts())
    index = {v: k for k, v in enumerate(variables)}
    assign = _strategies(len(variables))
    lhs = []
    for s in cert.strings:
        cols = [index[(q, op)] for q, op in zip(cert.support, s.ops) if op != "I"]
        lhs.append(np.prod(assign[:, cols], axis=1) if cols else np.ones(len(assign), dtype=int))
    lhs = np.array(lhs)
    signs = np.array(cert.signs)[:, None]
    if int(np.prod(cert.signs)) != -1:
        return False
    if not np.all(np.prod(lhs, axis=0) == 1):
        return False
    satisfied_all = np.all(lhs == signs, axis=0)
    return not bool(np.any(satisfied_all))


# --- witnesses from local settings ---------------------------------------

WITNESS_SETTINGS = ("ZZZX",) + MERMIN_SETTINGS


def witness_from_counts(tables: dict[str, CountsTable], branch: str) -> float:
    """Three-photon GHZ witness with photon 4 found in D (GHZ+) or A (GHZ-).

    Uses the local decomposition
    |GHZ+-><GHZ+-| = (1 + ZZI + ZIZ + IZZ)/8 +- (XXX - XYY - YXY - YYX)/8
    evaluated on the events whose fourth photon gave the requested outcome.
    """
    bit = {"D": 0, "A": 1}[branch]
    sign = 1 if branch == "D" else -1

    def conditional(setting):
        t = tables[setting]
        idx = np.arange(16)
        sel = (idx & 1) == bit
        c = t.counts[sel]
        if c.sum() == 0:
            raise ValueError(f"no events at {setting} with photon 4 in {branch}")
        return idx[sel] >> 1, c

    outs, c = conditional("ZZZX")
    same = (outs == 0) | (outs == 7)
    p_same = c[same].sum() / c.sum()
    corr = 0.0
    for setting, s in zip(MERMIN_SETTINGS, MERMIN_SIGNS):
        outs, c = conditional(setting)
        par = outcome_parity(outs)
        corr += s * np.dot(par, c) / c.sum()
    fid = 0.5 * p_same + sign * corr / 8
    return float(0.5 - fid)


def bootstrap_tables(tables: dict[str, CountsTable], fn, B: int = 500, seed: int = 0) -> float:
    """Poisson bootstrap sigma of ``fn(tables)`` over a dict of counts tables."""
    if B < 100:
        raise ValueError("need at least 100 bootstrap replicas")
    keys = sorted(tables)
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(B):
        rep = {k: tables[k].with_counts(rng.poisson(tables[k].counts)) for k in keys}
        vals.append(fn(rep))
    return float(np.std(vals, ddof=1))


# --- report ----------------------------------------------------------------


@dataclass
class NonlocalityReport:
    fractions: dict
    expectations: dict
    S: float
    S_sigma: float
    lr_bound_fraction: float
    lr_bound_sigma: float
    significance_sigma: float
    mermin_significance_sigma: float
    witnesses: dict = field(default_factory=dict)

    @property
    def violates(self) -> bool:
        return self.S > LR_BOUND

    def to_dict(self) -> dict:
        return {
            "fractions": {k: {"value": f.value, "sigma": f.sigma, "n_events": f.n_events}
                          for k, f in self.fractions.items()},
            "expectations": {k: {"value": v, "sigma": s} for k, (v, s) in self.expectations.items()},
            "S": {"value": self.S, "sigma": self.S_sigma},
            "lr_bound_fraction": {"value": self.lr_bound_fraction, "sigma": self.lr_bound_sigma},
            "significance_sigma": self.significance_sigma,
            "mermin_significance_sigma": self.mermin_significance_sigma,
            "witnesses": self.witnesses,
            "violation": self.violates,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "value", "sigma"])
        for k, f in self.fractions.items():
            w.writerow([f"fraction_{k}", repr(f.value), repr(f.sigma)])
        for k, (v, s) in self.expectations.items():
            w.writerow([f"expectation_{k}", repr(v), repr(s)])
        w.writerow(["S", repr(self.S), repr(self.S_sigma)])
        w.writerow(["lr_bound_fraction", repr(self.lr_bound_fraction), repr(self.lr_bound_sigma)])
        w.writerow(["significance_counting", repr(self.significance_sigma), ""])
        w.writerow(["significance_mermin", repr(self.mermin_significance_sigma), ""])
        for k, d in sorted(self.witnesses.items()):
            w.writerow([f"witness_{k}", repr(d["value"]), repr(d["sigma"])])
        return buf.getvalue()


def analyze(tables: dict[str, CountsTable]) -> NonlocalityReport:
    missing = [s for s in MERMIN_SETTINGS if s not in tables]
    if missing:
        raise ValueError(f"missing settings: {', '.join(missing)}")
    for s in MERMIN_SETTINGS:
        if tables[s].total <= 0:
            raise ValueError(f"setting {s} has zero total counts")
    fractions = {s: fraction_predicted(tables[s], target_parity(s)) for s in MERMIN_SETTINGS}
    expectations = {s: expectation_from_counts(tables[s]) for s in MERMIN_SETTINGS}
    S, S_sigma = mermin_S([expectations[s] for s in MERMIN_SETTINGS])
    bound = lr_counting_bound([fractions[s] for s in MERMIN_SETTINGS[1:]])
    obs = fractions["XXXX"]
    try:
        sig = significance(obs, bound)
    except ValueError:
        sig = float("inf") if obs.value > bound[0] else 0.0
    mermin_sig = (S - LR_BOUND) / S_sigma if S_sigma > 0 else (
        float("inf") if S > LR_BOUND else 0.0)
    return NonlocalityReport(
        fractions, expectations, S, S_sigma, bound[0], bound[1], sig, float(mermin_sig)
    )


def fraction_table_csv(tables: dict[str, CountsTable]) -> str:
    """Per-outcome fractions with binomial sigmas (plot data for outcome histograms)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setting", "outcome", "fraction", "sigma", "predicted"])
    for s in sorted(tables):
        t = tables[s]
        predicted = predicted_outcome_set(s) if s in MERMIN_SETTINGS else set()
        for lab, c in zip(t.labels(), t.counts):
            f = FractionStat.binomial(int(c), t.total)
            w.writerow([s, lab, repr(f.value), repr(f.sigma), int(lab in predicted)])
    return buf.getvalue()
