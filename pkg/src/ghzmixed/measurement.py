"""Polarization measurements: outcome distributions, Poisson counts, statistics.

Outcomes are indexed by bit patterns with qubit 1 as the most significant
bit; bit 0 is the +1 eigenvalue (D, R or H) and bit 1 the -1 eigenvalue
(A, L or V).
"""
from __future__ import annotations

import csv
import io
import zlib
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .factory import BASIS_LABELS, LABEL_BASIS, POLARIZATION, basis_pair, polarization
from .states import num_qubits, tensor


def check_setting(setting: str, n: int | None = None) -> str:
    setting = setting.strip().upper()
    if not setting or set(setting) - set("XYZ"):
        raise ValueError(f"setting {setting!r} must be a string over X, Y, Z")
    if n is not None and len(setting) != n:
        raise ValueError(f"setting {setting!r} does not match {n} qubits")
    return setting


def outcome_parity(index: int | np.ndarray):
    """(-1)**(number of -1 outcomes) for an outcome index."""
    bits = np.asarray(index)
    pop = np.zeros_like(bits)
    b = bits.copy()
    while np.any(b):
        pop += b & 1
        b = b >> 1
    out = np.where(pop % 2 == 0, 1, -1)
    return int(out) if out.ndim == 0 else out


def outcome_label(setting: str, index: int) -> str:
    n = len(setting)
    return "".join(
        BASIS_LABELS[b][(index >> (n - 1 - k)) & 1] for k, b in enumerate(setting)
    )


def parse_outcome(setting: str, labels: str) -> int:
    if len(labels) != len(setting):
        raise ValueError(f"outcome {labels!r} does not match setting {setting!r}")
    index = 0
    for b, lab in zip(setting, labels):
        basis, bit = LABEL_BASIS.get(lab, (None, None))
        if basis != b:
            raise ValueError(f"label {lab!r} is not an outcome of a {b} measurement")
        index = (index << 1) | bit
    return index


def _basis_change(setting: str) -> np.ndarray:
    cols = []
    for b in setting:
        plus, minus = basis_pair(b)
        cols.append(np.column_stack([plus, minus]))
    return tensor(*cols)


def outcome_probabilities(rho: np.ndarray, setting: str) -> np.ndarray:
    """Joint outcome distribution for measuring each qubit in its basis."""
    n = num_qubits(rho)
    setting = check_setting(setting, n)
    u = _basis_change(setting)
    probs = np.real(np.einsum("ij,jk,ki->i", u.conj().T, rho, u))
    return np.clip(probs, 0, None)


def projector_probability(rho: np.ndarray, labels: str) -> float:
    n = num_qubits(rho)
    if len(labels) != n:
        raise ValueError(f"projector {labels!r} does not match {n} qubits")
    v = polarization(labels)
    return float(max(np.real(np.vdot(v, rho @ v)), 0.0))


def derive_seed(seed: int, key: str) -> int:
    """Sub-seed for one setting: seed XOR crc32(setting)."""
    return (int(seed) ^ zlib.crc32(key.encode())) & 0xFFFFFFFF


@dataclass
class CountsTable:
    setting: str
    counts: np.ndarray
    duration_s: float = 60.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.setting = check_setting(self.setting)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (2 ** len(self.setting),):
            raise ValueError(
                f"{self.counts.size} counts for setting {self.setting} "
                f"(expected {2 ** len(self.setting)})"
            )
        if np.any(self.counts < 0):
            raise ValueError("negative counts")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def labels(self) -> list[str]:
        return [outcome_label(self.setting, i) for i in range(self.counts.size)]

    def with_counts(self, counts: np.ndarray) -> "CountsTable":
        return CountsTable(self.setting, counts, self.duration_s, dict(self.meta))


def sample_counts(
    probs: np.ndarray,
    expected_total: float,
    rng_seed: int,
    setting: str | None = None,
    duration_s: float = 60.0,
) -> CountsTable:
    """Independent Poisson counts with means ``expected_total * probs``."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-9:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    if expected_total <= 0:
        raise ValueError("expected_total must be positive")
    n = int(round(np.log2(probs.size)))
    if 2**n != probs.size:
        raise ValueError("distribution length is not a power of two")
    rng = np.random.default_rng(rng_seed)
    counts = rng.poisson(expected_total * probs)
    return CountsTable(
        setting or "Z" * n,
        counts,
        duration_s,
        {"seed": int(rng_seed), "expected_total": float(expected_total)},
    )


@dataclass(frozen=True)
class FractionStat:
    value: float
    sigma: float
    n_events: int

    @classmethod
    def binomial(cls, k: int, n: int) -> "FractionStat":
        if n <= 0:
            raise ValueError("no events")
        f = k / n
        return cls(f, float(np.sqrt(f * (1 - f) / n)), int(n))


def fraction_predicted(t: CountsTable, expected_parity: int) -> FractionStat:
    """Fraction of events whose outcome parity equals ``expected_parity``."""
    if expected_parity not in (1, -1):
        raise ValueError("expected_parity must be +1 or -1")
    if t.total <= 0:
        raise ValueError(f"empty counts table for {t.setting}")
    par = outcome_parity(np.arange(t.counts.size))
    k = int(t.counts[par == expected_parity].sum())
    return FractionStat.binomial(k, t.total)


def expectation_from_counts(t: CountsTable) -> tuple[float, float]:
    """Correlation <P> = 2f - 1 with f the +1-parity fraction; sigma = 2 sigma_f."""
    f = fraction_predicted(t, +1)
    return 2 * f.value - 1, 2 * f.sigma


def simulate_setting(
    rho: np.ndarray, setting: str, expected_total: float, seed: int, duration_s: float = 60.0
) -> CountsTable:
    probs = outcome_probabilities(rho, setting)
    probs = probs / probs.sum()
    t = sample_counts(probs, expected_total, derive_seed(seed, setting), setting, duration_s)
    t.meta["base_seed"] = int(seed)
    return t


# --- CSV interchange -------------------------------------------------------

COUNTS_HEADER = ["setting", "outcome", "count", "duration_s"]
PROJECTOR_HEADER = ["projector", "count", "duration_s"]


def write_counts_csv(tables: Iterable[CountsTable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNTS_HEADER)
    for t in tables:
        for lab, c in zip(t.labels(), t.counts):
            w.writerow([t.setting, lab, int(c), repr(float(t.duration_s))])
    return buf.getvalue()


class FormatError(ValueError):
    """Malformed interchange file; message names the offending row."""


def _int_count(text: str, row: int) -> int:
    try:
        c = int(text)
    except ValueError:
        raise FormatError(f"row {row}: count {text!r} is not an integer") from None
    if c < 0:
        raise FormatError(f"row {row}: negative count {c}")
    return c


def read_counts_csv(text: str) -> dict[str, CountsTable]:
    """Parse a counts CSV into one table per setting; rows may come in any order."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != COUNTS_HEADER:
        raise FormatError(f"row 1: expected header {','.join(COUNTS_HEADER)}")
    data: dict[str, dict[int, int]] = {}
    durations: dict[str, float] = {}
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise FormatError(f"row {row_no}: expected 4 fields, got {len(row)}")
        setting, outcome, count, dur = (c.strip() for c in row)
        try:
            setting = check_setting(setting)
            idx = parse_outcome(setting, outcome)
            duration = float(dur)
        except ValueError as exc:
            raise FormatError(f"row {row_no}: {exc}") from None
        c = _int_count(count, row_no)
        slot = data.setdefault(setting, {})
        if idx in slot:
            raise FormatError(f"row {row_no}: duplicate outcome {outcome} for {setting}")
        slot[idx] = c
        durations[setting] = duration
    tables = {}
    for setting, slot in data.items():
        counts = np.zeros(2 ** len(setting), dtype=np.int64)
        for idx, c in slot.items():
            counts[idx] = c
        if len(slot) != counts.size:
            raise FormatError(f"setting {setting}: {len(slot)} of {counts.size} outcomes present")
        tables[setting] = CountsTable(setting, counts, durations[setting])
    return tables


def write_projector_csv(projectors: list[str], counts: np.ndarray, duration_s: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROJECTOR_HEADER)
    for p, c in zip(projectors, counts):
        w.writerow([p, int(c), repr(float(duration_s))])
    return buf.getvalue()


def read_projector_csv(text: str) -> tuple[list[str], np.ndarray, float]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != PROJECTOR_HEADER:
        raise FormatError(f"row 1: expected header {','.join(PROJECTOR_HEADER)}")
    projectors, counts, duration = [], [], None
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise FormatError(f"row {row_no}: expected 3 fields, got {len(row)}")
        label, count, dur = (c.strip() for c in row)
        if not label or set(label) - set(POLARIZATION):
            raise FormatError(f"row {row_no}: bad projector {label!r}")
        try:
            d = float(dur)
        except ValueError:
            raise FormatError(f"row {row_no}: bad duration {dur!r}") from None
        if duration is not None and d != duration:
            raise FormatError(f"row {row_no}: duration differs from earlier rows")
        duration = d
        projectors.append(label)
        counts.append(_int_count(count, row_no))
    if not projectors:
        raise FormatError("no projector rows")
    return projectors, np.array(counts, dtype=np.int64), float(duration)
