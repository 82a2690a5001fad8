import numpy as np
import pytest

from conftest import random_density
from ghzmixed.factory import POLARIZATION, NoiseSpec, generation_pipeline, polarization, rho_psi
from ghzmixed.measurement import (
    CountsTable,
    FormatError,
    FractionStat,
    derive_seed,
    expectation_from_counts,
    fraction_predicted,
    outcome_label,
    outcome_probabilities,
    parse_outcome,
    projector_probability,
    read_counts_csv,
    read_projector_csv,
    sample_counts,
    simulate_setting,
    write_counts_csv,
    write_projector_csv,
)
from ghzmixed.pauli import PauliString
from ghzmixed.states import expectation, maximally_mixed, partial_trace

EIG = {"X": ("D", "A"), "Y": ("R", "L"), "Z": ("H", "V")}


def probabilities_oracle(rho, setting):
    """Brute force: sum over product eigenkets."""
    n = len(setting)
    out = []
    for i in range(2**n):
        labels = "".join(EIG[b][(i >> (n - 1 - k)) & 1] for k, b in enumerate(setting))
        v = polarization(labels)
        out.append(float(np.real(np.vdot(v, rho @ v))))
    return np.array(out)


def parity(i):
    return (-1) ** bin(i).count("1")


def test_outcome_probabilities_examples():
    rp = rho_psi()
    p = outcome_probabilities(rp, "XXXX")
    for i in range(16):
        assert p[i] == pytest.approx(1 / 8 if parity(i) == 1 else 0, abs=1e-12)
    p = outcome_probabilities(rp, "YYXX")
    for i in range(16):
        assert p[i] == pytest.approx(1 / 8 if parity(i) == -1 else 0, abs=1e-12)
    assert np.allclose(outcome_probabilities(maximally_mixed(4), "XYZX"), 1 / 16)
    with pytest.raises(ValueError):
        outcome_probabilities(rp, "XXX")


def test_outcome_probabilities_against_oracle(rng):
    for _ in range(100):
        n = int(rng.integers(1, 4))
        rho = random_density(n, rng)
        setting = "".join("XYZ"[k] for k in rng.integers(0, 3, size=n))
        p = outcome_probabilities(rho, setting)
        assert np.allclose(p, probabilities_oracle(rho, setting), atol=1e-12)
        assert p.sum() == pytest.approx(1, abs=1e-12)


def test_parity_sum_equals_pauli_expectation(rng):
    for _ in range(1000):
        rho = random_density(2, rng)
        setting = "".join("XYZ"[k] for k in rng.integers(0, 3, size=2))
        p = outcome_probabilities(rho, setting)
        par = np.array([parity(i) for i in range(4)])
        assert par @ p == pytest.approx(expectation(rho, PauliString(0, setting)), abs=1e-10)


def test_marginal_consistency(rng):
    for _ in range(100):
        rho = random_density(3, rng)
        setting = "".join("XYZ"[k] for k in rng.integers(0, 3, size=3))
        p = outcome_probabilities(rho, setting).reshape(2, 4).sum(axis=0)
        assert np.allclose(p, outcome_probabilities(partial_trace(rho, [2, 3]), setting[1:]), atol=1e-12)


def test_projector_probability_examples():
    rp = rho_psi()
    assert projector_probability(rp, "VVVD") == pytest.approx(0.25)
    assert projector_probability(rp, "VVVA") == pytest.approx(0.25)
    assert projector_probability(rp, "HVVD") == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        projector_probability(rp, "VVV")


def test_projector_matches_outcome_term(rng):
    for _ in range(200):
        rho = random_density(3, rng)
        setting = "".join("XYZ"[k] for k in rng.integers(0, 3, size=3))
        i = int(rng.integers(8))
        label = outcome_label(setting, i)
        assert parse_outcome(setting, label) == i
        assert projector_probability(rho, label) == pytest.approx(outcome_probabilities(rho, setting)[i], abs=1e-12)


def test_completeness_of_product_basis(rng):
    rho = random_density(2, rng)
    total = sum(projector_probability(rho, a + b) for a in "DA" for b in "HV")
    assert total == pytest.approx(1)


def test_sample_counts_deterministic_distribution():
    probs = np.zeros(16)
    probs[5] = 1
    t = sample_counts(probs, 100, 1)
    assert t.counts.sum() == t.counts[5] > 0


def test_sample_counts_seed_determinism():
    probs = np.full(16, 1 / 16)
    a, b = sample_counts(probs, 1600, 42), sample_counts(probs, 1600, 42)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, sample_counts(probs, 1600, 43).counts)


def test_sample_counts_poisson_law():
    probs = np.full(16, 1 / 16)
    allc = np.array([sample_counts(probs, 1600, s).counts for s in range(1000)])
    assert np.all(np.abs(allc - 100) <= 5 * 10 * 1.6)  # 5 sigma with a generous look-elsewhere margin
    mean = allc.mean(axis=0)
    assert np.all(np.abs(mean - 100) < 5 * 10 / np.sqrt(1000))


def test_sample_counts_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_counts(np.array([0.5, 0.6]), 10, 0)
    with pytest.raises(ValueError):
        sample_counts(np.array([0.5, 0.5]), 0, 0)
    with pytest.raises(ValueError):
        sample_counts(np.array([1 / 3] * 3), 10, 0)


def test_fraction_predicted_examples():
    t = CountsTable("XYYX", np.round(outcome_probabilities(rho_psi(), "XYYX") * 1000).astype(int))
    assert fraction_predicted(t, -1).value == pytest.approx(1.0)
    p = 0.625
    exact = outcome_probabilities(generation_pipeline(NoiseSpec(p)), "XYYX")
    t = CountsTable("XYYX", np.round(exact * 1_000_000).astype(int))
    assert fraction_predicted(t, -1).value == pytest.approx(p + (1 - p) / 2, abs=1e-5)
    with pytest.raises(ValueError):
        fraction_predicted(CountsTable("XX", [0, 0, 0, 0]), 1)


def test_fraction_sigma_binomial():
    f = FractionStat.binomial(1539, 1900)
    assert f.sigma == pytest.approx(np.sqrt(f.value * (1 - f.value) / 1900))
    assert f.sigma == pytest.approx(0.009, abs=0.0005)


def test_expectation_from_counts():
    t = CountsTable("XX", [10, 0, 0, 5])
    assert expectation_from_counts(t) == (1.0, 0.0)
    for s, sign in (("XXXX", 1), ("YYXX", -1)):
        exact = outcome_probabilities(generation_pipeline(NoiseSpec(0.625)), s)
        t = CountsTable(s, np.round(exact * 1_000_000).astype(int))
        v, sigma = expectation_from_counts(t)
        assert v == pytest.approx(sign * 0.625, abs=1e-5)
        assert sigma == pytest.approx(2 * fraction_predicted(t, 1).sigma)


def test_counts_table_validation():
    with pytest.raises(ValueError):
        CountsTable("XX", [1, 2, 3])
    with pytest.raises(ValueError):
        CountsTable("XX", [1, 2, 3, -1])
    with pytest.raises(ValueError):
        CountsTable("XQ", [1, 2, 3, 4])


def test_derived_seeds_differ_per_setting():
    assert derive_seed(7, "XXXX") != derive_seed(7, "XYYX")
    assert derive_seed(7, "XXXX") == derive_seed(7, "XXXX")


def test_counts_csv_roundtrip():
    rho = generation_pipeline(NoiseSpec(0.625))
    tables = [simulate_setting(rho, s, 1900, 5) for s in ("XXXX", "XYYX")]
    text = write_counts_csv(tables)
    assert text.splitlines()[0] == "setting,outcome,count,duration_s"
    back = read_counts_csv(text)
    for t in tables:
        assert np.array_equal(back[t.setting].counts, t.counts)


def test_counts_csv_rejections():
    good = write_counts_csv([CountsTable("XX", [1, 2, 3, 4])])
    lines = good.splitlines()
    bad = "\n".join(lines[:2] + ["XX,DA,-3,60.0"] + lines[3:])
    with pytest.raises(FormatError, match="row 3"):
        read_counts_csv(bad)
    with pytest.raises(FormatError, match="row 2"):
        read_counts_csv("\n".join([lines[0], "XX,DR,1,60.0"] + lines[2:]))
    with pytest.raises(FormatError, match="row 1"):
        read_counts_csv("a,b,c\n")
    with pytest.raises(FormatError):
        read_counts_csv("\n".join(lines[:-1]))


def test_projector_csv_roundtrip():
    text = write_projector_csv(["HH", "HV"], np.array([3, 4]), 60.0)
    labels, counts, dur = read_projector_csv(text)
    assert labels == ["HH", "HV"] and counts.tolist() == [3, 4] and dur == 60.0
    with pytest.raises(FormatError, match="row 2"):
        read_projector_csv("projector,count,duration_s\nHQ,1,60\n")


def test_label_conventions():
    assert outcome_label("XYYX", 0b0100) == "DLRD"
    assert outcome_label("ZZ", 3) == "VV"
    for lab, vec in POLARIZATION.items():
        assert np.vdot(vec, vec).real == pytest.approx(1)
