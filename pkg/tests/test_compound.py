"""Compound-Poisson forward map, diagnostics, and weight estimation."""

import math

import numpy as np
import pytest

from levy_spectra import (
    BlockScheme,
    DegenerateInput,
    EmpiricalPMF,
    EnergyWindow,
    LatticeBox,
    LevyWeights,
    ModelSpec,
    UniformLaw,
    Variant,
    ZeroMean,
    block_sum_estimator,
    char_fn_distance,
    characteristic_fn,
    default_t_grid,
    empirical_characteristic_fn,
    fit_report,
    fit_weights,
    panjer_pmf,
    poisson_index,
    run_eta_blocks,
)


def sample_pmf(weights, r, seed, n_max=60):
    """Histogram of r draws from the compound law with the given weights."""
    probs = panjer_pmf(LevyWeights(weights), n_max)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    values = rng.choice(len(probs), size=r, p=probs)
    return EmpiricalPMF.from_values(values)


def convolution_pmf(weights, n_max, n_terms=80):
    """Direct Poisson-sum-of-jumps evaluation, independent of the recursion."""
    lam = float(np.sum(weights))
    jump = np.zeros(n_max + 1)
    if lam > 0:
        jump[1 : len(weights) + 1] = np.asarray(weights) / lam
    else:
        jump[0] = 1.0
    out = np.zeros(n_max + 1)
    power = np.zeros(n_max + 1)
    power[0] = 1.0  # jump^{*0}
    for n in range(n_terms + 1):
        out += math.exp(-lam) * lam**n / math.factorial(n) * power
        power = np.convolve(power, jump)[: n_max + 1]
    return out


# ---------------------------------------------------------------------------
# weights and forward map


def test_levy_weights_invariants():
    w = LevyWeights((0.5, 0.25))
    assert w.support_cap == 2
    assert w.intensity == 0.75
    assert w.mean == 0.5 + 2 * 0.25
    with pytest.raises(ValueError):
        LevyWeights(())
    with pytest.raises(ValueError):
        LevyWeights((-0.1,))
    with pytest.raises(ValueError):
        LevyWeights((math.inf,))


def test_panjer_unit_jumps_is_poisson():
    lam = 1.3
    pmf = panjer_pmf(LevyWeights((lam,)), 12)
    for n in range(13):
        assert pmf[n] == pytest.approx(math.exp(-lam) * lam**n / math.factorial(n))


def test_panjer_pure_double_jumps():
    mu = 0.7
    pmf = panjer_pmf(LevyWeights((0.0, mu)), 6)
    for k in range(4):
        assert pmf[2 * k] == pytest.approx(math.exp(-mu) * mu**k / math.factorial(k))
    assert pmf[1] == pmf[3] == pmf[5] == 0.0


def test_panjer_zero_weights_point_mass():
    pmf = panjer_pmf(LevyWeights((0.0, 0.0)), 5)
    assert pmf[0] == 1.0
    assert np.all(pmf[1:] == 0.0)


def test_panjer_needs_room_for_the_support():
    with pytest.raises(ValueError):
        panjer_pmf(LevyWeights((0.1, 0.1, 0.1)), 2)


def test_panjer_is_a_probability_vector_matching_convolution():
    rng = np.random.default_rng(44)
    for _ in range(10):
        weights = tuple(rng.uniform(0.0, 0.7, size=int(rng.integers(1, 5))))
        pmf = panjer_pmf(LevyWeights(weights), 60)
        assert np.all(pmf >= 0.0)
        assert abs(pmf.sum() - 1.0) < 1e-9
        assert np.allclose(pmf, convolution_pmf(weights, 60), atol=1e-12)


def test_panjer_mean_identity():
    w = LevyWeights((0.4, 0.3, 0.2))
    pmf = panjer_pmf(w, 80)
    mean = float(np.dot(np.arange(81), pmf))
    assert abs(mean - w.mean) < 1e-8


# ---------------------------------------------------------------------------
# characteristic functions


def test_characteristic_fn_basics():
    w = LevyWeights((0.5, 0.5))
    grid = default_t_grid()
    assert len(grid) == 64
    assert grid[0] == -math.pi and grid[-1] == math.pi
    vals = characteristic_fn(w, np.array([0.0]))
    assert vals[0] == pytest.approx(1.0)
    # |phi| <= 1 everywhere
    assert np.all(np.abs(characteristic_fn(w, grid)) <= 1.0 + 1e-12)


def test_empirical_char_fn_of_point_mass_at_zero():
    pmf = EmpiricalPMF({0: 10}, 10)
    grid = default_t_grid()
    assert np.allclose(empirical_characteristic_fn(pmf, grid), 1.0)
    assert char_fn_distance(pmf, LevyWeights((0.0,))) == 0.0


def test_char_fn_distance_self_consistency():
    weights = (0.3, 0.9)
    pmf = sample_pmf(weights, 10**5, seed=51)
    assert char_fn_distance(pmf, LevyWeights(weights)) <= 0.02


def test_char_fn_distance_separates_poisson_from_double_jumps():
    pmf = sample_pmf((1.0,), 10**5, seed=52)  # Poisson(1) samples
    assert char_fn_distance(pmf, LevyWeights((0.0, 1.0))) >= 0.3


def test_char_fn_distance_rejects_empty_grid():
    pmf = EmpiricalPMF({0: 5}, 5)
    with pytest.raises(ValueError):
        char_fn_distance(pmf, LevyWeights((0.0,)), t_grid=[])


# ---------------------------------------------------------------------------
# dispersion


def test_poisson_index_of_poisson_samples():
    pmf = sample_pmf((2.0,), 10**5, seed=53)
    assert abs(poisson_index(pmf) - 1.0) <= 0.03


def test_poisson_index_of_doubled_poisson():
    rng = np.random.default_rng(54)
    pmf = EmpiricalPMF.from_values(2 * rng.poisson(1.0, size=10**5))
    assert abs(poisson_index(pmf) - 2.0) <= 0.05


def test_poisson_index_degenerate_cases():
    assert poisson_index(EmpiricalPMF({3: 100}, 100)) == 0.0
    with pytest.raises(ZeroMean):
        poisson_index(EmpiricalPMF({0: 100}, 100))
    with pytest.raises(ValueError):
        poisson_index(EmpiricalPMF({1: 1}, 1))


# ---------------------------------------------------------------------------
# weight fitting


def test_fit_recovers_doubled_poisson():
    rng = np.random.default_rng(61)
    pmf = EmpiricalPMF.from_values(2 * rng.poisson(1.0, size=10**5))
    w = fit_weights(pmf, 2)
    assert abs(w.weights[1] - 1.0) <= 0.03
    assert w.weights[0] <= 0.02


def test_fit_recovers_plain_poisson_with_slack_support():
    pmf = sample_pmf((0.5,), 10**5, seed=62)
    w = fit_weights(pmf, 2)
    assert abs(w.weights[0] - 0.5) <= 0.02
    assert w.weights[1] <= 0.01


def test_fit_point_mass_returns_zero_weights():
    pmf = EmpiricalPMF({0: 5000}, 5000)
    assert fit_weights(pmf, 3).weights == (0.0, 0.0, 0.0)


def test_fit_requires_enough_realizations():
    with pytest.raises(DegenerateInput):
        fit_weights(EmpiricalPMF({0: 500, 1: 499}, 999), 1)


def test_fit_is_deterministic():
    pmf = sample_pmf((0.4, 0.6), 20000, seed=63)
    assert fit_weights(pmf, 2) == fit_weights(pmf, 2)


# ---------------------------------------------------------------------------
# block-sum estimator


def test_block_sum_on_empty_window_is_zero():
    empty = [EmpiricalPMF({0: 50}, 50) for _ in range(4)]
    est = block_sum_estimator(empty, 2)
    assert est.weights.weights == (0.0, 0.0)
    assert est.tail_mass == 0.0


def test_block_sum_single_block_is_the_pmf():
    pmf = EmpiricalPMF({0: 6, 1: 3, 2: 1}, 10)
    est = block_sum_estimator([pmf], 2)
    assert est.weights.weights == (0.3, 0.1)
    assert est.tail_mass == 0.0
    deep = EmpiricalPMF({0: 5, 3: 5}, 10)
    assert block_sum_estimator([deep], 2).tail_mass == 0.5


def _diag2_block_campaign(realizations, seed):
    spec = ModelSpec(Variant.DIAGONAL, rank=2, hopping=0.0, disorder=UniformLaw(0.0, 1.0))
    box = LatticeBox(1, 100)
    window = EnergyWindow.for_box(0.5, (-0.5, 0.5), box)
    scheme = BlockScheme.tile(box, 1)
    run = run_eta_blocks(spec, box, scheme, window, realizations, seed)
    return spec, box, window, run


def test_block_sum_closed_form_for_aligned_zero_hopping_model():
    # every site is its own coupling: lambda_2 = sum of per-block window
    # probabilities = |I| * density = 1; odd counts are impossible
    _, _, _, run = _diag2_block_campaign(4000, seed=71)
    est = block_sum_estimator(run.per_block, 2)
    assert est.weights.weights[0] == 0.0
    assert abs(est.weights.weights[1] - 1.0) <= 0.08
    assert est.tail_mass <= 0.01


def test_block_sum_and_direct_fit_agree_on_zero_hopping_model():
    spec, box, window, run = _diag2_block_campaign(4000, seed=72)
    est = block_sum_estimator(run.per_block, 2)
    direct = fit_weights(run.total, 2)
    for a, b in zip(est.weights.weights, direct.weights):
        assert abs(a - b) <= 0.1


def test_fit_report_shape():
    pmf = sample_pmf((0.8,), 20000, seed=73)
    w = fit_weights(pmf, 1)
    report = fit_report(pmf, w, tail_mass=0.004)
    assert set(report) == {
        "weights", "intensity", "poisson_index", "char_fn_distance", "tail_mass",
    }
    assert report["tail_mass"] == 0.004
    zero = EmpiricalPMF({0: 10}, 10)
    assert fit_report(zero, LevyWeights((0.0,)))["poisson_index"] is None
