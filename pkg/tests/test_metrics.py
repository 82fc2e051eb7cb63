import numpy as np
import pytest
import scipy.stats

from liouville_gf.backend import exact_ground_state, expectation
from liouville_gf.greens import ContinuedFraction, PoleResidueForm, frequency_grid, poles_residues, spectral_density
from liouville_gf.lattice import LatticeModel, build_hubbard, h0_matrix
from liouville_gf.metrics import (
    NormalizationError,
    convergence_series,
    galitskii_migdal,
    greens_matrix,
    line_fit,
    occupied_weights,
    wasserstein,
)
from liouville_gf.recursion import run_recursion


def delta(x):
    return PoleResidueForm([x], [1.0])


def random_form(rng, size=None):
    size = size or int(rng.integers(1, 8))
    w = rng.uniform(0.05, 1, size)
    return PoleResidueForm(rng.uniform(-5, 5, size), w / w.sum())


def test_wasserstein_examples():
    a = PoleResidueForm([-1.0, 0.5], [0.3, 0.7])
    assert wasserstein(a, a) == 0.0
    assert wasserstein(delta(-1.5), delta(2.0)) == pytest.approx(3.5)
    pair = PoleResidueForm([-2.0, 2.0], [0.5, 0.5])
    assert wasserstein(pair, delta(0.0)) == pytest.approx(2.0)


def test_wasserstein_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(30):
        a, b = random_form(rng), random_form(rng)
        ref = scipy.stats.wasserstein_distance(a.poles, b.poles, a.residues, b.residues)
        assert wasserstein(a, b) == pytest.approx(ref, abs=1e-12)


def test_metric_axioms_on_random_distributions():
    rng = np.random.default_rng(1)
    forms = [random_form(rng) for _ in range(100)]
    for i in range(100):
        a, b, c = forms[i], forms[(i + 1) % 100], forms[(i + 7) % 100]
        ab = wasserstein(a, b)
        assert ab >= 0
        assert ab == pytest.approx(wasserstein(b, a), abs=1e-12)
        assert wasserstein(a, c) <= ab + wasserstein(b, c) + 1e-12


def test_normalization_rules():
    assert wasserstein(PoleResidueForm([0.0], [1.03]), delta(1.0)) == pytest.approx(1.0)
    with pytest.raises(NormalizationError):
        wasserstein(PoleResidueForm([0.0], [0.9]), delta(1.0))
    # signed mode: equal total mass, no renormalization
    a = PoleResidueForm([-1.0, 1.0], [0.5, -0.5])
    b = PoleResidueForm([-1.0, 1.0], [0.25, -0.25])
    assert wasserstein(a, b, signed=True) == pytest.approx(0.5)
    with pytest.raises(NormalizationError):
        wasserstein(a, delta(0.0), signed=True)
    with pytest.raises(TypeError):
        wasserstein(a, [1.0])


def test_grid_mode_converges_to_discrete():
    a = PoleResidueForm([-2.5, -0.4, 1.1, 3.0], [0.1, 0.4, 0.3, 0.2])
    b = PoleResidueForm([-2.0, 0.3, 1.6], [0.3, 0.3, 0.4])
    discrete = wasserstein(a, b)
    assert discrete == pytest.approx(0.97)
    grid = frequency_grid(-30, 30, 0.002)
    values = [wasserstein(spectral_density(a, grid, eta), spectral_density(b, grid, eta)) for eta in (0.05, 0.02, 0.01, 0.005)]
    # Lorentzian smoothing only removes area where the CDF difference changes sign
    assert all(v < discrete for v in values)
    assert all(np.diff(values) > 0)
    assert discrete - values[-1] < 0.035
    with pytest.raises(ValueError):
        wasserstein(spectral_density(a, grid, 0.05), spectral_density(b, grid[::2], 0.05))


def test_grid_mode_eta_independent_for_translated_spectra():
    a = PoleResidueForm([-2.5, -0.4, 1.1, 3.0], [0.1, 0.4, 0.3, 0.2])
    b = PoleResidueForm(a.poles + 0.3, a.residues)
    grid = frequency_grid(-30, 30, 0.002)
    values = [wasserstein(spectral_density(a, grid, eta), spectral_density(b, grid, eta)) for eta in (0.05, 0.02, 0.01)]
    assert (max(values) - min(values)) / min(values) < 0.02
    assert values[-1] == pytest.approx(0.3, rel=0.01)


def test_occupied_weights_half_rule():
    np.testing.assert_array_equal(occupied_weights(np.array([-1.0, -1e-12, 0.0, 1e-12, 2.0])), [1, 0.5, 0.5, 0.5, 0])


def test_galitskii_migdal_atomic():
    model = LatticeModel(1, U=4.0, mu=2.0)
    H = build_hubbard(model)
    state, energy = exact_ground_state(H, model)
    outs = [run_recursion(model, H, seed, state) for seed in (0, 1)]
    G = greens_matrix(outs, model, 1, reflect=False, paramagnetic=False)
    np.testing.assert_allclose(G.element(0, 0, 0).poles, [-2.0])
    np.testing.assert_allclose(G.element(0, 0, 1).poles, [2.0])
    e_gm = galitskii_migdal(G, h0_matrix(model))
    assert abs(e_gm - (-2.0)) < 1e-9
    assert abs(e_gm - expectation(state, H).real) < 1e-6


def test_galitskii_migdal_free_chain():
    model = LatticeModel(4, t=1.0, U=0.0, mu=0.0)
    H = build_hubbard(model)
    state, energy = exact_ground_state(H, model)
    outs = [run_recursion(model, H, s, state, offdiag_targets=range(4)) for s in (0, 1)]
    G = greens_matrix(outs, model, 8)
    eps = np.linalg.eigvalsh(h0_matrix(model))
    e_gm = galitskii_migdal(G, h0_matrix(model))
    assert abs(e_gm - 2 * eps[eps < 0].sum()) < 1e-9
    assert abs(e_gm - energy) < 1e-6


def test_galitskii_migdal_missing_columns(hubbard4):
    out = hubbard4.run(0, k_max=4)
    G = greens_matrix([out], hubbard4.model, 4, reflect=False)
    with pytest.raises(KeyError):
        galitskii_migdal(G, h0_matrix(hubbard4.model))
    with pytest.raises(ValueError):
        galitskii_migdal(G, np.eye(3))


def test_galitskii_migdal_converged_hubbard(hubbard4):
    outs = [hubbard4.run(0), hubbard4.run(1)]
    G = greens_matrix(outs, hubbard4.model, 30)
    assert galitskii_migdal(G, h0_matrix(hubbard4.model)) == pytest.approx(-9.9531, abs=1e-3)


def test_convergence_series_records(hubbard4):
    outs = [hubbard4.run(0), hubbard4.run(1)]
    ref = hubbard4.lehmann[(0, 0)]
    series = convergence_series(outs, hubbard4.model, ref, hubbard4.energy)
    assert [r.k for r in series.records] == list(range(1, 33))
    assert all(r.wasserstein >= 0 for r in series.records)
    assert series.records[0].pauli_count == 2
    assert series.records[-1].wasserstein < 1e-10
    assert abs(series.records[-1].energy_gm - hubbard4.energy) < 1e-9
    assert series.exp_fit.slope < 0 and series.power_fit.count == 7


def test_convergence_against_itself_is_zero(hubbard4):
    out = hubbard4.run(0, k_max=8)
    for k in range(1, 9):
        own = poles_residues(ContinuedFraction.from_recursion(out, k))
        assert wasserstein(own, own) == 0.0
    series = convergence_series([out], hubbard4.model, None, 0.0, reflect=False)
    assert all(np.isnan(r.wasserstein) and np.isnan(r.energy_gm) for r in series.records)


def test_line_fit():
    fit = line_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert fit.slope == pytest.approx(2) and fit.intercept == pytest.approx(1) and fit.r_squared == pytest.approx(1)
    assert np.isnan(line_fit([1], [2]).slope)
