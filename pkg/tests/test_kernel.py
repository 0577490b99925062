import math

import numpy as np
import pytest
from scipy import integrate

from viscowave.exceptions import ConfigError, LengthMismatch, NonFinite, OutOfRange
from viscowave.kernel import (KernelSpec, g1_transform, kernel_eval, kernel_integral,
                              theory_constant_C2T, validate_hypotheses)

REF_KERNEL = KernelSpec.exponential(0.5, 1.0)


def test_kernel_eval_exponential():
    assert kernel_eval(REF_KERNEL, 0.0) == 0.5
    assert kernel_eval(REF_KERNEL, math.log(2)) == pytest.approx(0.25, rel=1e-15)


def test_kernel_eval_tabulated_constant():
    assert kernel_eval(KernelSpec.tabulated(1.0, [3.0, 3.0]), 0.5) == 3.0


def test_kernel_eval_tabulated_interpolates_linearly():
    spec = KernelSpec.tabulated(0.5, [2.0, 1.0, 0.0])
    np.testing.assert_allclose(kernel_eval(spec, [0.25, 0.75, 1.0]), [1.5, 0.5, 0.0])


def test_kernel_eval_errors():
    with pytest.raises(OutOfRange):
        kernel_eval(KernelSpec.tabulated(1.0, [3.0, 3.0]), 1.5)
    with pytest.raises(OutOfRange):
        kernel_eval(REF_KERNEL, -0.1)
    with pytest.raises(NonFinite):
        kernel_eval(REF_KERNEL, float("nan"))


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)])
def test_exponential_requires_positive_parameters(a, b):
    with pytest.raises(ConfigError):
        KernelSpec.exponential(a, b)


def test_tabulated_invariants():
    with pytest.raises(ConfigError):
        KernelSpec.tabulated(0.1, [1.0])
    with pytest.raises(ConfigError):
        KernelSpec.tabulated(0.0, [1.0, 1.0])
    with pytest.raises(NonFinite):
        KernelSpec.tabulated(0.1, [1.0, float("inf")])


def test_hypotheses_pass_for_reference_kernel():
    rep = validate_hypotheses(REF_KERNEL, 1.0)
    assert rep.ok
    assert rep.total_mass == 0.5
    assert rep.k_infinity == 0.5
    assert rep.zeta_max == 1.0


def test_hypotheses_fail_mass_clause():
    rep = validate_hypotheses(KernelSpec.exponential(2.0, 1.0), 1.0)
    assert rep.total_mass == 2.0
    assert rep.k_infinity == -1.0
    assert rep.failed() == ["k_infinity_in_unit_interval"]


def test_hypotheses_zero_kernel_fails_k0():
    rep = validate_hypotheses(KernelSpec.tabulated(0.1, [0.0] * 10), 1.0)
    assert not rep.passes["k0_positive"]
    assert not rep.ok


@pytest.mark.parametrize("a,b", [(0.5, 1.0), (0.1, 3.0), (0.9, 2.5)])
def test_k_infinity_matches_closed_form(a, b):
    rep = validate_hypotheses(KernelSpec.exponential(a, b), 0.5)
    assert rep.k_infinity == pytest.approx(1 - a / b, abs=1e-15)


@pytest.mark.parametrize("b", [0.7, 1.0, 4.0])
def test_decay_clause_iff_zeta_below_b(b):
    spec = KernelSpec.exponential(0.1, b)
    assert validate_hypotheses(spec, b - 1e-6).passes["decay_condition"]
    assert not validate_hypotheses(spec, b + 1e-6).passes["decay_condition"]


def test_validate_requires_positive_zeta():
    with pytest.raises(ConfigError):
        validate_hypotheses(REF_KERNEL, 0.0)


def test_tabulated_mass_converges():
    dt = 1e-3
    t = np.arange(0, 40 + dt / 2, dt)
    spec = KernelSpec.tabulated(dt, 0.5 * np.exp(-t))
    rep = validate_hypotheses(spec, 0.9)
    assert abs(rep.total_mass - 0.5) < 1e-4
    assert rep.passes["tail_resolved"]
    assert rep.ok


def test_tabulated_truncated_table_is_flagged():
    t = np.arange(0, 5.0, 0.01)
    rep = validate_hypotheses(KernelSpec.tabulated(0.01, 0.5 * np.exp(-t)), 0.9)
    assert not rep.passes["tail_resolved"]


def test_tabulated_decay_clause_from_finite_differences():
    t = np.arange(0, 40, 0.01)
    spec = KernelSpec.tabulated(0.01, 0.5 * np.exp(-t))
    rep = validate_hypotheses(spec, 0.9)
    # one-sided difference at t=0 under-estimates the decay rate by O(dt)
    assert rep.zeta_max == pytest.approx(1.0, abs=0.01)
    assert not validate_hypotheses(spec, 1.1).passes["decay_condition"]


def test_kernel_integral_forms_agree():
    dt = 1e-3
    t = np.arange(0, 3 + dt / 2, dt)
    tab = KernelSpec.tabulated(dt, 0.5 * np.exp(-t))
    for T in (0.3, 1.0, 2.2345):
        exact = 0.5 * (1 - math.exp(-T))
        assert kernel_integral(REF_KERNEL, T) == pytest.approx(exact, rel=1e-14)
        assert kernel_integral(tab, T) == pytest.approx(exact, abs=1e-7)


def _c2t_quadrature(k, dk, k0, T):
    k_sq = integrate.quad(lambda s: k(s) ** 2, 0, T, epsabs=1e-13)[0]
    dk_sq = integrate.quad(lambda s: dk(s) ** 2, 0, T, epsabs=1e-13)[0]
    return 2 * (3 + 2 * abs(k0) + 6 * k_sq + T * dk_sq)


def test_c2t_reference_value():
    assert theory_constant_C2T(REF_KERNEL, 1.0) == pytest.approx(9.5132, abs=1e-3)
    oracle = _c2t_quadrature(lambda s: 0.5 * math.exp(-s), lambda s: -0.5 * math.exp(-s), 0.5, 1.0)
    assert theory_constant_C2T(REF_KERNEL, 1.0) == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize("a,b,T", [(0.3, 2.0, 0.5), (1.2, 0.4, 3.0)])
def test_c2t_against_quadrature(a, b, T):
    spec = KernelSpec.exponential(a, b)
    oracle = _c2t_quadrature(lambda s: a * math.exp(-b * s), lambda s: -a * b * math.exp(-b * s), a, T)
    assert theory_constant_C2T(spec, T) == pytest.approx(oracle, rel=1e-12)


def test_c2t_limits():
    assert theory_constant_C2T(REF_KERNEL, 1e-12) == pytest.approx(8.0, abs=1e-9)
    assert theory_constant_C2T(KernelSpec.tabulated(0.1, [0.0] * 20), 1.0) == 6.0


def test_c2t_tabulated_close_to_closed_form():
    dt = 1e-3
    t = np.arange(0, 2 + dt / 2, dt)
    tab = KernelSpec.tabulated(dt, 0.5 * np.exp(-t))
    assert theory_constant_C2T(tab, 1.0) == pytest.approx(theory_constant_C2T(REF_KERNEL, 1.0), abs=1e-4)
    with pytest.raises(OutOfRange):
        theory_constant_C2T(tab, 2.5)


def test_g1_zero_and_initial_value():
    assert np.all(g1_transform(np.zeros(50), 0.01, REF_KERNEL) == 0)
    g = np.random.default_rng(0).normal(size=30)
    assert g1_transform(g, 0.1, REF_KERNEL)[0] == g[0]


def test_g1_constant_input_matches_analytic_convolution():
    dt = 1e-3
    n = int(round(1 / dt)) + 1
    g1 = g1_transform(np.ones(n), dt, REF_KERNEL)
    assert g1[-1] == pytest.approx(0.5 * (1 + math.exp(-1)), abs=5e-3)
    assert g1[-1] == pytest.approx(0.6839, abs=5e-3)


def test_g1_matches_direct_sum():
    rng = np.random.default_rng(1)
    g = rng.normal(size=40)
    dt = 0.05
    out = g1_transform(g, dt, REF_KERNEL)
    for n in range(len(g)):
        direct = g[n] - dt * sum(0.5 * math.exp(-(n - i) * dt) * g[i] for i in range(1, n))
        assert out[n] == pytest.approx(direct, abs=1e-13)


def test_g1_horizon_mismatch():
    with pytest.raises(LengthMismatch):
        g1_transform(np.ones(10), 0.1, REF_KERNEL, horizon=2.0)
    assert len(g1_transform(np.ones(21), 0.1, REF_KERNEL, horizon=2.0)) == 21


def test_kernel_from_csv(tmp_path):
    path = tmp_path / "k.csv"
    t = np.arange(0, 30, 0.01)
    path.write_text("t,k\n" + "".join(f"{float(a)!r},{0.5 * math.exp(-a)!r}\n" for a in t))
    spec = KernelSpec.from_csv(path, zeta=0.9)
    assert spec.form.dt == pytest.approx(0.01)
    assert kernel_eval(spec, 1.0) == pytest.approx(0.5 * math.exp(-1), rel=1e-4)
    bad = tmp_path / "bad.csv"
    bad.write_text("t,k\n0,1\n0.1,1\n0.3,1\n")
    with pytest.raises(ConfigError):
        KernelSpec.from_csv(bad)
