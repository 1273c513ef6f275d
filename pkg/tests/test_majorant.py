import math

import numpy
import pytest
from scipy import optimize

from proxgn_python.constants import SQRT2, ONE_PLUS_SQRT2, METHOD_GENERIC_BISECTION, METHOD_LIPSCHITZ_CLOSED_FORM, \
    METHOD_SMALE_QUARTIC
from proxgn_python.exceptions import H3Violated, DegenerateModel, DomainError
from proxgn_python.majorant import LipschitzMajorant, SmaleMajorant, MajorantModel, LocalConstants, condition_h, \
    nu, nu_bisection, contraction_ratio, rho_generic, rho_lipschitz, rho_smale, smale_quartic, certificate, \
    error_recursion_coefficients, lipschitz_recursion_coefficients, smale_recursion_coefficients, \
    linearization_error_bound, sample_monotone_functions, model_from_kind


def consts(c=0.0, beta=1.0, kappa=1.0, delta=10.0):
    return LocalConstants(c=c, beta=beta, kappa=kappa, delta=delta)


def random_admissible(rng, model_kind):
    """Local constants and model parameter with h drawn uniformly in (0, 0.95)."""
    parameter = rng.uniform(0.1, 10.0)
    model = LipschitzMajorant(parameter) if model_kind == 'lipschitz' else SmaleMajorant(parameter)
    kappa = rng.uniform(1.0, 5.0)
    beta = rng.uniform(0.1, 5.0)
    h = rng.uniform(0.0, 0.95)
    c = h / ((ONE_PLUS_SQRT2 * kappa + 1.0) * beta * model.dplus_fprime0)
    return model, consts(c=c, beta=beta, kappa=kappa)


class UnnamedQuadraticMajorant(MajorantModel):
    """Same function as the Lipschitz model, without its closed forms."""

    def __init__(self, L):
        self.L = L

    def f(self, t):
        return 0.5 * self.L * t * t - t

    def fprime(self, t):
        return self.L * t - 1.0

    @property
    def dplus_fprime0(self):
        return self.L


def test_condition_h_examples():
    assert condition_h(LipschitzMajorant(1.0), consts(c=0.1)) == pytest.approx(0.1 * (2 + SQRT2))
    assert condition_h(SmaleMajorant(1.0), consts(c=0.1)) == pytest.approx(0.2 * (2 + SQRT2))
    assert condition_h(LipschitzMajorant(5.0), consts(c=0.0)) == 0.0


def test_nu_examples():
    assert nu(LipschitzMajorant(2.0)) == 0.5
    assert nu(SmaleMajorant(1.0)) == pytest.approx((2 - SQRT2) / 2, abs=1e-15)
    assert nu(LipschitzMajorant(0.0)) == math.inf
    assert nu(LipschitzMajorant(0.0, domain_bound=10.0)) == 10.0
    assert nu(LipschitzMajorant(0.1, domain_bound=3.0)) == 3.0


@pytest.mark.parametrize('model', [LipschitzMajorant(2.0), LipschitzMajorant(0.3), SmaleMajorant(1.0),
                                   SmaleMajorant(7.5)])
def test_nu_bisection_matches_closed_form(model):
    assert nu_bisection(model) == pytest.approx(model.nu(), rel=1e-11)


def test_nu_bisection_without_zero():
    assert nu_bisection(LipschitzMajorant(0.0)) == math.inf


def test_degenerate_models():
    with pytest.raises(DegenerateModel):
        SmaleMajorant(0.0)
    with pytest.raises(DegenerateModel):
        SmaleMajorant(-1.0)
    with pytest.raises(DegenerateModel):
        LipschitzMajorant(-0.5)
    with pytest.raises(DegenerateModel):
        model_from_kind('smale', None)
    assert isinstance(model_from_kind('smale', 2.0), SmaleMajorant)
    assert isinstance(model_from_kind('lipschitz', 0.0), LipschitzMajorant)


def test_rho_lipschitz_goldens():
    assert rho_lipschitz(consts(kappa=1.0), 1.0) == pytest.approx((5 - math.sqrt(17)) / 2, abs=1e-12)
    assert rho_lipschitz(consts(kappa=1.0), 10.0) == pytest.approx((5 - math.sqrt(17)) / 20, abs=1e-12)
    assert rho_lipschitz(consts(kappa=2.0), 1.0) == pytest.approx(3 - math.sqrt(7), abs=1e-12)


def test_rho_lipschitz_affine_residual_is_unbounded():
    assert rho_lipschitz(consts(c=0.3), 0.0) == math.inf
    assert rho_generic(LipschitzMajorant(0.0), consts(c=0.3)) == math.inf


def test_rho_smale_matches_independent_cubic_root():
    s_bar = optimize.brentq(lambda s: -4 * s ** 3 + 4 * s - 1, SQRT2 / 2, 1.0, xtol=1e-15)
    assert s_bar == pytest.approx(0.837565, abs=1e-6)
    assert rho_smale(consts(kappa=1.0), 1.0) == pytest.approx(1 - s_bar, abs=1e-9)
    assert rho_smale(consts(kappa=1.0), 1.0) == pytest.approx(0.162435, abs=1e-6)
    assert rho_smale(consts(kappa=1.0), 10.0) == pytest.approx((1 - s_bar) / 10, abs=1e-10)


def test_smale_quartic_endpoint_value():
    rng = numpy.random.default_rng(11)
    for _ in range(50):
        model, c = random_admissible(rng, 'smale')
        assert smale_quartic(c, model.gamma, 1.0) == pytest.approx(condition_h(model, c) - 1.0, abs=1e-12)
        assert smale_quartic(c, model.gamma, SQRT2 / 2) > 0


def test_h_condition_gate():
    with pytest.raises(H3Violated) as e:
        rho_smale(consts(c=0.2), 1.0)
    assert e.value.h == pytest.approx(0.4 * (2 + SQRT2))
    with pytest.raises(H3Violated):
        rho_lipschitz(consts(c=1.0), 1.0)
    with pytest.raises(H3Violated):
        certificate(SmaleMajorant(1.0), consts(c=0.2))


@pytest.mark.parametrize('model_kind', ['lipschitz', 'smale'])
def test_rho_generic_matches_closed_forms(model_kind):
    rng = numpy.random.default_rng(13 if model_kind == 'lipschitz' else 17)
    for _ in range(200):
        model, c = random_admissible(rng, model_kind)
        if model_kind == 'lipschitz':
            closed = rho_lipschitz(c, model.L)
        else:
            closed = rho_smale(c, model.gamma)
        assert 0 < closed < model.nu()
        assert rho_generic(model, c) == pytest.approx(closed, rel=1e-8)
        assert contraction_ratio(model, c, closed) == pytest.approx(1.0, abs=1e-7)


def test_contraction_ratio_is_increasing_and_tends_to_h():
    rng = numpy.random.default_rng(19)
    for model_kind in ('lipschitz', 'smale'):
        for _ in range(20):
            model, c = random_admissible(rng, model_kind)
            grid = numpy.linspace(1e-6, 0.999, 200) * model.nu()
            values = numpy.array([contraction_ratio(model, c, t) for t in grid])
            assert numpy.all(numpy.diff(values) >= -1e-12 * numpy.abs(values[1:]))
            h = condition_h(model, c)
            assert contraction_ratio(model, c, 1e-9 * model.nu()) == pytest.approx(h, abs=1e-6)


def test_contraction_ratio_rejects_t_outside_domain():
    model = LipschitzMajorant(1.0)
    for t in (0.0, -0.1, 1.0, 2.0):
        with pytest.raises(DomainError):
            contraction_ratio(model, consts(), t)
    with pytest.raises(DomainError):
        error_recursion_coefficients(SmaleMajorant(1.0), consts(), (2 - SQRT2) / 2)


def test_certificate_examples():
    cert = certificate(LipschitzMajorant(1.0), consts(delta=10.0))
    assert cert.method == METHOD_LIPSCHITZ_CLOSED_FORM
    assert cert.rho == pytest.approx((5 - math.sqrt(17)) / 2, abs=1e-12)
    assert cert.r == cert.rho
    assert cert.nu == 1.0
    assert cert.h_ok and cert.h_value == 0.0
    assert cert.cross_check_delta <= 1e-8

    binding = certificate(LipschitzMajorant(1.0), consts(delta=0.1))
    assert binding.r == 0.1
    assert binding.rho == pytest.approx(cert.rho)

    smale = certificate(SmaleMajorant(1.0), consts())
    assert smale.method == METHOD_SMALE_QUARTIC
    assert smale.r == pytest.approx(0.162435, abs=1e-6)
    assert smale.cross_check_delta <= 1e-8


def test_certificate_generic_model():
    cert = certificate(UnnamedQuadraticMajorant(2.0), consts(c=0.01))
    assert cert.method == METHOD_GENERIC_BISECTION
    assert cert.cross_check_delta == 0.0
    assert cert.rho == pytest.approx(rho_lipschitz(consts(c=0.01), 2.0), rel=1e-9)
    assert cert.nu == pytest.approx(0.5, rel=1e-11)


def test_certificate_affine_residual_radius_is_delta():
    cert = certificate(LipschitzMajorant(0.0), consts(c=0.5, delta=10.0))
    assert cert.rho == math.inf
    assert cert.r == 10.0
    assert cert.cross_check_delta == 0.0


def test_certificate_to_dict():
    data = certificate(SmaleMajorant(2.0), consts(kappa=1.5)).to_dict()
    assert data['model'] == 'smale'
    assert data['model_parameter'] == 2.0
    assert set(data) >= {'c', 'beta', 'kappa', 'delta', 'h', 'h_ok', 'nu', 'rho', 'r', 'method', 'cross_check_delta'}


def test_recursion_coefficient_examples():
    lipschitz = error_recursion_coefficients(LipschitzMajorant(1.0), consts(), 0.2)
    assert lipschitz.quad_a == pytest.approx(0.9375, rel=1e-12)
    assert lipschitz_recursion_coefficients(consts(), 1.0, 0.2).quad_a == pytest.approx(0.9375, rel=1e-12)
    assert lipschitz.quad_b == 0.0 and lipschitz.lin == 0.0

    smale = error_recursion_coefficients(SmaleMajorant(1.0), consts(), 0.1)
    assert smale.quad_a == pytest.approx(1 / 0.3844, rel=1e-9)
    assert smale_recursion_coefficients(consts(), 1.0, 0.1).quad_a == pytest.approx(2.60146, abs=1e-5)


@pytest.mark.parametrize('model_kind', ['lipschitz', 'smale'])
def test_explicit_coefficients_match_generic(model_kind):
    rng = numpy.random.default_rng(23 if model_kind == 'lipschitz' else 29)
    for _ in range(500):
        model, c = random_admissible(rng, model_kind)
        t = rng.uniform(0.01, 0.99) * model.nu()
        generic = error_recursion_coefficients(model, c, t)
        if model_kind == 'lipschitz':
            explicit = lipschitz_recursion_coefficients(c, model.L, t)
        else:
            explicit = smale_recursion_coefficients(c, model.gamma, t)
        assert explicit.quad_a == pytest.approx(generic.quad_a, rel=1e-10)
        assert explicit.quad_b == pytest.approx(generic.quad_b, rel=1e-10, abs=1e-300)
        assert explicit.lin == pytest.approx(generic.lin, rel=1e-10, abs=1e-300)


def test_coefficient_limits_at_small_t():
    c = consts(c=0.05, beta=1.0, kappa=1.2)
    for model in (LipschitzMajorant(1.5), SmaleMajorant(1.5)):
        coefficients = error_recursion_coefficients(model, c, 1e-6 * model.nu())
        assert coefficients.lin == pytest.approx(condition_h(model, c), rel=1e-4)
        assert coefficients.quad_a == pytest.approx(c.kappa * model.dplus_fprime0 / 2, rel=1e-4)


def test_recursion_bound():
    coefficients = lipschitz_recursion_coefficients(consts(c=0.01), 1.0, 0.2)
    sigma = 0.1
    expected = (coefficients.quad_a + coefficients.quad_b) * sigma ** 2 + coefficients.lin * sigma
    assert coefficients.bound(sigma) == pytest.approx(expected)


def test_linearization_error_bound():
    assert linearization_error_bound(LipschitzMajorant(2.0), 0.1) == pytest.approx(0.01)
    assert linearization_error_bound(LipschitzMajorant(2.0), 0.2) == pytest.approx(0.04)
    assert linearization_error_bound(SmaleMajorant(1.0), 0.1) == pytest.approx(0.01 / 0.81, rel=1e-12)


@pytest.mark.parametrize('model', [LipschitzMajorant(0.7), LipschitzMajorant(4.0), SmaleMajorant(0.5),
                                   SmaleMajorant(3.0)])
def test_monotone_functions(model):
    grid = numpy.linspace(0.001, 0.999, 500) * model.nu()
    for name, values in sample_monotone_functions(model, consts(kappa=1.7), grid).items():
        assert numpy.all(values > 0), name
        assert numpy.all(numpy.diff(values) >= -1e-9 * numpy.abs(values[1:])), name
