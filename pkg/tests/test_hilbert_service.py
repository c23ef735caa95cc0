# tests/test_hilbert_service.py
import math

import numpy as np
import pytest
from scipy.special import beta

from services import geometry_service as geometry
from services import hilbert_service
from services.errors import (
    DivergentNormError, InvalidParameterError, NonPositiveScaleError, PreconditionError,
)
from services.geometry_service import DomainModel

DISK = DomainModel.disk()


@pytest.fixture(scope="module")
def disk_space():
    return hilbert_service.build_space(DISK, 2.0, 64)


def test_monomial_exponents_are_graded():
    exps = hilbert_service.monomial_exponents(2, 3)
    assert len(exps) == 10
    assert exps[0].tolist() == [0, 0]
    assert list(exps.sum(axis=1)) == sorted(exps.sum(axis=1))
    assert len({tuple(e) for e in exps}) == 10


@pytest.mark.parametrize("lam", [2.0, 1.5, 3.7])
def test_disk_gram_matches_beta_oracle(lam):
    ka = hilbert_service.build_space(DISK, lam, 8)
    expected = [math.pi * beta(k + 1, lam - 1) for k in range(9)]
    assert np.allclose(np.diag(ka.gram).real, expected, rtol=1e-12)
    assert np.allclose(ka.gram - np.diag(np.diag(ka.gram)), 0.0)
    assert ka.quadrature_spec['scheme'] == 'radial'


def test_norm_of_constant_for_lambda_two():
    ka = hilbert_service.build_space(DISK, 2.0, 0)
    assert ka.gram[0, 0].real == pytest.approx(math.pi)


@pytest.mark.parametrize("lam", [1.0, 0.9])
def test_build_space_below_threshold_raises(lam):
    with pytest.raises(DivergentNormError):
        hilbert_service.build_space(DISK, lam, 8)


def test_build_space_validation():
    with pytest.raises(NonPositiveScaleError):
        hilbert_service.build_space(DISK, 0.0)
    with pytest.raises(InvalidParameterError):
        hilbert_service.build_space(DISK, 2.0, -1)
    with pytest.raises(InvalidParameterError):
        hilbert_service.build_space(DISK, 2.0, 4, scheme='simpson')


@pytest.mark.parametrize("z, w, expected, tol", [
    (0.0, 0.0, 1 / math.pi, 1e-10),
    (0.5, 0.5, (1 / math.pi) * 0.75 ** -2, 1e-8),
    (0.3 + 0.2j, -0.1j, None, 1e-10),
])
def test_reproducing_kernel_matches_closed_form(disk_space, z, w, expected, tol):
    if expected is None:
        expected = geometry.closed_form_kernel(DISK, 2.0, z, w)
    value = hilbert_service.reproducing_kernel(disk_space, z, w)
    assert value == pytest.approx(expected, rel=tol)


def test_kernel_diagonal_is_real_and_nonnegative(disk_space):
    z = geometry.sample_points(DISK, np.linspace(0, 0.9, 10), [0.0, 2.0])
    values = hilbert_service.reproducing_kernel(disk_space, z, z)
    assert np.all(np.abs(values.imag) < 1e-12 * np.abs(values.real))
    assert np.all(values.real > 0)


def test_kernel_is_hermitian(disk_space):
    z, w = 0.4 - 0.3j, 0.2 + 0.6j
    assert hilbert_service.reproducing_kernel(disk_space, z, w) == \
        pytest.approx(np.conj(hilbert_service.reproducing_kernel(disk_space, w, z)))


@pytest.mark.parametrize("radius", [0.1, 0.5, 0.9])
def test_kernel_diagonal_grows_with_the_degree(radius):
    z = radius * np.exp(0.7j)
    values = [hilbert_service.reproducing_kernel(hilbert_service.build_space(DISK, 2.0, n), z, z).real
              for n in (8, 16, 32, 64)]
    for prev, cur in zip(values, values[1:]):
        assert cur >= prev * (1 - 1e-12)
    assert values[-1] <= geometry.closed_form_kernel(DISK, 2.0, z, z).real * (1 + 1e-9)


@pytest.mark.parametrize("lam, degree, radii", [
    (2.0, 64, [0.0, 0.3, 0.6]),
    (2.0, 128, [0.0, 0.3, 0.6, 0.9]),
    (1.5, 128, [0.0, 0.3, 0.6, 0.9]),
])
def test_epsilon_is_constant_on_the_disk(lam, degree, radii):
    ka = hilbert_service.build_space(DISK, lam, degree)
    pts = geometry.sample_points(DISK, radii)
    eps = hilbert_service.epsilon_function(ka, pts)
    assert np.allclose(eps, (lam - 1) / math.pi, rtol=1e-6)


def test_epsilon_truncation_at_degree_64_near_the_boundary(disk_space):
    # the neglected tail at |z| = 0.9 is about 1.4e-5 of epsilon
    eps = hilbert_service.epsilon_function(disk_space, 0.9)
    assert eps == pytest.approx(1 / math.pi, rel=1e-4)
    assert abs(eps - 1 / math.pi) * math.pi > 1e-6


def test_epsilon_scales_with_mu():
    # mu * g_min at level lambda: epsilon = (lambda mu - 1)/(pi mu)
    m = DomainModel.disk(2.0)
    ka = hilbert_service.build_space(m, 1.5, 64)
    assert hilbert_service.epsilon_function(ka, 0.4) == pytest.approx(2.0 / (2 * math.pi), rel=1e-10)


def test_epsilon_report_rows(disk_space):
    pts = geometry.sample_points(DISK, [0.0, 0.3, 0.6, 0.9])
    rows = hilbert_service.epsilon_report(disk_space, pts)
    assert [r['radius'] for r in rows] == pytest.approx([0.0, 0.3, 0.6, 0.9])
    assert set(rows[0]) == {'re', 'im', 'radius', 'epsilon', 'N', 'tail_flag'}
    assert rows[0]['tail_flag'] == 'ok'
    assert all(r['N'] == 64 for r in rows)


def test_epsilon_report_flags_truncation():
    ka = hilbert_service.build_space(DISK, 2.0, 8)
    rows = hilbert_service.epsilon_report(ka, geometry.sample_points(DISK, [0.0, 0.9]))
    assert [r['tail_flag'] for r in rows] == ['ok', 'truncation-limited']


def test_gauge_changes_gram_but_not_epsilon():
    radii = [0.0, 0.3, 0.6, 0.9]
    plain = hilbert_service.build_space(DISK, 2.0, 96)
    gauged = hilbert_service.build_space(DISK.with_gauge([0.3]), 2.0, 96)
    assert gauged.quadrature_spec['scheme'] == 'product'
    assert not np.allclose(gauged.gram, plain.gram)
    pts = geometry.sample_points(DISK, radii, [0.0, 1.3])
    eps_plain = hilbert_service.epsilon_function(plain, pts)
    eps_gauged = hilbert_service.epsilon_function(gauged, pts)
    assert np.allclose(eps_gauged, eps_plain, rtol=1e-5)


@pytest.mark.parametrize("z", [0.0, 0.4, 0.7])
def test_reproducing_property(disk_space, z):
    f = lambda x: 1 + x ** 2  # noqa: E731
    value = hilbert_service.inner_product(disk_space, f, hilbert_service.kernel_section(disk_space, z))
    assert value == pytest.approx(1 + z ** 2, abs=1e-6)


def test_inner_product_of_monomials(disk_space):
    value = hilbert_service.inner_product(disk_space, lambda x: x ** 3, lambda x: x ** 3)
    assert value == pytest.approx(math.pi * beta(4, 1), rel=1e-10)
    assert abs(hilbert_service.inner_product(disk_space, lambda x: x, lambda x: x ** 2)) < 1e-12


@pytest.mark.parametrize("z0", [0.0, 0.3])
@pytest.mark.parametrize("z", [0.5, 0.7])
def test_kernel_diastasis_agrees_with_geometry(disk_space, z0, z):
    assert hilbert_service.kernel_diastasis(disk_space, z0, z) == \
        pytest.approx(geometry.diastasis(DISK, z0, z), abs=1e-8)


def test_is_balanced_on_balanced_disk(disk_space):
    ok, report = hilbert_service.is_balanced(disk_space)
    assert ok is True
    assert report.verdict == 'balanced'
    assert report.mean == pytest.approx(1 / math.pi, rel=1e-8)
    assert len(report.samples) == 24


def test_is_balanced_needs_two_points(disk_space):
    with pytest.raises(PreconditionError):
        hilbert_service.is_balanced(disk_space, [0.1])


def test_is_balanced_detects_a_wrong_kernel(mocker, disk_space):
    # a perturbed diagonal makes epsilon vary with the radius
    mocker.patch("services.hilbert_service._diagonal",
                 side_effect=lambda ka, z, prefix=None: (1 + 0.01 * np.abs(z)) / (math.pi * (1 - np.abs(z) ** 2) ** 2))
    ok, report = hilbert_service.is_balanced(disk_space, geometry.sample_points(DISK, [0.0, 0.5]))
    assert ok is False
    assert report.verdict == 'not balanced'


def test_is_balanced_inconclusive_band(mocker, disk_space):
    mocker.patch("services.hilbert_service._diagonal",
                 side_effect=lambda ka, z, prefix=None: (1 + 3e-4 * np.abs(z)) / (math.pi * (1 - np.abs(z) ** 2) ** 2))
    ok, report = hilbert_service.is_balanced(disk_space, geometry.sample_points(DISK, [0.0, 0.5]))
    assert report.verdict == 'inconclusive'
    assert ok is True


@pytest.mark.parametrize("lam, expected", [(1.2, True), (2.0, True), (0.9, False), (1.0, False)])
def test_check_balanced_on_disk(lam, expected):
    ok, report = hilbert_service.check_balanced(DISK, lam)
    assert ok is expected
    if not expected:
        assert report.verdict == 'degenerate'
        assert 'not balanced' in report.message


def test_ball_epsilon_matches_closed_form():
    m = DomainModel.ball(2)
    ka = hilbert_service.build_space(m, 4.0)
    pts = geometry.sample_points(m, [0.0, 0.2, 0.4], [0.0, 1.0])
    expected = 6 / math.pi ** 2
    assert np.allclose(hilbert_service.epsilon_function(ka, pts), expected, rtol=1e-6)
    ok, report = hilbert_service.is_balanced(ka)
    assert ok is True
    assert report.truncation_limited is True


def test_polydisk_kernel_matches_product_of_disks():
    m = DomainModel.polydisk(2)
    ka = hilbert_service.build_space(m, 2.0, 24)
    z, w = np.array([0.2 + 0.1j, -0.3j]), np.array([0.1, 0.25])
    assert hilbert_service.reproducing_kernel(ka, z, w) == \
        pytest.approx(geometry.closed_form_kernel(m, 2.0, z, w), rel=1e-9)


def test_qmc_scheme_on_type_i():
    m = DomainModel.type_i(2, 2)
    ka = hilbert_service.build_space(m, 5.0, 2, qmc_points=2 ** 13)
    assert ka.quadrature_spec['scheme'] == 'qmc'
    assert ka.error_bar > 0
    assert np.allclose(ka.gram, np.conj(ka.gram.T))
    # ||1||^2 = int det(I - Z Z*) dV = pi^4 / 72
    assert ka.gram[0, 0].real == pytest.approx(math.pi ** 4 / 72, rel=0.05)
    assert hilbert_service.epsilon_function(ka, np.zeros((2, 2))) > 0
