"""Kernel constructors, derived constants and serialization.

Reference values come from closed forms stated in the docstrings or from
direct scipy.integrate quadrature of the defining integrals.
"""
import math

import numpy as np
import pytest
from scipy.integrate import quad

import nlperim.kernels as kr


def test_fractional_pointwise():
    K = kr.make_fractional(2, 0.5)
    assert K.dim == 2 and K.form == "fractional" and K.s == 0.5
    x = np.array([[3.0, 4.0]])
    assert K.eval_displacements(x)[0] == pytest.approx(5.0 ** -2.5)
    assert K.eval_radial(2.0) == pytest.approx(2.0 ** -2.5)
    assert K.is_radial


def test_fractional_validation():
    with pytest.raises(kr.KernelError):
        kr.make_fractional(4, 0.5)
    with pytest.raises(kr.KernelError):
        kr.make_fractional(2, 1.0)
    with pytest.raises(kr.KernelError):
        kr.make_fractional(2, 0.0)


def test_sigma_fractional_closed_form():
    # sigma = int min(1,|x|) |x|^(-n-s) dx = n omega_n / (s(1-s))
    for n in (1, 2, 3):
        for s in (0.3, 0.7):
            K = kr.make_fractional(n, s)
            expected = n * kr.unit_ball_volume(n) / (s * (1.0 - s))
            assert kr.sigma_of(K) == pytest.approx(expected, rel=1e-12)


def test_sigma_radial_matches_quadrature():
    K = kr.make_radial(2, lambda r: np.exp(-r) / np.maximum(r, 1e-300) ** 2.2)
    val = kr.sigma_of(K)
    surf = 2.0 * math.pi

    def f(r):
        return min(1.0, r) * math.exp(-r) * r ** (1.0 - 2.2)

    ref = surf * (quad(f, 0, 1)[0] + quad(f, 1, np.inf)[0])
    assert val == pytest.approx(ref, rel=1e-6)


def test_radial_rejects_divergent_mass():
    with pytest.raises(kr.KernelError):
        kr.make_radial(2, lambda r: np.maximum(r, 1e-300) ** -4.5)


def test_radial_rejects_increasing_profile():
    with pytest.raises(kr.KernelError):
        kr.make_radial(2, lambda r: np.minimum(r, 2.0))


def test_beta_constant_against_quadrature():
    # beta = int_{R^{n-1}} (1+|u|^2)^(-(n+s)/2) du
    s = 0.45
    ref2 = 2.0 * quad(lambda u: (1 + u * u) ** (-(2 + s) / 2), 0, np.inf)[0]
    assert kr.beta_constant(2, s) == pytest.approx(ref2, rel=1e-9)
    ref3 = 2 * math.pi * quad(
        lambda u: u * (1 + u * u) ** (-(3 + s) / 2), 0, np.inf)[0]
    assert kr.beta_constant(3, s) == pytest.approx(ref3, rel=1e-9)
    assert kr.beta_constant(1, s) == 1.0


def test_transverse_mass_fractional():
    # M(tau) = beta tau^(-1-s); cross-check one point by direct integration
    s = 0.5
    K = kr.make_fractional(2, s)
    tau = 0.8
    ref = 2.0 * quad(lambda y: (y * y + tau * tau) ** (-(2 + s) / 2),
                     0, np.inf)[0]
    assert kr.transverse_mass(K, tau) == pytest.approx(ref, rel=1e-9)


def test_transverse_mass_tail_fractional():
    s = 0.6
    K = kr.make_fractional(3, s)
    eta = 0.5
    ref = quad(lambda u: float(kr.transverse_mass(K, u)), eta, np.inf)[0]
    assert kr.transverse_mass_tail(K, eta) == pytest.approx(ref, rel=1e-8)


def test_radial_tail_fractional():
    # Lambda(r) = n omega_n r^(-s) / s
    K = kr.make_fractional(2, 0.4)
    assert kr.radial_tail(K, 2.0) == pytest.approx(
        2.0 * math.pi * 2.0 ** -0.4 / 0.4, rel=1e-12)


def test_radial_tail_generic_matches_quadrature():
    K = kr.make_radial(1, lambda r: np.exp(-np.maximum(r, 1e-300) ** 2)
                       / np.maximum(r, 1e-300) ** 1.5)
    r0 = 0.7
    ref = 2.0 * quad(lambda r: math.exp(-r * r) * r ** -1.5, r0, np.inf)[0]
    assert float(kr.radial_tail(K, r0)) == pytest.approx(ref, rel=1e-4)


def test_table_kernel_interpolates_fractional():
    s = 0.5
    r = np.logspace(-4, 2, 400)
    K = kr.make_radial_table(1, (r, r ** (-1 - s)))
    probe = np.array([0.01, 0.3, 1.7, 40.0])
    assert np.allclose(K.eval_radial(probe), probe ** (-1 - s), rtol=1e-4)


def test_nu_symmetric_kernel_evaluation():
    nu = np.array([0.0, 1.0])
    K = kr.make_nu_symmetric(2, nu,
                             lambda r, t: (r * r + 2 * t * t) ** -1.3)
    x = np.array([[0.3, 0.4]])
    assert K.eval_displacements(x)[0] == pytest.approx(
        (0.09 + 2 * 0.16) ** -1.3)
    assert not K.is_radial


def test_kernel_dict_roundtrip():
    K = kr.make_fractional(3, 0.25)
    back = kr.kernel_from_dict(kr.kernel_to_dict(K))
    assert back.dim == 3 and back.s == 0.25 and back.form == "fractional"
    r = np.logspace(-3, 1, 50)
    T = kr.make_radial_table(2, (r, r ** -2.4))
    back = kr.kernel_from_dict(kr.kernel_to_dict(T))
    assert np.allclose(back.eval_radial(r), T.eval_radial(r), rtol=1e-12)


def test_parse_kernel_spec():
    K = kr.parse_kernel_spec("frac:2:0.5")
    assert K.dim == 2 and K.s == 0.5
    with pytest.raises(kr.KernelError):
        kr.parse_kernel_spec("frac:2")
    with pytest.raises(kr.KernelError):
        kr.parse_kernel_spec("frac:2:1.5")
    with pytest.raises(kr.KernelError):
        kr.parse_kernel_spec("poisson:2:0.5")


def test_sample_radial_shell_inverse_cdf():
    # samples must reproduce the tail law of the shell restriction
    K = kr.make_fractional(2, 0.5)
    u = np.linspace(0.01, 0.99, 99)
    r = kr.sample_radial_shell(K, 0.5, 4.0, u)
    assert np.all((r >= 0.5) & (r <= 4.0))
    assert np.all(np.diff(r) > 0)
    # median check: mass of [0.5, r_med] equals half the shell mass
    lam = kr.radial_tail(K, np.array([0.5, 4.0]))
    r_med = float(kr.sample_radial_shell(K, 0.5, 4.0, np.array([0.5])))
    mass_left = float(kr.radial_tail(K, 0.5) - kr.radial_tail(K, r_med))
    assert mass_left == pytest.approx(0.5 * float(lam[0] - lam[1]), rel=1e-6)
