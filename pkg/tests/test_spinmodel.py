import numpy as np
import pytest

from pcwatoms.errors import InputError
from pcwatoms.spinmodel import (AtomConfiguration, CouplingMatrix,
                                CouplingRates, build_coupling_matrix,
                                cqed_rates, eigenvalues, solve_coherences,
                                transmission_bright, transmission_exact)
from pcwatoms.units import (GAMMA_0_MHZ, angular_to_mhz, gamma0_to_angular,
                            mhz_to_angular)

A = 370.0


def make_matrix(rng, n, scale=10.0):
    """Random complex symmetric matrix in angular units."""
    m = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return CouplingMatrix(m + m.T)


def test_unit_conversions_single_point():
    assert mhz_to_angular(1.0) == pytest.approx(2 * np.pi, rel=1e-15)
    assert angular_to_mhz(2 * np.pi) == pytest.approx(1.0, rel=1e-15)
    assert gamma0_to_angular(1.0) == pytest.approx(2 * np.pi * GAMMA_0_MHZ, rel=1e-15)


class TestCouplingMatrix:
    def test_single_atom_at_antinode(self):
        rates = CouplingRates(gamma_1d=1.5, j_1d=-0.7, gamma_prime=1.0)
        m = build_coupling_matrix(rates, AtomConfiguration((0.0,), 0.0, A))
        expected = gamma0_to_angular(-0.7) + 0.5j * gamma0_to_angular(1.5)
        assert m.g[0, 0] == pytest.approx(expected, rel=1e-14)

    def test_single_atom_at_node_vanishes(self):
        rates = CouplingRates(gamma_1d=1.5, j_1d=-0.7, gamma_prime=1.0)
        m = build_coupling_matrix(rates, AtomConfiguration((A / 2,), 0.0, A))
        assert abs(m.g[0, 0]) < 1e-14 * gamma0_to_angular(1.5)

    def test_two_atom_off_diagonal_hand_value(self):
        # cos(0) * cos(pi/4) * exp(-0.025) = 0.70711 * 0.97531 = 0.68965
        rates = CouplingRates(gamma_1d=1.0, j_1d=1.0, gamma_prime=1.0)
        config = AtomConfiguration((0.0, A / 4), 0.1 / A, A)
        m = build_coupling_matrix(rates, config)
        unit = gamma0_to_angular(1.0) * (1 + 0.5j)
        assert m.g[0, 1] / unit == pytest.approx(0.68965, abs=5e-6)

    def test_exact_symmetry_bitwise(self, rng):
        rates = CouplingRates(gamma_1d=1.4, j_1d=-2.0, gamma_prime=2.0)
        x = tuple(rng.uniform(-6000, 6000, size=7))
        m = build_coupling_matrix(rates, AtomConfiguration(x, 3e-5, A))
        assert np.array_equal(m.g, m.g.T)

    def test_validation(self):
        with pytest.raises(InputError):
            CouplingRates(gamma_1d=-0.1, j_1d=0.0, gamma_prime=1.0)
        with pytest.raises(InputError):
            CouplingRates(gamma_1d=1.0, j_1d=0.0, gamma_prime=0.0)
        with pytest.raises(InputError):
            AtomConfiguration((0.0,), -1.0, A)
        with pytest.raises(InputError):
            CouplingMatrix(np.ones((2, 3)))


class TestEigenvalues:
    def test_diagonal_matrix(self):
        d = np.array([3 + 1j, -1 + 0.5j, 0.2 - 2j])
        lam = eigenvalues(CouplingMatrix(np.diag(d)))
        assert np.allclose(sorted(lam, key=abs), sorted(d, key=abs), rtol=1e-12)

    def test_separable_single_eigenvalue(self, rng):
        # kappa = 0 makes g = u u^T: exactly one non-zero eigenvalue sum(u^2)
        rates = CouplingRates(gamma_1d=1.4, j_1d=-0.5, gamma_prime=2.0)
        x = tuple(rng.uniform(0, A, size=5))
        m = build_coupling_matrix(rates, AtomConfiguration(x, 0.0, A))
        lam = m.eigenvalues
        unit = gamma0_to_angular(-0.5) + 0.5j * gamma0_to_angular(1.4)
        s = np.sum(np.cos(np.pi * np.asarray(x) / A) ** 2)
        assert lam[0] == pytest.approx(unit * s, rel=1e-12)
        assert np.all(np.abs(lam[1:]) < 1e-12 * abs(lam[0]))

    def test_cubic_characteristic_polynomial_oracle(self, rng):
        # roots of det(g - lambda I) by explicit cofactor expansion
        for _ in range(25):
            m = make_matrix(rng, 3)
            g = m.g
            c2 = -(g[0, 0] + g[1, 1] + g[2, 2])
            c1 = (g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
                  + g[0, 0] * g[2, 2] - g[0, 2] * g[2, 0]
                  + g[1, 1] * g[2, 2] - g[1, 2] * g[2, 1])
            c0 = -(g[0, 0] * (g[1, 1] * g[2, 2] - g[1, 2] * g[2, 1])
                   - g[0, 1] * (g[1, 0] * g[2, 2] - g[1, 2] * g[2, 0])
                   + g[0, 2] * (g[1, 0] * g[2, 1] - g[1, 1] * g[2, 0]))
            roots = np.roots([1.0, c2, c1, c0])
            lam = eigenvalues(m)
            lam_s = sorted(lam, key=lambda z: (z.real, z.imag))
            roots_s = sorted(roots, key=lambda z: (z.real, z.imag))
            scale = max(abs(z) for z in lam)
            assert all(abs(a - b) < 1e-9 * scale for a, b in zip(lam_s, roots_s))

    def test_trace_identity(self, rng):
        for n in range(1, 7):
            m = make_matrix(rng, n)
            assert np.sum(m.eigenvalues) == pytest.approx(np.trace(m.g), rel=1e-9)

    def test_ordering_deterministic(self, rng):
        m = make_matrix(rng, 5)
        lam = eigenvalues(m)
        mags = np.abs(lam)
        assert np.all(np.diff(mags) <= 1e-12 * mags[0])


def gauss_solve(a, b):
    """Independent dense solver: Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    n = a.shape[0]
    for col in range(n):
        piv = col + np.argmax(np.abs(a[col:, col]))
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            a[row, col:] -= f * a[col, col:]
            b[row] -= f * b[col]
    x = np.zeros(n, dtype=complex)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


class TestSolveCoherences:
    def test_scalar_case(self):
        rates = CouplingRates(gamma_1d=1.5, j_1d=0.0, gamma_prime=1.0)
        m = CouplingMatrix(np.array([[0.5j * gamma0_to_angular(1.5)]]))
        sigma = solve_coherences(m, 0.0, rates, [1.0])
        expected = -1.0 / (0.5j * gamma0_to_angular(1.0 + 1.5))
        assert sigma[0] == pytest.approx(expected, rel=1e-12)

    def test_zero_drive(self, rng):
        rates = CouplingRates(gamma_1d=1.0, j_1d=0.0, gamma_prime=1.0)
        m = make_matrix(rng, 4)
        assert np.all(solve_coherences(m, 3.0, rates, np.zeros(4)) == 0)

    def test_against_gaussian_elimination(self, rng):
        rates = CouplingRates(gamma_1d=1.0, j_1d=-0.3, gamma_prime=2.0)
        for _ in range(10):
            m = make_matrix(rng, 3)
            drive = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            sigma = solve_coherences(m, 2.5, rates, drive)
            diag = (mhz_to_angular(2.5 + rates.delta_0)
                    + 0.5j * gamma0_to_angular(2.0))
            ref = gauss_solve(m.g + diag * np.eye(3), -drive)
            assert np.max(np.abs(sigma - ref)) < 1e-10 * np.max(np.abs(ref))

    def test_drive_length_mismatch(self, rng):
        rates = CouplingRates(gamma_1d=1.0, j_1d=0.0, gamma_prime=1.0)
        with pytest.raises(InputError):
            solve_coherences(make_matrix(rng, 3), 0.0, rates, [1.0, 2.0])


class TestTransmissionExact:
    def test_zero_atoms(self):
        rates = CouplingRates(gamma_1d=1.0, j_1d=0.0, gamma_prime=1.0)
        m = CouplingMatrix(np.zeros((0, 0)))
        det = np.linspace(-50, 50, 11)
        assert np.all(transmission_exact(det, rates, m) == 1.0)

    def test_far_detuned_limit(self, rng):
        rates = CouplingRates(gamma_1d=1.4, j_1d=-2.0, gamma_prime=2.0)
        x = tuple(rng.uniform(0, A, size=4))
        m = build_coupling_matrix(rates, AtomConfiguration(x, 0.0, A))
        far = 1e4 * GAMMA_0_MHZ
        assert abs(transmission_exact(far, rates, m) - 1.0) < 1e-3

    def test_single_atom_closed_form(self):
        # J=0, Gamma=1.5, Gamma'=1: |t/t0|^2 = (1/2.5)^2 = 0.16 on resonance
        rates = CouplingRates(gamma_1d=1.5, j_1d=0.0, gamma_prime=1.0)
        m = build_coupling_matrix(rates, AtomConfiguration((0.0,), 0.0, A))
        t = transmission_exact(0.0, rates, m)
        assert abs(t) ** 2 == pytest.approx(0.16, abs=1e-12)

    def test_determinant_ratio_oracle(self, rng):
        rates = CouplingRates(gamma_1d=1.0, j_1d=0.0, gamma_prime=1.7)
        diag = mhz_to_angular(3.0 + rates.delta_0) + 0.5j * gamma0_to_angular(1.7)
        for n in range(1, 7):
            m = make_matrix(rng, n)
            t = transmission_exact(3.0, rates, m)
            ref = diag ** n / np.linalg.det(diag * np.eye(n) + m.g)
            assert t == pytest.approx(ref, rel=1e-9)


class TestTransmissionBright:
    def test_no_atoms(self):
        rates = CouplingRates(gamma_1d=1.0, j_1d=0.0, gamma_prime=1.0)
        config = AtomConfiguration((), 0.0, A)
        assert transmission_bright(5.0, rates, config) == 1.0

    def test_separable_equals_exact(self, rng):
        rates = CouplingRates(gamma_1d=1.4, j_1d=-2.0, gamma_prime=2.0, delta_0=12.5)
        det = np.linspace(-150, 150, 101)
        x = tuple(rng.uniform(-6000, 6000, size=4))
        config = AtomConfiguration(x, 0.0, A)
        m = build_coupling_matrix(rates, config)
        te = transmission_exact(det, rates, m)
        tb = transmission_bright(det, rates, config)
        assert np.max(np.abs(te - tb)) < 1e-12

    def test_lorentzian_symmetry(self):
        rates = CouplingRates(gamma_1d=1.4, j_1d=0.0, gamma_prime=2.0, delta_0=12.5)
        config = AtomConfiguration((0.0, 80.0, -130.0), 0.0, A)
        delta = np.linspace(0.1, 90, 57)
        t_plus = np.abs(transmission_bright(-12.5 + delta, rates, config)) ** 2
        t_minus = np.abs(transmission_bright(-12.5 - delta, rates, config)) ** 2
        assert np.max(np.abs(t_plus - t_minus)) < 1e-12

    def test_fano_resonance_center_and_asymmetry(self):
        # with J < 0 the collective resonance (vanishing real part of the
        # denominator) sits at detuning + delta_0 = -sum J_ii exactly; the
        # transmission shows a transparency peak there (T > 1) and its
        # global minimum slightly on the negative side
        rates = CouplingRates(gamma_1d=1.4, j_1d=-2.0, gamma_prime=2.0, delta_0=0.0)
        config = AtomConfiguration((0.0, 30.0, -110.0), 0.0, A)
        cos2 = np.cos(np.pi * np.asarray(config.positions) / A) ** 2
        sum_j = rates.j_1d * float(np.sum(cos2))
        center = -sum_j * GAMMA_0_MHZ  # MHz, positive for J < 0
        assert center > 0
        det = np.linspace(-200, 200, 160001)
        t2 = np.abs(transmission_bright(det, rates, config)) ** 2
        assert det[np.argmax(t2)] == pytest.approx(center, abs=20.0)
        assert t2.max() > 1.0
        assert det[np.argmin(t2)] < 0

    def test_passivity_dissipative_case(self, rng):
        det = np.linspace(-300, 300, 2001)
        for _ in range(5):
            rates = CouplingRates(gamma_1d=float(rng.uniform(0, 3)), j_1d=0.0,
                                  gamma_prime=float(rng.uniform(0.5, 3)))
            x = tuple(rng.uniform(-6000, 6000, size=4))
            config = AtomConfiguration(x, float(rng.uniform(0, 1e-4)), A)
            tb = np.abs(transmission_bright(det, rates, config)) ** 2
            te = np.abs(transmission_exact(det, rates,
                                           build_coupling_matrix(rates, config))) ** 2
            assert tb.max() <= 1 + 1e-12
            assert te.max() <= 1 + 1e-12


class TestCqedRates:
    def test_ratio_symmetry_point(self):
        r = cqed_rates(60.0, 60.0, 1.0)
        assert r.j_1d == pytest.approx(r.gamma_1d, rel=1e-14)

    def test_paper_band_value(self):
        r = cqed_rates(193.0, 60.0, 1.0)
        assert r.ratio == pytest.approx(60.0 / 193.0, rel=1e-12)
        assert 0.30 - 0.04 < r.ratio < 0.30 + 0.04

    def test_sign_structure(self):
        plus = cqed_rates(80.0, 60.0, 2.0)
        minus = cqed_rates(-80.0, 60.0, 2.0)
        assert plus.j_1d == pytest.approx(-minus.j_1d, rel=1e-14)
        assert plus.gamma_1d == pytest.approx(minus.gamma_1d, rel=1e-14)

    def test_zero_detuning_flag(self):
        r = cqed_rates(0.0, 60.0, 1.0)
        assert r.j_1d == 0.0 and not r.ratio_defined
        assert np.isnan(r.ratio)

    def test_invalid_linewidth(self):
        with pytest.raises(InputError):
            cqed_rates(10.0, 0.0, 1.0)
