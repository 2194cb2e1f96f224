"""Lacunary product: schedules, evaluation, zeros, factor-extraction derivatives.

Oracles used here are independent of the evaluation path under test:
explicit polynomial expansion evaluated by Horner with exact dyadic
fractions, exact-fraction polynomial differentiation, and central finite
differences of ln f.
"""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpc, mpf

from lacunary import CancellationError, ConfigError, TailError, config_from_blocks, make_schedule, to_value
from lacunary.logdomain import principal_arg
from lacunary.product import (
    derivs_at_zero,
    eval_f,
    eval_f_scan,
    f_tail_log_bound,
    log_derivative,
    nearest_zero,
    zero_count,
    zero_point,
    zeros,
)

from helpers import rel_err


def horner_eval(coeffs, z):
    """Oracle: evaluate a polynomial given by exact Fraction coefficients."""
    acc = mpc(0)
    for c in reversed(coeffs):
        acc = acc * z + mpf(c.numerator) / mpf(c.denominator)
    return acc


def poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def poly_diff(p):
    return [k * c for k, c in enumerate(p)][1:]


def product_poly(blocks):
    """Exact coefficients of prod (1 - (z/r)^n) for small explicit blocks."""
    poly = [Fraction(1)]
    for r, n in blocks:
        factor = [Fraction(0)] * (n + 1)
        factor[0] = Fraction(1)
        factor[n] = -Fraction(1, r) ** n
        poly = poly_mul(poly, factor)
    return poly


class TestSchedules:
    def test_factorial_example(self):
        cfg = make_schedule(0.5, 3, "factorial")
        assert [int(r) for r, _ in cfg.blocks] == [2, 4, 64]
        assert [n for _, n in cfg.blocks] == [1, 2, 8]

    def test_doubly_exp_example(self):
        cfg = make_schedule(0.5, 3, "doubly_exp")
        assert [int(r) for r, _ in cfg.blocks] == [4, 16, 256]
        assert [n for _, n in cfg.blocks] == [2, 4, 16]

    def test_rho_out_of_range(self):
        with pytest.raises(ConfigError):
            make_schedule(1.2, 3, "factorial")
        with pytest.raises(ConfigError):
            make_schedule(0, 3, "factorial")

    def test_unknown_rule(self):
        with pytest.raises(ConfigError):
            make_schedule(0.5, 3, "geometric")

    def test_explicit_too_dense(self):
        # equal multiplicities violate sum_{j<k} n_j <= n_k / 2
        with pytest.raises(ConfigError):
            config_from_blocks([(1, 1), (2, 1), (3, 1)])

    def test_explicit_wrong_multiplicity(self):
        with pytest.raises(ConfigError):
            config_from_blocks([(4, 7)], rho_f=0.5)

    def test_large_k_blocks_exact(self):
        cfg = make_schedule(0.5, 7, "factorial")
        r7, n7 = cfg.blocks[6]
        assert r7 == mpf(2) ** 5040
        assert n7 == 2**2520
        assert cfg.sigma_certificate.total < mpf("inf")

    def test_rule_extension_past_K(self):
        cfg = make_schedule(0.5, 3, "factorial")
        r4, n4 = cfg.block(4)
        assert r4 == 2**24 and n4 == 4096
        explicit = config_from_blocks([(4, 2), (16, 4)])
        with pytest.raises(ConfigError):
            explicit.block(3)

    def test_certificate_partial_sums_bounded(self):
        cfg = make_schedule(0.5, 4, "factorial")
        cert = cfg.sigma_certificate
        assert cert.s == mpf("0.75")
        assert 0 < cert.tail < cert.partial
        assert cert.total < 2


class TestEvalF:
    def test_f_at_origin_is_exactly_one(self):
        for cfg in (
            make_schedule(0.5, 4, "factorial"),
            make_schedule(0.55, 3, "doubly_exp"),
            config_from_blocks([(4, 2), (16, 4)]),
        ):
            out = eval_f(cfg, 0)
            assert out.logmag == 0 and out.arg == 0

    def test_single_block(self):
        cfg = config_from_blocks([(4, 2)])
        assert rel_err(to_value(eval_f(cfg, 2)), mpf("0.75")) < mpf("1e-95")

    def test_two_blocks_against_horner_oracle(self):
        cfg = config_from_blocks([(4, 2), (16, 4)])
        poly = product_poly([(4, 2), (16, 4)])
        val = to_value(eval_f(cfg, 2))
        assert rel_err(val, horner_eval(poly, mpc(2))) < mpf("1e-95")
        assert rel_err(val, mpf("0.74981689453125")) < mpf("1e-95")
        # a few more points, including complex ones
        for z in (mpc("0.5", "1.5"), mpc(-3, 2), mpc(10, -7)):
            assert rel_err(to_value(eval_f(cfg, z)), horner_eval(poly, z)) < mpf("1e-90")

    def test_tail_error_outside_certified_domain(self):
        cfg = make_schedule(0.5, 2, "factorial")  # r_3 = 64
        with pytest.raises(TailError):
            eval_f(cfg, 40)
        with pytest.raises(TailError):
            f_tail_log_bound(cfg, 40)
        bound = f_tail_log_bound(cfg, 16)
        # 2 * (16/64)^8 = 2^-15
        assert rel_err(bound, mp.log(mpf(2) ** -15)) < mpf("1e-30")

    def test_explicit_config_has_no_tail(self):
        cfg = config_from_blocks([(4, 2), (16, 4)])
        assert f_tail_log_bound(cfg, mpf(10) ** 6) == mpf("-inf")
        eval_f(cfg, 1000)  # no TailError

    def test_scan_evaluator_extends_schedule(self):
        cfg = make_schedule(0.5, 2, "factorial")
        big = make_schedule(0.5, 4, "factorial")
        z = mpc(40, 1)
        assert rel_err(to_value(eval_f_scan(cfg, z)), to_value(eval_f(big, z))) < mpf("1e-80")

    def test_conjugate_symmetry(self):
        cfg = make_schedule(0.5, 4, "factorial")
        rng = random.Random(7)
        for _ in range(20):
            z = mpc(rng.uniform(-60, 60), rng.uniform(-60, 60))
            a = eval_f(cfg, z)
            b = eval_f(cfg, mp.conj(z))
            assert abs(a.logmag - b.logmag) < mpf("1e-90") * max(1, abs(a.logmag))
            assert abs(principal_arg(a.arg + b.arg)) < mpf("1e-90")

    def test_near_zero_cancellation_strict_and_lossy(self):
        cfg = config_from_blocks([(4, 2), (16, 4)])
        z = mpf(4) * (1 + mpf(10) ** -98)
        with pytest.raises(CancellationError):
            eval_f(cfg, z)
        lossy = eval_f(cfg, z, strict=False)
        assert lossy.logmag < -90 * mp.log(10)

    def test_numerically_zero_at_zeros(self):
        """At an n_k-th root of unity zero, |f| collapses to rounding level
        relative to the nonvanishing cofactor P(xi) = f'(xi) xi / -n_k."""
        cfg = make_schedule(0.5, 3, "factorial")
        for k in (1, 2, 3):
            r, n = cfg.blocks[k - 1]
            for m in range(min(n, 3)):
                xi = zero_point(cfg, k, m)
                out = eval_f(cfg, xi, strict=False)
                f1 = derivs_at_zero(cfg, k, m)[0]
                cofactor_logmag = f1.logmag + mp.log(r) - mp.log(n)
                assert out.logmag <= cofactor_logmag - (cfg.dps - 10) * mp.log(10)


class TestLogDerivative:
    def test_single_block_closed_form(self):
        cfg = config_from_blocks([(4, 2)])
        val = log_derivative(cfg, 2, order=1)
        assert rel_err(val, mpf(-1) / 3) < mpf("1e-95")

    def test_at_origin(self):
        cfg = config_from_blocks([(4, 2)])
        assert log_derivative(cfg, 0, order=1) == 0
        cfg2 = config_from_blocks([(2, 1), (8, 3)], rho_f=0.5)
        assert rel_err(log_derivative(cfg2, 0, order=1), mpf(-1) / 2) < mpf("1e-95")
        # order-2 limit picks up n=1 and n=2 blocks: -1/4 - 0 for (2,1),(8,3)
        assert rel_err(log_derivative(cfg2, 0, order=2), mpf(-1) / 4) < mpf("1e-95")

    def _fd_log_derivative(self, cfg, z, h):
        up = eval_f(cfg, z + h)
        dn = eval_f(cfg, z - h)
        dlog = (up.logmag - dn.logmag) + mpc(0, 1) * principal_arg(up.arg - dn.arg)
        return dlog / (2 * h)

    def test_against_finite_difference_oracle(self):
        cfg = config_from_blocks([(4, 2), (16, 4)])
        z = mpc(2)
        h = mpf(10) ** (-mp.dps // 4)
        fd = self._fd_log_derivative(cfg, z, h)
        assert rel_err(log_derivative(cfg, z, order=1), fd) < mpf(10) ** (-mp.dps // 4)

    def test_termwise_vs_fd_at_random_points(self):
        """100 seeded points away from zeros, factorial K=3."""
        cfg = make_schedule(0.5, 3, "factorial")
        rng = random.Random(20260810)
        tol = mpf(10) ** (-cfg.dps // 4)
        h_rel = mpf(10) ** (-cfg.dps // 3)
        count = 0
        while count < 100:
            z = mpc(rng.uniform(-100, 100), rng.uniform(-100, 100))
            if abs(z) < mpf("0.5") or abs(z) > 120:
                continue
            _, _, dist, _ = nearest_zero(cfg, z)
            if dist < mpf("0.05") * abs(z):
                continue
            h = abs(z) * h_rel
            fd = self._fd_log_derivative(cfg, z, h)
            assert rel_err(log_derivative(cfg, z, order=1), fd) < tol
            count += 1

    def test_second_order_vs_fd(self):
        cfg = config_from_blocks([(4, 2), (16, 4)])
        z = mpc("2.5", "1.25")
        h = abs(z) * mpf(10) ** (-mp.dps // 3)
        fd = (log_derivative(cfg, z + h) - log_derivative(cfg, z - h)) / (2 * h)
        assert rel_err(log_derivative(cfg, z, order=2), fd) < mpf(10) ** (-mp.dps // 4)

    def test_near_zero_guard(self):
        from lacunary import NearZeroError

        cfg = config_from_blocks([(4, 2)])
        with pytest.raises(NearZeroError):
            log_derivative(cfg, mpf(4) + mpf(10) ** -60)


class TestZeros:
    def test_square_roots_block(self):
        cfg = config_from_blocks([(4, 2)])
        zs = zeros(cfg, 1)
        assert rel_err(zs[0], 4) < mpf("1e-98")
        assert rel_err(zs[1], -4) < mpf("1e-98")

    def test_fourth_roots_block(self):
        cfg = config_from_blocks([(4, 2), (16, 4)])
        zs = zeros(cfg, 2)
        expected = [mpc(16), mpc(0, 16), mpc(-16), mpc(0, -16)]
        for got, want in zip(zs, expected):
            assert abs(got - want) < mpf("1e-95")

    def test_moduli_preserved(self):
        cfg = make_schedule(0.5, 3, "factorial")
        for k in (1, 2, 3):
            r, _ = cfg.blocks[k - 1]
            for xi in zeros(cfg, k):
                assert rel_err(abs(xi), r) < mpf("1e-95")

    def test_zero_count(self):
        assert zero_count(make_schedule(0.5, 3, "factorial")) == 11

    def test_nearest_zero(self):
        cfg = make_schedule(0.5, 3, "factorial")
        k, m, dist, rel = nearest_zero(cfg, mpf("4.001"))
        assert (k, m) == (2, 0)
        assert abs(dist - mpf("0.001")) < mpf("1e-90")
        k, m, dist, _ = nearest_zero(cfg, 64 * mp.expjpi(mpf(2) / 8) * (1 + mpf("1e-30")))
        assert (k, m) == (3, 1)
        assert rel_err(dist, 64 * mpf("1e-30")) < mpf("1e-60")

    def test_nearest_zero_huge_block(self):
        cfg = make_schedule(0.5, 7, "factorial")
        r7 = cfg.blocks[6][0]
        k, m, dist, rel = nearest_zero(cfg, r7 * (1 + mpf("1e-10")))
        assert k == 7 and m == 0
        assert rel_err(rel, mpf("1e-10")) < mpf("1e-60")

    def test_enumeration_cap(self):
        cfg = make_schedule(0.5, 5, "factorial")  # n_5 = 2^60
        with pytest.raises(ConfigError):
            zeros(cfg, 5)


class TestDerivsAtZero:
    def test_one_minus_z_squared(self):
        cfg = config_from_blocks([(1, 2)])
        f1, f2, f3 = (to_value(d) for d in derivs_at_zero(cfg, 1, 0))
        assert rel_err(f1, -2) < mpf("1e-95")
        assert rel_err(f2, -2) < mpf("1e-95")
        assert abs(f3) < mpf("1e-95")

    def test_single_block_prime(self):
        cfg = config_from_blocks([(4, 2)])
        f1 = to_value(derivs_at_zero(cfg, 1, 0)[0])
        assert rel_err(f1, mpf("-0.5")) < mpf("1e-95")

    def test_two_blocks_against_fraction_oracle(self):
        """Exact-fraction polynomial differentiation as the oracle."""
        blocks = [(4, 2), (16, 4)]
        cfg = config_from_blocks(blocks)
        poly = product_poly(blocks)
        d1, d2, d3, d4 = poly, poly_diff(poly), None, None
        d3 = poly_diff(d2)
        d4 = poly_diff(d3)
        d5 = poly_diff(d4)
        f1, f2, f3, f4 = (to_value(v) for v in derivs_at_zero(cfg, 2, 0, order=4))
        assert rel_err(f1, horner_eval(d2, mpc(16))) < mpf("1e-90")
        assert rel_err(f2, horner_eval(d3, mpc(16))) < mpf("1e-90")
        assert rel_err(f3, horner_eval(d4, mpc(16))) < mpf("1e-90")
        assert rel_err(f4, horner_eval(d5, mpc(16))) < mpf("1e-90")
        # frozen values from the oracle
        assert rel_err(f1, mpf("3.75")) < mpf("1e-90")
        assert rel_err(f2, mpf("1.703125")) < mpf("1e-90")
        assert rel_err(f3, mpf("0.462890625")) < mpf("1e-90")

    def test_complex_zero_against_fraction_oracle(self):
        blocks = [(4, 2), (16, 4)]
        cfg = config_from_blocks(blocks)
        poly = product_poly(blocks)
        xi = zero_point(cfg, 2, 1)  # 16i
        f1, f2, f3 = (to_value(v) for v in derivs_at_zero(cfg, 2, 1))
        assert rel_err(f1, horner_eval(poly_diff(poly), xi)) < mpf("1e-90")
        assert rel_err(f2, horner_eval(poly_diff(poly_diff(poly)), xi)) < mpf("1e-90")
        assert rel_err(f3, horner_eval(poly_diff(poly_diff(poly_diff(poly))), xi)) < mpf("1e-88")

    def test_derivative_nonzero_at_every_zero(self):
        cfg = make_schedule(0.5, 3, "factorial")
        for k in (1, 2, 3):
            for m in range(cfg.blocks[k - 1][1]):
                f1 = derivs_at_zero(cfg, k, m)[0]
                assert not f1.is_zero

    def test_factorial_block4_magnitude(self):
        """f'(r_4) ~ (n_4/r_4) * prod_{j<4} (r_4/r_j)^{n_j} = 2^199 * (1+o(1))."""
        cfg = make_schedule(0.5, 4, "factorial")
        f1 = derivs_at_zero(cfg, 4, 0)[0]
        assert rel_err(f1.logmag, 199 * mp.log(2)) < mpf("1e-5")


@given(
    st.floats(min_value=0.1, max_value=0.9),
    st.integers(min_value=1, max_value=5),
    st.sampled_from(["factorial", "doubly_exp"]),
)
@settings(max_examples=40, deadline=None)
def test_schedule_invariants_hold_or_config_rejected(rho, K, rule):
    """Small-k schedules may violate the density surrogate; then the builder
    must reject them.  Accepted configs must satisfy every invariant."""
    try:
        cfg = make_schedule(rho, K, rule)
    except ConfigError:
        return
    rs = [r for r, _ in cfg.blocks]
    ns = [n for _, n in cfg.blocks]
    assert all(a < b for a, b in zip(rs, rs[1:]))
    for k in range(1, K):
        assert 2 * sum(ns[:k]) <= ns[k]
    assert cfg.sigma_certificate.total < mpf("inf")
    assert all(abs(n - mp.power(r, rho)) <= mpf("1.5") for r, n in cfg.blocks)
