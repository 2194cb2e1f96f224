"""Growth scans: max modulus, characteristic functions, order/witness/indicator."""

import pytest
from mpmath import mp, mpf

from lacunary import config_from_blocks, make_schedule
from lacunary.coefficients import build_H
from lacunary.growth import (
    HZeroDiskFamily,
    ZeroDiskFamily,
    counting_N,
    crg_witness,
    indicator_scan,
    log_max_modulus,
    log_max_modulus_bound,
    nevanlinna,
    order_scan,
    verify_thm2_asymptotics,
)
from lacunary.interpolation import eval_g, residues_from_f
from lacunary.product import eval_f, eval_f_scan

from helpers import rel_err


@pytest.fixture(scope="module")
def factorial_cfg():
    mp.dps = 100
    return make_schedule(0.5, 4, "factorial")


class TestLogMaxModulus:
    def test_one_minus_z_squared(self):
        cfg = config_from_blocks([(1, 2)])
        value, theta = log_max_modulus(lambda z: eval_f(cfg, z), 2)
        assert rel_err(value, mp.log(5)) < mpf("1e-10")
        # maximum sits at +-i directions
        assert min(abs(theta - mp.pi / 2), abs(theta - 3 * mp.pi / 2)) < mpf("1e-5")

    def test_scaled_single_block(self):
        cfg = config_from_blocks([(4, 2)])
        value, _ = log_max_modulus(lambda z: eval_f(cfg, z), 8)
        assert rel_err(value, mp.log(5)) < mpf("1e-10")

    def test_term_sum_matches_direct_evaluation(self, factorial_cfg):
        """Formula vs golden-section search at r = e*r_3: inside 1 percent,
        and inside the formula's own reported correction."""
        r = mp.e * 64
        formula, corr = log_max_modulus_bound(factorial_cfg, r)
        direct, _ = log_max_modulus(lambda z: eval_f(factorial_cfg, z), r, n_theta=128)
        assert abs(formula - direct) / direct < mpf("0.01")
        assert direct <= formula
        assert formula - direct <= corr


class TestNevanlinna:
    def test_counting_closed_form(self):
        # N(e, poles at +-1) = 2 ln(e) = 2
        assert rel_err(counting_N([1, 1], mp.e), 2) < mpf("1e-95")
        assert counting_N([1, 1], mpf("0.5")) == 0

    def test_nonnegative_proximity(self):
        cfg = config_from_blocks([(1, 2)])
        m, n, t = nevanlinna(lambda z: eval_f(cfg, z), [1, 1], 5)
        assert m >= 0
        assert t == m + n

    def test_characteristic_vs_counting_for_g(self, factorial_cfg):
        """|T(r,g) - N(r,g)| = m(r,g) < 0.05 at r = 100 r_3 for K=3."""
        cfg = make_schedule(0.5, 3, "factorial")
        rat = residues_from_f(cfg)
        moduli = [abs(p) for p in rat.poles]
        r = 100 * cfg.blocks[-1][0]
        m, n, t = nevanlinna(lambda z: eval_g(rat, z, check_domain=False), moduli, r)
        assert n > 0
        assert abs(t - n) < mpf("0.05")

    def test_counting_nondecreasing(self):
        moduli = [1, 2, 4, 8]
        values = [counting_N(moduli, r) for r in (mpf("0.5"), 1, 3, 10, 100)]
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestOrderScan:
    def test_peak_ratios_in_band_and_converging(self, factorial_cfg):
        scan = order_scan(factorial_cfg, range(4, 8))
        peaks = scan.ratios("peak")
        assert len(peaks) == 4
        for ratio in peaks:
            assert mpf("0.40") <= ratio <= mpf("0.70")
        gaps = [abs(r - mpf("0.5")) for r in peaks]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_dip_ratios_strictly_decreasing(self, factorial_cfg):
        scan = order_scan(factorial_cfg, range(4, 8))
        dips = scan.ratios("dip")
        assert all(a > b for a, b in zip(dips, dips[1:]))
        assert dips[0] < mpf("0.31")

    def test_single_block_ratios_decay(self):
        """Polynomial-like config: lnln M / ln r decreasing toward 0."""
        cfg = config_from_blocks([(4, 2)])
        ratios = []
        for r in (mpf(100), mpf(10) ** 4, mpf(10) ** 8):
            log_max, _ = log_max_modulus_bound(cfg, r)
            ratios.append(mp.log(log_max) / mp.log(r))
        assert ratios[0] > ratios[1] > ratios[2]

    def test_frozen_peak_value(self, factorial_cfg):
        """ln M(e r_4) ~ n_4 + sum_{j<4} n_j (1 + ln(r_4/r_j)) ~ 4253.25."""
        scan = order_scan(factorial_cfg, [4])
        peak_row = [row for row in scan.rows if row.kind == "peak"][0]
        expected = 4096 + sum(
            n * (1 + (24 - e) * mp.log(2)) for n, e in ((1, 1), (2, 2), (8, 6))
        )
        assert abs(peak_row.log_max - expected) < mpf("0.01")
        assert mpf("4253") < peak_row.log_max < mpf("4254")


class TestWitness:
    def test_factorial_violation(self, factorial_cfg):
        rep = crg_witness(factorial_cfg, range(4, 8))
        assert rep.verdict == "violation"
        assert rep.a[1] < mpf("0.05")  # a_5
        assert all(x1 > x2 for x1, x2 in zip(rep.a, rep.a[1:]))
        for bk in rep.b:
            assert mpf("0.3") <= bk <= mpf("1.5")
        # b stabilizes near e^{-1/2}
        assert abs(rep.b[-1] - mp.exp(mpf("-0.5"))) < mpf("1e-3")

    def test_dip_to_peak_separation_grows(self, factorial_cfg):
        """The normalized dip value collapses relative to the peak value
        from block 5 on (the visible growth irregularity)."""
        rep = crg_witness(factorial_cfg, range(5, 8))
        for a_k, b_k in zip(rep.a, rep.b):
            assert b_k / a_k > 5

    def test_single_block_no_violation(self):
        rep = crg_witness(config_from_blocks([(4, 2)]), [1])
        assert rep.verdict == "no violation"
        rep2 = crg_witness(config_from_blocks([(1, 2)]), [1])
        assert rep2.verdict == "no violation"

    def test_verdict_threshold_recorded(self, factorial_cfg):
        rep = crg_witness(factorial_cfg, range(5, 8))
        assert rep.threshold_factor == 3
        assert max(rep.a) < min(rep.b) / rep.threshold_factor


class TestIndicatorScan:
    def test_conjugate_symmetry_of_samples(self, factorial_cfg):
        thetas = [mpf("0.7"), -mpf("0.7")]
        scan = indicator_scan(
            lambda z: eval_f_scan(factorial_cfg, z),
            factorial_cfg.rho_f,
            thetas,
            [mpf(16) * 64],
            exclusion=ZeroDiskFamily(factorial_cfg),
        )
        s1, s2 = scan.samples
        assert abs(s1.log_abs - s2.log_abs) < mpf("1e-80") * max(1, abs(s1.log_abs))

    def test_h_positivity_at_large_radius(self):
        h = build_H(0.25, 64)
        thetas = [2 * mp.pi * j / 72 for j in range(72)]
        scan = indicator_scan(
            h.eval, h.rho, thetas, [mpf(10) ** 6], exclusion=HZeroDiskFamily(h)
        )
        assert scan.budget_ok
        assert scan.min_ratio() > 0

    def test_exclusion_marks_samples_on_zero(self):
        h = build_H(0.25, 64)
        r = h.zero_modulus(20)  # circle through the 20th zero
        scan = indicator_scan(
            h.eval, h.rho, [mp.pi], [r], exclusion=HZeroDiskFamily(h)
        )
        assert scan.samples[0].excluded

    def test_budget_flag_trips_at_dip_radius(self, factorial_cfg):
        """At r = r_3 the block-3 disks alone sum to r_3: budget must flag."""
        fam = ZeroDiskFamily(factorial_cfg)
        scan = indicator_scan(
            lambda z: eval_f_scan(factorial_cfg, z),
            factorial_cfg.rho_f,
            [mpf("0.1")],
            [mpf(64)],
            exclusion=fam,
        )
        assert not scan.budget_ok
        scan_far = indicator_scan(
            lambda z: eval_f_scan(factorial_cfg, z),
            factorial_cfg.rho_f,
            [mpf("0.1")],
            [mpf(16) * 64],
            exclusion=fam,
        )
        assert scan_far.budget_ok

    def test_dip_vs_peak_along_zero_direction(self, factorial_cfg):
        """ln M at r_k vs e r_k differ by a factor > 5 from k = 5 on."""
        for k in (5, 6, 7):
            r_k, _ = factorial_cfg.block(k)
            dip, _ = log_max_modulus_bound(factorial_cfg, r_k)
            peak, _ = log_max_modulus_bound(factorial_cfg, mp.e * r_k)
            assert peak / dip > 5


class TestThm2Asymptotics:
    def test_factorial_k3_all_checks(self, factorial_cfg):
        rep = verify_thm2_asymptotics(factorial_cfg, 3, seed=0)
        assert rep.partial_pass and rep.logderiv_pass and rep.fprime_pass
        assert rep.disks_pass and rep.passed
        by_block = {d.block: d for d in rep.disks}
        assert not by_block[1].applicable
        assert not by_block[2].applicable
        assert by_block[3].applicable and by_block[3].zero_free
        assert by_block[3].winding == 0
        assert by_block[3].min_abs_fprime > 0

    def test_factorial_k4_passes(self, factorial_cfg):
        rep = verify_thm2_asymptotics(factorial_cfg, 4, seed=2, n_points=8)
        assert rep.passed
        by_block = {d.block: d for d in rep.disks}
        assert by_block[4].applicable and by_block[4].zero_free

    def test_two_block_exact_partial_product(self):
        cfg = config_from_blocks([(4, 2), (16, 4)])
        rep = verify_thm2_asymptotics(cfg, 2, seed=1, n_points=8)
        assert rep.partial_dev_max == 0
        assert rep.partial_pass

    def test_doubly_exp_small_block_disk_finding(self):
        """At this scale block 2's disk does contain a zero of f' (the
        asymptotic claim has not kicked in); the check must say so."""
        cfg = config_from_blocks([(4, 2), (16, 4)])
        rep = verify_thm2_asymptotics(cfg, 2, seed=1, n_points=8)
        by_block = {d.block: d for d in rep.disks}
        assert by_block[1].applicable and by_block[1].zero_free
        assert by_block[2].applicable and by_block[2].zero_free is False
        assert by_block[2].winding == 1
        assert not rep.disks_pass

    def test_anchor_config_passes(self):
        rep = verify_thm2_asymptotics(config_from_blocks([(1, 2)]), 1, seed=0, n_points=8)
        assert rep.passed


class TestGrowthReport:
    def test_composite_report_invariants(self):
        from lacunary.growth import collect_growth_report

        cfg = make_schedule(0.5, 3, "factorial")
        rat = residues_from_f(cfg)
        rep = collect_growth_report(cfg, rat)
        assert all(rep.pass_flags.values())
        assert len(rep.samples) == 3
        ns = [s.N for s in rep.samples]
        assert ns[0] < ns[1] < ns[2]
        assert rep.witness.verdict in ("violation", "no violation")
        assert rep.order.rows


class TestMaxModulusAtPeakRadius:
    def test_term_sum_matches_direct_at_peak_of_block4(self):
        """At r = e r_4 the angular profile is flat to ~e^-4096, so the
        search and the formula agree far inside 1 percent."""
        cfg = make_schedule(0.5, 4, "factorial")
        r = mp.e * cfg.blocks[3][0]
        formula, _ = log_max_modulus_bound(cfg, r)
        direct, _ = log_max_modulus(lambda z: eval_f(cfg, z), r, n_theta=32)
        assert abs(formula - direct) / direct < mpf("0.01")
        assert mpf("4253") < direct < mpf("4254")
