"""Growth measurement: max modulus, characteristic functions, order and
indicator scans, and the regular-growth violation witness.

Two evaluation regimes coexist:

- direct evaluation of f (or any callable) on circles inside the
  certified domain, with golden-section refinement of the maximizing
  angle;
- the term-sum formula ln M(r) ~= sum_j ln(1 + (r/r_j)^{n_j}), valid at
  any radius, used for the order/witness scans whose interesting radii
  (r_k up to 2^5040) are far beyond direct evaluation.  The formula is
  an upper bound for ln M(r); the reported correction bounds the gap by
  aligning the dominant block and applying the reverse triangle
  inequality to the rest, so at lacunary spacings dip and peak radii
  carry corrections far below one percent.

The witness compares a_k = ln M(r_k)/r_k^rho (dips, which sink to 0)
with b_k = ln M(e r_k)/(e r_k)^rho (peaks, which stabilize near
e^{-rho}); a persistent gap between them is exactly the failure of
ln|f| / r^rho to converge, outside any admissible exceptional disks.

Exceptional-disk bookkeeping: scans mark samples inside the per-zero
disks of radius r_k/n_k (the scale on which derivative estimates
operate).  The disk-radius budget at scale r must stay below r/10; the
scan computes and flags it per radius rather than assuming it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from mpmath import mp, mpc, mpf

from .coefficients import HProduct, _fprime_on_circle, winding_number
from .errors import ConfigError
from .interpolation import proximity_m
from .logdomain import LogComplex, log_div, log_from_value, to_value
from .product import (
    LacunaryConfig,
    _power_log,
    _ratio_terms,
    eval_f,
    log_derivative,
    nearest_zero,
    zero_point,
)


def _logmag(value) -> mpf:
    if isinstance(value, LogComplex):
        return value.logmag
    mag = abs(mpc(value))
    return mp.log(mag) if mag > 0 else mpf("-inf")


def log_max_modulus(fn, r, n_theta: int = 64, angle_tol=mpf("1e-6")) -> tuple[mpf, mpf]:
    """(max_theta ln|fn(r e^{i theta})|, argmax theta) by grid + golden section."""
    r = mpf(r)
    best_j = 0
    best = mpf("-inf")
    values = []
    for j in range(n_theta):
        theta = 2 * mp.pi * j / n_theta
        v = _logmag(fn(r * mp.expjpi(2 * mpf(j) / n_theta)))
        values.append(v)
        if v > best:
            best, best_j = v, j
    lo = 2 * mp.pi * (best_j - 1) / n_theta
    hi = 2 * mp.pi * (best_j + 1) / n_theta
    phi = (mp.sqrt(5) - 1) / 2

    def h(theta):
        return _logmag(fn(r * mp.exp(mpc(0, 1) * theta)))

    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = h(x1), h(x2)
    while hi - lo > angle_tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = h(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = h(x1)
    theta_star = (lo + hi) / 2
    return max(best, f1, f2), theta_star


def _softplus(y: mpf) -> mpf:
    """ln(1 + e^y), overflow-safe for |y| up to mpf's exponent range."""
    if y > 0:
        return y + mp.log1p(mp.exp(-y))
    return mp.log1p(mp.exp(y))


def log_max_modulus_bound(cfg: LacunaryConfig, r) -> tuple[mpf, mpf]:
    """Term-sum formula for ln M(r) with a two-sided correction bound.

    Returns (sum_j ln(1+(r/r_j)^{n_j}), correction); the true ln M(r)
    lies within [formula - correction, formula].
    """
    with mp.workdps(cfg.dps):
        r = mpf(r)
        if r <= 0:
            raise ConfigError("radius must be positive")
        log_r = mp.log(r)
        total = mpf(0)
        ms = []
        k = 0
        cutoff = -mpf(90) * mp.log(10)
        while True:
            k += 1
            if cfg.rule is None and k > cfg.K:
                break
            r_k, n_k = cfg.block(k)
            y = mpf(n_k) * (log_r - mp.log(r_k))
            total += _softplus(y)
            ms.append(mp.exp(-abs(y)) if y != 0 else mpf(1))
            if k >= cfg.K and y < cutoff:
                break
        # alignment correction: the dominant block can always be rotated to
        # its maximizing angle; every other block then contributes at worst
        # ln((1+m)/(1-m)) of slack around its modulus term
        dominant = max(range(len(ms)), key=lambda i: ms[i])
        correction = mpf(0)
        for i, m_i in enumerate(ms):
            if i == dominant:
                continue
            if m_i >= 1:
                raise ConfigError("two blocks at the same modulus scale")
            correction += mp.log1p(m_i) - mp.log1p(-m_i)
        return total, correction


def counting_N(pole_moduli, r) -> mpf:
    """N(r) = sum_{|z_k| <= r} ln(r / |z_k|) for simple poles, finite at 0."""
    r = mpf(r)
    total = mpf(0)
    for mod in pole_moduli:
        mod = mpf(mod)
        if mod <= r:
            total += mp.log(r / mod)
    return total


def nevanlinna(fn, pole_moduli, r) -> tuple[mpf, mpf, mpf]:
    """(m, N, T) at radius r: proximity by quadrature, counting in closed form."""
    m = proximity_m(fn, r, avoid_moduli=pole_moduli)
    n = counting_N(pole_moduli, r)
    return m, n, m + n


# ---------------------------------------------------------------------------
# order scan and witness


@dataclass(frozen=True)
class OrderScanRow:
    k: int
    kind: str  # 'dip' (r = r_k) or 'peak' (r = e r_k)
    r: mpf
    log_max: mpf
    ratio: mpf | None  # lnln M / ln r, None when ln M <= 1
    correction: mpf


@dataclass(frozen=True)
class OrderScan:
    rows: tuple[OrderScanRow, ...]

    def ratios(self, kind: str) -> list:
        return [row.ratio for row in self.rows if row.kind == kind and row.ratio is not None]


def order_scan(cfg: LacunaryConfig, ks) -> OrderScan:
    """lnln M / ln r at dip radii r_k and peak radii e r_k, by term sums."""
    rows = []
    with mp.workdps(cfg.dps):
        for k in ks:
            r_k, _ = cfg.block(k)
            for kind, r in (("dip", mpf(r_k)), ("peak", mp.e * r_k)):
                log_max, corr = log_max_modulus_bound(cfg, r)
                ratio = mp.log(log_max) / mp.log(r) if log_max > 1 else None
                rows.append(
                    OrderScanRow(k=k, kind=kind, r=r, log_max=log_max, ratio=ratio, correction=corr)
                )
    return OrderScan(rows=tuple(rows))


@dataclass(frozen=True)
class WitnessReport:
    ks: tuple[int, ...]
    a: tuple[mpf, ...]  # ln M(r_k) / r_k^rho
    b: tuple[mpf, ...]  # ln M(e r_k) / (e r_k)^rho
    threshold_factor: mpf
    verdict: str

    @property
    def violation(self) -> bool:
        return self.verdict == "violation"


def crg_witness(cfg: LacunaryConfig, ks, rho=None, threshold_factor=mpf(3)) -> WitnessReport:
    """Dip/peak comparison of ln M(r)/r^rho.

    Verdict 'violation' when max(a) < min(b)/3: along r_k the normalized
    log-maximum provably stays a factor-3 gap below its value along
    e r_k, so it cannot converge to any indicator value.
    """
    with mp.workdps(cfg.dps):
        rho = cfg.rho_f if rho is None else mpf(rho)
        ks = tuple(ks)
        a = []
        b = []
        for k in ks:
            r_k, _ = cfg.block(k)
            dip, _ = log_max_modulus_bound(cfg, r_k)
            peak, _ = log_max_modulus_bound(cfg, mp.e * r_k)
            a.append(dip / mp.power(r_k, rho))
            b.append(peak / mp.power(mp.e * r_k, rho))
        verdict = "violation" if max(a) < min(b) / threshold_factor else "no violation"
        return WitnessReport(
            ks=ks, a=tuple(a), b=tuple(b), threshold_factor=threshold_factor, verdict=verdict
        )


# ---------------------------------------------------------------------------
# indicator scan with exceptional disks


class ZeroDiskFamily:
    """Disks of radius r_k/n_k around every zero of the product."""

    def __init__(self, cfg: LacunaryConfig, scale=mpf(1)):
        self.cfg = cfg
        self.scale = mpf(scale)

    def excluded(self, z) -> bool:
        k, _, dist, _ = nearest_zero(self.cfg, z)
        r_k, n_k = self.cfg.blocks[k - 1]
        return dist <= self.scale * r_k / n_k

    def radii_sum(self, r) -> mpf:
        r = mpf(r)
        total = mpf(0)
        for r_k, n_k in self.cfg.blocks:
            if r_k <= r:
                total += self.scale * n_k * (r_k / mpf(n_k))
        return total


class HZeroDiskFamily:
    """Disks around the negative-axis zeros of H, sized as a fraction of the
    local zero spacing (sum of radii ~ frac * r, so frac <= 1/10 keeps the
    exceptional budget)."""

    def __init__(self, h: HProduct, frac=mpf("0.05")):
        self.h = h
        self.frac = mpf(frac)

    def _radius(self, m: int) -> mpf:
        return self.frac * (self.h.zero_modulus(m + 1) - self.h.zero_modulus(m))

    def excluded(self, z) -> bool:
        z = mpc(z)
        guess = int(mp.power(abs(z), self.h.rho)) if abs(z) > 0 else 1
        for m in range(max(1, guess - 2), min(self.h.truncation, guess + 2) + 1):
            if abs(z + self.h.zero_modulus(m)) <= self._radius(m):
                return True
        return False

    def radii_sum(self, r) -> mpf:
        r = mpf(r)
        total = mpf(0)
        for m in range(1, self.h.truncation + 1):
            if self.h.zero_modulus(m) > r:
                break
            total += self._radius(m)
        return total


@dataclass(frozen=True)
class IndicatorSample:
    r: mpf
    theta: mpf
    log_abs: mpf
    ratio: mpf
    excluded: bool


@dataclass(frozen=True)
class IndicatorScan:
    samples: tuple[IndicatorSample, ...]
    budget: dict
    budget_ok: bool

    def min_ratio(self, include_excluded: bool = False):
        vals = [s.ratio for s in self.samples if include_excluded or not s.excluded]
        return min(vals) if vals else None


def indicator_scan(fn, rho, thetas, radii, exclusion=None) -> IndicatorScan:
    """ln|fn(r e^{i theta})| / r^rho over a (theta, r) grid.

    Samples inside the exceptional disks are kept but marked excluded;
    the per-radius disk budget (sum of radii of disks centered within r,
    vs r/10) is reported and flagged, never silently trusted.
    """
    rho = mpf(rho)
    samples = []
    budget = {}
    budget_ok = True
    for r in radii:
        r = mpf(r)
        if exclusion is not None:
            s = exclusion.radii_sum(r)
            ok = bool(s < r / 10)
            budget[str(r)] = (s, ok)
            budget_ok = budget_ok and ok
        scale = mp.power(r, rho)
        for theta in thetas:
            theta = mpf(theta)
            z = r * mp.exp(mpc(0, 1) * theta)
            value = _logmag(fn(z))
            excluded = bool(exclusion.excluded(z)) if exclusion is not None else False
            samples.append(
                IndicatorSample(
                    r=r, theta=theta, log_abs=value, ratio=value / scale, excluded=excluded
                )
            )
    return IndicatorScan(samples=tuple(samples), budget=budget, budget_ok=budget_ok)


# ---------------------------------------------------------------------------
# composite report


@dataclass(frozen=True)
class GrowthSample:
    r: mpf
    log_max: mpf
    m: mpf
    N: mpf
    T: mpf


@dataclass(frozen=True)
class GrowthReport:
    """One object holding everything a growth run measured: characteristic
    samples, order ratios, indicator samples, the witness, and the flags
    for the structural invariants (N nondecreasing, T = m + N)."""

    samples: tuple[GrowthSample, ...]
    order: OrderScan
    witness: WitnessReport
    indicator: IndicatorScan | None
    pass_flags: dict


def collect_growth_report(
    cfg: LacunaryConfig,
    rat,
    radii_scales=(10, 100, 1000),
    ks=None,
    indicator: IndicatorScan | None = None,
) -> GrowthReport:
    """Assemble characteristic samples of g plus order/witness scans.

    ``rat`` is the rational interpolant whose poles carry the counting
    function; ``ks`` defaults to blocks 2..K (block 1 often has ln M < 1,
    where the order ratio is undefined).
    """
    from .interpolation import eval_g

    with mp.workdps(cfg.dps):
        moduli = [abs(p) for p in rat.poles]
        base = cfg.blocks[-1][0]
        samples = []
        for scale in radii_scales:
            r = mpf(scale) * base
            m, n, t = nevanlinna(
                lambda z: eval_g(rat, z, check_domain=False), moduli, r
            )
            log_max, _ = log_max_modulus_bound(cfg, r)
            samples.append(GrowthSample(r=r, log_max=log_max, m=m, N=n, T=t))
        if ks is None:
            ks = range(2, cfg.K + 1)
        order = order_scan(cfg, ks)
        witness = crg_witness(cfg, ks)
        n_values = [s.N for s in samples]
        flags = {
            "counting_nonnegative": bool(all(s.N >= 0 for s in samples)),
            "counting_nondecreasing": bool(
                all(a <= b for a, b in zip(n_values, n_values[1:]))
            ),
            "characteristic_additive": bool(
                all(abs(s.T - (s.m + s.N)) == 0 for s in samples)
            ),
        }
        if indicator is not None:
            flags["indicator_budget_ok"] = indicator.budget_ok
        return GrowthReport(
            samples=tuple(samples),
            order=order,
            witness=witness,
            indicator=indicator,
            pass_flags=flags,
        )


# ---------------------------------------------------------------------------
# finite-level asymptotics of the product near its k-th circle


@dataclass(frozen=True)
class DiskCheck:
    block: int
    applicable: bool
    reason: str
    winding: int | None
    min_abs_fprime: mpf | None
    zero_free: bool | None


@dataclass(frozen=True)
class AsymptoticsReport:
    k: int
    seed: int
    partial_dev_max: mpf
    partial_bound: mpf
    partial_pass: bool
    logderiv_dev_max: mpf
    logderiv_bound: mpf
    logderiv_pass: bool
    fprime_dev_max: mpf
    fprime_bound: mpf
    fprime_pass: bool
    disks: tuple[DiskCheck, ...]
    disks_pass: bool

    @property
    def passed(self) -> bool:
        return bool(
            self.partial_pass and self.logderiv_pass and self.fprime_pass and self.disks_pass
        )


def _annulus_points(cfg: LacunaryConfig, k: int, n_points: int, seed: int) -> list[mpc]:
    r_k, _ = cfg.block(k)
    rng = random.Random(seed)
    points = []
    attempts = 0
    while len(points) < n_points:
        attempts += 1
        if attempts > 200 * n_points:
            raise ConfigError("annulus sampling kept hitting zero disks")
        radius = r_k * (mpf("0.9") + mpf("0.2") * mpf(rng.random()))
        theta = 2 * mp.pi * mpf(rng.random())
        z = radius * mp.exp(mpc(0, 1) * theta)
        kb, _, dist, _ = nearest_zero(cfg, z)
        r_b, n_b = cfg.blocks[kb - 1]
        if dist <= mpf("1.2") * r_b / n_b:
            continue
        points.append(z)
    return points


def _disk_separation(cfg: LacunaryConfig, j: int) -> tuple[bool, str]:
    r_j, n_j = cfg.block(j)
    if j >= 2:
        r_prev, _ = cfg.block(j - 1)
        if not r_j * (1 - mpf(1) / n_j) > r_prev:
            return False, "disk reaches the previous circle"
    has_next = cfg.rule is not None or j < cfg.K
    if has_next:
        r_next, _ = cfg.block(j + 1)
        if not r_j * (1 + mpf(1) / n_j) < r_next:
            return False, "disk reaches the next circle"
    return True, ""


def verify_thm2_asymptotics(
    cfg: LacunaryConfig,
    k: int,
    seed: int = 0,
    n_points: int = 32,
    contour_nodes: int = 32,
) -> AsymptoticsReport:
    """Finite-level checks of the near-circle behaviour of f at block k.

    (i)   f agrees with its k-block partial product, to the truncation
          tail scale (exactly, when there are no further blocks);
    (ii)  z f'/f agrees with sum_{j<k} n_j plus the k-th term, to the
          scale 2 sum_{j<k} n_j / n_k (deviation measured relative to n_k);
    (iii) |f'| on the boundary of the zero-centered disk of radius
          r_k/n_k matches (n_k/r_k) prod_{j<k} (r_k/r_j)^{n_j} |e^zeta|
          within 5*(sum n_j/n_k + sum (r_j/r_k)^{n_j} + 1/n_k), the
          finite-level error scale of that product form;
    (iv)  for every block whose disk sits strictly between the
          neighbouring circles, the argument-principle winding of f'
          confirms the disk holds no zero of f'.
    """
    if not 1 <= k <= cfg.K:
        raise ConfigError(f"k must be within 1..{cfg.K}")
    with mp.workdps(cfg.dps):
        r_k, n_k = cfg.block(k)
        points = _annulus_points(cfg, k, n_points, seed)

        # (i) partial product
        if cfg.rule is None and k == cfg.K:
            bound_i = mpf(0)
        else:
            r_next, n_next = cfg.block(k + 1)
            bound_i = 2 * mp.exp(mpf(n_next) * (mp.log(mpf("1.1") * r_k) - mp.log(r_next)))
        dev_i = mpf(0)
        for z in points:
            full = eval_f(cfg, z)
            part = eval_f(cfg, z, upto=k)
            dev_i = max(dev_i, abs(to_value(log_div(full, part)) - 1))
        pass_i = bool(dev_i <= bound_i)

        # (ii) log-derivative two-term form; floored at the rounding level,
        # since with no earlier blocks the analytic bound is exactly zero
        sum_prev = sum(n for _, n in cfg.blocks[: k - 1])
        bound_ii = 2 * mpf(sum_prev) / n_k + mp.power(10, -(mpf(cfg.dps) - 10))
        dev_ii = mpf(0)
        for z in points:
            lhs = z * log_derivative(cfg, z, order=1)
            s_k, _, _ = _ratio_terms(_power_log(log_from_value(z), r_k, n_k))
            rhs = mpf(sum_prev) + mpf(n_k) * s_k
            dev_ii = max(dev_ii, abs(lhs - rhs) / n_k)
        pass_ii = bool(dev_ii <= bound_ii)

        # (iii) |f'| on the disk boundary against the product form
        xi = zero_point(cfg, k, 0)
        radius = r_k / mpf(n_k)
        vals = _fprime_on_circle(cfg, xi, radius, contour_nodes)
        log_prefactor = sum(
            (mpf(n_j) * (mp.log(r_k) - mp.log(r_j)) for r_j, n_j in cfg.blocks[: k - 1]),
            mpf(0),
        )
        prefactor = mp.exp(log_prefactor) * n_k / r_k
        dev_iii = mpf(0)
        for j, fp in enumerate(vals):
            zeta = mp.expjpi((2 * mpf(j) + 1) / contour_nodes)
            form = prefactor * mp.exp(zeta.real)
            dev_iii = max(dev_iii, abs(abs(fp) / form - 1))
        sum_ratios = sum(
            (mp.power(r_j / r_k, n_j) for r_j, n_j in cfg.blocks[: k - 1]), mpf(0)
        )
        bound_iii = 5 * (mpf(sum_prev) / n_k + sum_ratios + mpf(1) / n_k)
        if cfg.rule is not None or k < cfg.K:
            bound_iii += bound_i
        pass_iii = bool(dev_iii <= bound_iii)

        # (iv) zero-free disks, block by block where the separation holds
        disks = []
        any_applicable = False
        all_zero_free = True
        for j in range(1, k + 1):
            ok, reason = _disk_separation(cfg, j)
            if not ok:
                disks.append(
                    DiskCheck(
                        block=j,
                        applicable=False,
                        reason=reason,
                        winding=None,
                        min_abs_fprime=None,
                        zero_free=None,
                    )
                )
                continue
            any_applicable = True
            r_j, n_j = cfg.block(j)
            xi_j = zero_point(cfg, j, 0)
            fp_vals = _fprime_on_circle(cfg, xi_j, r_j / mpf(n_j), max(contour_nodes, 64))
            w = winding_number(fp_vals)
            min_fp = min(abs(v) for v in fp_vals)
            zero_free = bool(w == 0 and min_fp > 0)
            all_zero_free = all_zero_free and zero_free
            disks.append(
                DiskCheck(
                    block=j,
                    applicable=True,
                    reason="",
                    winding=w,
                    min_abs_fprime=min_fp,
                    zero_free=zero_free,
                )
            )
        disks_pass = bool(any_applicable and all_zero_free)

        return AsymptoticsReport(
            k=k,
            seed=seed,
            partial_dev_max=dev_i,
            partial_bound=bound_i,
            partial_pass=pass_i,
            logderiv_dev_max=dev_ii,
            logderiv_bound=bound_ii,
            logderiv_pass=pass_ii,
            fprime_dev_max=dev_iii,
            fprime_bound=bound_iii,
            fprime_pass=pass_iii,
            disks=tuple(disks),
            disks_pass=disks_pass,
        )
