"""Coefficient reconstruction for f'' + A f' + B f = 0.

Base pair:  A0 = f*g  and  B0 = -(f'' + A0 f')/f.  At every zero z_k of
f the numerator of B0 vanishes by the interpolation identity
A0(z_k) f'(z_k) + f''(z_k) = 0 (the residues were chosen exactly so),
which makes B0 analytic there; near zeros we therefore switch from the
direct quotient to the removable-singularity expansion

    B0(xi)  = -(f''' + A0' f' + A0 f'')/f'        (L'Hopital at xi)
    B0(z)  ~= B0(xi) + (z - xi) B0'(xi),

with A0(xi) = u f', A0'(xi) = u f''/2 + f' g_r, A0''(xi) = u f'''/3
+ 2 f' g_r' + f'' g_r (g_r the regular part of g at the pole) and
B0'(xi) = N''/(2f') - N' f''/(2 f'^2) for N = -(f'' + A0 f').

Perturbed pair:  A = A0 + c*H*f,  B = B0 - c*H*f', where H is a product
with zeros spread along the negative real axis at -m^{1/rho_H}; the
c*H*f*f' contributions cancel identically in the residual, so the ODE
survives the perturbation for any scale c.

The contour check recovers f''/f'^2 at a zero through the derivative of
1/f' as a Cauchy integral over a circle around the zero.  That identity
requires 1/f' analytic in the punctured disk, which at small block index
can fail at the nominal radius r_k/n_k (the claim behind that radius is
asymptotic in k): the contour is validated by an argument-principle
winding count and halved until the enclosed disk is free of zeros of
f'.  Whether the full-size disk was already zero-free is reported as a
finding, never silently patched.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpc, mpf

from .errors import (
    CancellationError,
    ConfigError,
    NearZeroError,
    ZeroOnContourError,
)
from .interpolation import (
    RationalInterpolant,
    eval_g,
    g_regular_at,
    g_tail_bound,
    residues_from_f,
)
from .logdomain import LogComplex, to_value
from .product import (
    LacunaryConfig,
    derivs_at_zero,
    eval_f,
    f_tail_log_bound,
    log_derivative,
    nearest_zero,
    zero_point,
)


@dataclass(frozen=True)
class HProduct:
    """H(z) = prod_{m<=M} (1 + z / m^{1/rho}); zeros at -m^{1/rho}.

    The truncation is certified on |z| <= M^{1/rho}/2, where the omitted
    log-factors sum to at most |z| * M^{1-1/rho} / (1/rho - 1).
    """

    rho: mpf
    truncation: int
    dps: int

    def zero_modulus(self, m: int) -> mpf:
        with mp.workdps(self.dps):
            return mp.power(m, 1 / self.rho)

    @property
    def max_radius(self) -> mpf:
        with mp.workdps(self.dps):
            return mp.power(self.truncation, 1 / self.rho) / 2

    def tail_log_bound(self, radius) -> mpf:
        with mp.workdps(self.dps):
            inv = 1 / self.rho
            return mpf(radius) * mp.power(self.truncation, 1 - inv) / (inv - 1)

    def eval(self, z, check_domain: bool = True) -> LogComplex:
        from .errors import TailError
        from .logdomain import LOG_ONE, log_add, log_from_value, log_mul

        with mp.workdps(self.dps):
            z = mpc(z)
            if check_domain and abs(z) > self.max_radius:
                raise TailError(
                    f"|z| = {mp.nstr(abs(z), 8)} outside H validity radius "
                    f"{mp.nstr(self.max_radius, 8)}"
                )
            acc = LOG_ONE
            for m in range(1, self.truncation + 1):
                a_m = mp.power(m, 1 / self.rho)
                acc = log_mul(acc, log_add(LOG_ONE, log_from_value(z / a_m)))
            return acc

    def __call__(self, z) -> LogComplex:
        return self.eval(z)


def build_H(rho_H, truncation: int, dps: int = None) -> HProduct:
    from .logdomain import DEFAULT_DPS

    rho = mpf(rho_H)
    if not (0 < rho < mpf("0.5")):
        raise ConfigError(
            f"rho_H must lie in (0, 1/2) for the constructive positive-indicator "
            f"product, got {rho}"
        )
    if truncation < 1:
        raise ConfigError("H truncation must be >= 1")
    return HProduct(rho=rho, truncation=int(truncation), dps=dps or DEFAULT_DPS)


@dataclass(frozen=True)
class CoefficientSystem:
    cfg: LacunaryConfig
    rat: RationalInterpolant
    h: HProduct | None
    c_scale: mpf
    near_zero_delta: mpf
    # Order of H above the convergence exponent of the zeros is what the
    # regular-growth conclusion needs; recorded, not enforced (the ODE
    # residual identity holds either way).
    theorem_hypothesis_met: bool | None

    @property
    def dps(self) -> int:
        return self.cfg.dps


def make_system(
    cfg: LacunaryConfig,
    rho_H=None,
    h_truncation: int = 64,
    c_scale=1,
    near_zero_delta=mpf("1e-8"),
    rat: RationalInterpolant | None = None,
) -> CoefficientSystem:
    with mp.workdps(cfg.dps):
        delta = mpf(near_zero_delta)
        lo = mp.power(10, -mpf(cfg.dps) / 2)
        if not (lo <= delta <= mpf("1e-4")):
            raise ConfigError(
                f"near_zero_delta must lie in [10^-{cfg.dps // 2}, 1e-4], got {delta}"
            )
        h = None
        hypothesis = None
        if rho_H is not None:
            h = build_H(rho_H, h_truncation, dps=cfg.dps)
            hypothesis = bool(mpf(rho_H) > cfg.rho_f)
        if rat is None:
            rat = residues_from_f(cfg)
        return CoefficientSystem(
            cfg=cfg,
            rat=rat,
            h=h,
            c_scale=mpf(c_scale),
            near_zero_delta=delta,
            theorem_hypothesis_met=hypothesis,
        )


# ---------------------------------------------------------------------------
# A0 and B0


def _pole_threshold(sys: CoefficientSystem) -> mpf:
    return mp.power(10, -mpf(sys.dps) / 2)


def eval_A0(sys: CoefficientSystem, z) -> mpc:
    """A0(z) = f(z) g(z); at zeros of f the removable value u_k f'(z_k)."""
    with mp.workdps(sys.dps):
        z = mpc(z)
        k, m, _, rel = nearest_zero(sys.cfg, z)
        if rel < _pole_threshold(sys):
            i = sys.rat.pole_index(k, m)
            f1 = derivs_at_zero(sys.cfg, k, m, order=1)[0]
            return sys.rat.residues[i] * to_value(f1)
        return to_value(eval_f(sys.cfg, z)) * eval_g(sys.rat, z)


def _f_with_derivatives(sys: CoefficientSystem, z: mpc) -> tuple[mpc, mpc, mpc]:
    """(f, f', f'') away from zeros, assembled from the log-derivative sums."""
    f = to_value(eval_f(sys.cfg, z))
    l1 = log_derivative(sys.cfg, z, order=1)
    l2 = log_derivative(sys.cfg, z, order=2)
    return f, f * l1, f * (l1 * l1 + l2)


def eval_B0_direct(sys: CoefficientSystem, z) -> mpc:
    """B0 by the defining quotient; monitors the cancellation in f'' + A0 f'."""
    with mp.workdps(sys.dps):
        z = mpc(z)
        f, fp, fpp = _f_with_derivatives(sys, z)
        a0 = f * eval_g(sys.rat, z)
        num = fpp + a0 * fp
        scale = max(abs(fpp), abs(a0 * fp))
        if scale > 0 and num != 0:
            lost = mp.log(scale / abs(num), 10)
            if lost > mpf(sys.dps) / 2:
                raise CancellationError(
                    f"B0 quotient lost {float(lost):.1f} digits at z={z}; "
                    "the near-zero switch radius is too small",
                    digits_lost=float(lost),
                )
        return -num / f


def eval_B0_series(sys: CoefficientSystem, z) -> mpc:
    """B0 near a zero: removable value at the nearest zero plus one Taylor step."""
    with mp.workdps(sys.dps):
        z = mpc(z)
        k, m, _, _ = nearest_zero(sys.cfg, z)
        xi = zero_point(sys.cfg, k, m)
        i = sys.rat.pole_index(k, m)
        u = sys.rat.residues[i]
        f1, f2, f3, f4 = (to_value(v) for v in derivs_at_zero(sys.cfg, k, m, order=4))
        g_r, g_rp = g_regular_at(sys.rat, i)
        a0 = u * f1
        a0p = u * f2 / 2 + f1 * g_r
        a0pp = u * f3 / 3 + 2 * f1 * g_rp + f2 * g_r
        n1 = -(f3 + a0p * f1 + a0 * f2)
        n2 = -(f4 + a0pp * f1 + 2 * a0p * f2 + a0 * f3)
        b0 = n1 / f1
        b0p = n2 / (2 * f1) - n1 * f2 / (2 * f1 * f1)
        return b0 + (z - xi) * b0p


def eval_B0(sys: CoefficientSystem, z) -> mpc:
    """B0(z), switching to the removable-singularity series within
    ``near_zero_delta`` (relative) of a zero."""
    with mp.workdps(sys.dps):
        z = mpc(z)
        _, _, _, rel = nearest_zero(sys.cfg, z)
        if rel < sys.near_zero_delta:
            return eval_B0_series(sys, z)
        return eval_B0_direct(sys, z)


def _f_fp_anywhere(sys: CoefficientSystem, z: mpc) -> tuple[mpc, mpc]:
    k, m, _, rel = nearest_zero(sys.cfg, z)
    if rel < _pole_threshold(sys):
        f = to_value(eval_f(sys.cfg, z, strict=False))
        fp = to_value(derivs_at_zero(sys.cfg, k, m, order=1)[0])
        return f, fp
    f = to_value(eval_f(sys.cfg, z))
    return f, f * log_derivative(sys.cfg, z, order=1)


def eval_AB(sys: CoefficientSystem, z) -> tuple[mpc, mpc]:
    """(A, B) = (A0 + c H f, B0 - c H f')."""
    if sys.h is None:
        raise ConfigError("no H configured: build the system with rho_H set")
    with mp.workdps(sys.dps):
        z = mpc(z)
        hval = to_value(sys.h.eval(z))
        f, fp = _f_fp_anywhere(sys, z)
        a = eval_A0(sys, z) + sys.c_scale * hval * f
        b = eval_B0(sys, z) - sys.c_scale * hval * fp
        return a, b


# ---------------------------------------------------------------------------
# residual


def residual(sys: CoefficientSystem, z, which: str = "perturbed", c_scale=None) -> mpf:
    """Relative ODE residual |f'' + A f' + B f| / (|f''| + |A f'| + |B f|).

    ``which`` = 'base' uses (A0, B0); 'perturbed' uses (A, B) with the
    system's (or an overriding) c_scale.  Exact zero is unattainable;
    the honest target is the rounding floor quantified by
    :func:`residual_tolerance`.
    """
    if which not in ("base", "perturbed"):
        raise ConfigError(f"which must be 'base' or 'perturbed', got {which!r}")
    with mp.workdps(sys.dps):
        z = mpc(z)
        _, _, _, rel = nearest_zero(sys.cfg, z)
        if rel < sys.near_zero_delta:
            raise NearZeroError(
                "residual sampling point within near_zero_delta of a zero"
            )
        f, fp, fpp = _f_with_derivatives(sys, z)
        a = f * eval_g(sys.rat, z)
        b = -(fpp + a * fp) / f
        if which == "perturbed":
            if sys.h is None:
                raise ConfigError("no H configured: build the system with rho_H set")
            c = sys.c_scale if c_scale is None else mpf(c_scale)
            hval = to_value(sys.h.eval(z))
            a = a + c * hval * f
            b = b - c * hval * fp
        num = fpp + a * fp + b * f
        den = abs(fpp) + abs(a * fp) + abs(b * f)
        return abs(num) / den


def residual_tolerance(sys: CoefficientSystem, radius) -> mpf:
    """10^(40-P) plus ten times the truncation-tail allowances at this radius."""
    with mp.workdps(sys.dps):
        tails = mpf(0)
        bound = f_tail_log_bound(sys.cfg, radius)
        if bound > mpf("-inf"):
            tails += mp.exp(bound)
        tails += g_tail_bound(sys.rat, radius)
        # H needs no allowance: A and B are defined with the truncated H,
        # so its omitted factors cancel from the residual identically.
        return mp.power(10, 40 - mpf(sys.dps)) + 10 * tails


# ---------------------------------------------------------------------------
# interpolation identity (the removable-singularity certificate)


def interpolation_identity_residuals(
    sys: CoefficientSystem, per_block_cap: int = 64
) -> list[tuple[int, int, mpf]]:
    """|A0(z_k) f'(z_k) + f''(z_k)| / |f''(z_k)| at every (subsampled) zero.

    A0 at a zero is its removable value u_k f'(z_k) with the *stored*
    residue, while f' and f'' are recomputed fresh by factor extraction,
    so a corrupted residue shows up directly.  Blocks larger than
    ``per_block_cap`` are strided down to at most that many zeros.
    """
    out = []
    with mp.workdps(sys.dps):
        for k, (_, n) in enumerate(sys.cfg.blocks, start=1):
            if n <= per_block_cap:
                indices = range(n)
            else:
                stride = n // per_block_cap
                indices = list(range(0, n, stride))[:per_block_cap]
            for m in indices:
                i = sys.rat.pole_index(k, m)
                u = sys.rat.residues[i]
                f1, f2 = (to_value(v) for v in derivs_at_zero(sys.cfg, k, m, order=2))
                value = abs(u * f1 * f1 + f2) / abs(f2)
                out.append((k, m, value))
    return out


def reciprocal_derivative_fd(sys: CoefficientSystem, k: int, m: int) -> mpc:
    """-(1/f')' at the zero by central differences: equals f''/f'^2.

    Step 10^(-P/3) relative balances the h^2 truncation against the
    ~10^-P rounding in the quotient.
    """
    with mp.workdps(sys.dps):
        xi = zero_point(sys.cfg, k, m)
        h = abs(xi) * mp.power(10, -mpf(sys.dps) / 3)

        def inv_fp(z):
            f = to_value(eval_f(sys.cfg, z))
            return 1 / (f * log_derivative(sys.cfg, z, order=1))

        return -(inv_fp(xi + h) - inv_fp(xi - h)) / (2 * h)


# ---------------------------------------------------------------------------
# Cauchy contour cross-check


@dataclass(frozen=True)
class CauchyRatio:
    direct: mpc
    contour: mpc
    radius: mpf
    nominal_radius: mpf
    full_radius_zero_free: bool
    winding_at_full_radius: int
    halvings: int
    min_abs_fprime: mpf
    chain_bound: mpf
    nodes: int

    @property
    def agreement(self) -> mpf:
        return abs(self.direct - self.contour) / abs(self.direct)


def _fprime_on_circle(cfg: LacunaryConfig, xi: mpc, radius: mpf, nodes: int) -> list[mpc]:
    """f' at half-step-offset uniform nodes (offset keeps nodes off the real
    zeros that neighbouring blocks may place exactly on the circle)."""
    vals = []
    for j in range(nodes):
        w = mp.expjpi((2 * mpf(j) + 1) / nodes)
        z = xi + radius * w
        f = to_value(eval_f(cfg, z))
        fp = f * log_derivative(cfg, z, order=1)
        if fp == 0:
            raise ZeroOnContourError(
                f"f' vanishes on the contour around {mp.nstr(xi, 8)} at node {j}"
            )
        vals.append(fp)
    return vals


def winding_number(values: list[mpc]) -> int:
    """Winding of a closed discrete loop; nodes must be dense enough that
    consecutive arguments move by less than pi/2."""
    from .errors import QuadratureError
    from .logdomain import principal_arg

    total = mpf(0)
    n = len(values)
    for i in range(n):
        d = principal_arg(mp.arg(values[(i + 1) % n]) - mp.arg(values[i]))
        if abs(d) > mp.pi / 2:
            raise QuadratureError(
                "winding nodes too sparse: argument jumped by more than pi/2"
            )
        total += d
    return int(mp.nint(total / (2 * mp.pi)))


def cauchy_ratio(
    cfg: LacunaryConfig,
    k: int,
    m: int,
    nodes: int = 256,
    max_halvings: int = 8,
) -> CauchyRatio:
    """f''/f'^2 at a zero, directly and via the Cauchy integral for (1/f')'.

    The quadrature contour starts at the nominal disk radius r_k/n_k and
    is halved until the argument-principle winding of f' along it is
    zero (no zeros of f' enclosed), which is exactly the hypothesis the
    integral identity needs.  The result records whether the nominal
    radius already satisfied it.
    """
    with mp.workdps(cfg.dps):
        r_k, n_k = cfg.block(k)
        xi = zero_point(cfg, k, m)
        f1, f2 = (to_value(v) for v in derivs_at_zero(cfg, k, m, order=2))
        direct = f2 / (f1 * f1)

        def winding_refined(radius: mpf) -> tuple[int, list[mpc] | None]:
            """Winding with node doubling; returns the f' samples when they
            were taken at exactly the quadrature node count."""
            from .errors import QuadratureError

            n = nodes
            while True:
                vals = _fprime_on_circle(cfg, xi, radius, n)
                try:
                    return winding_number(vals), (vals if n == nodes else None)
                except QuadratureError:
                    n *= 2
                    if n > max(1024, 4 * nodes):
                        raise

        nominal = r_k / n_k
        radius = nominal
        winding_full = None
        halvings = 0
        while True:
            w, vals = winding_refined(radius)
            if winding_full is None:
                winding_full = w
            if w == 0:
                break
            halvings += 1
            if halvings > max_halvings:
                raise ZeroOnContourError(
                    f"no zero-free contour found around {mp.nstr(xi, 8)} after "
                    f"{max_halvings} halvings"
                )
            radius = radius / 2
        if vals is None:
            vals = _fprime_on_circle(cfg, xi, radius, nodes)

        total = mpc(0)
        inv_max = mpf(0)
        inv_min = mpf("inf")
        for j, fp in enumerate(vals):
            w_dir = mp.expjpi((2 * mpf(j) + 1) / nodes)
            total += 1 / (radius * w_dir * fp)
            mag = abs(fp)
            inv_max = max(inv_max, 1 / mag)
            inv_min = min(inv_min, mag)
        integral = total / nodes
        return CauchyRatio(
            direct=direct,
            contour=-integral,
            radius=radius,
            nominal_radius=nominal,
            full_radius_zero_free=(winding_full == 0),
            winding_at_full_radius=winding_full,
            halvings=halvings,
            min_abs_fprime=inv_min,
            chain_bound=inv_max / radius,
            nodes=nodes,
        )
