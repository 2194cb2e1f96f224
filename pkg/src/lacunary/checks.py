"""Named verification checks and their machine-readable records.

Each check emits JSON-line records of the form

    {"check": ..., "eq": ..., "zero": [k, m] | null, "point": [re, im] | null,
     "value": ..., "bound": ..., "pass": bool}

where "eq" is the label of the identity or bound being verified:

    3f  interpolation identity  A0(z_k) f'(z_k) + f''(z_k) = 0
    1c  base equation           f'' + A0 f' + B0 f = 0
    1d  perturbed equation      f'' + A f' + B f = 0
    3x  residue summability     sum |u_k / z_k| finite
    1b  derivative-ratio bound  |f''(z_k)/f'(z_k)^2| <= C (and its
        finite-difference route through -(1/f')')
    2f  contour recovery        f''/f'^2 from the Cauchy integral of 1/f'
    2a/2c/2e  near-circle asymptotics of f, zf'/f and |f'|
    3a  proximity decay         m(r, g) -> 0 along growing radii
    3h  characteristic          T(r, g) = N(r, g) + o(1)

Checks whose pass threshold cannot be certified at the configured
precision abort the run with a suggested precision instead of reporting
unearned failures (or unearned passes).
"""

from __future__ import annotations

import random
from mpmath import mp, mpc, mpf

from .coefficients import (
    CoefficientSystem,
    cauchy_ratio,
    interpolation_identity_residuals,
    reciprocal_derivative_fd,
    residual,
    residual_tolerance,
)
from .errors import DivergenceError, PrecisionInsufficient
from .growth import nevanlinna, verify_thm2_asymptotics
from .interpolation import check_summability as summability_report
from .interpolation import eval_g, proximity_m
from .product import derivative_ratio_bound, nearest_zero

CHECK_NAMES = (
    "interpolation",
    "residual",
    "summability",
    "cauchy",
    "asymptotics",
    "proximity",
    "characteristic",
)

INTERPOLATION_THRESHOLD = mpf("1e-40")
RESIDUAL_THRESHOLD = mpf("1e-40")
CONTOUR_AGREEMENT_THRESHOLD = mpf("1e-20")
PROXIMITY_FINAL_THRESHOLD = mpf("0.01")
CHARACTERISTIC_THRESHOLD = mpf("0.05")


def _num(x):
    """Records hold plain floats; magnitudes beyond float range clamp to
    0.0 / inf after the pass verdict has already been decided."""
    if x is None:
        return None
    return float(x)


def record(check, eq, value, bound, passed, zero=None, point=None, extra=None):
    rec = {
        "check": check,
        "eq": eq,
        "zero": list(zero) if zero is not None else None,
        "point": [float(point.real), float(point.imag)] if point is not None else None,
        "value": _num(value),
        "bound": _num(bound),
        "pass": bool(passed),
    }
    if extra:
        rec.update(extra)
    return rec


def required_dps(checks) -> int:
    """Smallest precision at which every selected check's achievable
    tolerance sits a factor 10 below its pass threshold."""
    need = 30
    for name in checks:
        if name == "interpolation":
            # model: achievable identity residual ~ 10^(-P/2)
            need = max(need, 2 * int(-mp.log(INTERPOLATION_THRESHOLD / 10, 10)) + 2)
        elif name == "residual":
            # model: achievable ODE residual ~ 10^(40 - P)
            need = max(need, 40 + int(-mp.log(RESIDUAL_THRESHOLD / 10, 10)) + 1)
        elif name == "cauchy":
            need = max(need, 2 * int(-mp.log(CONTOUR_AGREEMENT_THRESHOLD, 10)))
    return need


def ensure_feasible(dps: int, checks) -> None:
    need = required_dps(checks)
    if dps < need:
        raise PrecisionInsufficient(
            f"precision {dps} cannot certify {'/'.join(checks)}; "
            f"need at least {need} digits",
            suggested_dps=need,
        )


def check_interpolation(sys: CoefficientSystem, seed: int, per_block_cap: int = 64):
    records = []
    rows = interpolation_identity_residuals(sys, per_block_cap=per_block_cap)
    for k, m, value in rows:
        records.append(
            record(
                "interpolation",
                "3f",
                value,
                INTERPOLATION_THRESHOLD,
                value < INTERPOLATION_THRESHOLD,
                zero=(k, m),
            )
        )
    return records


def sample_annulus_points(sys: CoefficientSystem, n_points: int, seed: int):
    """Uniform over the annulus r_1/2 <= |z| <= r_min(K,3), rejecting the
    per-zero disks of radius r_k/n_k (and a relative conditioning margin)."""
    cfg = sys.cfg
    r_lo = cfg.blocks[0][0] / 2
    r_hi = cfg.blocks[min(cfg.K, 3) - 1][0]
    rng = random.Random(seed)
    points = []
    attempts = 0
    while len(points) < n_points:
        attempts += 1
        if attempts > 500 * n_points:
            raise DivergenceError("annulus sampling starved by zero disks")
        radius = mp.sqrt(r_lo**2 + mpf(rng.random()) * (r_hi**2 - r_lo**2))
        z = radius * mp.exp(mpc(0, 2 * mp.pi * mpf(rng.random())))
        k, _, dist, rel = nearest_zero(cfg, z)
        r_k, n_k = cfg.blocks[k - 1]
        if dist <= r_k / mpf(n_k) or rel < 10 * sys.near_zero_delta:
            continue
        points.append(z)
    return points


def check_residual(sys: CoefficientSystem, seed: int, n_points: int = 200):
    records = []
    points = sample_annulus_points(sys, n_points, seed)
    scales = (1, 10) if sys.h is not None else ()
    for z in points:
        tol = residual_tolerance(sys, abs(z))
        bound = max(RESIDUAL_THRESHOLD, tol)
        value = residual(sys, z, "base")
        records.append(
            record("residual", "1c", value, bound, value < bound, point=z)
        )
        for c in scales:
            value = residual(sys, z, "perturbed", c_scale=c)
            records.append(
                record(
                    "residual",
                    "1d",
                    value,
                    bound,
                    value < bound,
                    point=z,
                    extra={"c_scale": c},
                )
            )
    return records


def check_summability(sys: CoefficientSystem, seed: int):
    try:
        rep = summability_report(sys.rat)
    except DivergenceError as exc:
        return [
            record(
                "summability", "3x", None, None, False, extra={"error": str(exc)}
            )
        ]
    return [
        record(
            "summability",
            "3x",
            rep.total,
            None,
            rep.passed,
            extra={
                "included": _num(rep.included),
                "tail": _num(rep.tail),
                "per_block": {str(k): _num(v) for k, v in sorted(rep.per_block.items())},
            },
        )
    ]


def check_cauchy(sys: CoefficientSystem, seed: int, nodes: int = 512):
    cfg = sys.cfg
    records = []
    ratios = []
    fd_tol = mp.power(10, -mpf(sys.dps) / 4)
    for k in range(1, cfg.K + 1):
        cr = cauchy_ratio(cfg, k, 0, nodes=nodes)
        ratios.append(abs(cr.direct))
        bound = derivative_ratio_bound(cfg, k)
        records.append(
            record(
                "cauchy",
                "1b",
                abs(cr.direct),
                bound,
                abs(cr.direct) <= bound,
                zero=(k, 0),
            )
        )
        records.append(
            record(
                "cauchy",
                "2f",
                cr.agreement,
                CONTOUR_AGREEMENT_THRESHOLD,
                cr.agreement < CONTOUR_AGREEMENT_THRESHOLD,
                zero=(k, 0),
                extra={
                    "full_radius_zero_free": cr.full_radius_zero_free,
                    "halvings": cr.halvings,
                    "chain_bound_ok": bool(cr.chain_bound >= abs(cr.direct)),
                },
            )
        )
        fd = reciprocal_derivative_fd(sys, k, 0)
        fd_err = abs(fd - cr.direct) / abs(cr.direct)
        records.append(
            record("cauchy", "1b", fd_err, fd_tol, fd_err < fd_tol, zero=(k, 0),
                   extra={"route": "finite-difference of 1/f'"})
        )
    decreasing = all(a > b for a, b in zip(ratios, ratios[1:]))
    if cfg.K >= 2:
        records.append(
            record(
                "cauchy",
                "2f",
                None,
                None,
                decreasing,
                extra={"property": "blockwise ratios strictly decreasing"},
            )
        )
    return records


def check_asymptotics(sys: CoefficientSystem, seed: int, k: int | None = None):
    cfg = sys.cfg
    if k is None:
        k = cfg.K - 1 if cfg.K >= 2 else 1
    rep = verify_thm2_asymptotics(cfg, k, seed=seed)
    records = [
        record("asymptotics", "2a", rep.partial_dev_max, rep.partial_bound, rep.partial_pass),
        record("asymptotics", "2c", rep.logderiv_dev_max, rep.logderiv_bound, rep.logderiv_pass),
        record("asymptotics", "2e", rep.fprime_dev_max, rep.fprime_bound, rep.fprime_pass),
    ]
    for disk in rep.disks:
        extra = {"applicable": disk.applicable}
        if disk.applicable:
            extra["winding"] = disk.winding
        else:
            extra["reason"] = disk.reason
        records.append(
            record(
                "asymptotics",
                "2c",
                None,
                None,
                disk.zero_free if disk.applicable else True,
                zero=(disk.block, 0),
                extra={"property": "disk free of zeros of f'", **extra},
            )
        )
    records.append(
        record(
            "asymptotics",
            "2c",
            None,
            None,
            rep.disks_pass,
            extra={"property": "zero-free disk confirmed for every applicable block"},
        )
    )
    return records


def check_proximity(sys: CoefficientSystem, seed: int):
    cfg = sys.cfg
    rat = sys.rat
    moduli = sorted({abs(p) for p in rat.poles})
    r_base = cfg.blocks[-1][0]
    values = []
    records = []
    for scale in (10, 100, 1000):
        r = scale * r_base
        m = proximity_m(
            lambda z: eval_g(rat, z, check_domain=False), r, avoid_moduli=moduli
        )
        values.append(m)
        records.append(
            record(
                "proximity",
                "3a",
                m,
                None,
                True,
                extra={"radius_scale": scale},
            )
        )
    nonincreasing = all(a >= b for a, b in zip(values, values[1:]))
    final_ok = values[-1] < PROXIMITY_FINAL_THRESHOLD
    records.append(
        record(
            "proximity",
            "3a",
            values[-1],
            PROXIMITY_FINAL_THRESHOLD,
            nonincreasing and final_ok,
            extra={"property": "m(r,g) nonincreasing with small final value"},
        )
    )
    return records


def check_characteristic(sys: CoefficientSystem, seed: int):
    cfg = sys.cfg
    rat = sys.rat
    moduli = [abs(p) for p in rat.poles]
    r = 100 * cfg.blocks[-1][0]
    m, n, t = nevanlinna(
        lambda z: eval_g(rat, z, check_domain=False), moduli, r
    )
    gap = abs(t - n)
    return [
        record(
            "characteristic",
            "3h",
            gap,
            CHARACTERISTIC_THRESHOLD,
            gap < CHARACTERISTIC_THRESHOLD,
            extra={"m": _num(m), "N": _num(n), "T": _num(t), "radius": _num(r)},
        )
    ]


CHECK_FUNCTIONS = {
    "interpolation": check_interpolation,
    "residual": check_residual,
    "summability": check_summability,
    "cauchy": check_cauchy,
    "asymptotics": check_asymptotics,
    "proximity": check_proximity,
    "characteristic": check_characteristic,
}


def run_checks(sys: CoefficientSystem, checks, seed: int, residual_points: int = 200):
    """Run the named checks; returns (records, all_passed)."""
    ensure_feasible(sys.dps, checks)
    records = []
    for name in checks:
        if name == "residual":
            recs = check_residual(sys, seed, n_points=residual_points)
        else:
            recs = CHECK_FUNCTIONS[name](sys, seed)
        records.extend(recs)
    return records, all(r["pass"] for r in records)
