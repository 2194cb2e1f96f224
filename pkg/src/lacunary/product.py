"""The lacunary canonical product and its derivatives.

The central object is the entire function

    f(z) = prod_k (1 - (z/r_k)^{n_k}),

with zeros on sparse circles |z| = r_k at the scaled n_k-th roots of
unity, n_k ~ r_k^rho.  A :class:`LacunaryConfig` fixes the target order
``rho_f``, the block schedule (r_k, n_k), the truncation level K and the
working precision.  Rule-based schedules (``factorial``: r_k = 2^(k!),
``doubly_exp``: r_k = 2^(2^k)) treat the K listed blocks as a truncation
of the infinite product, with a certified tail bound on the disk
|z| < r_{K+1}/2; explicit block lists define f as the finite product.

Evaluation is done factor-by-factor in the log domain, powers
(z/r_k)^{n_k} as a single n*log multiplication, so block exponents up to
2^60 and radii up to 2^5040 stay exact.  Derivatives at zeros use factor
extraction: write f = q*P with q the vanishing factor; P and its
derivatives come from termwise logarithmic differentiation of the
remaining (nonvanishing) product.

Configs and zero sets are immutable; every evaluation is a pure
function, so points can be evaluated concurrently without locks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mpmath import mp, mpc, mpf

from .errors import ConfigError, NearZeroError, TailError
from .logdomain import (
    DEFAULT_DPS,
    LOG_ONE,
    LogComplex,
    MIN_DPS,
    log_add,
    log_from_value,
    log_mul,
    log_neg,
    log_pow_int,
    to_value,
)

SCHEDULE_RULES = ("factorial", "doubly_exp")

# Largest block that zero-enumerating operations (zeros, residues) will touch.
ENUMERABLE_BLOCK_LIMIT = 1_000_000


@dataclass(frozen=True)
class SummabilityCertificate:
    """Partial sum and analytic tail bound for sum_k n_k / r_k^s at s = (1+rho)/2."""

    s: mpf
    partial: mpf
    tail: mpf

    @property
    def total(self) -> mpf:
        return self.partial + self.tail


@dataclass(frozen=True)
class LacunaryConfig:
    rho_f: mpf
    blocks: tuple[tuple[mpf, int], ...]
    dps: int
    rule: str | None
    sigma_certificate: SummabilityCertificate

    @property
    def K(self) -> int:
        return len(self.blocks)

    def block(self, k: int) -> tuple[mpf, int]:
        """Block k (1-based); rule-based schedules extend past K on demand."""
        if 1 <= k <= self.K:
            return self.blocks[k - 1]
        if self.rule is None:
            raise ConfigError(f"explicit config has no block {k} (K={self.K})")
        with mp.workdps(self.dps):
            return _rule_block(self.rule, self.rho_f, k)

    def next_radius(self) -> mpf | None:
        """r_{K+1} for rule-based schedules, None for explicit lists."""
        if self.rule is None:
            return None
        return self.block(self.K + 1)[0]


def _rule_radius(rule: str, k: int) -> int:
    if rule == "factorial":
        return 2 ** math.factorial(k)
    if rule == "doubly_exp":
        return 2 ** (2**k)
    raise ConfigError(f"unknown schedule rule {rule!r}")


def _round_power(r, rho) -> int:
    """round(r^rho) computed with enough digits that the rounding is exact."""
    digits = int(mpf(rho) * mp.log(mpf(r), 10)) + 25
    with mp.workdps(max(mp.dps, digits)):
        return int(mp.nint(mp.power(mpf(r), mpf(rho))))


def _rule_block(rule: str, rho, k: int) -> tuple[mpf, int]:
    r = _rule_radius(rule, k)
    return mpf(r), _round_power(r, rho)


def _certificate(rho, blocks, rule, dps) -> SummabilityCertificate:
    """Convergence-exponent surrogate: bound sum_k n_k/r_k^s at s=(1+rho)/2.

    Both rules double the radius at every step, so the tail past r_{K+1}
    is dominated by a geometric series; with n_k <= r_k^rho + 1.5 this
    gives tail <= (r^(rho-s) + 1.5 r^(-s)) / (1 - 2^(rho-s)) at r = r_{K+1}.
    Explicit lists are finite products: zero tail.
    """
    with mp.workdps(dps):
        s = (1 + mpf(rho)) / 2
        partial = mpf(0)
        for r, n in blocks:
            partial += mpf(n) * mp.power(r, -s)
        if rule is None:
            tail = mpf(0)
        else:
            r_next = mpf(_rule_radius(rule, len(blocks) + 1))
            geo = 1 / (1 - mp.power(2, mpf(rho) - s))
            tail = (mp.power(r_next, mpf(rho) - s) + mpf("1.5") * mp.power(r_next, -s)) * geo
        return SummabilityCertificate(s=s, partial=partial, tail=tail)


def _validate_blocks(rho, blocks, dps) -> None:
    if not blocks:
        raise ConfigError("config needs at least one block")
    prev_r = mpf(0)
    n_sum = 0
    for k, (r, n) in enumerate(blocks, start=1):
        if not (r > 0):
            raise ConfigError(f"block {k}: radius must be positive, got {r}")
        if r <= prev_r:
            raise ConfigError(f"block {k}: radii must be strictly increasing")
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"block {k}: multiplicity must be a positive integer, got {n!r}")
        target = _round_power(r, rho)
        if abs(n - target) > 1:
            raise ConfigError(
                f"block {k}: n={n} is not within 1 of round(r^rho)={target}"
            )
        if k >= 2 and 2 * n_sum > n:
            raise ConfigError(
                f"block {k}: schedule too dense, sum of earlier multiplicities "
                f"{n_sum} exceeds n_k/2 = {n}/2"
            )
        prev_r = r
        n_sum += n


def make_schedule(rho_f, K: int, rule: str = "factorial", dps: int = DEFAULT_DPS) -> LacunaryConfig:
    """Build a rule-based config: factorial r_k = 2^(k!), doubly_exp r_k = 2^(2^k)."""
    rho = mpf(rho_f)
    if not (0 < rho < 1):
        raise ConfigError(f"rho_f must lie in (0,1), got {rho}")
    if K < 1:
        raise ConfigError(f"K must be >= 1, got {K}")
    if rule not in SCHEDULE_RULES:
        raise ConfigError(f"rule must be one of {SCHEDULE_RULES}, got {rule!r}")
    if dps < MIN_DPS:
        raise ConfigError(f"precision must be at least {MIN_DPS} digits, got {dps}")
    with mp.workdps(dps):
        blocks = tuple(_rule_block(rule, rho, k) for k in range(1, K + 1))
        _validate_blocks(rho, blocks, dps)
        cert = _certificate(rho, blocks, rule, dps)
        return LacunaryConfig(rho_f=rho, blocks=blocks, dps=dps, rule=rule, sigma_certificate=cert)


def config_from_blocks(blocks, rho_f=mpf("0.5"), dps: int = DEFAULT_DPS) -> LacunaryConfig:
    """Explicit block list [(r_1, n_1), ...]; defines f as the finite product."""
    rho = mpf(rho_f)
    if not (0 < rho < 1):
        raise ConfigError(f"rho_f must lie in (0,1), got {rho}")
    if dps < MIN_DPS:
        raise ConfigError(f"precision must be at least {MIN_DPS} digits, got {dps}")
    with mp.workdps(dps):
        blks = tuple((mpf(r), int(n)) for r, n in blocks)
        _validate_blocks(rho, blks, dps)
        cert = _certificate(rho, blks, None, dps)
        return LacunaryConfig(rho_f=rho, blocks=blks, dps=dps, rule=None, sigma_certificate=cert)


def config_from_dict(d: dict) -> LacunaryConfig:
    """Parse the JSON config schema.

    Rule-based: {"rho_f": 0.5, "rule": "factorial", "K": 4, "precision_digits": 100}
    Explicit:   {"blocks": [[4, 2], [16, 4]], "rho_f": 0.5, "precision_digits": 100}
    """
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    dps = int(d.get("precision_digits", DEFAULT_DPS))
    rho = mpf(str(d.get("rho_f", "0.5")))
    if "blocks" in d:
        return config_from_blocks(d["blocks"], rho_f=rho, dps=dps)
    try:
        rule = d["rule"]
        K = int(d["K"])
    except KeyError as exc:
        raise ConfigError(f"config missing required key {exc}") from exc
    return make_schedule(rho, K, rule=rule, dps=dps)


def config_to_dict(cfg: LacunaryConfig) -> dict:
    if cfg.rule is not None:
        return {
            "rho_f": float(cfg.rho_f),
            "rule": cfg.rule,
            "K": cfg.K,
            "precision_digits": cfg.dps,
        }
    return {
        "rho_f": float(cfg.rho_f),
        "blocks": [[mp.nstr(r, 17), n] for r, n in cfg.blocks],
        "precision_digits": cfg.dps,
    }


# ---------------------------------------------------------------------------
# evaluation


def _power_log(z_log: LogComplex, r: mpf, n: int) -> LogComplex:
    """(z/r)^n in the log domain."""
    base = LogComplex(z_log.logmag - mp.log(r), z_log.arg)
    return log_pow_int(base, n)


def f_tail_log_bound(cfg: LacunaryConfig, radius) -> mpf:
    """ln of the truncation tail bound: sum_{k>K} |z/r_k|^{n_k} <= 2|z/r_{K+1}|^{n_{K+1}}.

    Valid for |z| <= r_{K+1}/2.  Explicit configs are exact: returns -inf.
    """
    if cfg.rule is None:
        return mpf("-inf")
    with mp.workdps(cfg.dps):
        r_next, n_next = cfg.block(cfg.K + 1)
        radius = mpf(radius)
        if radius >= r_next / 2:
            raise TailError(
                f"radius {mp.nstr(radius, 8)} outside certified domain |z| < r_{{K+1}}/2"
            )
        if radius == 0:
            return mpf("-inf")
        return mp.log(2) + mpf(n_next) * (mp.log(radius) - mp.log(r_next))


def _check_domain(cfg: LacunaryConfig, z: mpc) -> None:
    if cfg.rule is None:
        return
    r_next = cfg.next_radius()
    if abs(z) >= r_next / 2:
        raise TailError(
            f"|z| = {mp.nstr(abs(z), 8)} >= r_{{K+1}}/2 = {mp.nstr(r_next / 2, 8)}: "
            "truncation tail not certifiable here"
        )


def eval_f(cfg: LacunaryConfig, z, strict: bool = True, upto: int | None = None) -> LogComplex:
    """f(z) as a LogComplex, each factor formed as 1 + (-(z/r_k)^{n_k}) via log_add.

    Rule-based configs are truncations: the omitted factors are bounded by
    :func:`f_tail_log_bound`, certified on |z| < r_{K+1}/2 (TailError
    beyond).  strict=False downgrades per-factor CancellationError
    (evaluation very near a zero) to the lossy value it carries, for
    diagnostics that only need the magnitude scale.  ``upto`` restricts to
    the first blocks.
    """
    from .errors import CancellationError

    with mp.workdps(cfg.dps):
        z = mpc(z)
        if upto is None:
            _check_domain(cfg, z)
            upto = cfg.K
        z_log = log_from_value(z)
        acc = LOG_ONE
        for r, n in cfg.blocks[:upto]:
            w = _power_log(z_log, r, n)
            try:
                factor = log_add(LOG_ONE, log_neg(w))
            except CancellationError as exc:
                if strict:
                    raise
                factor = exc.result
            acc = log_mul(acc, factor)
        return acc


def eval_f_scan(cfg: LacunaryConfig, z) -> LogComplex:
    """f(z) for growth scans: no domain restriction; rule-based schedules are
    extended with further blocks until the omitted factors are below 10^-40."""
    with mp.workdps(cfg.dps):
        z = mpc(z)
        z_log = log_from_value(z)
        acc = LOG_ONE
        k = 0
        threshold = -mpf(40) * mp.log(10)
        while True:
            k += 1
            if cfg.rule is None and k > cfg.K:
                break
            r, n = cfg.block(k)
            w = _power_log(z_log, r, n)
            acc = log_mul(acc, log_add(LOG_ONE, log_neg(w)))
            if k >= cfg.K and w.logmag < threshold:
                break
        return acc


# ---------------------------------------------------------------------------
# zeros


def zero_count(cfg: LacunaryConfig) -> int:
    return sum(n for _, n in cfg.blocks)


def _check_enumerable(cfg: LacunaryConfig, k: int) -> tuple[mpf, int]:
    if not 1 <= k <= cfg.K:
        raise ConfigError(f"block index {k} outside 1..{cfg.K}")
    r, n = cfg.blocks[k - 1]
    if n > ENUMERABLE_BLOCK_LIMIT:
        raise ConfigError(
            f"block {k} has {n} zeros; enumeration capped at {ENUMERABLE_BLOCK_LIMIT}"
        )
    return r, n


def zero_point(cfg: LacunaryConfig, k: int, m: int) -> mpc:
    """The zero omega * r_k with omega = exp(2 pi i m / n_k)."""
    r, n = _check_enumerable(cfg, k)
    if not 0 <= m < n:
        raise ConfigError(f"zero index {m} outside 0..{n - 1}")
    with mp.workdps(cfg.dps):
        if m == 0:
            return mpc(r)
        return r * mp.expjpi(2 * mpf(m) / n)


def zeros(cfg: LacunaryConfig, k: int, indices=None) -> list[mpc]:
    """All n_k zeros of block k (or the requested subset)."""
    _, n = _check_enumerable(cfg, k)
    if indices is None:
        indices = range(n)
    return [zero_point(cfg, k, m) for m in indices]


def nearest_zero(cfg: LacunaryConfig, z) -> tuple[int, int, mpf, mpf]:
    """(block k, index m, |z - xi|, |z - xi|/r_k) for the closest zero xi.

    Works without enumerating blocks: within block k the nearest zero has
    angular index round(theta * n_k / 2pi), and the chordal distance is
    sqrt((|z|-r_k)^2 + 4 |z| r_k sin^2(dtheta/2)).
    """
    with mp.workdps(cfg.dps):
        z = mpc(z)
        a = abs(z)
        if a == 0:
            r1, _ = cfg.blocks[0]
            return 1, 0, mpf(r1), mpf(1)
        theta = mp.arg(z)
        best = None
        for k, (r, n) in enumerate(cfg.blocks, start=1):
            m = int(mp.nint(theta * n / (2 * mp.pi)))
            dtheta = theta - 2 * mp.pi * mpf(m) / n
            chord2 = (a - r) ** 2 + 4 * a * r * mp.sin(dtheta / 2) ** 2
            dist = mp.sqrt(chord2)
            if best is None or dist < best[2]:
                best = (k, m % n, dist, dist / r)
        return best


# ---------------------------------------------------------------------------
# logarithmic derivatives

# For w = (z/r)^n the term in f'/f is T = (n/z) * w/(w-1); differentiating,
#   T'  = -(n/z^2) (s + n t)
#   T'' = (1/z^3) (2 n s + 3 n^2 t + n^3 y)
# with s = w/(w-1), t = w/(w-1)^2, y = w(w+1)/(w-1)^3, all evaluated through
# v = 1/w when |w| > 1 so that huge powers never meet subtraction head-on.


def _ratio_terms(w_log: LogComplex) -> tuple[mpc, mpc, mpc]:
    if w_log.is_zero:
        return mpc(0), mpc(0), mpc(0)
    if w_log.logmag > 0:
        v = to_value(log_pow_int(w_log, -1))
        d = 1 - v
        s = 1 / d
        t = v / (d * d)
        y = v * (1 + v) / (d * d * d)
    else:
        w = to_value(w_log)
        d = w - 1
        s = w / d
        t = w / (d * d)
        y = w * (w + 1) / (d * d * d)
    return s, t, y


def _near_zero_guard(cfg: LacunaryConfig, z: mpc) -> None:
    k, m, _, rel = nearest_zero(cfg, z)
    if rel < mp.power(10, -mpf(cfg.dps) / 2):
        raise NearZeroError(
            f"z within relative {mp.nstr(rel, 5)} of zero (block {k}, index {m}); "
            f"threshold 10^-{cfg.dps // 2}"
        )


def log_derivative(cfg: LacunaryConfig, z, order: int = 1) -> mpc:
    """f'/f (order 1) or (f'/f)' (order 2), summed termwise over blocks."""
    if order not in (1, 2):
        raise ConfigError(f"order must be 1 or 2, got {order}")
    with mp.workdps(cfg.dps):
        z = mpc(z)
        _check_domain(cfg, z)
        if z == 0:
            # termwise limits: only n=1 blocks reach order 1, n<=2 reach order 2
            if order == 1:
                return mpc(sum(-1 / r for r, n in cfg.blocks if n == 1))
            return mpc(sum(-mpf(n) / (r * r) for r, n in cfg.blocks if n <= 2))
        _near_zero_guard(cfg, z)
        z_log = log_from_value(z)
        total = mpc(0)
        for r, n in cfg.blocks:
            w = _power_log(z_log, r, n)
            s, t, _ = _ratio_terms(w)
            if order == 1:
                total += (n / z) * s
            else:
                total += -(n / (z * z)) * (s + n * t)
        return total


def _log_sums_excluding(cfg: LacunaryConfig, z: mpc, skip: int, order: int) -> list[mpc]:
    """[L1, L1', L1''][:order] for the product with block ``skip`` removed."""
    z_log = log_from_value(z)
    sums = [mpc(0)] * order
    for j, (r, n) in enumerate(cfg.blocks, start=1):
        if j == skip:
            continue
        w = _power_log(z_log, r, n)
        s, t, y = _ratio_terms(w)
        sums[0] += (n / z) * s
        if order >= 2:
            sums[1] += -(n / (z * z)) * (s + n * t)
        if order >= 3:
            sums[2] += (2 * n * s + 3 * mpf(n) ** 2 * t + mpf(n) ** 3 * y) / (z * z * z)
    return sums


def derivative_ratio_bound(cfg: LacunaryConfig, k: int) -> mpf:
    """2e * prod_{j<k} (r_j/r_k)^{n_j}: the finite-k bound on |f''/f'^2| at block-k zeros.

    The factor 2 absorbs the (1+o(1)) corrections at small k; the product is
    formed in the log domain so it survives exponents like 2^-211.
    """
    with mp.workdps(cfg.dps):
        r_k, _ = cfg.block(k)
        log_prod = mpf(0)
        for j in range(1, k):
            r_j, n_j = cfg.block(j)
            log_prod += mpf(n_j) * (mp.log(r_j) - mp.log(r_k))
        return 2 * mp.e * mp.exp(log_prod)


def derivs_at_zero(cfg: LacunaryConfig, k: int, m: int, order: int = 3) -> tuple[LogComplex, ...]:
    """(f'(xi), f''(xi), f'''(xi)[, f''''(xi)]) at the zero xi by factor extraction.

    f = q*P with q = 1-(z/r_k)^{n_k}; at xi the power is exactly 1, so
    q^(i)(xi) = -n(n-1)...(n-i+1)/xi^i, and P, P', P'', P''' come from the
    log-derivative sums of the remaining product, which cannot vanish at xi
    (distinct block moduli).
    """
    if order not in (1, 2, 3, 4):
        raise ConfigError(f"order must be in 1..4, got {order}")
    r, n = _check_enumerable(cfg, k)
    with mp.workdps(cfg.dps):
        xi = zero_point(cfg, k, m)
        q = [None]  # q[i] = q^(i)(xi), i >= 1
        fall = mpf(1)
        for i in range(1, order + 1):
            fall *= n - (i - 1)
            q.append(-fall / xi**i)

        p_log = LOG_ONE
        z_log = log_from_value(xi)
        for j, (rj, nj) in enumerate(cfg.blocks, start=1):
            if j == k:
                continue
            w = _power_log(z_log, rj, nj)
            p_log = log_mul(p_log, log_add(LOG_ONE, log_neg(w)))
        P = to_value(p_log)

        ls = _log_sums_excluding(cfg, xi, k, max(order - 1, 1))
        L1 = ls[0]
        P1 = P * L1
        derivs = [q[1] * P]
        if order >= 2:
            derivs.append(q[2] * P + 2 * q[1] * P1)
        if order >= 3:
            P2 = P * (L1 * L1 + ls[1])
            derivs.append(q[3] * P + 3 * q[2] * P1 + 3 * q[1] * P2)
        if order >= 4:
            P3 = P * (L1**3 + 3 * L1 * ls[1] + ls[2])
            derivs.append(q[4] * P + 4 * q[3] * P1 + 6 * q[2] * P2 + 4 * q[1] * P3)
        return tuple(log_from_value(v) for v in derivs)
