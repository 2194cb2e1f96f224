"""Command-line front end: construct, verify, scan, report.

Exit codes: 0 all checks passed, 1 a verification check failed, 2 bad
configuration or unreadable input, 3 numerical failure (insufficient
precision, non-convergent quadrature), with a suggested precision
printed when one can be computed.

Config schema (JSON object):

    {"rho_f": 0.5, "rule": "factorial", "K": 4, "precision_digits": 100}
    {"blocks": [[4, 2], [16, 4]], "rho_f": 0.5, "precision_digits": 100}

optionally extended with "rho_H", "H_truncation", "c_scale",
"near_zero_delta".  With a fixed (config, seed, precision) triple every
output file is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys as _sys
from pathlib import Path

from mpmath import mp, mpc, mpf

from . import checks as checks_mod
from .coefficients import make_system
from .errors import (
    CancellationError,
    ConfigError,
    DivergenceError,
    LacunaryError,
    NearPoleError,
    NearZeroError,
    PrecisionError,
    PrecisionInsufficient,
    QuadratureError,
    TailError,
    ZeroOnContourError,
)
from .growth import (
    HZeroDiskFamily,
    ZeroDiskFamily,
    crg_witness,
    indicator_scan,
    order_scan,
)
from .interpolation import RationalInterpolant, check_summability
from .product import (
    LacunaryConfig,
    config_from_dict,
    config_to_dict,
    eval_f_scan,
    zero_count,
    zeros,
)

CONSTRUCT_ENUMERATION_CAP = 8192


def _nstr(x, digits: int = 25) -> str:
    # never reconstruct an existing mpf: mpf(x) rounds to the ambient
    # precision, which silently truncates serialized artifacts
    if not isinstance(x, mp.mpf):
        x = mpf(x)
    return mp.nstr(x, digits)


def _cstr(z, digits: int = 25) -> list[str]:
    z = mpc(z)
    return [_nstr(z.real, digits), _nstr(z.imag, digits)]


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _build(data: dict, precision: int | None):
    if precision is not None:
        data = {**data, "precision_digits": precision}
    cfg = config_from_dict(data)
    return cfg, data


def _build_system(cfg: LacunaryConfig, data: dict, rat=None):
    kwargs = {}
    if "rho_H" in data and data["rho_H"] is not None:
        kwargs["rho_H"] = mpf(str(data["rho_H"]))
        kwargs["h_truncation"] = int(data.get("H_truncation", 64))
    if "c_scale" in data:
        kwargs["c_scale"] = mpf(str(data["c_scale"]))
    if "near_zero_delta" in data:
        kwargs["near_zero_delta"] = mpf(str(data["near_zero_delta"]))
    return make_system(cfg, rat=rat, **kwargs)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n", encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# construct


def cmd_construct(args) -> int:
    data = _load_config(args.config)
    cfg, data = _build(data, args.precision)
    out = _out_dir(args)
    with mp.workdps(cfg.dps):
        return _construct_at_precision(cfg, data, out)


def _construct_at_precision(cfg: LacunaryConfig, data: dict, out: Path) -> int:
    system = _build_system(cfg, data)

    _write_json(out / "config.json", {**config_to_dict(cfg), **_system_extras(data)})

    blocks_payload = []
    for k, (r, n) in enumerate(cfg.blocks, start=1):
        entry = {"k": k, "r": _nstr(r), "n": n}
        if n <= CONSTRUCT_ENUMERATION_CAP:
            entry["zeros"] = [_cstr(z, cfg.dps + 5) for z in zeros(cfg, k)]
        else:
            entry["enumerated"] = False
        blocks_payload.append(entry)
    _write_json(out / "zeros.json", {"count": zero_count(cfg), "blocks": blocks_payload})

    # full-precision serialization: the verify-from-artifact path must
    # round-trip residues without disturbing the interpolation identity
    residues_payload = [
        {"k": k, "m": m, "pole": _cstr(p, cfg.dps + 5), "residue": _cstr(u, cfg.dps + 5)}
        for (k, m), p, u in zip(
            system.rat.pole_ids, system.rat.poles, system.rat.residues
        )
    ]
    _write_json(out / "residues.json", residues_payload)

    summ = check_summability(system.rat)
    cert = cfg.sigma_certificate
    _write_json(
        out / "system.json",
        {
            "precision_digits": cfg.dps,
            "rho_f": _nstr(cfg.rho_f),
            "K": cfg.K,
            "zero_count": zero_count(cfg),
            "c_bound": _nstr(system.rat.c_bound),
            "summability": {
                "included": _nstr(summ.included),
                "tail": None if summ.tail is None else _nstr(summ.tail),
                "total": _nstr(summ.total),
                "passed": summ.passed,
            },
            "sigma_certificate": {
                "s": _nstr(cert.s),
                "partial": _nstr(cert.partial),
                "tail": _nstr(cert.tail),
                "total": _nstr(cert.total),
            },
            "H": None
            if system.h is None
            else {
                "rho_H": _nstr(system.h.rho),
                "truncation": system.h.truncation,
                "max_radius": _nstr(system.h.max_radius),
                "c_scale": _nstr(system.c_scale),
                "theorem_hypothesis_met": system.theorem_hypothesis_met,
            },
        },
    )
    print(f"constructed {zero_count(cfg)} zeros / residues into {out}")
    return 0


def _system_extras(data: dict) -> dict:
    extras = {}
    for key in ("rho_H", "H_truncation", "c_scale", "near_zero_delta"):
        if key in data:
            extras[key] = data[key]
    return extras


# ---------------------------------------------------------------------------
# verify


def _load_artifact_residues(cfg: LacunaryConfig, path: Path) -> RationalInterpolant:
    try:
        entries = json.loads((path / "residues.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read residues from {path}: {exc}") from exc
    if len(entries) != zero_count(cfg):
        raise ConfigError(
            f"artifact holds {len(entries)} residues, config has {zero_count(cfg)} zeros"
        )
    with mp.workdps(cfg.dps):
        poles = []
        residues = []
        ids = []
        total = mpf(0)
        c_bound = mpf(0)
        for e in entries:
            p = mpc(mpf(e["pole"][0]), mpf(e["pole"][1]))
            u = mpc(mpf(e["residue"][0]), mpf(e["residue"][1]))
            poles.append(p)
            residues.append(u)
            ids.append((int(e["k"]), int(e["m"])))
            total += abs(u) / abs(p)
            c_bound = max(c_bound, abs(u))
        from .interpolation import _schedule_tail_sums

        tail_residue, harmonic = _schedule_tail_sums(cfg)
        return RationalInterpolant(
            poles=tuple(poles),
            residues=tuple(residues),
            pole_ids=tuple(ids),
            dps=cfg.dps,
            c_bound=c_bound,
            sum_included=total,
            tail_sum_bound=tail_residue * harmonic,
            tail_residue_bound=tail_residue,
            cfg=cfg,
        )


def cmd_verify(args) -> int:
    data = _load_config(args.config)
    cfg, data = _build(data, args.precision)
    out = _out_dir(args)
    names = _parse_checks(args.checks)

    checks_mod.ensure_feasible(cfg.dps, names)

    with mp.workdps(cfg.dps):
        return _verify_at_precision(cfg, data, out, names, args)


def _verify_at_precision(cfg, data, out, names, args) -> int:
    rat = None
    if args.artifacts:
        rat = _load_artifact_residues(cfg, Path(args.artifacts))
    system = _build_system(cfg, data, rat=rat)

    records, all_passed = checks_mod.run_checks(
        system, names, args.seed, residual_points=args.points
    )
    with open(out / "records.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=False) + "\n")
    failed = [r for r in records if not r["pass"]]
    summary = {
        "checks": list(names),
        "seed": args.seed,
        "precision_digits": cfg.dps,
        "records": len(records),
        "failed": len(failed),
        "passed": all_passed,
    }
    _write_json(out / "verify_summary.json", summary)
    for name in names:
        n_fail = sum(1 for r in failed if r["check"] == name)
        print(f"check {name}: {'PASS' if n_fail == 0 else f'FAIL ({n_fail} records)'}")
    return 0 if all_passed else 1


def _parse_checks(raw: str | None):
    if not raw or raw == "all":
        return checks_mod.CHECK_NAMES
    names = tuple(s.strip() for s in raw.split(",") if s.strip())
    for name in names:
        if name not in checks_mod.CHECK_NAMES:
            raise ConfigError(
                f"unknown check {name!r}; available: {', '.join(checks_mod.CHECK_NAMES)}"
            )
    return names


# ---------------------------------------------------------------------------
# scan


CSV_HEADER = ("r", "theta", "log_abs_f", "ratio", "excluded", "pass")


def _write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)


def _scan_ks(cfg: LacunaryConfig):
    if cfg.rule is not None:
        return range(4, 8)
    return range(1, cfg.K + 1)


def cmd_scan(args) -> int:
    data = _load_config(args.config)
    cfg, data = _build(data, args.precision)
    out = _out_dir(args)
    with mp.workdps(cfg.dps):
        return _scan_at_precision(cfg, data, out, args)


def _scan_at_precision(cfg, data, out, args) -> int:
    kind = args.scan

    if kind == "order":
        scan = order_scan(cfg, _scan_ks(cfg))
        rows = [
            (
                _nstr(row.r),
                "",
                _nstr(row.log_max),
                "" if row.ratio is None else _nstr(row.ratio),
                False,
                True,
            )
            for row in scan.rows
        ]
        _write_csv(out / "order.csv", rows)
        peaks = scan.ratios("peak")
        dips = scan.ratios("dip")
        band = (mpf("0.8") * cfg.rho_f, mpf("1.4") * cfg.rho_f)
        summary = {
            "scan": "order",
            "peak_ratios": [float(x) for x in peaks],
            "dip_ratios": [float(x) for x in dips],
            "band": [float(band[0]), float(band[1])],
            "peaks_in_band": bool(all(band[0] <= x <= band[1] for x in peaks)),
            "dips_strictly_decreasing": bool(
                all(a > b for a, b in zip(dips, dips[1:]))
            ),
        }
        _write_json(out / "order_summary.json", summary)
        print(f"order scan: peaks {summary['peaks_in_band']}, dips {summary['dips_strictly_decreasing']}")
        return 0

    if kind == "witness":
        rep = crg_witness(cfg, _scan_ks(cfg))
        rows = []
        for k, a_k, b_k in zip(rep.ks, rep.a, rep.b):
            r_k, _ = cfg.block(k)
            dip_log = a_k * mp.power(r_k, cfg.rho_f)
            rows.append((_nstr(r_k), "", _nstr(dip_log), _nstr(a_k), False, True))
            peak_r = mp.e * r_k
            rows.append(
                (
                    _nstr(peak_r),
                    "",
                    _nstr(b_k * mp.power(peak_r, cfg.rho_f)),
                    _nstr(b_k),
                    False,
                    True,
                )
            )
        _write_csv(out / "witness.csv", rows)
        summary = {
            "scan": "witness",
            "ks": list(rep.ks),
            "a": [float(x) for x in rep.a],
            "b": [float(x) for x in rep.b],
            "threshold_factor": float(rep.threshold_factor),
            "verdict": rep.verdict,
        }
        _write_json(out / "witness_summary.json", summary)
        print(f"witness scan: verdict {rep.verdict}")
        return 0

    if kind == "indicator":
        if "rho_H" in data and data["rho_H"] is not None:
            from .coefficients import build_H

            h = build_H(
                mpf(str(data["rho_H"])), int(data.get("H_truncation", 64)), dps=cfg.dps
            )
            target = "H"
            fn = h.eval
            rho = h.rho
            radii = [mpf(10) ** 6]
            exclusion = HZeroDiskFamily(h)
        else:
            target = "f"
            fn = lambda z: eval_f_scan(cfg, z)
            rho = cfg.rho_f
            radii = [16 * cfg.blocks[-1][0]]
            exclusion = ZeroDiskFamily(cfg)
        thetas = [2 * mp.pi * j / args.angles for j in range(args.angles)]
        scan = indicator_scan(fn, rho, thetas, radii, exclusion=exclusion)
        rows = [
            (
                _nstr(s.r),
                _nstr(s.theta),
                _nstr(s.log_abs),
                _nstr(s.ratio),
                s.excluded,
                True,
            )
            for s in scan.samples
        ]
        _write_csv(out / "indicator.csv", rows)
        min_ratio = scan.min_ratio()
        summary = {
            "scan": "indicator",
            "target": target,
            "angles": args.angles,
            "radii": [float(r) for r in radii],
            "min_ratio_nonexcluded": None if min_ratio is None else float(min_ratio),
            "all_positive": bool(min_ratio is not None and min_ratio > 0),
            "excluded_samples": sum(1 for s in scan.samples if s.excluded),
            "budget_ok": scan.budget_ok,
        }
        _write_json(out / "indicator_summary.json", summary)
        print(f"indicator scan of {target}: min nonexcluded ratio {summary['min_ratio_nonexcluded']}")
        return 0

    raise ConfigError(f"unknown scan type {kind!r}")


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    out = Path(args.out)
    report = {"verify": None, "scans": {}, "passed": True}
    records_path = out / "records.jsonl"
    if records_path.exists():
        records = [
            json.loads(line)
            for line in records_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        by_check: dict = {}
        for rec in records:
            entry = by_check.setdefault(rec["check"], {"records": 0, "failed": 0})
            entry["records"] += 1
            if not rec["pass"]:
                entry["failed"] += 1
        failed = sum(e["failed"] for e in by_check.values())
        report["verify"] = {"by_check": by_check, "failed": failed}
        report["passed"] = report["passed"] and failed == 0
    for name in ("order", "witness", "indicator"):
        p = out / f"{name}_summary.json"
        if p.exists():
            summary = json.loads(p.read_text(encoding="utf-8"))
            report["scans"][name] = summary
            if name == "order":
                report["passed"] = report["passed"] and bool(
                    summary["peaks_in_band"] and summary["dips_strictly_decreasing"]
                )
            if name == "indicator":
                report["passed"] = report["passed"] and bool(summary["budget_ok"])
    _write_json(out / "report.json", report)
    if report["verify"] is not None:
        for name, entry in report["verify"]["by_check"].items():
            state = "PASS" if entry["failed"] == 0 else "FAIL"
            print(f"{name}: {state} ({entry['records']} records)")
    for name, summary in report["scans"].items():
        print(f"scan {name}: {summary.get('verdict', summary)}")
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lacunary",
        description="construct and verify lacunary products solving f'' + A f' + B f = 0",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--precision", type=int, default=None, help="override precision digits")
        p.add_argument("--seed", type=int, default=0, help="seed for sample-point generation")

    p = sub.add_parser("construct", help="materialize zeros, residues and certificates")
    common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="run verification checks")
    common(p)
    p.add_argument(
        "--checks",
        default="all",
        help=f"comma list from: {', '.join(checks_mod.CHECK_NAMES)} (default all)",
    )
    p.add_argument("--points", type=int, default=200, help="residual sample points")
    p.add_argument(
        "--artifacts",
        default=None,
        help="directory with residues.json to verify instead of recomputing",
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", help="growth scans emitting CSV + verdict summary")
    common(p)
    p.add_argument("--scan", required=True, choices=("order", "indicator", "witness"))
    p.add_argument("--angles", type=int, default=360, help="indicator scan angles")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("report", help="aggregate verification records and scan summaries")
    p.add_argument("--out", required=True, help="directory with prior outputs")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    except PrecisionInsufficient as exc:
        print(
            f"precision insufficient: {exc} (suggested precision: {exc.suggested_dps})",
            file=_sys.stderr,
        )
        return 3
    except (
        CancellationError,
        QuadratureError,
        ZeroOnContourError,
        NearZeroError,
        NearPoleError,
        TailError,
        DivergenceError,
        PrecisionError,
    ) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return 3
    except LacunaryError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    _sys.exit(main())
