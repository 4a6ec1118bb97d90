"""Command-line front end.

Subcommands:
  solve    market file -> solver report, mechanism file, CSV artifacts
  eval     market + profile file -> formula-layer CSV report
  verify   market + mechanism (+ profile) -> equilibrium report; exit 0 iff pass
  oracle   market -> brute-force grid optimum + profile file
  compare  market -> anonymous optimum vs posted-prices-only vs non-anonymous

Exit codes: 0 success, 1 verification failure, 2 parse or validation error.
All randomness is seeded and recorded in the run metadata; fixed seeds give
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report as report_mod
from .ascent import coordinate_ascent
from .bestresponse import best_response, verify
from .evaluate import evaluate
from .market import MarketError, ParseError, parse_market
from .mechanism import extract, mechanism_from_json, mechanism_to_json
from .numeric import FLOAT, RATIONAL, format_number, parse_number
from .oracle import OracleGrid, brute_force_optimal, non_anonymous_benchmark


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=(RATIONAL, FLOAT), default=RATIONAL, help="arithmetic backend")
    common.add_argument("--tol", type=float, default=None, help="comparison tolerance (mode default if omitted)")
    common.add_argument("--out", type=Path, default=None, help="directory for artifacts (default: alongside input)")

    parser = argparse.ArgumentParser(prog="dynration", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common], help="optimize a market and extract its menu")
    solve.add_argument("market", type=Path)
    solve.add_argument("--starts", type=int, default=16, help="random restarts beyond zero/one starts")
    solve.add_argument("--sweeps", type=int, default=40, help="max coordinate sweeps per start")
    solve.add_argument("--seed", type=int, default=0)

    ev = sub.add_parser("eval", parents=[common], help="evaluate a profile file on a market")
    ev.add_argument("market", type=Path)
    ev.add_argument("profile", type=Path)

    ver = sub.add_parser("verify", parents=[common], help="best-response check of a mechanism file")
    ver.add_argument("market", type=Path)
    ver.add_argument("mechanism", type=Path)
    ver.add_argument("--profile", type=Path, default=None, help="allocation file for the round-trip check")

    orc = sub.add_parser("oracle", parents=[common], help="brute-force grid optimum")
    orc.add_argument("market", type=Path)
    orc.add_argument("--levels", type=str, default=None, help="comma-separated level grid, e.g. 0,1/2,1")

    cmp_ = sub.add_parser("compare", parents=[common], help="anonymous vs posted-only vs non-anonymous revenue")
    cmp_.add_argument("market", type=Path)
    cmp_.add_argument("--starts", type=int, default=16)
    cmp_.add_argument("--seed", type=int, default=0)
    return parser


def _tol(args, market):
    if args.tol is not None:
        return parse_number(repr(args.tol), market.mode)
    return None


def _outdir(args, market_path: Path) -> Path:
    out = args.out if args.out is not None else market_path.parent
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_market(args):
    return parse_market(args.market.read_text(encoding="utf-8"), args.mode)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        market = _load_market(args)
    except (OSError, ParseError, MarketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _dispatch(args, market)
    except (ParseError, MarketError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args, market) -> int:
    stem = args.market.stem
    if args.command == "solve":
        out = _outdir(args, args.market)
        report = coordinate_ascent(
            market, starts=args.starts, max_sweeps=args.sweeps, tol=_tol(args, market), seed=args.seed
        )
        ev = evaluate(market, report.profile)
        mech = extract(market, report.profile, ev)
        result = verify(market, report.profile, mech, tol=_tol(args, market), evaluation=ev)
        (out / f"{stem}.profile.json").write_text(report_mod.profile_to_json(report.profile))
        (out / f"{stem}.mechanism.json").write_text(mechanism_to_json(mech))
        (out / f"{stem}.report.csv").write_text(report_mod.evaluation_csv(ev))
        (out / f"{stem}.prices.csv").write_text(report_mod.price_path_csv(mech))
        (out / f"{stem}.run.txt").write_text(
            report_mod.solve_metadata(report, starts_requested=args.starts, mode=args.mode)
        )
        print(f"revenue: {format_number(report.revenue)}")
        print(f"inventory_used: {format_number(report.inventory_used)}")
        print(f"binding: {report.binding}")
        for t, menu in enumerate(mech.periods):
            bits = [f"t={t + 1}", menu.mode]
            if menu.has_posted:
                bits.append(f"pHigh={format_number(menu.p_high)}")
            if menu.has_lottery:
                bits.append(
                    f"perWinner={format_number(menu.per_winner_price)}"
                    f" prob={format_number(menu.service_prob)}"
                    f" quantity={format_number(menu.lottery_quantity)}"
                )
            print("  " + " ".join(bits))
        if not result.passed:
            print("verification FAILED:", file=sys.stderr)
            for v in result.violations:
                print(f"  {v}", file=sys.stderr)
            return 1
        print("verification: pass")
        return 0

    if args.command == "eval":
        out = _outdir(args, args.market)
        profile = report_mod.profile_from_json(args.profile.read_text(encoding="utf-8"), market.mode)
        ev = evaluate(market, profile)
        (out / f"{stem}.report.csv").write_text(report_mod.evaluation_csv(ev))
        print(f"revenue: {format_number(ev.revenue)}")
        print(f"inventory_used: {format_number(ev.inventory_used)}")
        print(f"welfare: {format_number(ev.welfare)}")
        if ev.negative_payments:
            print(f"warning: {len(ev.negative_payments)} negative payments flagged", file=sys.stderr)
        return 0

    if args.command == "verify":
        out = _outdir(args, args.market)
        mech = mechanism_from_json(args.mechanism.read_text(encoding="utf-8"), market.mode)
        if args.profile is not None:
            profile = report_mod.profile_from_json(args.profile.read_text(encoding="utf-8"), market.mode)
            result = verify(market, profile, mech, tol=_tol(args, market))
            rep = result.report
            passed, violations = result.passed, result.violations
        else:
            rep = best_response(market, mech)
            violations = [
                f"ServiceResidual: t={t + 1} residual {format_number(res)}"
                for t, res in enumerate(rep.service_residual)
                if res is not None and abs(res) > (_tol(args, market) or 0)
            ]
            if not market.unbounded and rep.realized_sales > market.inventory:
                violations.append("Oversold")
            passed = not violations
        (out / f"{stem}.equilibrium.csv").write_text(report_mod.verification_csv(market, rep))
        print(f"realized_revenue: {format_number(rep.realized_revenue)}")
        print(f"realized_sales: {format_number(rep.realized_sales)}")
        if passed:
            print("verification: pass")
            return 0
        print("verification FAILED:", file=sys.stderr)
        for v in violations:
            print(f"  {v}", file=sys.stderr)
        return 1

    if args.command == "oracle":
        out = _outdir(args, args.market)
        grid = OracleGrid(levels=tuple(args.levels.split(","))) if args.levels else OracleGrid()
        res = brute_force_optimal(market, grid)
        (out / f"{stem}.oracle.profile.json").write_text(report_mod.profile_to_json(res.profile))
        print(f"oracle_revenue: {format_number(res.revenue)}")
        print(f"candidates: {res.candidates}")
        return 0

    if args.command == "compare":
        report = coordinate_ascent(market, starts=args.starts, seed=args.seed)
        posted = brute_force_optimal(market, OracleGrid(levels=("0", "1")))
        rows = [
            ("anonymous optimum (solver)", report.revenue),
            ("posted prices only (oracle, levels {0,1})", posted.revenue),
        ]
        if market.unbounded:
            rows.append(("non-anonymous benchmark", non_anonymous_benchmark(market)))
        else:
            rows.append(("non-anonymous benchmark", None))
        width = max(len(r[0]) for r in rows)
        for name, value in rows:
            shown = format_number(value) if value is not None else "n/a (finite inventory)"
            print(f"{name:<{width}}  {shown}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
