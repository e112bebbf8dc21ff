"""Command-line entry points.

``urm`` manages a provider workspace (init, deploy, revoke, query, audit).
``sim`` runs network simulations and writes traces and metrics.

Exit codes: 0 success, 1 compliance or verification failure (including a
rejected write), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .audit import AuditVerdict
from .enforcement import Schema
from .lang import render_esa, render_natural_language
from .ledger import tx_record
from .metrics import MetricsError, compute_report, export_csv, export_summary
from .netsim import SimConfigError, consistent, load_config, run_simulation
from .workspace import RejectedWrite, Workspace, WorkspaceError

OK, FAILED, USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(USAGE)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _tx_line(tx) -> str:
    return json.dumps(tx_record(tx), separators=(",", ":"))


# urm


def _read_arg(value: str) -> str:
    """``@path`` reads the text from a file; anything else is taken literally."""
    if value.startswith("@"):
        return Path(value[1:]).read_text(encoding="utf-8").strip()
    return value


def _cmd_init(args) -> int:
    data = {}
    for item in args.data or []:
        table, sep, path = item.partition("=")
        if not sep:
            return _fail(f"--data expects TABLE=PATH, got {item!r}", USAGE)
        data[table] = path
    ws = Workspace.init(args.workspace, args.provider, args.schema, data)
    print(f"initialized workspace {ws.root} for provider {ws.provider}")
    return OK


def _cmd_deploy(args) -> int:
    ws = Workspace(args.workspace)
    tx, esa = ws.deploy(_read_arg(args.esa))
    print(f"ESAD {_tx_line(tx)}")
    print(render_esa(esa))
    print(render_natural_language(esa))
    return OK


def _cmd_revoke(args) -> int:
    ws = Workspace(args.workspace)
    out = ws.revoke(args.hash, _read_arg(args.replace) if args.replace else None)
    print(f"ESAR {_tx_line(out.esar)}")
    if out.esad is not None:
        print(f"ESAD {_tx_line(out.esad)}")
    for rec in out.records:
        print(f"logged seq={rec.seq}: {rec.text}")
    return OK


def _print_rows(result) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([Schema.format_cell(row[c]) for c in result.columns])


def _cmd_query(args) -> int:
    ws = Workspace(args.workspace)
    try:
        out = ws.query(args.requester, args.purpose, _read_arg(args.sql))
    except RejectedWrite as e:
        return _fail(f"write rejected: {e}", FAILED)
    if out.result is not None:
        _print_rows(out.result)
    else:
        print(f"{out.count} row(s) affected")
    print(f"logged seq={out.record.seq}: {out.record.text}")
    return OK


def _print_verdict(v: AuditVerdict) -> None:
    for r in v.records:
        status = "ok" if r.passed else "FAIL"
        flags = []
        if not r.hash_ok:
            flags.append("hash mismatch")
        if r.unverifiable:
            flags.append("unverifiable")
        if r.reason:
            flags.append(r.reason)
        print(f"seq {r.seq}: {status}" + (f" ({'; '.join(flags)})" if flags else ""))
    for seq in v.orphan_txs:
        print(f"seq {seq}: FAIL (DATA transaction without audit record)")
    for p in v.problems:
        print(f"FAIL: {p}")
    print(f"audit {'passed' if v.passed else 'failed'}: {len(v.records)} record(s)")


def _cmd_audit(args) -> int:
    try:
        ws = Workspace(args.workspace)
    except WorkspaceError as e:
        # a corrupted workspace is a verification failure, not a usage error
        print(f"FAIL: {e}")
        print("audit failed")
        return FAILED
    verdict = ws.audit()
    _print_verdict(verdict)
    if args.report:
        Path(args.report).write_text(json.dumps(verdict.to_dict(), indent=2) + "\n", encoding="utf-8")
    return OK if verdict.passed else FAILED


def urm_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="urm", description="Manage agreements, queries and audits in a provider workspace.")
    p.add_argument("--workspace", "-w", default=".", help="workspace directory (default: current directory)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("init", help="create a workspace")
    s.add_argument("--provider", required=True)
    s.add_argument("--schema", required=True, help="schema JSON file")
    s.add_argument("--data", action="append", metavar="TABLE=CSV", help="initial table contents")
    s.set_defaults(func=_cmd_init)

    s = sub.add_parser("deploy", help="deploy an agreement (text, or @file)")
    s.add_argument("esa")
    s.set_defaults(func=_cmd_deploy)

    s = sub.add_parser("revoke", help="revoke an agreement by its hex hash")
    s.add_argument("hash")
    s.add_argument("--replace", metavar="ESA", help="deploy this agreement in the same block (rectification)")
    s.set_defaults(func=_cmd_revoke)

    s = sub.add_parser("query", help="run a query under the agreements in force")
    s.add_argument("--requester", required=True)
    s.add_argument("--purpose", required=True)
    s.add_argument("sql", help="query text, or @file")
    s.set_defaults(func=_cmd_query)

    s = sub.add_parser("audit", help="verify the audit log against the ledger")
    s.add_argument("--report", help="write the JSON verdict here")
    s.set_defaults(func=_cmd_audit)
    return p


def urm_main(argv=None) -> int:
    args = urm_parser().parse_args(argv)
    try:
        return args.func(args)
    except WorkspaceError as e:
        return _fail(str(e), USAGE)
    except OSError as e:
        return _fail(str(e), USAGE)


# sim


def _parse_sweep(text: str) -> dict:
    out = {}
    for part in text.split(";") if ";" in text else _split_sweep(text):
        key, sep, values = part.partition("=")
        if not sep or key.strip() not in ("rates", "nodes"):
            raise SimConfigError(f"bad sweep item {part!r}; expected rates=... or nodes=...")
        try:
            nums = [float(v) if key.strip() == "rates" else int(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise SimConfigError(f"bad sweep values in {part!r}") from None
        if not nums:
            raise SimConfigError(f"empty sweep list in {part!r}")
        out[key.strip()] = nums
    return out


def _split_sweep(text: str) -> list[str]:
    # "rates=100,200,nodes=4,16": a new item starts at every "name="
    items, cur = [], []
    for tok in text.split(","):
        if "=" in tok and cur:
            items.append(",".join(cur))
            cur = []
        cur.append(tok)
    if cur:
        items.append(",".join(cur))
    return items


def _rate_label(rate: float):
    return int(rate) if float(rate).is_integer() else rate


def _cmd_sim_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        sweep = _parse_sweep(args.sweep) if args.sweep else None
    except (SimConfigError, OSError) as e:
        return _fail(str(e), USAGE)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if sweep is None:
            trace = run_simulation(cfg)
            report = compute_report(trace)
            (out / "trace.csv").write_text(trace.to_csv(), encoding="utf-8")
            export_csv([report], out / "metrics.csv")
            summary = export_summary(report)
            summary["consistent"] = consistent(trace)
            (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
            print(f"{cfg.scenario}: N={cfg.n} rate={_rate_label(cfg.rate)} tps_avg={report.tps_avg:.2f} "
                  f"latency_avg={report.latency_avg * 1000:.1f}ms uncommitted={report.uncommitted}")
        else:
            reports = []
            for n in sweep.get("nodes", [cfg.n]):
                for rate in sweep.get("rates", [cfg.rate]):
                    run_cfg = cfg.replace(n=n, rate=rate, powers=cfg.powers if n == cfg.n else (),
                                          scenario=f"{cfg.scenario}-n{n}-r{_rate_label(rate)}")
                    report = compute_report(run_simulation(run_cfg))
                    reports.append(report)
                    print(f"N={n} rate={_rate_label(rate)} tps_avg={report.tps_avg:.2f} "
                          f"latency_avg={report.latency_avg * 1000:.1f}ms", flush=True)
            export_csv(reports, out / "metrics.csv")
            (out / "summary.json").write_text(
                json.dumps([export_summary(r) for r in reports], indent=2) + "\n", encoding="utf-8"
            )
    except SimConfigError as e:
        return _fail(str(e), USAGE)
    except MetricsError as e:
        return _fail(str(e), FAILED)
    return OK


def sim_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sim", description="Simulate the validator network and export metrics.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("run", help="run one configuration or a sweep")
    s.add_argument("--config", required=True, help="JSON simulation config")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--sweep", help="e.g. rates=100,200,300;nodes=4,16")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=_cmd_sim_run)
    return p


def sim_main(argv=None) -> int:
    args = sim_parser().parse_args(argv)
    return args.func(args)


def main(argv=None) -> int:
    """``python -m esaledger urm ...`` or ``python -m esaledger sim ...``."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in ("urm", "sim"):
        print("usage: python -m esaledger {urm,sim} ...", file=sys.stderr)
        return USAGE
    return (urm_main if argv[0] == "urm" else sim_main)(argv[1:])
