"""Command-line interface.

Subcommands mirror the library layers: ``topo stats`` (topology
statistics), ``bench emit`` (benchmark circuit text), ``transpile`` (one
pipeline run), ``suite run`` / ``suite report`` (sweeps and reports), and
``roots`` (the iSWAP-root fidelity study).

Exit codes: 0 on success, 2 on configuration errors, 3 when a sweep
completed but some rows recorded errors.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

from . import gates as G
from .benchmarks import BenchmarkSpec, Family, generate
from .circuit import DurationTable, circuit_to_text, metrics
from .decompose import OptimizerConfig
from .errors import QCodesignError
from .harness import (
    ExperimentConfig,
    MetricsRecord,
    build_topology,
    basis_label,
    load_records,
    parse_basis,
    report_plotdata,
    report_tables,
    root_fidelity_study,
    run_suite,
)
from .topology import CouplingGraph, parse_topology, stats
from .transpile import FidelityModel, run_pipeline

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _parse_topology_arg(text: str) -> tuple:
    """Parse ``name`` or ``name:p1,p2,...`` into (name, params)."""
    name, _, params = text.partition(":")
    name = name.strip()
    if not name:
        raise ValueError(f"empty topology name in {text!r}")
    if not params:
        return (name, ())
    try:
        return (name, tuple(int(p) for p in params.split(",")))
    except ValueError:
        raise ValueError(f"topology parameters must be integers: {text!r}")


def _load_topologies(args) -> list:
    graphs = []
    for spec in args.topology or ():
        name, params = _parse_topology_arg(spec)
        graphs.append(build_topology(name, *params))
    for path in args.topology_file or ():
        text = Path(path).read_text()
        graphs.append(parse_topology(text, name=Path(path).stem))
    if not graphs:
        raise ValueError("no topology given (use --topology or --topology-file)")
    return graphs


_FAMILY_ALIASES = {"CDKM": Family.CDKM_ADDER, "ADDER": Family.CDKM_ADDER,
                   "QAOA": Family.QAOA_PROXY}


def _parse_family(text: str) -> Family:
    norm = text.strip().upper()
    if norm in _FAMILY_ALIASES:
        return _FAMILY_ALIASES[norm]
    try:
        return Family(norm)
    except ValueError:
        known = ", ".join(f.value for f in Family)
        raise ValueError(f"unknown benchmark family {text!r} (known: {known})")


def _parse_duration_table(path: str | None) -> DurationTable | None:
    if path is None:
        return None
    data = json.loads(Path(path).read_text())
    entries = {}
    default_2q = data.pop("default_2q", 1.0)
    for tag, value in data.items():
        entries[G.GateKind(tag.strip().upper())] = float(value)
    return DurationTable(entries=entries, default_2q=float(default_2q))


def _bench_spec(args, width: int) -> BenchmarkSpec:
    kwargs = {}
    if getattr(args, "trotter_steps", None) is not None:
        kwargs["trotter_steps"] = args.trotter_steps
    if getattr(args, "qaoa_layers", None) is not None:
        kwargs["qaoa_layers"] = args.qaoa_layers
    return BenchmarkSpec(_parse_family(args.family), width,
                         seed=args.seed, **kwargs)


def _out_stream(path: str | None):
    """File to write a report to, or stdout (left open) without --out."""
    if path:
        return open(path, "w")
    return contextlib.nullcontext(sys.stdout)


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_topo_stats(args) -> int:
    graphs = _load_topologies(args)
    lines = [f"{'topology':<24} {'n':>4} {'edges':>6} {'diameter':>9} "
             f"{'avg_dist':>9} {'avg_conn':>9}"]
    for g in graphs:
        st = stats(g)
        lines.append(f"{g.name:<24} {g.n:>4} {len(g.edges):>6} "
                     f"{st.diameter:>9} {st.avg_distance:>9.4f} "
                     f"{st.avg_connectivity:>9.4f}")
    with _out_stream(args.out) as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_bench_emit(args) -> int:
    spec = _bench_spec(args, args.width)
    circuit = generate(spec)
    with _out_stream(args.out) as fh:
        fh.write(circuit_to_text(circuit))
    return EXIT_OK


def _cmd_transpile(args) -> int:
    graphs = _load_topologies(args)
    if len(graphs) != 1:
        raise ValueError("transpile takes exactly one topology")
    spec = _bench_spec(args, args.width)
    basis = parse_basis(args.basis)
    duration = _parse_duration_table(args.duration_table)
    result = run_pipeline(spec, graphs[0], basis, duration=duration,
                          seed=args.seed, trials=args.trials,
                          fidelity=FidelityModel(args.f_iswap),
                          synthesis=args.synthesis)
    tm, rm = result.translated_metrics, result.routed_metrics
    print(f"benchmark          {spec.family.value} width={spec.width} "
          f"seed={spec.seed}")
    print(f"topology           {graphs[0].name} ({graphs[0].n} qubits)")
    print(f"basis              {basis_label(basis)}")
    print(f"total_2q           {tm.total_2q}")
    print(f"critical_2q        {tm.critical_2q}")
    print(f"total_swaps        {rm.total_swaps}")
    print(f"critical_swaps     {rm.critical_swaps}")
    print(f"weighted_duration  {tm.weighted_duration}")
    if result.modeled_fidelity is not None:
        print(f"modeled_fidelity   {result.modeled_fidelity:.6f}")
    print(f"elapsed_s          {result.elapsed_s:.3f}")
    if args.out:
        if result.translated is None:
            raise ValueError("--out requires --synthesis full "
                             "(counts mode emits no circuit)")
        Path(args.out).write_text(circuit_to_text(result.translated))
    return EXIT_OK


def _suite_config(args) -> ExperimentConfig:
    if args.config:
        data = json.loads(Path(args.config).read_text())
        topologies = tuple((t[0], tuple(t[1])) for t in data["topologies"])
        benchmarks = tuple(
            BenchmarkSpec(_parse_family(b["family"]),
                          int(b.get("width", data["widths"][0])),
                          seed=int(b.get("seed", 0)),
                          trotter_steps=int(b.get("trotter_steps", 1)),
                          qaoa_layers=int(b.get("qaoa_layers", 1)))
            for b in data["benchmarks"])
        duration = None
        if "duration_table" in data:
            entries = {G.GateKind(k.upper()): float(v)
                       for k, v in data["duration_table"].items()
                       if k != "default_2q"}
            duration = DurationTable(
                entries=entries,
                default_2q=float(data["duration_table"].get("default_2q", 1.0)))
        return ExperimentConfig(
            topologies=topologies,
            benchmarks=benchmarks,
            widths=tuple(int(w) for w in data["widths"]),
            bases=tuple(parse_basis(b) for b in data["bases"]),
            seeds=tuple(int(s) for s in data["seeds"]),
            duration=duration,
            f_iswap=float(data.get("f_iswap", 0.99)),
            trials=int(data.get("trials", 20)),
            synthesis=data.get("synthesis", "full"),
            out_dir=args.out or data.get("out_dir", "results"),
        )
    topologies: list = [_parse_topology_arg(t) for t in args.topology or ()]
    for path in args.topology_file or ():
        topologies.append(parse_topology(Path(path).read_text(),
                                         name=Path(path).stem))
    widths = tuple(int(w) for w in args.width)
    benchmarks = tuple(
        BenchmarkSpec(_parse_family(f), widths[0], seed=args.bench_seed)
        for f in args.family)
    return ExperimentConfig(
        topologies=tuple(topologies),
        benchmarks=benchmarks,
        widths=widths,
        bases=tuple(parse_basis(b) for b in args.basis),
        seeds=tuple(args.seed),
        duration=_parse_duration_table(args.duration_table),
        f_iswap=args.f_iswap,
        trials=args.trials,
        synthesis=args.synthesis,
        out_dir=args.out or "results",
    )


def _cmd_suite_run(args) -> int:
    cfg = _suite_config(args)
    records = run_suite(cfg)
    failed = [r for r in records if r.errors]
    print(f"{len(records)} rows ({len(failed)} with errors) -> {cfg.out_dir}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _cmd_suite_report(args) -> int:
    path = Path(args.records)
    if path.is_dir():
        path = path / "records.csv"
    records = load_records(path)
    with _out_stream(args.out) as fh:
        fh.write(report_tables(records) + "\n")
    if args.plotdata:
        paths = report_plotdata(records, args.plotdata, baseline=args.baseline)
        print(f"wrote {len(paths)} plot-data files -> {args.plotdata}",
              file=sys.stderr)
    return EXIT_OK


def _cmd_roots(args) -> int:
    cfg = None
    if args.restarts is not None or args.max_iterations is not None:
        cfg = OptimizerConfig(restarts=args.restarts or 4,
                              max_iterations=args.max_iterations or 300)
    result = root_fidelity_study(
        args.samples,
        f_iswap_values=tuple(args.f_iswap),
        roots=tuple(args.roots),
        cfg=cfg, k_max=args.k_max, seed=args.seed)
    lines = [f"{'f_iswap':>8} {'root':>5} {'gate_fid':>9} "
             f"{'mean_total_inf':>15} {'improvement':>12}  "
             f"decomp_inf by count (1..{result.k_max})"]
    for curve in result.curves:
        imp = ("" if curve.improvement_vs_sqrt is None
               else f"{curve.improvement_vs_sqrt * 100:+.2f}%")
        ks = " ".join(f"{v:.2e}" for v in curve.mean_decomp_infidelity)
        lines.append(f"{curve.f_iswap:>8.4f} {curve.root:>5} "
                     f"{curve.gate_fid:>9.6f} "
                     f"{curve.mean_total_infidelity:>15.6f} {imp:>12}  {ks}")
    with _out_stream(args.out) as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_topology_flags(p) -> None:
    p.add_argument("--topology", action="append", metavar="NAME[:P1,P2,...]",
                   help="named topology, e.g. square:4,4 (repeatable)")
    p.add_argument("--topology-file", action="append", metavar="PATH",
                   help="topology text file (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcodesign",
        description="Qubit-topology co-design benchmark toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    topo = sub.add_parser("topo", help="topology utilities")
    topo_sub = topo.add_subparsers(dest="subcommand", required=True)
    p = topo_sub.add_parser("stats", help="print topology statistics")
    _add_topology_flags(p)
    p.add_argument("--out", help="write to file instead of stdout")
    p.set_defaults(func=_cmd_topo_stats)

    bench = sub.add_parser("bench", help="benchmark circuits")
    bench_sub = bench.add_subparsers(dest="subcommand", required=True)
    p = bench_sub.add_parser("emit", help="emit a benchmark circuit as text")
    p.add_argument("--family", required=True,
                   help="benchmark family (qv, qft, ghz, hamsim, "
                        "qaoa_proxy/qaoa, cdkm_adder/cdkm)")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trotter-steps", type=int, default=None)
    p.add_argument("--qaoa-layers", type=int, default=None)
    p.add_argument("--out", help="write to file instead of stdout")
    p.set_defaults(func=_cmd_bench_emit)

    p = sub.add_parser("transpile", help="map one benchmark onto a topology")
    _add_topology_flags(p)
    p.add_argument("--family", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--basis", default="cnot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--trotter-steps", type=int, default=None)
    p.add_argument("--qaoa-layers", type=int, default=None)
    p.add_argument("--synthesis", choices=("full", "counts"), default="full")
    p.add_argument("--duration-table", metavar="PATH",
                   help="JSON file of gate durations")
    p.add_argument("--f-iswap", type=float, default=0.99)
    p.add_argument("--out", help="write the translated circuit text here")
    p.set_defaults(func=_cmd_transpile)

    suite = sub.add_parser("suite", help="experiment sweeps")
    suite_sub = suite.add_subparsers(dest="subcommand", required=True)
    p = suite_sub.add_parser("run", help="run a sweep (resumable)")
    p.add_argument("--config", metavar="PATH", help="JSON sweep config")
    _add_topology_flags(p)
    p.add_argument("--family", action="append", default=None)
    p.add_argument("--width", action="append", type=int, default=None)
    p.add_argument("--basis", action="append", default=None)
    p.add_argument("--seed", action="append", type=int, default=None)
    p.add_argument("--bench-seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--synthesis", choices=("full", "counts"), default="full")
    p.add_argument("--duration-table", metavar="PATH")
    p.add_argument("--f-iswap", type=float, default=0.99)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_suite_run)

    p = suite_sub.add_parser("report", help="tables and plot data")
    p.add_argument("--records", required=True,
                   help="records.csv path or its directory")
    p.add_argument("--plotdata", metavar="DIR",
                   help="also write per-metric series CSVs here")
    p.add_argument("--baseline", help="baseline series for ratio files")
    p.add_argument("--out", help="write tables to file instead of stdout")
    p.set_defaults(func=_cmd_suite_report)

    p = sub.add_parser(
        "roots", help="iSWAP-root fidelity study on Haar-random unitaries")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--f-iswap", action="append", type=float, default=None)
    p.add_argument("--roots", type=int, nargs="+", default=(2, 3, 4, 5))
    p.add_argument("--k-max", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--out", help="write to file instead of stdout")
    p.set_defaults(func=_cmd_roots)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "f_iswap", None) is None and args.command == "roots":
        args.f_iswap = [0.99]
    if args.command == "suite" and args.subcommand == "run" and not args.config:
        for flag in ("family", "width", "basis", "seed"):
            if not getattr(args, flag):
                parser.error(f"suite run needs --config or --{flag}")
    try:
        return args.func(args)
    except (QCodesignError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
