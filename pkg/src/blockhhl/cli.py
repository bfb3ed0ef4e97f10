"""Command-line entry point.

Exit codes: 0 solve passed, 1 residual above tolerance, 2 usage error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, SolverError
from .matrix import generate_block_diagonal, generate_rhs, generate_spd, GeneratorSpec
from .mmio import save_matrix_market, save_vector
from .optimizer import Policy, TelemetryStore, WorkloadSpec, parse_arm, tune
from .pipeline import MODES, PipelineConfig, PipelineRunner, run_pipeline

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

BENCH_COLUMNS = ("size", "mode", "block_size", "residual", "total_ms", "classical_ms", "quantum_sim_ms")


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _block_size(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"block size must be an integer or 'auto', got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("block size must be positive")
    return value


# flag dest -> PipelineConfig field
SOLVE_FLAGS = {
    "matrix": "matrix_path", "rhs": "rhs_path", "n": "n", "density": "density",
    "dominance": "dominance", "structure_block": "structure_block", "seed": "seed",
    "mode": "mode", "block_size": "block_size", "strategy": "strategy",
    "clock_qubits": "clock_qubits", "shots": "shots", "evolution_time": "evolution_time",
    "rotation_constant": "rotation_constant", "refine": "refine_steps",
    "partition_tol": "partition_tolerance", "tol": "residual_tolerance", "workers": "workers",
    "report": "report_path", "telemetry": "telemetry_path", "policy": "policy_path",
}


def _add_solve_flags(p):
    p.add_argument("--config", help="JSON file of PipelineConfig fields; flags override it")
    p.add_argument("--matrix", help="Matrix Market file (otherwise a system is generated)")
    p.add_argument("--rhs", help="right-hand side, one value per line or Matrix Market array")
    p.add_argument("--n", type=int, help="generated dimension")
    p.add_argument("--density", type=float, help="generated off-diagonal density")
    p.add_argument("--dominance", type=float)
    p.add_argument("--structure-block", type=int, help="block size of the generated block-diagonal matrix")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--block-size", type=_block_size, help="partition block size or 'auto'")
    p.add_argument("--strategy", choices=("none", "jacobi"))
    p.add_argument("--clock-qubits", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--evolution-time", type=float)
    p.add_argument("--rotation-constant", type=float)
    p.add_argument("--refine", type=int, help="HHL iterative refinement rounds per block")
    p.add_argument("--partition-tol", type=float)
    p.add_argument("--tol", type=float, help="residual tolerance for pass/fail")
    p.add_argument("--workers", type=int)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--telemetry", help="append a telemetry record to this NDJSON file")
    p.add_argument("--policy", help="policy JSON used by --block-size auto")


def build_parser():
    parser = argparse.ArgumentParser(prog="blockhhl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generated SPD matrix and right-hand side")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--density", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dominance", type=float, default=2.0)
    g.add_argument("--structure-block", type=int, help="generate a block-diagonal matrix")
    g.add_argument("--complex", action="store_true", help="complex off-diagonal entries")
    g.add_argument("--out", default="matrix.mtx")
    g.add_argument("--rhs-out", default="rhs.txt")

    s = sub.add_parser("solve", help="run the solve pipeline")
    _add_solve_flags(s)

    b = sub.add_parser("bench", help="sweep sizes and modes, write CSV")
    b.add_argument("--sizes", type=_int_list, default=[64, 256])
    b.add_argument("--modes", type=lambda t: t.split(","), default=list(MODES))
    b.add_argument("--block-sizes", type=_int_list, default=[8])
    b.add_argument("--density", type=float, default=0.3)
    b.add_argument("--clock-qubits", type=int, default=6)
    b.add_argument("--refine", type=int, default=2)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="CSV path (default: stdout)")

    t = sub.add_parser("tune", help="run optimizer episodes against the pipeline")
    t.add_argument("--episodes", type=int, default=20)
    t.add_argument("--sizes", type=_int_list, default=[64, 128])
    t.add_argument("--densities", type=_float_list, default=[0.3])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--mode", choices=MODES, default="hhl-sim")
    t.add_argument("--clock-qubits", type=int, default=6)
    t.add_argument("--policy", help="policy JSON to start from and save to")
    t.add_argument("--store", help="telemetry NDJSON file")

    r = sub.add_parser("report", help="pretty-print a JSON report")
    r.add_argument("path")
    return parser


def _solve_config(args) -> PipelineConfig:
    values = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
    for flag, name in SOLVE_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            values[name] = v
    return PipelineConfig.from_dict(values)


def cmd_generate(args):
    if args.structure_block:
        A = generate_block_diagonal(args.n, args.structure_block, args.density, args.seed,
                                    args.dominance, args.complex)
    else:
        A = generate_spd(GeneratorSpec(args.n, args.density, args.seed, args.dominance, args.complex))
    save_matrix_market(A, args.out)
    save_vector(generate_rhs(args.n, args.seed, args.complex), args.rhs_out)
    print(f"wrote {args.out} (n={A.n}, nnz={A.nnz}) and {args.rhs_out}")
    return EXIT_OK


def cmd_solve(args):
    report = run_pipeline(_solve_config(args))
    d = report.data
    status = "PASS" if d["passed"] else "FAIL"
    print(f"{status} mode={d['mode']} n={d['input']['n']} blocks={d['block_count']}x{d['block_size']} "
          f"residual={d['residual']:.3e} tol={d['tolerance']:.1e} total={d['timings_ms']['total']:.1f}ms")
    return EXIT_OK if d["passed"] else EXIT_FAIL


def cmd_bench(args):
    rows = []
    for size in args.sizes:
        for block in args.block_sizes:
            for mode in args.modes:
                if mode not in MODES:
                    raise UsageError(f"unknown mode {mode!r}")
                cfg = PipelineConfig(n=size, density=args.density, structure_block=block,
                                     block_size=block, mode=mode, seed=args.seed)
                if mode == "hhl-sim":
                    cfg.clock_qubits, cfg.refine_steps = args.clock_qubits, args.refine
                d = run_pipeline(cfg).data
                rows.append({
                    "size": size, "mode": mode, "block_size": d["block_size"],
                    "residual": repr(d["residual"]), "total_ms": f"{d['timings_ms']['total']:.3f}",
                    "classical_ms": f"{d['classical_ms']:.3f}", "quantum_sim_ms": f"{d['quantum_sim_ms']:.3f}",
                })
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_tune(args):
    policy = Policy.load(args.policy) if args.policy and Path(args.policy).exists() else Policy(seed=args.seed)
    store = TelemetryStore(args.store) if args.store else None
    runner = PipelineRunner(PipelineConfig(mode=args.mode, clock_qubits=args.clock_qubits))
    workload = WorkloadSpec(tuple(args.sizes), tuple(args.densities), args.seed)
    policy = tune(workload, args.episodes, runner, policy, store)
    if args.policy:
        policy.save(args.policy)
    print(f"updates={policy.updates} epsilon={policy.epsilon:.3f}")
    for bucket in sorted(policy.estimates):
        est = policy.estimates[bucket]
        best = min(est, key=lambda a: est[a][1])
        stats = ", ".join(f"{a}={m:.1f}ms(n={c})" for a, (c, m) in sorted(est.items()))
        print(f"  bucket {bucket}: best observed={parse_arm(best)[0]}  {stats}")
    return EXIT_OK


def cmd_report(args):
    d = json.loads(Path(args.path).read_text())
    inp = d["input"]
    lines = [
        f"blockhhl report (schema v{d['schema_version']}, software {d['software_version']})",
        f"  input      : {inp['source']} n={inp['n']} nnz={inp['nnz']} sparsity={inp['sparsity']:.4g}",
        f"  partition  : {d['block_count']} blocks of {d['block_size']} ({d['block_size_source']}), "
        f"off-block mass {d['off_block_mass']:.3g}",
        f"  method     : mode={d['mode']} strategy={d['strategy']}",
        f"  residual   : {d['residual']:.3e} (tolerance {d['tolerance']:.1e}) -> "
        f"{'PASS' if d['passed'] else 'FAIL'}",
        "  timings ms : " + " ".join(f"{k}={v:.2f}" for k, v in d["timings_ms"].items()),
    ]
    kappas = [(b["kappa_before"], b["kappa_after"]) for b in d["blocks"] if b["kappa_before"] is not None]
    if kappas:
        kb = max(k[0] for k in kappas)
        ka = max(k[1] for k in kappas)
        lines.append(f"  max kappa  : {kb:.3g} before, {ka:.3g} after preconditioning")
    probs = [b["success_probability"] for b in d["blocks"] if b["success_probability"] is not None]
    if probs:
        lines.append(f"  P_success  : min {min(probs):.3e}, mean {sum(probs) / len(probs):.3e}")
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench, "tune": cmd_tune,
            "report": cmd_report}


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"blockhhl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, OSError, ValueError, KeyError) as exc:
        print(f"blockhhl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
