"""End-to-end solve: load or generate, partition, precondition, solve, reassemble, validate."""

from __future__ import annotations

import dataclasses
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import __version__
from .classical import conjugate_gradient, direct_solve
from .errors import BlockError, ConfigError, SolverError
from .hhl import choose_config, hhl_refine
from .matrix import GeneratorSpec, generate_block_diagonal, generate_rhs, generate_spd, residual
from .mmio import load_matrix_market, load_vector
from .optimizer import Policy, TelemetryRecord, TelemetryStore, predict_arm, record_run
from .partition import aggregate, partition
from .precondition import Strategy, chunked, parallel_map_chunks, precondition_all, unscale_solution

MODES = ("hhl-sim", "cg", "direct")
REPORT_VERSION = 1
HHL_FIELDS = ("clock_qubits", "shots", "evolution_time", "rotation_constant", "refine_steps")
_HHL_DEFAULTS = {"clock_qubits": 6, "shots": 0, "evolution_time": None,
                 "rotation_constant": None, "refine_steps": 2}


@dataclass
class PipelineConfig:
    """Everything one solve needs.

    Without ``matrix_path`` the system is generated: a block-diagonal matrix
    with diagonal blocks of ``structure_block`` (a single coupled matrix when
    it is None) and a seeded right-hand side.
    """

    matrix_path: Optional[str] = None
    rhs_path: Optional[str] = None
    n: int = 64
    density: float = 0.3
    dominance: float = 2.0
    structure_block: Optional[int] = 8
    complex_entries: bool = False
    seed: int = 0
    mode: str = "hhl-sim"
    block_size: Union[int, str] = 8
    strategy: str = "jacobi"
    clock_qubits: int = 6
    shots: int = 0
    evolution_time: Optional[float] = None
    rotation_constant: Optional[float] = None
    refine_steps: int = 2
    partition_tolerance: float = 0.0
    residual_tolerance: float = 1e-3
    cg_tol: float = 1e-10
    cg_max_iter: Optional[int] = None
    workers: int = 1
    report_path: Optional[str] = None
    telemetry_path: Optional[str] = None
    policy_path: Optional[str] = None

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        Strategy.parse(self.strategy)
        if self.block_size != "auto" and (not isinstance(self.block_size, int) or self.block_size < 1):
            raise ConfigError(f"block_size must be a positive integer or 'auto', got {self.block_size!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.rhs_path and not self.matrix_path:
            raise ConfigError("rhs_path given without matrix_path")
        if self.mode != "hhl-sim":
            changed = [f for f in HHL_FIELDS if getattr(self, f) != _HHL_DEFAULTS[f]]
            if changed:
                warnings.warn(f"HHL parameters ignored in {self.mode} mode: {', '.join(changed)}",
                              stacklevel=2)

    @classmethod
    def from_dict(cls, d) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class SolveReport:
    data: dict
    x: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.data["passed"]

    @property
    def residual(self) -> float:
        return self.data["residual"]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    def write(self, path):
        Path(path).write_text(self.to_json() + "\n")


def load_system(config: PipelineConfig):
    if config.matrix_path:
        A = load_matrix_market(config.matrix_path)
        b = load_vector(config.rhs_path) if config.rhs_path else generate_rhs(A.n, config.seed)
        return A, b, "file"
    if config.structure_block:
        A = generate_block_diagonal(config.n, min(config.structure_block, config.n), config.density,
                                    config.seed, config.dominance, config.complex_entries)
    else:
        A = generate_spd(GeneratorSpec(config.n, config.density, config.seed, config.dominance,
                                       config.complex_entries))
    return A, generate_rhs(config.n, config.seed, config.complex_entries), "generated"


def _solve_block(pb, index, config):
    if config.mode == "direct":
        return direct_solve(pb.a_tilde, pb.b_tilde), {}
    if config.mode == "cg":
        x, its = conjugate_gradient(pb.a_tilde, pb.b_tilde, tol=config.cg_tol, max_iter=config.cg_max_iter)
        return x, {"iterations": its}
    hcfg = choose_config(pb.a_tilde, config.clock_qubits, config.evolution_time,
                         config.rotation_constant, config.shots, config.seed + index)
    res = hhl_refine(pb, hcfg, config.refine_steps)
    return res.solution, {
        "success_probability": res.success_probability,
        "phase_exactness": res.phase_exactness,
        "evolution_time": hcfg.evolution_time,
        "rotation_constant": hcfg.rotation_constant,
    }


def _solve_chunk(args):
    pblocks, offset, config = args
    out = []
    for i, pb in enumerate(pblocks):
        t0 = time.perf_counter()
        try:
            x_t, extra = _solve_block(pb, offset + i, config)
            x = unscale_solution(x_t, pb.preconditioner)
        except SolverError as exc:
            return out, (offset + i, exc)
        out.append((x, extra, (time.perf_counter() - t0) * 1e3))
    return out, None


def _ms(t0):
    return (time.perf_counter() - t0) * 1e3


def run_pipeline(config: PipelineConfig) -> SolveReport:
    """Run one configured solve and return its report.

    Any failure inside a block aborts the whole solve with a BlockError naming
    the phase and block. The residual is always measured against the original
    system, never the preconditioned blocks.
    """
    config.validate()
    t_start = time.perf_counter()
    timings = {}

    t0 = time.perf_counter()
    try:
        A, b, source = load_system(config)
    except SolverError as exc:
        raise BlockError("load", None, exc) from exc
    sparsity = A.nnz / float(A.n * A.n)
    strategy = Strategy.parse(config.strategy)
    policy = None
    if config.block_size == "auto":
        policy = Policy.load(config.policy_path) if config.policy_path and Path(config.policy_path).exists() \
            else Policy()
        block_size, picked = predict_arm(A.n, sparsity, policy)
        strategy = Strategy.parse(picked)
        block_source = "auto"
    else:
        block_size, block_source = config.block_size, "fixed"
    block_size = min(block_size, A.n)
    try:
        system = partition(A, b, block_size, config.partition_tolerance)
    except SolverError as exc:
        raise BlockError("partition", None, exc) from exc
    timings["prepare"] = _ms(t0)

    t0 = time.perf_counter()
    pblocks = precondition_all(system, strategy, config.workers)
    timings["precondition"] = _ms(t0)

    t0 = time.perf_counter()
    jobs = [(pblocks[s:e], s, config) for s, e in chunked(len(pblocks), config.workers)]
    solved = []
    for out, failure in parallel_map_chunks(_solve_chunk, jobs, config.workers):
        solved.extend(out)
        if failure is not None:
            index, exc = failure
            raise BlockError("solve", index, exc) from exc
    timings["solve"] = _ms(t0)

    t0 = time.perf_counter()
    x = aggregate([s[0] for s in solved], system)
    r = residual(A, x, b)
    timings["aggregate"] = _ms(t0)
    total_ms = _ms(t_start)
    timings["total"] = total_ms

    quantum_ms = timings["solve"] if config.mode == "hhl-sim" else 0.0
    classical_ms = sum(timings[k] for k in ("prepare", "precondition", "solve", "aggregate")) - quantum_ms

    blocks = []
    for i, (pb, (_, extra, wall)) in enumerate(zip(pblocks, solved)):
        rec = {
            "index": i,
            "dimension": pb.a_tilde.n,
            "kappa_before": pb.kappa_before,
            "kappa_after": pb.kappa_after,
            "mode": config.mode,
            "wall_ms": wall,
            "success_probability": None,
            "phase_exactness": None,
        }
        rec.update(extra)
        blocks.append(rec)

    data = {
        "schema_version": REPORT_VERSION,
        "software_version": __version__,
        "input": {"source": source, "n": A.n, "nnz": A.nnz, "sparsity": sparsity},
        "block_size": block_size,
        "block_size_source": block_source,
        "block_count": system.k,
        "off_block_mass": system.off_block_mass,
        "strategy": strategy.value,
        "mode": config.mode,
        "blocks": blocks,
        "timings_ms": timings,
        "classical_ms": classical_ms,
        "quantum_sim_ms": quantum_ms,
        "residual": r,
        "tolerance": config.residual_tolerance,
        "passed": bool(r < config.residual_tolerance),
        "config": config.to_dict(),
    }
    report = SolveReport(data, x)
    if config.report_path:
        report.write(config.report_path)
    if config.telemetry_path:
        record = TelemetryRecord(
            matrix_dim=A.n, sparsity=sparsity, block_size=block_size, strategy=strategy.value,
            classical_ms=classical_ms, quantum_sim_ms=quantum_ms, total_ms=total_ms,
            residual=r, timestamp=time.time(), seed=config.seed, mode=config.mode,
        )
        record_run(record, TelemetryStore(config.telemetry_path), policy)
        if policy is not None and config.policy_path:
            policy.save(config.policy_path)
    return report


TIMING_KEYS = ("timings_ms", "classical_ms", "quantum_sim_ms")


def strip_timings(data: dict) -> dict:
    """Copy of a report dict without wall-clock fields, for determinism checks."""
    out = {k: v for k, v in data.items() if k not in TIMING_KEYS}
    out["blocks"] = [{k: v for k, v in b.items() if k != "wall_ms"} for b in data["blocks"]]
    return out


class PipelineRunner:
    """Tuning runner that executes the real pipeline on generated systems."""

    def __init__(self, base: Optional[PipelineConfig] = None, structure_block=2):
        self.base = base or PipelineConfig()
        self.structure_block = structure_block

    def _config(self, task, block_size=8, strategy="jacobi"):
        return dataclasses.replace(
            self.base, matrix_path=None, rhs_path=None, n=task.n, density=task.density,
            seed=task.seed, structure_block=self.structure_block, block_size=block_size,
            strategy=strategy, report_path=None, telemetry_path=None, policy_path=None,
        )

    def context(self, task):
        A, _, _ = load_system(self._config(task))
        return A.n, A.nnz / float(A.n * A.n)

    def run(self, task, block_size, strategy) -> TelemetryRecord:
        rep = run_pipeline(self._config(task, block_size, strategy)).data
        return TelemetryRecord(
            matrix_dim=rep["input"]["n"], sparsity=rep["input"]["sparsity"],
            block_size=rep["block_size"], strategy=rep["strategy"],
            classical_ms=rep["classical_ms"], quantum_sim_ms=rep["quantum_sim_ms"],
            total_ms=rep["timings_ms"]["total"], residual=rep["residual"],
            timestamp=time.time(), seed=task.seed, mode=rep["mode"],
        )
