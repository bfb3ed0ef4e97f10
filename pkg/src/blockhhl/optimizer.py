"""Telemetry-driven choice of block size and preconditioning strategy.

The policy is a contextual epsilon-greedy bandit. Contexts are buckets of
``(floor(log2 N), sparsity decile)``; arms are ``(block_size, strategy)``
pairs; the value of an arm is its mean observed ``total_ms`` over runs that met
the accuracy ceiling. A small inverse-distance regressor is available for
fitting fixed (size, sparsity) -> block size tables.
"""

from __future__ import annotations

import fcntl
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import RecordRejectedError, SolverError

TELEMETRY_VERSION = 1
POLICY_VERSION = 1
TIMING_SLACK_MS = 1e-3


@dataclass
class TelemetryRecord:
    matrix_dim: int
    sparsity: float
    block_size: int
    strategy: str
    classical_ms: float
    quantum_sim_ms: float
    total_ms: float
    residual: Optional[float]
    timestamp: float
    seed: int
    mode: str = "hhl-sim"
    ok: bool = True
    error: Optional[str] = None

    def validate(self):
        if self.total_ms < self.classical_ms + self.quantum_sim_ms - TIMING_SLACK_MS:
            raise RecordRejectedError("total_ms is smaller than its phase timings")
        if self.ok and (self.residual is None or not self.residual >= 0):
            raise RecordRejectedError(f"invalid residual {self.residual!r}")
        if self.block_size < 1 or self.matrix_dim < 1:
            raise RecordRejectedError("dimensions must be positive")

    def to_json(self) -> str:
        return json.dumps({"v": TELEMETRY_VERSION, **asdict(self)}, sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "TelemetryRecord":
        d = dict(d)
        v = d.pop("v", None)
        if v != TELEMETRY_VERSION:
            raise RecordRejectedError(f"unsupported telemetry version {v!r}")
        return cls(**d)


class TelemetryStore:
    """Append-only newline-delimited JSON file of telemetry records."""

    def __init__(self, path):
        self.path = Path(path)

    def append(self, record: TelemetryRecord):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        line = record.to_json() + "\n"
        with open(self.path, "a") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                fh.write(line)
                fh.flush()
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def load(self) -> list:
        if not self.path.exists():
            return []
        out = []
        with open(self.path) as fh:
            fcntl.flock(fh, fcntl.LOCK_SH)
            try:
                for line in fh:
                    if line.strip():
                        out.append(TelemetryRecord.from_dict(json.loads(line)))
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)
        return out


def context_bucket(n, sparsity) -> str:
    decile = min(9, max(0, int(math.floor(sparsity * 10))))
    return f"{int(math.floor(math.log2(max(n, 1))))}:{decile}"


def arm_key(block_size, strategy) -> str:
    return f"{int(block_size)}:{strategy}"


def parse_arm(key):
    n_b, strategy = key.split(":", 1)
    return int(n_b), strategy


class BlockSizeRegressor:
    """Inverse-distance-weighted interpolation over (N, sparsity) features.

    Features are divided by their training standard deviation. Training points
    are reproduced exactly.
    """

    def __init__(self, X, y):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0] or self.X.shape[0] == 0:
            raise ValueError("training data must be a non-empty (samples, features) table")
        scale = self.X.std(axis=0)
        self.scale = np.where(scale > 0, scale, 1.0)

    def predict_value(self, x) -> float:
        d = np.linalg.norm((self.X - np.asarray(x, dtype=float)) / self.scale, axis=1)
        hit = d < 1e-12
        if hit.any():
            return float(self.y[hit][0])
        w = 1.0 / d ** 2
        return float(w @ self.y / w.sum())

    def predict(self, n, sparsity) -> int:
        return int(round(self.predict_value([n, sparsity])))

    def to_dict(self):
        return {"X": self.X.tolist(), "y": self.y.tolist()}


@dataclass
class Policy:
    candidate_block_sizes: tuple = (2, 4, 8, 16, 32)
    candidate_strategies: tuple = ("jacobi",)
    default_block_size: int = 8
    accuracy_ceiling: float = 1e-3
    epsilon_start: float = 0.5
    epsilon_decay: float = 0.9
    epsilon_floor: float = 0.05
    epsilon_override: Optional[float] = None
    try_untried: bool = True
    updates: int = 0
    seed: int = 0
    estimates: dict = field(default_factory=dict)
    attempts: dict = field(default_factory=dict)
    regression: Optional[dict] = None
    rng_state: Optional[dict] = None

    def __post_init__(self):
        self.candidate_block_sizes = tuple(int(c) for c in self.candidate_block_sizes)
        self.candidate_strategies = tuple(self.candidate_strategies)
        if not self.candidate_block_sizes or not self.candidate_strategies:
            raise ValueError("policy needs at least one candidate")
        self._rng = np.random.default_rng(self.seed)
        if self.rng_state is not None:
            self._rng.bit_generator.state = self.rng_state
        self._regressor = None if self.regression is None else BlockSizeRegressor(
            self.regression["X"], self.regression["y"])

    @property
    def epsilon(self) -> float:
        if self.epsilon_override is not None:
            return self.epsilon_override
        return max(self.epsilon_floor, self.epsilon_start * self.epsilon_decay ** self.updates)

    @property
    def arms(self):
        return [arm_key(n, s) for n in self.candidate_block_sizes for s in self.candidate_strategies]

    @property
    def default_arm(self):
        return arm_key(self.default_block_size, self.candidate_strategies[0])

    def fit_regression(self, X, y):
        self._regressor = BlockSizeRegressor(X, y)
        self.regression = self._regressor.to_dict()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rng_state"] = self._rng.bit_generator.state
        d["candidate_block_sizes"] = list(self.candidate_block_sizes)
        d["candidate_strategies"] = list(self.candidate_strategies)
        return {"v": POLICY_VERSION, **d}

    @classmethod
    def from_dict(cls, d) -> "Policy":
        d = dict(d)
        v = d.pop("v", None)
        if v != POLICY_VERSION:
            raise ValueError(f"unsupported policy version {v!r}")
        return cls(**d)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Policy":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def greedy_arm(self, bucket) -> Optional[str]:
        """Lowest-mean arm in ``bucket``, or None when the bucket has never been tried.

        With ``try_untried`` set, arms never attempted in the bucket win over
        every observed arm (optimistic initial values), in candidate order.
        Attempts that missed the accuracy ceiling count as tried but carry no value.
        """
        stats = self.estimates.get(bucket, {})
        tried = self.attempts.get(bucket, {})
        if not stats and not tried:
            return None
        if self.try_untried:
            for a in self.arms:
                if a not in tried and a not in stats:
                    return a
        seen = [a for a in self.arms if a in stats]
        if not seen:
            return self.default_arm
        return min(seen, key=lambda a: stats[a][1])

    def update(self, record: TelemetryRecord) -> bool:
        """Fold one record into the running means. Returns False if it was excluded."""
        key = arm_key(record.block_size, record.strategy)
        if key not in self.arms:
            return False
        bucket = context_bucket(record.matrix_dim, record.sparsity)
        tried = self.attempts.setdefault(bucket, {})
        tried[key] = tried.get(key, 0) + 1
        if not record.ok or record.residual is None or record.residual > self.accuracy_ceiling:
            return False
        stats = self.estimates.setdefault(bucket, {})
        count, mean = stats.get(key, (0, 0.0))
        count += 1
        mean += (record.total_ms - mean) / count
        stats[key] = [count, mean]
        self.updates += 1
        return True


def predict_arm(n, sparsity, policy: Policy, epsilon=None):
    """Choose ``(block_size, strategy)`` for a matrix of dimension ``n``.

    Buckets with no data return the policy's default arm. Otherwise the
    lowest-mean arm is exploited with probability ``1 - epsilon`` and a uniformly
    random arm is explored otherwise.
    """
    if policy._regressor is not None:
        return policy._regressor.predict(n, sparsity), policy.candidate_strategies[0]
    best = policy.greedy_arm(context_bucket(n, sparsity))
    if best is None:
        return parse_arm(policy.default_arm)
    eps = policy.epsilon if epsilon is None else epsilon
    if eps > 0 and policy._rng.random() < eps:
        arms = policy.arms
        return parse_arm(arms[int(policy._rng.integers(len(arms)))])
    return parse_arm(best)


def predict_block_size(n, sparsity, policy: Policy, epsilon=None) -> int:
    return predict_arm(n, sparsity, policy, epsilon)[0]


def record_run(record: TelemetryRecord, store: Optional[TelemetryStore] = None,
               policy: Optional[Policy] = None) -> None:
    record.validate()
    if store is not None:
        store.append(record)
    if policy is not None:
        policy.update(record)


@dataclass(frozen=True)
class Task:
    n: int
    density: float
    seed: int


@dataclass(frozen=True)
class WorkloadSpec:
    """Seeded stream of matrix generation tasks for tuning."""

    sizes: tuple = (64, 128)
    densities: tuple = (0.3,)
    seed: int = 0

    def task(self, episode) -> Task:
        rng = np.random.default_rng([self.seed, episode])
        n = int(self.sizes[int(rng.integers(len(self.sizes)))])
        density = float(self.densities[int(rng.integers(len(self.densities)))])
        return Task(n, density, int(rng.integers(2 ** 31)))


class SyntheticCostModel:
    """Deterministic stand-in for the pipeline: cost is a fixed table per block size.

    Useful for checking the tuner without running solves. ``costs`` maps block
    size to total_ms; ``sparsity`` is reported as the task's density.
    """

    def __init__(self, costs, residual=1e-6, strategy_penalty=None):
        self.costs = dict(costs)
        self.residual = residual
        self.strategy_penalty = strategy_penalty or {}
        self.calls = 0

    def context(self, task: Task):
        return task.n, task.density

    def run(self, task: Task, block_size, strategy) -> TelemetryRecord:
        total = float(self.costs[block_size]) + self.strategy_penalty.get(strategy, 0.0)
        record = TelemetryRecord(
            matrix_dim=task.n, sparsity=task.density, block_size=block_size, strategy=strategy,
            classical_ms=total / 2, quantum_sim_ms=total / 2, total_ms=total,
            residual=self.residual, timestamp=float(self.calls), seed=task.seed,
        )
        self.calls += 1
        return record


def tune(workload: WorkloadSpec, episodes: int, runner, policy: Optional[Policy] = None,
         store: Optional[TelemetryStore] = None) -> Policy:
    """Run ``episodes`` select-run-update rounds and return the updated policy.

    ``runner`` provides ``context(task) -> (n, sparsity)`` and
    ``run(task, block_size, strategy) -> TelemetryRecord``. A failing episode
    is stored as a record with ``ok=False`` and does not stop tuning.
    """
    policy = Policy() if policy is None else policy
    for episode in range(episodes):
        task = workload.task(episode)
        n, sparsity = runner.context(task)
        block_size, strategy = predict_arm(n, sparsity, policy)
        try:
            record = runner.run(task, block_size, strategy)
        except SolverError as exc:
            record = TelemetryRecord(
                matrix_dim=n, sparsity=sparsity, block_size=block_size, strategy=strategy,
                classical_ms=0.0, quantum_sim_ms=0.0, total_ms=0.0, residual=None,
                timestamp=float(episode), seed=task.seed, ok=False, error=str(exc),
            )
        record_run(record, store, policy)
    return policy
