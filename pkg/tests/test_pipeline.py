import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest

from blockhhl.classical import direct_solve
from blockhhl.errors import BlockError, ConfigError, NotBlockDiagonalError, NotSPDError
from blockhhl.matrix import SparseMatrix, generate_block_diagonal, generate_rhs, residual
from blockhhl.mmio import save_matrix_market, save_vector
from blockhhl.optimizer import Policy, TelemetryStore
from blockhhl.pipeline import PipelineConfig, PipelineRunner, run_pipeline, strip_timings

from conftest import random_unitary

SCHEMA = json.loads(resources.files("blockhhl").joinpath("schemas/report.schema.json").read_text())


def exact_phase_system(tmp_path, m=6, blocks=4, seed=0):
    """Block-diagonal file whose 2x2 blocks have eigenvalues k / 2**m (exact at t = 2 pi)."""
    rng = np.random.default_rng(seed)
    n = 2 * blocks
    d = np.zeros((n, n), dtype=complex)
    for i in range(blocks):
        V = random_unitary(2, rng)
        k = rng.choice(np.arange(1, 2 ** (m - 1) + 1), size=2, replace=False)
        blk = V @ np.diag(k / 2 ** m) @ V.conj().T
        d[2 * i:2 * i + 2, 2 * i:2 * i + 2] = (blk + blk.conj().T) / 2
    A = SparseMatrix.from_dense(d)
    b = generate_rhs(n, seed, True)
    save_matrix_market(A, tmp_path / "a.mtx")
    save_vector(b, tmp_path / "b.txt")
    return A, b


def test_direct_mode():
    rep = run_pipeline(PipelineConfig(n=64, mode="direct"))
    assert rep.residual < 1e-10 and rep.passed


def test_cg_mode():
    rep = run_pipeline(PipelineConfig(n=64, mode="cg"))
    assert rep.residual < 1e-8 and all(b["iterations"] >= 1 for b in rep.data["blocks"])


def test_hhl_exact_phase_fixture(tmp_path):
    exact_phase_system(tmp_path)
    cfg = PipelineConfig(matrix_path=str(tmp_path / "a.mtx"), rhs_path=str(tmp_path / "b.txt"),
                         block_size=2, strategy="none", evolution_time=2 * math.pi, refine_steps=0)
    rep = run_pipeline(cfg)
    assert rep.residual < 1e-8
    assert all(b["phase_exactness"] for b in rep.data["blocks"])


def test_cross_mode_agreement():
    base = dict(n=64, density=0.5, seed=11, clock_qubits=6)
    xh = run_pipeline(PipelineConfig(mode="hhl-sim", **base)).x
    xd = run_pipeline(PipelineConfig(mode="direct", **base)).x
    assert np.max(np.abs(xh - xd)) <= 1e-2


def test_residual_is_against_original_system():
    cfg = PipelineConfig(n=40, structure_block=5, block_size=5, mode="direct", seed=4, complex_entries=True)
    rep = run_pipeline(cfg)
    A = generate_block_diagonal(40, 5, cfg.density, 4, complex_entries=True)
    b = generate_rhs(40, 4, True)
    assert rep.residual == residual(A, rep.x, b)
    assert np.max(np.abs(rep.x - direct_solve(A, b))) < 1e-10


def test_report_schema_and_fields(tmp_path):
    out = tmp_path / "r.json"
    rep = run_pipeline(PipelineConfig(n=20, structure_block=4, block_size=4, report_path=str(out)))
    data = json.loads(out.read_text())
    jsonschema.validate(data, SCHEMA)
    assert data["block_count"] == 5 and data["input"]["n"] == 20
    assert set(data["timings_ms"]) == {"prepare", "precondition", "solve", "aggregate", "total"}
    assert all(0 < b["success_probability"] <= 1 for b in data["blocks"])
    assert data["config"]["block_size"] == 4
    assert rep.data == data


@pytest.mark.parametrize("mode", ["hhl-sim", "cg", "direct"])
def test_all_modes_validate(mode):
    jsonschema.validate(run_pipeline(PipelineConfig(n=16, mode=mode)).data, SCHEMA)


def test_deterministic_modulo_timing():
    a = run_pipeline(PipelineConfig(n=48, seed=3)).data
    b = run_pipeline(PipelineConfig(n=48, seed=3, workers=2)).data
    b["config"]["workers"] = 1
    assert strip_timings(a) == strip_timings(b)


def test_auto_block_size(tmp_path):
    pol = Policy()
    pol.fit_regression([[64, 0.1], [256, 0.05]], [4, 4])
    pol.save(tmp_path / "p.json")
    rep = run_pipeline(PipelineConfig(n=64, block_size="auto", policy_path=str(tmp_path / "p.json"),
                                      structure_block=4, mode="direct"))
    assert rep.data["block_size_source"] == "auto"
    assert rep.data["block_size"] == 4


def test_auto_cold_start_uses_default():
    rep = run_pipeline(PipelineConfig(n=64, block_size="auto", mode="direct"))
    assert rep.data["block_size"] == 8 and rep.data["block_size_source"] == "auto"


def test_telemetry_appended(tmp_path):
    path = tmp_path / "t.ndjson"
    for seed in range(2):
        run_pipeline(PipelineConfig(n=16, mode="direct", seed=seed, telemetry_path=str(path)))
    recs = TelemetryStore(path).load()
    assert len(recs) == 2 and recs[1].seed == 1 and recs[0].mode == "direct"


def test_block_failure_aborts_with_index(tmp_path):
    d = np.eye(8)
    d[5, 5] = -2
    save_matrix_market(SparseMatrix.from_dense(d), tmp_path / "a.mtx")
    with pytest.raises(BlockError) as exc:
        run_pipeline(PipelineConfig(matrix_path=str(tmp_path / "a.mtx"), block_size=2, mode="direct"))
    assert exc.value.phase == "precondition" and exc.value.block_index == 2
    with pytest.raises(BlockError) as exc:
        run_pipeline(PipelineConfig(matrix_path=str(tmp_path / "a.mtx"), block_size=2, mode="direct",
                                    strategy="none"))
    assert exc.value.phase == "solve" and exc.value.block_index == 2
    assert isinstance(exc.value.cause, NotSPDError)


def test_partition_failure_is_reported():
    with pytest.raises(BlockError) as exc:
        run_pipeline(PipelineConfig(n=16, structure_block=None, block_size=4, mode="direct"))
    assert exc.value.phase == "partition" and isinstance(exc.value.cause, NotBlockDiagonalError)


def test_config_checks():
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"n": 8, "bogus": 1})
    with pytest.raises(ConfigError):
        run_pipeline(PipelineConfig(mode="quantum"))
    with pytest.warns(UserWarning, match="clock_qubits"):
        run_pipeline(PipelineConfig(n=8, mode="direct", clock_qubits=3))


def test_runner_record():
    from blockhhl.optimizer import Task
    r = PipelineRunner(PipelineConfig(mode="direct")).run(Task(32, 0.3, 1), 4, "jacobi")
    r.validate()
    assert r.block_size == 4 and r.residual < 1e-10
