# tests/unit/test_interfaces.py
from typing import Any, Dict, List

import numpy as np
import pytest

from ksdk.deterministic import Trajectory
from ksdk.etd import ExponentialStepper
from ksdk.fields import FourierField
from ksdk.interfaces import Drift, NoiseSource, ReportWriter
from ksdk.noise import MollifierSymbol, lolli_path
from ksdk.store import RunDirectory

# ---- Dummies ----

class ConstantDrift(Drift):
    def __init__(self, value: float):
        self.value = value
        self.calls = 0

    def __call__(self, u: FourierField) -> FourierField:
        self.calls += 1
        return FourierField.constant(u.resolution, self.value)


class SeededNoise(NoiseSource):
    # plain numpy generators, one per step
    def __init__(self, seed: int):
        self.seed = seed

    def at(self, step: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, step])


class MemoryWriter(ReportWriter):
    def __init__(self):
        self.files: Dict[str, Any] = {}

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        self.files[name] = dict(payload)
        return name

    def write_csv(self, name: str, rows: List[Dict[str, Any]]) -> str:
        self.files[name] = [dict(r) for r in rows]
        return name


def _publish(writer: ReportWriter, rows: List[Dict[str, Any]]) -> List[str]:
    return [writer.write_json("report.json", {"n_rows": len(rows)}), writer.write_csv("report.csv", rows)]


# ---- Tests ----

@pytest.mark.parametrize("scheme, calls", [("etd1", 1), ("etd2", 2)])
def test_custom_drift_plugs_into_stepper(scheme, calls):
    drift = ConstantDrift(3.0)
    stepper = ExponentialStepper(4, 1e-2, scheme)
    out = stepper.step(FourierField.constant(4, 1.0), drift=drift)
    # the mean mode integrates N exactly: 1 + dt·3
    assert out.mean() == pytest.approx(1.03, rel=1e-14)
    assert drift.calls == calls


def test_custom_noise_source_drives_the_convolution():
    M, dt = 4, 1e-3
    sigma = Trajectory(dt=dt)
    for step in range(4):
        sigma.record(step, FourierField.constant(M, 1.0))
    moll = MollifierSymbol.for_resolution(M, 0.3)
    a = lolli_path(sigma, moll, SeededNoise(5), 3)
    b = lolli_path(sigma, moll, SeededNoise(5), 3)
    assert len(a) == 4
    assert np.array_equal(a[-1].coeffs, b[-1].coeffs)
    assert np.any(a[-1].coeffs != 0)


def test_report_writers_share_one_protocol(tmp_dir):
    rows = [{"eps": 0.1, "estimate": 1.0}, {"eps": 0.0, "estimate": 0.0}]
    mem = MemoryWriter()
    assert _publish(mem, rows) == ["report.json", "report.csv"]
    assert mem.files["report.json"] == {"n_rows": 2}

    paths = _publish(RunDirectory(str(tmp_dir / "run")), rows)
    assert all(p.startswith(str(tmp_dir)) for p in paths)
    with open(paths[1], encoding="utf-8") as f:
        assert f.readline().strip() == "eps,estimate"
