import math

import pytest

from approxmult.arch import MultSpec
from approxmult.costmodel import CostBreakdown, ExternalCostModel, MeasurementTable
from approxmult.optimizer import run_search
from approxmult.trialio import LogError, LogWriter, parse_trial, read_log, serialize_trial


@pytest.fixture(scope="module")
def trials():
    return run_search(MultSpec(6, 6), 0.6, 25, seed=8)


def test_round_trip(trials):
    for t in trials:
        assert parse_trial(serialize_trial(t)) == t


def test_failed_trial_round_trip(trials):
    table = MeasurementTable({trials[0].fingerprint: CostBreakdown.of(3, 2, 1, "external")})
    ext = run_search(MultSpec(6, 6), 0.6, 2, seed=8, cost_model=ExternalCostModel(table))
    assert not ext[1].ok
    back = parse_trial(serialize_trial(ext[1]))
    assert back == ext[1] and back.pdae == math.inf
    assert '"pdae": null' in serialize_trial(ext[1])


def test_writer_and_reader(tmp_path, trials):
    path = tmp_path / "log.jsonl"
    with LogWriter(path, {"n": 6, "m": 6}, tmp_path / "timing.jsonl") as w:
        for t in trials:
            w.append(t, 0.5)
    log = read_log(path)
    assert log.header == {"kind": "run", "version": 1, "n": 6, "m": 6}
    assert log.trials == trials and log.skipped == 0
    assert len((tmp_path / "timing.jsonl").read_text().splitlines()) == len(trials)
    assert "wall_time" not in path.read_text()


def test_corrupt_lines_skipped(tmp_path, trials):
    path = tmp_path / "log.jsonl"
    with LogWriter(path, {"n": 6, "m": 6}) as w:
        w.append(trials[0])
    with open(path, "a") as fh:
        fh.write('{"kind": "trial", "index": 1\n')
        fh.write("garbage\n")
    with LogWriter(path) as w:
        w.append(trials[1])
    log = read_log(path)
    assert log.skipped == 2 and log.trials == trials[:2]
    with pytest.raises(LogError):
        read_log(path, strict=True)
