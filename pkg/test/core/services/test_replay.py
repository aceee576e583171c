"""
Tests for the replay service
"""

import csv
import math
from pathlib import Path

import pytest

from kinonav.core.exceptions import ParseError, UsageError
from kinonav.core.model import DEFAULT_PARAMS, MotionState, PhysicsConfig, Pose, VelocityCommand
from kinonav.core.services.replay import (
    DRIFT_HEADER,
    REPLAY_HEADER,
    commands_from_log,
    dead_reckon,
    read_commands,
    replay,
)
from kinonav.motion.dynamics import substep
from kinonav.motion.sysid import TrajectoryLog, synthesize_log


def _write_script(path: Path, rows: list[tuple[float, float, float]]) -> Path:
    with path.open(encoding="utf-8", mode="w", newline="") as fle:
        writer = csv.writer(fle, lineterminator="\n")
        writer.writerow(("t", "v_cmd", "w_cmd"))
        writer.writerows(rows)
    return path


def _read_rows(path: Path) -> list[dict[str, float]]:
    with path.open(encoding="utf-8", newline="") as fle:
        return [{key: float(value) for key, value in row.items()} for row in csv.DictReader(fle)]


def test_read_commands(tmp_path: Path):
    """
    Test a script parses into timed commands
    :return: None
    """
    path = _write_script(tmp_path / "script.csv", [(0.0, 1.0, 0.0), (0.5, 0.3, -1.0)])
    assert read_commands(path) == [(0.0, VelocityCommand(1.0, 0.0)), (0.5, VelocityCommand(0.3, -1.0))]


def test_read_commands_extra_columns_ignored(tmp_path: Path):
    """
    Test a full trace can serve as a script
    :return: None
    """
    path = tmp_path / "trace.csv"
    path.write_text("t,x,v_cmd,w_cmd\n0.0,1.0,0.3,0.0\n", encoding="utf-8")
    assert read_commands(path) == [(0.0, VelocityCommand(0.3, 0.0))]


def test_read_commands_malformed_row(tmp_path: Path):
    """
    Test a non numeric value reports its line
    :return: None
    """
    path = tmp_path / "script.csv"
    path.write_text("t,v_cmd,w_cmd\n0.0,1.0,0.0\n0.5,fast,0.0\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        read_commands(path)
    assert excinfo.value.line == 3


@pytest.mark.parametrize(
    "content",
    [
        "time,v,w\n0.0,1.0,0.0\n",
        "t,v_cmd,w_cmd\n",
        "t,v_cmd,w_cmd\n1.0,1.0,0.0\n0.5,0.0,0.0\n",
        "t,v_cmd,w_cmd\n0.0,1.0,0.0\n0.0,0.0,0.0\n",
        "",
    ],
)
def test_read_commands_rejects_bad_scripts(tmp_path: Path, content: str):
    """
    Test missing columns, empty scripts and non increasing times are parse errors
    :return: None
    """
    path = tmp_path / "script.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ParseError):
        read_commands(path)


def test_read_commands_missing_file(tmp_path: Path):
    """
    Test a missing script is a parse error
    :return: None
    """
    with pytest.raises(ParseError):
        read_commands(tmp_path / "nothing.csv")


def test_commands_from_log_keeps_changes_only():
    """
    Test repeated commands collapse to their first sample
    :return: None
    """
    log = TrajectoryLog.from_columns(
        [0.0, 0.1, 0.2, 0.3],
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.1, 0.2, 0.1],
        [0.0, 0.0, 0.0, 0.0],
    )
    assert commands_from_log(log) == [
        (0.0, VelocityCommand(1.0, 0.0)),
        (0.2, VelocityCommand(0.0, 0.0)),
        (0.3, VelocityCommand(0.0, 1.0)),
    ]


def test_dead_reckon_straight_line():
    """
    Test constant forward velocity integrates along the heading
    :return: None
    """
    log = TrajectoryLog.from_columns([0.0, 1.0, 2.0], [1.0] * 3, [0.0] * 3, [1.0] * 3, [0.0] * 3)
    positions = dead_reckon(log, Pose(1.0, 1.0, math.pi / 2))
    assert positions[:, 0] == pytest.approx([1.0, 1.0, 1.0])
    assert positions[:, 1] == pytest.approx([1.0, 2.0, 3.0])


def test_replay_stationary_script(tmp_path: Path):
    """
    Test stop commands from rest keep the robot on its initial pose
    :return: None
    """
    script = _write_script(tmp_path / "script.csv", [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)])
    trajectory = replay(tmp_path / "replay.csv", (1.0, 2.0, 0.5), commands_path=script)

    assert len(trajectory) == 1 + 30 + 10
    assert all(state.pose == Pose(1.0, 2.0, 0.5) for _, state in trajectory)
    rows = _read_rows(tmp_path / "replay.csv")
    assert tuple(rows[0]) == REPLAY_HEADER
    assert len(rows) == len(trajectory)
    assert rows[-1]["t"] == pytest.approx(1.0 + 1.0 / 3.0)


def test_replay_square_drive_matches_forward_model(tmp_path: Path):
    """
    Test a square drive script against substeps applied by hand
    :return: None
    """
    rows = []
    for side in range(4):
        rows.append((4.0 * side, 1.0, 0.0))
        rows.append((4.0 * side + 3.0, 0.0, 1.0))
    script = _write_script(tmp_path / "square.csv", rows)
    physics = PhysicsConfig()

    trajectory = replay(tmp_path / "replay.csv", commands_path=script, physics=physics)

    state = MotionState()
    expected = [state]
    for index, (time, v_cmd, w_cmd) in enumerate(rows):
        end = rows[index + 1][0] if index + 1 < len(rows) else time + 1.0 / 3.0
        for _ in range(round((end - time) * 30.0)):
            state = substep(state, VelocityCommand(v_cmd, w_cmd), DEFAULT_PARAMS, physics.dt)
            expected.append(state)
    assert [state for _, state in trajectory] == expected
    written = _read_rows(tmp_path / "replay.csv")[-1]
    assert (written["x"], written["y"], written["theta"]) == expected[-1].pose.as_tuple()


def test_replay_normalizes_initial_heading(tmp_path: Path):
    """
    Test the initial heading is wrapped into (-pi, pi]
    :return: None
    """
    script = _write_script(tmp_path / "script.csv", [(0.0, 0.0, 0.0)])
    trajectory = replay(tmp_path / "replay.csv", (0.0, 0.0, 3.0 * math.pi), commands_path=script)
    assert trajectory[0][1].theta == pytest.approx(math.pi)


def test_replay_needs_a_script_or_log(tmp_path: Path):
    """
    Test replay without any input is a usage error
    :return: None
    """
    with pytest.raises(UsageError):
        replay(tmp_path / "replay.csv")


def test_replay_rejects_partial_initial_pose(tmp_path: Path):
    """
    Test the initial pose needs three values
    :return: None
    """
    script = _write_script(tmp_path / "script.csv", [(0.0, 0.0, 0.0)])
    with pytest.raises(UsageError):
        replay(tmp_path / "replay.csv", (1.0, 2.0), commands_path=script)


def test_replay_log_writes_small_drift(tmp_path: Path):
    """
    Test replaying a log generated by the same model at the same physics rate stays on the recorded path
    :return: None
    """
    script = [VelocityCommand(0.6, 0.0), VelocityCommand(1.0, 1.0), VelocityCommand(0.3, -2.0), VelocityCommand()]
    log_path = tmp_path / "log.csv"
    synthesize_log(script, DEFAULT_PARAMS).write_csv(log_path)

    replay(tmp_path / "replay.csv", log_path=log_path, physics=PhysicsConfig(f_physics=1000.0))

    drift = _read_rows(tmp_path / "replay-drift.csv")
    assert tuple(drift[0]) == DRIFT_HEADER
    covered = [row["drift"] for row in drift if row["t"] <= 9.3]
    assert len(covered) > 900
    assert max(covered) < 0.1
