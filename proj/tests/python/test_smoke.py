import math
import os
from pathlib import Path

import pytest

import skyfed

EXAMPLES = Path(os.environ.get("SKYFED_EXAMPLES", Path(__file__).resolve().parents[2] / "scenarios"))


def stationary():
    return skyfed.load_scenario(str(EXAMPLES / "stationary.scn"))


def test_scenario_round_trip():
    s = stationary()
    again = skyfed.parse_scenario(str(s))
    assert str(again) == str(s)
    assert s.num_devices == 5
    assert skyfed.parse_scenario(str(s), seed=9).seed == 9


def test_errors_map_to_python_exceptions():
    with pytest.raises(skyfed.ParseError):
        skyfed.parse_scenario("[run]\nhorizon = banana\n")
    with pytest.raises(skyfed.IoError):
        skyfed.load_scenario(str(EXAMPLES / "missing.scn"))
    assert issubclass(skyfed.ValidationError, skyfed.SkyfedError)


def test_packet_error_rate_grows_with_distance():
    s = stationary()
    dev = s.device_positions(1)[0]
    near = skyfed.packet_error_rate(s, 0, (dev[0], dev[1]))
    far = skyfed.packet_error_rate(s, 0, (dev[0] + 200.0, dev[1]))
    assert 0.0 <= near < far < 1.0


def test_round_terms_clean_channel():
    s = stationary()
    t = skyfed.round_terms(s, [0.0] * s.num_devices)
    assert t["j"] == 0.0
    assert t["contraction_ok"]


def test_placement_and_trajectory():
    s = stationary()
    p = skyfed.optimize_placement(s)
    assert math.isfinite(p["objective"])
    assert p["iterations"] >= 1
    g = skyfed.plan_trajectory(s, "greedy")
    assert len(g["waypoints"]) == s.horizon // s.dwell + 1
    assert skyfed.atl(s, g["waypoints"], g["dwell"]) == pytest.approx(g["atl"])


def test_train_quadratic():
    s = skyfed.load_scenario(str(EXAMPLES / "quadratic.scn"))
    r = skyfed.train(s, [(15.0, 15.0)], s.horizon)
    assert len(r["loss"]) == s.horizon
    assert r["loss"][-1] < r["initial_loss"]


def test_cli_usage_error():
    code, _, err = skyfed.run_cli(["nope"])
    assert code == 1
    assert err
