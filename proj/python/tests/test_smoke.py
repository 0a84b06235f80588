from fractions import Fraction
from pathlib import Path

import pytest

import prtspace as ps

MODELS = Path(__file__).resolve().parents[2] / "models"


def test_table_values_are_exact():
    cdf = ps.table1.communication()
    assert (160, Fraction(98, 100)) in cdf.points
    pmf = ps.cdf_to_pmf(cdf)
    assert sum(p for _, p in pmf.masses) == 1
    assert ps.prob_at_most(pmf, 169) == Fraction("0.9999999995")


def test_reaction_convolution():
    pmfs = [ps.cdf_to_pmf(c) for c in (ps.table1.sensor_fetch(), ps.table1.recognition(),
                                       ps.table1.communication(), ps.table1.robot_processing())]
    total = ps.convolve_all(pmfs)
    assert (total.min_tick, total.max_tick) == (4300, 5000)
    assert ps.prob_at_most(total, 5000) == 1
    assert 0 < ps.prob_at_least(total, 4965) < Fraction(5, 10**14)


def test_float_probabilities_are_rejected():
    with pytest.raises(TypeError):
        ps.DelayPmf([(0, 0.5), (1, 0.5)])
    pmf = ps.DelayPmf([(0, "1/3"), (2, Fraction(2, 3))])
    assert pmf.masses[1] == (2, Fraction(2, 3))


def test_check_control_unit():
    model = ps.load_model(MODELS / "control_unit.prt")
    assert model.check(160, target="flag_c2")["probability"] == Fraction(98, 100)
    assert model.check(160, target="flag_c2", exact=False)["probability"] == pytest.approx(0.98)
    profile = model.profile(200, target="flag_c2")
    assert profile[160] == Fraction(98, 100)
    assert profile == sorted(profile)
    rows = model.density([50, 100, 150, 200], target="flag_c2")
    assert rows[-1][1] == 1
    assert sum(r[2] for r in rows) == 1


def test_round_trip_and_export():
    model = ps.load_model(MODELS / "moving_robot.prt")
    assert ps.Model.parse(model.to_text()).to_text() == model.to_text()
    assert "headline" in model.queries
    assert ps.load_model(MODELS / "control_unit.prt").export_prism().startswith("pta\n")


def test_syntax_errors_carry_locations():
    with pytest.raises(ps.ModelSyntaxError, match=r"bad\.prt:1:"):
        ps.Model.parse("distribution d { 1 : ; }", "bad.prt")


def test_simulation_and_spatial():
    cfg = ps.ScenarioConfig()
    reports = ps.worst_case_sweep(cfg, [0.40, 0.47, 0.50])
    speeds = [r.robot_speed_at_impact for r in reports]
    assert speeds == sorted(speeds)
    assert speeds[-1] <= 0.7

    trace, report = ps.run_scenario(cfg)
    assert report.collided
    robot = ps.trace_to_spec(trace, "robot")
    human = ps.trace_to_spec(trace, "human")
    events = ps.check_collision(robot, human)
    assert events and events[0].time_us * 1e-6 == pytest.approx(report.impact_time)
    back = ps.read_bespaced(ps.export_bespaced(human))
    back.entity = human.entity
    assert back == human
    assert len(ps.threshold_filter(events, 0.5)) == len(events)
