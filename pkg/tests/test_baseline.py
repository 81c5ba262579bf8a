import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rispeb.baseline import (SweepRegion, ebs_schedule, grid_shape, in_state_set,
                             quantize_angles, quantize_schedule, sweep_directions)
from rispeb.channel import coherent_profile, mean_signal, path_geometry
from rispeb.fim import PebModel, position_fim
from rispeb.scenario import derive_rng
from rispeb.schedule import PhaseSchedule


def test_grid_rule():
    assert grid_shape(4) == (2, 2)
    assert grid_shape(50) == (7, 8)
    dirs = sweep_directions(SweepRegion(0.0, 1.0, 0.0, 2.0), 4)
    assert dirs == [(0.25, 0.5), (0.25, 1.5), (0.75, 0.5), (0.75, 1.5)]
    assert len(set(dirs)) == 4


def test_region_at_true_direction_reproduces_coherent_profile(scene):
    from dataclasses import replace
    s = replace(scene, num_measurements=1)
    ue = path_geometry(s, 0).ue_angles
    sched = ebs_schedule(s, SweepRegion.point(ue.elevation, ue.azimuth))
    np.testing.assert_allclose(sched.blocks[0][:, 0], coherent_profile(s, 0), atol=1e-12)
    pg = path_geometry(s, 0)
    expect = math.sqrt(s.ap.num_antennas * s.ap.transmit_power) * pg.gain.magnitude * 64
    assert abs(mean_signal(s, 0, sched.blocks[0][:, 0])) == pytest.approx(expect, rel=1e-12)


def test_ebs_is_unit_modulus_and_finite(scene):
    sched = ebs_schedule(scene)
    assert sched.is_unit_modulus()
    assert sched.num_measurements == 50
    assert math.isfinite(position_fim(scene, sched).peb)


def test_ebs_beats_random_median(scene):
    model = PebModel(scene)
    ebs = model.peb(ebs_schedule(scene).blocks)
    rand = [model.peb(PhaseSchedule.random(scene, derive_rng(k, "random-schedule")).blocks)
            for k in range(20)]
    assert ebs < np.median(rand)


def test_quantize_hand_cases():
    assert quantize_angles(1.0, 2) == pytest.approx(math.pi / 2)
    assert quantize_angles(math.pi, 2) == pytest.approx(math.pi)
    assert quantize_angles(2 * math.pi - 0.01, 2) == 0.0
    assert quantize_angles(math.pi / 4, 2) == 0.0      # exact half rounds down
    with pytest.raises(ValueError):
        quantize_angles(0.0, 0)


@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=20), st.integers(1, 6))
def test_quantize_lands_on_nearest_state(values, bits):
    q = quantize_angles(values, bits)
    assert in_state_set(q, bits)
    step = 2 * math.pi / 2 ** bits
    for v, s in zip(values, q):
        gap = abs((v - s + math.pi) % (2 * math.pi) - math.pi)
        assert gap <= step / 2 + 1e-9


def test_states_are_fixed_points():
    states = np.arange(8) * 2 * math.pi / 8
    np.testing.assert_array_equal(quantize_angles(states, 3), states)


def test_quantized_ebs_approaches_continuous(scene):
    model = PebModel(scene)
    ebs = ebs_schedule(scene)
    cont = model.peb(ebs.blocks)
    gaps = [abs(model.peb(quantize_schedule(ebs, b).blocks) - cont) / cont for b in range(1, 9)]
    # not monotone bit by bit, but the deviation shrinks with resolution
    assert gaps[-1] < 0.01
    assert max(gaps[4:]) < gaps[0] / 5
