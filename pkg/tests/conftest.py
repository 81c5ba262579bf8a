import numpy as np
import pytest
from hypothesis import settings

from rispeb.scenario import NoiseModel, Scenario, default_scenario, make_panel

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def scene():
    return default_scenario()


@pytest.fixture
def tiny_scene():
    """One 2x2 RIS, three measurements, thermal noise only."""
    base = default_scenario()
    return Scenario(ap=base.ap, ris_panels=(make_panel("ris1", 2, 2),),
                    ue_position=base.ue_position, noise=NoiseModel(num_nlos=0),
                    num_measurements=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_scene():
    """Both default walls with 3x3 panels and eight measurements."""
    base = default_scenario()
    return Scenario(ap=base.ap, ris_panels=(make_panel("ris1", 3, 3), make_panel("ris2", 3, 3)),
                    ue_position=base.ue_position, num_measurements=8)
