import numpy as np
import pytest

from pgnnff.feedforward import PhysicalEstimates
from pgnnff.plant import PlantParams
from pgnnff.trajgen import TrajectorySpec, back_and_forth, plan_motion


@pytest.fixture(scope="session")
def nominal_spec():
    return TrajectorySpec(
        displacement=0.05, v_max=0.05, a_max=4.0, j_max=1000.0, cruise_fraction=0.5, sample_time=1e-4
    )


@pytest.fixture(scope="session")
def nominal_profile(nominal_spec):
    return plan_motion(nominal_spec)


@pytest.fixture(scope="session")
def nominal_cycle(nominal_profile):
    """One back-and-forth evaluation cycle of the nominal move."""
    return back_and_forth(nominal_profile, 1)


@pytest.fixture(scope="session")
def table_plant():
    return PlantParams()


@pytest.fixture(scope="session")
def true_estimates(table_plant):
    return PhysicalEstimates(
        mass=table_plant.mass, f_v=table_plant.friction.f_v, f_c=table_plant.friction.f_c
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1337)
