"""Feedforward motion-control workbench for a simulated coreless linear motor.

Simulates a friction-dominated linear-motor stage under a discrete PID
feedback loop and benchmarks five inversion-based feedforward controllers
against it: no feedforward, mass-acceleration, viscous+Coulomb friction
compensation, a black-box NNARX network, and two physics-guided neural
networks (PGNN-I, PGNN-II) trained with Levenberg-Marquardt.
"""

__version__ = "0.1.0"

from .plant import FrictionParams, PlantParams, PlantState, friction_force, step
from .trajgen import TrajectorySpec, SetpointProfile, plan_motion, back_and_forth, scaled_spec
from .feedback import LtiFilter, discretize_cfb
from .signals import AffineScaler, central_velocity, zoh_accel, sign0, fit_scaler
from .mlp import Mlp, TrainConfig, TrainReport, forward, train_lm, multistart
from .feedforward import (
    PhysicalEstimates,
    ff_none,
    ff_mass_acc,
    ff_friction_comp,
    ff_nnarx,
    ff_pgnn1,
    ff_pgnn2,
    ideal_ff,
    pgl_init_weights,
)
from .ident import Dataset, DitherConfig, generate_dataset, ls_identify, build_regression
from .bench import ExperimentResult, mse, mae, run_tracking
