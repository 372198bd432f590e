import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pgnnff.trajgen import (
    ACCEL,
    CRUISE,
    DECEL,
    DWELL,
    InfeasibleTrajectory,
    TrajectorySpec,
    back_and_forth,
    export_csv,
    plan_motion,
    scaled_spec,
)

TS = 1e-4


def reintegrate_segments(segments, ts, n_lead, n_total):
    """Independent oracle: integrate the emitted (duration, jerk) table through
    elementary kinematics, splitting sample intervals at segment boundaries."""
    bounds = []
    t = 0.0
    for dur, jerk in segments:
        bounds.append((t, t + dur, jerk))
        t += dur
    t_move = t

    def advance(p, v, a, jerk, dt):
        return (
            p + v * dt + 0.5 * a * dt * dt + jerk * dt**3 / 6.0,
            v + a * dt + 0.5 * jerk * dt * dt,
            a + jerk * dt,
        )

    positions = np.zeros(n_total)
    p = v = a = 0.0
    tau = 0.0
    final_p = None
    for k in range(n_total):
        target = k * ts - n_lead * ts
        if target <= 0.0:
            positions[k] = 0.0
            continue
        if tau < 0.0:
            tau = 0.0
        while tau < target - 1e-18 and tau < t_move:
            seg = next((b for b in bounds if b[0] <= tau < b[1]), None)
            if seg is None:
                break
            step_end = min(seg[1], target, t_move)
            p, v, a = advance(p, v, a, seg[2], step_end - tau)
            tau = step_end
        if final_p is None and tau >= t_move:
            final_p = p
        positions[k] = p if target < t_move else final_p
    return positions


def test_nominal_peak_velocity_and_endpoint(nominal_profile):
    r = nominal_profile.positions
    v = np.diff(r) / TS
    assert np.max(v) == pytest.approx(0.05, abs=1e-6)
    assert r[-1] == pytest.approx(0.05, abs=1e-9)
    assert r[0] == 0.0


def test_zero_displacement_is_all_dwell():
    p = plan_motion(TrajectorySpec(0.0, 0.05, 4.0, 1000.0))
    assert np.all(p.positions == 0.0)
    assert np.all(p.labels == DWELL)


def test_reintegration_oracle_matches_positions(nominal_profile):
    n_lead = int(np.argmax(nominal_profile.labels != DWELL))
    oracle = reintegrate_segments(
        nominal_profile.segments, TS, n_lead, len(nominal_profile)
    )
    assert np.max(np.abs(oracle - nominal_profile.positions)) < 1e-9


def test_reintegration_oracle_non_grid_aligned():
    # fast spec has a jerk time that is not a multiple of Ts
    spec = TrajectorySpec(0.05, 0.2, 16.0, 1000.0)
    p = plan_motion(spec)
    n_lead = int(np.argmax(p.labels != DWELL))
    oracle = reintegrate_segments(p.segments, TS, n_lead, len(p))
    assert np.max(np.abs(oracle - p.positions)) < 1e-9


def test_cruise_fraction_of_samples(nominal_profile):
    frac = np.mean(nominal_profile.labels == CRUISE)
    assert frac == pytest.approx(0.5, abs=3.0 / len(nominal_profile))


def test_cruise_pairs_constant_first_difference(nominal_profile):
    r = nominal_profile.positions
    lab = nominal_profile.labels
    pair = (lab[:-1] == CRUISE) & (lab[1:] == CRUISE)
    diffs = np.diff(r)[pair]
    assert np.max(np.abs(diffs - diffs[0])) < 1e-15


def test_time_reversal_symmetry(nominal_profile):
    # nominal move durations are grid-aligned, so the sampled profile is an
    # exact mirror about displacement/2
    r = nominal_profile.positions
    mirrored = nominal_profile.spec.displacement - r[::-1]
    assert np.max(np.abs(r - mirrored)) < 1e-12


def test_labels_partition_profile(nominal_profile):
    lab = nominal_profile.labels
    assert set(np.unique(lab)) == {DWELL, ACCEL, CRUISE, DECEL}
    # accel strictly precedes cruise strictly precedes decel
    assert np.argmax(lab == ACCEL) < np.argmax(lab == CRUISE) < np.argmax(lab == DECEL)


def test_infeasible_specs_rejected():
    with pytest.raises(InfeasibleTrajectory, match="unreachable"):
        plan_motion(TrajectorySpec(0.0001, 0.5, 4.0, 1000.0))
    with pytest.raises(InfeasibleTrajectory, match="cruise_fraction"):
        plan_motion(TrajectorySpec(0.05, 0.05, 4.0, 1000.0, cruise_fraction=0.99))
    with pytest.raises(InfeasibleTrajectory):
        plan_motion(TrajectorySpec(0.05, -0.05, 4.0, 1000.0))


def test_back_and_forth_round_trip(nominal_profile):
    bf = back_and_forth(nominal_profile, 1)
    assert bf.positions[-1] == pytest.approx(0.0, abs=1e-9)
    assert bf.positions[0] == 0.0
    # starts and ends at rest: first/last differences exactly zero
    assert bf.positions[1] - bf.positions[0] == 0.0
    assert bf.positions[-1] - bf.positions[-2] == 0.0


def test_back_and_forth_sample_count(nominal_profile):
    bf1 = back_and_forth(nominal_profile, 1)
    bf4 = back_and_forth(nominal_profile, 4)
    n_move = int(np.sum(nominal_profile.labels != DWELL))
    n_dwell_cycle = int(np.sum(bf1.labels == DWELL))
    assert len(bf4) == 4 * (2 * n_move + n_dwell_cycle)
    assert len(bf4) == 4 * len(bf1)


def test_back_and_forth_repetition_exact(nominal_profile):
    bf1 = back_and_forth(nominal_profile, 1)
    bf2 = back_and_forth(nominal_profile, 2)
    np.testing.assert_array_equal(bf2.positions, np.tile(bf1.positions, 2))


def test_back_and_forth_continuity(nominal_profile):
    bf = back_and_forth(nominal_profile, 2)
    assert np.max(np.abs(np.diff(bf.positions))) <= nominal_profile.spec.v_max * TS * (1 + 1e-9)


def test_scaled_spec_fast_slow(nominal_spec):
    fast = scaled_spec(nominal_spec, 4.0, 4.0)
    assert fast.v_max == pytest.approx(0.2)
    assert fast.a_max == pytest.approx(16.0)
    slow = scaled_spec(nominal_spec, 0.25, 0.25)
    assert slow.v_max == pytest.approx(0.0125)
    assert slow.a_max == pytest.approx(1.0)
    same = scaled_spec(nominal_spec, 1.0, 1.0)
    assert same == nominal_spec
    assert fast.displacement == nominal_spec.displacement
    assert fast.j_max == nominal_spec.j_max
    assert fast.sample_time == nominal_spec.sample_time


@st.composite
def feasible_specs(draw):
    d = draw(st.floats(0.01, 0.2))
    v = draw(st.floats(0.01, 0.3))
    a = draw(st.floats(0.5, 20.0))
    j = draw(st.floats(100.0, 5000.0))
    cf = draw(st.floats(0.2, 0.8))
    return TrajectorySpec(d, v, a, j, cruise_fraction=cf, sample_time=TS)


@given(spec=feasible_specs())
@settings(max_examples=25, deadline=None)
def test_profile_respects_limits(spec):
    try:
        p = plan_motion(spec)
    except InfeasibleTrajectory:
        assume(False)
    r = p.positions
    tol = 1.0 + 1e-9
    # difference quotients amplify the ~eps*|r| rounding of the exact samples
    # by 1/Ts^k; allow exactly that floor on top of the relative tolerance
    eps = np.finfo(float).eps * max(1.0, np.max(np.abs(r)))
    assert np.max(np.abs(np.diff(r))) / TS <= spec.v_max * tol + 4 * eps / TS
    assert np.max(np.abs(np.diff(r, 2))) / TS**2 <= spec.a_max * tol + 8 * eps / TS**2
    assert np.max(np.abs(np.diff(r, 3))) / TS**3 <= spec.j_max * tol + 16 * eps / TS**3
    assert r[-1] == pytest.approx(spec.displacement, abs=1e-9)


def test_export_csv_round_trip(tmp_path, nominal_profile):
    path = tmp_path / "profile.csv"
    export_csv(nominal_profile, path)
    raw = np.loadtxt(path, delimiter=",", skiprows=1)
    assert raw.shape == (len(nominal_profile), 3)
    np.testing.assert_array_equal(raw[:, 2], nominal_profile.positions)
    assert raw[10, 1] == pytest.approx(10 * TS)
