import logging

import pytest

from islmsim.dynamics import attach_to_branch, detect_cycle, integrate, reduced_simulate
from islmsim.geometry import trace_lm_isocline
from islmsim.reference import (
    multiwindow_domain,
    no_trap_spec,
    reference_domain,
    reference_spec,
    steep_is_spec,
    three_window_spec,
    two_window_spec,
)

logging.getLogger("islmsim").setLevel(logging.ERROR)


@pytest.fixture(scope="session")
def ref_spec():
    return reference_spec()


@pytest.fixture(scope="session")
def ref_domain():
    return reference_domain()


@pytest.fixture(scope="session")
def ref_isocline(ref_spec, ref_domain):
    return trace_lm_isocline(ref_spec, ref_domain["y_range"], ref_domain["y_steps"],
                             ref_domain["r_range"], ref_domain["scan_n"])


@pytest.fixture(scope="session")
def ref_reduced_cycle(ref_spec, ref_isocline):
    branch, _ = attach_to_branch(ref_spec, ref_isocline, 1.5, 0.01)
    traj = reduced_simulate(ref_spec, 1.5, branch, 40.0, ref_isocline)
    cycle = detect_cycle(traj, ref_spec)
    assert cycle is not None
    return traj, cycle


@pytest.fixture(scope="session")
def eps_ladder():
    """Full-system runs for epsilon in {1e-2, 1e-3, 1e-4}, started near the
    cycle so a couple of loops suffice after a short transient."""
    runs = {}
    settings = {1e-2: (3.0, 0.1), 1e-3: (2.6, 1.0), 1e-4: (2.2, 10.0)}
    for eps, (periods, stride) in settings.items():
        spec = reference_spec(epsilon=eps)
        t_end = periods * 6.1 / eps
        traj = integrate(spec, 1.5, 0.01, t_end, stride=stride)
        cycle = detect_cycle(traj, spec)
        assert cycle is not None, f"no cycle detected at epsilon={eps}"
        runs[eps] = (spec, traj, cycle)
    return runs


@pytest.fixture(scope="session")
def multi_domain():
    return multiwindow_domain()


@pytest.fixture(scope="session")
def all_window_specs(multi_domain, ref_domain):
    return {
        0: (no_trap_spec(), ref_domain),
        1: (reference_spec(), ref_domain),
        2: (two_window_spec(), multi_domain),
        3: (three_window_spec(), multi_domain),
    }


@pytest.fixture(scope="session")
def steep_spec():
    return steep_is_spec()
