import numpy as np

from prandtl_lab.decay import InitialDataSpec, make_initial_data
from prandtl_lab.physical import YGrid, continuity_v, march_physical, u0_from_station
from prandtl_lab.vonmises import MarchConfig, PsiGrid, init_station, march, output_schedule


def test_continuity_v_linear():
    y = np.linspace(0.0, 2.0, 11)
    assert np.allclose(continuity_v(y, np.ones_like(y)), -y)


def test_cross_solver_short(profile):
    sched = output_schedule(1.0, 10.0, 10)
    spec = InitialDataSpec()
    g = PsiGrid.for_run(800, 1.0, 10.0)
    vm = march(init_station(profile, make_initial_data(spec, profile, 1.0), 1.0, g), sched, MarchConfig(dx0=0.02))
    yg = YGrid.for_run(800, 1.0, 10.0)
    ph = march_physical(u0_from_station(vm[0]), 1.0, sched, yg, MarchConfig(dx0=0.02, picard_tol=1e-10, picard_max=400))
    for a, b in zip(vm, ph):
        ua = u0_from_station(a)(b.y)
        assert np.max(np.abs(ua - b.u)) < 1e-3
