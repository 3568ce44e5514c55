import numpy as np
import pytest

from g2cone import shoot

MU_GRID = tuple(np.round(np.arange(1, 10) * 0.1, 10))
# members whose trajectory stays in the invariant region (mu < mu* ~ 0.5441)
MU_CONVERGING = tuple(m for m in MU_GRID if m < 0.544)


@pytest.fixture(scope="session")
def family_shapes():
    """Shape trajectories of the whole mu grid at tight tolerance."""
    return {mu: shoot.family_shape_trajectory(mu, t_max=200.0, tol=1e-12)
            for mu in MU_GRID}


@pytest.fixture(scope="session")
def family_launches():
    """Sphere launches of the whole mu grid to the u = 60 horizon."""
    return {mu: shoot.launch_sphere(mu, u_max=60.0) for mu in MU_GRID}
