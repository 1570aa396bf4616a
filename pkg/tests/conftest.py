import numpy as np
import pytest

from maggrab.geom import Line3, orthonormalize

ACCEPTANCE_VERDICTS = []


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_rotation(rng):
    return orthonormalize(rng.normal(size=(3, 3)))


def random_line(rng, scale=1.0):
    return Line3(rng.uniform(-scale, scale, 3), random_unit(rng))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


def degenerate_start_pose(cfg, radial_offset=-0.35):
    """Tool pose whose sensor baseline points straight at the conductor.

    Both magnetometers then sit on one radial ray of the wire, so their field
    vectors are parallel. Tool z is tilted 45 degrees between the wire and the
    tangential direction, so a quarter turn about it breaks the symmetry.
    """
    from maggrab.geom import RigidTransform, closest_point_on_line, normalize

    line = cfg.truth_line_base()
    g = closest_point_on_line(line, np.zeros(3))
    radial = normalize(g)
    z = normalize(line.direction + np.cross(radial, line.direction))
    R = np.column_stack([radial, np.cross(z, radial), z])
    mount_z = cfg.m1_mount.translation[2]
    return RigidTransform(R, g + radial_offset * radial - mount_z * z)
