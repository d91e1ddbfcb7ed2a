import numpy as np
import pytest

import capasense as cs


@pytest.fixture(scope="session")
def reference_scene_noiseless():
    """Benchmark two-target scene, zero noise, small T for speed."""
    return cs.reference_scene(noise_power=0.0, snapshots=24, seed=11)


@pytest.fixture(scope="session")
def noiseless_sim(reference_scene_noiseless):
    grid, snaps, field = cs.simulate(reference_scene_noiseless, 16)
    return reference_scene_noiseless, grid, snaps, field


@pytest.fixture(scope="session")
def noisy_sim():
    """Moderate-noise medium-T simulation shared by covariance tests."""
    scene = cs.reference_scene(noise_power=1e-3, snapshots=200, seed=7)
    grid, snaps, field = cs.simulate(scene, 16)
    return scene, grid, snaps, field


def riemann_pair_integral(scene, integrand, n=1500):
    """Midpoint-rule aperture integral of ``integrand(points) -> (..., N)``.

    Independent oracle for quadrature results; points are cell centers of an
    n-by-n partition of the aperture.
    """
    ap = scene.aperture
    dx, dy = ap.length_x / n, ap.length_y / n
    xs = (np.arange(n) + 0.5) * dx - ap.length_x / 2
    out = None
    # stream over x-slices to bound memory
    for x in xs:
        ys = (np.arange(n) + 0.5) * dy - ap.length_y / 2
        pts = np.column_stack([np.full(n, x), ys, np.zeros(n)])
        vals = integrand(pts)
        contrib = vals.sum(axis=-1) * dx * dy
        out = contrib if out is None else out + contrib
    return out
