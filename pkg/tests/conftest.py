"""Shared helpers: oracle scenes and closed-form expectations.

The standard test scenes put the scan on [0, 1] seconds (tau = 1/(H-1),
t_mid = 0.5), so velocities in px/s equal displacements in px per scan and
normalized scan time runs 0 at the first scanline to 1 at the last.
"""

import numpy as np
import pytest

import rscorrect as rc


def make_scene(seed, vx, vy, size=256, channels=1):
    margin = float(np.ceil(max(abs(vx), abs(vy))) + 4.0)
    return rc.SceneSpec(size, size, rc.Translation(vx, vy), seed=seed, channels=channels, margin=margin)


def scan_pair(spec):
    t2b = rc.scan_for_scene(spec, rc.Direction.TOP_TO_BOTTOM)
    return t2b, t2b.with_direction(rc.Direction.BOTTOM_TO_TOP)


def render_dual_pair(spec):
    s1, s2 = scan_pair(spec)
    return rc.render_rs_exact(spec, s1), rc.render_rs_exact(spec, s2), s1


def exact_dual_flow(height, width, vx, vy):
    """Closed-form flow between the dual pair of a translation scene.

    For velocity (vx, vy) px per scan, the t2b->b2t flow at 1-based row i
    spans the implicit time gap ``dt = (H + 1 - 2 i) / (H - 1 + vy)`` and
    equals velocity * dt; the reverse direction is symmetric.
    """
    i1 = np.arange(1, height + 1, dtype=np.float64)[:, None]
    dt_ab = (height + 1.0 - 2.0 * i1) / (height - 1.0 + vy)
    dt_ba = (2.0 * i1 - height - 1.0) / (height - 1.0 - vy)
    ones = np.ones((height, width))
    f_ab = rc.FlowField(vx * dt_ab * ones, vy * dt_ab * ones, np.ones((height, width), dtype=bool))
    f_ba = rc.FlowField(vx * dt_ba * ones, vy * dt_ba * ones, np.ones((height, width), dtype=bool))
    return f_ab, f_ba


def interior_psnr(a, b, border=16):
    return rc.psnr(a, b, border=border)


@pytest.fixture(scope="session")
def small_pair():
    """One cached 128px dual pair with moderate motion, plus its geometry."""
    spec = make_scene(11, 6.0, -3.0, size=128)
    i_t2b, i_b2t, scan = render_dual_pair(spec)
    return spec, i_t2b, i_b2t, scan
