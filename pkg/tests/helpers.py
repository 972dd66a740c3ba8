"""Shared builders for random test fixtures."""

import numpy as np

from bundlemw.gauss import BundleGaussian, GaussianMixture
from bundlemw.geometry import Point, build_reference_frame


def random_spd(rng, d, scale=1.0):
    A = rng.standard_normal((d, d))
    return scale * (A @ A.T) + 0.05 * np.eye(d)


def make_mixture(rng, K, D, frame=None, cov_scale=0.1):
    """Random mixture with basepoints scattered around the frame point."""
    if frame is None:
        frame = build_reference_frame(Point(np.eye(D)[-1]), rng_seed=17)
    comps = []
    for _ in range(K):
        m = Point(frame.p.coords + 0.8 * rng.standard_normal(D))
        comps.append(BundleGaussian(m, random_spd(rng, D - 1, cov_scale)))
    w = rng.random(K) + 0.1
    return GaussianMixture(w / w.sum(), comps, frame)
