"""Fuzzy c-means with seeded farthest-point initialisation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bvpp_sim.errors import DegenerateInput

ZERO_DIST = 1e-12


@dataclass(eq=False)
class FcmResult:
    centroids: np.ndarray  # (c, dims), in the clustering (standardized) space
    membership: np.ndarray  # (n, c)
    m: float
    hard_labels: np.ndarray
    iterations: int
    objective: float
    objective_history: list = field(default_factory=list)
    row_sum_error: list = field(default_factory=list)  # max |sum_k U[i,k] - 1| per iteration
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    def to_feature_space(self) -> np.ndarray:
        if self.center is None:
            return self.centroids
        return self.centroids * self.scale + self.center


def standardize(points):
    points = np.asarray(points, dtype=float)
    center = points.mean(axis=0)
    scale = points.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (points - center) / scale, center, scale


def memberships(points, centroids, m):
    """U[i,k] = 1 / sum_j (d_ik / d_ij)^(2/(m-1)); a point sitting on a
    centroid belongs to it fully (lowest index if several coincide)."""
    d = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
    u = np.empty_like(d)
    on_centroid = d <= ZERO_DIST
    hit = on_centroid.any(axis=1)
    if (~hit).any():
        dd = d[~hit]
        ratio = (dd[:, :, None] / dd[:, None, :]) ** (2.0 / (m - 1.0))
        u[~hit] = 1.0 / ratio.sum(axis=2)
    if hit.any():
        u[hit] = 0.0
        u[np.flatnonzero(hit), on_centroid[hit].argmax(axis=1)] = 1.0
    return u, d


def objective(u, d, m) -> float:
    return float(np.sum(u**m * d**2))


def _init_centroids(points, c, rng):
    chosen = [int(rng.integers(len(points)))]
    dist = np.linalg.norm(points - points[chosen[0]], axis=1)
    for _ in range(1, c):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return points[chosen].copy()


def fcm(points, c=3, m=2.0, tol=1e-6, max_iter=300, seed=0, standardized=True) -> FcmResult:
    """Cluster ``points`` (n x dims) into ``c`` fuzzy groups.

    Features are z-scored per dimension first unless ``standardized`` is
    False; centroids are reported in the space that was clustered.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if c < 2 or n <= c:
        raise DegenerateInput(f"need n > c >= 2, got n={n}, c={c}")
    if m <= 1:
        raise ValueError("fuzzifier m must be > 1")
    if len(np.unique(x, axis=0)) < c:
        raise DegenerateInput(f"fewer than {c} distinct points")
    center = scale = None
    if standardized:
        x, center, scale = standardize(x)

    rng = np.random.default_rng(seed)
    v = _init_centroids(x, c, rng)
    history, row_err = [], []
    it = 0
    for it in range(1, max_iter + 1):
        u, _ = memberships(x, v, m)
        row_err.append(float(np.abs(u.sum(axis=1) - 1.0).max()))
        w = u**m
        v_new = (w.T @ x) / w.sum(axis=0)[:, None]
        d_new = np.linalg.norm(x[:, None, :] - v_new[None, :, :], axis=2)
        history.append(objective(u, d_new, m))
        shift = float(np.abs(v_new - v).max())
        v = v_new
        if shift < tol:
            break

    u, d = memberships(x, v, m)
    row_err.append(float(np.abs(u.sum(axis=1) - 1.0).max()))
    final = objective(u, d, m)
    history.append(final)
    return FcmResult(
        centroids=v,
        membership=u,
        m=m,
        hard_labels=np.argmax(u, axis=1),
        iterations=it,
        objective=final,
        objective_history=history,
        row_sum_error=row_err,
        center=center,
        scale=scale,
    )
