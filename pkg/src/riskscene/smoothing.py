"""Bezier smoothing of sampled trajectories.

Gaussian sampling leaves small frame-to-frame fluctuations in each drawn
trajectory; re-fitting the points as the control polygon of a Bezier curve
and resampling removes them. With the default 6-frame horizon the last
observed point is prepended as control point 0, giving a degree-6 curve
anchored at the agent's current position; other horizons use the predicted
points alone with degree T_pred - 1.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import ValidationError


def bezier_curve(control_points: np.ndarray, sigmas) -> np.ndarray:
    """Evaluate the Bezier curve of the control polygon at parameter values.

    B(s) = sum_t C(n, t) p_t (1-s)^(n-t) s^t with n = len(points) - 1.
    """
    control = np.asarray(control_points, dtype=np.float64)
    if control.ndim != 2 or len(control) < 2:
        raise ValidationError("bezier needs >=2 control points of shape (P, 2)")
    n = len(control) - 1
    s = np.asarray(sigmas, dtype=np.float64)[:, None]
    out = np.zeros((len(s), control.shape[1]))
    for t in range(n + 1):
        out += comb(n, t) * control[t] * (1.0 - s) ** (n - t) * s**t
    return out


def bezier_smooth(trajectory: np.ndarray, last_observed=None) -> np.ndarray:
    """Smooth one (T_pred, 2) trajectory, returning T_pred points.

    When last_observed is given it becomes control point 0 and the resampled
    parameters skip s=0, so the output still has T_pred points ending exactly
    at the final predicted point.
    """
    traj = np.asarray(trajectory, dtype=np.float64)
    t_pred = len(traj)
    if t_pred < 2:
        return traj.copy()
    if last_observed is not None:
        control = np.vstack([np.asarray(last_observed, dtype=np.float64), traj])
        sigmas = np.arange(1, t_pred + 1) / t_pred
    else:
        control = traj
        sigmas = np.arange(t_pred) / (t_pred - 1)
    return bezier_curve(control, sigmas)


def smooth_samples(samples: np.ndarray, last_observed: np.ndarray) -> np.ndarray:
    """Apply bezier_smooth over (h, N, T_pred, 2) samples; last_observed is (N, 2)."""
    out = np.empty_like(samples)
    h, n = samples.shape[:2]
    for draw in range(h):
        for agent in range(n):
            out[draw, agent] = bezier_smooth(samples[draw, agent], last_observed[agent])
    return out
