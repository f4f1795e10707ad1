"""Explicit-Euler integration with dense piecewise-linear output.

The integrator stores the node sequence x_{i+1} = x_i + h f(x_i) and exposes
the dense interpolant x_i(s) = x_i + s f(x_i) for s in [0, h].  Because the
recurrence makes node differences equal h f(x_i) exactly, segment directions
are recovered from the stored nodes without re-evaluating f.

Hyperplane sections, crossing detection and return times live here as well:
each segment is linear, so in-segment crossing offsets are exact roots of a
linear equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import DivergedError, InputError
from .systems import VectorField


class EulerTrajectory:
    """Euler nodes plus the piecewise-linear dense interpolant.

    Immutable after construction: node arrays are write-protected and all
    queries are read-only.
    """

    def __init__(self, field: VectorField, x0, h: float, nodes: np.ndarray):
        self.field = field
        self.x0 = np.asarray(x0, dtype=float)
        self.h = float(h)
        self.nodes = nodes
        self.nodes.setflags(write=False)
        self.n_steps = nodes.shape[0] - 1
        self._seg_dirs = None
        self._f_nodes = None

    @property
    def horizon(self) -> float:
        return self.n_steps * self.h

    @property
    def seg_dirs(self) -> np.ndarray:
        """f at nodes 0..N-1, recovered exactly as (x_{i+1} - x_i)/h."""
        if self._seg_dirs is None:
            self._seg_dirs = (self.nodes[1:] - self.nodes[:-1]) / self.h
            self._seg_dirs.setflags(write=False)
        return self._seg_dirs

    @property
    def f_nodes(self) -> np.ndarray:
        """Cached f(x_i) for i = 0..N (one extra evaluation for the last node)."""
        if self._f_nodes is None:
            f_last = self.field.f_raw(self.nodes[-1])
            self._f_nodes = np.concatenate(
                [self.seg_dirs, f_last[None, :]], axis=0
            )
            self._f_nodes.setflags(write=False)
        return self._f_nodes

    def segment_of(self, t: float):
        """Return (i, s) with t = i*h + s, s in [0, h); final node maps to (N-1, h)."""
        if t < 0.0 or t > self.horizon * (1.0 + 1e-12):
            raise InputError(f"time {t} outside [0, {self.horizon}]")
        i = min(int(t / self.h), self.n_steps - 1)
        return i, max(t - i * self.h, 0.0)

    def dense_point(self, t: float) -> np.ndarray:
        """Evaluate the dense output x_i + s f(x_i) at time t."""
        i, s = self.segment_of(t)
        if s == 0.0:
            return self.nodes[i].copy()
        return self.nodes[i] + (s / self.h) * (self.nodes[i + 1] - self.nodes[i])

    def dense_points(self, ts) -> np.ndarray:
        """Vectorized dense output for an array of times."""
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < 0.0 or ts.max() > self.horizon * (1.0 + 1e-12)):
            raise InputError("times outside trajectory horizon")
        idx = np.minimum((ts / self.h).astype(int), self.n_steps - 1)
        s = ts - idx * self.h
        return self.nodes[idx] + (s / self.h)[..., None] * (
            self.nodes[idx + 1] - self.nodes[idx]
        )


def simulate(field: VectorField, x0, h: float, n_steps: int) -> EulerTrajectory:
    """Integrate dx/dt = f(x) with the explicit Euler scheme.

    Raises
    ------
    DivergedError
        If any node is non-finite; carries the first bad index.
    """
    if h <= 0.0:
        raise InputError("step size h must be positive")
    if n_steps < 1:
        raise InputError("n_steps must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (field.dim,):
        raise InputError(f"x0 must have shape ({field.dim},), got {x0.shape}")

    nodes = np.empty((n_steps + 1, field.dim))
    nodes[0] = x0
    if field.rhs_scalar2 is not None and field.dim == 2:
        rhs2 = field.rhs_scalar2
        u1, u2 = float(x0[0]), float(x0[1])
        try:
            for i in range(1, n_steps + 1):
                d1, d2 = rhs2(u1, u2)
                u1 += h * d1
                u2 += h * d2
                nodes[i, 0] = u1
                nodes[i, 1] = u2
        except OverflowError:
            raise DivergedError(f"state overflowed at step {i}", i) from None
    else:
        x = x0.copy()
        for i in range(1, n_steps + 1):
            x = x + h * field.f_raw(x)
            nodes[i] = x

    if not np.all(np.isfinite(nodes)):
        bad = int(np.nonzero(~np.isfinite(nodes).all(axis=1))[0][0])
        raise DivergedError(f"non-finite state at node {bad}", bad)
    return EulerTrajectory(field, x0, h, nodes)


# --------------------------------------------------------------------------
# sections and crossings
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Section:
    """Hyperplane through ``anchor`` orthogonal to ``normal``."""

    anchor: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float))
        if not np.linalg.norm(self.normal) > 0.0:
            raise InputError("section normal must be nonzero")

    @classmethod
    def through(cls, field: VectorField, anchor) -> "Section":
        anchor = np.asarray(anchor, dtype=float)
        return cls(anchor, field.f_raw(anchor))

    def offset(self, z) -> float:
        """Signed offset <z - anchor, normal>; zero on the section."""
        return float(np.dot(np.asarray(z, dtype=float) - self.anchor, self.normal))

    def contains(self, z, tol: float = 1e-9) -> bool:
        return abs(self.offset(z)) <= tol * np.linalg.norm(self.normal) * (
            1.0 + np.linalg.norm(z)
        )


@dataclass(frozen=True)
class Crossing:
    """One transversal crossing of a section in the positive direction."""

    step_index: int
    s_star: float
    time: float
    point: np.ndarray
    direction_dot: float


@dataclass(frozen=True)
class Exclusion:
    """Masks crossings near the start of the trajectory.

    Crossings before ``t_min`` are dropped, as are crossings that occur
    before the trajectory has first left the ball B(anchor, r_excl): the
    initial point usually sits on the section itself.
    """

    t_min: float
    r_excl: float


def default_exclusion(h: float, delta0: float) -> Exclusion:
    return Exclusion(t_min=10.0 * h, r_excl=0.5 * delta0)


def detect_crossings(
    traj: EulerTrajectory, section: Section, exclusion: Exclusion
) -> List[Crossing]:
    """All sign transitions g<0 -> g>=0 of g(t) = <x(t) - anchor, normal>.

    Only transitions with ``<f(anchor), f(point)> > 0`` count; the one-sided
    sign rule prevents double-counting tangential grazes.  Each in-segment
    offset is the exact root of the linear equation on its segment.
    """
    g = (traj.nodes - section.anchor) @ section.normal
    gi, gj = g[:-1], g[1:]
    mask = (gi < 0.0) & (gj >= 0.0)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return []

    h = traj.h
    s_star = -gi[idx] / (gj[idx] - gi[idx]) * h
    times = idx * h + s_star
    dirs = traj.seg_dirs[idx]
    points = traj.nodes[idx] + (s_star / h)[:, None] * (
        traj.nodes[idx + 1] - traj.nodes[idx]
    )
    f_anchor = traj.field.f_raw(section.anchor)
    ddots = traj.field.f_raw(points) @ f_anchor

    # first time the trajectory leaves B(anchor, r_excl)
    t_gate = exclusion.t_min
    if exclusion.r_excl > 0.0:
        dist = np.linalg.norm(traj.nodes - section.anchor, axis=1)
        outside = np.nonzero(dist > exclusion.r_excl)[0]
        if outside.size == 0:
            return []
        t_gate = max(t_gate, outside[0] * h)

    out = []
    for k in range(idx.size):
        if times[k] < t_gate or ddots[k] <= 0.0:
            continue
        out.append(
            Crossing(
                step_index=int(idx[k]),
                s_star=float(s_star[k]),
                time=float(times[k]),
                point=points[k],
                direction_dot=float(ddots[k]),
            )
        )
    return out


@dataclass
class ReturnTimes:
    """Return times R_p with N_p = ceil(R_p/h), plus a completeness flag."""

    returns: List[tuple]  # (R_p, N_p, Crossing)
    complete: bool

    def first(self):
        if not self.returns:
            return None
        return self.returns[0]


def return_times(
    traj: EulerTrajectory,
    section: Section,
    p_max: int,
    exclusion: Exclusion,
) -> ReturnTimes:
    """First ``p_max`` section returns.

    N_p is derived from the crossing's segment index (s_star in (0, h]
    places R_p in ((N_p - 1)h, N_p h] by construction), avoiding floating
    ceil hazards at segment boundaries; the bracketing is asserted.
    """
    crossings = detect_crossings(traj, section, exclusion)[:p_max]
    out = []
    for c in crossings:
        n_p = c.step_index + 1
        assert (n_p - 1) * traj.h < c.time <= n_p * traj.h * (1 + 1e-12), (
            c.time,
            n_p,
        )
        out.append((c.time, n_p, c))
    return ReturnTimes(returns=out, complete=len(out) >= p_max)


# --------------------------------------------------------------------------
# batched first-return scan (used by the return-time sweeps)
# --------------------------------------------------------------------------


def batch_first_return(
    field: VectorField,
    points: np.ndarray,
    h: float,
    horizon: float,
    section: Section,
    exclusion: Exclusion,
    chunk: int = 2048,
) -> np.ndarray:
    """First return times for a batch of initial points, NaN where none found.

    Integrates all points simultaneously and scans for the first qualifying
    section crossing of each trajectory; only O(batch) memory is used.
    """
    X = np.array(points, dtype=float)
    m = X.shape[0]
    n_steps = int(math.ceil(horizon / h))
    anchor, normal = section.anchor, section.normal
    f_anchor = field.f_raw(anchor)

    times = np.full(m, np.nan)
    g_prev = (X - anchor) @ normal
    left_ball = np.linalg.norm(X - anchor, axis=1) > exclusion.r_excl
    t_left = np.where(left_ball, 0.0, np.nan)

    step = 0
    while step < n_steps and np.isnan(times).any():
        n_do = min(chunk, n_steps - step)
        for k in range(n_do):
            F = field.f_raw(X)
            Xn = X + h * F
            g_new = (Xn - anchor) @ normal
            t0 = (step + k) * h

            newly_left = (~left_ball) & (
                np.linalg.norm(Xn - anchor, axis=1) > exclusion.r_excl
            )
            t_left[newly_left] = t0 + h
            left_ball |= newly_left

            hit = np.isnan(times) & (g_prev < 0.0) & (g_new >= 0.0)
            if hit.any():
                s = -g_prev[hit] / (g_new[hit] - g_prev[hit]) * h
                t_hit = t0 + s
                pts = X[hit] + (s / h)[:, None] * (Xn[hit] - X[hit])
                good = (
                    (field.f_raw(pts) @ f_anchor > 0.0)
                    & (t_hit >= exclusion.t_min)
                    & left_ball[hit]
                    & (t_hit >= np.where(np.isnan(t_left[hit]), np.inf, t_left[hit]))
                )
                sel = np.nonzero(hit)[0][good]
                times[sel] = t_hit[good]
            X = Xn
            g_prev = g_new
        step += n_do
    return times
