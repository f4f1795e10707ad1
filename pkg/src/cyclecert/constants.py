"""Scalar bounds consumed by the certificates.

Everything here is a sampled estimate, not a rigorous enclosure; each
estimator therefore records its sampling resolution so certificates can
carry the provenance of every constant.

Two conventions are supported for the Jacobian-derived growth constant and
for the magnitude bounds, selected per pipeline profile:

* ``spectral_radius`` / ``state``: largest |eigenvalue| of J, and bounds on
  |x| over the working set.  These are the conventions the certification
  pipeline defaults to; they reproduce the reference tolerances of the
  planar test problems.
* ``spectral_norm`` / ``field``: largest singular value of J (a true
  Euclidean Lipschitz bound on a convex region), and bounds on |f(x)|.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    CertificateBlockedError,
    EquilibriumProximityError,
    InputError,
    TransversalityLossError,
)
from .euler import EulerTrajectory, Exclusion, Section, batch_first_return
from .measures import M_FLOOR, _rot90
from .systems import VectorField


@dataclass(frozen=True)
class RegionBox:
    """Axis-aligned box for the working region (tube plus margin)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise InputError("invalid region box bounds")

    @classmethod
    def from_points(cls, points, margin: float = 0.0) -> "RegionBox":
        points = np.asarray(points, dtype=float)
        return cls(points.min(axis=0) - margin, points.max(axis=0) + margin)

    def contains(self, points, tol: float = 0.0) -> bool:
        points = np.asarray(points, dtype=float)
        return bool(
            np.all(points >= self.lo - tol) and np.all(points <= self.hi + tol)
        )

    def grid(self, resolution: int) -> np.ndarray:
        axes = [
            np.linspace(self.lo[k], self.hi[k], resolution)
            for k in range(self.lo.size)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


def _as_samples(field: VectorField, region, grid: int) -> np.ndarray:
    if isinstance(region, RegionBox):
        return region.grid(grid)
    pts = np.asarray(region, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != field.dim:
        raise InputError("expected a RegionBox or an (m, n) array of points")
    return pts


def estimate_lipschitz(
    field: VectorField,
    region,
    grid: int = 41,
    mode: str = "spectral_radius",
    safety: float = 1.0,
) -> float:
    """Growth constant of f from Jacobian samples over a region.

    ``region`` is a :class:`RegionBox` (gridded at ``grid`` points per axis)
    or an explicit array of sample points.  ``spectral_norm`` gives the
    Euclidean operator norm (a Lipschitz bound when the region is convex);
    ``spectral_radius`` the largest eigenvalue magnitude.
    """
    pts = _as_samples(field, region, grid)
    J = field.jac_raw(pts)
    if mode == "spectral_norm":
        JTJ = np.swapaxes(J, -1, -2) @ J
        val = float(np.sqrt(np.linalg.eigvalsh(JTJ)[..., -1].max()))
    elif mode == "spectral_radius":
        val = float(np.abs(np.linalg.eigvals(J)).max())
    else:
        raise InputError(f"unknown Lipschitz mode {mode!r}")
    return safety * val


def estimate_magnitude_bounds(
    field: VectorField, region, grid: int = 41, magnitude: str = "field"
):
    """(min, max) of |f(x)| (``field``) or |x| (``state``) over samples."""
    pts = _as_samples(field, region, grid)
    if magnitude == "field":
        vals = np.linalg.norm(field.f_raw(pts), axis=-1)
    elif magnitude == "state":
        vals = np.linalg.norm(pts, axis=-1)
    else:
        raise InputError(f"unknown magnitude kind {magnitude!r}")
    return float(vals.min()), float(vals.max())


def estimate_speed_bounds(
    field: VectorField, region, grid: int = 41, m_floor: float = M_FLOOR
):
    """(m, M): sampled min and max of |f| over a region or point set.

    Raises if the minimum falls below the equilibrium floor, since every
    transverse construction downstream divides by |f|.
    """
    m, M = estimate_magnitude_bounds(field, region, grid, magnitude="field")
    if m <= m_floor:
        raise EquilibriumProximityError(
            f"sampled min |f| = {m:g} is at the floor; an equilibrium may "
            "lie inside the region"
        )
    return m, M


# --------------------------------------------------------------------------
# phase-rate (moving-section reparametrization) bounds
# --------------------------------------------------------------------------


def theta_dot(field: VectorField, x_i, s: float, xi_theta, m_floor: float = M_FLOOR):
    """Derivative of the synchronized time at offset s along one segment.

    ``xi_theta`` must lie on the moving section at x_i(s) (orthogonal to
    f(x_i(s)) through it).  Closed form from implicit differentiation of the
    synchronization identity; validated against finite differences of a
    numerically continued synchronization in the test suite.
    """
    x_i = np.asarray(x_i, dtype=float)
    xi = np.asarray(xi_theta, dtype=float)
    f_i = field.f_raw(x_i)
    c = x_i + s * f_i
    f_c = field.f_raw(c)
    num = float(f_i @ f_c - (xi - c) @ (field.jac_raw(c) @ f_i))
    den = float(field.f_raw(xi) @ f_c)
    nfc = float(np.linalg.norm(f_c))
    if abs(den) < m_floor * nfc:
        raise TransversalityLossError(
            f"synchronization denominator {den:g} below floor at s={s:g}"
        )
    return num / den


def _theta_dot_grid_2d(field, x_i, h, radius_at_s, n_s, offsets):
    """theta-dot values on an (offsets, s) grid for one planar segment."""
    f_i = field.f_raw(x_i)
    s = np.linspace(0.0, h, n_s)
    C = x_i[None, :] + s[:, None] * f_i[None, :]
    FC = field.f_raw(C)
    nf = np.linalg.norm(FC, axis=-1, keepdims=True)
    W = _rot90(FC) / nf
    JC = field.jac_raw(C)
    Jf = np.einsum("sij,j->si", JC, f_i)
    rad = np.broadcast_to(np.asarray(radius_at_s, dtype=float), (n_s,))
    vals = np.empty((len(offsets), n_s))
    for k, o in enumerate(offsets):
        XI = C + o * rad[:, None] * W
        num = FC @ f_i - np.einsum("si,si->s", XI - C, Jf)
        den = np.einsum("si,si->s", field.f_raw(XI), FC)
        if np.any(np.abs(den) < M_FLOOR * nf[:, 0]):
            raise TransversalityLossError(
                "synchronization denominator vanished on the offset grid"
            )
        vals[k] = num / den
    return vals


def estimate_ab(
    field: VectorField,
    traj: EulerTrajectory,
    i: int,
    delta_profile,
    n_s: int = 5,
    n_offsets: int = 5,
    pad_factor: float = 1.0,
):
    """Per-segment phase-rate bounds (a, b) from a theta-dot grid.

    Evaluates the closed-form rate on an s-grid and on transverse offsets up
    to the local tube radius (both signs), then widens the observed range by
    ``pad_factor`` times the largest neighbor jump.  a must come out
    positive, otherwise the step is too large or the tube too fat.
    """
    from .errors import InvalidReparametrizationError

    offsets = np.linspace(-1.0, 1.0, n_offsets)
    vals = _theta_dot_grid_2d(field, traj.nodes[i], traj.h, delta_profile, n_s, offsets)
    jump = 0.0
    if vals.size > 1:
        jump = max(
            np.abs(np.diff(vals, axis=0)).max() if vals.shape[0] > 1 else 0.0,
            np.abs(np.diff(vals, axis=1)).max() if vals.shape[1] > 1 else 0.0,
        )
    margin = pad_factor * 0.5 * jump
    a = float(vals.min() - margin)
    b = float(vals.max() + margin)
    if a <= 0.0:
        raise InvalidReparametrizationError(
            f"phase-rate lower bound {a:g} <= 0 at segment {i}"
        )
    return a, b


# --------------------------------------------------------------------------
# return-time sweep
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SectionDisk:
    """B(center, radius) intersected with the section through center."""

    center: np.ndarray
    radius: float
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float))

    def sample_points(self, n: int, seed: int = 0) -> np.ndarray:
        """n points of the disk; planar case: center, both endpoints, then
        seeded uniform draws on the segment."""
        if self.center.size != 2:
            raise InputError("sampling is implemented for planar sections")
        w = _rot90(self.normal / np.linalg.norm(self.normal))
        base = [0.0]
        if n >= 3:
            base += [-1.0, 1.0]
        if n > len(base):
            rng = np.random.default_rng(seed)
            base += list(rng.uniform(-1.0, 1.0, n - len(base)))
        u = np.asarray(base[:n])
        return self.center[None, :] + (u * self.radius)[:, None] * w[None, :]

    def linspace_points(self, n: int) -> np.ndarray:
        """n evenly spaced points including both endpoints (and the center
        when n is odd)."""
        w = _rot90(self.normal / np.linalg.norm(self.normal))
        u = np.linspace(-1.0, 1.0, n)
        return self.center[None, :] + (u * self.radius)[:, None] * w[None, :]


@dataclass
class EtaEstimate:
    """Return-time sweep results over a section disk."""

    eta: float
    T_lo: float
    T_hi: float
    R_prime: float
    n_samples: int
    refine: int
    seed: int
    flow_times: np.ndarray = dc_field(repr=False, default=None)

    def provenance(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "refine": self.refine,
            "seed": self.seed,
        }


def estimate_eta(
    field: VectorField,
    disk: SectionDisk,
    n_samples: int,
    h: float,
    horizon: float,
    refine: int = 10,
    seed: int = 0,
) -> EtaEstimate:
    """Sweep first return times over the disk.

    Fine-step surrogates of the exact flow (step h/refine) give T_lo, T_hi
    and the floor eta = T_lo/2; the plain step h gives R', the bound on the
    discrete first-return time.  A sample that never returns within the
    horizon blocks certification.
    """
    pts = disk.sample_points(n_samples, seed=seed)
    section = Section(disk.center, disk.normal)
    h_fine = h / refine
    excl_fine = Exclusion(t_min=10.0 * h_fine, r_excl=0.5 * disk.radius)
    t_flow = batch_first_return(field, pts, h_fine, horizon, section, excl_fine)
    if np.isnan(t_flow).any():
        bad = int(np.nonzero(np.isnan(t_flow))[0][0])
        raise CertificateBlockedError(
            f"return-time sweep: sample {bad} at {pts[bad].tolist()} did not "
            f"return within horizon {horizon:g}"
        )
    excl = Exclusion(t_min=10.0 * h, r_excl=0.5 * disk.radius)
    t_euler = batch_first_return(field, pts, h, horizon, section, excl)
    if np.isnan(t_euler).any():
        bad = int(np.nonzero(np.isnan(t_euler))[0][0])
        raise CertificateBlockedError(
            f"return-time sweep: discrete sample {bad} did not return "
            f"within horizon {horizon:g}"
        )
    T_lo, T_hi = float(t_flow.min()), float(t_flow.max())
    return EtaEstimate(
        eta=0.5 * T_lo,
        T_lo=T_lo,
        T_hi=T_hi,
        R_prime=float(t_euler.max()),
        n_samples=n_samples,
        refine=refine,
        seed=seed,
        flow_times=t_flow,
    )


# --------------------------------------------------------------------------
# aggregated constants
# --------------------------------------------------------------------------


@dataclass
class GlobalConstants:
    """Every scalar the certificates consume, with provenance."""

    L: float
    M_f: float
    M_C: float
    m: float
    a: float
    b: float
    eta: float
    T_lo: float
    T_hi: float
    R_prime: float
    provenance: dict = dc_field(default_factory=dict)

    def validate(self):
        if not (0.0 < self.m <= self.M_C <= self.M_f * (1 + 1e-12)):
            raise InputError(
                f"magnitude bounds violate 0 < m <= M_C <= M_f: "
                f"{self.m}, {self.M_C}, {self.M_f}"
            )
        if not (0.0 < self.a <= self.b):
            raise InputError(f"phase-rate bounds violate 0 < a <= b: {self.a}, {self.b}")
        if not (0.0 < self.eta <= self.T_lo <= self.T_hi):
            raise InputError("return-time bounds violate 0 < eta <= T_lo <= T_hi")

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "M_f": self.M_f,
            "M_C": self.M_C,
            "m": self.m,
            "a": self.a,
            "b": self.b,
            "eta": self.eta,
            "T_lo": self.T_lo,
            "T_hi": self.T_hi,
            "R_prime": self.R_prime,
            "provenance": self.provenance,
        }
