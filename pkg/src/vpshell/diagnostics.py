"""Instantaneous diagnostics of a shell-particle ensemble.

Everything in this module is a pure function of an immutable ensemble
snapshot.  Mass and energy reductions use numpy's pairwise summation,
which is deterministic for a fixed array layout.
"""

from __future__ import annotations

import math

import numpy as np

from .ensemble import DiagnosticsRecord, Ensemble, RadialDensityProfile
from .errors import DomainError

__all__ = [
    "cumulative_mass",
    "potential_energy",
    "kinetic_energy",
    "total_energy",
    "statistical_dispersion",
    "dilation_moment",
    "conformal_moment",
    "concentration_mass",
    "concentration_function",
    "build_radial_profile",
    "lq_norm",
    "galilean_shift",
    "diagnostics_record",
]

FOUR_PI = 4.0 * math.pi


def _sorted_mass_profile(r, mass):
    """Radii in increasing order plus the inclusive mass prefix sums.

    Ties are broken by original index (stable sort); enclosed-mass
    queries use strict comparison, so coincident radii never see each
    other's mass.
    """
    order = np.argsort(r, kind="stable")
    r_sorted = r[order]
    prefix = np.concatenate(([0.0], np.cumsum(mass[order])))
    return r_sorted, prefix


def _enclosed(r_sorted, prefix, radii):
    idx = np.searchsorted(r_sorted, radii, side="left")
    return prefix[idx]


def cumulative_mass(ensemble: Ensemble, r):
    """Mass strictly inside radius r.

    A particle evaluating the field at its own radius does not see its
    own mass (strict inequality), so a lone shell feels no self-force.
    Accepts a scalar or an array of radii.
    """
    r_arr = np.asarray(r, dtype=np.float64)
    if not np.all(np.isfinite(r_arr)):
        raise DomainError("query radius must be finite")
    if np.any(r_arr < 0.0):
        raise DomainError("query radius must be >= 0")
    r_sorted, prefix = _sorted_mass_profile(ensemble.r, ensemble.mass)
    out = _enclosed(r_sorted, prefix, r_arr)
    if np.isscalar(r) or r_arr.ndim == 0:
        return float(out)
    return out


def potential_energy(ensemble: Ensemble):
    """Field energy (1/2) integral |grad U|^2 of the ensemble.

    In spherical symmetry this is (1/(8 pi)) * integral_0^inf
    M(<r)^2 / r^2 dr, which is evaluated exactly for the
    piecewise-constant cumulative mass of the shell representation:

        (1/(8 pi)) [ sum_{i<N} M_i^2 (1/r_(i) - 1/r_(i+1)) + M^2/r_(N) ]

    with radii sorted increasingly and M_i the mass of the first i
    shells.  The result is >= 0; a lone shell of mass M at radius r
    contributes exactly M^2 / (8 pi r).
    """
    r_sorted, prefix = _sorted_mass_profile(ensemble.r, ensemble.mass)
    inv_r = 1.0 / r_sorted
    inner = prefix[1:-1] ** 2 * (inv_r[:-1] - inv_r[1:])
    tail = prefix[-1] ** 2 * inv_r[-1]
    return float((np.sum(inner) + tail) / (8.0 * math.pi))


def kinetic_energy(ensemble: Ensemble):
    """(1/2) sum m_i (w_i^2 + ell_i^2 / r_i^2)."""
    tangential = ensemble.ell / ensemble.r
    return float(0.5 * np.sum(ensemble.mass * (ensemble.w**2 + tangential**2)))


def total_energy(ensemble: Ensemble):
    """Conserved energy E = E_kin - E_pot (gravitational sign)."""
    return kinetic_energy(ensemble) - potential_energy(ensemble)


def statistical_dispersion(ensemble: Ensemble):
    """Mass-weighted spatial variance (1/M) sum m_i r_i^2.

    The centre of mass is the origin by construction, so this is the
    moment of inertia of the mass distribution about its centre.
    """
    return float(np.sum(ensemble.mass * ensemble.r**2) / ensemble.total_mass)


def dilation_moment(ensemble: Ensemble):
    """sum m_i r_i w_i; x.p reduces exactly to r w in shell coordinates."""
    return float(np.sum(ensemble.mass * ensemble.r * ensemble.w))


def conformal_moment(ensemble: Ensemble, t):
    """sum m_i |x_i - t p_i|^2 in reduced coordinates.

    Uses the manifestly non-negative grouping (r - t w)^2 + (t ell/r)^2.
    """
    radial = ensemble.r - t * ensemble.w
    tangential = t * ensemble.ell / ensemble.r
    return float(np.sum(ensemble.mass * (radial**2 + tangential**2)))


def _cap_fractions(r, d, R):
    # Fraction of a uniform sphere of radius r inside the ball |x - x0| < R
    # with |x0| = d > 0: the spherical cap cos(theta) > mu.
    mu = (r * r + d * d - R * R) / (2.0 * d * r)
    return np.clip(0.5 * (1.0 - mu), 0.0, 1.0)


def concentration_mass(ensemble: Ensemble, d, R):
    """Mass inside a ball of radius R whose centre sits at distance d.

    Exact for the shell representation: each particle contributes the
    fraction of its sphere covered by the ball.  For d = 0 a shell is
    either fully inside (r < R, strict) or fully outside.
    """
    if R <= 0.0 or not np.isfinite(R):
        raise DomainError("ball radius must be positive and finite")
    if d < 0.0 or not np.isfinite(d):
        raise DomainError("centre distance must be >= 0 and finite")
    if d == 0.0:
        return float(np.sum(ensemble.mass[ensemble.r < R]))
    return float(np.sum(ensemble.mass * _cap_fractions(ensemble.r, d, R)))


class _BallMassEvaluator:
    """Fast repeated evaluation of the mass inside off-centre balls.

    Sorting the radii once lets each centre distance d split the shells
    into fully-inside (prefix sum), fully-outside, and a partial band
    |d - R| < r < d + R where the cap formula is needed.
    """

    def __init__(self, ensemble, R):
        order = np.argsort(ensemble.r, kind="stable")
        self.r = ensemble.r[order]
        self.mass = ensemble.mass[order]
        self.prefix = np.concatenate(([0.0], np.cumsum(self.mass)))
        self.R = float(R)

    def __call__(self, d):
        R = self.R
        r, mass, prefix = self.r, self.mass, self.prefix
        if d == 0.0:
            return float(prefix[np.searchsorted(r, R, side="left")])
        i0 = np.searchsorted(r, abs(R - d), side="left")
        i1 = np.searchsorted(r, R + d, side="right")
        base = float(prefix[i0]) if d < R else 0.0
        if i1 > i0:
            seg = r[i0:i1]
            base += float(np.dot(mass[i0:i1], _cap_fractions(seg, d, R)))
        return base


def _concentration_at_centers(ensemble, d_values, R):
    """Vectorised concentration_mass over an array of centre distances."""
    evaluate = _BallMassEvaluator(ensemble, R)
    return np.array([evaluate(float(d)) for d in np.asarray(d_values).ravel()])


def concentration_function(ensemble: Ensemble, R, n_grid=256, rel_tol=1e-6,
                           return_center=False):
    """sup over centre positions of the mass inside a ball of radius R.

    For a spherically symmetric density the supremum over centres in
    3-space reduces to a one-dimensional search over the centre
    distance d.  The search scans `n_grid` centres on [0, R2 + R]
    (R2 = outermost radius) and refines competitive cells by iterated
    local scans down to relative tolerance `rel_tol` on d.  The
    objective is piecewise smooth with one kink per particle; overlaps
    can hide narrow secondary peaks inside a grid cell, so the result
    is a lower bound on the supremum, tight to rel_tol for smooth
    profiles and never observed worse than 1e-4 of the total mass on
    adversarial few-particle inputs (cross-checked against dense-scan
    and Monte-Carlo oracles in the tests).

    With `return_center` the best centre distance is returned alongside
    the mass.
    """
    if R <= 0.0 or not np.isfinite(R):
        raise DomainError("ball radius must be positive and finite")
    r2 = float(ensemble.r.max())
    total = ensemble.total_mass
    if R > r2:
        # A ball at the origin already contains every shell.
        return (total, 0.0) if return_center else total
    hi = r2 + R
    f = _BallMassEvaluator(ensemble, R)
    grid = np.linspace(0.0, hi, n_grid)
    vals = np.array([f(float(d)) for d in grid])
    best = float(vals.max())
    best_d = float(grid[int(np.argmax(vals))])
    if best >= total * (1.0 - 1.0e-12):
        # the scan already captures everything; nothing to refine
        best = float(min(best, total))
        return (best, best_d) if return_center else best

    def zoom(lo_d, hi_d):
        # Iterated 33-point scans.  Cap overlaps give the objective a
        # fine sawtooth, so a bracket is not unimodal and plain
        # golden-section can stall on a plateau; rescanning at every
        # level is robust to structure down to the final width.
        found = -np.inf
        found_d = lo_d
        tol = rel_tol * max(hi, 1.0e-30)
        while True:
            sub = np.linspace(lo_d, hi_d, 33)
            sub_vals = [f(float(d)) for d in sub]
            j = int(np.argmax(sub_vals))
            if sub_vals[j] > found:
                found = sub_vals[j]
                found_d = float(sub[j])
            if hi_d - lo_d <= tol:
                return found, found_d
            lo_d = sub[max(j - 1, 0)]
            hi_d = sub[min(j + 1, 32)]

    # Candidate cells flank competitive scan samples.  The best two get
    # a full zoom; the rest are probed with 9 points and zoomed only if
    # a probe beats the current best, which bounds the work on broad
    # flat maxima while still catching narrow secondary peaks.
    order = np.argsort(vals, kind="stable")[::-1]
    cutoff = best - 1.0e-2 * total
    cells = []
    seen = set()
    for i in order[:32]:
        if vals[i] < cutoff:
            break
        for j in (int(i) - 1, int(i)):
            if 0 <= j < n_grid - 1 and j not in seen:
                seen.add(j)
                cells.append(j)
    for rank, j in enumerate(cells[:16]):
        lo_d, hi_d = grid[j], grid[j + 1]
        if rank >= 2:
            probe = max(f(float(d)) for d in np.linspace(lo_d, hi_d, 11)[1:-1])
            if probe <= best:
                continue
        found, found_d = zoom(lo_d, hi_d)
        if found > best:
            best, best_d = found, found_d
    best = float(min(best, total))
    return (best, best_d) if return_center else best


def build_radial_profile(ensemble: Ensemble, n_bins):
    """Histogram rho(r) on uniform bins covering [0, max radius].

    The binned mass equals the total mass up to summation rounding.
    """
    n_bins = int(n_bins)
    if n_bins < 1:
        raise DomainError("need at least one bin")
    r2 = float(ensemble.r.max())
    edges = np.linspace(0.0, r2, n_bins + 1)
    binned, _ = np.histogram(ensemble.r, bins=edges, weights=ensemble.mass)
    volume = (FOUR_PI / 3.0) * (edges[1:] ** 3 - edges[:-1] ** 3)
    return RadialDensityProfile(edges, binned / volume)


def lq_norm(profile: RadialDensityProfile, q):
    """L^q norm of the binned density, midpoint rule in radius.

    ( sum_k 4 pi rbar_k^2 dr_k rho_k^q )^(1/q); for q = 1 this returns
    the binned mass up to the midpoint-rule discretisation error.
    """
    q = float(q)
    if q < 1.0:
        raise DomainError("q must be >= 1")
    edges = profile.bin_edges
    mid = 0.5 * (edges[1:] + edges[:-1])
    dr = np.diff(edges)
    total = np.sum(FOUR_PI * mid**2 * dr * profile.bin_density**q)
    return float(total ** (1.0 / q))


def galilean_shift(E, Q, M, u):
    """Energy and momentum after a boost by velocity u.

    Returns (E', Q') with Q' = Q - M u and E' = E - Q.u + (1/2) M |u|^2.
    The combination E - |Q|^2 / (2M) is invariant.
    """
    if M <= 0.0:
        raise DomainError("mass must be positive")
    Q = np.asarray(Q, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    Q_shift = Q - M * u
    E_shift = float(E - np.dot(Q, u) + 0.5 * M * float(np.dot(u, u)))
    return E_shift, Q_shift


def diagnostics_record(
    ensemble: Ensemble,
    time=None,
    r_grid=(),
    q_list=(),
    n_bins=None,
    shell_group="shell",
):
    """Assemble a full DiagnosticsRecord for one snapshot.

    `r_grid` selects the ball radii for the concentration function and
    `q_list` the exponents for density norms.  `n_bins` defaults to
    ceil(sqrt(N)).  `inner_radius_shell` tracks the tagged shell
    subpopulation when present, otherwise the global minimum radius.
    """
    t = ensemble.time if time is None else float(time)
    e_kin = kinetic_energy(ensemble)
    e_pot = potential_energy(ensemble)
    conc = tuple(
        (float(R), concentration_function(ensemble, R)) for R in r_grid
    )
    if q_list:
        if n_bins is None:
            n_bins = int(math.ceil(math.sqrt(ensemble.n)))
        profile = build_radial_profile(ensemble, n_bins)
        norms = tuple((float(q), lq_norm(profile, q)) for q in q_list)
    else:
        norms = ()
    if ensemble.has_group(shell_group):
        r1_shell = float(ensemble.r[ensemble.group_mask(shell_group)].min())
    else:
        r1_shell = float(ensemble.r.min())
    return DiagnosticsRecord(
        time=t,
        energy_total=e_kin - e_pot,
        energy_kinetic=e_kin,
        energy_potential=e_pot,
        mass=ensemble.total_mass,
        variance=statistical_dispersion(ensemble),
        dilation_moment=dilation_moment(ensemble),
        conformal_moment=conformal_moment(ensemble, t),
        inner_radius=float(ensemble.r.min()),
        outer_radius=float(ensemble.r.max()),
        inner_radius_shell=r1_shell,
        concentration=conc,
        lq_norms=norms,
    )
