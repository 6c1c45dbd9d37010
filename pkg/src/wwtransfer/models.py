"""Model families: two levels coupled to a one-channel continuum, and
tight-binding networks destined for the same form.

A :class:`ContinuumModel` carries the two level frequencies, the band, the
formfactor magnitude |g(w)| shared by both levels and the relative phase
L(w) that distinguishes the acceptor coupling, ``g2 = exp(-i L) g1``.
Models are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    BandError,
    ModelError,
    NetworkError,
    OrthogonalityError,
    ZeroNormError,
)
from .quadrature import adaptive_quad, build_panels, gl_panels, width_limit_factory

DEFAULT_TOL_ORTH = 0.02


@dataclass(frozen=True)
class ContinuumModel:
    """Two renormalized levels coupled to a continuum band.

    ``g_mag`` and ``phase`` are vectorized callables of the frequency.
    ``sink2`` and ``sink_cont`` are optional loss rates (acceptor level and
    continuum respectively).  The remaining fields are quadrature hints:
    breakpoints where the integrands lose smoothness, (center, width)
    pairs marking sharp structure, and an upper bound on |dL/dw|.
    """

    omega1: float
    omega2: float
    band: tuple
    g_mag: Callable
    phase: Callable
    sink_cont: Optional[Callable] = None
    sink2: float = 0.0
    g_knots: tuple = ()
    phase_knots: tuple = ()
    g_scales: tuple = ()
    phase_rate_hint: float = 0.0
    overlap: float = 0.0
    params: Mapping = field(default_factory=dict)

    def g1(self, w):
        return np.asarray(self.g_mag(w), dtype=complex)

    def g2(self, w):
        w = np.asarray(w, dtype=float)
        return self.g_mag(w) * np.exp(-1j * np.asarray(self.phase(w), dtype=float))

    @property
    def knots(self):
        return tuple(sorted(set(self.g_knots) | set(self.phase_knots)))

    @property
    def coupled(self):
        """False for the degenerate g = 0 model."""
        a, b = self.band
        probe = np.linspace(a, b, 257)
        return bool(np.max(np.abs(self.g_mag(probe))) > 0.0)


@dataclass(frozen=True)
class DiscreteNetwork:
    """Single-exciton block of a tight-binding network.

    ``h`` is the full N x N Hermitian hopping matrix; donor and acceptor
    occupy rows 0 and 1 (sites 1 and 2 in the 1-based input convention).
    """

    h: np.ndarray
    donor: int = 0
    acceptor: int = 1

    @property
    def n(self):
        return self.h.shape[0]


@dataclass(frozen=True)
class DiscreteWW:
    """Network recast as a discrete two-level model: eigenlevels of the
    intermediate block plus the donor/acceptor coupling amplitudes."""

    omega1: float
    omega2: float
    levels: np.ndarray
    couplings1: np.ndarray
    couplings2: np.ndarray


def _freeze(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# formfactor and phase families

def _flat_formfactor(p, band):
    gamma = float(p["gamma"])
    if gamma < 0:
        raise ModelError("flat formfactor needs gamma >= 0")
    mag = np.sqrt(gamma / np.pi)

    def g(w):
        return np.full_like(np.asarray(w, dtype=float), mag)

    return g, (), (), {"family": "flat", "gamma": gamma}


def _lorentzian_formfactor(p, band):
    area = float(p["area"])
    center = float(p["center"])
    width = float(p["width"])
    if area < 0 or width <= 0:
        raise ModelError("lorentzian formfactor needs area >= 0 and width > 0")

    def g(w):
        w = np.asarray(w, dtype=float)
        return np.sqrt((area / np.pi) * width / ((w - center) ** 2 + width ** 2))

    return g, (center,), ((center, width),), {
        "family": "lorentzian", "area": area, "center": center, "width": width}


def _lorentz_mixture_formfactor(p, band):
    centers = np.asarray(p["centers"], dtype=float)
    weights = np.asarray(p["weights"], dtype=float)
    width = float(p["width"])
    scale = float(p.get("scale", 1.0))
    if centers.shape != weights.shape or centers.ndim != 1:
        raise ModelError("lorentz_mixture needs matching 1-d centers/weights")
    if np.any(weights < 0) or width <= 0 or scale < 0:
        raise ModelError("lorentz_mixture needs weights >= 0, width > 0, scale >= 0")

    def g(w):
        w = np.asarray(w, dtype=float)[..., None]
        dens = (width / np.pi) / ((w - centers) ** 2 + width ** 2)
        return np.sqrt(scale * np.sum(weights * dens, axis=-1))

    scales = tuple((float(c), width) for c in centers)
    return g, tuple(float(c) for c in centers), scales, {
        "family": "lorentz_mixture", "centers": centers.tolist(),
        "weights": weights.tolist(), "width": width, "scale": scale}


def _tabulated_formfactor(p, band):
    om = np.asarray(p["omega"], dtype=float)
    mag = np.asarray(p["magnitude"], dtype=float)
    if om.ndim != 1 or om.size < 2 or np.any(np.diff(om) <= 0):
        raise ModelError("tabulated formfactor needs strictly increasing omega samples")
    if np.any(mag < 0):
        raise ModelError("tabulated formfactor magnitudes must be >= 0")
    if om[0] > band[0] or om[-1] < band[1]:
        raise BandError("tabulated formfactor does not cover the band; "
                        "extrapolation is not allowed")
    interp = PchipInterpolator(om, mag, extrapolate=False)

    def g(w):
        v = interp(np.asarray(w, dtype=float))
        return np.clip(np.nan_to_num(v, nan=0.0), 0.0, None)

    knots = tuple(float(x) for x in om if band[0] <= x <= band[1])
    return g, knots, (), {"family": "tabulated", "omega": om.tolist(),
                          "magnitude": mag.tolist()}


_FORMFACTORS = {
    "flat": _flat_formfactor,
    "lorentzian": _lorentzian_formfactor,
    "lorentz_mixture": _lorentz_mixture_formfactor,
    "tabulated": _tabulated_formfactor,
}


def _linear_phase(p, band):
    slope = float(p["slope"])

    def L(w):
        return slope * np.asarray(w, dtype=float)

    return L, (), abs(slope), {"family": "linear", "slope": slope}


def _constant_phase(p, band):
    value = float(p.get("value", 0.0))

    def L(w):
        return np.full_like(np.asarray(w, dtype=float), value)

    return L, (), 0.0, {"family": "constant", "value": value}


def _tabulated_phase(p, band):
    om = np.asarray(p["omega"], dtype=float)
    val = np.asarray(p["value"], dtype=float)
    if om.ndim != 1 or om.size < 2 or np.any(np.diff(om) <= 0):
        raise ModelError("tabulated phase needs strictly increasing omega samples")
    if om[0] > band[0] or om[-1] < band[1]:
        raise BandError("tabulated phase does not cover the band; "
                        "extrapolation is not allowed")
    interp = PchipInterpolator(om, val, extrapolate=False)

    def L(w):
        return np.nan_to_num(interp(np.asarray(w, dtype=float)), nan=0.0)

    rate = float(np.max(np.abs(np.diff(val) / np.diff(om))))
    knots = tuple(float(x) for x in om if band[0] <= x <= band[1])
    return L, knots, rate, {"family": "tabulated", "omega": om.tolist(),
                            "value": val.tolist()}


def _piecewise_linear_phase(p, band):
    om = np.asarray(p["omega"], dtype=float)
    val = np.asarray(p["value"], dtype=float)
    if om.ndim != 1 or om.size < 1 or np.any(np.diff(om) <= 0):
        raise ModelError("piecewise_linear phase needs increasing omega samples")

    def L(w):
        return np.interp(np.asarray(w, dtype=float), om, val)

    rate = 0.0
    if om.size > 1:
        rate = float(np.max(np.abs(np.diff(val) / np.diff(om))))
    knots = tuple(float(x) for x in om if band[0] < x < band[1])
    return L, knots, rate, {"family": "piecewise_linear", "omega": om.tolist(),
                            "value": val.tolist()}


_PHASES = {
    "linear": _linear_phase,
    "constant": _constant_phase,
    "tabulated": _tabulated_phase,
    "piecewise_linear": _piecewise_linear_phase,
}


def _constant_sink(p, band):
    value = float(p["value"])
    if value < 0:
        raise ModelError("continuum sink rate must be >= 0")

    def s(w):
        return np.full_like(np.asarray(w, dtype=float), value)

    return s, {"family": "constant", "value": value}


def _build_family(table, spec, band, kind):
    try:
        family = spec["family"]
    except (KeyError, TypeError):
        raise ModelError(f"{kind} spec needs a 'family' key") from None
    try:
        builder = table[family]
    except KeyError:
        raise ModelError(f"unknown {kind} family {family!r}; "
                         f"expected one of {sorted(table)}") from None
    try:
        return builder(spec, band)
    except KeyError as exc:
        raise ModelError(f"{kind} family {family!r} is missing parameter {exc}") from None


# ---------------------------------------------------------------------------
# construction

def formfactor_norm_sq(model_or_parts, band=None):
    """Integral of |g|^2 over the band."""
    if band is None:
        m = model_or_parts
        g, band, knots, scales = m.g_mag, m.band, m.g_knots, m.g_scales
    else:
        g, knots, scales = model_or_parts
    limit = width_limit_factory(band, features=scales)
    xs, ws = gl_panels(build_panels(*band, knots=knots, width_limit=limit))
    return float(np.dot(ws, np.abs(g(xs)) ** 2))


def build_continuum(spec, *, tol_orth=None):
    """Build and validate a :class:`ContinuumModel` from a parameter record.

    The record supplies ``omega1``, ``omega2``, ``band``, a ``formfactor``
    family, a ``phase`` family and optionally ``sink`` and ``tol_orth``.
    Raises :class:`ModelError` subclasses on invalid input, including the
    measured overlap when the donor/acceptor orthogonality fails.
    """
    try:
        omega1 = float(spec["omega1"])
        omega2 = float(spec["omega2"])
        band = (float(spec["band"][0]), float(spec["band"][1]))
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ModelError(f"continuum spec needs omega1, omega2, band: {exc}") from None
    if not band[0] < band[1]:
        raise BandError(f"empty band {band}")
    if omega1 <= 0 or omega2 <= 0:
        raise ModelError("level frequencies must be positive")

    g, g_knots, g_scales, g_params = _build_family(
        _FORMFACTORS, spec.get("formfactor", {"family": "flat", "gamma": 0.0}),
        band, "formfactor")
    L, L_knots, rate, L_params = _build_family(
        _PHASES, spec.get("phase", {"family": "constant", "value": 0.0}),
        band, "phase")

    sink2 = 0.0
    sink_cont = None
    sink_params = None
    sink_spec = spec.get("sink")
    if sink_spec:
        sink2 = float(sink_spec.get("gamma2", 0.0))
        if sink2 < 0:
            raise ModelError("sink gamma2 must be >= 0")
        sink_params = {"gamma2": sink2}
        if sink_spec.get("continuum"):
            sink_cont, cp = _constant_sink(sink_spec["continuum"], band)
            sink_params["continuum"] = cp

    probe = np.unique(np.concatenate([np.linspace(*band, 2049), np.asarray(g_knots + (band[0], band[1]))]))
    probe = probe[(probe >= band[0]) & (probe <= band[1])]
    gv = np.asarray(g(probe), dtype=float)
    if not np.all(np.isfinite(gv)):
        raise ModelError("formfactor magnitude is not finite on the band")
    if np.any(gv < 0):
        raise ModelError("formfactor magnitude must be >= 0")

    norm_sq = formfactor_norm_sq((g, g_knots, g_scales), band)
    if not np.isfinite(norm_sq):
        raise ModelError("formfactor is not square-integrable on the band")

    tol = DEFAULT_TOL_ORTH if tol_orth is None else float(tol_orth)
    tol = float(spec.get("tol_orth", tol))
    overlap = 0.0
    if norm_sq > 0.0:
        num, _ = adaptive_quad(
            lambda w: np.abs(g(w)) ** 2 * np.exp(-1j * np.asarray(L(w), dtype=float)),
            *band, phase_rate=rate, breakpoints=g_knots + L_knots, abs_tol=1e-10)
        overlap = abs(num) / norm_sq
        if overlap > tol:
            raise OrthogonalityError(overlap, tol)

    params = {
        "omega1": omega1, "omega2": omega2, "band": list(band),
        "formfactor": g_params, "phase": L_params, "tol_orth": tol,
    }
    if sink_params:
        params["sink"] = sink_params

    return ContinuumModel(
        omega1=omega1, omega2=omega2, band=band, g_mag=g, phase=L,
        sink_cont=sink_cont, sink2=sink2,
        g_knots=tuple(g_knots), phase_knots=tuple(L_knots),
        g_scales=tuple(g_scales), phase_rate_hint=rate,
        overlap=overlap, params=params)


def build_network(site_energies, hoppings):
    """Assemble a Hermitian tight-binding network.

    ``site_energies`` lists the diagonal; ``hoppings`` is an iterable of
    ``(k, l, amplitude)`` with 1-based site indices, k != l.  The conjugate
    entry is filled in, so the result is Hermitian by construction.  Site 1
    is the donor and site 2 the acceptor.
    """
    energies = np.asarray(list(site_energies), dtype=float)
    n = energies.size
    if n < 3:
        raise NetworkError(f"need at least 3 sites (donor, acceptor, one intermediate), got {n}")
    h = np.zeros((n, n), dtype=complex)
    h[np.arange(n), np.arange(n)] = energies
    seen = set()
    for k, l, amp in hoppings:
        k, l = int(k), int(l)
        if k == l:
            raise NetworkError(
                f"hopping ({k},{l}) is diagonal; site energies set the diagonal")
        if not (1 <= k <= n and 1 <= l <= n):
            raise NetworkError(f"hopping ({k},{l}) out of range for {n} sites")
        key = (min(k, l), max(k, l))
        if key in seen:
            raise NetworkError(f"duplicate hopping entry for sites {key}")
        seen.add(key)
        h[k - 1, l - 1] = amp
        h[l - 1, k - 1] = np.conj(amp)
    return DiscreteNetwork(h=_freeze(h))


def build_discrete_ww(omega1, omega2, levels, couplings1, couplings2, *,
                      tol_orth=DEFAULT_TOL_ORTH):
    """Validated :class:`DiscreteWW` from raw arrays."""
    levels = np.asarray(levels, dtype=float)
    c1 = np.asarray(couplings1, dtype=complex)
    c2 = np.asarray(couplings2, dtype=complex)
    if not (levels.shape == c1.shape == c2.shape) or levels.ndim != 1:
        raise ModelError("levels and couplings must be matching 1-d arrays")
    if not (np.all(np.isfinite(levels)) and np.all(np.isfinite(c1)) and np.all(np.isfinite(c2))):
        raise ModelError("discrete model entries must be finite")
    n1, n2 = np.linalg.norm(c1), np.linalg.norm(c2)
    if n1 > 0 and n2 > 0:
        overlap = abs(np.vdot(c1, c2)) / (n1 * n2)
        if overlap > tol_orth:
            raise OrthogonalityError(overlap, tol_orth)
    return DiscreteWW(omega1=float(omega1), omega2=float(omega2),
                      levels=_freeze(levels), couplings1=_freeze(c1),
                      couplings2=_freeze(c2))


def orthogonality_overlap(model):
    """Relative donor/acceptor formfactor overlap, |<g1|g2>| / (|g1| |g2|).

    Accepts a :class:`ContinuumModel` or a :class:`DiscreteWW`.  Raises
    :class:`ZeroNormError` when either formfactor has zero norm.
    """
    if isinstance(model, DiscreteWW):
        n1 = np.linalg.norm(model.couplings1)
        n2 = np.linalg.norm(model.couplings2)
        if n1 == 0.0 or n2 == 0.0:
            raise ZeroNormError("overlap undefined for a zero-norm coupling vector")
        return float(abs(np.vdot(model.couplings1, model.couplings2)) / (n1 * n2))
    norm_sq = formfactor_norm_sq(model)
    if norm_sq <= 0.0:
        raise ZeroNormError("overlap undefined for a zero-norm formfactor")
    num, _ = adaptive_quad(
        lambda w: np.abs(model.g_mag(w)) ** 2
        * np.exp(-1j * np.asarray(model.phase(w), dtype=float)),
        *model.band, phase_rate=model.phase_rate_hint,
        breakpoints=model.knots, abs_tol=1e-10)
    return float(abs(num) / norm_sq)
