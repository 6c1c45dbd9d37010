"""Quadrature engines shared by the spectral, solver and Markov layers.

Three tools live here:

* an adaptive Gauss-Kronrod integrator for complex-valued integrands,
* composite Gauss-Legendre panels with a width-limit driven refinement,
* a Filon-type oscillatory integrator that factors a slow complex envelope
  against an explicit phase, exact for linear phases on each panel.
"""

from __future__ import annotations

import heapq

import numpy as np
from numpy.polynomial.legendre import legvander, leggauss
from scipy.special import spherical_jn

from .errors import ConvergenceError

# 15-point Kronrod nodes with embedded 7-point Gauss rule (QUADPACK dqk15).
_XGK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    nodes = np.concatenate([c - h * _XGK[:-1], [c], c + h * _XGK[-2::-1]])
    fv = np.asarray(f(nodes), dtype=complex)
    left, mid, right = fv[:7], fv[7], fv[-1:-8:-1]
    pairs = left + right
    resk = h * (np.dot(_WGK[:-1], pairs) + _WGK[-1] * mid)
    resg = h * (np.dot(_WG[:-1], pairs[1::2]) + _WG[-1] * mid)
    return resk, abs(resk - resg)


def adaptive_quad(f, a, b, *, abs_tol=1e-9, rel_tol=1e-9, breakpoints=(),
                  phase_rate=0.0, max_panels=4096):
    """Integrate vectorized complex ``f`` over [a, b] adaptively.

    ``breakpoints`` seed panel edges (kinks, table knots); ``phase_rate`` is
    an upper bound on |d(phase)/dx| of an oscillatory factor and caps the
    initial panel width so the rule starts resolved.

    Returns ``(value, error_estimate)``.
    """
    a, b = float(a), float(b)
    if not b > a:
        return 0.0 + 0.0j, 0.0
    edges = {a, b}
    edges.update(p for p in breakpoints if a < p < b)
    edges = sorted(edges)
    if phase_rate > 0.0:
        cap = 3.0 / phase_rate
        refined = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(1, int(np.ceil((hi - lo) / cap)))
            refined.extend(np.linspace(lo, hi, n + 1)[:-1])
        refined.append(b)
        edges = refined

    heap = []
    total = 0.0 + 0.0j
    total_err = 0.0
    count = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = _gk15(f, lo, hi)
        heapq.heappush(heap, (-err, count, lo, hi, val))
        total += val
        total_err += err
        count += 1

    while total_err > max(abs_tol, rel_tol * abs(total)) and heap:
        if count >= max_panels:
            raise ConvergenceError(
                f"adaptive quadrature stalled: error {total_err:.3g} after "
                f"{count} panels (target {abs_tol:.3g})")
        neg_err, _, lo, hi, val = heapq.heappop(heap)
        total -= val
        total_err += neg_err  # neg_err is -err
        mid = 0.5 * (lo + hi)
        for seg in ((lo, mid), (mid, hi)):
            v, e = _gk15(f, *seg)
            heapq.heappush(heap, (-e, count, seg[0], seg[1], v))
            total += v
            total_err += e
            count += 1
    return total, total_err


def build_panels(a, b, *, knots=(), width_limit=None, max_panels=6000):
    """Panel edges over [a, b]: split at ``knots`` then bisect until every
    panel satisfies ``width_limit(midpoint)``."""
    edges = {float(a), float(b)}
    edges.update(float(k) for k in knots if a < k < b)
    edges = sorted(edges)
    if width_limit is None:
        return np.asarray(edges)
    for _ in range(60):
        new_edges = [edges[0]]
        split = False
        for lo, hi in zip(edges[:-1], edges[1:]):
            w = hi - lo
            if w > width_limit(0.5 * (lo + hi)) and len(edges) < max_panels:
                new_edges.append(0.5 * (lo + hi))
                split = True
            new_edges.append(hi)
        edges = new_edges
        if not split:
            break
    return np.asarray(edges)


def width_limit_factory(band, *, base=48, phase_rate=0.0, phase_budget=2.5,
                        features=(), edge_scale=2e-4):
    """Compose a local panel-width limit.

    ``features`` is a sequence of (center, scale) pairs; panels shrink to
    ``scale/2`` at a feature and grow geometrically away from it.  Panels
    also refine geometrically toward the band edges (integrable log
    structure of boundary values lives there).
    """
    a, b = band
    span = b - a
    caps = [span / base]
    if phase_rate > 0.0:
        caps.append(phase_budget / phase_rate)
    cap = min(caps)
    feats = [(c, s) for c, s in features if s > 0.0]
    floor = span * edge_scale

    def limit(x):
        lim = cap
        for c, s in feats:
            lim = min(lim, max(0.5 * s, abs(x - c) / 3.0))
        lim = min(lim, max(floor, (x - a) / 3.0), max(floor, (b - x) / 3.0))
        return lim

    return limit


def gl_panels(edges, n=12):
    """Composite Gauss-Legendre nodes/weights over the given panel edges."""
    x0, w0 = leggauss(n)
    lo = np.asarray(edges[:-1])
    hi = np.asarray(edges[1:])
    c = 0.5 * (lo + hi)[:, None]
    h = 0.5 * (hi - lo)[:, None]
    xs = (c + h * x0[None, :]).ravel()
    ws = (h * w0[None, :]).ravel()
    return xs, ws


_FIT_NODES = leggauss(5)[0]
_FIT_INV = np.linalg.inv(legvander(_FIT_NODES, 4))


def _legendre_moments(beta):
    """Moments M_k(beta) = int_{-1}^{1} P_k(x) e^{i beta x} dx, k = 0..4."""
    beta = np.asarray(beta, dtype=float)
    ab = np.abs(beta)
    mom = np.empty(beta.shape + (5,), dtype=complex)
    for k in range(5):
        mom[..., k] = 2.0 * (1j ** k) * spherical_jn(k, ab)
    neg = beta < 0
    if np.any(neg):
        mom[neg] = np.conj(mom[neg])
    return mom


def filon_nodes(edges):
    """Sample points (panels x 5, flattened) for :func:`filon_integrate`."""
    lo = np.asarray(edges[:-1])
    hi = np.asarray(edges[1:])
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    return (c[:, None] + h[:, None] * _FIT_NODES[None, :]).ravel(), c, h


def filon_integrate(edges, slow_values, phase_values, times):
    """Evaluate A(t) = int q(w) e^{i (L(w) - w t)} dw for every t.

    ``slow_values`` and ``phase_values`` are q and L sampled on the nodes
    from :func:`filon_nodes` (flattened panels x 5).  The phase is
    linearized per panel; the residual is folded into the envelope, which
    is fitted by a quartic Legendre expansion and integrated against the
    analytic moments.  Exact for linear phases and quartic envelopes.

    Returns ``(amplitudes, error_estimate)``.
    """
    times = np.asarray(times, dtype=float)
    _, c, h = filon_nodes(edges)
    npan = c.size
    q = np.asarray(slow_values, dtype=complex).reshape(npan, 5)
    L = np.asarray(phase_values, dtype=float).reshape(npan, 5)

    lcoef = L @ _FIT_INV.T                      # Legendre coefficients of L
    l0, l1 = lcoef[:, 0], lcoef[:, 1]
    dL = L - (l0[:, None] + l1[:, None] * _FIT_NODES[None, :])
    qt = q * np.exp(1j * dL)
    coef = qt @ _FIT_INV.T                      # (npan, 5)

    amps = np.empty(times.size, dtype=complex)
    for start in range(0, times.size, 256):
        tt = times[start:start + 256][None, :]
        beta = l1[:, None] - h[:, None] * tt
        mom = _legendre_moments(beta)           # (npan, Tc, 5)
        inner = np.einsum("pk,ptk->pt", coef, mom)
        pref = h[:, None] * np.exp(1j * (l0[:, None] - c[:, None] * tt))
        amps[start:start + 256] = np.sum(pref * inner, axis=0)

    # Fit-tail error estimate: the unresolved part of the envelope.
    tail = h * (np.abs(coef[:, 4]) + 0.25 * np.abs(coef[:, 3]))
    return amps, 2.0 * float(np.sum(tail))


def filon_norm(edges, values):
    """Gauss-Legendre integral of |values|^2 on the filon node layout."""
    _, c, h = filon_nodes(edges)
    w5 = leggauss(5)[1]
    v = np.abs(np.asarray(values).reshape(c.size, 5)) ** 2
    return float(np.sum(h[:, None] * w5[None, :] * v))
