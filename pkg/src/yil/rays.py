"""Ray casting against curve systems.

Along a ray from an origin the indicator of a region (or of a symmetric
difference with a half-plane through the origin) is piecewise constant and
toggles at every boundary crossing, so radial integrals of ``e^{-c s}`` reduce
to alternating sums over crossing distances.  Crossings are located on a
spectrally upsampled copy of every curve by root finding on cubic Hermite
segments.  When the origin sits on a curve, that curve is re-parametrised to
start at the origin and the trivial root there is divided out, so the
nontrivial crossing close to the origin is still found for grazing rays.
"""

from __future__ import annotations

import numpy as np

from .curve import ClosedCurve, CurveSystem

DEFAULT_OVERSAMPLE = 8
_MAX_ROOT_STEPS = 64
_ROOT_XTOL = 2.0**-50

# segment kinds
_REGULAR, _SELF_FIRST, _SELF_LAST = 0, 1, 2


def fine_samples(curve: ClosedCurve, m: int, shift: float = 0.0):
    """Positions and t-derivatives of the trigonometric interpolant at t = shift + u/m."""
    interp = curve.interpolant
    if m <= curve.n:
        raise ValueError("fine grid must be strictly finer than the sample grid")
    phase = np.exp(2j * np.pi * interp.ks * shift) if shift else 1.0
    coef = interp.cs * phase
    idx = interp.ks.astype(int) % m
    spec = np.zeros(m, dtype=complex)
    dspec = np.zeros(m, dtype=complex)
    np.add.at(spec, idx, coef)
    np.add.at(dspec, idx, coef * 2j * np.pi * interp.ks)
    return np.fft.ifft(spec) * m, np.fft.ifft(dspec) * m


class RayCaster:
    """Crossing distances of rays from ``origin`` with every curve of a system.

    Parameters
    ----------
    system : CurveSystem
    origin : array_like, shape (2,)
    reach : float
        Crossings farther than this are discarded (radial truncation).
    self_curve, self_t : int, float, optional
        Curve index and parameter of the origin when it lies on a curve.
    oversample : int
        Fine-grid factor relative to each curve's sample count.
    """

    def __init__(self, system: CurveSystem, origin, reach: float, self_curve: int | None = None,
                 self_t: float = 0.0, oversample: int = DEFAULT_OVERSAMPLE):
        self.origin = np.asarray(origin, dtype=float)
        self.reach = float(reach)
        y = complex(self.origin[0], self.origin[1])
        starts, ends, dstarts, dends, kinds = [], [], [], [], []
        for ci, curve in enumerate(system.curves):
            m = oversample * curve.n
            on_curve = ci == self_curve
            z, dz = fine_samples(curve, m, self_t if on_curve else 0.0)
            if on_curve:
                z[0] = y  # exact origin, removes O(eps) mismatch in the divided-out root
            dz = dz / m
            zn, dzn = np.roll(z, -1), np.roll(dz, -1)
            seg_len = np.abs(zn - z)
            near = np.minimum(np.abs(z - y), np.abs(zn - y)) <= self.reach + seg_len
            kind = np.full(m, _REGULAR)
            if on_curve:
                kind[0], kind[-1] = _SELF_FIRST, _SELF_LAST
                near[0] = near[-1] = True
            sel = np.flatnonzero(near)
            starts.append(z[sel] - y)
            ends.append(zn[sel] - y)
            dstarts.append(dz[sel])
            dends.append(dzn[sel])
            kinds.append(kind[sel])
        self.a = np.concatenate(starts)
        self.b = np.concatenate(ends)
        self.da = np.concatenate(dstarts)
        self.db = np.concatenate(dends)
        self.kind = np.concatenate(kinds)
        chord = self.b - self.a
        # max distance of the Hermite cubic from its chord: (4/27)(|da - chord| + |db - chord|)
        self.sag = (4.0 / 27.0) * (np.abs(self.da - chord) + np.abs(self.db - chord)) * (1 + 1e-9) + 1e-300
        # angular window of each segment seen from the origin: the cubic stays inside the
        # disc about the chord midpoint of radius |chord|/2 + sag
        mid = 0.5 * (self.a + self.b)
        rad = 0.5 * np.abs(chord) + self.sag
        dmid = np.abs(mid)
        self._center = np.angle(mid)
        with np.errstate(invalid="ignore", divide="ignore"):
            half = np.arcsin(np.clip(rad / dmid, 0.0, 1.0)) * (1 + 1e-9) + 1e-12
        self._whole = (dmid <= rad * (1 + 1e-9)) | (half >= 0.5 * np.pi) | (self.kind != _REGULAR)
        self._half = half

    def _candidates(self, d: np.ndarray):
        """Ray/segment pairs whose angular windows overlap, as index arrays."""
        ang = np.arctan2(d[:, 1], d[:, 0])
        order = np.argsort(ang, kind="stable")
        sang = ang[order]
        n_rays = ang.size
        whole = np.flatnonzero(self._whole)
        part = np.flatnonzero(~self._whole)
        c, w = self._center[part], self._half[part]
        lo, hi = c - w, c + w
        seg_chunks, start_chunks, count_chunks = [], [], []
        # an interval leaving [-pi, pi] is handled by its shifted copy as well
        for shift in (0.0, 2.0 * np.pi, -2.0 * np.pi):
            lo_s, hi_s = lo + shift, hi + shift
            keep = (hi_s >= -np.pi) & (lo_s <= np.pi)
            i0 = np.searchsorted(sang, lo_s[keep], side="left")
            i1 = np.searchsorted(sang, hi_s[keep], side="right")
            seg_chunks.append(part[keep])
            start_chunks.append(i0)
            count_chunks.append(i1 - i0)
        segs = np.concatenate(seg_chunks)
        starts = np.concatenate(start_chunks)
        counts = np.concatenate(count_chunks)
        total = int(counts.sum())
        offs = np.repeat(np.cumsum(counts) - counts, counts)
        pos = np.repeat(starts, counts) + (np.arange(total) - offs)
        ri = order[pos]
        si = np.repeat(segs, counts)
        ri = np.concatenate([ri, np.repeat(np.arange(n_rays), whole.size)])
        si = np.concatenate([si, np.tile(whole, n_rays)])
        return ri, si

    def crossings(self, directions: np.ndarray):
        """Return ``(ray_index, distance)`` sorted by ray then distance.

        ``directions`` are unit vectors, shape (M, 2).
        """
        d = np.asarray(directions, dtype=float)
        pr, ps = self._candidates(d)
        px, py = -d[pr, 1], d[pr, 0]  # d^perp = (-d_y, d_x)

        def proj(w):
            w = w[ps]
            return px * w.real + py * w.imag

        fa, fb = proj(self.a), proj(self.b)
        ga, gb = proj(self.da), proj(self.db)
        kind = self.kind[ps]
        qa = np.where(kind == _SELF_FIRST, ga, fa)
        qb = np.where(kind == _SELF_LAST, -gb, fb)
        hit = (qa >= 0) != (qb >= 0)
        idx = np.flatnonzero(hit)
        lo = np.zeros(idx.size)
        hi = np.ones(idx.size)
        # a regular segment whose ends agree in sign can still be crossed twice when
        # the ray passes within the cubic's deviation from its chord
        graze = (~hit) & (kind == _REGULAR) & (np.minimum(np.abs(fa), np.abs(fb)) <= self.sag[ps])
        g = np.flatnonzero(graze)
        if g.size:
            split = _interior_extremum_split(fa[g], ga[g], fb[g], gb[g])
            ok = ~np.isnan(split)
            g, split = g[ok], split[ok]
            idx = np.concatenate([idx, g, g])
            lo = np.concatenate([lo, np.zeros(g.size), split])
            hi = np.concatenate([hi, split, np.ones(g.size)])
        if idx.size == 0:
            return idx, np.zeros(0)
        ri, si = pr[idx], ps[idx]
        fa, fb, ga, gb = fa[idx], fb[idx], ga[idx], gb[idx]
        k = self.kind[si]
        coef = _reduced_coefficients(fa, ga, fb, gb, k)
        sign_lo = _poly(coef, lo)[0] >= 0
        sign_lo = np.where((k == _SELF_FIRST) & (lo == 0), ga >= 0, sign_lo)
        tau = _bracketed_newton(coef, lo, hi, sign_lo)
        pos = _hermite(tau, self.a[si], self.da[si], self.b[si], self.db[si])
        dist = d[ri, 0] * pos.real + d[ri, 1] * pos.imag
        keep = (dist > 0) & (dist <= self.reach)
        ri, dist = ri[keep], dist[keep]
        order = np.lexsort((dist, ri))
        return ri[order], dist[order]


def _hermite(t, pa, da, pb, db):
    t2, t3 = t * t, t * t * t
    return ((2 * t3 - 3 * t2 + 1) * pa + (t3 - 2 * t2 + t) * da + (-2 * t3 + 3 * t2) * pb
            + (t3 - t2) * db)


def _interior_extremum_split(fa, ga, fb, gb):
    """Parameter of an interior extremum of the cubic whose value has the opposite sign to the ends.

    Returns NaN where the cubic keeps one sign on [0, 1].
    """
    c1 = ga
    c2 = -3 * fa - 2 * ga + 3 * fb - gb
    c3 = 2 * fa + ga - 2 * fb + gb
    # f' = c1 + 2 c2 t + 3 c3 t^2
    a, b, c = 3 * c3, 2 * c2, c1
    out = np.full(fa.shape, np.nan)
    disc = b * b - 4 * a * c
    good = disc >= 0
    sq = np.sqrt(np.where(good, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        # numerically stable quadratic roots; linear case when a vanishes
        q = -0.5 * (b + np.copysign(sq, b))
        r1 = np.where(a != 0, q / a, -c / b)
        r2 = np.where(q != 0, c / q, np.nan)
    end_sign = fa >= 0
    for r in (r1, r2):
        inside = good & (r > 0) & (r < 1)
        val = _hermite(np.where(inside, r, 0.5), fa, ga, fb, gb)
        flip = inside & ((val >= 0) != end_sign) & np.isnan(out)
        out = np.where(flip, r, out)
    return out


def _reduced_coefficients(fa, ga, fb, gb, kind):
    """Monomial coefficients (c0..c3) of the segment cubic, with a self-segment end root divided out.

    For the first self segment the cubic vanishes at t = 0 and the quotient is
    (t-1)**2 ga + t(3-2t) fb + t(t-1) gb; for the last one it vanishes at t = 1
    and the quotient is (1-t)(1+2t) fa + t(1-t) ga - t**2 gb.
    """
    c0 = np.where(kind == _SELF_FIRST, ga, fa)
    c1 = np.where(kind == _SELF_FIRST, -2 * ga + 3 * fb - gb,
                  np.where(kind == _SELF_LAST, fa + ga, ga))
    c2 = np.where(kind == _SELF_FIRST, ga - 2 * fb + gb,
                  np.where(kind == _SELF_LAST, -2 * fa - ga - gb, -3 * fa - 2 * ga + 3 * fb - gb))
    c3 = np.where(kind == _REGULAR, 2 * fa + ga - 2 * fb + gb, 0.0)
    return c0, c1, c2, c3


def _poly(coef, t):
    """Value and derivative of c0 + c1 t + c2 t**2 + c3 t**3 (Horner)."""
    c0, c1, c2, c3 = coef
    val = ((c3 * t + c2) * t + c1) * t + c0
    der = (3 * c3 * t + 2 * c2) * t + c1
    return val, der


def _bracketed_newton(coef, lo, hi, sign_lo):
    """Root of a cubic with a sign change on [lo, hi]: Newton steps kept inside the shrinking bracket."""
    t = 0.5 * (lo + hi)
    for _ in range(_MAX_ROOT_STEPS):
        val, der = _poly(coef, t)
        same = (val >= 0) == sign_lo
        lo = np.where(same, t, lo)
        hi = np.where(same, hi, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            nt = t - val / der
        fallback = ~((nt >= lo) & (nt <= hi))
        nt = np.where(fallback, 0.5 * (lo + hi), nt)
        done = (hi - lo < _ROOT_XTOL) | (np.abs(nt - t) <= 1e-15)
        t = nt
        if np.all(done):
            break
    return t


def alternating_exponential_sums(ray_index, dist, n_rays: int, rate: float, start_inside=None):
    """Per ray, int_0^reach chi(s) e^{-rate s} ds times ``rate``.

    ``chi`` starts at ``start_inside`` (bool per ray, default False) and toggles
    at each crossing; the result is ``start + sum_j (+-) e^{-rate s_j}``.
    """
    out = np.zeros(n_rays)
    start = np.zeros(n_rays, dtype=bool) if start_inside is None else np.asarray(start_inside, dtype=bool)
    out += start
    if ray_index.size:
        first = np.searchsorted(ray_index, ray_index, side="left")
        rank = np.arange(ray_index.size) - first
        entering = (rank % 2 == 0) != start[ray_index]
        terms = np.where(entering, 1.0, -1.0) * np.exp(-rate * dist)
        np.add.at(out, ray_index, terms)
    return out
