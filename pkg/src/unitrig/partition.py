"""Polynomial partitioning of planar point sets.

A partitioning polynomial is kept in factored form: each factor is one
discrete ham-sandwich bisector found in the space of coefficients.  Cells of
the complement of the zero set are recovered by rasterizing the factor sign
vectors and flood-filling equal-sign regions.

Coefficient layout (shared by :class:`Factor` and the JSON form): a factor of
degree ``k`` stores ``(k+1)(k+2)/2`` coefficients in graded order
``1, u, v, u^2, u v, v^2, ..., v^k`` where ``u = (x - cx) / s`` and
``v = (y - cy) / s`` for the factor's stored ``center = (cx, cy)`` and
``scale = s``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.optimize import linprog
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import DEFAULT_TOL

log = logging.getLogger(__name__)

C_OCC = 2.0
C_CROSS = 4.0
C_CELLS = 2.0


class PartitionError(RuntimeError):
    pass


class InfeasibleBudgetError(PartitionError):
    """Degree too small to bisect that many sets at once."""


class HamSandwichSearchError(PartitionError):
    def __init__(self, message: str, best_imbalance: int):
        super().__init__(f"{message} (best imbalance {best_imbalance})")
        self.best_imbalance = best_imbalance


class UnstableCellsError(PartitionError):
    def __init__(self, message: str, previous, current):
        super().__init__(message)
        self.previous = previous
        self.current = current


# --- polynomials -------------------------------------------------------------


def monomials(degree: int) -> list[tuple[int, int]]:
    """Exponent pairs ``(i, j)`` of ``u^i v^j`` in the documented order."""
    return [(k - j, j) for k in range(degree + 1) for j in range(k + 1)]


def n_monomials(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


def min_degree_for(n_sets: int) -> int:
    """Smallest degree whose coefficient space bisects ``n_sets`` sets."""
    d = 1
    while n_monomials(d) - 1 < n_sets:
        d += 1
    return d


def _lift(u: np.ndarray, v: np.ndarray, degree: int) -> np.ndarray:
    cols = []
    for k in range(degree + 1):
        for j in range(k + 1):
            cols.append(u ** (k - j) * v ** j)
    return np.column_stack(cols) if cols else np.ones((len(u), 1))


@dataclass(frozen=True)
class Factor:
    degree: int
    coeffs: tuple[float, ...]
    center: tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if len(self.coeffs) != n_monomials(self.degree):
            raise ValueError("coefficient count does not match degree")
        if not any(self.coeffs):
            raise ValueError("factor is identically zero")

    def __call__(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        u = (xy[:, 0] - self.center[0]) / self.scale
        v = (xy[:, 1] - self.center[1]) / self.scale
        return self._eval(u, v)

    def _eval(self, u, v):
        # accumulate monomial by monomial to keep memory flat on large rasters
        out = np.zeros_like(u)
        c = self.coeffs
        idx = 0
        upow = [np.ones_like(u)]
        for _ in range(self.degree):
            upow.append(upow[-1] * u)
        vp = np.ones_like(v)
        vpow = [vp]
        for _ in range(self.degree):
            vpow.append(vpow[-1] * v)
        for k in range(self.degree + 1):
            for j in range(k + 1):
                if c[idx] != 0.0:
                    out += c[idx] * (upow[k - j] * vpow[j])
                idx += 1
        return out

    @property
    def band(self) -> float:
        return DEFAULT_TOL * (1.0 + float(np.linalg.norm(self.coeffs)))

    def band_with(self, tol: float) -> float:
        return tol * (1.0 + float(np.linalg.norm(self.coeffs)))

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "center": list(self.center),
            "scale": self.scale,
            "coefficients": list(self.coeffs),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Factor":
        return cls(int(d["degree"]), tuple(float(c) for c in d["coefficients"]),
                   tuple(d.get("center", (0.0, 0.0))), float(d.get("scale", 1.0)))

    @classmethod
    def line(cls, a: float, b: float, c: float) -> "Factor":
        """The factor ``a + b x + c y``."""
        return cls(1, (float(a), float(b), float(c)))


@dataclass(frozen=True)
class BivariatePoly:
    factors: tuple[Factor, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("polynomial needs at least one factor")

    @property
    def degree(self) -> int:
        return sum(f.degree for f in self.factors)

    def __call__(self, xy) -> np.ndarray:
        out = None
        for f in self.factors:
            val = f(xy)
            out = val if out is None else out * val
        return out

    def factor_values(self, xy) -> np.ndarray:
        return np.column_stack([f(xy) for f in self.factors])

    def sign_keys(self, xy, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Encode each point's factor sign vector as an int; ``-1`` marks the zero band."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return _keys_from_factors(self.factors, xy[:, 0], xy[:, 1], tol)

    def to_json(self) -> dict:
        return {"degree": self.degree, "monomial_order": "graded: 1,u,v,u^2,uv,v^2,...",
                "factors": [f.to_json() for f in self.factors]}

    @classmethod
    def from_json(cls, d: dict) -> "BivariatePoly":
        return cls(tuple(Factor.from_json(f) for f in d["factors"]))


def _keys_from_factors(factors, xs, ys, tol):
    if len(factors) > 62:
        raise ValueError("sign keys support at most 62 factors")
    keys = np.zeros(xs.shape, dtype=np.int64)
    zero = np.zeros(xs.shape, dtype=bool)
    xy = np.column_stack([xs.ravel(), ys.ravel()])
    for i, f in enumerate(factors):
        val = f(xy).reshape(xs.shape)
        b = f.band_with(tol)
        zero |= np.abs(val) <= b
        keys |= (val > 0).astype(np.int64) << i
    keys[zero] = -1
    return keys


# --- discrete ham sandwich ---------------------------------------------------


def bisection_imbalance(values: np.ndarray) -> int:
    """How far a value vector is from the discrete bisection certificate."""
    n = len(values)
    half = (n + 1) // 2
    return max(0, int((values > 0).sum()) - half, int((values < 0).sum()) - half)


def certificate_holds(factor: Factor, sets: Sequence[np.ndarray]) -> bool:
    return all(bisection_imbalance(factor(s)) == 0 for s in sets if len(s))


def _normalization(sets):
    allpts = np.vstack([s for s in sets if len(s)])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    center = tuple(float(c) for c in (lo + hi) / 2)
    scale = float(max(hi[0] - lo[0], hi[1] - lo[1]) / 2) or 1.0
    return center, scale


class _Lifted:
    """All sets lifted and concatenated, for segment-wise reductions."""

    def __init__(self, sets, degree, center, scale):
        self.V = np.vstack([_lift((s[:, 0] - center[0]) / scale, (s[:, 1] - center[1]) / scale, degree)
                            for s in sets])
        sizes = np.array([len(s) for s in sets])
        self.sizes = sizes
        self.starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        self.seg = np.repeat(np.arange(len(sets)), sizes)

    def segsum(self, a):
        return np.add.reduceat(a, self.starts, axis=0)

    def segstd(self, v):
        mean = self.segsum(v) / self.sizes
        var = self.segsum((v - mean[self.seg]) ** 2) / self.sizes
        return np.sqrt(np.maximum(var, 0.0))

    def imbalance(self, c) -> int:
        v = self.V @ c
        pos = self.segsum((v > 0).astype(np.int64))
        neg = self.segsum((v < 0).astype(np.int64))
        half = (self.sizes + 1) // 2
        return int(max(0, (pos - half).max(), (neg - half).max()))


def _soft_medians(L: _Lifted, v, m, sig, iters: int = 60):
    """Roots m_j of sum_i tanh((v_i - m_j) / sig_j) over each segment (bracketed Newton)."""
    lo = np.minimum.reduceat(v, L.starts)
    hi = np.maximum.reduceat(v, L.starts)
    m = np.clip(m, lo, hi)
    for _ in range(iters):
        t = np.tanh((v - m[L.seg]) / sig[L.seg])
        g = L.segsum(t)
        d = L.segsum(1.0 - t * t) / sig
        lo = np.where(g > 0, m, lo)
        hi = np.where(g <= 0, m, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            mn = m + g / d
        bad = ~np.isfinite(mn) | (mn <= lo) | (mn >= hi)
        mn = np.where(bad, 0.5 * (lo + hi), mn)
        done = np.abs(mn - m) <= 1e-15 * (1.0 + np.abs(m))
        m = mn
        if done.all():
            break
    return m


def _residual(L: _Lifted, c, m, s):
    v = L.V @ c
    sig = s * np.maximum(L.segstd(v), 1e-12)
    m = _soft_medians(L, v, m, sig)
    z = np.clip((v - m[L.seg]) / sig[L.seg], -300, 300)
    w = 1.0 / np.cosh(z) ** 2
    wsum = L.segsum(w)
    J = L.segsum(w[:, None] * L.V) / np.maximum(wsum, 1e-300)[:, None]
    return m, J, sig


def _homotopy(L: _Lifted, c, steps: int, inner: int, smin: float):
    n_sets = len(L.sizes)
    m = L.segsum(L.V @ c) / L.sizes
    for s in np.geomspace(3.0, smin, steps):
        r, J, sig = _residual(L, c, m, s)
        base = np.maximum(sig / s, 1e-12)
        for _ in range(inner):
            nr = np.linalg.norm(r / base)
            if nr < 1e-10:
                break
            A = np.vstack([J, c])
            b = np.concatenate([-r, [0.0]])
            d = np.linalg.lstsq(A, b, rcond=None)[0]
            a = 1.0
            while a > 1e-3:
                cn = c + a * d
                cn /= np.linalg.norm(cn)
                rn, Jn, _ = _residual(L, cn, r, s)
                if np.linalg.norm(rn / base) < nr:
                    break
                a *= 0.5
            c, r, J = cn, rn, Jn
        m = r
        if n_sets and L.imbalance(c) == 0:
            break
    return c


def _lp_snap(L: _Lifted, c0):
    """Fix the balanced labelling suggested by ``c0`` and solve for it exactly.

    Lower halves must be <= 0 and upper halves >= 0 (odd middles free); the
    LP maximizes the normalized margin subject to ``c . c0 = 1``.
    """
    v = L.V @ c0
    rows = []
    for j, (st, n) in enumerate(zip(L.starts, L.sizes)):
        seg = slice(st, st + n)
        order = np.argsort(v[seg], kind="stable") + st
        h = n // 2
        rows.append(L.V[order[:h]])
        rows.append(-L.V[order[n - h:]])
    A = np.vstack(rows)
    if len(A) == 0:
        return c0
    M = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    res = linprog(
        np.concatenate([np.zeros(M), [-1.0]]),
        A_ub=np.hstack([A, norms[:, None]]), b_ub=np.zeros(len(A)),
        A_eq=np.concatenate([c0, [0.0]])[None, :], b_eq=[1.0],
        bounds=[(None, None)] * M + [(None, 1.0)], method="highs",
    )
    if res.status != 0:
        return None
    c = res.x[:-1]
    return c / np.linalg.norm(c)


def _single_set_line(s, center, scale, rng):
    """Line through the median of a random projection; always a bisector."""
    th = rng.uniform(0, np.pi)
    a, b = math.cos(th), math.sin(th)
    u = (s[:, 0] - center[0]) / scale
    v = (s[:, 1] - center[1]) / scale
    proj = np.sort(a * u + b * v)
    n = len(proj)
    t = proj[n // 2] if n % 2 else 0.5 * (proj[n // 2 - 1] + proj[n // 2])
    return np.array([-t, a, b])


def polynomial_ham_sandwich(sets: Sequence, degree_budget: int, seed: int = 0,
                            max_restarts: int = 6, homotopy_steps: int = 30) -> Factor:
    """A factor of degree ``degree_budget`` discretely bisecting every set.

    For each set ``S`` at most ``ceil(|S|/2)`` points get a positive value and
    at most ``ceil(|S|/2)`` a negative one; points on the zero set count for
    neither side.  Works in the space of coefficients: soft-median homotopy
    toward a common bisecting hyperplane, then an LP that fixes the balanced
    labelling exactly.  Every returned factor passed the certificate check.
    """
    sets = [np.asarray(s, dtype=float).reshape(-1, 2) for s in sets]
    if degree_budget < 1:
        raise InfeasibleBudgetError("degree budget must be >= 1")
    cap = n_monomials(degree_budget) - 1
    if len(sets) > cap:
        raise InfeasibleBudgetError(f"degree {degree_budget} bisects at most {cap} sets, got {len(sets)}")
    live = [s for s in sets if len(s) >= 2]
    rng = np.random.default_rng(seed)
    if not live:
        return Factor(degree_budget, (1.0,) + (0.0,) * (cap - 1) + (1.0,))
    center, scale = _normalization(live)
    M = n_monomials(degree_budget)

    def wrap(c):
        return Factor(degree_budget, tuple(float(x) for x in c), center, scale)

    if len(live) == 1:
        for _ in range(max_restarts * 4):
            c = np.zeros(M)
            c[:3] = _single_set_line(live[0], center, scale, rng)
            f = wrap(c)
            if certificate_holds(f, live):
                return f
    L = _Lifted(live, degree_budget, center, scale)
    means = L.segsum(L.V) / L.sizes[:, None]
    _, _, vt = np.linalg.svd(means, full_matrices=True)
    null = vt[len(live):]
    best = None
    for attempt in range(max_restarts):
        c = null.T @ rng.standard_normal(len(null))
        c /= np.linalg.norm(c)
        if L.imbalance(c) > 0:
            c = _homotopy(L, c, homotopy_steps, 15, 1e-3)
        for cand in (c, _lp_snap(L, c)):
            if cand is None:
                continue
            f = wrap(cand)
            if certificate_holds(f, live):
                return f
            imb = max(bisection_imbalance(f(s)) for s in live)
            best = imb if best is None else min(best, imb)
    raise HamSandwichSearchError(f"no certified bisector for {len(live)} sets at degree {degree_budget}",
                                 best if best is not None else -1)


# --- cells -------------------------------------------------------------------


@dataclass
class Cell:
    id: int
    sign_key: int
    sample: tuple[float, float]
    bbox: tuple[float, float, float, float]
    members: tuple[int, ...] = ()
    crossing: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {"id": self.id, "sign_key": self.sign_key, "sample": list(self.sample),
                "bbox": list(self.bbox), "members": list(self.members),
                "crossing": list(self.crossing)}


class Raster:
    """Sign-vector raster of a polynomial over a box, labelled into components."""

    def __init__(self, f: BivariatePoly, bbox, resolution: int, tol: float = DEFAULT_TOL):
        self.f = f
        self.bbox = tuple(float(b) for b in bbox)
        self.res = int(resolution)
        self.tol = tol
        x0, y0, x1, y1 = self.bbox
        self.xs = np.linspace(x0, x1, self.res)
        self.ys = np.linspace(y0, y1, self.res)
        self.dx = (x1 - x0) / (self.res - 1)
        self.dy = (y1 - y0) / (self.res - 1)
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        self.keys = _keys_from_factors(f.factors, X, Y, tol)
        self.labels, self.n_components = self._label()

    def _label(self):
        k = self.keys
        R = self.res
        idx = np.arange(R * R).reshape(R, R)
        rows, cols = [], []
        neighbours = (
            (k[:-1, :], k[1:, :], idx[:-1, :], idx[1:, :]),
            (k[:, :-1], k[:, 1:], idx[:, :-1], idx[:, 1:]),
        )
        for a, b, ia, ib in neighbours:
            same = (a == b) & (a >= 0)
            rows.append(ia[same])
            cols.append(ib[same])
        # diagonal steps count only when the centre of the 2x2 block agrees, so
        # slivers near crossings stay attached without bridging across a node
        cx = (self.xs[:-1] + self.xs[1:]) / 2
        cy = (self.ys[:-1] + self.ys[1:]) / 2
        CX, CY = np.meshgrid(cx, cy, indexing="ij")
        mid = _keys_from_factors(self.f.factors, CX, CY, self.tol)
        for a, b, ia, ib in (
            (k[:-1, :-1], k[1:, 1:], idx[:-1, :-1], idx[1:, 1:]),
            (k[1:, :-1], k[:-1, 1:], idx[1:, :-1], idx[:-1, 1:]),
        ):
            same = (a == b) & (a >= 0) & (mid == a)
            rows.append(ia[same])
            cols.append(ib[same])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        g = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(R * R, R * R))
        _, lab = connected_components(g, directed=False)
        lab = lab.reshape(R, R)
        valid = k >= 0
        lab = self._join_slivers(lab, valid)
        # renumber components by first raster index so ids are deterministic
        flat = lab[valid]
        uniq, first = np.unique(flat, return_index=True)
        order = np.argsort(first, kind="stable")
        remap = np.full(lab.max() + 1, -1, dtype=np.int64)
        remap[uniq[order]] = np.arange(len(uniq))
        out = np.where(valid, remap[lab], -1)
        return out, len(uniq)

    def _join_slivers(self, lab, valid, samples_per_px: int = 4):
        """Merge same-key components joined by a straight segment inside their sign region.

        Regions thinner than a pixel (near crossings, between nearly parallel
        branches) rasterize into scattered pieces; a sampled segment whose
        every sample keeps the key is a witness that the pieces connect.
        """
        # nearest pixel pairs between pieces always lie on piece boundaries
        edge = np.zeros_like(valid)
        edge[:-1, :] |= lab[:-1, :] != lab[1:, :]
        edge[1:, :] |= lab[1:, :] != lab[:-1, :]
        edge[:, :-1] |= lab[:, :-1] != lab[:, 1:]
        edge[:, 1:] |= lab[:, 1:] != lab[:, :-1]
        edge[[0, -1], :] = True
        edge[:, [0, -1]] = True
        edge &= valid
        keys = self.keys[edge]
        comp = lab[edge]
        ii, jj = np.nonzero(edge)
        groups: dict[int, list[int]] = {}
        first_key: dict[int, int] = {}
        for c, kk in zip(comp.tolist(), keys.tolist()):
            if c not in first_key:
                first_key[c] = kk
                groups.setdefault(kk, []).append(c)
        parent = {c: c for c in first_key}

        def find(c):
            while parent[c] != c:
                parent[c] = parent[parent[c]]
                c = parent[c]
            return c

        multi = {kk: cs for kk, cs in groups.items() if len(cs) > 1}
        if not multi:
            return lab
        order = np.argsort(comp, kind="stable")
        sc = comp[order]
        pix = np.column_stack([ii[order], jj[order]]).astype(float)
        span = {c: (int(np.searchsorted(sc, c, "left")), int(np.searchsorted(sc, c, "right")))
                for cs in multi.values() for c in cs}
        for kk, cs in multi.items():
            trees = {c: cKDTree(pix[span[c][0]:span[c][1]]) for c in cs}
            for a_i, a in enumerate(cs):
                for b in cs[a_i + 1:]:
                    if find(a) == find(b):
                        continue
                    if span[a][1] - span[a][0] > span[b][1] - span[b][0]:
                        a, b = b, a
                    pa = pix[span[a][0]:span[a][1]]
                    dist, idx = trees[b].query(pa)
                    t = int(np.argmin(dist))
                    p0 = pa[t]
                    p1 = pix[span[b][0] + int(idx[t])]
                    m = max(2, int(np.ceil(dist[t] * samples_per_px)) + 1)
                    w = np.linspace(0.0, 1.0, m)[:, None]
                    g = p0[None, :] * (1 - w) + p1[None, :] * w
                    xy = np.column_stack([self.bbox[0] + g[:, 0] * self.dx,
                                          self.bbox[1] + g[:, 1] * self.dy])
                    if np.all(self.f.sign_keys(xy, self.tol) == kk):
                        parent[find(b)] = find(a)
        remap = np.arange(lab.max() + 1)
        for c in parent:
            remap[c] = find(c)
        return remap[lab]

    def locate(self, xy, keys=None, window: int = 3) -> np.ndarray:
        """Component label of each query point, or ``-1`` if unresolved.

        A query is matched to the nearest raster node carrying its own sign
        key, searching the enclosing square first and then a small window.
        """
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if keys is None:
            keys = self.f.sign_keys(xy, self.tol)
        x0, y0 = self.bbox[0], self.bbox[1]
        fi = (xy[:, 0] - x0) / self.dx
        fj = (xy[:, 1] - y0) / self.dy
        out = np.full(len(xy), -1, dtype=np.int64)
        best = np.full(len(xy), np.inf)
        i0 = np.floor(fi).astype(np.int64)
        j0 = np.floor(fj).astype(np.int64)
        inside = (keys >= 0)
        for di in (0, 1):
            for dj in (0, 1):
                ii = i0 + di
                jj = j0 + dj
                ok = inside & (ii >= 0) & (ii < self.res) & (jj >= 0) & (jj < self.res)
                iic = np.clip(ii, 0, self.res - 1)
                jjc = np.clip(jj, 0, self.res - 1)
                match = ok & (self.keys[iic, jjc] == keys)
                dist = (fi - ii) ** 2 + (fj - jj) ** 2
                take = match & (dist < best)
                out[take] = self.labels[iic[take], jjc[take]]
                best[take] = dist[take]
        for q in np.nonzero((out < 0) & inside)[0]:
            ci, cj = int(round(fi[q])), int(round(fj[q]))
            lo_i, hi_i = max(ci - window, 0), min(ci + window + 1, self.res)
            lo_j, hi_j = max(cj - window, 0), min(cj + window + 1, self.res)
            if lo_i >= hi_i or lo_j >= hi_j:
                continue
            sub = self.keys[lo_i:hi_i, lo_j:hi_j] == keys[q]
            if not sub.any():
                continue
            ii, jj = np.nonzero(sub)
            d = (ii + lo_i - fi[q]) ** 2 + (jj + lo_j - fj[q]) ** 2
            t = int(np.argmin(d))
            out[q] = self.labels[ii[t] + lo_i, jj[t] + lo_j]
        return out

    def cells(self) -> list[Cell]:
        lab = self.labels
        valid = lab >= 0
        ii, jj = np.nonzero(valid)
        ll = lab[valid]
        order = np.argsort(ll, kind="stable")
        ii, jj, ll = ii[order], jj[order], ll[order]
        bounds = np.searchsorted(ll, np.arange(self.n_components + 1))
        out = []
        for c in range(self.n_components):
            a, b = bounds[c], bounds[c + 1]
            ci, cj = ii[a:b], jj[a:b]
            mi, mj = ci.mean(), cj.mean()
            t = int(np.argmin((ci - mi) ** 2 + (cj - mj) ** 2))
            sample = (float(self.xs[ci[t]]), float(self.ys[cj[t]]))
            bb = (float(self.xs[ci.min()]), float(self.ys[cj.min()]),
                  float(self.xs[ci.max()]), float(self.ys[cj.max()]))
            out.append(Cell(c, int(self.keys[ci[t], cj[t]]), sample, bb))
        return out


def _canonical_assignment(labels: np.ndarray) -> tuple:
    seen: dict[int, int] = {}
    out = []
    for v in labels.tolist():
        if v < 0:
            out.append(-1)
            continue
        if v not in seen:
            seen[v] = len(seen)
        out.append(seen[v])
    return tuple(out)


@dataclass
class CellDecomposition:
    f: BivariatePoly
    raster: Raster
    cells: list[Cell]
    assignment: np.ndarray  # per query point: cell id, -1 zero band / unresolved
    resolution: int
    refinements: int

    def locate(self, xy) -> np.ndarray:
        return self.raster.locate(xy)


def cells_of_complement(f: BivariatePoly, bbox, resolution: int = 256, points=None,
                        tol: float = DEFAULT_TOL, max_resolution: int = 2048) -> CellDecomposition:
    """Connected components of the plane minus the zero set, inside ``bbox``.

    With ``points``, the resolution doubles until two consecutive rasters
    induce the same point-to-cell partition.
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    if points is None or len(points) == 0:
        r = Raster(f, bbox, resolution, tol)
        return CellDecomposition(f, r, r.cells(), np.zeros(0, dtype=np.int64), resolution, 0)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    keys = f.sign_keys(pts, tol)
    res = resolution
    prev = None
    prev_lab = None
    refinements = 0
    while True:
        r = Raster(f, bbox, res, tol)
        lab = r.locate(pts, keys)
        canon = _canonical_assignment(lab)
        unresolved = bool(((lab < 0) & (keys >= 0)).any())
        if prev is not None and canon == prev and not unresolved:
            break
        if res * 2 > max_resolution:
            if prev is not None and canon == prev:
                break
            raise UnstableCellsError(f"point-to-cell assignment unstable at resolution {res}",
                                     prev_lab, lab)
        prev, prev_lab = canon, lab
        res *= 2
        refinements += 1
    cells = r.cells()
    members: list[list[int]] = [[] for _ in cells]
    for i, c in enumerate(lab.tolist()):
        if c >= 0:
            members[c].append(i)
    for c, m in zip(cells, members):
        c.members = tuple(m)
    return CellDecomposition(f, r, cells, lab, res, refinements)


def circles_crossing_cell(centers, radius: float, decomp: CellDecomposition,
                          min_samples: int = 64) -> tuple[list[list[int]], list[list[int]], list[int]]:
    """Cells met by each circle, by sampling at a density tied to raster spacing.

    Returns ``(per_circle, per_cell, unstable)`` where ``unstable`` lists
    circles with samples that could not be located (reported, not fatal).
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    n_cells = len(decomp.cells)
    per_circle: list[list[int]] = []
    per_cell: list[list[int]] = [[] for _ in range(n_cells)]
    unstable: list[int] = []
    if len(centers) == 0:
        return per_circle, per_cell, unstable
    spacing = min(decomp.raster.dx, decomp.raster.dy)
    k = max(min_samples, int(math.ceil(2 * math.pi * radius / (0.5 * spacing))))
    th = np.linspace(0.0, 2 * np.pi, k, endpoint=False)
    ring = np.column_stack([radius * np.cos(th), radius * np.sin(th)])
    x0, y0, x1, y1 = decomp.raster.bbox
    chunk = max(1, 400_000 // k)
    for start in range(0, len(centers), chunk):
        block = centers[start:start + chunk]
        pts = (block[:, None, :] + ring[None, :, :]).reshape(-1, 2)
        inside = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
        lab = np.full(len(pts), -1, dtype=np.int64)
        keys = np.full(len(pts), -1, dtype=np.int64)
        if inside.any():
            keys[inside] = decomp.f.sign_keys(pts[inside], decomp.raster.tol)
            lab[inside] = decomp.raster.locate(pts[inside], keys[inside])
        lab = lab.reshape(len(block), k)
        miss = ((lab < 0) & (keys.reshape(len(block), k) >= 0)).any(axis=1)
        for b in range(len(block)):
            cid = start + b
            cs = sorted(set(lab[b][lab[b] >= 0].tolist()))
            per_circle.append(cs)
            for c in cs:
                per_cell[c].append(cid)
            if miss[b]:
                unstable.append(cid)
    return per_circle, per_cell, unstable


# --- partitioning -------------------------------------------------------------


@dataclass
class PartitionResult:
    f: BivariatePoly
    cells: list[Cell]
    zero_set: tuple[int, ...]
    n_points: int
    stats: dict = field(default_factory=dict)
    decomposition: CellDecomposition | None = field(default=None, repr=False)
    certificates: list[bool] = field(default_factory=list)

    def cell_of(self) -> np.ndarray:
        out = np.full(self.n_points, -1, dtype=np.int64)
        for c in self.cells:
            out[list(c.members)] = c.id
        return out

    def to_json(self) -> dict:
        return {
            "polynomial": self.f.to_json(),
            "cells": [c.to_json() for c in self.cells],
            "zero_set": list(self.zero_set),
            "n_points": self.n_points,
            "statistics": self.stats,
        }


def _split_by_factor(parts, factor, xy, tol):
    vals = factor(xy)
    band = factor.band_with(tol)
    new, zeros = [], []
    for p in parts:
        v = vals[p]
        pos = p[v > band]
        neg = p[v < -band]
        zeros.extend(p[np.abs(v) <= band].tolist())
        new.extend(q for q in (neg, pos) if len(q))
    return new, zeros


def _solve_group(group_sets, remaining, seed):
    """Bisect as many of ``group_sets`` (largest first) as one factor can.

    Falls back to smaller groups when the joint search fails.
    """
    n = len(group_sets)
    while n >= 1:
        deg = min_degree_for(n)
        if deg > remaining:
            deg = remaining
            n = min(n, n_monomials(deg) - 1)
        try:
            return polynomial_ham_sandwich(group_sets[:n], deg, seed=seed), n
        except HamSandwichSearchError as exc:
            log.info("joint bisection of %d sets failed (%s); halving the group", n, exc)
            if n == 1:
                raise
            n = n // 2
    raise HamSandwichSearchError("empty group", -1)


def partition_points(points, D: int, seed: int = 0, resolution: int = 256, tol: float = DEFAULT_TOL,
                     c_occ: float = C_OCC, c_cells: float = C_CELLS, bbox=None,
                     max_resolution: int = 2048) -> PartitionResult:
    """Iterated polynomial ham-sandwich halving with total degree ``D``.

    Each round bisects the current parts (largest first) with one new
    factor; other parts are refined by its signs as well.  Finally the cells
    of the complement are computed and points assigned to them.
    """
    if D < 1:
        raise ValueError("degree D must be >= 1")
    xy = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(xy)
    rng = np.random.default_rng(seed)
    parts = [np.arange(n)] if n else []
    zero: list[int] = []
    factors: list[Factor] = []
    group_sizes: list[int] = []
    certs: list[bool] = []
    remaining = D
    while remaining > 0:
        active = sorted((p for p in parts if len(p) >= 2), key=lambda p: (-len(p), int(p[0])))
        if not active:
            break
        fseed = int(rng.integers(2**63))
        factor, used = _solve_group([xy[p] for p in active], remaining, fseed)
        factors.append(factor)
        group_sizes.append(used)
        certs.append(certificate_holds(factor, [xy[p] for p in active[:used]]))
        remaining -= factor.degree
        parts, z = _split_by_factor(parts, factor, xy, tol)
        zero.extend(z)
    if not factors:
        # nothing to split; a single line far from the data keeps one cell
        factors.append(Factor.line(1.0, 0.0, 0.0))
    f = BivariatePoly(tuple(factors))
    if bbox is None:
        bbox = _padded_bbox(xy, 0.0)
    keys = f.sign_keys(xy, tol) if n else np.zeros(0, dtype=np.int64)
    zero_set = sorted(set(zero) | set(np.nonzero(keys < 0)[0].tolist()))
    decomp = cells_of_complement(f, bbox, resolution, xy, tol, max_resolution)
    cells = decomp.cells
    occ = max((len(c.members) for c in cells), default=0)
    nonempty = sum(1 for c in cells if c.members)
    stats = {
        "n": n,
        "degree": f.degree,
        "factor_degrees": [fa.degree for fa in factors],
        "sets_per_factor": group_sizes,
        "cells": len(cells),
        "nonempty_cells": nonempty,
        "zero_set_points": len(zero_set),
        "max_occupancy": occ,
        "max_part": max((len(p) for p in parts), default=0),
        "occupancy_bound": c_occ * n / D ** 2 if n else 0.0,
        "occupancy_ok": occ <= c_occ * n / D ** 2 if n else True,
        "c_occ": c_occ,
        "c_occ_measured": occ * D ** 2 / n if n else 0.0,
        "cell_count_bound": c_cells * D ** 2,
        "cell_count_ok": len(cells) <= c_cells * D ** 2,
        "resolution": decomp.resolution,
        "certificates_ok": all(certs),
    }
    return PartitionResult(f, cells, tuple(zero_set), n, stats, decomp, certs)


def _padded_bbox(xy, pad):
    if len(xy) == 0:
        return (-1.0, -1.0, 1.0, 1.0)
    lo = xy.min(axis=0)
    hi = xy.max(axis=0)
    span = max(float((hi - lo).max()), 1.0)
    m = pad + 0.02 * span
    return (float(lo[0] - m), float(lo[1] - m), float(hi[0] + m), float(hi[1] + m))


def padded_bbox(xy, pad: float = 0.0):
    return _padded_bbox(np.asarray(xy, dtype=float).reshape(-1, 2), pad)


def incidences_on_zero_set(pairs, zero_set) -> int:
    """Incidences ``(p, c)`` whose point lies in the zero band."""
    z = set(zero_set)
    return sum(1 for p, _ in pairs if p in z)


def zero_set_budget(n: int, r: float) -> float:
    """``n r + n + r^2``: the cap on incidences carried by the zero set."""
    return n * r + n + r * r
