"""Discretizations of R^N: radial and box grids, weighted norms, regions,
dilations, and the admissible weight-function family used for twisting.

All grids are staggered so that no node sits at the origin: the potential
|x|^{-4} is finite at every node and the singularity is controlled by the
quadratic form, never by mollification.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

TANH_HESS_MAX = 4.0 / (3.0 * math.sqrt(3.0))  # max of |d/dt sech^2(t)|


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere S^{N-1} in R^N."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def ball_volume(N: int, R: float) -> float:
    return sphere_area(N) * R**N / N


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    """Staggered radial grid for R^N carrying the measure sigma_{N-1} r^{N-1} dr.

    Nodes sit strictly between the cell faces, so r_1 > 0.  Weights are
    w_i = sigma_{N-1} r_i^{N-1} delta_i; their sum matches the volume of
    the covered ball (annulus) to second order in the spacing.
    """

    N: int
    R: float
    n: int
    mode: str                      # "uniform" | "log"
    r: np.ndarray = field(repr=False)
    faces: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    LOG_INNER_FACTOR = 1e-6

    @property
    def delta(self) -> np.ndarray:
        return np.diff(self.faces)

    @property
    def points(self) -> np.ndarray:
        return self.r

    def manifest(self) -> dict:
        return {
            "kind": "radial",
            "dimension": self.N,
            "outer_radius": self.R,
            "n": self.n,
            "mode": self.mode,
            "nodes": self.r.tolist(),
            "weights": self.w.tolist(),
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.manifest(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_json(self) -> str:
        m = self.manifest()
        m["content_hash"] = self.content_hash()
        return json.dumps(m, indent=1)


def build_radial_grid(N: int, R: float, n: int, mode: str = "uniform") -> RadialGrid:
    """Build a staggered radial grid.

    Uniform mode: faces at i*R/n, nodes at cell midpoints.
    Log mode: faces geometric on [R*1e-6, R], nodes at geometric means.
    """
    if N < 5:
        raise GridError(f"N >= 5 required (got N={N})")
    if R <= 0:
        raise GridError("outer radius must be positive")
    if n < 16:
        raise GridError(f"n >= 16 required (got n={n})")
    if mode == "uniform":
        faces = np.linspace(0.0, R, n + 1)
        r = 0.5 * (faces[:-1] + faces[1:])
    elif mode == "log":
        faces = np.geomspace(R * RadialGrid.LOG_INNER_FACTOR, R, n + 1)
        r = np.sqrt(faces[:-1] * faces[1:])
    else:
        raise GridError(f"unknown mode {mode!r}")
    # midpoint weights: exact for the singular moment int u^2 r^{-4} dx
    # with u constant, and within O(n^{-2}) of cell volumes elsewhere
    w = sphere_area(N) * r ** (N - 1) * np.diff(faces)
    return RadialGrid(N=N, R=float(R), n=n, mode=mode, r=r, faces=faces, w=w)


@dataclass(frozen=True)
class BoxGrid:
    """Cartesian grid on [-B, B]^N, nodes offset by h/2 so min|x_i| = h/2.

    Values outside the box are treated as zero (Dirichlet truncation).
    Requires even per-axis count m so that no node hits a coordinate zero.
    """

    N: int
    m: int
    B: float

    @property
    def h(self) -> float:
        return 2.0 * self.B / self.m

    @property
    def axis(self) -> np.ndarray:
        return -self.B + (np.arange(self.m) + 0.5) * self.h

    @property
    def size(self) -> int:
        return self.m**self.N

    @property
    def shape(self) -> tuple:
        return (self.m,) * self.N

    def coords(self) -> np.ndarray:
        """(size, N) array of node coordinates."""
        grids = np.meshgrid(*([self.axis] * self.N), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def radii_sq(self) -> np.ndarray:
        ax2 = self.axis**2
        out = np.zeros(self.shape)
        for k in range(self.N):
            sh = [1] * self.N
            sh[k] = self.m
            out = out + ax2.reshape(sh)
        return out.ravel()

    @property
    def w(self) -> np.ndarray:
        return np.full(self.size, self.h**self.N)

    @property
    def points(self) -> np.ndarray:
        return self.coords()

    def manifest(self) -> dict:
        return {"kind": "box", "dimension": self.N, "m": self.m, "half_width": self.B}

    def content_hash(self) -> str:
        blob = json.dumps(self.manifest(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_json(self) -> str:
        m = self.manifest()
        m["content_hash"] = self.content_hash()
        return json.dumps(m, indent=1)


def build_box_grid(N: int, m: int, B: float) -> BoxGrid:
    if N < 5:
        raise GridError(f"N >= 5 required (got N={N})")
    if m < 4 or m % 2:
        raise GridError("per-axis count m must be even and >= 4")
    if B <= 0:
        raise GridError("half-width must be positive")
    return BoxGrid(N=N, m=m, B=float(B))


@dataclass
class GridFunction:
    """Sampled function on a grid; values may be complex."""

    grid: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        npts = self.grid.n if isinstance(self.grid, RadialGrid) else self.grid.size
        if self.values.shape != (npts,):
            raise GridError("value length does not match grid node count")

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def to_csv(self) -> str:
        """CSV columns: index, coordinate(s), re, im."""
        buf = io.StringIO()
        if isinstance(self.grid, RadialGrid):
            buf.write("index,r,re,im\n")
            for i, (ri, v) in enumerate(zip(self.grid.r, self.values)):
                buf.write(f"{i},{ri!r},{v.real!r},{np.imag(v)!r}\n")
        else:
            X = self.grid.coords()
            cols = ",".join(f"x{k+1}" for k in range(self.grid.N))
            buf.write(f"index,{cols},re,im\n")
            for i, v in enumerate(self.values):
                xs = ",".join(repr(x) for x in X[i])
                buf.write(f"{i},{xs},{v.real!r},{np.imag(v)!r}\n")
        return buf.getvalue()


def lp_norm(u: GridFunction, p: float) -> float:
    """Weighted L^p norm; p = inf gives the sup over nodes."""
    if p < 1:
        raise GridError(f"p >= 1 required (got {p})")
    a = np.abs(u.values)
    if math.isinf(p):
        return float(a.max(initial=0.0))
    w = u.grid.w
    return float((w @ a**p) ** (1.0 / p))


def weighted_lp(values: np.ndarray, w: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(np.abs(values).max(initial=0.0))
    return float((w @ np.abs(values) ** p) ** (1.0 / p))


def dilate(u: GridFunction, s: float) -> GridFunction:
    """Dilation (D_s u)(x) = u(s x) by linear interpolation, s in (0, 1]."""
    if not (0.0 < s <= 1.0):
        raise GridError(f"dilation factor must be in (0, 1] (got {s})")
    if s == 1.0:
        return u.copy()
    g = u.grid
    if isinstance(g, RadialGrid):
        def interp(vals):
            return np.interp(s * g.r, g.r, vals, left=vals[0], right=0.0)
    else:
        from scipy.interpolate import RegularGridInterpolator

        pts = s * g.coords()

        def interp(vals):
            f = RegularGridInterpolator(
                (g.axis,) * g.N, vals.reshape(g.shape),
                bounds_error=False, fill_value=0.0)
            return f(pts)

    v = u.values
    if np.iscomplexobj(v):
        out = interp(v.real) + 1j * interp(v.imag)
    else:
        out = interp(v)
    return GridFunction(g, out)


@dataclass(frozen=True)
class Region:
    """Subset of R^N with a per-node indicator: ball, box, or annulus."""

    kind: str                      # "ball" | "box" | "annulus"
    params: tuple

    @staticmethod
    def ball(center, radius) -> "Region":
        return Region("ball", (np.atleast_1d(np.asarray(center, dtype=float)), float(radius)))

    @staticmethod
    def annulus(a: float, b: float) -> "Region":
        """Origin-centred annulus {a <= |x| <= b}; b may be inf."""
        return Region("annulus", (float(a), float(b)))

    @staticmethod
    def box(lo, hi) -> "Region":
        return Region("box", (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)))

    @property
    def convex(self) -> bool:
        return self.kind in ("ball", "box") or (self.kind == "annulus" and self.params[0] == 0.0)

    def indicator(self, grid) -> np.ndarray:
        if isinstance(grid, RadialGrid):
            r = grid.r
            if self.kind == "ball":
                c, rad = self.params
                if np.any(c != 0.0):
                    raise GridError("off-centre balls need a box grid")
                return (r <= rad).astype(float)
            if self.kind == "annulus":
                a, b = self.params
                return ((r >= a) & (r <= b)).astype(float)
            raise GridError("box regions need a box grid")
        X = grid.coords()
        if self.kind == "ball":
            c, rad = self.params
            return (np.linalg.norm(X - c, axis=1) <= rad).astype(float)
        if self.kind == "annulus":
            a, b = self.params
            rr = np.linalg.norm(X, axis=1)
            return ((rr >= a) & (rr <= b)).astype(float)
        lo, hi = self.params
        return np.all((X >= lo) & (X <= hi), axis=1).astype(float)

    def support_interval(self, e: np.ndarray) -> tuple:
        """Range [min, max] of e.x over the region (for convex kinds)."""
        if self.kind == "ball":
            c, rad = self.params
            ec = float(e @ c) if c.shape == e.shape else float(e[0] * c[0]) if c.size == 1 else float(e @ c)
            return ec - rad, ec + rad
        if self.kind == "annulus":
            a, b = self.params
            if math.isinf(b):
                return -math.inf, math.inf
            return -b, b
        lo, hi = self.params
        m = float(np.sum(np.where(e >= 0, e * lo, e * hi)))
        M = float(np.sum(np.where(e >= 0, e * hi, e * lo)))
        return m, M


def euclidean_distance(E: Region, F: Region) -> float:
    """Euclidean distance between two regions (supported kinds only)."""
    if E.kind == "ball" and F.kind == "ball":
        (c1, r1), (c2, r2) = E.params, F.params
        d = float(np.linalg.norm(np.broadcast_arrays(c1, c2)[0] - np.broadcast_arrays(c1, c2)[1]))
        d = float(np.linalg.norm(c1 - c2)) if c1.shape == c2.shape else d
        return max(0.0, d - r1 - r2)
    def as_radial(reg):
        if reg.kind == "annulus":
            return reg.params
        if reg.kind == "ball" and not np.any(reg.params[0]):
            return (0.0, reg.params[1])
        return None
    a1, a2 = as_radial(E), as_radial(F)
    if a1 is not None and a2 is not None:
        lo1, hi1 = a1
        lo2, hi2 = a2
        return max(0.0, lo2 - hi1, lo1 - hi2)
    if E.kind == "ball" and F.kind == "annulus":
        c, r = E.params
        a, b = F.params
        rc = float(np.linalg.norm(c))
        return max(0.0, a - rc - r, rc - r - b)
    if E.kind == "annulus" and F.kind == "ball":
        return euclidean_distance(F, E)
    raise GridError(f"distance not implemented for {E.kind}/{F.kind}")


@dataclass(frozen=True)
class PhiFamily:
    """Admissible twisting weight phi with |D^a phi| <= 1 for 1 <= |a| <= 2.

    Linear kind: phi(x) = s tanh((e.x + b)/s) with |e| = 1.
    Radial kind: phi(x) = s tanh((|x| - r0)/s); its Hessian carries a
    tanh'(.)/|x| curvature term, so admissibility near the origin is
    certified numerically on the grid at hand.
    """

    kind: str                      # "linear" | "radial"
    e: np.ndarray                  # direction (linear) or unused
    s: float
    b: float                       # shift (linear) / -r0 (radial uses r0 = -b)

    def __post_init__(self):
        if self.s < TANH_HESS_MAX - 1e-12:
            raise GridError(
                f"steepness s >= 4/(3*sqrt(3)) ~ {TANH_HESS_MAX:.4f} required")
        if self.kind == "linear" and abs(np.linalg.norm(self.e) - 1.0) > 1e-10:
            raise GridError("direction must be a unit vector")

    @property
    def r0(self) -> float:
        return -self.b

    def _arg(self, x_dot_e_or_r):
        return (x_dot_e_or_r + self.b) / self.s

    def __call__(self, grid) -> np.ndarray:
        return self.values(grid)

    def values(self, grid) -> np.ndarray:
        if isinstance(grid, RadialGrid):
            t = self._arg(grid.r)
        else:
            t = self._arg(grid.coords() @ self.e if self.kind == "linear"
                          else np.sqrt(grid.radii_sq()))
        return self.s * np.tanh(t)

    def gradient(self, grid) -> np.ndarray:
        """(n, N) gradient at box nodes; (n,) radial derivative on radial grids."""
        if isinstance(grid, RadialGrid):
            t = self._arg(grid.r)
            return 1.0 / np.cosh(t) ** 2
        X = grid.coords()
        if self.kind == "linear":
            t = self._arg(X @ self.e)
            return (1.0 / np.cosh(t) ** 2)[:, None] * self.e[None, :]
        rr = np.sqrt(grid.radii_sq())
        t = self._arg(rr)
        return (1.0 / np.cosh(t) ** 2 / rr)[:, None] * X

    def laplacian(self, grid) -> np.ndarray:
        if isinstance(grid, RadialGrid):
            N = grid.N
            t = self._arg(grid.r)
            sech2 = 1.0 / np.cosh(t) ** 2
            return -2.0 * np.tanh(t) * sech2 / self.s + (N - 1) / grid.r * sech2
        if self.kind == "linear":
            t = self._arg(grid.coords() @ self.e)
            return -2.0 * np.tanh(t) / np.cosh(t) ** 2 / self.s
        N = grid.N
        rr = np.sqrt(grid.radii_sq())
        t = self._arg(rr)
        sech2 = 1.0 / np.cosh(t) ** 2
        return -2.0 * np.tanh(t) * sech2 / self.s + (N - 1) / rr * sech2

    def certify(self, grid=None, strict: bool = True) -> dict:
        """Check the class bounds |grad| <= 1, |hess| <= 1, |phi| <= s.

        Linear kind is certified analytically; the radial kind additionally
        spot-checks the 1/r Hessian term on the grid nodes.
        """
        report = {
            "grad_bound": 1.0,
            "hess_bound": TANH_HESS_MAX / self.s,
            "sup_bound": self.s,
            "ok": True,
        }
        if self.kind == "radial":
            if grid is None:
                raise GridError("radial phi certification requires a grid")
            rr = grid.r if isinstance(grid, RadialGrid) else np.sqrt(grid.radii_sq())
            t = self._arg(rr)
            sech2 = 1.0 / np.cosh(t) ** 2
            hess_max = float(np.max(TANH_HESS_MAX / self.s * sech2 + sech2 / rr))
            report["hess_bound"] = hess_max
            report["ok"] = hess_max <= 1.0 + 1e-12
            if strict and not report["ok"]:
                raise GridError(
                    f"radial phi violates the Hessian bound on this grid "
                    f"(max {hess_max:.3f} > 1)")
        if grid is not None:
            v = self.values(grid)
            report["sup_observed"] = float(np.max(np.abs(v)))
        return report


def make_phi(e, s: float, b: float = 0.0, kind: str = "linear",
             grid=None) -> PhiFamily:
    """Construct and certify an admissible twisting weight."""
    e = np.atleast_1d(np.asarray(e, dtype=float))
    phi = PhiFamily(kind=kind, e=e, s=float(s), b=float(b))
    phi.certify(grid=grid, strict=kind == "radial" and grid is not None)
    return phi


def boundary_taper(rr: np.ndarray, R: float, start: float = 0.8) -> np.ndarray:
    """Smooth cutoff equal to 1 for r <= start*R, 0 at r = R."""
    t = np.clip((rr - start * R) / ((1.0 - start) * R), 0.0, 1.0)
    return np.cos(0.5 * math.pi * t) ** 2


def probe_functions(grid, count: int, seed: int = 0) -> list:
    """Deterministic H^2-style probe family: Gaussians, polynomial bumps,
    and oscillatory radial profiles, all vanishing at the outer boundary.
    """
    if count < 1:
        raise GridError("count >= 1 required")
    rng = np.random.default_rng(seed)
    if isinstance(grid, RadialGrid):
        rr = grid.r
        R = grid.R
    else:
        rr = np.sqrt(grid.radii_sq())
        R = grid.B
    taper = boundary_taper(rr, R)
    out = []
    for i in range(count):
        fam = i % 3
        if fam == 0:
            a = 1.0 if i == 0 else float(rng.uniform(0.5, 3.0))
            v = np.exp(-a * rr**2)
        elif fam == 1:
            b = float(rng.uniform(0.3, 0.8)) * R
            v = np.clip(1.0 - (rr / b) ** 2, 0.0, None) ** 3
        else:
            k = float(rng.uniform(1.0, 4.0))
            a = float(rng.uniform(0.5, 2.0))
            v = rr**2 * np.exp(-a * rr**2) * np.cos(k * rr)
        out.append(GridFunction(grid, v * taper))
    return out
