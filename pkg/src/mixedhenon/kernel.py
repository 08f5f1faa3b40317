"""Gagliardo seminorm of radial profiles by angular reduction.

For radial ``f`` the double integral over R^N x R^N collapses to

    [f]_{s,p}^p = int_0^inf int_0^inf |f(r) - f(rho)|^p W(r, rho) dr drho,
    W(r, rho)   = |S^(N-1)| r^(N-1) rho^(N-1) k(r, rho),

with ``k`` the sphere integral of ``|r e - rho sigma|^-(N+sp)``.  ``k`` blows
up like ``|r - rho|^-(1+sp)``; all quadrature below works with the regular
factor ``k(r, rho) |r - rho|^(1+sp)``.

The discrete seminorm of a piecewise-linear profile is a sum of weighted
``|difference|^p`` terms:

* far pairs of cells (``|c - d| >= 2``): tensor Gauss rule on a dense matrix
  of point-pair weights,
* self and adjacent cells: Duffy-type rules around the diagonal, where the
  difference vanishes like ``|r - rho|``,
* the exterior ``(R, inf)`` where the profile is zero: an exact-to-infinity
  substituted rule for the radial tail integral.
"""
from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse
from scipy.special import hyp2f1, roots_jacobi

from .errors import (
    ConfigurationError,
    NotApplicableError,
    SingularityError,
    StaleKernelError,
)
from .params import Params
from .radial import RadialFunction, RadialGrid, ball_volume, interpolate, radial_gradient_norm, sphere_area

CACHE_MAGIC = b"MHKM"
CACHE_VERSION = 1
QUAD_MAGIC = b"QUAD"
CACHE_ENV = "MIXEDHENON_CACHE_DIR"
_HEADER = struct.Struct("<4sIIddI32s")


def _gauss01(n: int):
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _jacobi01(n: int, beta: float):
    """Nodes/weights for ``int_0^1 t^beta g(t) dt``."""
    x, w = roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w / 2.0 ** (beta + 1.0)


def regular_kernel(r, rho, N: int, sp: float):
    """``k(r, rho) * |r - rho|^(1+sp)``; finite and smooth up to the diagonal."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    a = 1.0 + sp
    d = np.abs(r - rho)
    tot = r + rho
    if N == 1:
        return 1.0 + (d / tot) ** a
    if N == 3:
        return 2.0 * np.pi / (r * rho * a) * (1.0 - (d / tot) ** a)
    big = np.maximum(r, rho)
    t2 = (np.minimum(r, rho) / big) ** 2
    F = hyp2f1(-sp / 2.0, (N - 2.0 - sp) / 2.0, N / 2.0, t2)
    return sphere_area(N) * tot ** (-a) * big ** (2.0 + sp - N) * F


def angular_kernel(r, rho, N: int, s: float, p: float):
    """Sphere-reduced kernel ``k(r, rho)``; raises on the diagonal."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(r <= 0) or np.any(rho <= 0):
        raise ConfigurationError("radii must be positive")
    if np.any(r == rho):
        raise SingularityError("angular kernel is singular at r == rho")
    sp = s * p
    out = regular_kernel(r, rho, N, sp) * np.abs(r - rho) ** (-(1.0 + sp))
    return float(out) if out.ndim == 0 else out


def _radial_weight(r, rho, N: int, sp: float):
    """``W(r, rho) |r - rho|^(1+sp)``."""
    return sphere_area(N) * (r * rho) ** (N - 1) * regular_kernel(r, rho, N, sp)


def exterior_integral(r, R: float, N: int, sp: float, n: int = 48):
    """``T(r) = int_R^inf rho^(N-1) k(r, rho) drho`` for ``0 < r < R``.

    Substituting ``rho - r = (R - r) v^(-1/sp)`` turns the power-law part of
    the integrand into a constant on ``v in (0, 1]``; the remainder carries
    powers ``v^(k/sp)``, smoothed by a further ``v = w^4``.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    w, ww = _gauss01(n)
    v, wv = w**4, 4.0 * w**3 * ww
    d0 = R - r
    d = d0[:, None] * v[None, :] ** (-1.0 / sp)
    rho = r[:, None] + d
    g = rho ** (N - 1) * regular_kernel(r[:, None], rho, N, sp)
    return d0 ** (-sp) / sp * (g @ wv)


def _point_coeffs(grid: RadialGrid, r: np.ndarray, cells: np.ndarray):
    """Interpolation stencil (two nodes) of points ``r`` lying in ``cells``."""
    e = grid.edges
    h = grid.widths
    theta = (r - e[cells]) / h[cells]
    left = np.maximum(cells - 1, 0)
    right = cells.copy()
    wl = np.where(cells == 0, 0.0, 1.0 - theta)
    wr = np.where(cells == 0, 1.0, theta)
    return left, right, wl, wr


@dataclass(eq=False)
class KernelMatrix:
    """Assembled quadrature for ``[f]_{s,p}^p`` on one grid.

    ``K`` is the symmetric M x M summary of cell-cell kernel mass: the plain
    mass ``iint W`` for separated cells and, for self/adjacent cells, the mass
    regularized by ``min(1, |r - rho|/h)^p``.  The evaluation itself uses the
    point-level arrays.
    """

    grid_hash: str
    N: int
    s: float
    p: float
    M: int
    K: np.ndarray
    far_points: np.ndarray
    far_interp: sparse.csr_matrix
    far_weights: np.ndarray
    exterior_weights: np.ndarray
    near_op: sparse.csr_matrix
    near_weights: np.ndarray
    far_order: int = 4
    near_order: int = 10
    refinement: int = 1

    @property
    def key(self) -> tuple:
        return (self.grid_hash, self.N, self.s, self.p)

    def check(self, grid: RadialGrid, N: int, s: float, p: float) -> None:
        if self.grid_hash != grid.digest or (self.N, self.s, self.p) != (N, float(s), float(p)):
            raise StaleKernelError(
                f"kernel built for (grid {self.grid_hash[:8]}, N={self.N}, s={self.s}, p={self.p}); "
                f"got (grid {grid.digest[:8]}, N={N}, s={s}, p={p})"
            )

    def integral(self, values: np.ndarray) -> float:
        """``[f]^p`` for nodal values ``values``."""
        p = self.p
        F = self.far_interp @ values
        diff = np.abs(F[:, None] - F[None, :])
        total = np.sum(self.far_weights * diff**p)
        total += np.dot(self.exterior_weights, np.abs(F) ** p)
        total += np.dot(self.near_weights, np.abs(self.near_op @ values) ** p)
        return float(total)

    def integral_gradient(self, values: np.ndarray) -> np.ndarray:
        """Gradient of ``[f]^p`` with respect to the nodal values."""
        p = self.p
        F = self.far_interp @ values
        diff = F[:, None] - F[None, :]
        gF = 2.0 * p * np.sum(self.far_weights * np.sign(diff) * np.abs(diff) ** (p - 1), axis=1)
        gF += p * self.exterior_weights * np.sign(F) * np.abs(F) ** (p - 1)
        Dn = self.near_op @ values
        g = self.far_interp.T @ gF
        g += self.near_op.T @ (p * self.near_weights * np.sign(Dn) * np.abs(Dn) ** (p - 1))
        return np.asarray(g)

    def quadratic_matrix(self, values: np.ndarray | None = None, delta: float = 0.0) -> np.ndarray:
        """Matrix ``H`` with ``v^T H v`` the seminorm for p = 2.

        With ``values`` given, every pair weight is frozen at
        ``(|difference| + delta)^(p-2)``, a Kacanov-type linearization used as
        a descent metric for p != 2.
        """
        Wf = self.far_weights
        E = self.exterior_weights
        wn = self.near_weights
        if values is not None and self.p != 2:
            e = self.p - 2.0
            F = self.far_interp @ values
            Wf = Wf * (np.abs(F[:, None] - F[None, :]) + delta) ** e
            E = E * (np.abs(F) + delta) ** e
            wn = wn * (np.abs(self.near_op @ values) + delta) ** e
        L = 2.0 * (np.diag(Wf.sum(axis=1)) - Wf) + np.diag(E)
        P = self.far_interp.toarray()
        Dn = self.near_op
        H = P.T @ L @ P + (Dn.T @ sparse.diags(wn) @ Dn).toarray()
        return 0.5 * (H + H.T)


def assemble_kernel_matrix(
    grid: RadialGrid,
    params: Params,
    far_order: int = 4,
    near_order: int = 10,
    tail_order: int = 48,
) -> KernelMatrix:
    """Assemble the discrete Gagliardo quadrature for ``grid`` and ``params``."""
    if params.s >= 1:
        raise NotApplicableError("s = 1 is the local case; there is no kernel")
    if params.N != grid.N:
        raise ConfigurationError(f"grid dimension {grid.N} != params N {params.N}")
    N, s, p = grid.N, params.s, params.p
    sp = s * p
    M = grid.M
    e, h = grid.edges, grid.widths
    omega = sphere_area(N)

    # far field on a dedicated tensor Gauss rule
    tf, wf = _gauss01(far_order)
    X = (e[:-1, None] + h[:, None] * tf[None, :]).ravel()
    BW = (h[:, None] * wf[None, :]).ravel()
    cell = np.repeat(np.arange(M), far_order)
    l, r, wl, wr = _point_coeffs(grid, X, cell)
    n = X.size
    rows = np.arange(n)
    P = sparse.csr_matrix(
        (np.concatenate([wl, wr]), (np.concatenate([rows, rows]), np.concatenate([l, r]))), shape=(n, M)
    )
    far = np.abs(cell[:, None] - cell[None, :]) >= 2
    Xa, Xb = np.meshgrid(X, X, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        Wf = np.where(
            far,
            BW[:, None] * BW[None, :] * _radial_weight(Xa, Xb, N, sp) * np.abs(Xa - Xb) ** (-(1.0 + sp)),
            0.0,
        )
    del Xa, Xb

    # exterior (R, inf): all cells but the last on the far rule
    T = exterior_integral(X, grid.R, N, sp, tail_order)
    E = np.where(cell < M - 1, 2.0 * BW * omega * X ** (N - 1) * T, 0.0)

    near_rows, near_cols, near_vals, near_w = [], [], [], []
    K = np.zeros((M, M))
    cellmat = sparse.csr_matrix((np.ones(n), (cell, rows)), shape=(M, n))
    K += (cellmat @ sparse.csr_matrix(Wf) @ cellmat.T).toarray()
    row_id = 0

    # self cells: exact slope times iint |r - rho|^p W
    tj, wj = _jacobi01(near_order, p - 1.0 - sp)
    tv, wv = _gauss01(near_order)
    T_, V_ = np.meshgrid(tj, tv, indexing="ij")
    WT = np.outer(wj, wv)
    for c in range(1, M):
        a, hc = e[c], h[c]
        rho = a + hc * (1.0 - T_) * V_
        rr = rho + hc * T_
        S = 2.0 * hc ** (p + 1.0 - sp) * np.sum(WT * (1.0 - T_) * _radial_weight(rr, rho, N, sp))
        near_rows += [row_id, row_id]
        near_cols += [c - 1, c]
        near_vals += [-1.0 / hc, 1.0 / hc]
        near_w.append(S)
        K[c, c] += S / hc**p
        row_id += 1

    # adjacent cells: corner Duffy split, Jacobi weight t^(p - sp)
    tj, wj = _jacobi01(near_order, p - sp)
    T_, V_ = np.meshgrid(tj, tv, indexing="ij")
    WT = np.outer(wj, wv).ravel()
    Tf, Vf = T_.ravel(), V_.ravel()
    for c in range(M - 1):
        edge, h1, h2 = e[c + 1], h[c], h[c + 1]
        hbar = 0.5 * (h1 + h2)
        for xi_scale, zeta_scale in ((h1, h2 * Vf), (h1 * Vf, h2)):
            xi = Tf * xi_scale
            zeta = Tf * zeta_scale
            L = xi_scale + zeta_scale
            rr = edge - xi
            rho = edge + zeta
            w = 2.0 * WT * h1 * h2 * _radial_weight(rr, rho, N, sp) * L ** (-(1.0 + sp))
            ok = rr > 0
            rr, rho, w, Tk, Lk = rr[ok], rho[ok], w[ok], Tf[ok], L[ok]
            lx, rx, wlx, wrx = _point_coeffs(grid, rr, np.full(rr.size, c))
            ly, ry, wly, wry = _point_coeffs(grid, rho, np.full(rho.size, c + 1))
            k = rr.size
            ids = row_id + np.arange(k)
            near_rows += list(np.repeat(ids, 4))
            near_cols += list(np.stack([lx, rx, ly, ry], axis=1).ravel())
            near_vals += list((np.stack([wlx, wrx, -wly, -wry], axis=1) / Tk[:, None]).ravel())
            near_w += list(w)
            mass = np.sum(w * np.minimum(1.0 / Tk, Lk / hbar) ** p)
            K[c, c + 1] += 0.5 * mass
            K[c + 1, c] += 0.5 * mass
            row_id += k

    # last cell against the exterior: f = v[M-2] (R - r)/h exactly
    hl = h[M - 1]
    tu, wu = _jacobi01(near_order, p - sp)
    rr = grid.R - hl * tu
    T_last = exterior_integral(rr, grid.R, N, sp, tail_order) * (hl * tu) ** sp
    S_ext = 2.0 * hl ** (1.0 - sp) * np.sum(wu * omega * rr ** (N - 1) * T_last)
    near_rows.append(row_id)
    near_cols.append(M - 2)
    near_vals.append(1.0)
    near_w.append(S_ext)
    row_id += 1

    Dn = sparse.coo_matrix((near_vals, (near_rows, near_cols)), shape=(row_id, M)).tocsr()
    Dn.sum_duplicates()
    K = 0.5 * (K + K.T)
    return KernelMatrix(
        grid_hash=grid.digest,
        N=N,
        s=float(s),
        p=float(p),
        M=M,
        K=K,
        far_points=X,
        far_interp=P,
        far_weights=Wf,
        exterior_weights=E,
        near_op=Dn,
        near_weights=np.asarray(near_w, dtype=float),
        far_order=far_order,
        near_order=near_order,
    )


def seminorm_integral(f: RadialFunction, params: Params, kernel: KernelMatrix | None = None) -> float:
    """``[f]_{s,p}^p``; the gradient integral when ``s = 1``."""
    if params.s == 1:
        from .radial import gradient_integral

        return gradient_integral(f, params.p)
    if kernel is None:
        kernel = assemble_kernel_matrix(f.grid, params)
    kernel.check(f.grid, params.N, params.s, params.p)
    return kernel.integral(f.values)


def gagliardo_seminorm(f: RadialFunction, params: Params, kernel: KernelMatrix | None = None) -> float:
    if params.s == 1:
        return radial_gradient_norm(f, params.p)
    return seminorm_integral(f, params, kernel) ** (1.0 / params.p)


# -- Monte Carlo oracle -------------------------------------------------------


def _unit_vectors(rng: np.random.Generator, n: int, N: int) -> np.ndarray:
    if N == 1:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    g = rng.standard_normal((n, N))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def seminorm_oracle(
    f: RadialFunction,
    params: Params,
    samples: int,
    seed: int,
    scale: float | None = None,
    chunk: int = 1_000_000,
) -> tuple[float, float]:
    """Full-dimensional Monte Carlo estimate of ``[f]_{s,p}^p`` with standard error.

    Samples ``x`` uniformly in the ball ``B_R`` and the offset ``z = y - x``
    from a radial density ``~ |z|^(p-1-sp)`` below ``scale`` and
    ``~ |z|^(-1-sp)`` above it, which makes the estimator bounded near the
    diagonal and in the far tail.  Pairs with ``y`` outside ``B_R`` count
    twice (the mirrored pair has ``x`` outside, where no sample is drawn).
    """
    samples = int(samples)
    if samples < 10_000:
        raise ConfigurationError("need at least 1e4 samples for a meaningful error bar")
    if params.s >= 1:
        raise NotApplicableError("oracle is for s < 1")
    if not np.any(f.values):
        return 0.0, 0.0
    N, p, sp = f.grid.N, params.p, params.s * params.p
    R = f.grid.R
    rho0 = R / 4.0 if scale is None else float(scale)
    m1 = rho0 ** (p - sp) / (p - sp)
    m2 = rho0 ** (p - sp) / sp
    Z = m1 + m2
    omega = sphere_area(N)
    vol = ball_volume(N) * R**N
    rng = np.random.default_rng(seed)
    s1 = 0.0
    s2 = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        x = _unit_vectors(rng, n, N) * (R * rng.random(n) ** (1.0 / N))[:, None]
        inner = rng.random(n) < m1 / Z
        u = rng.random(n)
        u = np.where(u == 0.0, np.finfo(float).tiny, u)
        rho = np.where(inner, rho0 * u ** (1.0 / (p - sp)), rho0 * u ** (-1.0 / sp))
        y = x + _unit_vectors(rng, n, N) * rho[:, None]
        ry = np.linalg.norm(y, axis=1)
        fx = interpolate(f, np.linalg.norm(x, axis=1))
        fy = interpolate(f, ry)
        ratio = np.where(inner, rho ** (-p), rho0 ** (-p))
        est = vol * omega * Z * np.where(ry < R, 1.0, 2.0) * np.abs(fx - fy) ** p * ratio
        s1 += est.sum()
        s2 += np.dot(est, est)
        done += n
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0)
    return float(mean), float(np.sqrt(var / samples))


# -- persistent cache ----------------------------------------------------------


def cache_dir(path: str | os.PathLike | None = None) -> Path:
    if path is None:
        path = os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "mixedhenon"
    return Path(path)


def cache_path(grid: RadialGrid, params: Params, directory=None, far_order: int = 4, near_order: int = 10) -> Path:
    name = f"k_{grid.digest[:16]}_N{grid.N}_s{params.s!r}_p{params.p!r}_f{far_order}_n{near_order}.bin"
    return cache_dir(directory) / name


def save_kernel(kernel: KernelMatrix, path: str | os.PathLike) -> None:
    """Binary cache: header, upper triangle of ``K`` (LE float64), quadrature payload."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(
        CACHE_MAGIC, CACHE_VERSION, kernel.N, kernel.s, kernel.p, kernel.M, bytes.fromhex(kernel.grid_hash)
    )
    iu = np.triu_indices(kernel.M)
    buf = io.BytesIO()
    Dn = kernel.near_op.tocsr()
    np.savez(
        buf,
        far_points=kernel.far_points,
        far_weights=kernel.far_weights,
        exterior_weights=kernel.exterior_weights,
        far_data=kernel.far_interp.data,
        far_indices=kernel.far_interp.indices,
        far_indptr=kernel.far_interp.indptr,
        far_shape=np.array(kernel.far_interp.shape),
        near_data=Dn.data,
        near_indices=Dn.indices,
        near_indptr=Dn.indptr,
        near_shape=np.array(Dn.shape),
        near_weights=kernel.near_weights,
        orders=np.array([kernel.far_order, kernel.near_order, kernel.refinement]),
    )
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(kernel.K[iu], dtype="<f8").tobytes())
        fh.write(QUAD_MAGIC)
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def read_kernel_header(path: str | os.PathLike) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    magic, version, N, s, p, M, digest = _HEADER.unpack(raw)
    if magic != CACHE_MAGIC:
        raise StaleKernelError(f"{path}: not a kernel cache file")
    return {"version": version, "N": N, "s": s, "p": p, "M": M, "grid_hash": digest.hex()}


def load_kernel(path: str | os.PathLike) -> KernelMatrix:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, version, N, s, p, M, digest = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise StaleKernelError(f"{path}: unsupported cache file")
    off = _HEADER.size
    ntri = M * (M + 1) // 2
    tri = np.frombuffer(data, dtype="<f8", count=ntri, offset=off)
    off += 8 * ntri
    if data[off : off + 4] != QUAD_MAGIC:
        raise StaleKernelError(f"{path}: missing quadrature section")
    z = np.load(io.BytesIO(data[off + 4 :]))
    K = np.zeros((M, M))
    K[np.triu_indices(M)] = tri
    K = K + np.triu(K, 1).T
    P = sparse.csr_matrix((z["far_data"], z["far_indices"], z["far_indptr"]), shape=tuple(z["far_shape"]))
    Dn = sparse.csr_matrix((z["near_data"], z["near_indices"], z["near_indptr"]), shape=tuple(z["near_shape"]))
    fo, no, ref = (int(v) for v in z["orders"])
    return KernelMatrix(
        grid_hash=digest.hex(),
        N=N,
        s=s,
        p=p,
        M=M,
        K=K,
        far_points=z["far_points"],
        far_interp=P,
        far_weights=z["far_weights"],
        exterior_weights=z["exterior_weights"],
        near_op=Dn,
        near_weights=z["near_weights"],
        far_order=fo,
        near_order=no,
        refinement=ref,
    )


def load_or_assemble(grid: RadialGrid, params: Params, directory=None, use_cache: bool = True) -> KernelMatrix:
    """Kernel for ``(grid, N, s, p)``, read from the disk cache when present."""
    if not use_cache:
        return assemble_kernel_matrix(grid, params)
    path = cache_path(grid, params, directory)
    if path.exists():
        km = load_kernel(path)
        km.check(grid, params.N, params.s, params.p)
        return km
    km = assemble_kernel_matrix(grid, params)
    save_kernel(km, path)
    return km
