"""Getting data into point-cloud form.

Covers CSV point-cloud I/O, graph shortest-path distances and their
stress-majorization embedding, image/flow patch preprocessing into DCT
coordinates on the unit sphere, sliding-window embedding of time series, and
synthetic cloud generators.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .density import PointCloud
from .errors import DataError, InvalidInputError, ParseError

FLOAT_FMT = "%.17g"  # exact round trip for doubles


# ---------------------------------------------------------------------------
# Point-cloud CSV

def read_point_cloud(path: str) -> PointCloud:
    """One point per row, comma-separated decimal coordinates."""
    rows: list[list[float]] = []
    arity = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if arity is None:
                arity = len(fields)
            elif len(fields) != arity:
                raise ParseError(
                    f"expected {arity} fields, found {len(fields)}", line=lineno
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    if not rows:
        raise ParseError(f"{path}: no points found")
    return PointCloud(np.array(rows))


def write_point_cloud(cloud: PointCloud, path: str) -> None:
    with open(path, "w") as fh:
        for row in cloud.points:
            fh.write(",".join(FLOAT_FMT % x for x in row) + "\n")


# ---------------------------------------------------------------------------
# Graphs

@dataclass(frozen=True)
class UnweightedGraph:
    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for a, b in self.edges:
            if a == b:
                raise DataError(f"self-loop at vertex {a}")
            if not (0 <= a < self.vertex_count and 0 <= b < self.vertex_count):
                raise DataError(f"edge ({a}, {b}) out of range")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise DataError(f"duplicate edge ({a}, {b})")
            seen.add(key)


def read_graph(path: str) -> UnweightedGraph:
    """First line "V E", then E lines "i j" with 0-based vertex indices."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty graph file")
    try:
        v, e = (int(x) for x in lines[0].split())
    except ValueError:
        raise ParseError("header must be 'V E'", line=1) from None
    edges = []
    for lineno, line in enumerate(lines[1:1 + e], start=2):
        try:
            a, b = (int(x) for x in line.split())
        except ValueError:
            raise ParseError("edge line must be 'i j'", line=lineno) from None
        edges.append((a, b))
    if len(edges) != e:
        raise ParseError(f"header promises {e} edges, found {len(edges)}")
    return UnweightedGraph(vertex_count=v, edges=tuple(edges))


def shortest_path_distances(graph: UnweightedGraph) -> np.ndarray:
    """All-pairs hop counts via BFS; errors on disconnected graphs."""
    n = graph.vertex_count
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in graph.edges:
        adj[a].append(b)
        adj[b].append(a)

    dist = np.full((n, n), -1, dtype=float)
    for src in range(n):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if dist[src, w] < 0:
                    dist[src, w] = dist[src, u] + 1
                    queue.append(w)
    if (dist < 0).any():
        sizes = _component_sizes(adj)
        raise DataError(f"graph is disconnected; component sizes {sorted(sizes)}")
    return dist


def _component_sizes(adj: list[list[int]]) -> list[int]:
    n = len(adj)
    seen = [False] * n
    sizes = []
    for start in range(n):
        if seen[start]:
            continue
        queue, count = deque([start]), 0
        seen[start] = True
        while queue:
            u = queue.popleft()
            count += 1
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        sizes.append(count)
    return sizes


# ---------------------------------------------------------------------------
# Stress-majorization MDS

@dataclass(frozen=True)
class MdsResult:
    cloud: PointCloud
    stress: float
    stress_history: tuple[float, ...]


def _raw_stress(points: np.ndarray, delta: np.ndarray) -> float:
    diff = points[:, None, :] - points[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return float(np.triu((d - delta) ** 2, k=1).sum())


def mds_embed(distances: np.ndarray, target_dim: int, rng: np.random.Generator,
              max_iter: int = 1000, tol: float = 1e-12) -> MdsResult:
    """Embed a distance matrix by iterated Guttman transforms.

    Starts from a seeded uniform configuration scaled to the distance range
    and stops when the relative stress decrease falls below tol.  Raw stress
    is non-increasing across iterations.
    """
    delta = np.asarray(distances, dtype=float)
    m = delta.shape[0]
    if delta.ndim != 2 or delta.shape != (m, m):
        raise InvalidInputError("distance matrix must be square")
    if not np.allclose(delta, delta.T):
        raise InvalidInputError("distance matrix must be symmetric")
    if (delta < 0).any() or not np.allclose(np.diag(delta), 0):
        raise InvalidInputError("distances must be nonnegative with zero diagonal")
    if target_dim < 1:
        raise InvalidInputError("target_dim must be >= 1")

    scale = delta.max() if delta.max() > 0 else 1.0
    points = rng.uniform(-scale / 2, scale / 2, size=(m, target_dim))
    history = [_raw_stress(points, delta)]

    for _ in range(max_iter):
        diff = points[:, None, :] - points[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d > 0, delta / np.where(d > 0, d, 1.0), 0.0)
        b = -ratio
        np.fill_diagonal(b, 0.0)
        np.fill_diagonal(b, -b.sum(axis=1))
        points = b @ points / m
        history.append(_raw_stress(points, delta))
        prev, cur = history[-2], history[-1]
        if prev - cur <= tol * max(prev, 1e-300):
            break
    return MdsResult(cloud=PointCloud(points), stress=history[-1],
                     stress_history=tuple(history))


# ---------------------------------------------------------------------------
# Patch preprocessing

def _grid_laplacian(side: int) -> np.ndarray:
    """Graph Laplacian of the side x side grid under 4-adjacency.

    Pixels are indexed column-major to match patch vectorization; the D-inner
    product of patches is <x, y>_D = x^T L y.
    """
    def idx(r: int, c: int) -> int:
        return c * side + r

    m = side * side
    lap = np.zeros((m, m))
    for r in range(side):
        for c in range(side):
            i = idx(r, c)
            for rr, cc in ((r + 1, c), (r, c + 1)):
                if rr < side and cc < side:
                    j = idx(rr, cc)
                    lap[i, i] += 1
                    lap[j, j] += 1
                    lap[i, j] -= 1
                    lap[j, i] -= 1
    return lap


# Mode orderings (row frequency, column frequency), skipping the constant mode.
# Side 3 follows the linear/linear/quadratic/quadratic labeling of the
# patch-statistics literature; side 5 is row-major so the vertical linear
# gradient lands at index 5 (1-based).
_MODE_ORDER = {
    3: [(0, 1), (1, 0), (0, 2), (2, 0), (1, 1), (1, 2), (2, 1), (2, 2)],
    5: [(p, q) for p in range(5) for q in range(5) if (p, q) != (0, 0)],
}


def dct_basis(side: int) -> np.ndarray:
    """Non-constant DCT modes of the side x side grid, D-orthonormalized.

    Returns (side^2 - 1, side^2); rows are basis vectors with contrast norm
    one.  e_1 is the horizontal linear gradient; the vertical linear gradient
    is e_2 for side 3 and e_5 for side 5.
    """
    if side not in _MODE_ORDER:
        raise InvalidInputError(f"unsupported patch side {side}; use 3 or 5")
    lap = _grid_laplacian(side)
    basis = []
    i = np.arange(side)
    for p, q in _MODE_ORDER[side]:
        rows = np.cos(math.pi * p * (2 * i + 1) / (2 * side))
        cols = np.cos(math.pi * q * (2 * i + 1) / (2 * side))
        patch = np.outer(rows, cols)          # [r, c]
        vec = patch.flatten(order="F")        # column-major pixel indexing
        vec = vec / math.sqrt(vec @ lap @ vec)
        basis.append(vec)
    return np.array(basis)


@dataclass(frozen=True)
class PatchConfig:
    side: int = 3
    modality: str = "optical"  # optical | range | flow
    contrast_quantile: float = 0.2  # keep the top fraction by contrast
    sample_size: int = 10_000

    def __post_init__(self):
        if self.modality not in ("optical", "range", "flow"):
            raise InvalidInputError(f"unknown modality {self.modality!r}")
        if not 0 < self.contrast_quantile <= 1:
            raise InvalidInputError("contrast_quantile must be in (0, 1]")
        if self.side < 2:
            raise InvalidInputError("side must be >= 2")


def _sample_patches(rasters: list[np.ndarray], side: int, count: int,
                    rng: np.random.Generator) -> np.ndarray:
    """(count, side, side, #rasters-per-item) patch stack from random positions."""
    usable = [np.asarray(r, dtype=float) for r in rasters]
    for k, r in enumerate(usable):
        if r.ndim != 2 or r.shape[0] < side or r.shape[1] < side:
            raise DataError(f"raster {k} is too small for {side}x{side} patches")
    picks = rng.integers(0, len(usable), size=count)
    out = np.empty((count, side, side))
    for t, k in enumerate(picks):
        r = usable[k]
        i = rng.integers(0, r.shape[0] - side + 1)
        j = rng.integers(0, r.shape[1] - side + 1)
        out[t] = r[i:i + side, j:j + side]
    return out


def preprocess_patches(rasters, config: PatchConfig,
                       rng: np.random.Generator) -> PointCloud:
    """Random patches -> high-contrast, normalized points on the unit sphere.

    Optical and range patches are log-transformed; flow patches arrive as
    (u, v) raster pairs and are handled componentwise with a joint contrast
    norm.  Output coordinates are D-inner products against the D-orthonormal
    DCT basis, so every point has Euclidean norm one.
    """
    side = config.side
    lap = _grid_laplacian(side)
    basis = dct_basis(side)
    m = side * side

    if config.modality == "flow":
        u_rasters = [np.asarray(u, dtype=float) for u, _ in rasters]
        v_rasters = [np.asarray(v, dtype=float) for _, v in rasters]
        picks = rng.integers(0, len(u_rasters), size=config.sample_size)
        u_pat = np.empty((config.sample_size, m))
        v_pat = np.empty((config.sample_size, m))
        for t, k in enumerate(picks):
            ur, vr = u_rasters[k], v_rasters[k]
            if ur.shape != vr.shape:
                raise DataError(f"flow raster pair {k} has mismatched shapes")
            if ur.shape[0] < side or ur.shape[1] < side:
                raise DataError(f"raster {k} is too small for {side}x{side} patches")
            i = rng.integers(0, ur.shape[0] - side + 1)
            j = rng.integers(0, ur.shape[1] - side + 1)
            u_pat[t] = ur[i:i + side, j:j + side].flatten(order="F")
            v_pat[t] = vr[i:i + side, j:j + side].flatten(order="F")
        # Joint contrast: sum over adjacent pixels of ||(u_i,v_i) - (u_j,v_j)||^2
        contrast = np.sqrt(np.einsum("ti,ij,tj->t", u_pat, lap, u_pat)
                           + np.einsum("ti,ij,tj->t", v_pat, lap, v_pat))
        keep = _top_quantile(contrast, config.contrast_quantile)
        u_pat, v_pat, contrast = u_pat[keep], v_pat[keep], contrast[keep]
        u_pat = (u_pat - u_pat.mean(axis=1, keepdims=True)) / contrast[:, None]
        v_pat = (v_pat - v_pat.mean(axis=1, keepdims=True)) / contrast[:, None]
        coords_u = u_pat @ lap @ basis.T
        coords_v = v_pat @ lap @ basis.T
        return PointCloud(np.hstack([coords_u, coords_v]))

    patches = _sample_patches(list(rasters), side, config.sample_size, rng)
    flat = np.array([p.flatten(order="F") for p in patches])
    if config.modality in ("optical", "range"):
        if (flat <= 0).any():
            bad = int(np.flatnonzero((flat <= 0).any(axis=1))[0])
            raise DataError(
                f"nonpositive values under log transform (sampled patch {bad})"
            )
        flat = np.log(flat)
    contrast = np.sqrt(np.einsum("ti,ij,tj->t", flat, lap, flat))
    keep = _top_quantile(contrast, config.contrast_quantile)
    flat, contrast = flat[keep], contrast[keep]
    flat = (flat - flat.mean(axis=1, keepdims=True)) / contrast[:, None]
    coords = flat @ lap @ basis.T
    return PointCloud(coords)


def _top_quantile(contrast: np.ndarray, fraction: float) -> np.ndarray:
    positive = contrast > 0  # constant patches are excluded outright
    if not positive.any():
        raise DataError("every sampled patch has zero contrast")
    threshold = np.quantile(contrast[positive], 1.0 - fraction) if fraction < 1 else 0.0
    return np.flatnonzero(positive & (contrast >= threshold))


# ---------------------------------------------------------------------------
# Time series

def sliding_window(series: np.ndarray, window: int) -> PointCloud:
    """Stack ``window`` consecutive columns of a (variables, time) matrix.

    T time points yield T - window + 1 points in R^(variables * window).
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 2:
        raise InvalidInputError("series must be a (variables, time) matrix")
    if not np.all(np.isfinite(series)):
        raise InvalidInputError("series contains non-finite entries")
    g, t = series.shape
    if window < 1 or window > t:
        raise InvalidInputError(f"window must be in [1, {t}]")
    points = np.array([
        series[:, s:s + window].flatten(order="F") for s in range(t - window + 1)
    ])
    return PointCloud(points)


def read_series(path: str) -> np.ndarray:
    """CSV with one row per variable, columns as time points."""
    cloud = read_point_cloud(path)
    return cloud.points


def read_raster(path: str) -> np.ndarray:
    return read_point_cloud(path).points


# ---------------------------------------------------------------------------
# Synthetic clouds

def synth_gaussian_mixture(centers, scales, weights, count: int,
                           rng: np.random.Generator) -> PointCloud:
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k = centers.shape[0]
    scales = np.broadcast_to(np.asarray(scales, dtype=float), (k,))
    weights = np.asarray(weights, dtype=float) if weights is not None else np.ones(k)
    if weights.shape != (k,) or (weights < 0).any() or weights.sum() <= 0:
        raise InvalidInputError("weights must be nonnegative with positive sum")
    probs = weights / weights.sum()
    picks = rng.choice(k, size=count, p=probs)
    noise = rng.standard_normal((count, centers.shape[1]))
    return PointCloud(centers[picks] + scales[picks][:, None] * noise)


def synth_noisy_circle(radius: float, noise: float, count: int,
                       rng: np.random.Generator) -> PointCloud:
    if radius <= 0 or noise < 0:
        raise InvalidInputError("need radius > 0 and noise >= 0")
    angles = rng.uniform(0.0, 2.0 * math.pi, size=count)
    pts = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if noise > 0:
        pts += noise * rng.standard_normal((count, 2))
    return PointCloud(pts)


def synth_bumpy_circle(bumps: int, radius: float, count: int,
                       rng: np.random.Generator,
                       angular_spread: float = 0.45,
                       radial_noise: float = 0.0) -> PointCloud:
    """Circle-supported cloud with ``bumps`` equally spaced angular modes."""
    if bumps < 1 or radius <= 0 or angular_spread <= 0:
        raise InvalidInputError("need bumps >= 1, radius > 0, angular_spread > 0")
    centers = 2.0 * math.pi * np.arange(bumps) / bumps
    picks = rng.integers(0, bumps, size=count)
    angles = centers[picks] + angular_spread * rng.standard_normal(count)
    radii = radius + (radial_noise * rng.standard_normal(count) if radial_noise else 0.0)
    return PointCloud(np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1))
