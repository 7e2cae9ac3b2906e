"""Simplified gPb contour pipeline.

Multiscale half-disc oriented gradients over brightness, color, and texture
channels give a local boundary probability (mPb); optional spectral
globalization adds the eigenvector cue (gPb); watershed flooding closes the
contours, a greedy region merge assigns hierarchical boundary strength
(ucm-lite), and the thresholded, thinned map is vectorized into polylines.

Everything is deterministic: fixed k-means seed, integer half-disc counts
(FFT results are rounded), and ARPACK started from a constant vector.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import signal
from scipy.sparse import coo_matrix, csgraph
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import GridMismatchError, ParameterError, SpectralConvergenceError
from .raster import GeoTransform, LabGrid, LabelMap, resize_plane

_TEXTON_SEED = 20210521
_TEXTON_SAMPLE = 8192
_AFFINITY_RADIUS = 5
_AFFINITY_RHO = 0.1


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class CueParams:
    orientations: int = 8
    radii: tuple = (3, 6, 10)
    bins: int = 25
    k_tex: int = 32
    channel_weights: tuple | None = None  # (4, len(radii)); None = uniform
    global_weights: tuple = (1.0, 1.0)  # (mPb, sPb)
    eigenvectors: int = 16
    spectral_cap: int = 250

    def __post_init__(self):
        if self.orientations < 1:
            raise ParameterError("orientations must be >= 1")
        radii = tuple(int(r) for r in self.radii)
        if not radii or any(r < 2 for r in radii):
            raise ParameterError("disc radii must be >= 2")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ParameterError("disc radii must be strictly increasing")
        object.__setattr__(self, "radii", radii)
        if self.bins < 2:
            raise ParameterError("need at least 2 histogram bins")
        if self.k_tex < 1:
            raise ParameterError("k_tex must be >= 1")
        if self.eigenvectors < 1:
            raise ParameterError("eigenvectors must be >= 1")
        if self.channel_weights is not None:
            w = np.asarray(self.channel_weights, dtype=np.float64)
            if w.shape != (4, len(radii)):
                raise ParameterError(
                    f"channel_weights must be shaped (4, {len(radii)})")
            if (w < 0).any() or w.sum() == 0:
                raise ParameterError("channel weights must be >= 0, not all zero")
            object.__setattr__(self, "channel_weights",
                               tuple(tuple(row) for row in w))
        gw = tuple(float(x) for x in self.global_weights)
        if len(gw) != 2 or any(x < 0 for x in gw) or sum(gw) == 0:
            raise ParameterError("global_weights must be two nonnegative "
                                 "values, not both zero")
        object.__setattr__(self, "global_weights", gw)

    def weight_matrix(self) -> np.ndarray:
        if self.channel_weights is None:
            w = np.ones((4, len(self.radii)), dtype=np.float64)
        else:
            w = np.asarray(self.channel_weights, dtype=np.float64)
        return w / w.sum()


@dataclass(frozen=True)
class BoundaryProbabilityMap:
    values: np.ndarray  # (h, w) float64 in [0, 1]
    transform: GeoTransform
    kind: str  # mPb | sPb | gPb | ucm

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class BinaryBoundaryMap:
    mask: np.ndarray  # (h, w) bool
    transform: GeoTransform


@dataclass(frozen=True)
class TextonMap:
    ids: np.ndarray  # (h, w) int32, dense in [0, k)
    k: int


# ---------------------------------------------------------------------------
# texton filter bank and clustering


def _gauss(x: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-0.5 * (x / sigma) ** 2)


def _oriented_filter(theta: float, odd: bool, sigma_across: float = 1.0,
                     elongation: float = 3.0) -> np.ndarray:
    sigma_along = sigma_across * elongation
    half = int(math.ceil(3.0 * sigma_along))
    ys, xs = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    # u runs along the filter orientation, v across it
    u = xs * math.cos(theta) + ys * math.sin(theta)
    v = -xs * math.sin(theta) + ys * math.cos(theta)
    envelope = _gauss(u, sigma_along)
    if odd:
        core = -v / sigma_across**2 * _gauss(v, sigma_across)
    else:
        core = (v**2 / sigma_across**4 - 1.0 / sigma_across**2) * _gauss(v, sigma_across)
    f = envelope * core
    f -= f.mean()
    norm = np.sqrt((f * f).sum())
    return f / norm if norm > 0 else f


def _center_surround(sigma: float = 1.0, ratio: float = 2.0) -> np.ndarray:
    half = int(math.ceil(3.0 * sigma * ratio))
    ys, xs = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    r2 = xs**2 + ys**2
    inner = np.exp(-0.5 * r2 / sigma**2)
    outer = np.exp(-0.5 * r2 / (sigma * ratio) ** 2)
    f = inner / inner.sum() - outer / outer.sum()
    return f / np.sqrt((f * f).sum())


def texton_filter_bank(orientations: int) -> list[np.ndarray]:
    """Even and odd oriented filters per orientation plus a center-surround."""
    bank = []
    for k in range(orientations):
        theta = math.pi * k / orientations
        bank.append(_oriented_filter(theta, odd=False))
        bank.append(_oriented_filter(theta, odd=True))
    bank.append(_center_surround())
    return bank


def _kmeans(points: np.ndarray, k: int, rng: np.random.Generator,
            iters: int = 30) -> np.ndarray:
    n = len(points)
    k = min(k, n)
    centers = [points[int(rng.integers(n))]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0:
            idx = 0
        else:
            target = rng.random() * total
            idx = min(int(np.searchsorted(np.cumsum(d2), target, side="right")),
                      n - 1)
        centers.append(points[idx])
        d2 = np.minimum(d2, ((points - centers[-1]) ** 2).sum(axis=1))
    c = np.asarray(centers, dtype=np.float64)
    for _ in range(iters):
        dist = ((points[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
        assign = dist.argmin(axis=1)
        new_c = c.copy()
        for j in range(k):
            members = assign == j
            if members.any():
                new_c[j] = points[members].mean(axis=0)
        if np.array_equal(new_c, c):
            break
        c = new_c
    return c


def _assign_nearest(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # |x-c|^2 = |x|^2 - 2 x.c + |c|^2 and |x|^2 is constant per row for argmin
    scores = points @ centers.T
    scores -= 0.5 * (centers * centers).sum(axis=1)[None, :]
    return np.asarray(scores.argmax(axis=1), dtype=np.int32)


def compute_textons(lab: LabGrid, params: CueParams | None = None) -> TextonMap:
    """Cluster filter-bank responses of the L channel into texton ids.

    Responses are clustered by k-means (fixed seed) on a pixel subsample,
    then every pixel is assigned its nearest center. Ids are re-densified,
    so images with fewer effective textures report a smaller k.
    """
    params = params or CueParams()
    luminance = np.asarray(lab.values[:, :, 0], dtype=np.float64)
    bank = texton_filter_bank(params.orientations)
    support = max(f.shape[0] for f in bank)
    h, w = luminance.shape
    if min(h, w) < support:
        raise ParameterError(
            f"image {w}x{h} is smaller than the {support}x{support} texture "
            f"filter support")
    # reflect padding keeps a constant image constant at the borders, and
    # rounding flushes FFT noise so featureless areas share one response
    pad = support // 2
    padded = np.pad(luminance, pad, mode="reflect")
    responses = np.stack(
        [signal.fftconvolve(padded, f, mode="same")[pad:-pad, pad:-pad]
         for f in bank], axis=-1)
    responses = np.round(responses, 6)
    flat = responses.reshape(-1, responses.shape[-1])

    rng = np.random.default_rng(_TEXTON_SEED)
    if len(flat) > _TEXTON_SAMPLE:
        idx = np.sort(rng.choice(len(flat), _TEXTON_SAMPLE, replace=False))
        sample = flat[idx]
    else:
        sample = flat
    centers = _kmeans(sample, params.k_tex, rng)
    assign = _assign_nearest(flat, centers)
    used, dense = np.unique(assign, return_inverse=True)
    return TextonMap(ids=dense.reshape(h, w).astype(np.int32), k=len(used))


# ---------------------------------------------------------------------------
# half-disc oriented gradients


def _quantize(channel: np.ndarray, bins: int) -> np.ndarray:
    v = np.asarray(channel, dtype=np.float64)
    lo = float(v.min())
    hi = float(v.max())
    if hi <= lo:
        return np.zeros(v.shape, dtype=np.int32)
    q = np.floor((v - lo) / (hi - lo) * bins).astype(np.int32)
    return np.minimum(q, bins - 1)


def _half_discs(radius: int, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Disc halves on either side of the diameter along theta.

    Cells on the diameter itself belong to neither half, which keeps the
    split exactly symmetric under rotation.
    """
    ys, xs = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    inside = xs * xs + ys * ys <= radius * radius
    side = math.cos(theta) * ys - math.sin(theta) * xs
    left = (inside & (side > 1e-9)).astype(np.float64)
    right = (inside & (side < -1e-9)).astype(np.float64)
    return left, right


class _CountEngine:
    """FFT cross-correlation of bin indicators with half-disc masks.

    The image is zero-padded by the largest radius, so border pixels see
    clipped discs. True counts are integers, so the float64 FFT results are
    rounded; this also makes 90-degree rotation equivariance exact.
    """

    def __init__(self, shape: tuple[int, int], max_radius: int):
        self.h, self.w = shape
        self.ph = sfft.next_fast_len(self.h + 2 * max_radius)
        self.pw = sfft.next_fast_len(self.w + 2 * max_radius)

    def forward(self, indicators: np.ndarray) -> np.ndarray:
        return sfft.rfft2(indicators, s=(self.ph, self.pw))

    def mask_spectrum(self, mask: np.ndarray) -> np.ndarray:
        radius = mask.shape[0] // 2
        padded = np.zeros((self.ph, self.pw), dtype=np.float64)
        for dy, dx in zip(*np.nonzero(mask)):
            padded[(dy - radius) % self.ph, (dx - radius) % self.pw] = 1.0
        return np.conj(sfft.rfft2(padded))

    def counts(self, spec: np.ndarray, mask_spec: np.ndarray) -> np.ndarray:
        out = sfft.irfft2(spec * mask_spec, s=(self.ph, self.pw))
        return np.rint(out[..., :self.h, :self.w])


def _chi2_from_counts(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Chi-squared/2 of per-side normalized histograms; 0 where a side is empty."""
    lt = left.sum(axis=0)
    rt = right.sum(axis=0)
    ok = (lt > 0) & (rt > 0)
    ln = left / np.where(lt > 0, lt, 1.0)
    rn = right / np.where(rt > 0, rt, 1.0)
    denom = ln + rn
    terms = (ln - rn) ** 2 / np.where(denom > 0, denom, 1.0)
    grad = 0.5 * terms.sum(axis=0)
    return np.clip(np.where(ok, grad, 0.0), 0.0, 1.0)


def _bin_indicators(ids: np.ndarray) -> np.ndarray:
    # absent bins contribute zero to the chi-squared sum, so only the bins
    # actually present need correlating
    present = np.unique(ids)
    return np.stack([ids == b for b in present]).astype(np.float64)


def _chi2_gradients(ids: np.ndarray, radii, orientations: int) -> np.ndarray:
    """Per (scale, orientation) half-disc gradient maps in [0, 1]."""
    h, w = ids.shape
    engine = _CountEngine((h, w), max(radii))
    spec = engine.forward(_bin_indicators(ids))

    out = np.empty((len(radii), orientations, h, w), dtype=np.float64)
    for si, radius in enumerate(radii):
        for oi in range(orientations):
            theta = math.pi * oi / orientations
            left_mask, right_mask = _half_discs(radius, theta)
            left = engine.counts(spec, engine.mask_spectrum(left_mask))
            right = engine.counts(spec, engine.mask_spectrum(right_mask))
            out[si, oi] = _chi2_from_counts(left, right)
    return out


def oriented_gradient(channel, radius: int, orientation: float,
                      bins: int = 25) -> np.ndarray:
    """Chi-squared distance between the two half-disc histograms at each pixel.

    Float channels are quantized into `bins` levels between their min and
    max; integer channels and TextonMaps are treated as pre-binned ids.
    Border pixels use clipped discs; a side with no samples scores 0.
    """
    if radius < 2:
        raise ParameterError(f"disc radius must be >= 2, got {radius}")
    if bins < 2:
        raise ParameterError("need at least 2 histogram bins")
    if isinstance(channel, TextonMap):
        ids = channel.ids
    else:
        arr = np.asarray(channel)
        if np.issubdtype(arr.dtype, np.integer):
            ids = arr.astype(np.int32)
        else:
            ids = _quantize(arr, bins)

    # any orientation reduces to an equivalent diameter direction in [0, pi)
    theta = float(orientation) % math.pi

    engine = _CountEngine(ids.shape, radius)
    spec = engine.forward(_bin_indicators(ids))
    left_mask, right_mask = _half_discs(radius, theta)
    left = engine.counts(spec, engine.mask_spectrum(left_mask))
    right = engine.counts(spec, engine.mask_spectrum(right_mask))
    return _chi2_from_counts(left, right)


def multiscale_pb(lab: LabGrid, params: CueParams | None = None) -> BoundaryProbabilityMap:
    """mPb: weighted multiscale cue combination, maximized over orientations."""
    params = params or CueParams()
    weights = params.weight_matrix()

    textons = compute_textons(lab, params)
    channels = [
        _quantize(lab.values[:, :, 0], params.bins),
        _quantize(lab.values[:, :, 1], params.bins),
        _quantize(lab.values[:, :, 2], params.bins),
        textons.ids,
    ]

    h, w = lab.values.shape[:2]
    combined = np.zeros((params.orientations, h, w), dtype=np.float64)
    for ci, ids in enumerate(channels):
        grads = _chi2_gradients(ids, params.radii, params.orientations)
        for si in range(len(params.radii)):
            combined += weights[ci, si] * grads[si]
    mpb = combined.max(axis=0)
    return BoundaryProbabilityMap(values=np.clip(mpb, 0.0, 1.0),
                                  transform=lab.transform, kind="mPb")


# ---------------------------------------------------------------------------
# spectral globalization


def _bresenham_offsets(dy: int, dx: int) -> list[tuple[int, int]]:
    points = []
    r, c = 0, 0
    nr = abs(dy)
    nc = abs(dx)
    sr = 1 if dy >= 0 else -1
    sc = 1 if dx >= 0 else -1
    err = nc - nr
    while True:
        points.append((r, c))
        if r == dy and c == dx:
            return points
        e2 = 2 * err
        if e2 > -nr:
            err -= nr
            c += sc
        if e2 < nc:
            err += nc
            r += sr


def _intervening_contour_affinity(values: np.ndarray, radius: int, rho: float):
    """Sparse symmetric affinity between pixels within `radius`:
    W(i,j) = exp(-max pb along the straight line i->j / rho)."""
    h, w = values.shape
    n = h * w
    idx = np.arange(n).reshape(h, w)
    rows_all, cols_all, vals_all = [], [], []
    for dy in range(0, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx <= 0:
                continue  # half plane; symmetrized below
            if dy * dy + dx * dx > radius * radius:
                continue
            r0, r1 = 0, h - dy
            c0, c1 = max(0, -dx), w - max(0, dx)
            if r1 <= r0 or c1 <= c0:
                continue
            maxline = None
            for ry, cx in _bresenham_offsets(dy, dx):
                block = values[r0 + ry:r1 + ry, c0 + cx:c1 + cx]
                maxline = block if maxline is None else np.maximum(maxline, block)
            src = idx[r0:r1, c0:c1]
            rows_all.append(src.ravel())
            cols_all.append((src + dy * w + dx).ravel())
            vals_all.append(np.exp(-maxline / rho).ravel())
    upper = coo_matrix(
        (np.concatenate(vals_all),
         (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(n, n))
    return (upper + upper.T).tocsr()


def _spectral_gradient_filters(orientations: int) -> list[np.ndarray]:
    return [_oriented_filter(math.pi * k / orientations, odd=True,
                             sigma_across=1.0, elongation=2.0)
            for k in range(orientations)]


def spectral_globalize(mpb: BoundaryProbabilityMap,
                       params: CueParams | None = None) -> BoundaryProbabilityMap:
    """gPb: blend mPb with the spectral (eigenvector gradient) cue.

    The affinity graph lives on a downscaled copy capped at spectral_cap on
    the longer side; sPb is normalized to peak at 1 and upsampled back before
    blending. The blend is rescaled so the output peaks at 1; an all-zero map
    stays zero.
    """
    params = params or CueParams()
    alpha_m, alpha_s = params.global_weights
    h, w = mpb.values.shape

    def rescaled(values):
        peak = float(values.max())
        return values / peak if peak > 0 else values

    if float(mpb.values.max()) <= 0.0 or alpha_s == 0.0:
        # nothing for the spectral cue to work with / cue disabled
        return BoundaryProbabilityMap(values=rescaled(alpha_m * mpb.values),
                                      transform=mpb.transform, kind="gPb")

    cap = params.spectral_cap
    if max(h, w) > cap:
        scale = cap / max(h, w)
        sw = max(2, int(round(w * scale)))
        sh = max(2, int(round(h * scale)))
        small = np.asarray(resize_plane(mpb.values.astype(np.float32), sw, sh,
                                        method="box"), dtype=np.float64)
    else:
        sh, sw = h, w
        small = mpb.values

    affinity = _intervening_contour_affinity(small, _AFFINITY_RADIUS, _AFFINITY_RHO)
    node_degree = np.asarray(affinity.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(np.maximum(node_degree, 1e-12))
    n = affinity.shape[0]
    sym = affinity.multiply(inv_sqrt[:, None]).multiply(inv_sqrt[None, :])

    k = min(params.eigenvectors + 1, n - 2)
    v0 = np.full(n, 1.0 / math.sqrt(n))
    try:
        evals, evecs = eigsh(sym.tocsc(), k=k, which="LA", v0=v0)
    except ArpackNoConvergence as err:
        converged = 0 if err.eigenvalues is None else len(err.eigenvalues)
        raise SpectralConvergenceError(
            f"eigensolver converged only {converged} of {k} eigenvectors",
            iterations=converged) from err

    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]

    filters = _spectral_gradient_filters(params.orientations)
    spb_small = np.zeros((params.orientations, sh, sw), dtype=np.float64)
    for lam, vec in zip(evals[1:], evecs.T[1:]):
        lam_lap = 1.0 - lam
        if lam_lap < 1e-8:
            continue  # duplicate of the trivial eigenvector
        image = vec.reshape(sh, sw) / math.sqrt(lam_lap)
        for oi, f in enumerate(filters):
            spb_small[oi] += np.abs(signal.fftconvolve(image, f, mode="same"))
    spb = rescaled(spb_small.max(axis=0))

    if (sh, sw) != (h, w):
        spb = np.asarray(resize_plane(spb.astype(np.float32), w, h,
                                      method="bilinear"), dtype=np.float64)
        spb = np.clip(spb, 0.0, 1.0)

    blended = rescaled(alpha_m * mpb.values + alpha_s * spb)
    return BoundaryProbabilityMap(values=np.clip(blended, 0.0, 1.0),
                                  transform=mpb.transform, kind="gPb")


# ---------------------------------------------------------------------------
# contour closure (watershed) and hierarchical strength (ucm-lite)


def _flat_zones(values: np.ndarray) -> tuple[int, np.ndarray]:
    h, w = values.shape
    n = h * w
    idx = np.arange(n).reshape(h, w)
    right = values[:, :-1] == values[:, 1:]
    down = values[:-1, :] == values[1:, :]
    rows = np.concatenate([idx[:, :-1][right], idx[:-1, :][down]])
    cols = np.concatenate([idx[:, 1:][right], idx[1:, :][down]])
    graph = coo_matrix((np.ones(len(rows), dtype=bool), (rows, cols)),
                       shape=(n, n))
    count, zones = csgraph.connected_components(graph, directed=False)
    return count, zones.reshape(h, w)


def close_contours(pb: BoundaryProbabilityMap) -> LabelMap:
    """Watershed-by-flooding from the regional minima of the pb surface.

    Returns a total partition; every region is 4-connected and the region
    count equals the number of regional minima plateaus. Labels are dense,
    ordered by the first (row-major) pixel of each minima plateau.
    """
    values = np.asarray(pb.values, dtype=np.float64)
    h, w = values.shape
    n_zones, zones = _flat_zones(values)

    has_lower = np.zeros((h, w), dtype=bool)
    has_lower[:, :-1] |= values[:, 1:] < values[:, :-1]
    has_lower[:, 1:] |= values[:, :-1] < values[:, 1:]
    has_lower[:-1, :] |= values[1:, :] < values[:-1, :]
    has_lower[1:, :] |= values[:-1, :] < values[1:, :]
    zone_blocked = np.zeros(n_zones, dtype=bool)
    zone_blocked[zones[has_lower]] = True

    minima = np.nonzero(~zone_blocked)[0]
    region_of_zone = np.full(n_zones, -1, dtype=np.int64)
    region_of_zone[minima] = np.arange(len(minima))
    labels = region_of_zone[zones]

    counter = itertools.count()
    heap = []
    seed_rows, seed_cols = np.nonzero(labels >= 0)
    for r, c in zip(seed_rows.tolist(), seed_cols.tolist()):
        heapq.heappush(heap, (values[r, c], next(counter), r, c))

    while heap:
        _, _, r, c = heapq.heappop(heap)
        lab = labels[r, c]
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= rr < h and 0 <= cc < w and labels[rr, cc] < 0:
                labels[rr, cc] = lab
                heapq.heappush(heap, (values[rr, cc], next(counter), rr, cc))

    return LabelMap(labels=labels.astype(np.int32), transform=pb.transform)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root


def boundary_strength(regions: LabelMap, pb: BoundaryProbabilityMap) -> BoundaryProbabilityMap:
    """ucm-lite: greedy merge of adjacent regions by mean boundary pb.

    Regions merge in order of increasing mean pb along their shared
    boundary; the level sequence is made monotone by a running max. Each
    boundary pixel ends up valued at the level where its pair of regions
    stopped being separated, so thresholding the output at any t reproduces
    the partition of regions that survive level t.
    """
    labels = regions.labels
    values = pb.values
    if labels.shape != values.shape:
        raise GridMismatchError(
            f"label grid {labels.shape} does not match pb grid {values.shape}")

    n = int(labels.max()) + 1 if labels.size else 0
    h, w = labels.shape

    # (sum of straddling pixel-pair means, pair count) per adjacent pair
    edge_stats: dict[tuple[int, int], list] = {}

    def add_pairs(a_lab, b_lab, a_val, b_val):
        means = 0.5 * (a_val + b_val)
        for la, lb, mv in zip(a_lab.tolist(), b_lab.tolist(), means.tolist()):
            key = (la, lb) if la < lb else (lb, la)
            stat = edge_stats.get(key)
            if stat is None:
                edge_stats[key] = [mv, 1]
            else:
                stat[0] += mv
                stat[1] += 1

    right = labels[:, :-1] != labels[:, 1:]
    down = labels[:-1, :] != labels[1:, :]
    add_pairs(labels[:, :-1][right], labels[:, 1:][right],
              values[:, :-1][right], values[:, 1:][right])
    add_pairs(labels[:-1, :][down], labels[1:, :][down],
              values[:-1, :][down], values[1:, :][down])

    ucm = np.zeros((h, w), dtype=np.float64)
    if not edge_stats:
        return BoundaryProbabilityMap(values=ucm, transform=pb.transform,
                                      kind="ucm")

    # cluster adjacency: root -> {other root: [sum, count, version, pairs]}
    uf = _UnionFind(n)
    nbr: dict[int, dict[int, list]] = {}
    heap = []
    for (a, b), (total, count) in sorted(edge_stats.items()):
        entry = [total, count, 0, [(a, b)]]
        nbr.setdefault(a, {})[b] = entry
        nbr.setdefault(b, {})[a] = entry
        heapq.heappush(heap, (total / count, a, b, 0))

    join_level: dict[tuple[int, int], float] = {}
    level = 0.0
    while heap:
        _, a, b, version = heapq.heappop(heap)
        ra, rb = uf.find(a), uf.find(b)
        if ra == rb:
            continue
        entry = nbr.get(ra, {}).get(rb)
        if entry is None or entry[2] != version:
            continue  # superseded by a later accumulation
        level = max(level, entry[0] / entry[1])
        for pair in entry[3]:
            join_level[pair] = level

        # merge the smaller adjacency set into the larger
        if len(nbr.get(ra, ())) < len(nbr.get(rb, ())):
            ra, rb = rb, ra
        uf.parent[rb] = ra
        small = nbr.pop(rb, {})
        big = nbr.setdefault(ra, {})
        big.pop(rb, None)
        small.pop(ra, None)
        for other, o_entry in small.items():
            nbr[other].pop(rb, None)
            mine = big.get(other)
            if mine is None:
                o_entry[2] += 1
                big[other] = o_entry
                nbr[other][ra] = o_entry
                heapq.heappush(heap, (o_entry[0] / o_entry[1], ra, other,
                                      o_entry[2]))
            else:
                mine[0] += o_entry[0]
                mine[1] += o_entry[1]
                mine[2] += 1
                mine[3].extend(o_entry[3])
                heapq.heappush(heap, (mine[0] / mine[1], ra, other, mine[2]))

    # one-sided marking: the top/left pixel of each straddling pair carries
    # the pair's join level, keeping the raster boundary one pixel wide
    def mark(a_lab, b_lab, rows, cols):
        for la, lb, r, c in zip(a_lab.tolist(), b_lab.tolist(),
                                rows.tolist(), cols.tolist()):
            key = (la, lb) if la < lb else (lb, la)
            lvl = join_level[key]
            if lvl > ucm[r, c]:
                ucm[r, c] = lvl

    rr, cc = np.nonzero(right)
    mark(labels[:, :-1][right], labels[:, 1:][right], rr, cc)
    rr, cc = np.nonzero(down)
    mark(labels[:-1, :][down], labels[1:, :][down], rr, cc)

    return BoundaryProbabilityMap(values=np.clip(ucm, 0.0, 1.0),
                                  transform=pb.transform, kind="ucm")


# ---------------------------------------------------------------------------
# binary map and vectorization


def _neighbor_rings(padded: np.ndarray):
    p2 = padded[:-2, 1:-1]
    p3 = padded[:-2, 2:]
    p4 = padded[1:-1, 2:]
    p5 = padded[2:, 2:]
    p6 = padded[2:, 1:-1]
    p7 = padded[2:, :-2]
    p8 = padded[1:-1, :-2]
    p9 = padded[:-2, :-2]
    return [p2, p3, p4, p5, p6, p7, p8, p9]


def _zhang_suen(mask: np.ndarray) -> np.ndarray:
    m = mask.copy()
    while True:
        changed = False
        for step in (0, 1):
            padded = np.pad(m, 1, constant_values=False)
            ring = _neighbor_rings(padded)
            b = sum(x.astype(np.int8) for x in ring)
            a = sum(((~ring[i]) & ring[(i + 1) % 8]).astype(np.int8)
                    for i in range(8))
            p2, _, p4, _, p6, _, p8, _ = ring
            if step == 0:
                cond = ~(p2 & p4 & p6) & ~(p4 & p6 & p8)
            else:
                cond = ~(p2 & p4 & p8) & ~(p2 & p6 & p8)
            delete = m & (b >= 2) & (b <= 6) & (a == 1) & cond
            if delete.any():
                m &= ~delete
                changed = True
        if not changed:
            return m


_RING_OFFS = ((-1, 0), (-1, 1), (0, 1), (1, 1),
              (1, 0), (1, -1), (0, -1), (-1, -1))
# ring adjacency: consecutive positions touch, and orthogonal positions
# (even indices) also touch each other across a background diagonal
_RING_EDGES = tuple((i, (i + 1) % 8) for i in range(8)) + (
    (0, 2), (2, 4), (4, 6), (6, 0))


def _is_simple_point(m: np.ndarray, r: int, c: int) -> bool:
    """True when deleting (r, c) keeps the foreground 8-topology intact."""
    h, w = m.shape
    fg = []
    for dr, dc in _RING_OFFS:
        rr, cc = r + dr, c + dc
        fg.append(bool(m[rr, cc]) if 0 <= rr < h and 0 <= cc < w else False)
    if not any(fg):
        return False
    if fg[0] and fg[2] and fg[4] and fg[6]:
        return False  # interior pixel, deletion would open a hole
    parent = list(range(8))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in _RING_EDGES:
        if fg[a] and fg[b]:
            parent[find(a)] = find(b)
    roots = {find(i) for i in range(8) if fg[i]}
    return len(roots) == 1


def _break_square_blocks(m: np.ndarray) -> np.ndarray:
    # thinning can leave 2x2 blocks at junction pivots; delete simple points
    # in raster order until none remain
    while True:
        blocks = m[:-1, :-1] & m[:-1, 1:] & m[1:, :-1] & m[1:, 1:]
        if not blocks.any():
            return m
        removed = False
        for r, c in zip(*(x.tolist() for x in np.nonzero(blocks))):
            for rr, cc in ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)):
                if m[rr, cc] and _is_simple_point(m, rr, cc):
                    m[rr, cc] = False
                    removed = True
                    break
            if removed:
                break
        if removed:
            continue
        # no topology-safe deletion left: the block invariant outranks the
        # rare pathological junction, so drop the first pixel that at least
        # keeps the background 4-connected
        r, c = next(zip(*(x.tolist() for x in np.nonzero(blocks))))
        for rr, cc in ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)):
            fg_orth = sum(
                bool(m[rr + dr, cc + dc])
                for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1))
                if 0 <= rr + dr < m.shape[0] and 0 <= cc + dc < m.shape[1])
            if fg_orth < 4:
                m[rr, cc] = False
                break
        else:
            m[r, c] = False


def binary_boundary_map(strength: BoundaryProbabilityMap,
                        threshold: float = 0.3) -> BinaryBoundaryMap:
    """Threshold a ucm map and thin the result to one-pixel-wide curves."""
    if strength.kind != "ucm":
        raise ParameterError(
            f"binary map expects a ucm strength map, got kind={strength.kind!r}")
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError(f"threshold must be in [0, 1], got {threshold}")
    mask = (strength.values >= threshold) & (strength.values > 0)
    mask = _zhang_suen(mask)
    mask = _break_square_blocks(mask)
    return BinaryBoundaryMap(mask=mask, transform=strength.transform)


_TRACE_ORDER = ((-1, 0), (0, -1), (0, 1), (1, 0),
                (-1, -1), (-1, 1), (1, -1), (1, 1))


def _adjacency_map(mask: np.ndarray):
    """Minimal 8-adjacency: diagonal links only where no orthogonal detour
    exists, so staircase runs trace as single chains."""
    h, w = mask.shape
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    rows, cols = np.nonzero(mask)
    for r, c in zip(rows.tolist(), cols.tolist()):
        links = []
        for dr, dc in _TRACE_ORDER:
            rr, cc = r + dr, c + dc
            if not (0 <= rr < h and 0 <= cc < w and mask[rr, cc]):
                continue
            if dr != 0 and dc != 0 and (mask[r, cc] or mask[rr, c]):
                continue  # an orthogonal two-step path covers this link
            links.append((rr, cc))
        adj[(r, c)] = links
    return adj


def vectorize_boundaries(binary: BinaryBoundaryMap) -> list:
    """Trace the thinned boundary mask into world-coordinate polylines.

    Chains run between endpoints and junctions; a junction pixel center is
    the shared terminal vertex of every chain that meets it. Isolated closed
    loops are emitted with the first vertex repeated at the end.
    """
    from .geometry import Polyline

    mask = binary.mask
    transform = binary.transform
    adj = _adjacency_map(mask)
    degree = {p: len(links) for p, links in adj.items()}

    def to_world(chain):
        cols = np.array([c for _, c in chain], dtype=np.float64)
        rows = np.array([r for r, _ in chain], dtype=np.float64)
        xs, ys = transform.pixel_to_world(cols, rows)
        return np.column_stack([xs, ys])

    visited_links: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    visited_pixels: set[tuple[int, int]] = set()
    chains: list[list[tuple[int, int]]] = []

    def walk(start, first):
        chain = [start, first]
        visited_links.add((start, first))
        visited_links.add((first, start))
        prev, cur = start, first
        while degree[cur] == 2 and cur != start:
            a, b = adj[cur]
            nxt = b if a == prev else a
            chain.append(nxt)
            visited_links.add((cur, nxt))
            visited_links.add((nxt, cur))
            prev, cur = cur, nxt
        return chain

    for node in sorted(p for p, d in degree.items() if d != 2):
        for first in adj[node]:
            if (node, first) in visited_links:
                continue
            chain = walk(node, first)
            visited_pixels.update(chain)
            chains.append(chain)
        visited_pixels.add(node)  # covers isolated single pixels too

    # leftover pixels belong to closed loops of degree-2 pixels
    for start in sorted(adj):
        if start in visited_pixels or degree[start] != 2:
            continue
        chain = walk(start, adj[start][0])
        if chain[-1] != start:
            chain.append(start)
        visited_pixels.update(chain)
        chains.append(chain)

    return [Polyline(to_world(chain)) for chain in chains if len(chain) >= 2]
