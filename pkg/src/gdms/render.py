"""Geometric realizations, attractor clouds, box counting, and PGM output.

A linear system is realized by one phase set per letter (intervals on a line
or disks in the plane) and one similarity per admissible letter pair, with
ratio depending only on the initial letter.  Realizations are laid out
automatically so that the images of distinct edges have disjoint interiors
(the open set condition); infeasible ratio data fails loudly with the
violated inequality.

Attractor approximations are deterministic: each admissible word of a given
depth contributes the image of its terminal phase-set center under the
composed similarity.  Composing first-return loops of an induced system
instead yields approximations of the radial limit set of the corresponding
normal subgroup; the rendered induced cloud approximates the core limit set
of the induced system, which carries the full dimension but visually
understates the radial set (a countable family of Lipschitz images of it is
not drawn).

Box counting of the clouds provides the numerical cross-check that measured
dimensions track the pressure-equation roots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapExceededError, ConfigError, GdmsError, LayoutInfeasibleError
from .kernel import InducedSystem
from .pressure import LinearGdmsSpec

DEFAULT_POINT_CAP = 2_000_000


# ---------------------------------------------------------------------------
# Realizations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometricRealization:
    """Phase sets and edge similarities of a realized linear system.

    ``phase`` holds per-letter intervals (a, b) in dimension 1 or disks
    (cx, cy, r) in dimension 2.  ``slot_offsets[v]`` positions the image of
    the w-th successor inside the phase set of v; every edge map is
    x -> c(v) * x + t with a translation depending on the slot.
    """

    spec: LinearGdmsSpec
    dimension: int
    phase: tuple
    slot_offsets: tuple

    def successors(self, v: int) -> list[int]:
        return [w for w in range(2 * self.spec.d) if w != (v ^ 1)]

    def edge_map(self, v: int, w: int):
        """(scale, offset) of the similarity taking phase set w into phase set v."""
        if w == (v ^ 1):
            raise ConfigError("backtracking pair has no edge map")
        slot = self.successors(v).index(w)
        c = self.spec.ratios[v]
        if self.dimension == 1:
            a_w = self.phase[w][0]
            a_v = self.phase[v][0]
            # maps [a_w, a_w + |X_w|] onto a subinterval at the slot offset
            return c, a_v + self.slot_offsets[v][slot] - c * a_w
        cx_w, cy_w, _ = self.phase[w]
        cx_v, cy_v, _ = self.phase[v]
        ox, oy = self.slot_offsets[v][slot]
        return c, np.array([cx_v + ox - c * cx_w, cy_v + oy - c * cy_w])

    def center(self, v: int) -> np.ndarray:
        if self.dimension == 1:
            a, b = self.phase[v]
            return np.array([0.5 * (a + b)])
        cx, cy, _ = self.phase[v]
        return np.array([cx, cy])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.dimension == 1:
            los = [p[0] for p in self.phase]
            his = [p[1] for p in self.phase]
            return np.array([min(los)]), np.array([max(his)])
        los = [(cx - r, cy - r) for cx, cy, r in self.phase]
        his = [(cx + r, cy + r) for cx, cy, r in self.phase]
        return np.array(los).min(axis=0), np.array(his).max(axis=0)

    def osc_margin(self) -> float:
        """Smallest gap between sibling first-level images (0 = touching)."""
        worst = math.inf
        for v in range(2 * self.spec.d):
            c = self.spec.ratios[v]
            if self.dimension == 1:
                length = self.phase[v][1] - self.phase[v][0]
                spans = sorted(
                    (off, off + c * (self.phase[w][1] - self.phase[w][0]))
                    for off, w in zip(self.slot_offsets[v], self.successors(v))
                )
                worst = min(worst, spans[0][0] - 0.0)
                worst = min(worst, length - spans[-1][1])
                for (_, b0), (a1, _) in zip(spans, spans[1:]):
                    worst = min(worst, a1 - b0)
            else:
                r_v = self.phase[v][2]
                subs = [
                    (np.array(off), c * self.phase[w][2])
                    for off, w in zip(self.slot_offsets[v], self.successors(v))
                ]
                for i in range(len(subs)):
                    oi, ri = subs[i]
                    worst = min(worst, r_v - (float(np.linalg.norm(oi)) + ri))
                    for j in range(i + 1, len(subs)):
                        oj, rj = subs[j]
                        worst = min(
                            worst, float(np.linalg.norm(oi - oj)) - (ri + rj)
                        )
        return worst


def auto_layout(spec: LinearGdmsSpec, dimension: int) -> GeometricRealization:
    """Place phase sets and sub-copies so the open set condition holds.

    Dimension 1 uses unit intervals on a line, sub-intervals packed left to
    right with equal slack; feasibility requires (2d-1) * c(v) <= 1.
    Dimension 2 uses unit disks on a circle with sub-disks on an inner
    angular ring; feasibility requires the ring chord to fit the sub-disk
    diameter.  Layouts honor explicit phase placements from
    ``spec.geometry`` when provided.
    """
    if dimension not in (1, 2):
        raise ConfigError("dimension must be 1 or 2")
    n = 2 * spec.d
    k = n - 1  # sub-copies per phase set
    geometry = spec.geometry or {}
    if dimension == 1:
        intervals = geometry.get("intervals")
        if intervals is not None:
            if len(intervals) != n:
                raise ConfigError(f"geometry.intervals must list {n} intervals")
            phase = tuple((float(a), float(b)) for a, b in intervals)
            for (a, b) in phase:
                if not b > a:
                    raise ConfigError("phase intervals must have positive length")
            for i in range(n):
                for j in range(i + 1, n):
                    if phase[i][0] < phase[j][1] and phase[j][0] < phase[i][1]:
                        raise ConfigError("phase intervals must be disjoint")
        else:
            phase = tuple((i * 1.25, i * 1.25 + 1.0) for i in range(n))
        offsets = []
        for v in range(n):
            c = spec.ratios[v]
            length = phase[v][1] - phase[v][0]
            widths = [c * (phase[w][1] - phase[w][0]) for w in range(n) if w != (v ^ 1)]
            need = sum(widths)
            if need > length:
                raise LayoutInfeasibleError(
                    f"sum of sub-copy lengths {need:.6g} exceeds |X_v| = {length:.6g} "
                    f"for letter code {v} ((2d-1) * c(v) > 1: the dimension root "
                    f"would exceed the ambient dimension 1)"
                )
            slack = (length - need) / (k + 1)
            offs = []
            pos = slack
            for wdt in widths:
                offs.append(pos)
                pos += wdt + slack
            offsets.append(tuple(offs))
        real = GeometricRealization(spec, 1, phase, tuple(offsets))
    else:
        disks = geometry.get("disks")
        if disks is not None:
            if len(disks) != n:
                raise ConfigError(f"geometry.disks must list {n} disks")
            phase = tuple((float(x), float(y), float(r)) for x, y, r in disks)
        else:
            big_r = 1.1 / math.sin(math.pi / n)
            phase = tuple(
                (
                    big_r * math.cos(2 * math.pi * i / n),
                    big_r * math.sin(2 * math.pi * i / n),
                    1.0,
                )
                for i in range(n)
            )
        for i in range(n):
            for j in range(i + 1, n):
                dx = phase[i][0] - phase[j][0]
                dy = phase[i][1] - phase[j][1]
                if math.hypot(dx, dy) < phase[i][2] + phase[j][2]:
                    raise ConfigError("phase disks must be disjoint")
        offsets = []
        for v in range(n):
            c = spec.ratios[v]
            r_v = phase[v][2]
            sub_r = [c * phase[w][2] for w in range(n) if w != (v ^ 1)]
            r_max = max(sub_r)
            ring = 0.97 * (r_v - r_max)
            if ring <= 0 or 2 * ring * math.sin(math.pi / k) < 2 * r_max:
                ring = r_v - r_max  # tangent ring as a last resort
            if ring <= 0 or 2 * ring * math.sin(math.pi / k) < 2 * r_max:
                raise LayoutInfeasibleError(
                    f"{k} sub-disks of radius {r_max:.6g} do not fit on a ring "
                    f"inside a radius-{r_v:.6g} disk for letter code {v} "
                    f"(ring chord 2*{ring:.6g}*sin(pi/{k}) < 2*{r_max:.6g})"
                )
            offs = tuple(
                (
                    ring * math.cos(2 * math.pi * slot / k),
                    ring * math.sin(2 * math.pi * slot / k),
                )
                for slot in range(k)
            )
            offsets.append(offs)
        real = GeometricRealization(spec, 2, phase, tuple(offsets))
    margin = real.osc_margin()
    if margin < -1e-12:
        raise LayoutInfeasibleError(
            f"open set condition violated by {-margin:.3g} after layout"
        )
    return real


# ---------------------------------------------------------------------------
# Attractor point clouds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointCloud:
    """Finite-depth attractor approximation with one point per word.

    ``provenance`` is "full" for all admissible words or "induced" for loop
    compositions; points always lie inside the union of phase sets, and a
    depth-(n+1) point lies in the depth-n cell of its word prefix.
    """

    points: np.ndarray
    words: tuple
    depth: int
    provenance: str
    lo: np.ndarray
    hi: np.ndarray

    def __len__(self):
        return len(self.points)


def attractor_points(
    real: GeometricRealization,
    depth: int,
    subset: str | InducedSystem = "full",
    point_cap: int = DEFAULT_POINT_CAP,
) -> PointCloud:
    """One representative point per admissible word (or loop composition).

    Representative = image of the terminal phase-set center under the
    composed similarity; enumeration order is depth-first in letter order,
    so clouds are reproducible.
    """
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    spec = real.spec
    n = 2 * spec.d
    dim = real.dimension
    lo, hi = real.bounds()

    if isinstance(subset, str):
        if subset != "full":
            raise ConfigError(f"unknown subset {subset!r}")
        expected = n * (n - 1) ** (depth - 1)
        if expected > point_cap:
            raise CapExceededError(
                f"full cloud at depth {depth} has {expected} points > cap {point_cap}"
            )
        # frontier of composed maps: (last letter, scale, offset)
        last = np.arange(n)
        scale = np.ones(n)
        offset = np.zeros((n, dim))
        words = [(v,) for v in range(n)]
        for _ in range(depth - 1):
            new_last = []
            new_scale = []
            new_offset = []
            new_words = []
            for i in range(len(last)):
                v = int(last[i])
                for w in real.successors(v):
                    c, t = real.edge_map(v, w)
                    new_last.append(w)
                    new_scale.append(scale[i] * c)
                    new_offset.append(scale[i] * np.atleast_1d(t) + offset[i])
                    new_words.append(words[i] + (w,))
            last = np.array(new_last)
            scale = np.array(new_scale)
            offset = np.array(new_offset)
            words = new_words
        centers = np.stack([real.center(int(v)) for v in last])
        pts = scale[:, None] * centers + offset
        return PointCloud(pts, tuple(words), depth, "full", lo, hi)

    sys: InducedSystem = subset
    if len(sys) == 0:
        raise GdmsError("induced system has no loops")
    loop_maps = []
    for codes in sys.loops:
        c_total = 1.0
        t_total = np.zeros(dim)
        for a, b in zip(codes, codes[1:]):
            c, t = real.edge_map(a, b)
            t_total = t_total + c_total * np.atleast_1d(t)
            c_total *= c
        loop_maps.append((codes, c_total, t_total))
    last: list[int] = []
    scale = []
    offset = []
    words = []
    for codes, c_l, t_l in loop_maps:
        last.append(codes[-1])
        scale.append(c_l)
        offset.append(t_l)
        words.append(codes)
    for _ in range(depth - 1):
        nxt_last, nxt_scale, nxt_offset, nxt_words = [], [], [], []
        total = 0
        for i in range(len(last)):
            v = last[i]
            for codes, c_l, t_l in loop_maps:
                w0 = codes[0]
                if w0 == (v ^ 1):
                    continue
                c_j, t_j = real.edge_map(v, w0)
                # junction map then the loop's internal map
                c_new = scale[i] * c_j * c_l
                t_new = offset[i] + scale[i] * np.atleast_1d(t_j) + scale[i] * c_j * t_l
                nxt_last.append(codes[-1])
                nxt_scale.append(c_new)
                nxt_offset.append(t_new)
                nxt_words.append(words[i] + codes)
                total += 1
                if total + len(last) > point_cap:
                    raise CapExceededError(
                        f"induced cloud exceeds point cap {point_cap}"
                    )
        last, scale, offset, words = nxt_last, nxt_scale, nxt_offset, nxt_words
    centers = np.stack([real.center(int(v)) for v in last])
    pts = np.array(scale)[:, None] * centers + np.array(offset)
    return PointCloud(pts, tuple(tuple(w) for w in words), depth, "induced", lo, hi)


# ---------------------------------------------------------------------------
# Box counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxCountResult:
    scales: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    residual: float


def box_counting(cloud: PointCloud, scales: Sequence[float]) -> BoxCountResult:
    """Least-squares slope of log N(eps) against log(1/eps).

    Requires at least three scales spanning two octaves and three distinct
    counts; the slope estimates the box dimension, which matches the
    pressure-equation root for these self-similar clouds once the cell size
    at the cloud's depth is below the smallest scale.
    """
    scales = sorted(float(e) for e in scales)
    if len(scales) < 3:
        raise ConfigError("need at least 3 scales")
    if scales[-1] / scales[0] < 4.0:
        raise ConfigError("scales must span at least two octaves")
    counts = []
    for eps in scales:
        boxes = np.unique(np.floor(cloud.points / eps), axis=0)
        counts.append(int(len(boxes)))
    if len(set(counts)) < 3:
        raise GdmsError("degenerate regression: fewer than 3 distinct box counts")
    x = np.log(1.0 / np.array(scales))
    y = np.log(np.array(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return BoxCountResult(tuple(scales), tuple(counts), float(slope), residual)


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------

def render_image(cloud: PointCloud, resolution: int = 512) -> np.ndarray:
    """Deterministic binary raster of a cloud on its realization's bounds.

    Dimension-1 clouds render as a strip.  Returns a uint8 array (0
    background, 255 where a point lands); serialize with ``write_pgm``.
    """
    if resolution < 1:
        raise ConfigError("resolution must be >= 1")
    dim = cloud.points.shape[1] if len(cloud) else len(cloud.lo)
    lo, hi = cloud.lo, cloud.hi
    span = np.maximum(hi - lo, 1e-12)
    if dim == 1:
        height = max(resolution // 16, 1)
        img = np.zeros((height, resolution), dtype=np.uint8)
        if len(cloud):
            cols = ((cloud.points[:, 0] - lo[0]) / span[0] * (resolution - 1))
            cols = np.clip(np.rint(cols).astype(int), 0, resolution - 1)
            img[:, cols] = 255
        return img
    img = np.zeros((resolution, resolution), dtype=np.uint8)
    if len(cloud):
        cols = (cloud.points[:, 0] - lo[0]) / span[0] * (resolution - 1)
        rows = (hi[1] - cloud.points[:, 1]) / span[1] * (resolution - 1)
        cols = np.clip(np.rint(cols).astype(int), 0, resolution - 1)
        rows = np.clip(np.rint(rows).astype(int), 0, resolution - 1)
        img[rows, cols] = 255
    return img


def write_pgm(img: np.ndarray, path) -> None:
    """Binary (P5) PGM with maxval 255."""
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.astype(np.uint8).tobytes())


def pgm_bytes(img: np.ndarray) -> bytes:
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.astype(np.uint8).tobytes()
