"""SLIC superpixel clustering and superpixel quality measures.

The clustering works in a joint intensity-space metric on Unit8 images:

    d^2 = (dI)^2 + (ds / step)^2 * compactness^2

with step = sqrt(width * height / M). Cluster centers start on a regular
grid, are updated Lloyd-style, and the final labeling is made 4-connected by
merging orphan fragments into the adjacent superpixel with the closest mean
intensity (ties broken toward the lowest label id).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage import measure

from .errors import DimensionMismatchError, ParameterError, ValidationError
from .image import GrayImage, SegMask, ValueSpace

_CONVERGENCE_PX = 0.25


@dataclass(frozen=True)
class SuperpixelLabeling:
    """A total partition of an image into K 4-connected superpixels."""

    labels: np.ndarray
    count: int
    iterations_run: int

    def __post_init__(self):
        lab = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int32))
        if lab.ndim != 2 or lab.size == 0:
            raise ValidationError("labels must be a non-empty 2-D array")
        if lab.min() < 0 or lab.max() >= self.count:
            raise ValidationError("label ids must lie in [0, count)")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def _initial_centers(w: int, h: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    step = np.sqrt((w * h) / m)
    nx = max(1, int(w / step))
    ny = max(1, int(h / step))
    # floor() keeps nx * ny <= m because (w/step) * (h/step) == m exactly.
    cx = (np.arange(nx) + 0.5) * (w / nx) - 0.5
    cy = (np.arange(ny) + 0.5) * (h / ny) - 0.5
    gx, gy = np.meshgrid(cx, cy)
    return gx.ravel(), gy.ravel()


def _enforce_connectivity(labels: np.ndarray, img: np.ndarray) -> np.ndarray:
    """Merge disconnected fragments so every label forms one 4-connected region.

    For each label the largest fragment is kept as the anchor; every other
    fragment is absorbed by the adjacent region whose current mean intensity
    is closest to the fragment's own mean (lowest label id on ties). Region
    means track the connected region as it grows.
    """
    comp = measure.label(labels, connectivity=1, background=-1) - 1
    ncomp = int(comp.max()) + 1
    if ncomp == 1:
        return labels
    flat_comp = comp.ravel()
    flat_lab = labels.ravel()
    flat_img = img.ravel().astype(np.float64)

    comp_area = np.bincount(flat_comp, minlength=ncomp)
    comp_sum = np.bincount(flat_comp, weights=flat_img, minlength=ncomp)
    first_pix = np.full(ncomp, flat_comp.size, dtype=np.int64)
    np.minimum.at(first_pix, flat_comp, np.arange(flat_comp.size))
    comp_label = flat_lab[first_pix].astype(np.int64)

    # Anchor of each label: its largest fragment (earliest component on ties;
    # component ids follow scan order, so this is deterministic).
    order = np.lexsort((np.arange(ncomp), -comp_area))
    anchored = set()
    is_anchor = np.zeros(ncomp, dtype=bool)
    for c in order:
        lab = comp_label[c]
        if lab not in anchored:
            anchored.add(lab)
            is_anchor[c] = True

    # Component adjacency from 4-neighbor pixel pairs.
    pairs = set()
    for a, b in ((comp[:, :-1], comp[:, 1:]), (comp[:-1, :], comp[1:, :])):
        diff = a != b
        pairs.update(zip(a[diff].tolist(), b[diff].tolist()))
    adjacency: dict[int, set[int]] = {c: set() for c in range(ncomp)}
    for a, b in pairs:
        adjacency[a].add(b)
        adjacency[b].add(a)

    # Growing-region bookkeeping, seeded from the anchors only.
    nlab = int(labels.max()) + 1
    region_sum = np.zeros(nlab)
    region_area = np.zeros(nlab, dtype=np.int64)
    for c in range(ncomp):
        if is_anchor[c]:
            region_sum[comp_label[c]] += comp_sum[c]
            region_area[comp_label[c]] += comp_area[c]

    comp_current = comp_label.copy()  # current label of each component
    merged = is_anchor.copy()
    pending = [c for c in range(ncomp) if not is_anchor[c]]
    while pending:
        deferred = []
        progressed = False
        for c in pending:
            candidates = [n for n in sorted(adjacency[c]) if merged[n]]
            if not candidates:
                deferred.append(c)
                continue
            own_mean = comp_sum[c] / comp_area[c]
            best_lab = None
            best_gap = np.inf
            for n in candidates:
                lab = int(comp_current[n])
                gap = abs(region_sum[lab] / region_area[lab] - own_mean)
                if gap < best_gap or (gap == best_gap and lab < best_lab):
                    best_gap = gap
                    best_lab = lab
            comp_current[c] = best_lab
            region_sum[best_lab] += comp_sum[c]
            region_area[best_lab] += comp_area[c]
            merged[c] = True
            progressed = True
        if not progressed:
            raise ValidationError("orphan merge did not converge")  # unreachable
        pending = deferred

    return comp_current[comp].astype(np.int64)


def _relabel_compact(labels: np.ndarray) -> tuple[np.ndarray, int]:
    used = np.unique(labels)
    remap = np.zeros(int(used.max()) + 1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    return remap[labels], int(used.size)


def slic(
    img: GrayImage,
    m: int,
    compactness: float = 10.0,
    max_iters: int = 10,
) -> SuperpixelLabeling:
    """Cluster a Unit8 image into at most `m` superpixels.

    Iterates until `max_iters` or until no center moves by >= 0.25 px;
    iterations_run counts the update rounds that still moved a center.
    """
    if img.value_space is not ValueSpace.UNIT8:
        raise ParameterError("slic expects a Unit8 image")
    h, w = img.pixels.shape
    if m < 1 or m > w * h:
        raise ParameterError(f"superpixel count must be in [1, {w * h}], got {m}")
    if compactness <= 0:
        raise ParameterError("compactness must be positive")

    pix = img.pixels.astype(np.float32)
    step = np.sqrt((w * h) / m)
    cx, cy = _initial_centers(w, h, m)
    k = cx.size
    ci = pix[
        np.clip(np.rint(cy).astype(np.int64), 0, h - 1),
        np.clip(np.rint(cx).astype(np.int64), 0, w - 1),
    ].astype(np.float64)
    cx = cx.astype(np.float64)
    cy = cy.astype(np.float64)

    xs = np.arange(w, dtype=np.float32)
    ys = np.arange(h, dtype=np.float32)
    labels = np.zeros((h, w), dtype=np.int64)
    spatial_w = np.float32((compactness * compactness) / (step * step))
    half = step

    iterations_run = 0
    for _ in range(max_iters):
        best = np.full((h, w), np.inf, dtype=np.float32)
        for kk in range(k):
            x0 = max(0, int(np.floor(cx[kk] - half)))
            x1 = min(w, int(np.ceil(cx[kk] + half)) + 1)
            y0 = max(0, int(np.floor(cy[kk] - half)))
            y1 = min(h, int(np.ceil(cy[kk] + half)) + 1)
            if x0 >= x1 or y0 >= y1:
                continue
            dx = xs[x0:x1] - np.float32(cx[kk])
            dy = ys[y0:y1] - np.float32(cy[kk])
            di = pix[y0:y1, x0:x1] - np.float32(ci[kk])
            d2 = di * di + (dy[:, None] * dy[:, None] + dx[None, :] * dx[None, :]) * spatial_w
            win_best = best[y0:y1, x0:x1]
            better = d2 < win_best
            win_best[better] = d2[better]
            labels[y0:y1, x0:x1][better] = kk

        flat = labels.ravel()
        counts = np.bincount(flat, minlength=k).astype(np.float64)
        sum_x = np.bincount(flat, weights=np.broadcast_to(xs.astype(np.float64), (h, w)).ravel(), minlength=k)
        sum_y = np.bincount(flat, weights=np.repeat(ys.astype(np.float64), w), minlength=k)
        sum_i = np.bincount(flat, weights=pix.astype(np.float64).ravel(), minlength=k)
        nonempty = counts > 0
        new_cx = np.where(nonempty, sum_x / np.maximum(counts, 1), cx)
        new_cy = np.where(nonempty, sum_y / np.maximum(counts, 1), cy)
        ci = np.where(nonempty, sum_i / np.maximum(counts, 1), ci)
        movement = np.sqrt((new_cx - cx) ** 2 + (new_cy - cy) ** 2).max() if k else 0.0
        cx, cy = new_cx, new_cy
        if movement < _CONVERGENCE_PX:
            break
        iterations_run += 1

    labels = _enforce_connectivity(labels, img.pixels)
    labels, count = _relabel_compact(labels)
    return SuperpixelLabeling(labels=labels, count=count, iterations_run=iterations_run)


def under_segmentation_error(labeling: SuperpixelLabeling, gt: SegMask) -> float:
    """Leak area of superpixels across ground-truth region borders.

    Computes (sum over gt regions g of the full area of every superpixel
    overlapping g, minus N) / N; zero exactly when every superpixel lies
    inside a single ground-truth region.
    """
    if labeling.labels.shape != gt.labels.shape:
        raise DimensionMismatchError("labeling and ground truth differ in shape")
    n = labeling.labels.size
    sp = labeling.labels.ravel().astype(np.int64)
    gt_flat = gt.labels.ravel().astype(np.int64)
    gt_ids, gt_idx = np.unique(gt_flat, return_inverse=True)
    k = labeling.count
    table = np.bincount(gt_idx * k + sp, minlength=gt_ids.size * k).reshape(gt_ids.size, k)
    sp_sizes = table.sum(axis=0)
    leak_total = int(((table > 0) * sp_sizes[None, :]).sum())
    return float(leak_total - n) / n


def _boundary_map(labels: np.ndarray) -> np.ndarray:
    b = np.zeros(labels.shape, dtype=bool)
    b[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    b[:, 1:] |= labels[:, :-1] != labels[:, 1:]
    b[:-1, :] |= labels[:-1, :] != labels[1:, :]
    b[1:, :] |= labels[:-1, :] != labels[1:, :]
    return b


def boundary_recall(labeling: SuperpixelLabeling, gt: SegMask, tolerance_px: int = 0) -> float:
    """Fraction of ground-truth boundary pixels matched by superpixel boundaries.

    A gt boundary pixel counts as matched when a superpixel boundary pixel
    lies within a (2 * tolerance_px + 1) square around it.
    """
    if labeling.labels.shape != gt.labels.shape:
        raise DimensionMismatchError("labeling and ground truth differ in shape")
    gt_b = _boundary_map(gt.labels)
    if not gt_b.any():
        return 1.0
    pred_b = _boundary_map(labeling.labels)
    if tolerance_px > 0:
        from scipy import ndimage

        size = 2 * tolerance_px + 1
        pred_b = ndimage.binary_dilation(pred_b, structure=np.ones((size, size), dtype=bool))
    return float(np.count_nonzero(gt_b & pred_b)) / float(np.count_nonzero(gt_b))
