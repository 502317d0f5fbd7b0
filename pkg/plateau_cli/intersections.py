"""Double points of a disc map: self-proximity, candidates, Newton refinement, signs.

Everything here works on a surface map (anything with ``dim``, ``points``
and ``jacobians``), so the same pipeline runs on trained models and on the
analytic fixtures. Flat metrics are used on both the disc and the image.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import CandidateOverflowError, ConfigError, NonTransverseError
from .surface import SurfaceMap
from .utils import chunk_slices, parallel_map

logger = logging.getLogger(__name__)

DEFAULT_GRID = 256
DEFAULT_EPSILON = 0.2
DEFAULT_TAU = 0.05
GRID_MARGIN = 1e-3
CANDIDATE_CAP = 100_000
SCAN_BLOCK = 16

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
MAX_HALVINGS = 30
COND_LIMIT = 1e14
MAX_RADIUS = 1.0 - 1e-9
TRANSVERSALITY_FLOOR = 1e-6
DEDUP_TOL = 1e-6
CLUSTER_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class ProximityField:
    """Per grid point, the smallest image distance to grid points more than epsilon away"""

    grid: np.ndarray
    epsilon: float
    values: np.ndarray
    grid_res: int

    def log10(self, floor: float = 1e-300) -> np.ndarray:
        return np.log10(np.maximum(self.values, floor))

    @property
    def minimum(self) -> float:
        return float(np.min(self.values)) if self.values.size else float("inf")


@dataclass(frozen=True)
class Candidate:
    p1: tuple[float, float]
    p2: tuple[float, float]
    distance: float


@dataclass(frozen=True)
class DoublePointRecord:
    p1: tuple[float, float]
    p2: tuple[float, float]
    image: tuple[float, ...]
    residual: float
    jac_det: float
    normalized_det: float
    sign: int
    newton_iters: int

    def as_row(self) -> list[float]:
        return [
            *self.p1,
            *self.p2,
            *self.image,
            self.residual,
            self.jac_det,
            self.normalized_det,
            float(self.sign),
            float(self.newton_iters),
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "p1": list(self.p1),
            "p2": list(self.p2),
            "image": list(self.image),
            "residual": self.residual,
            "jac_det": self.jac_det,
            "normalized_det": self.normalized_det,
            "sign": self.sign,
            "newton_iters": self.newton_iters,
        }


@dataclass(frozen=True)
class NoConvergence:
    """Why a Newton refinement was rejected"""

    p1: tuple[float, float]
    p2: tuple[float, float]
    reason: str
    iterations: int
    residual: float


def disc_grid(grid_res: int, margin: float = GRID_MARGIN) -> np.ndarray:
    """Cartesian lattice on [-1, 1]^2 restricted to r <= 1 - margin, shape (M, 2)"""
    lin = np.linspace(-1.0, 1.0, grid_res)
    X, Y = np.meshgrid(lin, lin, indexing="xy")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    keep = np.hypot(pts[:, 0], pts[:, 1]) <= 1.0 - margin
    return pts[keep]


def _check_thresholds(grid_res: int, epsilon: float, tau_img: float | None = None) -> None:
    if grid_res < 16:
        raise ConfigError(f"grid_res must be at least 16, got {grid_res}")
    if not 0.0 < epsilon < 2.0:
        raise ConfigError(f"epsilon must lie in (0, 2), got {epsilon}")
    if tau_img is not None and not tau_img > 0.0:
        raise ConfigError(f"tau_img must be positive, got {tau_img}")


def _scan(
    grid: np.ndarray,
    images: np.ndarray,
    epsilon: float,
    tau_img: float | None,
    cap: int,
    threads: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Blocked all-pairs scan: per-point minima and the (i < j) candidate pairs"""
    eps2 = epsilon * epsilon
    tau2 = None if tau_img is None else tau_img * tau_img
    M = grid.shape[0]

    def run(s: slice):
        dom = grid[s, None, :] - grid[None, :, :]
        dom2 = np.einsum("ijk,ijk->ij", dom, dom)
        diff = images[s, None, :] - images[None, :, :]
        img2 = np.einsum("ijk,ijk->ij", diff, diff)
        far = dom2 > eps2
        minima = np.sqrt(np.min(np.where(far, img2, np.inf), axis=1))
        if tau2 is None:
            return minima, np.empty((0, 2), dtype=np.intp), np.empty(0)
        rows = np.arange(s.start, s.stop)[:, None]
        hit = far & (img2 < tau2) & (np.arange(M)[None, :] > rows)
        i, j = np.nonzero(hit)
        return minima, np.stack([i + s.start, j], axis=1), np.sqrt(img2[i, j])

    minima, pairs, dists = [], [], []
    total = 0
    blocks = chunk_slices(M, SCAN_BLOCK)
    # the cap is checked after every wave of blocks
    wave = max(1, threads) * 16
    for start in range(0, len(blocks), wave):
        for m, p, d in parallel_map(run, blocks[start : start + wave], threads):
            minima.append(m)
            pairs.append(p)
            dists.append(d)
            total += len(d)
        if tau2 is not None and total > cap:
            raise CandidateOverflowError(total, cap, tau_img)
    if not minima:
        return np.empty(0), np.empty((0, 2), dtype=np.intp), np.empty(0)
    return np.concatenate(minima), np.concatenate(pairs), np.concatenate(dists)


def self_proximity(
    surface: SurfaceMap,
    grid_res: int = DEFAULT_GRID,
    epsilon: float = DEFAULT_EPSILON,
    threads: int = 1,
) -> ProximityField:
    _check_thresholds(grid_res, epsilon)
    grid = disc_grid(grid_res)
    values, _, _ = _scan(grid, surface.points(grid), epsilon, None, CANDIDATE_CAP, threads)
    return ProximityField(grid, epsilon, values, grid_res)


def _candidates_from(grid: np.ndarray, pairs: np.ndarray, dists: np.ndarray) -> list[Candidate]:
    order = np.lexsort((pairs[:, 1], pairs[:, 0], dists)) if len(dists) else []
    return [
        Candidate(
            tuple(float(c) for c in grid[pairs[k, 0]]),
            tuple(float(c) for c in grid[pairs[k, 1]]),
            float(dists[k]),
        )
        for k in order
    ]


def generate_candidates(
    surface: SurfaceMap,
    grid_res: int = DEFAULT_GRID,
    epsilon: float = DEFAULT_EPSILON,
    tau_img: float = DEFAULT_TAU,
    cap: int = CANDIDATE_CAP,
    threads: int = 1,
) -> list[Candidate]:
    """Unordered grid pairs more than epsilon apart whose images are closer than tau_img.

    Sorted by image distance.
    """
    _check_thresholds(grid_res, epsilon, tau_img)
    grid = disc_grid(grid_res)
    _, pairs, dists = _scan(grid, surface.points(grid), epsilon, tau_img, cap, threads)
    return _candidates_from(grid, pairs, dists)


def _clamp(z: np.ndarray) -> np.ndarray:
    """Pull each disc half of a (K, 4) array of pairs back inside radius MAX_RADIUS"""
    out = z.copy()
    for half in (slice(0, 2), slice(2, 4)):
        r = np.hypot(out[:, half][:, 0], out[:, half][:, 1])
        scale = np.where(r > MAX_RADIUS, MAX_RADIUS / np.maximum(r, MAX_RADIUS), 1.0)
        out[:, half] *= scale[:, None]
    return out


def _system(surface: SurfaceMap, z: np.ndarray):
    v1, j1 = surface.jacobians(z[:, :2])
    v2, j2 = surface.jacobians(z[:, 2:])
    F = v1 - v2
    J = np.concatenate([j1, -j2], axis=2)
    return F, J, v1


def _normalized_det(J: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(J, axis=-2)
    return np.linalg.det(J) / np.prod(np.maximum(norms, 1e-300), axis=-1)


def refine_pairs(
    surface: SurfaceMap,
    p1: np.ndarray,
    p2: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> list[DoublePointRecord | NoConvergence]:
    """Damped Newton on F(p, p') = u(p) - u(p') for a batch of starting pairs.

    Each pair iterates independently; the step is halved until the residual
    norm decreases. Results come back in input order.
    """
    if surface.dim != 4:
        raise ConfigError(f"double points need a map into R^4, got dimension {surface.dim}")
    z = _clamp(np.concatenate([np.atleast_2d(p1), np.atleast_2d(p2)], axis=1).astype(np.float64))
    K = z.shape[0]
    F, J, img = _system(surface, z)
    res = np.linalg.norm(F, axis=1)
    iters = np.zeros(K, dtype=int)
    status = np.full(K, "", dtype=object)
    active = np.ones(K, dtype=bool)

    for it in range(max_iter + 1):
        done = active & (res <= tol)
        status[done] = "converged"
        iters[done] = it
        active &= ~done
        if not active.any():
            break
        if it == max_iter:
            status[active] = "max_iter"
            iters[active] = it
            break

        idx = np.flatnonzero(active)
        with np.errstate(all="ignore"):
            cond = np.linalg.cond(J[idx])
        singular = ~np.isfinite(cond) | (cond > COND_LIMIT)
        status[idx[singular]] = "singular"
        iters[idx[singular]] = it
        active[idx[singular]] = False
        idx = idx[~singular]
        if idx.size == 0:
            continue
        step = np.linalg.solve(J[idx], -F[idx][..., None])[..., 0]

        t = np.ones(idx.size)
        pending = np.arange(idx.size)
        for _ in range(MAX_HALVINGS + 1):
            rows = idx[pending]
            trial = _clamp(z[rows] + t[pending, None] * step[pending])
            F_t, J_t, img_t = _system(surface, trial)
            res_t = np.linalg.norm(F_t, axis=1)
            ok = res_t < res[rows]
            accepted = rows[ok]
            z[accepted], F[accepted], J[accepted] = trial[ok], F_t[ok], J_t[ok]
            img[accepted], res[accepted] = img_t[ok], res_t[ok]
            pending = pending[~ok]
            if pending.size == 0:
                break
            t[pending] *= 0.5
        stalled = idx[pending]
        status[stalled] = "stalled"
        iters[stalled] = it
        active[stalled] = False

    ndet = _normalized_det(J)
    det = np.linalg.det(J)
    results: list[DoublePointRecord | NoConvergence] = []
    for k in range(K):
        a = (float(z[k, 0]), float(z[k, 1]))
        b = (float(z[k, 2]), float(z[k, 3]))
        reason = status[k]
        if reason == "converged" and np.hypot(a[0] - b[0], a[1] - b[1]) <= epsilon:
            reason = "diagonal"
        if reason == "converged" and not abs(ndet[k]) >= TRANSVERSALITY_FLOOR:
            reason = "non_transverse"
        if reason != "converged":
            logger.debug("Newton refinement from pair %d rejected: %s", k, reason)
            results.append(NoConvergence(a, b, reason, int(iters[k]), float(res[k])))
            continue
        if b < a:
            a, b = b, a
        results.append(
            DoublePointRecord(
                p1=a,
                p2=b,
                image=tuple(float(c) for c in img[k]),
                residual=float(res[k]),
                jac_det=float(det[k]),
                normalized_det=float(ndet[k]),
                sign=1 if det[k] > 0 else -1,
                newton_iters=int(iters[k]),
            )
        )
    return results


def newton_refine(
    surface: SurfaceMap,
    pair: Candidate | tuple[Sequence[float], Sequence[float]],
    epsilon: float = DEFAULT_EPSILON,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> DoublePointRecord | NoConvergence:
    p1, p2 = (pair.p1, pair.p2) if isinstance(pair, Candidate) else pair
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    return refine_pairs(surface, p1, p2, epsilon, tol, max_iter)[0]


def intersection_sign(record: DoublePointRecord) -> int:
    """Sign of the 4x4 Jacobian determinant of F at the refined pair"""
    if not abs(record.normalized_det) >= TRANSVERSALITY_FLOOR:
        raise NonTransverseError(
            f"non-transverse intersection at {record.p1}, {record.p2}: "
            f"normalised det {record.normalized_det:.3e} below {TRANSVERSALITY_FLOOR:g}"
        )
    return 1 if record.jac_det > 0 else -1


def _same_pair(a: DoublePointRecord, b: DoublePointRecord, tol: float) -> bool:
    pa = np.array([*a.p1, *a.p2])
    direct = np.array([*b.p1, *b.p2])
    swapped = np.array([*b.p2, *b.p1])
    return bool(np.max(np.abs(pa - direct)) <= tol or np.max(np.abs(pa - swapped)) <= tol)


def deduplicate(
    records: Iterable[DoublePointRecord], dedup_tol: float = DEDUP_TOL
) -> list[DoublePointRecord]:
    """Merge records whose unordered preimage pairs agree within dedup_tol.

    The record with the smallest residual survives.
    """
    if not dedup_tol > 0:
        raise ConfigError(f"dedup_tol must be positive, got {dedup_tol}")
    ranked = sorted(enumerate(records), key=lambda item: (item[1].residual, item[0]))
    kept: list[DoublePointRecord] = []
    for _, record in ranked:
        if not any(_same_pair(record, other, dedup_tol) for other in kept):
            kept.append(record)
    return sorted(kept, key=lambda r: (r.p1, r.p2))


def self_intersection_number(records: Iterable[DoublePointRecord]) -> int:
    return sum(intersection_sign(r) for r in records)


def flag_clusters(
    records: Sequence[DoublePointRecord], image_tol: float = CLUSTER_TOL
) -> list[list[int]]:
    """Groups (size >= 2) of distinct records whose images nearly coincide.

    Three sheets through one point show up as three records with the same
    image; such groups are reported rather than resolved.
    """
    parent = list(range(len(records)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    images = np.array([r.image for r in records]) if records else np.empty((0, 0))
    for i in range(len(records)):
        for j in range(i + 1, len(records)):
            if np.linalg.norm(images[i] - images[j]) <= image_tol:
                parent[find(j)] = find(i)

    groups: dict[int, list[int]] = {}
    for i in range(len(records)):
        groups.setdefault(find(i), []).append(i)
    return [g for g in groups.values() if len(g) > 1]


@dataclass
class DoublePointAnalysis:
    proximity: ProximityField
    candidates: list[Candidate]
    records: list[DoublePointRecord]
    failures: list[NoConvergence] = field(default_factory=list)
    clusters: list[list[int]] = field(default_factory=list)

    @property
    def self_intersection_number(self) -> int | None:
        """Signed count, or None when clustered records leave the multiplicity unresolved"""
        if self.clusters:
            return None
        return self_intersection_number(self.records)

    @property
    def signed_sum(self) -> int:
        return sum(r.sign for r in self.records)

    def summary(self) -> dict[str, Any]:
        return {
            "grid_res": self.proximity.grid_res,
            "epsilon": self.proximity.epsilon,
            "field_min": self.proximity.minimum,
            "candidates": len(self.candidates),
            "records": [r.to_dict() for r in self.records],
            "failures": len(self.failures),
            "clusters": self.clusters,
            "signed_sum": self.signed_sum,
            "self_intersection_number": self.self_intersection_number,
        }


def find_double_points(
    surface: SurfaceMap,
    grid_res: int = DEFAULT_GRID,
    epsilon: float = DEFAULT_EPSILON,
    tau_img: float = DEFAULT_TAU,
    cap: int = CANDIDATE_CAP,
    dedup_tol: float = DEDUP_TOL,
    threads: int = 1,
) -> DoublePointAnalysis:
    """Proximity field, candidates, Newton refinement and deduplication in one pass"""
    _check_thresholds(grid_res, epsilon, tau_img)
    if surface.dim != 4:
        raise ConfigError(f"double points need a map into R^4, got dimension {surface.dim}")
    grid = disc_grid(grid_res)
    values, pairs, dists = _scan(grid, surface.points(grid), epsilon, tau_img, cap, threads)
    proximity = ProximityField(grid, epsilon, values, grid_res)
    candidates = _candidates_from(grid, pairs, dists)
    logger.info(
        "%d candidate pairs on a %d grid (epsilon=%g, tau=%g)",
        len(candidates),
        grid_res,
        epsilon,
        tau_img,
    )

    records: list[DoublePointRecord] = []
    failures: list[NoConvergence] = []
    if candidates:
        p1 = np.array([c.p1 for c in candidates])
        p2 = np.array([c.p2 for c in candidates])
        for result in refine_pairs(surface, p1, p2, epsilon):
            if isinstance(result, DoublePointRecord):
                records.append(result)
            else:
                failures.append(result)
    unique = deduplicate(records, dedup_tol)
    logger.info(
        "%d refined, %d rejected, %d distinct double points",
        len(records),
        len(failures),
        len(unique),
    )
    return DoublePointAnalysis(proximity, candidates, unique, failures, flag_clusters(unique))

