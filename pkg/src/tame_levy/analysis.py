"""Covering statistics of simulated path images: box-dimension estimates
and phi-sums over the canonical cover by level-n cosets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LevelMismatch, ZeroBn
from .levy import bn_sequence
from .simulator import PathRecord
from .support import level_group
from .tower import TowerSpec


def visited_cosets(spec: TowerSpec, path: PathRecord, n: int, t: float | None = None) -> int:
    """Number of distinct level-n cosets occupied by the path on [0, t]."""
    if n > path.level or n < 1:
        raise LevelMismatch(f"path at level {path.level} cannot be read at level {n}")
    t = path.end_time if t is None else t
    keep = path.times <= t
    states = path.states[keep]
    if not len(states):
        return 1
    proj = level_group(spec, path.level).project(states, n)
    proj = np.vstack([np.zeros((1, proj.shape[1]), dtype=proj.dtype), proj])
    return len(np.unique(proj, axis=0))


def visited_counts(spec, paths, levels, t=None) -> np.ndarray:
    """Array (paths x levels) of visited-coset counts."""
    return np.array([[visited_cosets(spec, p, n, t) for n in levels] for p in paths], dtype=np.int64)


def box_dimension_estimate(spec: TowerSpec, paths, levels, t=None):
    """Median over the ensemble of log N_n / log M(n), one value per level."""
    counts = visited_counts(spec, paths, levels, t)
    logs = np.log([float(spec.group_order(n)) for n in levels])
    est = np.log(counts) / logs
    return np.median(est, axis=0), est


def hausdorff_phi_measure(spec: TowerSpec, paths, levels, t=None, b=None):
    """Per-path phi-sums N_n * b_n on the canonical cover, shape (paths, levels)."""
    levels = list(levels)
    if b is None:
        seq = bn_sequence(spec, max(levels), with_B=False)
        b = [seq.b[n - 1] for n in levels]
    b = np.asarray(b, dtype=float)
    for n, bn in zip(levels, b):
        if bn <= 0:
            raise ZeroBn(f"b_{n} = 0; phi-sums need levels past n(2)")
    counts = visited_counts(spec, paths, levels, t)
    return counts * b


def running_liminf(values):
    """Running minimum over the tail: entry k is min(values[k:])."""
    v = np.asarray(values, dtype=float)
    return np.minimum.accumulate(v[::-1], axis=-1)[::-1]


@dataclass
class DimensionReport:
    levels: tuple
    counts: np.ndarray          # paths x levels
    scales: tuple               # M(n)^-1
    box: np.ndarray             # paths x levels
    phi: np.ndarray | None      # paths x usable levels
    phi_levels: tuple

    def quantiles(self, arr):
        return np.percentile(arr, [25, 50, 75], axis=0)

    def rows(self):
        """One dict per level with medians and quartiles."""
        out = []
        bq = self.quantiles(self.box)
        cq = self.quantiles(self.counts)
        for i, n in enumerate(self.levels):
            row = {
                "n": n,
                "scale": self.scales[i],
                "N_median": float(cq[1, i]),
                "N_q1": float(cq[0, i]),
                "N_q3": float(cq[2, i]),
                "box_median": float(bq[1, i]),
                "box_q1": float(bq[0, i]),
                "box_q3": float(bq[2, i]),
            }
            if self.phi is not None and n in self.phi_levels:
                k = self.phi_levels.index(n)
                pq = self.quantiles(self.phi)
                row.update(phi_median=float(pq[1, k]), phi_q1=float(pq[0, k]), phi_q3=float(pq[2, k]))
            out.append(row)
        return out


def dimension_report(spec: TowerSpec, paths, levels, t=None) -> DimensionReport:
    levels = tuple(levels)
    counts = visited_counts(spec, paths, levels, t)
    logs = np.log([float(spec.group_order(n)) for n in levels])
    seq = bn_sequence(spec, max(levels), with_B=False)
    usable = tuple(n for n in levels if seq.b[n - 1] > 0)
    phi = None
    if usable:
        idx = [levels.index(n) for n in usable]
        phi = counts[:, idx] * np.array([seq.b[n - 1] for n in usable])
    return DimensionReport(
        levels=levels,
        counts=counts,
        scales=tuple(math.exp(-lg) for lg in logs),
        box=np.log(counts) / logs,
        phi=phi,
        phi_levels=usable,
    )
