"""Samplers and the erasure channel.

All randomness flows from a single 64-bit seed: stages derive
independent generators through ``spawn_rng`` so that model generation,
sampling, erasure and learning are separately reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .inference import JointTable
from .model import MarkovRandomField, conditional_distribution

#: marker for an erased cell in a sample matrix
ERASED = -1

_STAGE_KEYS = {
    "model": 0,
    "sample": 1,
    "erase": 2,
    "learn": 3,
    "game": 4,
    "trial": 5,
    "oracle": 6,
}


def spawn_rng(seed: int, *key) -> np.random.Generator:
    """Derive an independent generator from a root seed and a stage path.

    Path components are stage names or integers; the same (seed, path)
    always yields the same stream.
    """
    parts = tuple(
        _STAGE_KEYS[k] if isinstance(k, str) else int(k) for k in key
    )
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=parts))


@dataclass(frozen=True)
class SampleSet:
    """An m-by-n matrix of observed states, with ERASED marking missing cells."""

    data: np.ndarray
    arities: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.int64)
        if data.ndim != 2:
            raise ValueError("sample data must be an m-by-n matrix")
        if data.shape[1] != len(self.arities):
            raise ValueError("column count must match arities")
        for j, k in enumerate(self.arities):
            col = data[:, j]
            bad = (col != ERASED) & ((col < 0) | (col >= k))
            if bad.any():
                raise ValueError(f"out-of-range state in column {j}")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "arities", tuple(int(k) for k in self.arities))

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


def sample_exact(joint: JointTable, m: int, seed: int) -> SampleSet:
    """Draw m i.i.d. rows from an exact joint table by inverse CDF."""
    if m < 1:
        raise ValueError("need at least one sample")
    rng = spawn_rng(seed, "sample")
    flat = joint.probs.ravel()
    cdf = np.cumsum(flat)
    cdf[-1] = 1.0
    draws = np.searchsorted(cdf, rng.random(m), side="right")
    draws = np.minimum(draws, flat.size - 1)
    states = np.stack(np.unravel_index(draws, joint.probs.shape), axis=1)
    return SampleSet(states, joint.arities, seed=seed)


def _conditional_tables(model: MarkovRandomField):
    """Per node: sorted neighbor list and the conditional CDF for every
    neighbor configuration (mixed-radix indexed)."""
    from .model import clique_graph

    graph = clique_graph(model)
    tables = []
    scratch = [0] * model.n
    for u in range(model.n):
        nbrs = sorted(graph.neighbors[u])
        shape = [model.arities[v] for v in nbrs]
        rows = np.empty((math.prod(shape), model.arities[u]))
        for code, states in enumerate(itertools.product(*[range(k) for k in shape])):
            for v, s in zip(nbrs, states):
                scratch[v] = s
            rows[code] = conditional_distribution(model, u, scratch)
        strides = []
        acc = 1
        for k in reversed(shape):
            strides.append(acc)
            acc *= k
        strides.reverse()
        tables.append((nbrs, strides, np.cumsum(rows, axis=1)))
    return tables


def gibbs_sample(
    model: MarkovRandomField, m: int, burn_in: int, thinning: int, seed: int
) -> SampleSet:
    """Systematic-scan heat-bath sampler.

    Sweeps update nodes in index order; one row is recorded every
    `thinning` sweeps after `burn_in` sweeps.
    """
    if m < 1:
        raise ValueError("need at least one sample")
    if burn_in < 1 or thinning < 1:
        raise ValueError("burn_in and thinning must be >= 1")
    rng = spawn_rng(seed, "sample", 1)
    tables = _conditional_tables(model)
    x = np.array([rng.integers(k) for k in model.arities], dtype=np.int64)
    out = np.empty((m, model.n), dtype=np.int64)

    def sweep():
        for u in range(model.n):
            nbrs, strides, cdf = tables[u]
            code = 0
            for v, stride in zip(nbrs, strides):
                code += stride * x[v]
            row = cdf[code]
            x[u] = min(np.searchsorted(row, rng.random(), side="right"), row.size - 1)

    for _ in range(burn_in):
        sweep()
    for i in range(m):
        for _ in range(thinning):
            sweep()
        out[i] = x
    return SampleSet(out, model.arities, seed=seed)


def erase(samples: SampleSet, reveal_prob: float, seed: int) -> SampleSet:
    """Independently keep each cell with probability reveal_prob, else mark
    it ERASED; the erasure pattern is independent of the values."""
    if not 0.0 <= reveal_prob <= 1.0:
        raise ValueError("reveal_prob must lie in [0, 1]")
    rng = spawn_rng(seed, "erase")
    keep = rng.random(samples.data.shape) < reveal_prob
    data = np.where(keep, samples.data, ERASED)
    return SampleSet(data, samples.arities, seed=seed)
