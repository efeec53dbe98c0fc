"""Finite-support measures and random walks w_n = g_1 g_2 ... g_n.

Seeds: every walk gets its own 64-bit seed derived from a master seed and an
index path (``derive_seed(master, n, trial, walk)``) through numpy's
``SeedSequence`` hashing, so any single walk can be regenerated in isolation
and results never depend on how trials are split across workers.
"""
from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from ._parallel import pmap
from .errors import BudgetExceeded, UsageError
from .model_spaces import FreeWord, GroupElement, ModelSpace, TreeSpace, iter_data_lines

PROB_TOL = 1e-12
EXACT_BUDGET = 10**7


class ElementaryMeasureWarning(UserWarning):
    """Support too small for the measure to be nonelementary."""


def derive_seed(master_seed: int, *path: int) -> int:
    ss = np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Measure:
    entries: tuple[tuple[GroupElement, float], ...]
    space: ModelSpace

    @property
    def elements(self) -> list[GroupElement]:
        return [g for g, _ in self.entries]

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.entries], dtype=float)

    def __len__(self) -> int:
        return len(self.entries)

    def as_dict(self) -> dict:
        return dict(self.entries)


def make_measure(entries: Iterable[tuple[GroupElement, float]], space: ModelSpace) -> Measure:
    entries = tuple((g, float(p)) for g, p in entries)
    if not entries:
        raise UsageError("a measure needs at least one entry")
    seen = set()
    for g, p in entries:
        space.check_element(g)
        if not p > 0:
            raise UsageError(f"probability of {g} must be positive, got {p}")
        key = space.key(g)
        if key in seen:
            raise UsageError(f"duplicate element {g} in measure")
        seen.add(key)
    total = math.fsum(p for _, p in entries)
    if abs(total - 1.0) > PROB_TOL:
        raise UsageError(f"probabilities sum to {total!r}, not 1")
    if len(entries) < 2:
        warnings.warn("measure supported on a single element is elementary; "
                      "walk results will not reflect the nonelementary theory",
                      ElementaryMeasureWarning, stacklevel=2)
    return Measure(entries, space)


def uniform_symmetric(rank: int) -> Measure:
    """Mass 1/(2 rank) on each free generator and each inverse."""
    space = TreeSpace(rank)
    p = 1.0 / (2 * rank)
    gens = [FreeWord((s,), rank) for i in range(1, rank + 1) for s in (i, -i)]
    return make_measure([(g, p) for g in gens], space)


def uniform_on(elements: Sequence[GroupElement], space: ModelSpace, symmetric: bool = True) -> Measure:
    """Uniform measure on the elements (and their inverses when ``symmetric``)."""
    support = []
    keys = set()
    for g in elements:
        for h in ((g, space.invert(g)) if symmetric else (g,)):
            if space.key(h) not in keys:
                keys.add(space.key(h))
                support.append(h)
    p = 1.0 / len(support)
    # fsum of n copies of 1/n can miss 1 by an ulp; fold the residue into the last entry
    probs = [p] * len(support)
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    return make_measure(zip(support, probs), space)


def reflected(mu: Measure) -> Measure:
    """The measure g -> mu(g^-1)."""
    space = mu.space
    return Measure(tuple((space.invert(g), p) for g, p in mu.entries), space)


def read_measure(source, space: ModelSpace) -> Measure:
    """Measure file: lines ``<element> <probability>``, '#' comments."""
    entries = []
    for lineno, line in iter_data_lines(source):
        head, _, prob = line.rpartition(" ")
        try:
            entries.append((space.parse_element(head), float(prob)))
        except (UsageError, ValueError) as exc:
            raise UsageError(f"line {lineno}: {exc}") from exc
    return make_measure(entries, space)


# ----------------------------------------------------------------------------
# Sampling


@dataclass(frozen=True)
class SamplePath:
    """increments g_1..g_n and positions w_0..w_n (w_0 = identity, w_i = w_{i-1} g_i)."""

    increments: tuple[GroupElement, ...]
    positions: tuple[GroupElement, ...]
    seed: int

    @property
    def endpoint(self) -> GroupElement:
        return self.positions[-1]


def _draw_indices(mu: Measure, n: int, rng: np.random.Generator) -> list[int]:
    return rng.choice(len(mu.entries), size=n, p=mu.probabilities).tolist()


def sample_path(mu: Measure, n: int, seed: int) -> SamplePath:
    if n < 0:
        raise UsageError("n must be >= 0")
    rng = np.random.default_rng(seed)
    elems = mu.elements
    increments = tuple(elems[i] for i in _draw_indices(mu, n, rng))
    space = mu.space
    positions = [space.identity()]
    for g in increments:
        positions.append(space.multiply(positions[-1], g))
    return SamplePath(increments, tuple(positions), seed)


def _endpoint_from(mu: Measure, n: int, rng: np.random.Generator) -> GroupElement:
    # same draws as sample_path, without materialising every position
    idx = _draw_indices(mu, n, rng)
    space = mu.space
    if isinstance(space, TreeSpace):
        words = [g.letters for g in mu.elements]
        stack: list[int] = []
        if all(len(w) == 1 for w in words):
            sym = [w[0] for w in words]
            for i in idx:
                x = sym[i]
                if stack and stack[-1] == -x:
                    stack.pop()
                else:
                    stack.append(x)
        else:
            for i in idx:
                for x in words[i]:
                    if stack and stack[-1] == -x:
                        stack.pop()
                    else:
                        stack.append(x)
        return FreeWord._trusted(tuple(stack), space.rank)
    elems = mu.elements
    return space.product(elems[i] for i in idx)


def sample_endpoint(mu: Measure, n: int, seed: int) -> GroupElement:
    """w_n of ``sample_path(mu, n, seed)``; cheap for large n."""
    if n < 0:
        raise UsageError("n must be >= 0")
    return _endpoint_from(mu, n, np.random.default_rng(seed))


def sample_endpoints(mu: Measure, n: int, count: int, seed: int) -> list[GroupElement]:
    """``count`` independent draws of w_n from one stream."""
    rng = np.random.default_rng(seed)
    return [_endpoint_from(mu, n, rng) for _ in range(count)]


@dataclass(frozen=True)
class GeneratorTuple:
    n: int
    elements: tuple[GroupElement, ...]
    seeds: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.elements)


def sample_generator_tuple(mu: Measure, n: int, k: int, master_seed: int) -> GeneratorTuple:
    """(w^1_n, ..., w^k_n) from k independent walks; walk j uses derive_seed(master_seed, j)."""
    if k < 1 or n < 1:
        raise UsageError("need k >= 1 and n >= 1")
    seeds = tuple(derive_seed(master_seed, j) for j in range(k))
    return GeneratorTuple(n, tuple(sample_endpoint(mu, n, s) for s in seeds), seeds)


# ----------------------------------------------------------------------------
# Exact convolution


def exact_distribution(mu: Measure, n: int) -> dict:
    """mu_n as {element: probability}, by iterated convolution."""
    if n < 0:
        raise UsageError("n must be >= 0")
    if len(mu) ** n > EXACT_BUDGET:
        raise BudgetExceeded(f"|support|^n = {len(mu)}^{n} exceeds {EXACT_BUDGET}")
    space = mu.space
    reps = {space.key(space.identity()): space.identity()}
    table = {space.key(space.identity()): 1.0}
    for _ in range(n):
        nxt: dict = defaultdict(float)
        for key, p in table.items():
            x = reps[key]
            for g, q in mu.entries:
                y = space.multiply(x, g)
                ky = space.key(y)
                reps.setdefault(ky, y)
                nxt[ky] += p * q
        table = nxt
    return {reps[k]: p for k, p in table.items()}


def inverse_step_distribution_check(mu: Measure, n: int, tol: float = 1e-9) -> bool:
    """Is the law of w_n^-1 (read off mu_n) equal to the n-step law of the reflected measure?"""
    space = mu.space
    lhs = {space.key(space.invert(x)): p for x, p in exact_distribution(mu, n).items()}
    rhs = {space.key(x): p for x, p in exact_distribution(reflected(mu), n).items()}
    return all(abs(lhs.get(k, 0.0) - rhs.get(k, 0.0)) <= tol for k in lhs.keys() | rhs.keys())


# ----------------------------------------------------------------------------
# Drift


@dataclass(frozen=True)
class DriftEstimate:
    L_hat: float
    stderr: float
    n: int
    trials: int


def _drift_trial(trial: int, mu: Measure, space: ModelSpace, n: int, master_seed: int) -> float:
    w = sample_endpoint(mu, n, derive_seed(master_seed, trial))
    return space.displacement(w) / n


def estimate_drift(mu: Measure, space: ModelSpace | None, n: int, trials: int, master_seed: int,
                   workers: int = 1) -> DriftEstimate:
    """Mean of d(x0, w_n x0)/n over independent trials, with its standard error."""
    if n < 1 or trials < 1:
        raise UsageError("need n >= 1 and trials >= 1")
    space = space or mu.space
    ratios = np.array(pmap(partial(_drift_trial, mu=mu, space=space, n=n, master_seed=master_seed),
                           range(trials), workers))
    stderr = float(ratios.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return DriftEstimate(float(ratios.mean()), stderr, n, trials)
