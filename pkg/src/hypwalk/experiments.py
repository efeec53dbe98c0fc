"""Monte Carlo harness for random k-generator subgroups Gamma(n) = <w^1_n, ..., w^k_n>.

Seeds: trial t at step count n uses walks derive_seed(master, n, t, j) for
j = 0..k-1 (tails: j = 0 is w, j = 1 is u; shadows: j = 0 is the centre and
j = 1 feeds the membership samples).  Nothing is shared between different n.
Aggregation is by counting, so the worker count never changes the output.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from ._parallel import pmap
from .certifier import EPS_MARGIN, FailureReport, Outcome, criterion_check
from .errors import UsageError
from .model_spaces import ModelSpace
from .random_walk import Measure, derive_seed, sample_endpoint, sample_endpoints

LSchedule = Callable[[int], int]

CURVE_HEADER = ("n", "trials", "successes", "p_hat", "stderr")
TAILS_HEADER = ("n", "case", "trials", "successes", "p_hat", "stderr")
DECAY_HEADER = ("r", "shadows", "samples", "f_hat")
TAIL_CASES = ("pp", "pm", "mp", "mm", "self_inverse")


@dataclass(frozen=True)
class ExperimentConfig:
    space: ModelSpace
    measure: Measure
    k: int
    n_grid: tuple[int, ...]
    trials: int
    master_seed: int
    delta: Optional[float] = None  # defaults to space.delta
    output: Optional[Path] = None
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if not self.n_grid:
            raise UsageError("n_grid is empty")
        if any(n < 1 for n in self.n_grid):
            raise UsageError("every n must be >= 1")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise UsageError(f"n_grid must be strictly increasing, got {self.n_grid}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.k < 1:
            raise UsageError("k must be >= 1")
        if self.delta is not None and self.delta < 0:
            raise UsageError("delta must be >= 0")

    @property
    def delta_used(self) -> Optional[float]:
        return self.delta if self.delta is not None else self.space.delta


def binomial_stderr(successes: int, trials: int) -> float:
    p = successes / trials
    return math.sqrt(p * (1 - p) / trials)


@dataclass(frozen=True)
class CurveRow:
    n: int
    trials: int
    successes: int

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        return binomial_stderr(self.successes, self.trials)

    def as_csv(self) -> list[str]:
        return [str(self.n), str(self.trials), str(self.successes), f"{self.p_hat:.6f}", f"{self.stderr:.6f}"]


@dataclass(frozen=True)
class TrialOutcome:
    n: int
    trial: int
    seeds: tuple[int, ...]
    outcome: Optional[Outcome]  # None when some generator was the identity

    @property
    def certified(self) -> bool:
        return self.outcome is not None and self.outcome.certified


def run_trial(cfg: ExperimentConfig, n: int, trial: int) -> TrialOutcome:
    """One draw of Gamma(n) and its certificate check."""
    seeds = tuple(derive_seed(cfg.master_seed, n, trial, j) for j in range(cfg.k))
    gens = [sample_endpoint(cfg.measure, n, s) for s in seeds]
    if any(cfg.space.is_identity(g) for g in gens):
        return TrialOutcome(n, trial, seeds, None)
    return TrialOutcome(n, trial, seeds, criterion_check(gens, cfg.space, cfg.delta_used))


def _count_successes(task: tuple[int, int, int], cfg: ExperimentConfig) -> int:
    n, lo, hi = task
    return sum(run_trial(cfg, n, t).certified for t in range(lo, hi))


def _chunks(n: int, trials: int, size: int) -> list[tuple[int, int, int]]:
    return [(n, lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def probability_curve(cfg: ExperimentConfig) -> list[CurveRow]:
    """Fraction of trials whose Gamma(n) passes the certificate, for each n in the grid."""
    if cfg.delta_used is None:
        raise UsageError("no hyperbolicity constant: pass delta or give the space one")
    tasks = [c for n in cfg.n_grid for c in _chunks(n, cfg.trials, 50)]
    counts = pmap(partial(_count_successes, cfg=cfg), tasks, cfg.workers)
    totals = {n: 0 for n in cfg.n_grid}
    for (n, _, _), c in zip(tasks, counts):
        totals[n] += c
    return [CurveRow(n, cfg.trials, totals[n]) for n in cfg.n_grid]


def failure_recheck(outcome: FailureReport, space: ModelSpace) -> bool:
    """Recompute every logged violation; True if at least one really fails."""
    gens = outcome.generators
    found = False
    for v in outcome.violations:
        i = v.generator
        d = space.displacement(gens[i - 1])
        s, t = v.pair
        gs = gens[s.index - 1] if s.sign > 0 else space.invert(gens[s.index - 1])
        gt = gens[t.index - 1] if t.sign > 0 else space.invert(gens[t.index - 1])
        required = 2 * space.orbit_product(gs, gt) + 18 * outcome.delta_used + 1
        found |= d < required if space.exact else d - required <= EPS_MARGIN
    return found


def nondecreasing_within(rows: Sequence[CurveRow], z: float = 3.0) -> bool:
    """p_hat never drops by more than z pooled standard errors between neighbouring n."""
    for a, b in zip(rows, rows[1:]):
        pooled = (a.successes + b.successes) / (a.trials + b.trials)
        se = math.sqrt(pooled * (1 - pooled) * (1 / a.trials + 1 / b.trials))
        if b.p_hat < a.p_hat - z * se:
            return False
    return True


# ----------------------------------------------------------------------------
# Gromov-product tails


def default_l_schedule(n: int, L_hat: float) -> int:
    """l(n) = max(1, min(floor(sqrt n), floor(L_hat n / 4)))."""
    if L_hat <= 0:
        raise UsageError("drift estimate must be positive")
    return max(1, min(math.isqrt(n), math.floor(L_hat * n / 4)))


def fixed_l_schedule(value: int) -> LSchedule:
    return lambda n: value


@dataclass(frozen=True)
class TailRow:
    n: int
    case: str
    trials: int
    successes: int

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        return binomial_stderr(self.successes, self.trials)

    def as_csv(self) -> list[str]:
        return [str(self.n), self.case, str(self.trials), str(self.successes),
                f"{self.p_hat:.6f}", f"{self.stderr:.6f}"]


def _tail_chunk(task: tuple[int, int, int], cfg: ExperimentConfig, l: int) -> dict[str, int]:
    n, lo, hi = task
    space = cfg.space
    counts = dict.fromkeys(TAIL_CASES, 0)
    for t in range(lo, hi):
        w = sample_endpoint(cfg.measure, n, derive_seed(cfg.master_seed, n, t, 0))
        u = sample_endpoint(cfg.measure, n, derive_seed(cfg.master_seed, n, t, 1))
        wi, ui = space.invert(w), space.invert(u)
        for case, (a, b) in zip(TAIL_CASES, ((w, u), (w, ui), (wi, u), (wi, ui), (w, wi))):
            counts[case] += space.orbit_product(a, b) <= l
    return counts


def gromov_tail_stats(cfg: ExperimentConfig, l_schedule: LSchedule) -> list[TailRow]:
    """P[(w_n^{+-1} x0 . u_n^{+-1} x0)_x0 <= l(n)] for independent w, u (cases pp, pm, mp, mm)
    and P[(w_n x0 . w_n^-1 x0)_x0 <= l(n)] (case self_inverse)."""
    rows = []
    for n in cfg.n_grid:
        tasks = _chunks(n, cfg.trials, 100)
        parts = pmap(partial(_tail_chunk, cfg=cfg, l=l_schedule(n)), tasks, cfg.workers)
        for case in TAIL_CASES:
            rows.append(TailRow(n, case, cfg.trials, sum(p[case] for p in parts)))
    return rows


# ----------------------------------------------------------------------------
# Shadow decay


@dataclass(frozen=True)
class DecayRow:
    r: float
    shadows: int
    samples: int
    f_hat: float

    def as_csv(self) -> list[str]:
        return [_num(self.r), str(self.shadows), str(self.samples), f"{self.f_hat:.6f}"]


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _shadow_hits(s: int, cfg: ExperimentConfig, n: int, r_grid: tuple[float, ...], samples: int,
                 reflected: bool) -> list[int]:
    space = cfg.space
    g = sample_endpoint(cfg.measure, n, derive_seed(cfg.master_seed, n, s, 0))
    ys = sample_endpoints(cfg.measure, n, samples, derive_seed(cfg.master_seed, n, s, 1))
    if reflected:
        ys = [space.invert(y) for y in ys]
    # y x0 lies in S_x0(g x0, d(x0, g x0) - r) iff r <= d(x0, g x0) and (g x0 . y x0)_x0 >= r
    d = space.displacement(g)
    prods = [space.orbit_product(g, y) for y in ys]
    return [sum(p >= r for p in prods) if r <= d else 0 for r in r_grid]


def shadow_decay_curve(cfg: ExperimentConfig, r_grid: Sequence[float], shadows: int | None = None,
                       samples: int = 500, n: int | None = None, reflected: bool = False) -> list[DecayRow]:
    """Empirical max over sampled shadows of distance parameter r of mu_n(shadow).

    Centres g x0 come from independent mu_n walks; each shadow's measure is
    estimated from ``samples`` fresh walks.  A max over finitely many shadows
    only bounds the true supremum from below.
    """
    r_grid = tuple(float(r) for r in r_grid)
    if not r_grid or any(r <= 0 for r in r_grid) or any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise UsageError(f"r_grid must be positive and increasing, got {r_grid}")
    shadows = shadows or cfg.trials
    n = n or cfg.n_grid[-1]
    hits = pmap(partial(_shadow_hits, cfg=cfg, n=n, r_grid=r_grid, samples=samples, reflected=reflected),
                range(shadows), cfg.workers)
    return [DecayRow(r, shadows, samples, max(h[i] for h in hits) / samples) for i, r in enumerate(r_grid)]


# ----------------------------------------------------------------------------
# CSV


Row = Union[CurveRow, TailRow, DecayRow]


def rows_to_csv(rows: Sequence[Row], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row.as_csv())
    return buf.getvalue()


def write_csv(rows: Sequence[Row], header: Sequence[str], path: Union[str, Path]) -> None:
    Path(path).write_text(rows_to_csv(rows, header))


def parse_csv_columns(text: str, source: str = "CSV") -> dict[str, list[str]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise UsageError(f"{source} has no header row")
    cols: dict[str, list[str]] = {name: [] for name in reader.fieldnames}
    for rec in reader:
        for name in reader.fieldnames:
            cols[name].append(rec[name])
    return cols


def read_csv_columns(path: Union[str, Path]) -> dict[str, list[str]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    return parse_csv_columns(text, str(path))
