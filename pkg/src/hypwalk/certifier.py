"""Gromov-product certificate that g_1..g_k generate a free, quasi-isometrically embedded subgroup.

For the 2k signed generators s (each g_i and g_i^-1) the certificate requires

    min_i d(x0, g_i x0) >= 2 max_{s != t} (s x0 . t x0)_x0 + 18 delta + 1,

the maximum running over unordered pairs of distinct signed generators.  When
it holds, every reduced word s_1..s_m in the generators has its orbit chain
x0, s_1 x0, s_1 s_2 x0, ... satisfying the chain inequality, hence
m <= d(x0, g x0) <= M m with M the largest generator displacement.  So the
subgroup is free on the g_i, undistorted, and every nontrivial element is
loxodromic.  Failure of the inequality proves nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence, Union

from .errors import BudgetExceeded, CertificateRefuted, UsageError
from .geometry import check_orbit_chain
from .model_spaces import EPS_GEOM, FreeWord, GroupElement, ModelSpace

EPS_MARGIN = 1e-6
BRUTE_FORCE_BUDGET = 10**6


@dataclass(frozen=True)
class Symbol:
    """Signed generator g_index^sign (index is 1-based)."""

    index: int
    sign: int

    def __str__(self) -> str:
        return f"g{self.index}" if self.sign > 0 else f"g{self.index}^-1"


@dataclass(frozen=True)
class Violation:
    generator: int  # i, 1-based
    pair: tuple[Symbol, Symbol]
    displacement: float
    product: float
    required: float

    def __str__(self) -> str:
        s, t = self.pair
        return (f"i={self.generator} pair=({s},{t}) d(x0,g{self.generator}x0)={_fmt(self.displacement)} "
                f"product={_fmt(self.product)} required={_fmt(self.required)}")


def _fmt(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return f"{v:.12g}"


@dataclass(frozen=True)
class Certificate:
    generators: tuple[GroupElement, ...]
    delta_used: float
    min_displacement: float
    max_product: float
    margin: float
    lipschitz_constant: float
    space_kind: str
    lower_bound_constant: float = 1.0
    conclusions: dict = field(default_factory=lambda: {
        "free_of_rank_k": True, "undistorted": True, "qi_embedding": True, "purely_loxodromic": True})

    certified = True

    def to_text(self) -> str:
        lines = [
            "result: certified",
            f"space: {self.space_kind}",
            f"k: {len(self.generators)}",
        ]
        lines += [f"generator_{i}: {g}" for i, g in enumerate(self.generators, 1)]
        lines += [
            f"delta_used: {_fmt(self.delta_used)}",
            f"min_displacement: {_fmt(self.min_displacement)}",
            f"max_product: {_fmt(self.max_product)}",
            f"margin: {_fmt(self.margin)}",
            f"lower_bound: |g|_Gamma <= {_fmt(self.lower_bound_constant)} * d(x0,g x0)",
            f"lipschitz_constant: {_fmt(self.lipschitz_constant)}",
        ]
        lines += [f"{k}: {str(v).lower()}" for k, v in self.conclusions.items()]
        lines.append("note: sound relative to delta_used only")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FailureReport:
    generators: tuple[GroupElement, ...]
    delta_used: float
    min_displacement: float
    max_product: float
    margin: float
    violations: tuple[Violation, ...]
    space_kind: str
    max_power_tested: int = 1  # only the tuple itself is tested, never powers of it

    certified = False

    def to_text(self) -> str:
        lines = [
            "result: failed",
            f"space: {self.space_kind}",
            f"k: {len(self.generators)}",
        ]
        lines += [f"generator_{i}: {g}" for i, g in enumerate(self.generators, 1)]
        lines += [
            f"delta_used: {_fmt(self.delta_used)}",
            f"min_displacement: {_fmt(self.min_displacement)}",
            f"max_product: {_fmt(self.max_product)}",
            f"margin: {_fmt(self.margin)}",
            f"max_power_tested: {self.max_power_tested}",
            f"violations: {len(self.violations)}",
        ]
        lines += [f"violation: {v}" for v in self.violations]
        lines.append("note: failure does not show the orbit map is not a quasi-isometric embedding")
        return "\n".join(lines) + "\n"


Outcome = Union[Certificate, FailureReport]


def signed_symbols(k: int) -> list[Symbol]:
    return [Symbol(i, s) for i in range(1, k + 1) for s in (1, -1)]


def _signed_elements(gens: Sequence[GroupElement], space: ModelSpace) -> dict[Symbol, GroupElement]:
    out = {}
    for i, g in enumerate(gens, 1):
        out[Symbol(i, 1)] = g
        out[Symbol(i, -1)] = space.invert(g)
    return out


def criterion_check(gens, space: ModelSpace, delta: float) -> Outcome:
    """Evaluate the certificate for ``gens`` (a sequence or a GeneratorTuple) at ``delta``."""
    gens = tuple(getattr(gens, "elements", gens))
    if not gens:
        raise UsageError("need at least one generator")
    if delta is None or delta < 0:
        raise UsageError(f"delta must be a number >= 0, got {delta}")
    for i, g in enumerate(gens, 1):
        space.check_element(g)
        if space.is_identity(g):
            raise UsageError(f"generator {i} acts trivially")

    disps = [space.displacement(g) for g in gens]
    signed = _signed_elements(gens, space)
    products = {(s, t): space.orbit_product(signed[s], signed[t])
                for s, t in combinations(signed_symbols(len(gens)), 2)}
    min_disp = min(disps)
    max_prod = max(products.values())
    margin = min_disp - (2 * max_prod + 18 * delta + 1)

    certified = margin >= 0 if space.exact else margin > EPS_MARGIN
    if certified:
        return Certificate(gens, float(delta), float(min_disp), float(max_prod), float(margin),
                           float(max(disps)), space.kind)

    violations = []
    for i, d in enumerate(disps, 1):
        for pair, prod in products.items():
            required = 2 * prod + 18 * delta + 1
            ok = d >= required if space.exact else d - required > EPS_MARGIN
            if not ok:
                violations.append(Violation(i, pair, float(d), float(prod), float(required)))
    return FailureReport(gens, float(delta), float(min_disp), float(max_prod), float(margin),
                         tuple(violations), space.kind)


# ----------------------------------------------------------------------------
# Words in the generators


def evaluate_word(word: FreeWord, gens: Sequence[GroupElement], space: ModelSpace) -> GroupElement:
    """Image of a word in F_k under the homomorphism sending generator i to gens[i-1]."""
    signed = _signed_elements(gens, space)
    return space.product(signed[Symbol(abs(x), 1 if x > 0 else -1)] for x in word.letters)


def cyclically_reduce(w: FreeWord) -> FreeWord:
    letters = w.letters
    i, j = 0, len(letters)
    while j - i >= 2 and letters[i] == -letters[j - 1]:
        i += 1
        j -= 1
    return FreeWord._trusted(letters[i:j], w.rank)


@dataclass(frozen=True)
class BruteForceReport:
    max_len: int
    words_checked: int
    words_by_length: tuple[int, ...]
    max_ratio: float  # max d(x0, g x0) / |g|
    min_ratio: float


def verify_certificate_bruteforce(gens, space: ModelSpace, cert: Certificate, max_len: int) -> BruteForceReport:
    """Walk every nontrivial reduced word of length <= max_len and re-derive the certificate's claims.

    Checks m <= d(x0, g x0) <= M m, the chain inequality along each word's
    orbit chain, and that all orbit points are pairwise distinct.  Raises
    CertificateRefuted on the first contradiction.
    """
    gens = tuple(getattr(gens, "elements", gens))
    if not isinstance(cert, Certificate):
        raise UsageError("verification needs a certificate")
    if max_len < 1:
        raise UsageError("max_len must be >= 1")
    k = len(gens)
    if (2 * k) * (2 * k - 1) ** (max_len - 1) > BRUTE_FORCE_BUDGET:
        raise BudgetExceeded(f"{2 * k}*{2 * k - 1}^{max_len - 1} words exceeds {BRUTE_FORCE_BUDGET}")

    signed = _signed_elements(gens, space)
    symbols = list(signed)
    delta, M = cert.delta_used, cert.lipschitz_constant
    tol = 0.0 if space.exact else EPS_GEOM
    e = space.identity()

    points: list[tuple[float, GroupElement, tuple]] = []  # (displacement, element, word)
    counts = [0] * (max_len + 1)
    ratios = []

    # depth-first over reduced words, carrying the element and the prefix products s_1..s_i
    # (distances are displacements of quotients, exact for integer matrices)
    stack = [(s, (s,), signed[s], [e, signed[s]]) for s in reversed(symbols)]
    while stack:
        last, word, elem, chain = stack.pop()
        m = len(word)
        d = space.displacement(elem)
        label = " ".join(str(s) for s in word)
        if not m <= d + tol:
            raise CertificateRefuted(f"word {label}: length {m} > d(x0,g x0) = {d}")
        if not d <= M * m + tol:
            raise CertificateRefuted(f"word {label}: d(x0,g x0) = {d} > {M} * {m}")
        chk = check_orbit_chain(chain, delta, space)
        if not chk.ok:
            raise CertificateRefuted(f"word {label}: chain inequality fails at index {chk.first_violation}")
        counts[m] += 1
        ratios.append(d / m)
        points.append((d, chain[-1], word))
        if m < max_len:
            for s in reversed(symbols):
                if s.index == last.index and s.sign == -last.sign:
                    continue
                nxt = space.multiply(elem, signed[s])
                stack.append((s, word + (s,), nxt, chain + [nxt]))

    _check_distinct(points, space)
    return BruteForceReport(max_len, len(points), tuple(counts[1:]), max(ratios), min(ratios))


def _check_distinct(points, space: ModelSpace) -> None:
    keys = [space.orbit_key(g) for _, g, _ in points]
    if all(k is not None for k in keys):
        seen: dict = {}
        for key, (_, _, word) in zip(keys, points):
            other = seen.setdefault(key, word)
            if other is not word:
                _collision(other, word)
        return
    # d(p, q) >= |d(x0, p) - d(x0, q)|, so only pairs with nearly equal displacement can collide
    points = sorted(points, key=lambda t: t[0])
    for i, (di, gi, wi) in enumerate(points):
        for dj, gj, wj in points[i + 1:]:
            if dj - di > EPS_GEOM:
                break
            if space.orbit_distance(gi, gj) <= EPS_GEOM:
                _collision(wi, wj)


def _collision(u, v) -> None:
    a = " ".join(map(str, u))
    b = " ".join(map(str, v))
    raise CertificateRefuted(f"words {a} and {b} have the same orbit point")
