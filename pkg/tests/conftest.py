import itertools
import math

import pytest

from hypwalk.model_spaces import FreeWord, PlaneSpace, TreeSpace

# (criterion, description, passed, detail) rows printed by pytest_terminal_summary
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, desc, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {desc}: {detail}")


@pytest.fixture
def tree2():
    return TreeSpace(2)


@pytest.fixture
def tree3():
    return TreeSpace(3)


@pytest.fixture
def plane():
    return PlaneSpace()


def W(text, rank=2):
    return FreeWord.parse(text, rank)


# ----------------------------------------------------------------------------
# independent oracles


def naive_reduce(letters):
    """Free reduction by repeated scanning (not the stack algorithm the library uses)."""
    letters = list(letters)
    changed = True
    while changed:
        changed = False
        for i in range(len(letters) - 1):
            if letters[i] == -letters[i + 1]:
                del letters[i:i + 2]
                changed = True
                break
    return tuple(letters)


def naive_tree_distance(p, q):
    inv_p = [-x for x in reversed(p.letters)]
    return len(naive_reduce(inv_p + list(q.letters)))


def common_prefix_len(u, v):
    return sum(1 for _ in itertools.takewhile(lambda t: t[0] == t[1], zip(u.letters, v.letters)))


def arccosh_plane_distance(p, q):
    return math.acosh(1 + ((p.x - q.x) ** 2 + (p.y - q.y) ** 2) / (2 * p.y * q.y))


def all_reduced(rank, max_len):
    """Reduced words by filtering all letter strings (independent of the library enumerator)."""
    symbols = [s for i in range(1, rank + 1) for s in (i, -i)]
    out = []
    for length in range(max_len + 1):
        for letters in itertools.product(symbols, repeat=length):
            if all(letters[i] != -letters[i + 1] for i in range(length - 1)):
                out.append(FreeWord(tuple(letters), rank))
    return out
