"""Ray subgraphs of the Cayley tree and their uniform sampling law.

For an anchor level ell in Z, a ray subgraph is built from a self-avoiding
path (v_0, v_1, ...) whose distance-to-root profile is:

  ell = 0:  v_0 = e and |v_k| = k (the path leaves the root);
  ell > 0:  |v_0| = ell and |v_k| = ell + k (starts on the sphere C_ell and
            moves away from the root);
  ell < 0:  |v_0| = |ell|, descends the unique geodesic to e
            (v_|ell| = e) and then moves away again.

The subgraph is union_k V_k with V_k = {t : d(t, v_k) <= k}.  The sampling
law is path-uniform: the anchor vertex is uniform on C_|ell| and every free
step is uniform over the admissible continuations; restricting a longer
path reproduces the shorter path's law, which is the consistency that
defines the uniform measure on subgraph classes.

Membership of a vertex t is decided from a finite path: k -> d(t, v_k) - k
decreases (in steps of 2) until the ray passes the projection of t and is
constant afterwards, so the minimum is visible within |t| + 2|ell| + 2
steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PathTooShortError, ResourceBudgetError
from .free_group import (
    Word,
    allowed_next_letters,
    distance,
    enumerate_sphere,
    identity,
    letters_in_order,
)


@dataclass(frozen=True)
class RayPath:
    """Finite-resolution representative of a ray subgraph."""

    level: int  # signed anchor level
    rank: int
    vertices: tuple  # (v_0, ..., v_K)

    def __post_init__(self):
        ell, d = self.level, self.rank
        vs = self.vertices
        if not vs:
            raise ValueError("empty path")
        if len(set(vs)) != len(vs):
            raise ValueError("path is not self-avoiding")
        for k, v in enumerate(vs):
            if len(v) != _expected_level(ell, k):
                raise ValueError(
                    f"vertex {k} has level {len(v)}, expected {_expected_level(ell, k)}"
                )
        for a, b in zip(vs, vs[1:]):
            if distance(a, b) != 1:
                raise ValueError("consecutive path vertices must be adjacent")

    @property
    def num_steps(self) -> int:
        return len(self.vertices) - 1

    def contains(self, t: Word) -> bool:
        return membership(t, self)


def _expected_level(ell: int, k: int) -> int:
    if ell >= 0:
        return ell + k
    return abs(ell) - k if k <= abs(ell) else k - abs(ell)


def _next_vertices(path: list, ell: int, d: int) -> list:
    """Admissible continuations of a partial path (self-avoidance enforced)."""
    cur = path[-1]
    k = len(path) - 1
    if ell < 0 and k < abs(ell):
        # descending phase: the geodesic to the root is unique
        return [Word(d, cur.letters[:-1])]
    prev = path[-2] if len(path) >= 2 else None
    out = []
    if cur.is_identity:
        for g in letters_in_order(d):
            w = Word(d, (g,))
            if prev is None or w != prev:
                out.append(w)
        return out
    for g in allowed_next_letters(d, cur.letters[-1]):
        out.append(Word(d, cur.letters + (g,)))
    return out


def sample_ray_path(
    level: int, d: int, num_steps: int, rng: np.random.Generator
) -> RayPath:
    """Draw a ray path of ``num_steps`` steps under the path-uniform law."""
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    ell = level
    if ell == 0:
        v0 = identity(d)
    else:
        letters = []
        for _ in range(abs(ell)):
            opts = allowed_next_letters(d, letters[-1] if letters else None)
            letters.append(opts[int(rng.integers(len(opts)))])
        v0 = Word(d, tuple(letters))
    path = [v0]
    while len(path) <= num_steps:
        opts = _next_vertices(path, ell, d)
        path.append(opts[int(rng.integers(len(opts)))])
    return RayPath(level=ell, rank=d, vertices=tuple(path))


def enumerate_ray_paths(level: int, d: int, num_steps: int, budget: int = 200_000):
    """All ray paths of the given length with their exact probabilities.

    Yields (Fraction probability, RayPath); probabilities multiply the
    uniform choice at the anchor and at every free step, hence match
    :func:`sample_ray_path` exactly.
    """
    ell = level
    anchors: list[tuple[Fraction, Word]]
    if ell == 0:
        anchors = [(Fraction(1), identity(d))]
    else:
        m = abs(ell)
        cnt = 2 * d * (2 * d - 1) ** (m - 1)
        if cnt > budget:
            raise ResourceBudgetError(f"{cnt} anchor vertices exceed budget")
        anchors = [(Fraction(1, cnt), v) for v in enumerate_sphere(d, m)]
    stack = [(p, [v]) for p, v in anchors]
    out_count = 0
    while stack:
        prob, path = stack.pop()
        if len(path) == num_steps + 1:
            out_count += 1
            if out_count > budget:
                raise ResourceBudgetError("ray-path enumeration exceeds budget")
            yield prob, RayPath(level=ell, rank=d, vertices=tuple(path))
            continue
        opts = _next_vertices(path, ell, d)
        p = prob / len(opts)
        for v in opts:
            stack.append((p, path + [v]))


def required_steps(t_len: int, level: int) -> int:
    """Path length guaranteeing that membership of a length-t_len word is decided."""
    return t_len + 2 * abs(level) + 2


def membership(t: Word, xi: RayPath) -> bool:
    """Whether t belongs to the subgraph represented by the path.

    True iff min_k (d(t, v_k) - k) <= 0.  The sequence decreases by 0 or 2
    per step until it turns constant, so the scan stops at the first
    repeated value; a path shorter than the decision bound raises.
    """
    if t.rank != xi.rank:
        raise ValueError("rank mismatch")
    if xi.num_steps < required_steps(len(t), xi.level):
        raise PathTooShortError(
            f"path with {xi.num_steps} steps cannot decide membership of a "
            f"length-{len(t)} word at level {xi.level}; "
            f"need {required_steps(len(t), xi.level)}"
        )
    best = None
    prev = None
    for k, v in enumerate(xi.vertices):
        f = distance(t, v) - k
        if f <= 0:
            return True
        if prev is not None and f == prev and k > abs(xi.level):
            break  # constant from the projection onwards
        prev = f
        if best is None or f < best:
            best = f
    return False


def subgraph_sphere_count(level: int, offset: int, d: int) -> int:
    """Exact number of subgraph vertices on the sphere C_{level+offset}.

    Valid for positive anchor levels: every such subgraph meets that
    sphere in exactly (2d-1)^floor(offset/2) vertices, independently of
    the path.  No closed form is asserted for level <= 0; use
    :func:`count_sphere_members` there.
    """
    if level < 1:
        raise ValueError("closed-form count requires level >= 1")
    if offset < 0:
        raise ValueError("offset must be >= 0")
    return (2 * d - 1) ** (offset // 2)


def count_sphere_members(xi: RayPath, sphere_level: int, budget: int = 500_000) -> int:
    """|xi intersect C_s| by brute-force membership over the whole sphere."""
    from .free_group import sphere_size

    if sphere_size(xi.rank, sphere_level) > budget:
        raise ResourceBudgetError("sphere too large for brute-force membership count")
    return sum(1 for t in enumerate_sphere(xi.rank, sphere_level) if membership(t, xi))


def restriction_to_ball(xi: RayPath, m: int) -> frozenset:
    """The subgraph's trace on the ball E_m, as a frozenset of Words."""
    from .free_group import enumerate_ball

    return frozenset(t for t in enumerate_ball(xi.rank, m) if membership(t, xi))


def thin_table(f_table: dict, xi: RayPath) -> dict:
    """Restrict a finitely supported site table to the subgraph.

    ``f_table`` maps (w, t) pairs with Word t to reals; entries with
    t outside the subgraph are dropped, the rest are unchanged.
    """
    out = {}
    for (w, t), val in f_table.items():
        if membership(t, xi):
            out[(w, t)] = val
    return out


# ---------------------------------------------------------------------------
# Anchor-level distribution for the limit clusters
# ---------------------------------------------------------------------------

def anchor_pmf(k: int, d: int) -> Fraction:
    """pmf 2d(2d-1)^(k-1) (d-1)/d on k = 0, -1, -2, ...; exact rational.

    Equivalently 2(d-1)(2d-1)^(k-1); the total mass is a geometric sum
    equal to 1 exactly.
    """
    if d < 2:
        raise ValueError("rank must be >= 2")
    if k > 0:
        return Fraction(0)
    return Fraction(2 * (d - 1), (2 * d - 1) ** (1 - k))


def anchor_pmf_tail(k_max: int, d: int) -> Fraction:
    """Exact mass of {k : k <= k_max} for k_max <= 0.

    The geometric sum collapses to (2d-1)^k_max; in particular the total
    mass at k_max = 0 is exactly 1.
    """
    if k_max > 0:
        raise ValueError("tail defined for k_max <= 0")
    return Fraction(1, (2 * d - 1) ** (-k_max))


def sample_anchor(d: int, rng: np.random.Generator) -> int:
    """Draw from the anchor-level pmf by the exact geometric identity.

    P(level = -j) = p (1-p)^j with p = (2d-2)/(2d-1), so the level is the
    negated failure count of a geometric trial.
    """
    p = (2 * d - 2) / (2 * d - 1)
    return 1 - int(rng.geometric(p))
