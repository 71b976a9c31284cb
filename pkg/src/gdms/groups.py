"""Free-group words, the reversal-inversion involution, and quotient groups.

The alphabet for the free group F_d = <g_1, ..., g_d> is the 2d-letter set

    V = (g_1, g_1^-1, g_2, g_2^-1, ..., g_d, g_d^-1),

encoded by integer codes 0..2d-1 in that order, so that ``code ^ 1`` is the
code of the inverse letter.  Reduced words (no adjacent letter is followed by
its inverse) are exactly the admissible words of the non-backtracking Markov
shift used throughout the package.

Quotients G = F_d / N are represented by one of three backends:

* ``FinitePermQuotient``  -- generator images are permutations on n points;
  the whole (finite) group is enumerated by closure.
* ``FreeAbelianQuotient`` -- generator images are integer vectors; G is a
  subgroup of Z^k (the abelianization for standard basis images).
* ``FreeQuotient``        -- a subset of the generators is killed; the
  survivors generate a free group and elements are reduced words in them.

Every backend exposes the semigroup homomorphism from letter sequences to G,
inversion, equality/hash on elements, and the word metric to the identity.
All objects are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

from .errors import CapExceededError, ConfigError

DEFAULT_BALL_CAP = 2_000_000


# ---------------------------------------------------------------------------
# Letters and reduced words
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Letter:
    """A generator or inverse generator: ``gen`` is 1-based, ``sign`` is +-1."""

    gen: int
    sign: int

    def __post_init__(self):
        if self.gen < 1:
            raise ConfigError(f"generator index must be >= 1, got {self.gen}")
        if self.sign not in (1, -1):
            raise ConfigError(f"letter sign must be +1 or -1, got {self.sign}")

    @property
    def code(self) -> int:
        """Integer code in the alphabet order (g_1, g_1^-1, g_2, ...)."""
        return 2 * (self.gen - 1) + (0 if self.sign > 0 else 1)

    @staticmethod
    def from_code(code: int) -> "Letter":
        return Letter(code // 2 + 1, 1 if code % 2 == 0 else -1)

    def inverse(self) -> "Letter":
        return Letter(self.gen, -self.sign)

    def __repr__(self):
        return f"g{self.gen}" + ("" if self.sign > 0 else "~")


def alphabet(d: int) -> tuple[Letter, ...]:
    """The 2d letters of F_d in code order."""
    if d < 1:
        raise ConfigError(f"rank must be >= 1, got {d}")
    return tuple(Letter.from_code(c) for c in range(2 * d))


def inverse_code(code: int) -> int:
    return code ^ 1


@dataclass(frozen=True)
class ReducedWord:
    """A reduced word in F_d; the empty word is the identity."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        for a, b in itertools.pairwise(self.letters):
            if a == b.inverse():
                raise ConfigError(f"word is not reduced at {a}{b}")

    def __len__(self):
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        return concat_reduce(self, other)

    def codes(self) -> tuple[int, ...]:
        return tuple(letter.code for letter in self.letters)

    @staticmethod
    def from_codes(codes: Iterable[int]) -> "ReducedWord":
        return ReducedWord(tuple(Letter.from_code(c) for c in codes))

    def inverse(self) -> "ReducedWord":
        return ReducedWord(tuple(x.inverse() for x in reversed(self.letters)))

    def __repr__(self):
        return "<id>" if not self.letters else " ".join(map(repr, self.letters))


def word(*spec: tuple[int, int]) -> ReducedWord:
    """Convenience constructor: ``word((1, 1), (2, -1))`` is g_1 g_2^-1."""
    return ReducedWord(tuple(Letter(g, s) for g, s in spec))


def reduce_word(raw: Sequence[Letter]) -> ReducedWord:
    """Fully reduce a letter sequence by stack cancellation.

    The result equals the input in F_d; a single left-to-right pass with a
    stack performs every cancellation cascade.
    """
    stack: list[Letter] = []
    for letter in raw:
        if stack and stack[-1] == letter.inverse():
            stack.pop()
        else:
            stack.append(letter)
    return ReducedWord(tuple(stack))


def concat_reduce(a: ReducedWord, b: ReducedWord) -> ReducedWord:
    """The reduced word equal to ``ab``; only the junction can cancel."""
    left = list(a.letters)
    right = list(b.letters)
    while left and right and left[-1] == right[0].inverse():
        left.pop()
        right.pop(0)
    return ReducedWord(tuple(left) + tuple(right))


def kappa(w: ReducedWord) -> ReducedWord:
    """Reverse the word and invert each letter.

    An involution on nonempty reduced words; it preserves the multiset of
    generator indices, hence any per-letter weight with c(g) = c(g^-1).
    """
    if len(w) == 0:
        raise ConfigError("empty word has no kappa image")
    return w.inverse()


def is_reduced(codes: Sequence[int]) -> bool:
    return all(b != (a ^ 1) for a, b in itertools.pairwise(codes))


# ---------------------------------------------------------------------------
# Quotient groups
# ---------------------------------------------------------------------------

class QuotientGroup(ABC):
    """A quotient G = F_d / N given by the images of the 2d letters."""

    d: int

    @abstractmethod
    def identity(self) -> Hashable:
        ...

    @abstractmethod
    def letter_image(self, letter: Letter) -> Hashable:
        """The image of a single letter under the quotient homomorphism."""

    @abstractmethod
    def apply_letter(self, g: Hashable, letter: Letter) -> Hashable:
        """Right-multiply ``g`` by the image of ``letter``."""

    @abstractmethod
    def inverse(self, g: Hashable) -> Hashable:
        ...

    @abstractmethod
    def distance(self, g: Hashable) -> int:
        """Word-metric distance to the identity (with respect to the letter images)."""

    def apply_word(self, g: Hashable, w: Iterable[Letter]) -> Hashable:
        for letter in w:
            g = self.apply_letter(g, letter)
        return g

    def word_image(self, w: Iterable[Letter]) -> Hashable:
        """The left-to-right fold of letter images; the empty word maps to id."""
        return self.apply_word(self.identity(), w)

    def order(self) -> int | None:
        """Group order for finite backends, ``None`` otherwise."""
        return None

    def kernel_is_trivial(self) -> bool:
        """True iff N = {id}, in which case no nonempty word is a kernel word."""
        return False

    def generating_images(self) -> list[Hashable]:
        """Distinct non-identity letter images (the Cayley generating set)."""
        seen: list[Hashable] = []
        e = self.identity()
        for letter in alphabet(self.d):
            img = self.letter_image(letter)
            if img != e and img not in seen:
                seen.append(img)
        return seen


class FinitePermQuotient(QuotientGroup):
    """Finite quotient given by generator images in a permutation group.

    ``images[i]`` is the image of g_{i+1} as a permutation of {0, ..,
    degree-1} in one-line notation.  The group is the closure of the images;
    elements are permutation tuples.
    """

    def __init__(self, degree: int, images: Sequence[Sequence[int]]):
        if degree < 1:
            raise ConfigError("permutation degree must be >= 1")
        self.degree = degree
        self.d = len(images)
        if self.d < 1:
            raise ConfigError("need at least one generator image")
        self._images: dict[int, tuple[int, ...]] = {}
        for i, img in enumerate(images):
            perm = tuple(img)
            if sorted(perm) != list(range(degree)):
                raise ConfigError(
                    f"image of g{i + 1} is not a permutation of 0..{degree - 1}: {img}"
                )
            inv = [0] * degree
            for a, b in enumerate(perm):
                inv[b] = a
            self._images[2 * i] = perm
            self._images[2 * i + 1] = tuple(inv)
        self._elements, self._dist = self._close()

    def _close(self):
        e = self.identity()
        dist = {e: 0}
        order: list[tuple[int, ...]] = [e]
        frontier = [e]
        while frontier:
            nxt = []
            for g in frontier:
                for code in range(2 * self.d):
                    h = self._mul(g, self._images[code])
                    if h not in dist:
                        dist[h] = dist[g] + 1
                        order.append(h)
                        nxt.append(h)
            frontier = nxt
        return order, dist

    @staticmethod
    def _mul(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
        # (p*q)(x) = q(p(x)): apply p first, matching left-to-right word folds.
        return tuple(q[v] for v in p)

    def identity(self):
        return tuple(range(self.degree))

    def letter_image(self, letter: Letter):
        return self._images[letter.code]

    def apply_letter(self, g, letter: Letter):
        return self._mul(g, self._images[letter.code])

    def inverse(self, g):
        inv = [0] * self.degree
        for a, b in enumerate(g):
            inv[b] = a
        return tuple(inv)

    def distance(self, g) -> int:
        return self._dist[g]

    def order(self) -> int:
        return len(self._elements)

    def diameter(self) -> int:
        return max(self._dist.values())


class FreeAbelianQuotient(QuotientGroup):
    """Quotient landing in Z^rank; generator images are integer vectors.

    For standard-basis images this is the abelianization of F_d.  The word
    metric is the L1 norm when every image is a signed standard basis vector;
    otherwise distances fall back to a cached breadth-first search.
    """

    def __init__(self, rank: int, images: Sequence[Sequence[int]]):
        if rank < 1:
            raise ConfigError("rank must be >= 1")
        self.rank = rank
        self.d = len(images)
        if self.d < 1:
            raise ConfigError("need at least one generator image")
        self._images: dict[int, tuple[int, ...]] = {}
        for i, img in enumerate(images):
            vec = tuple(int(x) for x in img)
            if len(vec) != rank:
                raise ConfigError(f"image of g{i + 1} must have {rank} entries")
            self._images[2 * i] = vec
            self._images[2 * i + 1] = tuple(-x for x in vec)
        self._l1_exact = self._images_are_signed_basis()
        self._dist_cache: dict[tuple[int, ...], int] = {self.identity(): 0}
        self._bfs_radius = 0

    def _images_are_signed_basis(self) -> bool:
        hit = set()
        for i in range(self.d):
            vec = self._images[2 * i]
            if sum(abs(x) for x in vec) != 1:
                return False
            hit.add(max(range(self.rank), key=lambda j: abs(vec[j])))
        return hit == set(range(self.rank))

    def identity(self):
        return (0,) * self.rank

    def letter_image(self, letter: Letter):
        return self._images[letter.code]

    def apply_letter(self, g, letter: Letter):
        img = self._images[letter.code]
        return tuple(a + b for a, b in zip(g, img))

    def inverse(self, g):
        return tuple(-x for x in g)

    def distance(self, g) -> int:
        if self._l1_exact:
            return sum(abs(x) for x in g)
        while g not in self._dist_cache:
            self._grow_bfs()
        return self._dist_cache[g]

    def _grow_bfs(self):
        # Extend the cached metric by one ring.  Non-basis images keep the
        # reachable set a sublattice; the cache stays modest for small radii.
        radius = self._bfs_radius
        frontier = [g for g, r in self._dist_cache.items() if r == radius]
        if not frontier:
            raise ConfigError("element not reachable from the letter images")
        for g in frontier:
            for code in range(2 * self.d):
                h = tuple(a + b for a, b in zip(g, self._images[code]))
                if h not in self._dist_cache:
                    self._dist_cache[h] = radius + 1
        self._bfs_radius = radius + 1


class FreeQuotient(QuotientGroup):
    """Quotient of F_d by the normal closure of a subset of the generators.

    Killed generators map to the identity; the survivors generate a free
    group whose elements are reduced code tuples.  ``kill=()`` gives the
    trivial kernel (G = F_d itself); killing everything gives the trivial
    group (N = F_d).
    """

    def __init__(self, d: int, kill: Sequence[int] = ()):
        if d < 1:
            raise ConfigError("rank must be >= 1")
        self.d = d
        self.kill = frozenset(int(k) for k in kill)
        if any(k < 1 or k > d for k in self.kill):
            raise ConfigError(f"killed generator index out of range 1..{d}")
        self.surviving = tuple(g for g in range(1, d + 1) if g not in self.kill)

    def identity(self):
        return ()

    def letter_image(self, letter: Letter):
        if letter.gen in self.kill:
            return ()
        return (letter.code,)

    def apply_letter(self, g, letter: Letter):
        if letter.gen in self.kill:
            return g
        code = letter.code
        if g and g[-1] == (code ^ 1):
            return g[:-1]
        return g + (code,)

    def inverse(self, g):
        return tuple((c ^ 1) for c in reversed(g))

    def distance(self, g) -> int:
        return len(g)

    def order(self) -> int | None:
        return 1 if not self.surviving else None

    def kernel_is_trivial(self) -> bool:
        return not self.kill

    def surviving_rank(self) -> int:
        return len(self.surviving)


# ---------------------------------------------------------------------------
# Balls and indexing
# ---------------------------------------------------------------------------

@dataclass
class Ball:
    """A word-metric ball around the identity with stable dense indexing.

    Elements are listed in breadth-first order, ties broken by generator
    code, so index 0 is the identity and indices are reproducible across
    runs.  ``letter_moves`` gives, per letter, the index map of right
    multiplication (-1 when the product leaves the ball).
    """

    group: QuotientGroup
    radius: int
    elements: list = field(repr=False)
    index: dict = field(repr=False)
    dist: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.elements)

    def sphere_sizes(self) -> list[int]:
        return [int(np.sum(self.dist == r)) for r in range(self.radius + 1)]

    def letter_moves(self) -> np.ndarray:
        """Array of shape (2d, |ball|): moves[c][i] = index of elem_i * Psi(letter c)."""
        G = self.group
        letters = alphabet(G.d)
        moves = np.full((len(letters), len(self)), -1, dtype=np.int64)
        for c, letter in enumerate(letters):
            col = moves[c]
            for i, g in enumerate(self.elements):
                h = G.apply_letter(g, letter)
                col[i] = self.index.get(h, -1)
        return moves

    def inverse_index(self) -> np.ndarray:
        """Index of each element's inverse (always inside the ball)."""
        G = self.group
        out = np.empty(len(self), dtype=np.int64)
        for i, g in enumerate(self.elements):
            out[i] = self.index[G.inverse(g)]
        return out


def ball(G: QuotientGroup, radius: int, cap: int = DEFAULT_BALL_CAP) -> Ball:
    """All elements at word-metric distance <= radius, BFS-indexed.

    For finite backends a radius at or beyond the diameter returns the whole
    group.  Raises ``CapExceededError`` before materializing more than
    ``cap`` elements.
    """
    if radius < 0:
        raise ConfigError("ball radius must be >= 0")
    letters = alphabet(G.d)
    e = G.identity()
    index = {e: 0}
    elements = [e]
    dist = [0]
    frontier = [e]
    for r in range(1, radius + 1):
        nxt = []
        for g in frontier:
            for letter in letters:
                h = G.apply_letter(g, letter)
                if h not in index:
                    if len(elements) >= cap:
                        raise CapExceededError(
                            f"ball of radius {radius} exceeds cap {cap} "
                            f"(stopped at radius {r})"
                        )
                    index[h] = len(elements)
                    elements.append(h)
                    dist.append(r)
                    nxt.append(h)
        if not nxt:
            break
        frontier = nxt
    return Ball(G, radius, elements, index, np.array(dist, dtype=np.int64))


def quotient_from_config(cfg: dict, d: int) -> QuotientGroup:
    """Build a quotient backend from its JSON description.

    Shapes: ``{"type": "finite_perm", "degree": n, "images": [[...], ...]}``,
    ``{"type": "abelianization", "rank": k, "images": [[...], ...]}``,
    ``{"type": "free_quotient", "kill": [indices]}``.
    """
    kind = cfg.get("type")
    if kind == "finite_perm":
        G = FinitePermQuotient(cfg["degree"], cfg["images"])
    elif kind == "abelianization":
        G = FreeAbelianQuotient(cfg["rank"], cfg["images"])
    elif kind == "free_quotient":
        G = FreeQuotient(d, cfg.get("kill", []))
    else:
        raise ConfigError(f"unknown quotient type: {kind!r}")
    if G.d != d:
        raise ConfigError(f"quotient has {G.d} generator images but the GDMS has rank {d}")
    return G
