"""Simple random walks on Cayley balls and the Kesten amenability criterion.

The Cayley graph of a quotient G uses the distinct non-identity letter
images as its (symmetric) generating set; the simple random walk moves to a
uniformly random neighbor.  The walk's spectral radius equals 1 exactly when
the group is amenable, which provides an independent cross-check of the
skew-operator dichotomy.

Infinite groups are truncated to word-metric balls with Dirichlet boundary
(transitions leaving the ball are dropped), giving spectral radii that are
nondecreasing in the radius and converge to the true value from below at a
1/R^2 rate.  Free quotients of rank >= 2 have regular-tree Cayley graphs
whose truncated Perron vector is radial, so their ladder is computed exactly
from the radial reduction; the closed-form limit sqrt(2k-1)/k serves as the
test target.

The isoperimetric scan reports boundary-to-volume ratios of nested balls; it
is a Folner-style diagnostic only, since finite balls cannot decide
amenability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .groups import Ball, FreeQuotient, QuotientGroup, alphabet, ball
from .kernel import DEFAULT_BALL_CAP
from .linalg import perron_value, perron_value_dense, richardson_r2_extrapolate

PLATEAU_TOL = 1e-3


@dataclass
class CayleyBallGraph:
    """A Cayley ball with symmetric adjacency and a full-graph degree bound.

    Degrees inside the ball are at most the number of distinct non-identity
    letter images; interior vertices attain it.
    """

    ball: Ball
    adjacency: sp.csr_matrix
    degree: int

    @property
    def n_vertices(self) -> int:
        return len(self.ball)

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    def transition_matrix(self) -> sp.csr_matrix:
        """Row-substochastic Dirichlet walk matrix A / degree."""
        if self.degree == 0:
            raise ConfigError("trivial group has no Cayley edges")
        return self.adjacency / float(self.degree)


def cayley_ball(
    G: QuotientGroup, R: int, ball_cap: int = DEFAULT_BALL_CAP
) -> CayleyBallGraph:
    """Materialize the radius-R Cayley ball of G.

    Edges join elements differing by one distinct non-identity generator
    image; duplicate images (several letters with the same image) contribute
    a single edge.
    """
    B = ball(G, R, ball_cap)
    moves = B.letter_moves()
    e = G.identity()
    image_codes = []
    seen = set()
    for letter in alphabet(G.d):
        img = G.letter_image(letter)
        if img == e or img in seen:
            continue
        seen.add(img)
        image_codes.append(letter.code)
    n = len(B)
    pairs = []
    for c in image_codes:
        mv = moves[c]
        src = np.flatnonzero(mv >= 0)
        pairs.append(src.astype(np.int64) * n + mv[src])
    if pairs:
        keys = np.unique(np.concatenate(pairs))
        rows, cols = keys // n, keys % n
        # letter images come in inverse pairs, so the key set is symmetric
        adj = sp.csr_matrix(
            (np.ones(len(keys)), (rows, cols)), shape=(n, n)
        )
    else:
        adj = sp.csr_matrix((n, n))
    return CayleyBallGraph(B, adj, len(image_codes))


def _tree_radial_rho(k: int, R: int, tol: float) -> float:
    """Dirichlet spectral radius of the 2k-regular tree ball, radialized.

    The truncated walk commutes with the sphere-transitive automorphisms, so
    its Perron vector is radial and the (R+1)-state radial chain has the
    same Perron value.
    """
    if R == 0:
        return 0.0
    deg = 2 * k
    m = np.zeros((R + 1, R + 1))
    m[0, 1] = 1.0
    for r in range(1, R):
        m[r, r - 1] = 1.0 / deg
        m[r, r + 1] = (deg - 1) / deg
    m[R, R - 1] = 1.0 / deg
    return perron_value_dense(m, tol=tol).value


@dataclass(frozen=True)
class WalkLadder:
    """Dirichlet walk spectral radii per radius with a limit estimate.

    ``final_estimate`` extrapolates the 1/R^2 truncation tail from the last
    two rungs; ``plateau`` records whether the ladder had stopped moving at
    the plateau tolerance.
    """

    radii: tuple[int, ...]
    rho: tuple[float, ...]
    final_estimate: float
    plateau: bool
    degree: int
    method: str


def srw_spectral_radius(
    G: QuotientGroup,
    R_list: Sequence[int],
    ball_cap: int = DEFAULT_BALL_CAP,
    tol: float = 1e-11,
) -> WalkLadder:
    """Spectral-radius ladder of the simple random walk on Cayley balls."""
    if not R_list:
        raise ConfigError("need at least one radius")
    radii = tuple(sorted(int(r) for r in R_list))
    tree_rank = (
        G.surviving_rank()
        if isinstance(G, FreeQuotient) and G.surviving_rank() >= 2
        else None
    )
    rho_vals: list[float] = []
    if tree_rank is not None:
        method = "tree-radial"
        degree = 2 * tree_rank
        for R in radii:
            rho_vals.append(_tree_radial_rho(tree_rank, R, tol))
    else:
        method = "generic"
        degree = 0
        for R in radii:
            graph = cayley_ball(G, R, ball_cap)
            degree = graph.degree
            p = graph.transition_matrix()
            rho_vals.append(
                perron_value(lambda v: p @ v, graph.n_vertices, tol=tol).value
            )
    increasing = all(b >= a - 1e-10 for a, b in zip(rho_vals, rho_vals[1:]))
    if len(rho_vals) >= 2 and increasing and rho_vals[-1] > rho_vals[-2]:
        final = min(richardson_r2_extrapolate(radii, rho_vals), 1.0)
    else:
        final = rho_vals[-1]
    plateau = False
    prev = [r for r in radii[:-1] if r <= radii[-1] - 2]
    if prev:
        plateau = abs(rho_vals[-1] - rho_vals[radii.index(max(prev))]) < PLATEAU_TOL
    return WalkLadder(radii, tuple(rho_vals), float(final), plateau, degree, method)


@dataclass(frozen=True)
class IsoperimetricReport:
    """Boundary-to-volume ratios |dB_r| / |B_r| of nested balls.

    A Folner-style diagnostic: ratios tending to zero are consistent with
    amenability, bounded-below ratios with expansion, but finite balls alone
    decide neither.
    """

    radii: tuple[int, ...]
    ratios: tuple[float, ...]
    min_ratio: float


def isoperimetric_scan(
    G: QuotientGroup, R: int, ball_cap: int = DEFAULT_BALL_CAP
) -> IsoperimetricReport:
    """Scan |dA|/|A| over the balls A = B(id, r) for r = 1..R."""
    if R < 1:
        raise ConfigError("radius must be >= 1")
    B = ball(G, R + 1, ball_cap)
    moves = B.letter_moves()
    e = G.identity()
    image_codes = []
    seen = set()
    for letter in alphabet(G.d):
        img = G.letter_image(letter)
        if img == e or img in seen:
            continue
        seen.add(img)
        image_codes.append(letter.code)
    dist = B.dist
    ratios = []
    for r in range(1, R + 1):
        volume = int(np.sum(dist <= r))
        on_sphere = np.flatnonzero(dist == r)
        boundary = 0
        for i in on_sphere:
            out = False
            for c in image_codes:
                j = moves[c][i]
                if j < 0 or dist[j] == r + 1:
                    out = True
                    break
            if out:
                boundary += 1
        ratios.append(boundary / volume)
    return IsoperimetricReport(
        tuple(range(1, R + 1)), tuple(ratios), float(min(ratios))
    )
