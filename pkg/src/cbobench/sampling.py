"""Latin-hypercube initial designs and per-iteration candidate pools.

Every sampler here is a pure function of its integer inputs: streams come
from a counter-based PRNG (Philox) keyed by a hash of the call's purpose,
so designs drawn concurrently in different worker processes can never
collide or share state.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass

import numpy as np

from .problems import ProblemSpec, snap_discrete

SCHEMES = ("lhs", "sobol_like_quasirandom", "uniform")


def derive_seed(*key_parts) -> int:
    """A stable 63-bit integer from the given parts (order-sensitive)."""
    tag = "|".join(str(p) for p in key_parts).encode()
    digest = hashlib.blake2b(tag, digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def stream(*key_parts) -> np.random.Generator:
    """A Philox generator keyed by a stable hash of the given parts.

    Distinct part tuples give statistically independent streams; the same
    tuple always gives the same stream.
    """
    tag = "|".join(str(p) for p in key_parts).encode()
    digest = hashlib.blake2b(tag, digest_size=16).digest()
    key = int.from_bytes(digest, "little")
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class UnitDesign:
    """n points in the unit cube [0,1]^d plus the recipe that produced them."""

    points: np.ndarray
    seed: int
    scheme: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        assert pts.ndim == 2
        assert self.scheme in SCHEMES
        assert np.all((pts >= 0.0) & (pts <= 1.0))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class CandidatePool:
    """m candidate points in problem units, discrete-snapped, one iteration."""

    points: np.ndarray
    iteration: int
    seed: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        assert pts.ndim == 2 and pts.shape[0] >= 1


def latin_hypercube(n: int, d: int, seed: int) -> UnitDesign:
    """Stratified design: each column has exactly one point per stratum.

    Strata are [k/n, (k+1)/n); positions within a stratum are uniform and
    each column is permuted independently.
    """
    if n < 1 or d < 1:
        raise ValueError(f"latin_hypercube needs n >= 1 and d >= 1, got n={n}, d={d}")
    rng = stream("lhs", n, d, seed)
    u = (np.arange(n)[:, None] + rng.random((n, d))) / n
    for j in range(d):
        u[:, j] = u[rng.permutation(n), j]
    # guard the half-open upper edge against fp roundup
    u = np.clip(u, 0.0, np.nextafter(1.0, 0.0))
    return UnitDesign(points=u, seed=seed, scheme="lhs")


def uniform(n: int, d: int, seed: int) -> UnitDesign:
    if n < 1 or d < 1:
        raise ValueError(f"uniform needs n >= 1 and d >= 1, got n={n}, d={d}")
    rng = stream("uniform", n, d, seed)
    return UnitDesign(points=rng.random((n, d)), seed=seed, scheme="uniform")


def quasirandom(n: int, d: int, seed: int) -> UnitDesign:
    """Scrambled Sobol points (deterministic under seed)."""
    if n < 1 or d < 1:
        raise ValueError(f"quasirandom needs n >= 1 and d >= 1, got n={n}, d={d}")
    from scipy.stats import qmc

    sob = qmc.Sobol(d=d, scramble=True, seed=derive_seed("sobol", n, d, seed))
    return UnitDesign(
        points=sob.random(n), seed=seed, scheme="sobol_like_quasirandom"
    )


def scale_to_bounds(design: UnitDesign, problem: ProblemSpec) -> np.ndarray:
    """Affine map of a unit design into problem units, then discrete snap."""
    if design.d != problem.dimension:
        raise ValueError(
            f"design is {design.d}-dimensional but {problem.id} has "
            f"d={problem.dimension}"
        )
    x = problem.lower + design.points * (problem.upper - problem.lower)
    return snap_discrete(problem, x)


def candidate_pool(
    problem: ProblemSpec, m: int, seed: int, iteration: int
) -> CandidatePool:
    """Uniform in-bounds candidates for one iteration's acquisition argmax.

    The stream is keyed by (problem, seed, iteration): the same triple
    always reproduces the pool, and consecutive iterations never reuse one.
    """
    if m < 1:
        raise ValueError(f"candidate_pool needs m >= 1, got m={m}")
    rng = stream("pool", problem.id, seed, iteration)
    u = rng.random((m, problem.dimension))
    x = problem.lower + u * (problem.upper - problem.lower)
    return CandidatePool(
        points=snap_discrete(problem, x), iteration=iteration, seed=seed
    )


def to_csv(points: np.ndarray) -> str:
    """Row-major CSV with header x1..xd, for trial reproducibility audits."""
    points = np.asarray(points, dtype=float)
    buf = io.StringIO()
    buf.write(",".join(f"x{j + 1}" for j in range(points.shape[1])) + "\n")
    for row in points:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()
