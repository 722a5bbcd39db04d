"""Constrained benchmark problem suite.

Fifteen constrained minimization problems from the structural-optimization
literature (the Ackley family is instantiated at 2, 6 and 10 dimensions,
giving 17 catalog entries).  Every evaluator is a pure function of
``(spec, x)``: same input, bitwise-identical output, safe to call from any
number of workers.

Constraint convention: ``g_i(x) <= 0`` means constraint ``i`` is satisfied;
a point is feasible iff ``max_i g_i(x) <= 0``.

Several published formulations are ambiguous or typo-ridden as printed.
Each problem is implemented verbatim by default; ``errata_mode="corrected"``
switches in the documented fixes (see ``ERRATA_NOTES``).  Only ``jlh1`` and
``pressure_vessel`` actually differ between the two modes; the remaining
ambiguities have a single computable reading, applied in both modes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFeasibleSetError, OutOfBoundsError

ERRATA_MODES = ("verbatim", "corrected")

#: Interpretation notes for formulas that are unusable exactly as printed.
#: Keys are problem ids; "both" entries apply in either errata mode.
ERRATA_NOTES = {
    "jlh1": "corrected mode flips the constraint sign to 0.5 - x1 - x2 <= 0; "
    "the verbatim constraint x1 + x2 + 0.5 <= 0 has an empty feasible "
    "set on [0,1]^2",
    "gkxwc2": "both: the objective's stray symbol y is read as x2",
    "pressure_vessel": "corrected mode uses the common literature sign for the "
    "volume constraint, -pi*R^2*L - 4/3*pi*R^3 + 1296000 <= 0",
    "welded_beam": "verbatim reads the five printed expressions as "
    "'expression <= 0', which leaves an empty feasible set (g2 and g5 "
    "jointly require t^2*b >= 16.8 and t^3*b <= 8.7808); corrected mode "
    "restores the standard directions h - b <= 0, 6000 - P_c <= 0 and "
    "delta - 0.25 <= 0 for g3..g5",
    "speed_reducer": "verbatim reads the unbound symbol B in g8 as b, giving "
    "5m/(b-1) - 1 <= 0, which no point in the box satisfies; corrected mode "
    "uses the standard form 5m/b - 1 <= 0",
    "heat_exchanger": "both: g3 is read as '... - 1 <= 0'; the printed g5 "
    "coefficient 125*x4 (1250*x4 in older statements of the problem) is "
    "kept as printed",
    "reinforced_concrete_beam_constraints": "verbatim keeps the printed "
    "constraints, under which no point in the box reaches the load "
    "requirement (max of A_s*h - 7.35*A_s^2/b over the box is about 108.7 "
    "< 180); corrected mode swaps b and h in both constraints, matching "
    "the original statement of the problem",
    "cantilever_beam": "both: segment lengths l_i = L/5 = 20 in the volume and "
    "stress terms, l = L = 100 in the deflection term, and the deflection "
    "denominators are the segment second moments of area I_i = w_i*h_i^3/12",
    "reinforced_concrete_beam": "both: the bar area A_s is kept continuous; "
    "its discrete value table is not printed",
}


@dataclass(frozen=True)
class DiscreteVar:
    """A coordinate restricted to an explicit grid of allowed values."""

    index: int
    values: tuple[float, ...]


@dataclass(frozen=True)
class ProblemSpec:
    """One constrained benchmark problem.

    ``bounds`` is a (d, 2) array of per-variable (lower, upper) in problem
    units.  ``discrete_vars`` lists coordinates that live on a grid; all
    other coordinates are continuous.
    """

    id: str
    dimension: int
    n_constraints: int
    bounds: np.ndarray
    discrete_vars: tuple[DiscreteVar, ...]
    errata_mode: str
    source: str
    variables: tuple[str, ...] = field(repr=False, default=())

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)
        assert b.shape == (self.dimension, 2)
        assert np.all(b[:, 0] < b[:, 1]), "lower < upper must hold per variable"
        assert self.n_constraints >= 1
        assert self.errata_mode in ERRATA_MODES
        for dv in self.discrete_vars:
            lo, hi = b[dv.index]
            vals = np.asarray(dv.values)
            assert np.all((vals >= lo) & (vals <= hi)), (
                f"{self.id}: discrete values of x[{dv.index}] leave the bounds"
            )

    @property
    def lower(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def upper(self) -> np.ndarray:
        return self.bounds[:, 1]

    def metadata(self) -> dict:
        """Exportable description: {id, d, G, bounds, discrete, errata_mode, source}."""
        return {
            "id": self.id,
            "d": self.dimension,
            "G": self.n_constraints,
            "bounds": [[float(lo), float(hi)] for lo, hi in self.bounds],
            "discrete": [
                {"index": dv.index, "values": [float(v) for v in dv.values]}
                for dv in self.discrete_vars
            ],
            "errata_mode": self.errata_mode,
            "source": self.source,
        }

    def metadata_json(self) -> str:
        return json.dumps(self.metadata())


@dataclass(frozen=True)
class EvalResult:
    """Objective value, full constraint vector, and the feasibility flag."""

    f: float
    g: np.ndarray
    feasible: bool


# ---------------------------------------------------------------------------
# evaluators
#
# Each returns (f, g) for a single point x (1-d float array, problem units).
# Constraints are always evaluated full-vector, no short-circuiting.
# ---------------------------------------------------------------------------


def _jlh1(x, mode):
    # 2-d sphere with one linear constraint; Jetton et al. (2023).
    f = x[0] ** 2 + x[1] ** 2
    if mode == "verbatim":
        g1 = x[0] + x[1] + 0.5
    else:
        g1 = 0.5 - x[0] - x[1]
    return f, np.array([g1])


def _jlh2(x, mode):
    f = math.cos(2.0 * x[0]) * math.cos(x[1]) + math.sin(x[0])
    g1 = 0.25 * (x[0] + 5.0) ** 2 + 0.01 * x[1] ** 2 - 1.0
    return f, np.array([g1])


def _gkxwc1(x, mode):
    f = math.cos(2.0 * x[0]) * math.cos(x[1]) + math.sin(x[0])
    g1 = math.cos(x[0]) * math.cos(x[1]) - math.sin(x[0]) * math.sin(x[1]) - 0.5
    return f, np.array([g1])


def _gkxwc2(x, mode):
    # Objective's second term is read as x2 in both modes (printed as "y").
    f = math.sin(x[0]) + x[1]
    g1 = math.sin(x[0]) * math.sin(x[1]) + 0.95
    return f, np.array([g1])


def _ackley(x, mode):
    d = x.shape[0]
    sq = float(np.dot(x, x))
    f = (
        -20.0 * math.exp(-0.2 * math.sqrt(sq / d))
        - math.exp(float(np.cos(2.0 * math.pi * x).sum()) / d)
        + 20.0
        + math.e
    )
    g1 = float(x.sum())
    g2 = math.sqrt(sq) - 5.0
    return f, np.array([g1, g2])


def _three_truss(x, mode):
    # Volume of a three-bar truss; L=100 cm, P=2 kN/cm^2, sigma=2 kN/cm^2.
    # Singular on the boundary slice x1=0 (zero cross-section).
    L, P, sigma = 100.0, 2.0, 2.0
    x1, x2 = x[0], x[1]
    f = (2.0 * math.sqrt(2.0) * x1 + x2) * L
    den = math.sqrt(2.0) * x1 ** 2 + 2.0 * x1 * x2
    g1 = (math.sqrt(2.0) * x1 + x2) * P / den - sigma
    g2 = x2 * P / den - sigma
    g3 = P / (x1 + math.sqrt(2.0) * x2) - sigma
    return f, np.array([g1, g2, g3])


def _reinforced_concrete_beam(x, mode):
    a_s, b, h = x[0], x[1], x[2]
    f = 29.4 * a_s + 0.6 * b * h
    if mode == "verbatim":
        g1 = h / b - 4.0
        g2 = 180.0 + 7.35 * a_s ** 2 / b - a_s * h
    else:
        g1 = b / h - 4.0
        g2 = 180.0 + 7.35 * a_s ** 2 / h - a_s * b
    return f, np.array([g1, g2])


def _compression_spring(x, mode):
    # x = (d, D, N): wire diameter, winding diameter, number of coils.
    d, D, N = x[0], x[1], x[2]
    f = (N + 2.0) * D * d ** 2
    g1 = 1.0 - D ** 3 * N / (71785.0 * d ** 4)
    g2 = (4.0 * D ** 2 - D * d) / (12566.0 * (D * d ** 3 - d ** 4)) + 1.0 / (
        5108.0 * d ** 2
    ) - 1.0
    g3 = 1.0 - 140.45 * d / (D ** 2 * N)
    g4 = (D + d) / 1.5 - 1.0
    return f, np.array([g1, g2, g3, g4])


def _pressure_vessel(x, mode):
    # x = (T_s, T_h, R, L); shell/head thickness on a 0.0625 in grid.
    ts, th, r, ell = x[0], x[1], x[2], x[3]
    f = (
        0.6224 * ts * r * ell
        + 1.7781 * th * r * r
        + 3.1661 * ts * ts * ell
        + 19.84 * ts * ts * r
    )
    g1 = -ts + 0.0193 * r
    g2 = -th + 0.00954 * r
    if mode == "verbatim":
        g3 = math.pi * r ** 2 * ell - 4.0 / 3.0 * math.pi * r ** 3 + 1296000.0
    else:
        g3 = -math.pi * r ** 2 * ell - 4.0 / 3.0 * math.pi * r ** 3 + 1296000.0
    g4 = ell - 240.0
    return f, np.array([g1, g2, g3, g4])


def _welded_beam(x, mode):
    # x = (h, l, t, b).  All five printed expressions are taken as <= 0.
    h, l, t, b = x[0], x[1], x[2], x[3]
    f = 1.10471 * h ** 2 * l + 0.04811 * t * b * (14.0 + l)
    tau_p = 6000.0 / (math.sqrt(2.0) * h * l)
    r_term = math.sqrt(0.25 * (l ** 2 + (h + t) ** 2))
    tau_pp = (
        6000.0
        * (14.0 + 0.5 * l)
        * r_term
        / (2.0 * (0.707 * h * l * (l ** 2 / 12.0 + 0.25 * (h + t) ** 2)))
    )
    tau = math.sqrt((tau_p ** 2 + tau_pp ** 2 + l * tau_p * tau_pp) / r_term)
    sigma = 504000.0 / (t ** 2 * b)
    p_c = 64746.0 * (1.0 - 0.0282346 * t) * t * b ** 3
    delta = 2.1952 / (t ** 3 * b)
    g1 = tau - 13600.0
    g2 = sigma - 30000.0
    if mode == "verbatim":
        g3 = b - h
        g4 = p_c - 6000.0
        g5 = 0.25 - delta
    else:
        g3 = h - b
        g4 = 6000.0 - p_c
        g5 = delta - 0.25
    return f, np.array([g1, g2, g3, g4, g5])


def _speed_reducer(x, mode):
    # x = (b, m, z, L1, L2, d1, d2); g8's unbound symbol B is read as b.
    b, m, z, l1, l2, d1, d2 = x
    f = (
        0.7854 * b * m ** 2 * (3.3333 * z ** 2 + 14.9334 * z - 43.0934)
        - 1.508 * b * (d1 ** 2 + d2 ** 2)
        + 7.4777 * (d1 ** 3 + d2 ** 3)
        + 0.7854 * (l1 * d1 ** 2 + l2 * d2 ** 2)
    )
    g1 = 27.0 / (b * m ** 2 * z) - 1.0
    g2 = 397.5 / (b * m ** 2 * z ** 2) - 1.0
    g3 = 1.93 * l1 ** 3 / (m * z * d1 ** 4) - 1.0
    g4 = 1.93 * l2 ** 3 / (m * z * d2 ** 4) - 1.0
    g5 = math.sqrt((745.0 * l1 / (m * z)) ** 2 + 1.69e6) / (110.0 * d1 ** 3) - 1.0
    g6 = math.sqrt((745.0 * l2 / (m * z)) ** 2 + 157.5e6) / (85.0 * d2 ** 3) - 1.0
    g7 = m * z / 40.0 - 1.0
    if mode == "verbatim":
        g8 = 5.0 * m / (b - 1.0) - 1.0
    else:
        g8 = 5.0 * m / b - 1.0
    g9 = b / (12.0 * m) - 1.0
    return f, np.array([g1, g2, g3, g4, g5, g6, g7, g8, g9])


def _heat_exchanger(x, mode):
    x1, x2, x3, x4, x5, x6, x7, x8 = x
    f = x1 + x2 + x3
    g1 = 0.0025 * (x4 + x6) - 1.0
    g2 = 0.0025 * (x5 + x7 - x4) - 1.0
    g3 = 0.01 * (x8 - x5) - 1.0
    g4 = 833.33252 * x4 + 100.0 * x1 - x1 * x6 - 83333.333
    g5 = 1250.0 * x5 + x2 * x4 - x2 * x7 - 125.0 * x4
    g6 = x3 * x5 - 2500.0 * x5 - x3 * x8 + 1250000.0
    return f, np.array([g1, g2, g3, g4, g5, g6])


_CANTILEVER_L_SEG = 20.0  # five equal segments of the 100-unit beam
_CANTILEVER_L = 100.0
_CANTILEVER_E = 2.0e7
_CANTILEVER_P = 50000.0


def _cantilever_beam(x, mode):
    # x[0:5] widths, x[5:10] heights of the five segments (root to tip).
    # Deflection denominators are I_i = w_i*h_i^3/12 with tip weight 1 and
    # root weight 61.
    w = x[0:5]
    h = x[5:10]
    P = _CANTILEVER_P
    ls = _CANTILEVER_L_SEG
    f = float(np.sum(w * h) * ls)
    g = np.empty(11)
    g[0] = 600.0 * P / (w[4] * h[4] ** 2) - 14000.0
    for k in range(1, 5):
        # g2..g5 use partial length sums 2*ls, 3*ls, 4*ls, 5*ls
        g[k] = 6.0 * P * ((k + 1) * ls) / (w[4 - k] * h[4 - k] ** 2) - 14000.0
    inertia = w * h ** 3 / 12.0
    coef = np.array([61.0, 37.0, 19.0, 7.0, 1.0])
    g[5] = (
        P * _CANTILEVER_L ** 3 / (3.0 * _CANTILEVER_E) * float(np.sum(coef / inertia))
        - 2.7
    )
    g[6:11] = h / w - 20.0
    return f, g


def _car_side_impact(x, mode):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10, x11 = x
    f = 1.98 + 4.90 * x1 + 6.67 * x2 + 6.98 * x3 + 4.01 * x4 + 1.78 * x5 + 2.73 * x7
    g1 = 1.16 - 0.3717 * x2 * x4 - 0.00931 * x2 * x10 - 0.484 * x3 * x9 + 0.01343 * x6 * x10 - 1.0
    g2 = (
        0.261
        - 0.0159 * x1 * x2
        - 0.188 * x1 * x8
        - 0.019 * x2 * x7
        + 0.0144 * x3 * x5
        + 0.0008757 * x5 * x10
        + 0.08045 * x6 * x9
        + 0.00139 * x8 * x11
        + 0.00001575 * x10 * x11
        - 0.9
    )
    g3 = (
        0.214
        + 0.00817 * x5
        - 0.131 * x1 * x8
        - 0.0704 * x1 * x9
        + 0.03099 * x2 * x6
        - 0.018 * x2 * x7
        + 0.0208 * x3 * x8
        + 0.121 * x3 * x9
        - 0.00364 * x5 * x6
        + 0.0007715 * x5 * x10
        - 0.0005354 * x6 * x10
        + 0.00121 * x8 * x11
        - 0.9
    )
    g4 = 0.74 - 0.061 * x2 - 0.163 * x3 * x8 + 0.001232 * x3 * x10 - 0.166 * x7 * x9 + 0.227 * x2 ** 2 - 0.9
    g5 = 28.98 + 3.818 * x3 - 4.2 * x1 * x2 + 0.0207 * x5 * x10 + 6.63 * x6 * x9 - 7.7 * x7 * x8 + 0.32 * x9 * x10 - 32.0
    g6 = (
        33.86
        + 2.95 * x3
        + 0.1792 * x10
        - 5.057 * x1 * x2
        - 11.0 * x2 * x8
        - 0.0215 * x5 * x10
        - 9.98 * x7 * x8
        + 22.0 * x8 * x9
        - 32.0
    )
    g7 = 46.36 - 9.9 * x2 - 12.9 * x1 * x8 + 0.1107 * x3 * x10 - 32.0
    g8 = 4.72 - 0.5 * x4 - 0.19 * x2 * x3 - 0.0122 * x4 * x10 + 0.009325 * x6 * x10 + 0.000191 * x11 ** 2 - 4.0
    g9 = 10.58 - 0.674 * x1 * x2 - 1.95 * x2 * x8 + 0.02054 * x3 * x10 - 0.0198 * x4 * x10 + 0.028 * x6 * x10 - 9.9
    g10 = 16.45 - 0.489 * x3 * x7 - 0.843 * x5 * x6 + 0.0432 * x9 * x10 - 0.0556 * x9 * x11 - 0.000786 * x11 ** 2 - 15.7
    return f, np.array([g1, g2, g3, g4, g5, g6, g7, g8, g9, g10])


def _keane_bump(x, mode):
    # Singular only at the origin corner (0/0); Keane (1994).
    d = x.shape[0]
    cos2 = np.cos(x) ** 2
    num = float(np.sum(cos2 ** 2) - 2.0 * np.prod(cos2))
    den = math.sqrt(float(np.sum(np.arange(1, d + 1) * x ** 2)))
    f = -abs(num / den)
    g1 = 0.75 - float(np.prod(x))
    g2 = float(np.sum(x)) - 7.5 * d
    return f, np.array([g1, g2])


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

_PV_THICKNESS = tuple(0.0625 * k for k in range(1, 100))
_RCB_WIDTHS = tuple(float(v) for v in range(28, 41))


@dataclass(frozen=True)
class _Entry:
    dimension: int
    n_constraints: int
    bounds: tuple
    evaluator: object
    source: str
    discrete: tuple = ()
    variables: tuple = ()


_CATALOG: dict[str, _Entry] = {
    "jlh1": _Entry(2, 1, ((0, 1),) * 2, _jlh1, "Jetton et al. (2023)"),
    "jlh2": _Entry(2, 1, ((-5, 0), (-5, 5)), _jlh2, "Jetton et al. (2023)"),
    "gkxwc1": _Entry(2, 1, ((0, 6),) * 2, _gkxwc1, "Gardner et al. (2014)"),
    "gkxwc2": _Entry(2, 1, ((0, 6),) * 2, _gkxwc2, "Gardner et al. (2014)"),
    "ackley2": _Entry(2, 2, ((-5, 10),) * 2, _ackley, "Eriksson & Poloczek (2021)"),
    "ackley6": _Entry(6, 2, ((-5, 10),) * 6, _ackley, "Eriksson & Poloczek (2021)"),
    "ackley10": _Entry(10, 2, ((-5, 10),) * 10, _ackley, "Eriksson & Poloczek (2021)"),
    "three_truss": _Entry(
        2, 3, ((0, 1),) * 2, _three_truss, "Yang & Gandomi (2012)",
        variables=("x1", "x2"),
    ),
    "reinforced_concrete_beam": _Entry(
        3,
        2,
        ((0.2, 15), (28, 40), (5, 10)),
        _reinforced_concrete_beam,
        "Gandomi, Yang & Alavi (2011)",
        discrete=(DiscreteVar(1, _RCB_WIDTHS),),
        variables=("A_s", "b", "h"),
    ),
    "compression_spring": _Entry(
        3,
        4,
        ((0.05, 1), (0.25, 1.3), (1.5, 2)),
        _compression_spring,
        "Gandomi, Yang & Alavi (2011)",
        variables=("d", "D", "N"),
    ),
    "pressure_vessel": _Entry(
        4,
        4,
        ((0.0625, 6.1875), (0.0625, 6.1875), (10, 200), (10, 200)),
        _pressure_vessel,
        "Sandgren (1990)",
        discrete=(DiscreteVar(0, _PV_THICKNESS), DiscreteVar(1, _PV_THICKNESS)),
        variables=("T_s", "T_h", "R", "L"),
    ),
    "welded_beam": _Entry(
        4,
        5,
        ((0.125, 10), (0.1, 15), (0.1, 10), (0.1, 10)),
        _welded_beam,
        "Gandomi, Yang & Alavi (2011)",
        variables=("h", "l", "t", "b"),
    ),
    "speed_reducer": _Entry(
        7,
        9,
        ((2.6, 3.6), (0.7, 0.8), (17, 28), (7.3, 8.3), (7.3, 8.3), (2.9, 3.9), (5, 5.5)),
        _speed_reducer,
        "Golinski (1973)",
        variables=("b", "m", "z", "L1", "L2", "d1", "d2"),
    ),
    "heat_exchanger": _Entry(
        8,
        6,
        ((1e2, 1e4), (1e3, 1e4), (1e3, 1e4)) + ((10, 1e3),) * 5,
        _heat_exchanger,
        "Yang & Gandomi (2012)",
    ),
    "cantilever_beam": _Entry(
        10,
        11,
        ((1, 5),) * 5 + ((30, 65),) * 5,
        _cantilever_beam,
        "Thanedar & Vanderplaats (1995)",
    ),
    "car_side_impact": _Entry(
        11,
        10,
        (
            (0.5, 1.5),
            (0.45, 1.35),
            (0.5, 1.5),
            (0.5, 1.5),
            (0.5, 1.5),
            (0.5, 1.5),
            (0.5, 1.5),
            (0.192, 0.345),
            (0.192, 0.345),
            (-20, 0),
            (-20, 0),
        ),
        _car_side_impact,
        "Gu et al. (2001)",
    ),
    "keane_bump18": _Entry(18, 2, ((0, 10),) * 18, _keane_bump, "Keane (1994)"),
}

PROBLEM_IDS = tuple(_CATALOG)


def spec(problem_id: str, errata_mode: str = "verbatim") -> ProblemSpec:
    """Look up one catalog entry."""
    if problem_id not in _CATALOG:
        raise KeyError(f"unknown problem id: {problem_id!r}")
    if errata_mode not in ERRATA_MODES:
        raise ValueError(f"errata_mode must be one of {ERRATA_MODES}")
    e = _CATALOG[problem_id]
    return ProblemSpec(
        id=problem_id,
        dimension=e.dimension,
        n_constraints=e.n_constraints,
        bounds=np.asarray(e.bounds, dtype=float),
        discrete_vars=e.discrete,
        errata_mode=errata_mode,
        source=e.source,
        variables=e.variables,
    )


def catalog(errata_mode: str = "verbatim") -> list[ProblemSpec]:
    """All 17 benchmark experiments under one errata mode."""
    return [spec(pid, errata_mode) for pid in PROBLEM_IDS]


def snap_discrete(problem: ProblemSpec, x_raw: np.ndarray) -> np.ndarray:
    """Replace each discrete coordinate with its nearest allowed value.

    Continuous coordinates pass through unchanged; idempotent.
    """
    x = np.array(x_raw, dtype=float)
    for dv in problem.discrete_vars:
        vals = np.asarray(dv.values)
        if x.ndim == 1:
            x[dv.index] = vals[np.argmin(np.abs(vals - x[dv.index]))]
        else:
            idx = np.argmin(np.abs(vals[None, :] - x[:, dv.index, None]), axis=1)
            x[:, dv.index] = vals[idx]
    return x


def _check_bounds(problem: ProblemSpec, x: np.ndarray) -> None:
    lo, hi = problem.lower, problem.upper
    slack = 1e-12 * (hi - lo)
    bad = np.where((x < lo - slack) | (x > hi + slack))[0]
    if bad.size:
        i = int(bad[0])
        raise OutOfBoundsError(
            f"{problem.id}: coordinate x[{i}]={x[i]!r} outside [{lo[i]}, {hi[i]}]"
        )


def evaluate(problem: ProblemSpec, x: np.ndarray) -> EvalResult:
    """Evaluate objective and all constraints at one in-bounds point.

    Expects discrete coordinates already snapped (see ``snap_discrete``);
    raises :class:`OutOfBoundsError` naming the first violating coordinate.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dimension,):
        raise ValueError(
            f"{problem.id}: expected a point of shape ({problem.dimension},), "
            f"got {x.shape}"
        )
    _check_bounds(problem, x)
    f, g = _CATALOG[problem.id].evaluator(x, problem.errata_mode)
    g = np.asarray(g, dtype=float)
    g.setflags(write=False)
    return EvalResult(f=float(f), g=g, feasible=bool(np.max(g) <= 0.0))


def evaluate_many(problem: ProblemSpec, X: np.ndarray):
    """Row-wise :func:`evaluate`; returns (f vector, g matrix, feasible mask)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    f = np.empty(n)
    g = np.empty((n, problem.n_constraints))
    for i in range(n):
        r = evaluate(problem, X[i])
        f[i] = r.f
        g[i] = r.g
    return f, g, np.max(g, axis=1) <= 0.0


# Feasible probe points found offline (rejection sampling over uniform
# points, plus slack maximization where the feasible region is too small
# for rejection to hit).  Values are problem units, discrete-snapped.
# None marks a formulation whose feasible set is empty.
_FEASIBLE_POINTS: dict[tuple[str, str], tuple | None] = {
    ("jlh1", "verbatim"): None,
    ("jlh1", "corrected"): (0.75, 0.75),
    ("jlh2", "both"): (-4.5, 0.5),
    ("gkxwc1", "both"): (2.0, 2.0),
    ("gkxwc2", "both"): (1.5707963267948966, 4.71238898038469),
    ("ackley2", "both"): (-0.5, -0.5),
    ("ackley6", "both"): (-0.5,) * 6,
    ("ackley10", "both"): (-0.5,) * 10,
    ("three_truss", "both"): (0.8, 0.5),
    ("reinforced_concrete_beam", "verbatim"): None,
    ("reinforced_concrete_beam", "corrected"): (7.0, 32.0, 8.5),
    ("compression_spring", "both"): (0.08, 1.2, 1.9),
    ("pressure_vessel", "verbatim"): (3.875, 1.9375, 199.0, 12.0),
    ("pressure_vessel", "corrected"): (1.0, 0.5, 50.0, 150.0),
    ("welded_beam", "verbatim"): None,
    ("welded_beam", "corrected"): (0.3, 3.0, 9.5, 0.35),
    ("speed_reducer", "verbatim"): None,
    ("speed_reducer", "corrected"): (3.55, 0.7, 17.0, 7.3, 7.72, 3.35, 5.35),
    ("heat_exchanger", "both"): (2000.0, 3000.0, 9500.0, 150.0, 200.0, 200.0, 300.0, 290.0),
    ("cantilever_beam", "both"): (3.25,) * 5 + (60.0,) * 5,
    ("car_side_impact", "both"): (
        1.4273, 0.8083, 1.4847, 1.4784, 1.1635, 1.3435, 0.7488,
        0.2948, 0.2641, -15.9605, -2.3137,
    ),
    ("keane_bump18", "both"): (2.0,) * 18,
}


def reference_feasible_point(problem: ProblemSpec) -> np.ndarray:
    """A stored point with ``evaluate(...).feasible == True``.

    Raises :class:`EmptyFeasibleSetError` for formulations whose feasible
    set is empty as printed (verbatim jlh1, reinforced_concrete_beam,
    welded_beam, speed_reducer).
    """
    key = (problem.id, problem.errata_mode)
    if key not in _FEASIBLE_POINTS:
        key = (problem.id, "both")
    point = _FEASIBLE_POINTS[key]
    if point is None:
        raise EmptyFeasibleSetError(
            f"{problem.id}: no feasible point in {problem.errata_mode} mode "
            "(empty feasible set)"
        )
    return np.asarray(point, dtype=float)
