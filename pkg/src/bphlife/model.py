"""Parameters, state-space layout and block generator of the couple model.

The transient states are laid out in five contiguous blocks::

    joint | widower bereaved | widower recovered | widow bereaved | widow recovered
     d0   |        d1        |        d1         |       d2       |       d2

Joint state ``l`` (1-based) is the physiological pair ``(i+l-1, j+l-1)``;
widower state ``l`` is husband age ``i+l-1`` and widow state ``l`` is wife
age ``j+l-1``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ParameterError",
    "ModelParams",
    "StateSpaceLayout",
    "BlockGenerator",
    "TABLE1",
    "validate_params",
    "build_layout",
    "assemble_generator",
    "build_model",
]

RATE_FIELDS = (
    "a_m", "b_m", "c_m", "a_f", "b_f", "c_f",
    "lambda_c", "lambda_", "lambda_in",
    "lambda_rm", "lambda_rf", "lambda_wm", "lambda_wf",
)


class ParameterError(ValueError):
    """Raised when model parameters violate their invariants.

    ``problems`` maps each offending field name to a message.
    """

    def __init__(self, problems: dict[str, str]):
        self.problems = dict(problems)
        detail = "; ".join(f"{k}: {v}" for k, v in self.problems.items())
        super().__init__(f"invalid model parameters ({detail})")


@dataclass(frozen=True)
class ModelParams:
    """Mortality, aging and bereavement parameters for one couple.

    Mortality at physiological age ``k`` is ``a + b * k**c`` per year.
    ``lambda_`` is the joint aging rate, ``lambda_in`` the single-life
    aging rate. ``i`` and ``j`` are the husband's and wife's physiological
    ages at issue.
    """

    a_m: float
    b_m: float
    c_m: float
    a_f: float
    b_f: float
    c_f: float
    lambda_c: float
    lambda_: float
    lambda_in: float
    lambda_rm: float
    lambda_rf: float
    lambda_wm: float
    lambda_wf: float
    n: int
    i: int = 1
    j: int = 1

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)

    def male_rate(self, k):
        return self.a_m + self.b_m * np.power(k, self.c_m, dtype=float)

    def female_rate(self, k):
        return self.a_f + self.b_f * np.power(k, self.c_f, dtype=float)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


# Example parameter set used throughout the numerical illustration.
TABLE1 = ModelParams(
    a_f=9.0987e-04, b_f=1.8872e-15, c_f=6.0,
    a_m=9.0987e-04, b_m=1.8872e-15, c_m=6.5,
    lambda_c=0.0002, lambda_in=2.3707, lambda_=2.2,
    lambda_rf=5.0, lambda_rm=10.0, lambda_wf=4.0, lambda_wm=6.0,
    n=200, i=1, j=1,
)


def validate_params(p: ModelParams) -> ModelParams:
    """Check every parameter invariant and return ``p`` unchanged.

    All violations are collected and reported together in a single
    :class:`ParameterError`. Bereavement multipliers below one only warn.
    """
    problems: dict[str, str] = {}
    for name in RATE_FIELDS:
        value = getattr(p, name)
        if not isinstance(value, (int, float, np.integer, np.floating)) or isinstance(value, bool):
            problems[name] = f"must be a number, got {value!r}"
        elif not math.isfinite(value):
            problems[name] = f"must be finite, got {value!r}"
        elif value < 0:
            problems[name] = f"must be >= 0, got {value!r}"

    n_ok = isinstance(p.n, (int, np.integer)) and not isinstance(p.n, bool) and p.n >= 1
    if not n_ok:
        problems["n"] = f"must be an integer >= 1, got {p.n!r}"
    for name in ("i", "j"):
        value = getattr(p, name)
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            problems[name] = f"must be an integer, got {value!r}"
        elif value < 1 or (n_ok and value > p.n):
            problems[name] = f"must lie in [1, n={p.n}], got {value!r}"
    if problems:
        raise ParameterError(problems)

    for name in ("lambda_wm", "lambda_wf"):
        if getattr(p, name) < 1:
            warnings.warn(
                f"{name}={getattr(p, name)} < 1 lowers mortality after bereavement",
                stacklevel=2,
            )
    return p


@dataclass(frozen=True)
class StateSpaceLayout:
    """Index maps between block labels and flat (0-based) state indices.

    The maps take the 1-based within-block position ``l`` used by the
    generator equations and return the 0-based flat index.
    """

    d0: int
    d1: int
    d2: int
    i: int
    j: int
    n: int

    BLOCKS = ("joint", "widower_bereaved", "widower_recovered", "widow_bereaved", "widow_recovered")

    @property
    def dim(self) -> int:
        return self.d0 + 2 * self.d1 + 2 * self.d2

    @cached_property
    def offsets(self) -> dict[str, int]:
        sizes = (self.d0, self.d1, self.d1, self.d2, self.d2)
        return dict(zip(self.BLOCKS, np.cumsum((0,) + sizes[:-1]).tolist()))

    def block_size(self, block: str) -> int:
        return {"joint": self.d0, "widower_bereaved": self.d1, "widower_recovered": self.d1,
                "widow_bereaved": self.d2, "widow_recovered": self.d2}[block]

    def index(self, block: str, l: int) -> int:
        if not 1 <= l <= self.block_size(block):
            raise IndexError(f"{block} position {l} outside [1, {self.block_size(block)}]")
        return self.offsets[block] + l - 1

    def joint(self, l: int) -> int:
        return self.index("joint", l)

    def widower_bereaved(self, l: int) -> int:
        return self.index("widower_bereaved", l)

    def widower_recovered(self, l: int) -> int:
        return self.index("widower_recovered", l)

    def widow_bereaved(self, l: int) -> int:
        return self.index("widow_bereaved", l)

    def widow_recovered(self, l: int) -> int:
        return self.index("widow_recovered", l)

    def label(self, flat: int) -> tuple[str, int]:
        """Inverse map: flat index to ``(block, l)``."""
        if not 0 <= flat < self.dim:
            raise IndexError(f"flat index {flat} outside [0, {self.dim})")
        for block in reversed(self.BLOCKS):
            if flat >= self.offsets[block]:
                return block, flat - self.offsets[block] + 1
        raise AssertionError("unreachable")

    def ages(self, flat: int) -> tuple[int | None, int | None]:
        """Physiological (husband, wife) ages of a state; ``None`` for the dead spouse."""
        block, l = self.label(flat)
        if block == "joint":
            return self.i + l - 1, self.j + l - 1
        if block.startswith("widower"):
            return self.i + l - 1, None
        return None, self.j + l - 1

    # Slices over the three macro states.
    @property
    def joint_slice(self) -> slice:
        return slice(0, self.d0)

    @property
    def widower_slice(self) -> slice:
        return slice(self.d0, self.d0 + 2 * self.d1)

    @property
    def widow_slice(self) -> slice:
        return slice(self.d0 + 2 * self.d1, self.dim)


def build_layout(p: ModelParams) -> StateSpaceLayout:
    return StateSpaceLayout(
        d0=p.n - max(p.i, p.j) + 1,
        d1=p.n - p.i + 1,
        d2=p.n - p.j + 1,
        i=p.i, j=p.j, n=p.n,
    )


@dataclass(frozen=True, eq=False)
class BlockGenerator:
    """Assembled sub-intensity matrix with its exit vector, start vector and masks.

    ``g1`` is 1 on states where the wife is alive (joint and widow blocks),
    ``g2`` is 1 where the husband is alive (joint and widower blocks). They
    are stored as 0/1 vectors; the diagonal matrices are ``diag(g1)`` etc.
    """

    params: ModelParams
    layout: StateSpaceLayout
    Q: sp.csr_matrix
    q: np.ndarray
    pi: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    @property
    def dim(self) -> int:
        return self.layout.dim

    def block(self, rows: str, cols: str) -> sp.csr_matrix:
        """Sub-block of ``Q`` between macro states ``joint``, ``widower``, ``widow``."""
        sl = {"joint": self.layout.joint_slice, "widower": self.layout.widower_slice,
              "widow": self.layout.widow_slice}
        return self.Q[sl[rows], sl[cols]]

    @cached_property
    def Q0(self):
        return self.block("joint", "joint")

    @cached_property
    def Q01(self):
        return self.block("joint", "widower")

    @cached_property
    def Q02(self):
        return self.block("joint", "widow")

    @cached_property
    def Q1(self):
        return self.block("widower", "widower")

    @cached_property
    def Q2(self):
        return self.block("widow", "widow")

    @property
    def pi0(self) -> np.ndarray:
        return self.pi[self.layout.joint_slice]


def _check_generator(Q: sp.csr_matrix, q: np.ndarray, layout: StateSpaceLayout) -> None:
    coo = Q.tocoo()
    off = coo.row != coo.col
    if np.any(coo.data[off] < 0):
        raise ValueError("generator has a negative off-diagonal entry")
    if np.any(Q.diagonal() > 0):
        raise ValueError("generator has a positive diagonal entry")
    if np.any(q < -1e-12 * max(1.0, np.abs(Q.diagonal()).max())):
        raise ValueError(f"positive row sum in generator (max {-q.min():.3e})")
    # Upper block triangular: nothing leaves widow(er) blocks except within themselves.
    block_of = np.empty(layout.dim, dtype=int)
    block_of[layout.joint_slice] = 0
    block_of[layout.widower_slice] = 1
    block_of[layout.widow_slice] = 2
    src, dst = block_of[coo.row], block_of[coo.col]
    if np.any((src > 0) & (src != dst)):
        raise ValueError("generator is not upper block triangular")


def assemble_generator(p: ModelParams, layout: StateSpaceLayout | None = None) -> BlockGenerator:
    """Fill the sub-intensity matrix block by block.

    Single deaths from the joint block and recovery from bereavement both
    land one physiological age higher (target position ``l+1``). With
    ``i == j`` the top joint state carries both death rates and sends them
    to the top bereavement states, since no higher age exists.
    """
    if layout is None:
        layout = build_layout(p)
    i, j, n = p.i, p.j, p.n
    d0, d1, d2 = layout.d0, layout.d1, layout.d2
    m, f = p.male_rate, p.female_rate
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    def put(r: int, c: int, v: float) -> None:
        rows.append(r)
        cols.append(c)
        vals.append(float(v))

    L = layout
    for l in range(1, d0 + 1):
        r = L.joint(l)
        if l < d0:
            wife_death, husband_death = f(j + l - 1), m(i + l - 1)
            put(r, r, -(p.lambda_c + wife_death + husband_death + p.lambda_))
            put(r, L.joint(l + 1), p.lambda_)
            put(r, L.widower_bereaved(l + 1), wife_death)
            put(r, L.widow_bereaved(l + 1), husband_death)
        elif i < j:
            # wife has reached n; husband has no death channel here
            put(r, r, -(p.lambda_c + f(j + d0 - 1)))
            put(r, L.widower_bereaved(d0 + 1), f(n))
        elif i > j:
            put(r, r, -(p.lambda_c + m(i + d0 - 1)))
            put(r, L.widow_bereaved(d0 + 1), m(n))
        else:
            put(r, r, -(p.lambda_c + f(n) + m(n)))
            put(r, L.widower_bereaved(d1), f(n))
            put(r, L.widow_bereaved(d2), m(n))

    def survivor_block(d, base, rate, recovery, multiplier, bereaved, recovered):
        for l in range(1, d + 1):
            b, s = bereaved(l), recovered(l)
            death = rate(base + l - 1)
            if l < d:
                put(b, b, -(recovery + p.lambda_in + multiplier * death))
                put(b, bereaved(l + 1), p.lambda_in)
                put(b, recovered(l + 1), recovery)
                put(s, s, -(p.lambda_in + death))
                put(s, recovered(l + 1), p.lambda_in)
            else:
                put(b, b, -multiplier * rate(n))
                put(s, s, -rate(n))

    survivor_block(d1, i, m, p.lambda_rm, p.lambda_wm, L.widower_bereaved, L.widower_recovered)
    survivor_block(d2, j, f, p.lambda_rf, p.lambda_wf, L.widow_bereaved, L.widow_recovered)

    Q = sp.csr_matrix((vals, (rows, cols)), shape=(L.dim, L.dim))
    Q.sum_duplicates()
    Q.eliminate_zeros()
    q = -np.asarray(Q.sum(axis=1)).ravel()
    # tiny negative values are round-off in the row sum
    q[(q < 0) & (q > -1e-12)] = 0.0
    _check_generator(Q, q, L)

    pi = np.zeros(L.dim)
    pi[L.joint(1)] = 1.0
    g1 = np.zeros(L.dim)
    g1[L.joint_slice] = 1.0
    g1[L.widow_slice] = 1.0
    g2 = np.zeros(L.dim)
    g2[L.joint_slice] = 1.0
    g2[L.widower_slice] = 1.0
    for arr in (q, pi, g1, g2):
        arr.setflags(write=False)
    return BlockGenerator(params=p, layout=L, Q=Q, q=q, pi=pi, g1=g1, g2=g2)


def build_model(p: ModelParams) -> BlockGenerator:
    """Validate, lay out and assemble in one call."""
    p = validate_params(p)
    return assemble_generator(p, build_layout(p))
