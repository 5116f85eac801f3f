"""State probabilities, annuity and insurance present values, and the
physiological-age initialization from real ages."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .distributions import marginal_reps, minlife_rep
from .model import BlockGenerator, ModelParams
from .numerics import NumericalError, expm_action, expm_action_grid, resolvent_solve

__all__ = [
    "DiscountSpec",
    "StateProbabilities",
    "AgeDistribution",
    "state_probabilities",
    "state_probability_curves",
    "annuities",
    "insurances",
    "apv_table",
    "single_life_generator",
    "physiological_age_from_real_age",
]


@dataclass(frozen=True)
class DiscountSpec:
    """Annual effective interest rate and the matching force of interest."""

    annual_interest_rate: float
    delta: float = field(default=None)

    def __post_init__(self):
        if not self.annual_interest_rate > -1:
            raise ValueError(f"interest rate must exceed -1, got {self.annual_interest_rate}")
        if self.delta is None:
            object.__setattr__(self, "delta", math.log1p(self.annual_interest_rate))

    @classmethod
    def from_delta(cls, delta: float) -> DiscountSpec:
        try:
            rate = math.expm1(delta)
        except OverflowError:
            rate = math.inf
        return cls(annual_interest_rate=rate, delta=delta)


@dataclass(frozen=True)
class StateProbabilities:
    p00: float
    p_x: float
    p_y: float
    p01: float
    p02: float


def state_probabilities(gen: BlockGenerator, t: float) -> StateProbabilities:
    """Both alive, each alive, and exactly-one-alive probabilities at ``t``."""
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"t must be finite and >= 0, got {t}")
    v = expm_action(gen.Q, gen.pi, t, tol=1e-14)
    L = gen.layout
    p00 = float(v[L.joint_slice].sum())
    p01 = float(v[L.widower_slice].sum())
    p02 = float(v[L.widow_slice].sum())
    return StateProbabilities(p00=p00, p_x=p00 + p01, p_y=p00 + p02, p01=p01, p02=p02)


def state_probability_curves(gen: BlockGenerator, times) -> dict[str, np.ndarray]:
    """Vectorised :func:`state_probabilities` over a non-decreasing time grid."""
    V = expm_action_grid(gen.Q, gen.pi, times, tol=1e-14)
    L = gen.layout
    p00 = V[:, L.joint_slice].sum(axis=1)
    p01 = V[:, L.widower_slice].sum(axis=1)
    p02 = V[:, L.widow_slice].sum(axis=1)
    return {"p00": p00, "p01": p01, "p02": p02, "p_x": p00 + p01, "p_y": p00 + p02}


def _annuity(rep, delta: float) -> float:
    return float(rep.pi @ resolvent_solve(rep.Q, delta, np.ones(rep.dim)))


def annuities(gen: BlockGenerator, disc: DiscountSpec) -> dict[str, float]:
    """Continuous whole-life annuity values at force of interest ``disc.delta``.

    ``a_rev`` pays the wife after the husband's death.
    """
    delta = disc.delta
    if not delta > 0:
        raise ValueError(f"force of interest must be positive, got {delta}")
    rep_x, rep_y = marginal_reps(gen)
    a_joint = _annuity(minlife_rep(gen), delta)
    a_x = _annuity(rep_x, delta)
    a_y = _annuity(rep_y, delta)
    return {
        "a_joint": a_joint,
        "a_x": a_x,
        "a_y": a_y,
        "a_last": a_x + a_y - a_joint,
        "a_rev": a_y - a_joint,
    }


def insurances(gen: BlockGenerator, disc: DiscountSpec, annuity_values: dict | None = None) -> dict[str, float]:
    if annuity_values is None:
        annuity_values = annuities(gen, disc)
    d = disc.delta
    A_joint = 1.0 - d * annuity_values["a_joint"]
    A_x = 1.0 - d * annuity_values["a_x"]
    A_y = 1.0 - d * annuity_values["a_y"]
    return {"A_joint": A_joint, "A_x": A_x, "A_y": A_y, "A_last": A_x + A_y - A_joint}


APV_COLUMNS = ("rate", "a_joint", "a_x", "a_y", "a_last", "a_rev", "A_joint", "A_x", "A_y", "A_last")


def apv_table(gen: BlockGenerator, rates) -> list[dict[str, float]]:
    rows = []
    for rate in rates:
        disc = DiscountSpec(rate)
        a = annuities(gen, disc)
        rows.append({"rate": rate, **a, **insurances(gen, disc, a)})
    return rows


def single_life_generator(params: ModelParams, sex: str) -> sp.csr_matrix:
    """Aging chain of one life: states 1..n, aging at ``lambda_in``, death ``a + b k^c``."""
    if sex == "male":
        rate = params.male_rate
    elif sex == "female":
        rate = params.female_rate
    else:
        raise ValueError(f"sex must be 'male' or 'female', got {sex!r}")
    n = params.n
    k = np.arange(1, n + 1)
    aging = np.full(n, params.lambda_in)
    aging[-1] = 0.0
    diag = -(aging + rate(k))
    return sp.diags([diag, aging[:-1]], [0, 1], format="csr")


@dataclass(frozen=True)
class AgeDistribution:
    sex: str
    real_age: float
    probabilities: np.ndarray  # over physiological ages 1..n
    mean: float
    rounded_index: int


def physiological_age_from_real_age(params: ModelParams, sex: str, real_age: float) -> AgeDistribution:
    """Distribution of physiological age given survival to ``real_age``.

    Starts the single-life chain at physiological age 1 and conditions
    its state at ``real_age`` on being alive. ``rounded_index`` is the
    conditional mean rounded to the nearest integer.
    """
    if not math.isfinite(real_age) or real_age < 0:
        raise ValueError(f"real_age must be finite and >= 0, got {real_age}")
    Q = single_life_generator(params, sex)
    start = np.zeros(params.n)
    start[0] = 1.0
    v = expm_action(Q, start, real_age, tol=1e-15)
    v = np.clip(v, 0.0, None)
    mass = v.sum()
    if not mass > 1e-300:
        raise NumericalError(f"survival to real age {real_age} underflows ({mass:.3e})")
    probs = v / mass
    mean = float(probs @ np.arange(1, params.n + 1))
    return AgeDistribution(
        sex=sex,
        real_age=real_age,
        probabilities=probs,
        mean=mean,
        rounded_index=int(min(max(round(mean), 1), params.n)),
    )
