"""Phase-type functionals of the couple model.

Throughout, ``T_x`` is the husband's remaining lifetime (first hitting
time of the husband-dead states) and ``T_y`` the wife's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import BlockGenerator
from .numerics import expm_action, resolvent_solve

__all__ = [
    "PhaseTypeRep",
    "marginal_reps",
    "minlife_rep",
    "ph_survival",
    "ph_density",
    "ph_mean",
    "bph_survival",
    "bph_density",
    "singular_mass",
    "conditional_hazard",
    "conditional_survival",
]

TOL = 1e-14


@dataclass(frozen=True, eq=False)
class PhaseTypeRep:
    """Univariate phase-type law ``(pi, Q)`` with exit vector ``q = -Q 1``."""

    pi: np.ndarray
    Q: sp.csr_matrix

    @property
    def q(self) -> np.ndarray:
        return -np.asarray(self.Q.sum(axis=1)).ravel()

    @property
    def dim(self) -> int:
        return self.Q.shape[0]


def _check_time(*ts: float) -> None:
    for t in ts:
        if not math.isfinite(t) or t < 0:
            raise ValueError(f"times must be finite and >= 0, got {t}")


def marginal_reps(gen: BlockGenerator) -> tuple[PhaseTypeRep, PhaseTypeRep]:
    """Husband and wife lifetime laws.

    The husband is alive in the joint and widower blocks, so his
    representation keeps ``[[Q0, Q01], [0, Q1]]``; the wife's keeps the
    joint and widow blocks.
    """
    L = gen.layout
    husband = np.r_[np.arange(L.d0), np.arange(L.widower_slice.start, L.widower_slice.stop)]
    wife = np.r_[np.arange(L.d0), np.arange(L.widow_slice.start, L.widow_slice.stop)]
    reps = []
    for idx in (husband, wife):
        Q = gen.Q[idx][:, idx].tocsr()
        reps.append(PhaseTypeRep(pi=gen.pi[idx].copy(), Q=Q))
    return reps[0], reps[1]


def minlife_rep(gen: BlockGenerator) -> PhaseTypeRep:
    """Law of ``min(T_x, T_y)``, the failure time of the joint status."""
    return PhaseTypeRep(pi=gen.pi0.copy(), Q=gen.Q0.tocsr())


def ph_survival(rep: PhaseTypeRep, t: float) -> float:
    _check_time(t)
    return float(expm_action(rep.Q, rep.pi, t, tol=TOL).sum())


def ph_density(rep: PhaseTypeRep, t: float) -> float:
    _check_time(t)
    return float(expm_action(rep.Q, rep.pi, t, tol=TOL) @ rep.q)


def ph_mean(rep: PhaseTypeRep) -> float:
    return float(rep.pi @ resolvent_solve(rep.Q, 0.0, np.ones(rep.dim)))


def bph_survival(gen: BlockGenerator, t_x: float, t_y: float) -> float:
    """``P(T_x > t_x, T_y > t_y)``.

    Runs the chain to the earlier deadline, keeps only states where that
    spouse is still alive, then runs on to the later deadline and applies
    the other spouse's mask.
    """
    _check_time(t_x, t_y)
    first, second = (gen.g2, gen.g1) if t_x <= t_y else (gen.g1, gen.g2)
    s, u = min(t_x, t_y), max(t_x, t_y)
    v = expm_action(gen.Q, gen.pi, s, tol=TOL) * first
    v = expm_action(gen.Q, v, u - s, tol=TOL)
    return float(v @ second)


def _switch_kernel(gen: BlockGenerator, mask: np.ndarray) -> sp.csr_matrix:
    """Rates from states with ``mask == 1`` to states with ``mask == 0``."""
    return (sp.diags(mask) @ gen.Q @ sp.diags(1.0 - mask)).tocsr()


def bph_density(gen: BlockGenerator, t_x: float, t_y: float) -> float:
    """Density of the absolutely continuous part at ``(t_x, t_y)``, ``t_x != t_y``.

    For ``t_y < t_x`` the wife dies first: the chain jumps from a
    wife-alive state into the widower block at ``t_y`` and the husband then
    exits to absorption at ``t_x``. The exit intensity of the surviving
    husband is ``-Q g2 1``.
    """
    _check_time(t_x, t_y)
    if t_x == t_y:
        raise ValueError("density is undefined on the diagonal; use singular_mass")
    if t_x <= 0 or t_y <= 0:
        raise ValueError("density requires strictly positive times")
    if t_y < t_x:
        first, second, s, u = gen.g1, gen.g2, t_y, t_x
    else:
        first, second, s, u = gen.g2, gen.g1, t_x, t_y
    exit_rate = -(gen.Q @ second)
    v = expm_action(gen.Q, gen.pi, s, tol=TOL)
    v = _switch_kernel(gen, first).T @ v
    v = expm_action(gen.Q, v, u - s, tol=TOL)
    return float(v @ exit_rate)


def singular_mass(gen: BlockGenerator, t: float = 0.0) -> float:
    """``P(T_x = T_y > t)``: absorption straight from the joint block after ``t``."""
    _check_time(t)
    joint_exit = gen.g1 * gen.g2 * gen.q
    # (-Q)^{-1} applied to the joint exit rates: probability of eventually
    # being absorbed through the common-shock channel from each state
    h = resolvent_solve(gen.Q, 0.0, joint_exit)
    v = expm_action(gen.Q, gen.pi, t, tol=TOL)
    return float(v @ h)


def _survivor_start(gen: BlockGenerator, survivor: str, t_death: float):
    if survivor == "husband":
        cross, Qs = gen.Q01, gen.Q1
    elif survivor == "wife":
        cross, Qs = gen.Q02, gen.Q2
    else:
        raise ValueError(f"survivor must be 'husband' or 'wife', got {survivor!r}")
    w = expm_action(gen.Q0, gen.pi0, t_death, tol=TOL)
    w = cross.T @ w
    return w, Qs


def conditional_survival(gen: BlockGenerator, survivor: str, t_death: float, t: float) -> float:
    """``P(T_survivor > t | T_partner = t_death)`` for ``t >= t_death``."""
    _check_time(t_death, t)
    if t < t_death:
        raise ValueError("t must not precede t_death")
    w, Qs = _survivor_start(gen, survivor, t_death)
    total = w.sum()
    if total <= 0:
        raise ZeroDivisionError(f"partner death at {t_death} has zero density")
    return float(expm_action(Qs, w / total, t - t_death, tol=TOL).sum())


def conditional_hazard(gen: BlockGenerator, survivor: str, t_death: float, t: float) -> float:
    """Force of mortality of the surviving spouse at ``t`` given the partner died at ``t_death``.

    ``survivor="husband"`` gives the husband's hazard given the wife's
    death time; ``"wife"`` the reverse.
    """
    _check_time(t_death, t)
    if t <= t_death:
        raise ValueError(f"need t > t_death, got t={t}, t_death={t_death}")
    w, Qs = _survivor_start(gen, survivor, t_death)
    total = w.sum()
    if total <= 0:
        raise ZeroDivisionError(f"partner death at {t_death} has zero density")
    u = expm_action(Qs, w / total, t - t_death, tol=TOL)
    denom = u.sum()
    if denom <= 0:
        raise ZeroDivisionError(f"survivor has zero survival probability at t={t}")
    exit_rate = -np.asarray(Qs.sum(axis=1)).ravel()
    return float(u @ exit_rate / denom)
