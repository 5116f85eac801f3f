"""Matrix-exponential actions and resolvent solves for sub-intensity matrices.

``exp(Q t)`` is never formed. Its action on a vector is computed by
uniformization: with ``theta >= max |Q_ii|`` the matrix ``P = I + Q/theta`` is
substochastic and

    v exp(Q t) = sum_k Poisson(theta t; k) v P^k.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "NumericalError",
    "SingularGeneratorError",
    "poisson_weights",
    "expm_action",
    "expm_action_grid",
    "resolvent_solve",
]

MAX_TERMS = 10_000_000


class NumericalError(ArithmeticError):
    pass


class SingularGeneratorError(NumericalError):
    pass


def _as_operator(Q):
    if sp.issparse(Q):
        return sp.csr_matrix(Q, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"Q must be square, got shape {Q.shape}")
    return Q


def _finite(Q) -> bool:
    data = Q.data if sp.issparse(Q) else Q
    return bool(np.all(np.isfinite(data)))


def poisson_weights(rate: float, tol: float) -> tuple[int, np.ndarray]:
    """Poisson(rate) probabilities ``w[k]`` for ``k = 0..K``.

    ``K`` is the smallest index whose cumulative mass reaches ``1 - tol``.
    The weights start at the mode and recur outwards, so no factorial or
    power of ``rate`` is ever formed; left-tail entries below double
    precision underflow to zero harmlessly.
    """
    if rate < 0 or not math.isfinite(rate):
        raise ValueError(f"Poisson rate must be finite and >= 0, got {rate}")
    if rate == 0:
        return 0, np.ones(1)
    mode = int(math.floor(rate))
    log_wm = -rate + mode * math.log(rate) - math.lgamma(mode + 1)
    w_mode = math.exp(log_wm)

    left = [w_mode]
    w = w_mode
    for k in range(mode, 0, -1):
        w *= k / rate
        left.append(w)
    left.reverse()  # indices 0..mode

    weights = left
    total = math.fsum(weights)
    w = w_mode
    k = mode
    while total < 1.0 - tol:
        k += 1
        if k > MAX_TERMS:
            raise NumericalError(f"uniformization needs more than {MAX_TERMS} terms (rate={rate:.3e})")
        w *= rate / k
        weights.append(w)
        total += w
        # geometric bound on the remaining tail; guards against round-off in `total`
        ratio = rate / (k + 1)
        if ratio < 1.0 and w * ratio / (1.0 - ratio) <= tol:
            break
    return k, np.asarray(weights)


def expm_action(Q, v, t: float, tol: float = 1e-12, side: str = "row") -> np.ndarray:
    """Return ``v exp(Q t)`` (``side="row"``) or ``exp(Q t) v`` (``side="col"``).

    The truncation error is at most ``tol`` times the relevant norm of ``v``
    (1-norm for row vectors, max-norm for column vectors).
    """
    if side not in ("row", "col"):
        raise ValueError(f"side must be 'row' or 'col', got {side!r}")
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"time must be finite and >= 0, got {t}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    Q = _as_operator(Q)
    v = np.array(v, dtype=float)
    if v.shape[-1] != Q.shape[0]:
        raise ValueError(f"vector length {v.shape[-1]} does not match Q of size {Q.shape[0]}")
    if not _finite(Q) or not np.all(np.isfinite(v)):
        raise ValueError("non-finite entry in Q or v")
    if t == 0:
        return v

    diag = Q.diagonal()
    theta = float(np.max(np.abs(diag))) if diag.size else 0.0
    if theta == 0.0:
        return v
    if sp.issparse(Q):
        P = sp.identity(Q.shape[0], format="csr") + Q / theta
        op = P.T.tocsr() if side == "row" else P
    else:
        P = np.eye(Q.shape[0]) + Q / theta
        op = P.T if side == "row" else P

    scale = np.abs(v).sum(axis=-1).max() if side == "row" else np.abs(v).max()
    scale = max(float(scale), 1.0)
    K, w = poisson_weights(theta * t, tol / scale)

    term = v
    out = w[0] * term
    for k in range(1, K + 1):
        term = (op @ term.T).T if term.ndim == 2 else op @ term
        out = out + w[k] * term
    return out


def expm_action_grid(Q, v, times: Iterable[float], tol: float = 1e-12, side: str = "row") -> np.ndarray:
    """``v exp(Q t)`` for every ``t`` in a non-decreasing grid.

    Successive values are obtained by stepping over the grid increments,
    which is much cheaper than restarting from zero at each point.
    Returns an array of shape ``(len(times), len(v))``.
    """
    times = np.asarray(list(times), dtype=float)
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be non-negative and non-decreasing")
    out = np.empty((times.size, np.shape(v)[-1]))
    cur = np.asarray(v, dtype=float)
    prev = 0.0
    for k, t in enumerate(times):
        cur = expm_action(Q, cur, t - prev, tol=tol, side=side)
        out[k] = cur
        prev = t
    return out


def resolvent_solve(Q, delta: float, rhs, side: str = "col") -> np.ndarray:
    """Solve ``(delta I - Q) x = rhs`` (or ``x (delta I - Q) = rhs`` for ``side="row"``).

    For ``side="col"`` this is ``int_0^inf exp(-delta t) exp(Q t) rhs dt``.
    ``delta = 0`` is allowed when every state is eventually absorbed.
    """
    if not math.isfinite(delta) or delta < 0:
        raise ValueError(f"delta must be finite and >= 0, got {delta}")
    Q = _as_operator(Q)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != Q.shape[0]:
        raise ValueError(f"rhs length {rhs.shape[0]} does not match Q of size {Q.shape[0]}")
    if not np.any(rhs):
        return np.zeros_like(rhs)
    size = Q.shape[0]
    A = sp.csc_matrix(delta * sp.identity(size) - sp.csr_matrix(Q))
    if side == "row":
        A = A.T.tocsc()
    elif side != "col":
        raise ValueError(f"side must be 'row' or 'col', got {side!r}")

    try:
        lu = spla.splu(A)
    except RuntimeError as exc:  # exactly singular factor
        raise SingularGeneratorError(
            f"delta I - Q is singular at delta={delta}: some states are never absorbed"
        ) from exc
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularGeneratorError(f"delta I - Q is numerically singular at delta={delta}")
    resid = np.abs(A @ x - rhs).max()
    if resid > 1e-10 * np.abs(rhs).max():
        # one step of iterative refinement before giving up
        x = x + lu.solve(rhs - A @ x)
        resid = np.abs(A @ x - rhs).max()
        if resid > 1e-10 * np.abs(rhs).max():
            raise NumericalError(f"resolvent residual {resid:.3e} exceeds tolerance")
    return x
