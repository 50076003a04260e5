"""A small Levenberg-Marquardt least-squares solver."""

from dataclasses import dataclass

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    cost: float          # 0.5 * sum(residual**2)
    initial_cost: float
    nit: int
    converged: bool
    message: str


def levenberg_marquardt(fun, x0, max_iter=500, ftol=1e-15, xtol=1e-14, lam0=1e-3):
    """Minimize ``0.5 * ||r(x)||^2``.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (r, J)`` with residual vector ``r`` (m,) and Jacobian
        ``J`` (m, n).
    x0 : array_like
        Starting point.

    Returns
    -------
    LMResult
        Only steps that lower the cost are accepted, so ``cost <= initial_cost``.

    Notes
    -----
    Marquardt's diagonal scaling: the damped system is
    ``(J^T J + lam * diag(J^T J)) dx = -J^T r``.
    """
    x = np.asarray(x0, dtype=float).copy()
    r, J = fun(x)
    cost = 0.5 * float(r @ r)
    initial = cost
    if not np.isfinite(cost):
        return LMResult(x, cost, initial, 0, False, "non-finite cost at start")
    A = J.T @ J
    g = J.T @ r
    lam = lam0
    nu = 2.0
    for it in range(1, max_iter + 1):
        d = np.maximum(np.diag(A), 1e-300)
        try:
            step = np.linalg.solve(A + lam * np.diag(d), -g)
        except np.linalg.LinAlgError:
            lam *= nu
            nu *= 2.0
            continue
        x_new = x + step
        r_new, J_new = fun(x_new)
        cost_new = 0.5 * float(r_new @ r_new)
        predicted = -(step @ g) - 0.5 * step @ (A @ step)
        if np.isfinite(cost_new) and cost_new < cost:
            rho = (cost - cost_new) / predicted if predicted > 0 else 0.0
            small_f = (cost - cost_new) <= ftol * cost
            small_x = np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol)
            x, r, J, cost = x_new, r_new, J_new, cost_new
            A = J.T @ J
            g = J.T @ r
            lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            if small_f or small_x:
                return LMResult(x, cost, initial, it, True, "converged")
        else:
            lam *= nu
            nu *= 2.0
            if lam > 1e20:
                return LMResult(x, cost, initial, it, True, "damping saturated at a minimum")
    return LMResult(x, cost, initial, max_iter, False, "iteration limit reached")
