"""Probability calibration: Platt sigmoids and pairwise coupling.

``fit_platt`` fits P(y=+1 | f) = 1 / (1 + exp(A f + B)) to decision
values by Newton's method with prior-corrected targets (the numerically
careful variant of Platt's procedure).  ``couple_pairwise`` combines
one-vs-one pairwise probabilities into a single per-sample probability
vector via the quadratic fixed-point method, vectorized over samples.
"""

from __future__ import annotations

import numpy as np

_MIN_PROB = 1e-7


def fit_platt(decision_values: np.ndarray, labels: np.ndarray,
              max_iterations: int = 100, min_step: float = 1e-10,
              sigma: float = 1e-12) -> tuple[float, float]:
    """Fit sigmoid parameters (A, B) on held-in decision values.

    ``labels`` are +/-1.  Targets are prior-corrected: t = (N+ + 1)/(N+ + 2)
    for positives and 1/(N- + 2) for negatives, which regularizes the
    fit on small or separable sets.
    """
    f = np.asarray(decision_values, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    prior1 = float(np.sum(labels > 0))
    prior0 = float(f.size - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(labels > 0, hi, lo)

    A = 0.0
    B = np.log((prior0 + 1.0) / (prior1 + 1.0))

    def nll(a, b):
        z = a * f + b
        # log(1 + e^-z) + (1-t) z, stable on both tails
        return float(
            np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-z)),
                            (t - 1.0) * z + np.log1p(np.exp(z))))
        )

    fval = nll(A, B)
    for _ in range(max_iterations):
        z = A * f + B
        p = np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)),
                     1.0 / (1.0 + np.exp(z)))
        q = 1.0 - p
        d1 = t - p
        d2 = p * q
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        h11 = float(np.sum(f * f * d2)) + sigma
        h22 = float(np.sum(d2)) + sigma
        h21 = float(np.sum(f * d2))
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            new_a, new_b = A + step * dA, B + step * dB
            new_f = nll(new_a, new_b)
            if new_f < fval + 1e-4 * step * gd:
                A, B, fval = new_a, new_b, new_f
                break
            step /= 2.0
        else:
            break
    return float(A), float(B)


def platt_probability(f: np.ndarray, A: float, B: float) -> np.ndarray:
    z = A * np.asarray(f, dtype=np.float64) + B
    return np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))


def couple_pairwise(r: np.ndarray, eps: float = 1e-10,
                    max_iterations: int = 200) -> np.ndarray:
    """Couple pairwise probabilities into class-probability vectors.

    ``r`` has shape (n, k, k) with r[s, i, j] = P(class i | classes {i, j})
    for sample s (r[s, j, i] = 1 - r[s, i, j]; the diagonal is ignored).
    Minimizes sum_i sum_{j!=i} (r_ji p_i - r_ij p_j)^2 on the simplex by
    the standard normalized fixed-point sweep; every returned row is
    nonnegative and sums to 1.
    """
    r = np.asarray(r, dtype=np.float64)
    n, k, _ = r.shape
    if k == 1:
        return np.ones((n, 1))
    r = np.clip(r, _MIN_PROB, 1.0 - _MIN_PROB)

    # Qp[s] = Q p with Q[t,t] = sum_{j!=t} r[j,t]^2, Q[t,j] = -r[j,t] r[t,j]
    rt = np.swapaxes(r, 1, 2)  # rt[s, t, j] = r[s, j, t]
    off = ~np.eye(k, dtype=bool)
    Q = np.where(off, -rt * r, 0.0)
    diag = np.einsum("stj,stj->st", np.where(off, rt, 0.0), np.where(off, rt, 0.0))
    idx = np.arange(k)
    Q[:, idx, idx] = diag

    p = np.full((n, k), 1.0 / k)
    stop = eps / k
    for _ in range(max(max_iterations, k)):
        Qp = np.einsum("sij,sj->si", Q, p)
        pQp = np.einsum("si,si->s", p, Qp)
        if np.max(np.abs(Qp - pQp[:, None])) < stop:
            break
        for tcls in range(k):
            diff = (pQp - Qp[:, tcls]) / diag[:, tcls]
            p[:, tcls] += diff
            pQp = (pQp + diff * (diff * diag[:, tcls] + 2.0 * Qp[:, tcls])) / (1.0 + diff) ** 2
            Qp = (Qp + diff[:, None] * Q[:, tcls, :]) / (1.0 + diff)[:, None]
            p /= (1.0 + diff)[:, None]
    np.clip(p, 0.0, None, out=p)
    p /= p.sum(axis=1, keepdims=True)
    return p
