"""Pure numpy implementations of the hot sampling kernels.

These mirror the compiled extension in ``_fastkernels.pyx`` exactly (same
formulas, same 1e-300 floor before logs) and serve as the fallback backend
when the extension is unavailable.

Conventions shared by both backends:

* Rate conditional (one word).  ``mu`` holds log rates over all tree nodes.
  ``t_node`` is the corpus exposure vector sum_d l_d * theta_d scattered to
  node coordinates.  Documents where the word has a nonzero count are listed
  in ``docs``; their mixing weights live in a global CSR layout
  (``th_indptr``, ``th_nodes``, ``th_vals``) indexed by document.
* Affinity conditional (one document).  ``xi`` is the full length-K affinity
  vector; Poisson terms involve only the labeled topics ``act_idx`` through
  the dense slice ``b_act`` (rows = words with nonzero count in the doc).
"""

from __future__ import annotations

import numpy as np

RATE_FLOOR = 1e-300

BACKEND_NAME = "python"


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _gather_rows(docs, th_indptr):
    """Flat indices into the global theta-entry arrays for the given docs."""
    starts = th_indptr[docs]
    lens = th_indptr[docs + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), lens
    step = np.ones(total, dtype=np.int64)
    step[0] = starts[0]
    pos = np.cumsum(lens)[:-1]
    step[pos] = starts[1:] - (starts[:-1] + lens[:-1] - 1)
    return np.cumsum(step), lens


def rate_logpost_grad(mu, t_node, docs, w, th_indptr, th_nodes, th_vals, lam, psi):
    """Log conditional posterior and gradient for one word's log rates.

    ``lam is None`` drops the Gaussian tree prior (likelihood-only values,
    used when assembling the likelihood Hessian).
    Returns ``(logpost, grad)``.
    """
    beta = np.exp(mu)
    lp = -float(t_node @ beta)
    grad = -t_node * beta
    if docs.shape[0]:
        flat, lens = _gather_rows(docs, th_indptr)
        nodes_f = th_nodes[flat]
        bv = th_vals[flat] * beta[nodes_f]
        row_ptr = np.zeros(docs.shape[0], dtype=np.int64)
        np.cumsum(lens[:-1], out=row_ptr[1:])
        s = np.add.reduceat(bv, row_ptr)
        s = np.maximum(s, RATE_FLOOR)
        lp += float(w @ np.log(s))
        coef = np.repeat(w / s, lens)
        grad += np.bincount(nodes_f, weights=coef * bv, minlength=mu.shape[0])
    if lam is not None:
        r = mu - psi
        lam_r = lam @ r
        lp -= 0.5 * float(r @ lam_r)
        grad -= lam_r
    return lp, grad


def rate_trajectory(mu, p, eps, n_steps, minv, t_node, docs, w, th_indptr, th_nodes, th_vals, lam, psi):
    """Leapfrog trajectory on the rate conditional; mutates ``mu`` and ``p``.

    Returns ``(U0, UL, ok)`` with U the negative log posterior at the start
    and end points; ``ok`` is False when anything went non-finite.
    """
    lp, g = rate_logpost_grad(mu, t_node, docs, w, th_indptr, th_nodes, th_vals, lam, psi)
    u0 = -lp
    for _ in range(n_steps):
        p += 0.5 * eps * g
        mu += eps * (minv @ p)
        lp, g = rate_logpost_grad(mu, t_node, docs, w, th_indptr, th_nodes, th_vals, lam, psi)
        p += 0.5 * eps * g
    ul = -lp
    ok = bool(
        np.isfinite(u0) and np.isfinite(ul) and np.all(np.isfinite(mu)) and np.all(np.isfinite(p))
    )
    return u0, ul, ok


def affinity_logpost_grad(
    xi,
    act_idx,
    b_act,
    w,
    colsum_act,
    length,
    labels,
    eta,
    inv_lam2,
    include_bern=True,
    include_prior=True,
):
    """Log conditional posterior and gradient for one document's affinities.

    Poisson terms use the softmax mixing weights over the active topics only;
    label (Bernoulli) and Gaussian prior terms act on the full vector and can
    be switched off for likelihood-only or label-free evaluations.
    Returns ``(logpost, grad)``.
    """
    xa = xi[act_idx]
    e = np.exp(xa - xa.max())
    theta = e / e.sum()
    s = b_act @ theta
    s = np.maximum(s, RATE_FLOOR)
    lp = -length * float(colsum_act @ theta) + float(w @ np.log(s))
    v = -length * colsum_act + b_act.T @ (w / s)
    g_act = theta * v - theta * float(theta @ v)
    grad = np.zeros_like(xi)
    grad[act_idx] = g_act
    if include_bern:
        lp -= float(np.logaddexp(0.0, -xi).sum()) + float(((1.0 - labels) * xi).sum())
        grad += _sigmoid(-xi) - (1.0 - labels)
    if include_prior:
        r = xi - eta
        lp -= 0.5 * inv_lam2 * float(r @ r)
        grad -= inv_lam2 * r
    return lp, grad


def affinity_trajectory(xi, p, eps, n_steps, minv, act_idx, b_act, w, colsum_act, length, labels, eta, inv_lam2):
    """Leapfrog trajectory on the affinity conditional; mutates ``xi`` and ``p``."""
    lp, g = affinity_logpost_grad(xi, act_idx, b_act, w, colsum_act, length, labels, eta, inv_lam2)
    u0 = -lp
    for _ in range(n_steps):
        p += 0.5 * eps * g
        xi += eps * (minv @ p)
        lp, g = affinity_logpost_grad(xi, act_idx, b_act, w, colsum_act, length, labels, eta, inv_lam2)
        p += 0.5 * eps * g
    ul = -lp
    ok = bool(
        np.isfinite(u0) and np.isfinite(ul) and np.all(np.isfinite(xi)) and np.all(np.isfinite(p))
    )
    return u0, ul, ok
