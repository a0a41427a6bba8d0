# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_kernels_py``.

Same formulas, same floor before logs; see the python module for the data
layout conventions.  Inner loops run without the GIL so block updates can
overlap across worker threads.
"""

import numpy as np

from libc.math cimport exp, log, log1p, isfinite

cdef double RATE_FLOOR = 1e-300

BACKEND_NAME = "compiled"


cdef inline double _softplus_neg(double x) nogil:
    # log(1 + exp(-x))
    if x >= 0:
        return log1p(exp(-x))
    return -x + log1p(exp(x))


cdef inline double _sigmoid_neg(double x) nogil:
    # 1 / (1 + exp(x))
    cdef double e
    if x >= 0:
        e = exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + exp(x))


cdef double _rate_lp_grad(
    double[::1] mu,
    double[::1] beta,
    double[::1] t_node,
    long long[::1] docs,
    double[::1] w,
    long long[::1] th_indptr,
    long long[::1] th_nodes,
    double[::1] th_vals,
    double[:, ::1] lam,
    bint has_lam,
    double psi,
    double[::1] grad,
) nogil:
    cdef Py_ssize_t n = mu.shape[0], m = docs.shape[0]
    cdef Py_ssize_t j, a, k
    cdef long long d
    cdef double lp = 0.0, s, c
    for k in range(n):
        beta[k] = exp(mu[k])
        grad[k] = -t_node[k] * beta[k]
        lp -= t_node[k] * beta[k]
    for j in range(m):
        d = docs[j]
        s = 0.0
        for a in range(th_indptr[d], th_indptr[d + 1]):
            s += th_vals[a] * beta[th_nodes[a]]
        if s < RATE_FLOOR:
            s = RATE_FLOOR
        lp += w[j] * log(s)
        c = w[j] / s
        for a in range(th_indptr[d], th_indptr[d + 1]):
            grad[th_nodes[a]] += c * th_vals[a] * beta[th_nodes[a]]
    if has_lam:
        for k in range(n):
            s = 0.0
            for a in range(n):
                s += lam[k, a] * (mu[a] - psi)
            grad[k] -= s
            lp -= 0.5 * (mu[k] - psi) * s
    return lp


def rate_logpost_grad(double[::1] mu, double[::1] t_node, long long[::1] docs, double[::1] w,
                      long long[::1] th_indptr, long long[::1] th_nodes, double[::1] th_vals,
                      lam, double psi):
    cdef Py_ssize_t n = mu.shape[0]
    beta_arr = np.empty(n)
    grad_arr = np.empty(n)
    cdef double[::1] beta = beta_arr
    cdef double[::1] grad = grad_arr
    cdef bint has_lam = lam is not None
    cdef double[:, ::1] lam_mv
    cdef double lp
    if has_lam:
        lam_mv = lam
        with nogil:
            lp = _rate_lp_grad(mu, beta, t_node, docs, w, th_indptr, th_nodes, th_vals, lam_mv, True, psi, grad)
    else:
        lam_mv = np.zeros((1, 1))
        with nogil:
            lp = _rate_lp_grad(mu, beta, t_node, docs, w, th_indptr, th_nodes, th_vals, lam_mv, False, psi, grad)
    return lp, grad_arr


def rate_trajectory(double[::1] mu, double[::1] p, double eps, int n_steps, double[:, ::1] minv,
                    double[::1] t_node, long long[::1] docs, double[::1] w,
                    long long[::1] th_indptr, long long[::1] th_nodes, double[::1] th_vals,
                    double[:, ::1] lam, double psi):
    cdef Py_ssize_t n = mu.shape[0]
    cdef Py_ssize_t k, a
    cdef int l
    beta_arr = np.empty(n)
    grad_arr = np.empty(n)
    step_arr = np.empty(n)
    cdef double[::1] beta = beta_arr
    cdef double[::1] grad = grad_arr
    cdef double[::1] step = step_arr
    cdef double lp, u0, ul, s
    cdef bint ok = True
    with nogil:
        lp = _rate_lp_grad(mu, beta, t_node, docs, w, th_indptr, th_nodes, th_vals, lam, True, psi, grad)
        u0 = -lp
        for l in range(n_steps):
            for k in range(n):
                p[k] += 0.5 * eps * grad[k]
            for k in range(n):
                s = 0.0
                for a in range(n):
                    s += minv[k, a] * p[a]
                step[k] = s
            for k in range(n):
                mu[k] += eps * step[k]
            lp = _rate_lp_grad(mu, beta, t_node, docs, w, th_indptr, th_nodes, th_vals, lam, True, psi, grad)
            for k in range(n):
                p[k] += 0.5 * eps * grad[k]
        ul = -lp
        if not (isfinite(u0) and isfinite(ul)):
            ok = False
        else:
            for k in range(n):
                if not (isfinite(mu[k]) and isfinite(p[k])):
                    ok = False
                    break
    return u0, ul, bool(ok)


cdef double _aff_lp_grad(
    double[::1] xi,
    long long[::1] act,
    double[:, ::1] b_act,
    double[::1] w,
    double[::1] colsum,
    double length,
    double[::1] labels,
    double[::1] eta,
    double inv_lam2,
    bint bern,
    bint prior,
    double[::1] theta,
    double[::1] vwork,
    double[::1] grad,
) nogil:
    cdef Py_ssize_t kk = xi.shape[0], ka = act.shape[0], m = w.shape[0]
    cdef Py_ssize_t j, k
    cdef double mx, ssum = 0.0, lp, s, c, tv = 0.0, r, expo = 0.0
    mx = xi[act[0]]
    for k in range(1, ka):
        if xi[act[k]] > mx:
            mx = xi[act[k]]
    for k in range(ka):
        theta[k] = exp(xi[act[k]] - mx)
        ssum += theta[k]
    for k in range(ka):
        theta[k] /= ssum
    for k in range(kk):
        grad[k] = 0.0
    for k in range(ka):
        expo += colsum[k] * theta[k]
        vwork[k] = -length * colsum[k]
    lp = -length * expo
    for j in range(m):
        s = 0.0
        for k in range(ka):
            s += b_act[j, k] * theta[k]
        if s < RATE_FLOOR:
            s = RATE_FLOOR
        lp += w[j] * log(s)
        c = w[j] / s
        for k in range(ka):
            vwork[k] += c * b_act[j, k]
    for k in range(ka):
        tv += theta[k] * vwork[k]
    for k in range(ka):
        grad[act[k]] = theta[k] * vwork[k] - theta[k] * tv
    if bern:
        for k in range(kk):
            lp -= _softplus_neg(xi[k]) + (1.0 - labels[k]) * xi[k]
            grad[k] += _sigmoid_neg(xi[k]) - (1.0 - labels[k])
    if prior:
        for k in range(kk):
            r = xi[k] - eta[k]
            lp -= 0.5 * inv_lam2 * r * r
            grad[k] -= inv_lam2 * r
    return lp


def affinity_logpost_grad(double[::1] xi, long long[::1] act_idx, double[:, ::1] b_act,
                          double[::1] w, double[::1] colsum_act, double length,
                          double[::1] labels, double[::1] eta, double inv_lam2,
                          bint include_bern=True, bint include_prior=True):
    cdef Py_ssize_t kk = xi.shape[0], ka = act_idx.shape[0]
    theta_arr = np.empty(ka)
    v_arr = np.empty(ka)
    grad_arr = np.empty(kk)
    cdef double[::1] theta = theta_arr
    cdef double[::1] vwork = v_arr
    cdef double[::1] grad = grad_arr
    cdef double lp
    with nogil:
        lp = _aff_lp_grad(xi, act_idx, b_act, w, colsum_act, length, labels, eta, inv_lam2,
                          include_bern, include_prior, theta, vwork, grad)
    return lp, grad_arr


def affinity_trajectory(double[::1] xi, double[::1] p, double eps, int n_steps, double[:, ::1] minv,
                        long long[::1] act_idx, double[:, ::1] b_act, double[::1] w,
                        double[::1] colsum_act, double length, double[::1] labels,
                        double[::1] eta, double inv_lam2):
    cdef Py_ssize_t kk = xi.shape[0], ka = act_idx.shape[0]
    cdef Py_ssize_t k, a
    cdef int l
    theta_arr = np.empty(ka)
    v_arr = np.empty(ka)
    grad_arr = np.empty(kk)
    step_arr = np.empty(kk)
    cdef double[::1] theta = theta_arr
    cdef double[::1] vwork = v_arr
    cdef double[::1] grad = grad_arr
    cdef double[::1] step = step_arr
    cdef double lp, u0, ul, s
    cdef bint ok = True
    with nogil:
        lp = _aff_lp_grad(xi, act_idx, b_act, w, colsum_act, length, labels, eta, inv_lam2,
                          True, True, theta, vwork, grad)
        u0 = -lp
        for l in range(n_steps):
            for k in range(kk):
                p[k] += 0.5 * eps * grad[k]
            for k in range(kk):
                s = 0.0
                for a in range(kk):
                    s += minv[k, a] * p[a]
                step[k] = s
            for k in range(kk):
                xi[k] += eps * step[k]
            lp = _aff_lp_grad(xi, act_idx, b_act, w, colsum_act, length, labels, eta, inv_lam2,
                              True, True, theta, vwork, grad)
            for k in range(kk):
                p[k] += 0.5 * eps * grad[k]
        ul = -lp
        if not (isfinite(u0) and isfinite(ul)):
            ok = False
        else:
            for k in range(kk):
                if not (isfinite(xi[k]) and isfinite(p[k])):
                    ok = False
                    break
    return u0, ul, bool(ok)
