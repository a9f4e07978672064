# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels.

Semantics match attrex.backends.pyfallback exactly (same operation order up
to rounding); see that module for documentation. The inner loops run without
the GIL so callers may parallelize across examples.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, tanh, INFINITY

cnp.import_array()


cdef double _forward_backward(
    const double[:, ::1] w1, const double[::1] b1,
    const double[:, ::1] w2, const double[::1] b2,
    const double* x, Py_ssize_t label,
    double* hidden, double* logits, double* dlogits,
    double* dpre, double* grad, bint want_grad,
) noexcept nogil:
    cdef Py_ssize_t n_hidden = w1.shape[0]
    cdef Py_ssize_t n_in = w2.shape[1] if n_hidden == 0 else w1.shape[1]
    cdef Py_ssize_t n_out = w2.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, top, total, lse, loss

    if n_hidden > 0:
        for i in range(n_hidden):
            acc = b1[i]
            for j in range(n_in):
                acc += w1[i, j] * x[j]
            hidden[i] = tanh(acc)
        for i in range(n_out):
            acc = b2[i]
            for j in range(n_hidden):
                acc += w2[i, j] * hidden[j]
            logits[i] = acc
    else:
        for i in range(n_out):
            acc = b2[i]
            for j in range(n_in):
                acc += w2[i, j] * x[j]
            logits[i] = acc

    top = logits[0]
    for i in range(1, n_out):
        if logits[i] > top:
            top = logits[i]
    total = 0.0
    for i in range(n_out):
        total += exp(logits[i] - top)
    lse = top + log(total)
    loss = lse - logits[label]

    if want_grad:
        for i in range(n_out):
            dlogits[i] = exp(logits[i] - lse)
        dlogits[label] -= 1.0
        if n_hidden > 0:
            for j in range(n_hidden):
                acc = 0.0
                for i in range(n_out):
                    acc += w2[i, j] * dlogits[i]
                dpre[j] = (1.0 - hidden[j] * hidden[j]) * acc
            for j in range(n_in):
                acc = 0.0
                for i in range(n_hidden):
                    acc += w1[i, j] * dpre[i]
                grad[j] = acc
        else:
            for j in range(n_in):
                acc = 0.0
                for i in range(n_out):
                    acc += w2[i, j] * dlogits[i]
                grad[j] = acc
    return loss


def loss_input_grad(w1, b1, w2, b2, x, label):
    """Cross-entropy loss and its exact gradient w.r.t. the input vector."""
    cdef const double[:, ::1] w1v = np.ascontiguousarray(w1, dtype=np.float64)
    cdef const double[::1] b1v = np.ascontiguousarray(b1, dtype=np.float64)
    cdef const double[:, ::1] w2v = np.ascontiguousarray(w2, dtype=np.float64)
    cdef const double[::1] b2v = np.ascontiguousarray(b2, dtype=np.float64)
    xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] xm = xv
    cdef Py_ssize_t n_hidden = w1v.shape[0]
    cdef Py_ssize_t n_out = w2v.shape[0]
    cdef Py_ssize_t lbl = label

    grad = np.empty(xm.shape[0], dtype=np.float64)
    scratch_h = np.empty(max(n_hidden, 1), dtype=np.float64)
    scratch_p = np.empty(max(n_hidden, 1), dtype=np.float64)
    scratch_l = np.empty(n_out, dtype=np.float64)
    scratch_d = np.empty(n_out, dtype=np.float64)
    cdef double[::1] gv = grad
    cdef double[::1] hv = scratch_h
    cdef double[::1] pv = scratch_p
    cdef double[::1] lv = scratch_l
    cdef double[::1] dv = scratch_d
    cdef double loss

    with nogil:
        loss = _forward_backward(w1v, b1v, w2v, b2v, &xm[0], lbl,
                                 &hv[0], &lv[0], &dv[0], &pv[0], &gv[0], True)
    return loss, grad


def attack_steps(w1, b1, w2, b2, x0, x_orig, label, double eps, double alpha,
                 Py_ssize_t iters, double lo, double hi, bint targeted):
    """Iterated signed-gradient steps with per-step projection."""
    cdef const double[:, ::1] w1v = np.ascontiguousarray(w1, dtype=np.float64)
    cdef const double[::1] b1v = np.ascontiguousarray(b1, dtype=np.float64)
    cdef const double[:, ::1] w2v = np.ascontiguousarray(w2, dtype=np.float64)
    cdef const double[::1] b2v = np.ascontiguousarray(b2, dtype=np.float64)
    x_hat = np.array(x0, dtype=np.float64, copy=True, order="C")
    cdef double[::1] xh = x_hat
    cdef const double[::1] xo = np.ascontiguousarray(x_orig, dtype=np.float64)
    cdef Py_ssize_t n_hidden = w1v.shape[0]
    cdef Py_ssize_t n_out = w2v.shape[0]
    cdef Py_ssize_t dim = xh.shape[0]
    cdef Py_ssize_t lbl = label

    grad = np.empty(dim, dtype=np.float64)
    scratch_h = np.empty(max(n_hidden, 1), dtype=np.float64)
    scratch_p = np.empty(max(n_hidden, 1), dtype=np.float64)
    scratch_l = np.empty(n_out, dtype=np.float64)
    scratch_d = np.empty(n_out, dtype=np.float64)
    cdef double[::1] gv = grad
    cdef double[::1] hv = scratch_h
    cdef double[::1] pv = scratch_p
    cdef double[::1] lv = scratch_l
    cdef double[::1] dv = scratch_d

    cdef Py_ssize_t it, j
    cdef double step, value, ball_lo, ball_hi
    cdef double move = -alpha if targeted else alpha

    with nogil:
        for it in range(iters):
            _forward_backward(w1v, b1v, w2v, b2v, &xh[0], lbl,
                              &hv[0], &lv[0], &dv[0], &pv[0], &gv[0], True)
            for j in range(dim):
                if gv[j] > 0.0:
                    step = move
                elif gv[j] < 0.0:
                    step = -move
                else:
                    step = 0.0
                value = xh[j] + step
                ball_lo = xo[j] - eps
                ball_hi = xo[j] + eps
                if value < ball_lo:
                    value = ball_lo
                if value > ball_hi:
                    value = ball_hi
                if value < lo:
                    value = lo
                if value > hi:
                    value = hi
                xh[j] = value
    return x_hat


def sje_epoch(w, feats, labels, phi, double eta, order, candidates):
    """One ranking-loss SGD epoch over ``order``; updates w in place."""
    cdef double[:, ::1] wv = w
    cdef const double[:, ::1] fv = np.ascontiguousarray(feats, dtype=np.float64)
    cdef const cnp.int64_t[::1] yv = np.ascontiguousarray(labels, dtype=np.int64)
    cdef const double[:, ::1] pv = np.ascontiguousarray(phi, dtype=np.float64)
    cdef const cnp.int64_t[::1] ov = np.ascontiguousarray(order, dtype=np.int64)
    cdef const cnp.int64_t[::1] cv = np.ascontiguousarray(candidates, dtype=np.int64)

    cdef Py_ssize_t n_steps = ov.shape[0]
    cdef Py_ssize_t dim = wv.shape[0]
    cdef Py_ssize_t n_attr = wv.shape[1]
    cdef Py_ssize_t n_classes = pv.shape[0]
    cdef bint sampled = cv.shape[0] > 0

    scores_arr = np.empty(n_classes, dtype=np.float64)
    z_arr = np.empty(n_attr, dtype=np.float64)
    diff_arr = np.empty(n_attr, dtype=np.float64)
    cdef double[::1] scores = scores_arr
    cdef double[::1] z = z_arr
    cdef double[::1] diff = diff_arr

    cdef Py_ssize_t pos, n, i, j, c, y_n, y_star
    cdef double acc, loss, candidate_loss, best, total = 0.0

    with nogil:
        for pos in range(n_steps):
            n = ov[pos]
            y_n = yv[n]
            for j in range(n_attr):
                acc = 0.0
                for i in range(dim):
                    acc += fv[n, i] * wv[i, j]
                z[j] = acc
            for c in range(n_classes):
                acc = 0.0
                for j in range(n_attr):
                    acc += pv[c, j] * z[j]
                scores[c] = acc
            if sampled:
                y_star = cv[pos]
                loss = scores[y_star] - scores[y_n]
                if y_star != y_n:
                    loss += 1.0
            else:
                best = -INFINITY
                y_star = 0
                for c in range(n_classes):
                    if c == y_n:
                        candidate_loss = 0.0
                    else:
                        candidate_loss = (scores[c] - scores[y_n]) + 1.0
                    if candidate_loss > best:
                        best = candidate_loss
                        y_star = c
                loss = best
            if loss > 0.0:
                total += loss
                if y_star != y_n:
                    for j in range(n_attr):
                        diff[j] = pv[y_n, j] - pv[y_star, j]
                    for i in range(dim):
                        for j in range(n_attr):
                            wv[i, j] += fv[n, i] * diff[j] * eta
    return total / n_steps
