"""Numpy implementation of the hot kernels.

Mirrors the compiled extension in attrex.backends._core; the backend package
selects one of the two at import time. All functions take raw float64 arrays,
use 0/1 misclassification cost where a cost applies, and keep the exact
operation order of the compiled twin so results agree to rounding error.
"""

from __future__ import annotations

import numpy as np


def _forward(w1, b1, w2, b2, x):
    """Logits and hidden activations; hidden is None for a linear model."""
    if w1.shape[0] > 0:
        hidden = np.tanh(w1 @ x + b1)
        return w2 @ hidden + b2, hidden
    return w2 @ x + b2, None


def loss_input_grad(w1, b1, w2, b2, x, label):
    """Cross-entropy loss and its exact gradient w.r.t. the input vector."""
    logits, hidden = _forward(w1, b1, w2, b2, x)
    m = np.max(logits)
    lse = m + np.log(np.sum(np.exp(logits - m)))
    loss = lse - logits[label]
    dlogits = np.exp(logits - lse)
    dlogits[label] -= 1.0
    if hidden is not None:
        dpre = (1.0 - hidden * hidden) * (w2.T @ dlogits)
        grad = w1.T @ dpre
    else:
        grad = w2.T @ dlogits
    return float(loss), grad


def attack_steps(w1, b1, w2, b2, x0, x_orig, label, eps, alpha, iters, lo, hi,
                 targeted):
    """Iterated signed-gradient steps with per-step projection.

    Untargeted ascends the loss at ``label``; targeted descends it. After each
    step the iterate is clamped into the eps-ball around ``x_orig`` and into
    [lo, hi].
    """
    x_hat = np.array(x0, dtype=np.float64, copy=True)
    sign = -alpha if targeted else alpha
    for _ in range(iters):
        _, grad = loss_input_grad(w1, b1, w2, b2, x_hat, label)
        x_hat += sign * np.sign(grad)
        np.clip(x_hat, x_orig - eps, x_orig + eps, out=x_hat)
        np.clip(x_hat, lo, hi, out=x_hat)
    return x_hat


def sje_epoch(w, feats, labels, phi, eta, order, candidates):
    """One ranking-loss SGD epoch over ``order``; updates w in place.

    For each example the violating class is the maximizer of
    cost(y_n, y) + score(y) - score(y_n) with 0/1 cost, either over all
    classes (``candidates`` empty) or the single sampled class per step.
    Fires w += eta * outer(x, phi[y_n] - phi[y*]) when the violation is
    positive; returns the mean hinge over the epoch.
    """
    sampled = candidates.shape[0] > 0
    total = 0.0
    for pos in range(order.shape[0]):
        n = order[pos]
        x = feats[n]
        y_n = labels[n]
        scores = phi @ (x @ w)
        if sampled:
            y_star = int(candidates[pos])
            loss = scores[y_star] - scores[y_n]
            if y_star != y_n:
                loss += 1.0
        else:
            losses = scores - scores[y_n] + 1.0
            losses[y_n] -= 1.0
            y_star = int(np.argmax(losses))
            loss = losses[y_star]
        if loss > 0.0:
            total += loss
            if y_star != y_n:
                w += np.outer(x, phi[y_n] - phi[y_star]) * eta
    return total / order.shape[0]
