"""Utilities shared across test modules: finite-difference gradient
checking and a brute-force convolution oracle."""

import numpy as np

from synthfit.nn.layers import bce_grad, bce_loss, same_padding


def fd_max_rel_err(net, x, t, step=1e-4, forward=None):
    """Worst relative error between analytic weight gradients and central
    finite differences of the loss.

    ``forward`` replays the network's forward pass and must reproduce any
    stochastic state (dropout masks) identically on every call; the default
    runs in eval mode.
    """
    if forward is None:
        forward = lambda: net.forward(x)
    scores = forward()
    net.backward(bce_grad(scores, t))
    grads = [g.copy() for g in net.grads()]
    worst = 0.0
    for p, g in zip(net.params(), grads):
        fp, fg = p.ravel(), g.ravel()
        for i in range(fp.size):
            orig = fp[i]
            fp[i] = orig + step
            lp = bce_loss(forward(), t)
            fp[i] = orig - step
            lm = bce_loss(forward(), t)
            fp[i] = orig
            fd = (lp - lm) / (2.0 * step)
            worst = max(worst, abs(fd - fg[i]) / max(abs(fd), abs(fg[i]), 1e-8))
    return worst


def conv_oracle(x, w, b, s1, s2):
    """Naive loop implementation of strided same-padded cross-correlation.
    x: (B, C, H, W); w: (F, C, K1, K2); returns (B, F, oh, ow)."""
    bsz, c, h, wd = x.shape
    f, _, k1, k2 = w.shape
    oh, ph0, _ = same_padding(h, k1, s1)
    ow, pw0, _ = same_padding(wd, k2, s2)
    out = np.zeros((bsz, f, oh, ow), dtype=x.dtype)
    for bi in range(bsz):
        for fi in range(f):
            for oy in range(oh):
                for ox in range(ow):
                    acc = 0.0
                    for ci in range(c):
                        for ky in range(k1):
                            for kx in range(k2):
                                iy = oy * s1 + ky - ph0
                                ix = ox * s2 + kx - pw0
                                if 0 <= iy < h and 0 <= ix < wd:
                                    acc += x[bi, ci, iy, ix] * w[fi, ci, ky, kx]
                    out[bi, fi, oy, ox] = acc + b[fi]
    return out
