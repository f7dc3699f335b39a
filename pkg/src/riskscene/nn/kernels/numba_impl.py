"""Numba-jitted convolution kernels (hot path during training).

Drop-in replacements for numpy_impl; explicit loops compile to tight machine
code. fastmath stays off so both backends agree to rounding error.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def conv1d_forward(x, w):
    B, Cin, T = x.shape
    Cout, _, K = w.shape
    pad = K // 2
    out = np.zeros((B, Cout, T))
    for b in range(B):
        for o in range(Cout):
            for t in range(T):
                acc = 0.0
                for c in range(Cin):
                    for k in range(K):
                        src = t + k - pad
                        if 0 <= src < T:
                            acc += x[b, c, src] * w[o, c, k]
                out[b, o, t] = acc
    return out


@njit(cache=True)
def conv1d_backward_input(gout, w):
    B, Cout, T = gout.shape
    Cin = w.shape[1]
    K = w.shape[2]
    pad = K // 2
    gx = np.zeros((B, Cin, T))
    for b in range(B):
        for c in range(Cin):
            for t in range(T):
                acc = 0.0
                for o in range(Cout):
                    for k in range(K):
                        dst = t - k + pad
                        if 0 <= dst < T:
                            acc += gout[b, o, dst] * w[o, c, k]
                gx[b, c, t] = acc
    return gx


@njit(cache=True)
def conv1d_backward_weight(x, gout, K):
    B, Cin, T = x.shape
    Cout = gout.shape[1]
    pad = K // 2
    gw = np.zeros((Cout, Cin, K))
    for o in range(Cout):
        for c in range(Cin):
            for k in range(K):
                acc = 0.0
                for b in range(B):
                    for t in range(T):
                        src = t + k - pad
                        if 0 <= src < T:
                            acc += gout[b, o, t] * x[b, c, src]
                gw[o, c, k] = acc
    return gw


@njit(cache=True)
def conv2d_forward(x, w):
    B, Cin, H, W = x.shape
    Cout = w.shape[0]
    KH = w.shape[2]
    KW = w.shape[3]
    ph, pw = KH // 2, KW // 2
    out = np.zeros((B, Cout, H, W))
    for b in range(B):
        for o in range(Cout):
            for h in range(H):
                for v in range(W):
                    acc = 0.0
                    for c in range(Cin):
                        for i in range(KH):
                            sh = h + i - ph
                            if sh < 0 or sh >= H:
                                continue
                            for j in range(KW):
                                sv = v + j - pw
                                if 0 <= sv < W:
                                    acc += x[b, c, sh, sv] * w[o, c, i, j]
                    out[b, o, h, v] = acc
    return out


@njit(cache=True)
def conv2d_backward_input(gout, w):
    B, Cout, H, W = gout.shape
    Cin = w.shape[1]
    KH = w.shape[2]
    KW = w.shape[3]
    ph, pw = KH // 2, KW // 2
    gx = np.zeros((B, Cin, H, W))
    for b in range(B):
        for c in range(Cin):
            for h in range(H):
                for v in range(W):
                    acc = 0.0
                    for o in range(Cout):
                        for i in range(KH):
                            dh = h - i + ph
                            if dh < 0 or dh >= H:
                                continue
                            for j in range(KW):
                                dv = v - j + pw
                                if 0 <= dv < W:
                                    acc += gout[b, o, dh, dv] * w[o, c, i, j]
                    gx[b, c, h, v] = acc
    return gx


@njit(cache=True)
def conv2d_backward_weight(x, gout, KH, KW):
    B, Cin, H, W = x.shape
    Cout = gout.shape[1]
    ph, pw = KH // 2, KW // 2
    gw = np.zeros((Cout, Cin, KH, KW))
    for o in range(Cout):
        for c in range(Cin):
            for i in range(KH):
                for j in range(KW):
                    acc = 0.0
                    for b in range(B):
                        for h in range(H):
                            sh = h + i - ph
                            if sh < 0 or sh >= H:
                                continue
                            for v in range(W):
                                sv = v + j - pw
                                if 0 <= sv < W:
                                    acc += gout[b, o, h, v] * x[b, c, sh, sv]
                    gw[o, c, i, j] = acc
    return gw
