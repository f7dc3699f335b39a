"""Pure-numpy convolution kernels (fallback path).

Same-padding, stride-1 correlations. Shapes:
  conv1d: x (B, Cin, T), w (Cout, Cin, K)   -> (B, Cout, T)
  conv2d: x (B, Cin, H, W), w (Cout, Cin, KH, KW) -> (B, Cout, H, W)
"""

import numpy as np


def conv1d_forward(x, w):
    B, Cin, T = x.shape
    Cout, _, K = w.shape
    pad = K // 2
    xp = np.zeros((B, Cin, T + 2 * pad))
    xp[:, :, pad : pad + T] = x
    out = np.zeros((B, Cout, T))
    for k in range(K):
        out += np.einsum("bct,oc->bot", xp[:, :, k : k + T], w[:, :, k])
    return out


def conv1d_backward_input(gout, w):
    B, Cout, T = gout.shape
    _, Cin, K = w.shape
    pad = K // 2
    gxp = np.zeros((B, Cin, T + 2 * pad))
    for k in range(K):
        gxp[:, :, k : k + T] += np.einsum("bot,oc->bct", gout, w[:, :, k])
    return gxp[:, :, pad : pad + T]


def conv1d_backward_weight(x, gout, K):
    B, Cin, T = x.shape
    Cout = gout.shape[1]
    pad = K // 2
    xp = np.zeros((B, Cin, T + 2 * pad))
    xp[:, :, pad : pad + T] = x
    gw = np.zeros((Cout, Cin, K))
    for k in range(K):
        gw[:, :, k] = np.einsum("bot,bct->oc", gout, xp[:, :, k : k + T])
    return gw


def conv2d_forward(x, w):
    B, Cin, H, W = x.shape
    Cout, _, KH, KW = w.shape
    ph, pw = KH // 2, KW // 2
    xp = np.zeros((B, Cin, H + 2 * ph, W + 2 * pw))
    xp[:, :, ph : ph + H, pw : pw + W] = x
    out = np.zeros((B, Cout, H, W))
    for i in range(KH):
        for j in range(KW):
            out += np.einsum("bchw,oc->bohw", xp[:, :, i : i + H, j : j + W], w[:, :, i, j])
    return out


def conv2d_backward_input(gout, w):
    B, Cout, H, W = gout.shape
    _, Cin, KH, KW = w.shape
    ph, pw = KH // 2, KW // 2
    gxp = np.zeros((B, Cin, H + 2 * ph, W + 2 * pw))
    for i in range(KH):
        for j in range(KW):
            gxp[:, :, i : i + H, j : j + W] += np.einsum("bohw,oc->bchw", gout, w[:, :, i, j])
    return gxp[:, :, ph : ph + H, pw : pw + W]


def conv2d_backward_weight(x, gout, KH, KW):
    B, Cin, H, W = x.shape
    Cout = gout.shape[1]
    ph, pw = KH // 2, KW // 2
    xp = np.zeros((B, Cin, H + 2 * ph, W + 2 * pw))
    xp[:, :, ph : ph + H, pw : pw + W] = x
    gw = np.zeros((Cout, Cin, KH, KW))
    for i in range(KH):
        for j in range(KW):
            gw[:, :, i, j] = np.einsum("bohw,bchw->oc", gout, xp[:, :, i : i + H, j : j + W])
    return gw
