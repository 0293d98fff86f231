"""Layer primitives with explicit forward caches and backward passes.

Shapes are batch-first: conv/pool tensors are (batch, channels, length),
dense tensors are (batch, features). Convolutions are 'valid' with stride 1.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray):
    B, C, L = x.shape
    O, _, K = W.shape
    Lo = L - K + 1
    cols = sliding_window_view(x, K, axis=2)            # (B, C, Lo, K)
    cols = cols.transpose(0, 2, 1, 3).reshape(B * Lo, C * K)
    out = cols @ W.reshape(O, C * K).T + b               # (B*Lo, O)
    out = out.reshape(B, Lo, O).transpose(0, 2, 1)
    return out, (cols, x.shape, W)


def conv1d_backward(dout: np.ndarray, cache):
    cols, (B, C, L), W = cache
    O, _, K = W.shape
    Lo = L - K + 1
    d = dout.transpose(0, 2, 1).reshape(B * Lo, O)
    dW = (d.T @ cols).reshape(W.shape)
    db = d.sum(axis=0)
    dcols = (d @ W.reshape(O, C * K)).reshape(B, Lo, C, K)
    dx = np.zeros((B, C, L))
    for k in range(K):
        dx[:, :, k:k + Lo] += dcols[:, :, :, k].transpose(0, 2, 1)
    return dx, dW, db


def maxpool1d_forward(x: np.ndarray, window: int):
    B, C, L = x.shape
    Lp = L // window
    xr = x[:, :, :Lp * window].reshape(B, C, Lp, window)
    idx = xr.argmax(axis=3)
    out = np.take_along_axis(xr, idx[..., None], axis=3)[..., 0]
    return out, (idx, x.shape, window)


def maxpool1d_backward(dout: np.ndarray, cache):
    idx, (B, C, L), window = cache
    Lp = dout.shape[2]
    dxr = np.zeros((B, C, Lp, window))
    np.put_along_axis(dxr, idx[..., None], dout[..., None], axis=3)
    dx = np.zeros((B, C, L))
    dx[:, :, :Lp * window] = dxr.reshape(B, C, Lp * window)
    return dx


def dense_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray):
    return x @ W + b, (x, W)


def dense_backward(dout: np.ndarray, cache):
    x, W = cache
    return dout @ W.T, x.T @ dout, dout.sum(axis=0)


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout: np.ndarray, mask):
    return dout * mask
