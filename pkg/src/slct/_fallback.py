"""Pure numpy versions of the quadrature kernels in ``_kernels.pyx``.

Same signatures and the same per-element operation order, vectorized over
parameter rows and quadrature points instead of looped.  ReLU results match
the compiled ones bit for bit; softmax results can differ in the last bit
because numpy's ``exp`` is not the C library's.  ``cap`` is accepted for
interface parity; the values returned are always exact.
"""
import numpy as np

#: rough bound on the number of doubles held per (sample, point, unit) slab
_CHUNK_ELEMENTS = 1 << 21


def _chunks(n_rows, per_row):
    step = max(1, _CHUNK_ELEMENTS // max(per_row, 1))
    for start in range(0, n_rows, step):
        yield slice(start, min(n_rows, start + step))


def _relu_batch(W, X, h1, h2, h3):
    # W: (m, d) -> outputs (m, Q, h1)
    a1 = W[:, :h1 * h2].reshape(-1, h1, h2)
    a2 = W[:, h1 * h2:h1 * h2 + h2 * h3].reshape(-1, h2, h3)
    b2 = W[:, h1 * h2 + h2 * h3:]
    m, Q = W.shape[0], X.shape[0]
    hid = []
    for j in range(h2):
        acc = np.zeros((m, Q))
        for k in range(h3):
            acc = acc + a2[:, j, k, None] * X[None, :, k]
        acc = acc + b2[:, j, None]
        hid.append(np.maximum(acc, 0.0))
    out = np.empty((m, Q, h1))
    for i in range(h1):
        acc = np.zeros((m, Q))
        for j in range(h2):
            acc = acc + a1[:, i, j, None] * hid[j]
        out[:, :, i] = acc
    return out


def _sequential_mean(y, target):
    # left-to-right accumulation over (point, output), as in the C loop
    m, Q, h = y.shape
    sq = ((y - target[None]) ** 2).reshape(m, Q * h)
    return np.cumsum(sq, axis=1)[:, -1] / Q


def relu_forward(params, X, h1, h2, h3):
    return _relu_batch(np.asarray(params, dtype=np.float64)[None, :], X, h1, h2, h3)[0]


def relu_sq_error(W, X, target, h1, h2, h3, cap=np.inf):
    W = np.asarray(W, dtype=np.float64)
    out = np.empty(W.shape[0])
    for sl in _chunks(W.shape[0], X.shape[0] * (h1 + h2)):
        y = _relu_batch(W[sl], X, h1, h2, h3)
        out[sl] = _sequential_mean(y, target)
    return out


def _softmax_batch(W, X, widths, bias):
    widths = [int(w) for w in widths]
    L = len(widths) - 1
    m, Q = W.shape[0], X.shape[0]
    a_off = np.concatenate([[0], np.cumsum([widths[s] * widths[s + 1] for s in range(L)])])
    b_off = a_off[-1] + np.concatenate([[0], np.cumsum(widths[:-1])])
    src = [np.broadcast_to(X[None, :, k], (m, Q)) for k in range(widths[L])]
    for s in range(L - 1, -1, -1):
        rows, cols = widths[s], widths[s + 1]
        A = W[:, a_off[s]:a_off[s + 1]].reshape(m, rows, cols)
        dst = []
        for i in range(rows):
            acc = np.zeros((m, Q))
            for k in range(cols):
                acc = acc + A[:, i, k, None] * src[k]
            if bias:
                acc = acc + W[:, b_off[s] + i, None]
            dst.append(acc)
        src = dst
    y = np.stack(src, axis=2)
    e = np.exp(y - y.max(axis=2, keepdims=True))
    return e / e.sum(axis=2, keepdims=True)


def softmax_forward(params, X, widths, bias):
    return _softmax_batch(np.asarray(params, dtype=np.float64)[None, :], X, widths, bias)[0]


def softmax_sq_error(W, X, target, widths, bias, cap=np.inf):
    W = np.asarray(W, dtype=np.float64)
    out = np.empty(W.shape[0])
    for sl in _chunks(W.shape[0], X.shape[0] * 2 * max(widths)):
        y = _softmax_batch(W[sl], X, widths, bias)
        out[sl] = _sequential_mean(y, target)
    return out
