"""Independent reference implementations the tests check the library against.

Everything here is deliberately written the slow, obvious way (scalar loops,
finite differences, exhaustive sweeps) and shares no code with the package
beyond calling its forward pass where a derivative-free baseline is needed.
"""

import numpy as np

from sigauth.network import forward_pass, with_params
from sigauth.samples import GENUINE


def sse(net, params, x, targets) -> float:
    """E_D by plain forward evaluation at the given parameter vector."""
    out = forward_pass(with_params(net, params), x)[-1]
    e = (np.asarray(targets, dtype=float) - out).ravel()
    return float(e @ e)


def fd_gradient(net, x, targets, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of E_D over every parameter."""
    from sigauth.network import flatten_params

    params = flatten_params(net)
    grad = np.empty(params.size)
    for i in range(params.size):
        up = params.copy()
        up[i] += h
        down = params.copy()
        down[i] -= h
        grad[i] = (sse(net, up, x, targets) - sse(net, down, x, targets)) / (2 * h)
    return grad


def fd_jacobian(net, x, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the stacked outputs over every parameter."""
    from sigauth.network import flatten_params

    params = flatten_params(net)
    x = np.atleast_2d(np.asarray(x, dtype=float))

    def outputs(p):
        return forward_pass(with_params(net, p), x)[-1].ravel()

    cols = []
    for i in range(params.size):
        up = params.copy()
        up[i] += h
        down = params.copy()
        down[i] -= h
        cols.append((outputs(up) - outputs(down)) / (2 * h))
    return np.column_stack(cols)


def loop_covariance(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(mean, sample covariance) via explicit scalar loops."""
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    mean = np.zeros(d)
    for row in x:
        for j in range(d):
            mean[j] += row[j]
    mean /= n
    cov = np.zeros((d, d))
    for row in x:
        for a in range(d):
            for b in range(d):
                cov[a, b] += (row[a] - mean[a]) * (row[b] - mean[b])
    return mean, cov / (n - 1)


def brute_force_eer(scores, labels) -> tuple[float, float]:
    """Exhaustive threshold sweep sharing only the interpolation rule.

    Counts accept/reject per threshold with explicit loops, then applies the
    same crossing rule as the library: first index where FAR - FRR <= 0,
    exact tie taken as-is, otherwise linear interpolation with the threshold
    clamped to the last finite one at the +inf sentinel.
    """
    scores = [float(s) for s in np.asarray(scores).ravel()]
    labels = [str(l) for l in np.asarray(labels).ravel()]
    genuine = [s for s, l in zip(scores, labels) if l == GENUINE]
    forged = [s for s, l in zip(scores, labels) if l != GENUINE]
    assert genuine and forged
    thresholds = [-np.inf] + sorted(set(scores)) + [np.inf]
    fars, frrs = [], []
    for t in thresholds:
        fp = sum(1 for s in forged if s >= t)
        fn = sum(1 for s in genuine if s < t)
        fars.append(fp / len(forged))
        frrs.append(fn / len(genuine))
    for i in range(len(thresholds)):
        diff = fars[i] - frrs[i]
        if diff <= 0.0:
            break
    if fars[i] - frrs[i] == 0.0:
        return (fars[i] + frrs[i]) / 2.0, float(thresholds[i])
    d_prev = fars[i - 1] - frrs[i - 1]
    d_here = fars[i] - frrs[i]
    t = d_prev / (d_prev - d_here)
    far_t = fars[i - 1] + t * (fars[i] - fars[i - 1])
    frr_t = frrs[i - 1] + t * (frrs[i] - frrs[i - 1])
    lo, hi = thresholds[i - 1], thresholds[i]
    theta = lo if np.isinf(hi) else lo + t * (hi - lo)
    return float((far_t + frr_t) / 2.0), float(theta)


def interp_rates(curve, theta: float) -> tuple[float, float]:
    """(FAR, FRR) at an arbitrary threshold by linear interpolation on the curve."""
    thr = curve.thresholds
    idx = int(np.searchsorted(thr, theta))
    if idx < thr.size and thr[idx] == theta:
        return float(curve.far[idx]), float(curve.frr[idx])
    a, b = idx - 1, idx
    t = (theta - thr[a]) / (thr[b] - thr[a])
    return (
        float(curve.far[a] + t * (curve.far[b] - curve.far[a])),
        float(curve.frr[a] + t * (curve.frr[b] - curve.frr[a])),
    )
