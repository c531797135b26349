"""Independent reference implementations used only by the test-suite.

Everything here is deliberately written in the most literal way possible
(mpmath at 60 digits, explicit double loops, direct parameter-by-parameter
gradients) so that it shares no code path with the package under test.
"""

import mpmath as mp

mp.mp.dps = 60


def chaotic_limit_mp(lam):
    lam = mp.mpf(lam)
    return mp.exp(5 * lam) / (2 * lam) * (1 - (1 - mp.exp(-4 * lam)) / (4 * lam))


def eoc_limit_main_mp(lam, alpha0):
    lam, a0 = mp.mpf(lam), mp.mpf(alpha0)
    e5, e1 = mp.exp(5 * lam), mp.exp(lam)
    inner = (
        e5 * (1 / (2 * lam) + (2 * a0**2 - 8 * a0) / (25 * lam**2))
        + (e1 - e5) * (1 - 4 * a0) / (8 * lam**2)
        + 2 * a0 / (5 * lam) * ((4 - a0) / (5 * lam) - 1 - a0)
    )
    return inner / (1 + a0) ** 2


def eoc_limit_appendix_mp(lam, alpha0):
    lam, a0 = mp.mpf(lam), mp.mpf(alpha0)
    e5, e1 = mp.exp(5 * lam), mp.exp(lam)
    inner = (
        e5 * (mp.mpf(1) / 2 + (16 * a0**2 + 36 * a0 - 25) / (200 * lam))
        + e1 * (1 - 4 * a0) / (8 * lam)
        + 2 * a0 * (4 - a0) / (25 * lam)
        - 2 * a0 * (1 + a0) / 5
    )
    return inner / ((1 + a0) ** 2 * lam)


# ---------------------------------------------------------------------------
# literal network oracles (pure Python lists, no numpy linear algebra)


def relu(v):
    return [t if t > 0 else 0.0 for t in v]


def literal_forward(weights, biases, x):
    """Return the scalar output using explicit loops over matrix entries."""
    a = [float(t) for t in x]
    L = len(weights)
    for l, (W, b) in enumerate(zip(weights, biases), start=1):
        h = []
        for i in range(W.shape[0]):
            s = float(b[i])
            for j in range(W.shape[1]):
                s += float(W[i, j]) * a[j]
            h.append(s)
        a = relu(h) if l < L else h
    return a[0]


def finite_difference_gradients(weights, biases, x, eps=1e-6):
    """Central differences of the output w.r.t. every weight and bias entry."""
    import numpy as np

    def out(ws, bs):
        return literal_forward(ws, bs, x)

    gw = []
    gb = []
    for l in range(len(weights)):
        G = np.zeros_like(weights[l])
        for i in range(G.shape[0]):
            for j in range(G.shape[1]):
                wp = [w.copy() for w in weights]
                wm = [w.copy() for w in weights]
                wp[l][i, j] += eps
                wm[l][i, j] -= eps
                G[i, j] = (out(wp, biases) - out(wm, biases)) / (2 * eps)
        gw.append(G)
        g = np.zeros_like(biases[l])
        for i in range(g.shape[0]):
            bp = [b.copy() for b in biases]
            bm = [b.copy() for b in biases]
            bp[l][i] += eps
            bm[l][i] -= eps
            g[i] = (out(weights, bp) - out(weights, bm)) / (2 * eps)
        gb.append(g)
    return gw, gb


# ---------------------------------------------------------------------------
# literal moment oracle: double sums written straight from the definitions


def moments_bruteforce(widths, sigma_w_sq):
    """Second-moment expressions evaluated with explicit products per pair (l1, l2).

    ``X(i, j)`` and ``C(i, j)`` are recomputed from scratch for every pair, so
    this shares no prefix-product bookkeeping with the package.
    """
    L = len(widths)
    n = [mp.mpf(w) for w in widths]
    a = mp.mpf(sigma_w_sq) / 2

    def X(i, j):
        p = mp.mpf(1)
        for k in range(i, j):
            p *= 1 + 5 / n[k]
        return p

    def C(i, j):
        p = mp.mpf(1)
        for k in range(i, j):
            p *= 1 + 1 / n[k]
        return p

    e_w = a ** (L - 1) * sum(n[l - 1] / n[0] for l in range(1, L + 1))
    e_b = sum(a ** (L - l) for l in range(1, L + 1))
    w2 = sum((n[l - 1] / n[0]) ** 2 for l in range(1, L + 1))
    b2 = sum(X(l, L) * a ** (2 * (L - l)) for l in range(1, L + 1))
    wb = sum(a ** (2 * L - l - 1) * (n[l - 1] / n[0]) * X(l, L) for l in range(1, L + 1))
    for l1 in range(1, L + 1):
        for l2 in range(l1 + 1, L + 1):
            w2 += 2 * n[l1 - 1] * n[l2 - 1] / n[0] ** 2 * C(l1, l2) / X(l1, l2)
            b2 += 2 * X(l2, L) * a ** (2 * L - l1 - l2)
            wb += X(l2, L) * (
                a ** (2 * L - l1 - 1) * (n[l2 - 1] / n[0]) * C(l1, l2)
                + a ** (2 * L - l2 - 1) * (n[l1 - 1] / n[0])
            )
    w2 *= a ** (2 * (L - 1)) * X(1, L)
    return dict(e_w=e_w, e_b=e_b, e_w_sq=w2, e_b_sq=b2, e_wb=wb)


def two_layer_exact(n0, n1, sigma_w_sq):
    """Exact moments of Theta_W, Theta_b for L = 2, from direct Gaussian integrals.

    Theta_W = |delta^1|^2 + |x^1|^2 and Theta_b = |delta^1|^2 + 1 with
    |delta^1|^2 = sum_i (W^2_i)^2 1{h_i > 0} and |x^1|^2 = sum_i relu(h_i)^2.
    """
    a = mp.mpf(sigma_w_sq) / 2
    n0, n1 = mp.mpf(n0), mp.mpf(n1)
    r = n1 / n0
    e_d = a  # E|delta^1|^2
    e_x = a * r  # E|x^1|^2
    e_d2 = a**2 * (1 + 5 / n1)
    e_x2 = a**2 * r**2 * (1 + 5 / n1)
    e_dx = a**2 * r * (1 + 1 / n1)
    return dict(
        e_w=e_d + e_x,
        e_b=e_d + 1,
        e_w_sq=e_d2 + 2 * e_dx + e_x2,
        e_b_sq=e_d2 + 2 * e_d + 1,
        e_wb=e_d2 + e_d + e_dx + e_x,
    )


def dispersion_estimator_quadratic(values, prefactor):
    """r-hat with the leave-one-out squared mean summed over ordered pairs explicitly."""
    v = [mp.mpf(t) for t in values]
    N = len(v)
    total = mp.mpf(0)
    for i in range(N):
        acc = mp.mpf(0)
        for j in range(N):
            for k in range(N):
                if j != i and k != i and j != k:
                    acc += v[j] * v[k]
        total += v[i] ** 2 / (acc / ((N - 1) * (N - 2)))
    return total * prefactor(N)


def batched_central_differences(weights, biases, x, eps=1e-6, dtype=None):
    """Central differences for every weight and bias entry, batched per layer.

    Perturbing ``W^l_ij`` by ``+-eps`` moves only ``h^l_i`` by ``+-eps x^{l-1}_j``
    (and ``b^l_i`` moves ``h^l_i`` by ``+-eps``), so each layer's perturbations are
    pushed through the remaining layers as one matrix of pre-activations. Plain
    numpy matmuls only; nothing is shared with the package.

    A ReLU network is piecewise linear in any single parameter, so away from
    kinks the only error is round-off; ``dtype=np.longdouble`` shrinks it.
    """
    import numpy as np

    dtype = dtype or np.float64
    weights = [np.asarray(w, dtype=dtype) for w in weights]
    biases = [np.asarray(b, dtype=dtype) for b in biases]
    eps = dtype(eps)
    L = len(weights)
    acts = [np.asarray(x, dtype=dtype)]
    pres = []
    for l in range(L):
        h = weights[l] @ acts[-1] + biases[l]
        pres.append(h)
        acts.append(np.maximum(h, 0.0) if l < L - 1 else h)

    def finish(H, l):
        # H: (batch, n_l) pre-activations of layer l (0-based); returns outputs
        for k in range(l, L):
            A = np.maximum(H, 0.0) if k < L - 1 else H
            if k == L - 1:
                return A[:, 0]
            H = A @ weights[k + 1].T + biases[k + 1]
        raise AssertionError("unreachable")

    gw, gb = [], []
    for l in range(L):
        n_out, n_in = weights[l].shape
        base = pres[l]
        x_prev = acts[l]
        # weight perturbations, row-major over (i, j)
        H = np.repeat(base[None, :], n_out * n_in, axis=0)
        rows = np.repeat(np.arange(n_out), n_in)
        shift = np.tile(x_prev, n_out) * eps
        Hp = H.copy()
        Hm = H.copy()
        Hp[np.arange(H.shape[0]), rows] = base[rows] + shift
        Hm[np.arange(H.shape[0]), rows] = base[rows] - shift
        gw.append(((finish(Hp, l) - finish(Hm, l)) / (2 * eps)).reshape(n_out, n_in))
        Hb = np.repeat(base[None, :], n_out, axis=0)
        Bp = Hb + eps * np.eye(n_out, dtype=dtype)
        Bm = Hb - eps * np.eye(n_out, dtype=dtype)
        gb.append((finish(Bp, l) - finish(Bm, l)) / (2 * eps))
    return gw, gb
