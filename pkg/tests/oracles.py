"""Brute-force references shared by the unit and acceptance tests."""
import itertools
from dataclasses import replace

import numpy as np

from richris.inference import mlp_gradient
from richris.physics import _active_system


def subset_configs(start, pixels, assignments):
    cfgs = np.repeat(np.asarray(start, dtype=np.uint8)[None], len(assignments), axis=0)
    cfgs[:, pixels] = assignments
    return cfgs


def exhaustive_best(engine, objective, start, pixels):
    """Best objective over all 2^len(pixels) settings of ``pixels``, others as in ``start``."""
    grid = np.array(list(itertools.product((0, 1), repeat=len(pixels))), dtype=np.uint8)
    cfgs = subset_configs(start, pixels, grid)
    rssi = np.stack([np.abs(engine.channels(cfgs, s)[:, 0]) for s in objective.states], axis=-1)
    scores = objective.score(rssi)
    i = int(np.argmax(scores))
    return cfgs[i], float(scores[i])


def subset_pool_best(engine, objective, base, pixels, n, rng):
    """Best of ``n`` random settings of ``pixels``."""
    cfgs = subset_configs(base, pixels, rng.integers(0, 2, (n, len(pixels)), dtype=np.uint8))
    rssi = np.stack([np.abs(engine.channels(cfgs, s)[:, 0]) for s in objective.states], axis=-1)
    scores = objective.score(rssi)
    i = int(np.argmax(scores))
    return cfgs[i], float(scores[i])


def uninformed_localization_error(length):
    """Mean |p_hat - p| * L of the best constant guess (the median) for p uniform on [0, 1]."""
    return 0.25 * length


def swap_ports(sc):
    """Same scenario with the TX and UE dipoles exchanged."""
    order = np.arange(len(sc.positions))
    order[[0, 1]] = [1, 0]
    return replace(sc, positions=sc.positions[order], f0=sc.f0[order], chi=sc.chi[order], gamma=sc.gamma[order])


def born_series(sc, tol=1e-16, max_terms=200):
    """Multiple-scattering series for the TX column, summed until the terms vanish."""
    w, row = _active_system(sc, 1.0)
    alpha = 1.0 / np.diag(w)
    g = -(w - np.diag(np.diag(w)))
    tx, rx = row[sc.tx_indices[0]], row[list(sc.rx_indices)]
    term = np.zeros(len(w), dtype=complex)
    term[tx] = alpha[tx]
    total = term.copy()
    for _ in range(max_terms):
        term = alpha * (g @ term)
        total += term
        if np.linalg.norm(term) < tol * np.linalg.norm(total):
            break
    return total[rx]


def bessel_series(x, terms=40):
    """J0 and Y0 from their power series (adequate for small x)."""
    import math

    q = (x / 2.0) ** 2
    j0 = y_sum = 0.0
    harmonic = 0.0
    for k in range(terms):
        c = (-q) ** k / math.factorial(k) ** 2
        j0 += c
        if k:
            harmonic += 1.0 / k
            y_sum -= c * harmonic
    y0 = (2.0 / math.pi) * ((math.log(x / 2.0) + 0.5772156649015329) * j0 + y_sum)
    return j0, y0


def gradient_check_error(model, x, y, eps=1e-6):
    """Worst relative gap between backprop and central differences over every parameter."""
    _, grads = mlp_gradient(model, x, y)
    worst = 0.0
    for layer, (dw, db) in enumerate(grads):
        for arr, g in ((model.weights[layer], dw), (model.biases[layer], db)):
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + eps
                up = mlp_gradient(model, x, y)[0]
                arr[idx] = old - eps
                down = mlp_gradient(model, x, y)[0]
                arr[idx] = old
                num = (up - down) / (2 * eps)
                worst = max(worst, abs(num - g[idx]) / max(abs(num) + abs(g[idx]), 1e-8))
    return worst
