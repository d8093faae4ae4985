"""Pure-Python coordinate-descent kernel; same contract as the compiled one."""

import numpy as np


def _sweep(G, beta, grad, lam, mask, active_only):
    max_d = 0.0
    for j in mask:
        old = beta[j]
        if active_only and old == 0.0:
            continue
        gjj = G[j, j]
        z = grad[j] + gjj * old
        if z > lam:
            new = (z - lam) / gjj
        elif z < -lam:
            new = (z + lam) / gjj
        else:
            new = 0.0
        d = new - old
        if d != 0.0:
            beta[j] = new
            grad -= d * G[j]
            if abs(d) > max_d:
                max_d = abs(d)
    return max_d


def cd_gram(G, beta, grad, lam, tol, max_sweeps):
    mask = [int(j) for j in np.flatnonzero(np.diag(G) > 0.0)]
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        max_d = _sweep(G, beta, grad, lam, mask, False)
        sweeps += 1
        if max_d < tol:
            converged = True
            break
        while sweeps < max_sweeps:
            max_d = _sweep(G, beta, grad, lam, mask, True)
            sweeps += 1
            if max_d < tol:
                break
    return sweeps, converged
