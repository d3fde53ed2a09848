"""Small dense symmetric eigensolver (cyclic Jacobi)."""
import math

import numpy as np

MAX_SWEEPS = 60


def jacobi_eigh(a, tol=1e-14):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi sweeps.

    Iterates until the off-diagonal Frobenius norm is below
    ``tol * ||a||_F`` (absolute ``tol`` for the zero matrix).

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric matrix. Only used as a source; not modified.
    tol : float

    Returns
    -------
    values : (n,) ndarray
        Eigenvalues in descending order.
    vectors : (n, n) ndarray
        Orthonormal eigenvectors as columns, matching ``values``.
    """
    m = [[float(x) for x in row] for row in np.asarray(a, dtype=np.float64)]
    n = len(m)
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    scale = math.sqrt(sum(x * x for row in m for x in row))
    limit = tol * scale if scale > 0 else tol

    for _ in range(MAX_SWEEPS):
        off = math.sqrt(sum(m[i][j] * m[i][j] for i in range(n) for j in range(n) if i != j))
        if off <= limit:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p][q]
                if apq == 0.0:
                    continue
                theta = (m[q][q] - m[p][p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    mkp, mkq = m[k][p], m[k][q]
                    m[k][p] = c * mkp - s * mkq
                    m[k][q] = s * mkp + c * mkq
                rp, rq = m[p], m[q]
                for k in range(n):
                    mpk, mqk = rp[k], rq[k]
                    rp[k] = c * mpk - s * mqk
                    rq[k] = s * mpk + c * mqk
                m[p][q] = m[q][p] = 0.0
                for k in range(n):
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
    else:
        raise RuntimeError("Jacobi iteration did not converge")

    values = np.array([m[i][i] for i in range(n)])
    order = np.argsort(-values, kind="stable")
    return values[order], np.array(v)[:, order]
