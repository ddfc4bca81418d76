"""Pure numpy kernels (fallback backend).

Element blocks are processed in chunks with batched matmuls; the scatter
is a single ``np.bincount`` so accumulation order is fixed.
"""

import numpy as np

NAME = "python"

_CHUNK_FLOATS = 1 << 21


def apply_tensor(x, in_map, Bin, detj, wt, rho, Bout, out_map, n_out):
    """y = sum_e S_out^T diag(detj_e * wt * rho_e) S_in x_e, scattered by out_map.

    ``Bin`` / ``Bout`` are (Bx, By, Bz) with shapes (g_k, a_k); missing axes
    are 1x1 ones. ``rho`` is (E, G) or None.
    """
    Bx, By, Bz = Bin
    Cx, Cy, Cz = Bout
    (gx, ax), (gy, ay), (gz, az) = Bx.shape, By.shape, Bz.shape
    arx, ary, arz = Cx.shape[1], Cy.shape[1], Cz.shape[1]
    E = in_map.shape[0]
    G = gx * gy * gz
    wt = np.asarray(wt).reshape(gz, gy, gx)
    CyT, CzT = np.ascontiguousarray(Cy.T), np.ascontiguousarray(Cz.T)
    BxT = np.ascontiguousarray(Bx.T)
    V = np.empty((E, arx * ary * arz))
    c = max(1, _CHUNK_FLOATS // max(G, in_map.shape[1], out_map.shape[1]))
    for s in range(0, E, c):
        t = min(E, s + c)
        m = t - s
        X = x[in_map[s:t]].reshape(m, az, ay, ax)
        X = X @ BxT                                         # (m, az, ay, gx)
        X = np.matmul(By, X)                                # (m, az, gy, gx)
        X = np.matmul(Bz, X.reshape(m, az, gy * gx))        # (m, gz, gy*gx)
        X = X.reshape(m, gz, gy, gx) * (detj[s:t, None, None, None] * wt[None])
        if rho is not None:
            X *= rho[s:t].reshape(m, gz, gy, gx)
        X = np.matmul(CzT, X.reshape(m, gz, gy * gx)).reshape(m, arz, gy, gx)
        X = np.matmul(CyT, X)                               # (m, arz, ary, gx)
        X = X @ Cx                                          # (m, arz, ary, arx)
        V[s:t] = X.reshape(m, -1)
    return np.bincount(out_map.ravel(), V.ravel(), minlength=n_out)
