# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: sum-factorized element operator and FV residual."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def _ranges(M):
    """First and one-past-last nonzero column of each row (empty rows give 0, 0)."""
    M = np.asarray(M)
    nz = M != 0.0
    lo = np.where(nz.any(axis=1), nz.argmax(axis=1), 0)
    hi = np.where(nz.any(axis=1), M.shape[1] - nz[:, ::-1].argmax(axis=1), 0)
    return np.ascontiguousarray(lo, dtype=np.intp), np.ascontiguousarray(hi, dtype=np.intp)


def apply_tensor(const double[::1] x, const cnp.int64_t[:, ::1] in_map, Bin,
                 const double[::1] detj, const double[::1] wt, rho, Bout,
                 const cnp.int64_t[:, ::1] out_map, Py_ssize_t n_out):
    """Per-element gather, three forward contractions, pointwise scale,
    three back contractions, ordered scatter.

    Each 1D factor is stored with the nonzero column range of every row, so
    block-diagonal factors (grouped LOR bases) skip their zero blocks.
    Scratch is O(a^3 + g^3) per call, reused across elements.
    """
    cdef const double[:, ::1] Bx = np.ascontiguousarray(Bin[0], dtype=np.float64)
    cdef const double[:, ::1] By = np.ascontiguousarray(Bin[1], dtype=np.float64)
    cdef const double[:, ::1] Bz = np.ascontiguousarray(Bin[2], dtype=np.float64)
    cdef const double[:, ::1] CxT = np.ascontiguousarray(np.asarray(Bout[0]).T, dtype=np.float64)
    cdef const double[:, ::1] CyT = np.ascontiguousarray(np.asarray(Bout[1]).T, dtype=np.float64)
    cdef const double[:, ::1] CzT = np.ascontiguousarray(np.asarray(Bout[2]).T, dtype=np.float64)
    cdef Py_ssize_t gx = Bx.shape[0], ax = Bx.shape[1]
    cdef Py_ssize_t gy = By.shape[0], ay = By.shape[1]
    cdef Py_ssize_t gz = Bz.shape[0], az = Bz.shape[1]
    cdef Py_ssize_t rx = CxT.shape[0], ry = CyT.shape[0], rz = CzT.shape[0]
    cdef Py_ssize_t E = in_map.shape[0], Ain = in_map.shape[1], Aout = out_map.shape[1]
    cdef Py_ssize_t G = gx * gy * gz
    cdef bint weighted = rho is not None
    cdef const double[:, ::1] R
    if weighted:
        R = np.ascontiguousarray(rho, dtype=np.float64)
    else:
        R = np.zeros((1, 1))
    lo, hi = _ranges(Bx)
    cdef const Py_ssize_t[::1] bxl = lo, bxh = hi
    lo, hi = _ranges(By)
    cdef const Py_ssize_t[::1] byl = lo, byh = hi
    lo, hi = _ranges(Bz)
    cdef const Py_ssize_t[::1] bzl = lo, bzh = hi
    lo, hi = _ranges(CxT)
    cdef const Py_ssize_t[::1] cxl = lo, cxh = hi
    lo, hi = _ranges(CyT)
    cdef const Py_ssize_t[::1] cyl = lo, cyh = hi
    lo, hi = _ranges(CzT)
    cdef const Py_ssize_t[::1] czl = lo, czh = hi

    cdef double[::1] y = np.zeros(n_out)
    cdef Py_ssize_t nbig = max(az * ay * gx, gz * gy * gx, rz * ry * gx,
                               az * gy * gx, rz * gy * gx)
    cdef double[::1] X = np.empty(max(Ain, Aout))
    cdef double[::1] T1 = np.empty(nbig)
    cdef double[::1] T2 = np.empty(nbig)
    cdef Py_ssize_t e, i, j, k, l, q, ix, iy, iz, qx, qy, qz, o1, o2
    cdef double s, b, scale

    with nogil:
        for e in range(E):
            for l in range(Ain):
                X[l] = x[in_map[e, l]]
            # x axis: T1[iz, iy, qx] = sum_ix Bx[qx, ix] X[iz, iy, ix]
            for iz in range(az):
                for iy in range(ay):
                    o1 = (iz * ay + iy) * ax
                    o2 = (iz * ay + iy) * gx
                    for qx in range(gx):
                        s = 0.0
                        for ix in range(bxl[qx], bxh[qx]):
                            s = s + Bx[qx, ix] * X[o1 + ix]
                        T1[o2 + qx] = s
            # y axis: T2[iz, qy, qx] = sum_iy By[qy, iy] T1[iz, iy, qx]
            for iz in range(az):
                for qy in range(gy):
                    o2 = (iz * gy + qy) * gx
                    for qx in range(gx):
                        T2[o2 + qx] = 0.0
                    for iy in range(byl[qy], byh[qy]):
                        b = By[qy, iy]
                        o1 = (iz * ay + iy) * gx
                        for qx in range(gx):
                            T2[o2 + qx] = T2[o2 + qx] + b * T1[o1 + qx]
            # z axis: T1[qz, qy, qx], then pointwise scaling
            for qz in range(gz):
                o2 = qz * gy * gx
                for q in range(gy * gx):
                    T1[o2 + q] = 0.0
                for iz in range(bzl[qz], bzh[qz]):
                    b = Bz[qz, iz]
                    o1 = iz * gy * gx
                    for q in range(gy * gx):
                        T1[o2 + q] = T1[o2 + q] + b * T2[o1 + q]
            scale = detj[e]
            if weighted:
                for q in range(G):
                    T1[q] = T1[q] * (scale * wt[q]) * R[e, q]
            else:
                for q in range(G):
                    T1[q] = T1[q] * (scale * wt[q])
            # back along z: T2[k, qy, qx] = sum_qz Cz[qz, k] T1[qz, qy, qx]
            for k in range(rz):
                o2 = k * gy * gx
                for q in range(gy * gx):
                    T2[o2 + q] = 0.0
                for qz in range(czl[k], czh[k]):
                    b = CzT[k, qz]
                    o1 = qz * gy * gx
                    for q in range(gy * gx):
                        T2[o2 + q] = T2[o2 + q] + b * T1[o1 + q]
            # back along y: T1[k, j, qx] = sum_qy Cy[qy, j] T2[k, qy, qx]
            for k in range(rz):
                for j in range(ry):
                    o2 = (k * ry + j) * gx
                    for qx in range(gx):
                        T1[o2 + qx] = 0.0
                    for qy in range(cyl[j], cyh[j]):
                        b = CyT[j, qy]
                        o1 = (k * gy + qy) * gx
                        for qx in range(gx):
                            T1[o2 + qx] = T1[o2 + qx] + b * T2[o1 + qx]
            # back along x and ordered scatter
            for k in range(rz):
                for j in range(ry):
                    o1 = (k * ry + j) * gx
                    for i in range(rx):
                        s = 0.0
                        for qx in range(cxl[i], cxh[i]):
                            s = s + CxT[i, qx] * T1[o1 + qx]
                        y[out_map[e, (k * ry + j) * rx + i]] += s
    return np.asarray(y)


cdef inline Py_ssize_t _wrap(Py_ssize_t k, Py_ssize_t n) nogil:
    k = k % n
    return k + n if k < 0 else k


def fv_rhs(const double[:, ::1] u, double[:, ::1] out,
           const double[::1] cl, Py_ssize_t sl, const double[::1] cr, Py_ssize_t sr,
           const double[:, :, :] klx, const double[:, :, :] krx,
           const double[:, :, :] kly, const double[:, :, :] kry, Py_ssize_t s2,
           double inv_area, double[:, ::1] SL, double[:, ::1] SR, double[:, ::1] F):
    """Residual of the periodic upwind FV scheme on an (Ny, Nx) grid.

    Pass 1 builds face states from cell averages along the normal
    direction (coefficients cl/cr starting at offsets sl/sr relative to the
    cell right of the face); pass 2 folds the transverse point
    reconstruction, face quadrature and upwind selection into the per-face
    coefficients k.. (offsets from s2). out = -(div F) * inv_area.
    Periodic wrap is handled with padded row copies so inner loops run
    over contiguous memory.
    """
    cdef Py_ssize_t ny = u.shape[0], nx = u.shape[1]
    cdef Py_ssize_t nl = cl.shape[0], nr = cr.shape[0], n2 = klx.shape[2]
    cdef Py_ssize_t i, j, m, jj, lo, pad
    cdef double a, b, c
    pad = 1 + max(abs(sl), abs(sr), abs(s2), abs(sl + nl), abs(sr + nr), abs(s2 + n2))
    cdef double[::1] row = np.empty(nx + 2 * pad)
    cdef double[::1] rowr = np.empty(nx + 2 * pad)

    with nogil:
        # ---- x-direction faces: face i sits between cells i-1 and i
        for j in range(ny):
            for i in range(nx + 2 * pad):
                row[i] = u[j, _wrap(i - pad, nx)]
            for i in range(nx):
                a = 0.0
                for m in range(nl):
                    a = a + cl[m] * row[i + pad + sl + m]
                b = 0.0
                for m in range(nr):
                    b = b + cr[m] * row[i + pad + sr + m]
                SL[j, i] = a
                SR[j, i] = b
        for j in range(ny):
            for i in range(nx):
                F[j, i] = 0.0
            for m in range(n2):
                jj = _wrap(j + s2 + m, ny)
                for i in range(nx):
                    F[j, i] = F[j, i] + klx[j, i, m] * SL[jj, i] + krx[j, i, m] * SR[jj, i]
        for j in range(ny):
            for i in range(nx - 1):
                out[j, i] = (F[j, i] - F[j, i + 1]) * inv_area
            out[j, nx - 1] = (F[j, nx - 1] - F[j, 0]) * inv_area

        # ---- y-direction faces: face j sits between cells j-1 and j
        for j in range(ny):
            for i in range(nx):
                SL[j, i] = 0.0
                SR[j, i] = 0.0
            for m in range(nl):
                jj = _wrap(j + sl + m, ny)
                c = cl[m]
                for i in range(nx):
                    SL[j, i] = SL[j, i] + c * u[jj, i]
            for m in range(nr):
                jj = _wrap(j + sr + m, ny)
                c = cr[m]
                for i in range(nx):
                    SR[j, i] = SR[j, i] + c * u[jj, i]
        for j in range(ny):
            for i in range(nx + 2 * pad):
                lo = _wrap(i - pad, nx)
                row[i] = SL[j, lo]
                rowr[i] = SR[j, lo]
            for i in range(nx):
                a = 0.0
                for m in range(n2):
                    a = a + kly[j, i, m] * row[i + pad + s2 + m] + kry[j, i, m] * rowr[i + pad + s2 + m]
                F[j, i] = a
        for j in range(ny):
            jj = j + 1 if j + 1 < ny else 0
            for i in range(nx):
                out[j, i] = out[j, i] + (F[j, i] - F[jj, i]) * inv_area
