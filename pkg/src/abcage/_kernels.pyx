# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Lindblad right-hand side for the structured spin-phonon model.

The generator is

    -i[H, rho] + g_deph D[s] rho + g_down D[a] rho + g_up D[a^dag] rho

with ``s`` diagonal, ``a`` the phonon lowering operator (identity on each
block of ``block`` internal states) truncated at the last rung, and ``H``
given in CSR form. Complex arrays arrive as interleaved float64 views so the
arithmetic stays in plain doubles. Releases the GIL while it runs.
"""
from libc.math cimport sqrt
from libc.stdlib cimport free, malloc


def lindblad_rhs(
    const double[:, ::1] rho,
    double[:, ::1] out,
    const long[::1] indptr,
    const long[::1] indices,
    const double[::1] data,
    const double[::1] sz,
    double g_deph,
    double g_down,
    double g_up,
    long block,
):
    """rho and out are (d, 2d) float views of complex (d, d); data is 2*nnz floats."""
    cdef Py_ssize_t d = rho.shape[0]
    cdef Py_ssize_t d2 = 2 * d
    cdef Py_ssize_t top = d // block - 1
    cdef Py_ssize_t i, j, k, p, ni, nb
    cdef double hr, hi, xr, xi, c, w
    cdef const double *R = &rho[0, 0]
    cdef double *O = &out[0, 0]
    cdef const double *src
    cdef double *dst
    cdef double *diag
    cdef double *root

    diag = <double *> malloc(d * sizeof(double))
    root = <double *> malloc((top + 2) * sizeof(double))
    if diag == NULL or root == NULL:
        free(diag)
        free(root)
        raise MemoryError()

    with nogil:
        for k in range(top + 2):
            root[k] = sqrt(<double> k)
        # coefficient of rho[i, j] splits into diag[i] + diag[j] + g_deph s_i s_j
        for i in range(d):
            ni = i // block
            diag[i] = (-0.5 * g_deph * sz[i] * sz[i] - 0.5 * g_down * ni
                       - 0.5 * g_up * (ni + 1.0 if ni < top else 0.0))

        for i in range(d):
            dst = O + i * d2
            src = R + i * d2
            for j in range(d):
                c = diag[i] + diag[j] + g_deph * sz[i] * sz[j]
                dst[2 * j] = c * src[2 * j]
                dst[2 * j + 1] = c * src[2 * j + 1]

        # -i H rho: row i of H times rows of rho; -i (x + i y) = y - i x
        for i in range(d):
            dst = O + i * d2
            for p in range(indptr[i], indptr[i + 1]):
                src = R + indices[p] * d2
                hr = data[2 * p]
                hi = data[2 * p + 1]
                for j in range(d):
                    xr = src[2 * j]
                    xi = src[2 * j + 1]
                    dst[2 * j] += hr * xi + hi * xr
                    dst[2 * j + 1] -= hr * xr - hi * xi

        # +i rho H: rho[i, k] H[k, j] scattered along row i; +i (x + i y) = -y + i x
        for i in range(d):
            dst = O + i * d2
            src = R + i * d2
            for k in range(d):
                xr = src[2 * k]
                xi = src[2 * k + 1]
                if xr == 0.0 and xi == 0.0:
                    continue
                for p in range(indptr[k], indptr[k + 1]):
                    j = indices[p]
                    hr = data[2 * p]
                    hi = data[2 * p + 1]
                    dst[2 * j] -= xr * hi + xi * hr
                    dst[2 * j + 1] += xr * hr - xi * hi

        nb = d - block
        # a rho a^dag: rung n + 1 feeds rung n
        if g_down != 0.0:
            for i in range(nb):
                ni = i // block
                dst = O + i * d2
                src = R + (i + block) * d2 + 2 * block
                for j in range(nb):
                    w = g_down * root[ni + 1] * root[j // block + 1]
                    dst[2 * j] += w * src[2 * j]
                    dst[2 * j + 1] += w * src[2 * j + 1]

        # a^dag rho a: rung n - 1 feeds rung n
        if g_up != 0.0:
            for i in range(block, d):
                ni = i // block
                dst = O + i * d2 + 2 * block
                src = R + (i - block) * d2
                for j in range(nb):
                    w = g_up * root[ni] * root[j // block + 1]
                    dst[2 * j] += w * src[2 * j]
                    dst[2 * j + 1] += w * src[2 * j + 1]

    free(diag)
    free(root)
