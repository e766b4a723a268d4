# cython: language_level=3
"""Compiled hot loops: Philox uniforms, the free-flight simulator and the
batched J evaluation.  ``_fallback.py`` mirrors every function operation
for operation so both backends produce bit-identical results."""

from libc.math cimport sqrt, log, cos, sin, fabs, INFINITY
from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

cdef uint64_t M0 = 0xD2E7470EE14C6C93ULL
cdef uint64_t M1 = 0xCA5A826395121157ULL
cdef uint64_t W0 = 0x9E3779B97F4A7C15ULL
cdef uint64_t W1 = 0xBB67AE8584CAA73BULL
cdef double UNIFORM_SCALE = 2.220446049250313e-16  # 2**-52
cdef double PI = 3.141592653589793
cdef double TWO_PI = 6.283185307179586

# status codes shared with simulation.py
cdef enum:
    ST_RETURNED = 0
    ST_MAX_COLLISIONS = 1
    ST_MAX_X = 2
    ST_GRAZING = 3
    ST_MAX_TICKS = 4


cdef inline void philox(uint64_t* ctr, uint64_t k0, uint64_t k1, uint64_t* out) noexcept nogil:
    cdef uint64_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3]
    cdef u128 p0, p1
    cdef int r
    for r in range(10):
        p0 = <u128>M0 * c0
        p1 = <u128>M1 * c2
        c0 = (<uint64_t>(p1 >> 64)) ^ c1 ^ k0
        c1 = <uint64_t>p1
        c2 = (<uint64_t>(p0 >> 64)) ^ c3 ^ k1
        c3 = <uint64_t>p0
        k0 = k0 + W0
        k1 = k1 + W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline double to_uniform(uint64_t x) noexcept nogil:
    return (<double>(x >> 12) + 0.5) * UNIFORM_SCALE


def philox_block(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3, uint64_t k0, uint64_t k1):
    cdef uint64_t ctr[4]
    cdef uint64_t out[4]
    ctr[0] = c0; ctr[1] = c1; ctr[2] = c2; ctr[3] = c3
    philox(ctr, k0, k1, out)
    return (out[0], out[1], out[2], out[3])


def uniforms_block(uint64_t[::1] c0, uint64_t c1, uint64_t c2, uint64_t seed, uint64_t domain,
                   double[:, ::1] out):
    """Four uniforms per counter (c0[i], c1, c2, 0) under key (seed, domain)."""
    cdef Py_ssize_t i, j
    cdef uint64_t ctr[4]
    cdef uint64_t w[4]
    with nogil:
        for i in range(c0.shape[0]):
            ctr[0] = c0[i]; ctr[1] = c1; ctr[2] = c2; ctr[3] = 0
            philox(ctr, seed, domain, w)
            for j in range(4):
                out[i, j] = to_uniform(w[j])


cdef inline void tangents(double u0, double u1, double u2, double* t1, double* t2) noexcept nogil:
    # t1 = normalize(a x u), a = e3 unless |u.e3| > 0.9 (then e2); t2 = u x t1
    cdef double x, y, z, nrm
    if fabs(u2) > 0.9:
        x = u2
        y = 0.0
        z = -u0
    else:
        x = -u1
        y = u0
        z = 0.0
    nrm = sqrt(x * x + y * y + z * z)
    x = x / nrm
    y = y / nrm
    z = z / nrm
    t1[0] = x
    t1[1] = y
    t1[2] = z
    t2[0] = u1 * z - u2 * y
    t2[1] = u2 * x - u0 * z
    t2[2] = u0 * y - u1 * x


def simulate_block(double[:, ::1] xi_init, int64_t pid_offset, uint64_t seed, uint64_t domain,
                   uint64_t stream, double c, double rate_multiplier, int max_collisions,
                   double max_x, int64_t max_ticks, int transparent,
                   int32_t[::1] status, int32_t[::1] ncoll, double[:, ::1] vel_out,
                   int64_t[::1] crossings):
    """Run particles ``pid_offset + i`` from ``xi_init[i]``; returns
    (shrink_violations, total_collisions).

    Absorbing mode stops a particle at its first crossing of x = 0.
    Transparent mode lets it pass, counts every backward crossing in
    ``crossings[n]`` and stops once it is behind the wall with |xi - c| < c
    (it can then never move forward again).
    """
    cdef Py_ssize_t N = xi_init.shape[0]
    cdef Py_ssize_t i
    cdef uint64_t ctr[4]
    cdef uint64_t words[4]
    cdef double v0, v1, v2, d0, d1, d2, r, rnew, lam, L, x, mu, s, psi, cp, sp
    cdef double n0, n1, n2, dn, u0, u1, u2
    cdef double t1[3]
    cdef double t2[3]
    cdef int nc, st
    cdef int64_t step
    cdef int64_t violations = 0, total_coll = 0
    cdef Py_ssize_t ncross = crossings.shape[0]
    with nogil:
        for i in range(N):
            v0 = xi_init[i, 0]
            v1 = xi_init[i, 1]
            v2 = xi_init[i, 2]
            x = 0.0
            nc = 0
            step = 0
            st = ST_MAX_TICKS
            while step < max_ticks:
                ctr[0] = <uint64_t>(pid_offset + i)
                ctr[1] = <uint64_t>step
                ctr[2] = stream
                ctr[3] = 0
                philox(ctr, seed, domain, words)
                step = step + 1
                if v0 == 0.0:
                    st = ST_GRAZING
                    break
                d0 = v0 + c
                d1 = v1
                d2 = v2
                r = sqrt(d0 * d0 + d1 * d1 + d2 * d2)
                lam = rate_multiplier * PI * r / fabs(v0)
                L = -log(to_uniform(words[0])) / lam
                if v0 < 0.0:
                    if transparent:
                        if x >= 0.0 and L >= x:
                            if nc < ncross:
                                crossings[nc] += 1
                        x = x - L
                        if x < 0.0 and r < c:
                            st = ST_RETURNED
                            break
                    else:
                        if L >= x:
                            st = ST_RETURNED
                            break
                        x = x - L
                else:
                    x = x + L
                    if x > max_x:
                        st = ST_MAX_X
                        break
                if nc >= max_collisions:
                    st = ST_MAX_COLLISIONS
                    break
                # collision: normal with density ~ u.n on the half-sphere
                u0 = d0 / r
                u1 = d1 / r
                u2 = d2 / r
                tangents(u0, u1, u2, t1, t2)
                mu = sqrt(to_uniform(words[1]))
                s = sqrt(1.0 - to_uniform(words[1]))
                psi = TWO_PI * to_uniform(words[2])
                cp = cos(psi)
                sp = sin(psi)
                n0 = mu * u0 + s * (cp * t1[0] + sp * t2[0])
                n1 = mu * u1 + s * (cp * t1[1] + sp * t2[1])
                n2 = mu * u2 + s * (cp * t1[2] + sp * t2[2])
                dn = d0 * n0 + d1 * n1 + d2 * n2
                v0 = v0 - dn * n0
                v1 = v1 - dn * n1
                v2 = v2 - dn * n2
                nc = nc + 1
                d0 = v0 + c
                rnew = sqrt(d0 * d0 + v1 * v1 + v2 * v2)
                if rnew > r * (1.0 + 1e-12):
                    violations += 1
            status[i] = st
            ncoll[i] = nc
            vel_out[i, 0] = v0
            vel_out[i, 1] = v1
            vel_out[i, 2] = v2
            total_coll += nc
    return violations, total_coll


cdef double j_prefix_table(const double* rates, const uint8_t* fwd, Py_ssize_t q, Py_ssize_t K,
                           double kappa, double* D, double* A, double* B, double* out) noexcept nogil:
    """J over the sub-chains q..j for every j in [q, K); result in out[j]."""
    cdef Py_ssize_t W = K + 1
    cdef Py_ssize_t la = 0, mb = 0, j, ii, jj, t
    cdef double a, b
    # collect rates of the sub-chain in order
    for t in range(q, K):
        if fwd[t]:
            A[la] = rates[t]
            la += 1
        else:
            B[mb] = rates[t]
            mb += 1
    for ii in range(la + 1):
        for jj in range(mb + 1):
            if ii == 0 or jj == 0:
                D[ii * W + jj] = 0.0
            elif ii == 1 and jj == 1:
                D[W + 1] = kappa * 2.0 * A[0] * B[0] / (A[0] + B[0])
            else:
                a = A[ii - 1]
                b = B[jj - 1]
                D[ii * W + jj] = a / (a + b) * D[(ii - 1) * W + jj] + b / (a + b) * D[ii * W + jj - 1]
    la = 0
    mb = 0
    for j in range(q, K):
        if fwd[j]:
            la += 1
        else:
            mb += 1
        out[j] = D[la * W + mb]
    return 0.0


def j_effective(double[:, ::1] rates, uint8_t[:, ::1] fwd, double kappa, int absorbing):
    """J for each chain row; index 0 is the return velocity, K-1 the emitted one.

    With ``absorbing`` the whole-line value is corrected for paths that
    crossed the wall before their final segment (first-passage renewal).
    """
    cdef Py_ssize_t S = rates.shape[0], K = rates.shape[1]
    cdef Py_ssize_t s, q, j
    cdef double val
    res = np.zeros(S)
    cdef double[::1] res_v = res
    cdef double[::1] D = np.empty((K + 1) * (K + 1))
    cdef double[::1] A = np.empty(K)
    cdef double[::1] B = np.empty(K)
    cdef double[::1] Jrow = np.empty(K)
    cdef double[::1] JF = np.empty(K)
    cdef double[:, ::1] Jq = np.empty((K, K))
    with nogil:
        for s in range(S):
            if not absorbing:
                j_prefix_table(&rates[s, 0], &fwd[s, 0], 0, K, kappa, &D[0], &A[0], &B[0], &Jrow[0])
                res_v[s] = Jrow[K - 1]
                continue
            for q in range(K - 1, -1, -1):
                j_prefix_table(&rates[s, 0], &fwd[s, 0], q, K, kappa, &D[0], &A[0], &B[0], &Jq[q, 0])
                if fwd[s, q]:
                    JF[q] = 0.0
                    continue
                val = Jq[q, K - 1]
                for j in range(q + 1, K - 1):
                    if not fwd[s, j]:
                        val = val - JF[j] / (2.0 * kappa * rates[s, j]) * Jq[q, j]
                JF[q] = val
            res_v[s] = JF[0]
    return res
