"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Every arithmetic step is written in the same order as the C code so both
backends agree bit for bit (both call the platform libm for log, sqrt, cos
and sin).  The simulator here is slow; it exists so the package works
without a compiler and so the compiled kernel has something to be checked
against.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import MASK64, philox_py, to_uniform_py, uniforms4

ST_RETURNED = 0
ST_MAX_COLLISIONS = 1
ST_MAX_X = 2
ST_GRAZING = 3
ST_MAX_TICKS = 4

PI = 3.141592653589793
TWO_PI = 6.283185307179586


def philox_block(c0, c1, c2, c3, k0, k1):
    return philox_py(c0 & MASK64, c1 & MASK64, c2 & MASK64, c3 & MASK64, k0 & MASK64, k1 & MASK64)


def uniforms_block(c0, c1, c2, seed, domain, out):
    out[:] = uniforms4(seed, domain, np.asarray(c0, dtype=np.uint64), c1, c2)


def _tangents(u0, u1, u2):
    if math.fabs(u2) > 0.9:
        x, y, z = u2, 0.0, -u0
    else:
        x, y, z = -u1, u0, 0.0
    nrm = math.sqrt(x * x + y * y + z * z)
    x = x / nrm
    y = y / nrm
    z = z / nrm
    return (x, y, z), (u1 * z - u2 * y, u2 * x - u0 * z, u0 * y - u1 * x)


def simulate_block(xi_init, pid_offset, seed, domain, stream, c, rate_multiplier, max_collisions,
                   max_x, max_ticks, transparent, status, ncoll, vel_out, crossings):
    ncross = len(crossings)
    violations = 0
    total_coll = 0
    seed &= MASK64
    domain &= MASK64
    for i in range(xi_init.shape[0]):
        v0, v1, v2 = (float(t) for t in xi_init[i])
        x = 0.0
        nc = 0
        step = 0
        st = ST_MAX_TICKS
        pid = (pid_offset + i) & MASK64
        while step < max_ticks:
            w0, w1, w2, _ = philox_py(pid, step, stream, 0, seed, domain)
            step += 1
            if v0 == 0.0:
                st = ST_GRAZING
                break
            d0 = v0 + c
            d1 = v1
            d2 = v2
            r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            lam = rate_multiplier * PI * r / math.fabs(v0)
            L = -math.log(to_uniform_py(w0)) / lam
            if v0 < 0.0:
                if transparent:
                    if x >= 0.0 and L >= x and nc < ncross:
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
            u0 = d0 / r
            u1 = d1 / r
            u2 = d2 / r
            t1, t2 = _tangents(u0, u1, u2)
            mu = math.sqrt(to_uniform_py(w1))
            s = math.sqrt(1.0 - to_uniform_py(w1))
            psi = TWO_PI * to_uniform_py(w2)
            cp = math.cos(psi)
            sp = math.sin(psi)
            n0 = mu * u0 + s * (cp * t1[0] + sp * t2[0])
            n1 = mu * u1 + s * (cp * t1[1] + sp * t2[1])
            n2 = mu * u2 + s * (cp * t1[2] + sp * t2[2])
            dn = d0 * n0 + d1 * n1 + d2 * n2
            v0 = v0 - dn * n0
            v1 = v1 - dn * n1
            v2 = v2 - dn * n2
            nc += 1
            d0 = v0 + c
            rnew = math.sqrt(d0 * d0 + v1 * v1 + v2 * v2)
            if rnew > r * (1.0 + 1e-12):
                violations += 1
        status[i] = st
        ncoll[i] = nc
        vel_out[i, 0] = v0
        vel_out[i, 1] = v1
        vel_out[i, 2] = v2
        total_coll += nc
    return violations, total_coll


def _prefix_table(rates, fwd, q, kappa):
    """J over sub-chains q..j for all j >= q, vectorized over rows.

    Returns an array (S, K) whose column j holds J(q..j); columns < q are 0.
    """
    S, K = rates.shape
    sub_r = rates[:, q:]
    sub_f = fwd[:, q:]
    Ks = K - q
    rows = np.arange(S)
    # ordered forward / backward rates of the sub-chain, padded with 1
    ia = np.cumsum(sub_f, axis=1) - 1
    ib = np.cumsum(~sub_f, axis=1) - 1
    A = np.ones((S, Ks))
    B = np.ones((S, Ks))
    rr, cc = np.nonzero(sub_f)
    A[rr, ia[rr, cc]] = sub_r[rr, cc]
    rr, cc = np.nonzero(~sub_f)
    B[rr, ib[rr, cc]] = sub_r[rr, cc]
    la = int(sub_f.sum(axis=1).max(initial=0))
    mb = int((~sub_f).sum(axis=1).max(initial=0))
    D = np.zeros((la + 1, mb + 1, S))
    for ii in range(1, la + 1):
        for jj in range(1, mb + 1):
            if ii == 1 and jj == 1:
                D[1, 1] = kappa * 2.0 * A[:, 0] * B[:, 0] / (A[:, 0] + B[:, 0])
            else:
                a = A[:, ii - 1]
                b = B[:, jj - 1]
                D[ii, jj] = a / (a + b) * D[ii - 1, jj] + b / (a + b) * D[ii, jj - 1]
    out = np.zeros((S, K))
    cnt_a = np.cumsum(sub_f, axis=1)
    cnt_b = np.cumsum(~sub_f, axis=1)
    for t in range(Ks):
        out[:, q + t] = D[cnt_a[:, t], cnt_b[:, t], rows]
    return out


def j_effective(rates, fwd, kappa, absorbing):
    rates = np.ascontiguousarray(rates, dtype=float)
    fwd = np.ascontiguousarray(fwd, dtype=bool)
    S, K = rates.shape
    if S == 0:
        return np.zeros(0)
    if not absorbing:
        return _prefix_table(rates, fwd, 0, kappa)[:, K - 1]
    JF = np.zeros((S, K))
    for q in range(K - 1, -1, -1):
        Jq = _prefix_table(rates, fwd, q, kappa)
        val = Jq[:, K - 1]
        for j in range(q + 1, K - 1):
            corr = JF[:, j] / (2.0 * kappa * rates[:, j]) * Jq[:, j]
            val = np.where(fwd[:, j], val, val - corr)
        JF[:, q] = np.where(fwd[:, q], 0.0, val)
    return JF[:, 0]
