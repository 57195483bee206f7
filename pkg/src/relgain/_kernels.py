"""Compiled inner loops.

Distributions reach these kernels as a component table: one row per
component, ``[kind, coef, cx, cy, cz, par1, par2, par3]``, plus an optional
zero-padded value array for a gridded component.  Parallel loops write into
per-chunk slots that are reduced serially afterwards, so results do not
depend on the thread count.
"""
import math

import numpy as np
from numba import njit, prange

KIND_JUTTNER = 0
KIND_GAUSSIAN = 1
KIND_BUMP = 2
KIND_GRID = 3
KIND_POWERLAW = 4

TABLE_WIDTH = 8


@njit(cache=True, inline="always")
def _trilinear(gv, R, n, x, y, z):
    if x < -R or x > R or y < -R or y > R or z < -R or z > R:
        return 0.0
    h = 2.0 * R / n
    # gv is padded by one zero ghost layer on each side
    u = (x + R) / h + 0.5
    v = (y + R) / h + 0.5
    w = (z + R) / h + 0.5
    i = min(int(math.floor(u)), n)
    j = min(int(math.floor(v)), n)
    k = min(int(math.floor(w)), n)
    fu = u - i
    fv = v - j
    fw = w - k
    c00 = gv[i, j, k] * (1 - fu) + gv[i + 1, j, k] * fu
    c01 = gv[i, j, k + 1] * (1 - fu) + gv[i + 1, j, k + 1] * fu
    c10 = gv[i, j + 1, k] * (1 - fu) + gv[i + 1, j + 1, k] * fu
    c11 = gv[i, j + 1, k + 1] * (1 - fu) + gv[i + 1, j + 1, k + 1] * fu
    c0 = c00 * (1 - fv) + c10 * fv
    c1 = c01 * (1 - fv) + c11 * fv
    return c0 * (1 - fw) + c1 * fw


@njit(cache=True)
def eval_point(tab, gv, x, y, z):
    tot = 0.0
    for r in range(tab.shape[0]):
        kind = int(tab[r, 0])
        c = tab[r, 1]
        dx = x - tab[r, 2]
        dy = y - tab[r, 3]
        dz = z - tab[r, 4]
        r2 = dx * dx + dy * dy + dz * dz
        if kind == KIND_JUTTNER:
            # coef already carries exp(-1/T); keeps small T from underflowing early
            tot += c * math.exp(-(math.sqrt(1.0 + r2) - 1.0) * tab[r, 5])
        elif kind == KIND_GAUSSIAN:
            tot += c * math.exp(-r2 * tab[r, 5])
        elif kind == KIND_BUMP:
            t2 = r2 * tab[r, 5]
            if t2 < 1.0:
                tot += c * math.exp(-(t2 ** tab[r, 6]) / (1.0 - t2))
        elif kind == KIND_GRID:
            tot += c * _trilinear(gv, tab[r, 5], int(tab[r, 6]), x, y, z)
        elif kind == KIND_POWERLAW:
            tot += c * (r2 + tab[r, 6]) ** (-0.5 * tab[r, 5]) * math.exp(-r2 * tab[r, 7])
    return tot


@njit(parallel=True, cache=True)
def eval_many(tab, gv, pts):
    n = pts.shape[0]
    out = np.empty(n)
    for i in prange(n):
        out[i] = eval_point(tab, gv, pts[i, 0], pts[i, 1], pts[i, 2])
    return out


@njit(cache=True, inline="always")
def _pair(p0x, p0y, p0z, p00, qx, qy, qz, q0):
    # returns g, s for the pair; g^2 = |p-q|^2 - (p0-q0)^2 without cancellation
    dx = p0x - qx
    dy = p0y - qy
    dz = p0z - qz
    de = (dx * (p0x + qx) + dy * (p0y + qy) + dz * (p0z + qz)) / (p00 + q0)
    g2 = dx * dx + dy * dy + dz * dz - de * de
    if g2 < 0.0:
        g2 = 0.0
    s = 2.0 * (p00 * q0 - (p0x * qx + p0y * qy + p0z * qz) + 1.0)
    return math.sqrt(g2), s


@njit(cache=True, inline="always")
def _angular(code, cth):
    if code == 1:
        return 1.0 if cth >= 0.0 else 0.0
    if code == 2:
        return cth * cth
    return 1.0


@njit(parallel=True, cache=True)
def gain_probes(probes, qpts, ftab, fgv, htab, hgv, a, s0code, omegas, ow, sing_idx, sing_avg):
    """Sum over q nodes and sphere nodes of v g^a sigma0 f(p') h(q') (no cell volume)."""
    npr = probes.shape[0]
    nq = qpts.shape[0]
    nw = omegas.shape[0]
    b = 1.0 + a
    out = np.zeros(npr)
    for ip in prange(npr):
        px = probes[ip, 0]
        py = probes[ip, 1]
        pz = probes[ip, 2]
        p0 = math.sqrt(1.0 + px * px + py * py + pz * pz)
        acc = 0.0
        for j in range(nq):
            qx = qpts[j, 0]
            qy = qpts[j, 1]
            qz = qpts[j, 2]
            q0 = math.sqrt(1.0 + qx * qx + qy * qy + qz * qz)
            g, s = _pair(px, py, pz, p0, qx, qy, qz, q0)
            if j == sing_idx[ip]:
                gb = sing_avg[ip]
            elif g == 0.0:
                gb = 1.0 if b == 0.0 else 0.0
            else:
                gb = g**b
            rate = gb * math.sqrt(s) / (p0 * q0)
            if rate == 0.0:
                continue
            Px = px + qx
            Py = py + qy
            Pz = pz + qz
            # (gamma - 1)/|P|^2 in closed form, regular at P = 0
            rs = math.sqrt(s)
            c = 1.0 / (rs * (p0 + q0 + rs))
            hg = 0.5 * g
            sub = 0.0
            for iw in range(nw):
                wx = omegas[iw, 0]
                wy = omegas[iw, 1]
                wz = omegas[iw, 2]
                cp = c * (Px * wx + Py * wy + Pz * wz)
                dx = hg * (wx + cp * Px)
                dy = hg * (wy + cp * Py)
                dz = hg * (wz + cp * Pz)
                ppx = 0.5 * Px + dx
                ppy = 0.5 * Py + dy
                ppz = 0.5 * Pz + dz
                qqx = 0.5 * Px - dx
                qqy = 0.5 * Py - dy
                qqz = 0.5 * Pz - dz
                fv = eval_point(ftab, fgv, ppx, ppy, ppz)
                if fv == 0.0:
                    continue
                val = fv * eval_point(htab, hgv, qqx, qqy, qqz)
                if s0code != 0:
                    if g == 0.0:
                        cth = 1.0
                    else:
                        pp0 = math.sqrt(1.0 + ppx * ppx + ppy * ppy + ppz * ppz)
                        qq0 = math.sqrt(1.0 + qqx * qqx + qqy * qqy + qqz * qqz)
                        num = ((px - qx) * (2.0 * dx) + (py - qy) * (2.0 * dy)
                               + (pz - qz) * (2.0 * dz) - (p0 - q0) * (pp0 - qq0))
                        cth = min(1.0, max(-1.0, num / (g * g)))
                    val *= _angular(s0code, cth)
                sub += ow[iw] * val
            acc += rate * sub
        out[ip] = acc
    return out


@njit(parallel=True, cache=True)
def loss_probes(probes, qpts, hvals, a, s0code, omegas, ow, sing_idx, sing_avg):
    """Sum over q of v g^a h(q) times the omega-integral of sigma0 (no cell volume, no f(p))."""
    npr = probes.shape[0]
    nq = qpts.shape[0]
    nw = omegas.shape[0]
    b = 1.0 + a
    out = np.zeros(npr)
    for ip in prange(npr):
        px = probes[ip, 0]
        py = probes[ip, 1]
        pz = probes[ip, 2]
        p0 = math.sqrt(1.0 + px * px + py * py + pz * pz)
        acc = 0.0
        for j in range(nq):
            hq = hvals[j]
            if hq == 0.0:
                continue
            qx = qpts[j, 0]
            qy = qpts[j, 1]
            qz = qpts[j, 2]
            q0 = math.sqrt(1.0 + qx * qx + qy * qy + qz * qz)
            g, s = _pair(px, py, pz, p0, qx, qy, qz, q0)
            if j == sing_idx[ip]:
                gb = sing_avg[ip]
            elif g == 0.0:
                gb = 1.0 if b == 0.0 else 0.0
            else:
                gb = g**b
            rate = gb * math.sqrt(s) / (p0 * q0)
            if s0code == 0:
                ang = 4.0 * math.pi
            else:
                Px = px + qx
                Py = py + qy
                Pz = pz + qz
                rs = math.sqrt(s)
                c = 1.0 / (rs * (p0 + q0 + rs))
                hg = 0.5 * g
                ang = 0.0
                for iw in range(nw):
                    wx = omegas[iw, 0]
                    wy = omegas[iw, 1]
                    wz = omegas[iw, 2]
                    if g == 0.0:
                        cth = 1.0
                    else:
                        cp = c * (Px * wx + Py * wy + Pz * wz)
                        dx = hg * (wx + cp * Px)
                        dy = hg * (wy + cp * Py)
                        dz = hg * (wz + cp * Pz)
                        ppx = 0.5 * Px + dx
                        ppy = 0.5 * Py + dy
                        ppz = 0.5 * Pz + dz
                        qqx = 0.5 * Px - dx
                        qqy = 0.5 * Py - dy
                        qqz = 0.5 * Pz - dz
                        pp0 = math.sqrt(1.0 + ppx * ppx + ppy * ppy + ppz * ppz)
                        qq0 = math.sqrt(1.0 + qqx * qqx + qqy * qqy + qqz * qqz)
                        num = ((px - qx) * (2.0 * dx) + (py - qy) * (2.0 * dy)
                               + (pz - qz) * (2.0 * dz) - (p0 - q0) * (pp0 - qq0))
                        cth = min(1.0, max(-1.0, num / (g * g)))
                    ang += ow[iw] * _angular(s0code, cth)
            acc += rate * hq * ang
        out[ip] = acc
    return out


@njit(cache=True, inline="always")
def _sinc(x):
    if x < 1e-4:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return math.sin(x) / x


@njit(parallel=True, cache=True)
def fourier_pairs(pts, fw, hw, same, exps, diag, kvecs, nchunks):
    """Real and imaginary parts of sum_{p,q} w_e(p,q) e^{-i k.(p+q)/2} sin|A|/|A|.

    ``w_e = g^(1+a_e) sqrt(s)/(p0 q0) fw(p) hw(q)`` for each exponent a_e;
    ``diag[e, i]`` replaces g^(1+a_e) on the p = q diagonal.  The 4 pi factor
    of the sphere integral is applied by the caller.
    """
    npts = pts.shape[0]
    M = kvecs.shape[0]
    E = exps.shape[0]
    kk = np.empty(M)
    for m in range(M):
        kk[m] = kvecs[m, 0] ** 2 + kvecs[m, 1] ** 2 + kvecs[m, 2] ** 2
    acc_re = np.zeros((nchunks, E, M))
    acc_im = np.zeros((nchunks, E, M))
    p0s = np.empty(npts)
    for i in range(npts):
        p0s[i] = math.sqrt(1.0 + pts[i, 0] ** 2 + pts[i, 1] ** 2 + pts[i, 2] ** 2)
    for c in prange(nchunks):
        we = np.empty(E)
        for i in range(c, npts, nchunks):
            fi = fw[i]
            if fi == 0.0:
                continue
            px = pts[i, 0]
            py = pts[i, 1]
            pz = pts[i, 2]
            p0 = p0s[i]
            j0 = i if same else 0
            for j in range(j0, npts):
                w0 = fi * hw[j]
                if w0 == 0.0:
                    continue
                qx = pts[j, 0]
                qy = pts[j, 1]
                qz = pts[j, 2]
                q0 = p0s[j]
                g, s = _pair(px, py, pz, p0, qx, qy, qz, q0)
                base = w0 * math.sqrt(s) / (p0 * q0)
                if same and j != i:
                    base *= 2.0
                nz = False
                for e in range(E):
                    if i == j:
                        we[e] = base * diag[e, i]
                    else:
                        we[e] = base * g ** (1.0 + exps[e])
                    if we[e] != 0.0:
                        nz = True
                if not nz:
                    continue
                Px = px + qx
                Py = py + qy
                Pz = pz + qz
                hg = 0.5 * g
                invs = 1.0 / s
                for m in range(M):
                    t = Px * kvecs[m, 0] + Py * kvecs[m, 1] + Pz * kvecs[m, 2]
                    sc = _sinc(hg * math.sqrt(kk[m] + t * t * invs))
                    cr = sc * math.cos(0.5 * t)
                    ci = -sc * math.sin(0.5 * t)
                    for e in range(E):
                        acc_re[c, e, m] += we[e] * cr
                        acc_im[c, e, m] += we[e] * ci
    re = np.zeros((E, M))
    im = np.zeros((E, M))
    for c in range(nchunks):
        re += acc_re[c]
        im += acc_im[c]
    return re, im


# sin(x)/x on x >= 0 without libm calls, so the mode loop vectorises: reduce
# by 2 pi (Cody-Waite, two-part constant), then the Taylor series of sin on
# [-pi, pi] through x^27, whose truncation error is below 3e-17.
_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16
_INV_TWO_PI = 0.15915494309189535
_ROUND_MAGIC = 6755399441055744.0  # 1.5 * 2^52: adding and subtracting rounds to integer
_S = [(-1.0) ** k / math.factorial(2 * k + 1) for k in range(14)]
_S0, _S1, _S2, _S3, _S4, _S5, _S6, _S7, _S8, _S9, _S10, _S11, _S12, _S13 = _S


@njit(cache=True, error_model="numpy")
def sinc_array(x, out):
    """out = sin(x)/x elementwise for x > 0 (callers clamp x away from 0)."""
    for m in range(x.shape[0]):
        v = x[m]
        q = (v * _INV_TWO_PI + _ROUND_MAGIC) - _ROUND_MAGIC
        r = (v - q * _TWO_PI_HI) - q * _TWO_PI_LO
        r2 = r * r
        acc = _S13 * r2 + _S12
        acc = acc * r2 + _S11
        acc = acc * r2 + _S10
        acc = acc * r2 + _S9
        acc = acc * r2 + _S8
        acc = acc * r2 + _S7
        acc = acc * r2 + _S6
        acc = acc * r2 + _S5
        acc = acc * r2 + _S4
        acc = acc * r2 + _S3
        acc = acc * r2 + _S2
        acc = acc * r2 + _S1
        acc = acc * r2 + _S0
        out[m] = r * acc / v


@njit(parallel=True, cache=True)
def fourier_lattice(idx, pts, fw, hw, same, exps, diag, modes, n, dk, nchunks):
    """Lattice specialisation of :func:`fourier_pairs`.

    Nodes are cell centred and k = (pi/R) m with integer m, so k.(p+q) =
    (2 pi/n) (i_p + i_q + 1 - n).m and the phase depends on the pair only
    through the index sum.  Pairs are therefore visited grouped by that sum:
    the phase and (k.(p+q))^2 are formed once per group, each pair adds a
    real sinc-weighted term, and the group total is rotated by its phase at
    the end.  ``idx`` is accepted for signature compatibility; nodes are
    assumed in the ij order of ``MomentumGrid.points``.
    """
    M = modes.shape[0]
    E = exps.shape[0]
    two_n = 2 * n
    n2 = n * n
    ctab = np.empty(two_n)
    stab = np.empty(two_n)
    for d in range(two_n):
        ctab[d] = math.cos(math.pi * d / n)
        stab[d] = math.sin(math.pi * d / n)
    tscale = 2.0 * math.pi / n
    m0 = np.ascontiguousarray(modes[:, 0])
    m1 = np.ascontiguousarray(modes[:, 1])
    m2 = np.ascontiguousarray(modes[:, 2])
    mm = np.empty(M)
    for m in range(M):
        mm[m] = dk * dk * (m0[m] ** 2 + m1[m] ** 2 + m2[m] ** 2)
    npts = pts.shape[0]
    p0s = np.empty(npts)
    for i in range(npts):
        p0s[i] = math.sqrt(1.0 + pts[i, 0] ** 2 + pts[i, 1] ** 2 + pts[i, 2] ** 2)
    nsum = 2 * n - 1
    ngroups = nsum * nsum * nsum
    acc_re = np.zeros((nchunks, E * M))
    acc_im = np.zeros((nchunks, E * M))
    for c in prange(nchunks):
        we = np.empty(E)
        tt = np.empty(M)
        sc = np.empty(M)
        tot = np.empty(E * M)
        are = acc_re[c]
        aim = acc_im[c]
        for grp in range(c, ngroups, nchunks):
            sx = grp // (nsum * nsum)
            sy = (grp // nsum) % nsum
            sz = grp % nsum
            nx = sx + 1 - n
            ny = sy + 1 - n
            nz = sz + 1 - n
            for m in range(M):
                t = tscale * (nx * m0[m] + ny * m1[m] + nz * m2[m])
                tt[m] = t * t
            tot[:] = 0.0
            hit = False
            for ax in range(max(0, sx - n + 1), min(n - 1, sx) + 1):
                bx = sx - ax
                for ay in range(max(0, sy - n + 1), min(n - 1, sy) + 1):
                    by = sy - ay
                    for az in range(max(0, sz - n + 1), min(n - 1, sz) + 1):
                        bz = sz - az
                        i = ax * n2 + ay * n + az
                        j = bx * n2 + by * n + bz
                        if same and j < i:
                            continue
                        w0 = fw[i] * hw[j]
                        if w0 == 0.0:
                            continue
                        g, s = _pair(pts[i, 0], pts[i, 1], pts[i, 2], p0s[i],
                                     pts[j, 0], pts[j, 1], pts[j, 2], p0s[j])
                        base = w0 * math.sqrt(s) / (p0s[i] * p0s[j])
                        if same and j != i:
                            base *= 2.0
                        nzw = False
                        for e in range(E):
                            if i == j:
                                we[e] = base * diag[e, i]
                            else:
                                we[e] = base * g ** (1.0 + exps[e])
                            if we[e] != 0.0:
                                nzw = True
                        if not nzw:
                            continue
                        hit = True
                        hg = 0.5 * g
                        invs = 1.0 / s
                        for m in range(M):
                            sc[m] = max(hg * math.sqrt(mm[m] + tt[m] * invs), 1e-300)
                        sinc_array(sc, sc)
                        for e in range(E):
                            w = we[e]
                            off = e * M
                            for m in range(M):
                                tot[off + m] += w * sc[m]
            if not hit:
                continue
            for m in range(M):
                r = (nx * m0[m] + ny * m1[m] + nz * m2[m]) % two_n
                cr = ctab[r]
                ci = -stab[r]
                for e in range(E):
                    are[e * M + m] += tot[e * M + m] * cr
                    aim[e * M + m] += tot[e * M + m] * ci
    re = np.zeros(E * M)
    im = np.zeros(E * M)
    for c in range(nchunks):
        re += acc_re[c]
        im += acc_im[c]
    return re.reshape((E, M)), im.reshape((E, M))


@njit(parallel=True, cache=True)
def weighted_pair_sum(pts, fw, hw, exps, diag, kvecs, nchunks):
    """sum_{p,q} g^(a_e) sqrt(s)/(p0 q0) fw hw e^{-i k.(p+q)/2} for each k (the ineq1 right side)."""
    npts = pts.shape[0]
    M = kvecs.shape[0]
    E = exps.shape[0]
    acc_re = np.zeros((nchunks, E, M))
    acc_im = np.zeros((nchunks, E, M))
    for c in prange(nchunks):
        for i in range(c, npts, nchunks):
            fi = fw[i]
            if fi == 0.0:
                continue
            px = pts[i, 0]
            py = pts[i, 1]
            pz = pts[i, 2]
            p0 = math.sqrt(1.0 + px * px + py * py + pz * pz)
            for j in range(npts):
                w0 = fi * hw[j]
                if w0 == 0.0:
                    continue
                qx = pts[j, 0]
                qy = pts[j, 1]
                qz = pts[j, 2]
                q0 = math.sqrt(1.0 + qx * qx + qy * qy + qz * qz)
                g, s = _pair(px, py, pz, p0, qx, qy, qz, q0)
                base = w0 * math.sqrt(s) / (p0 * q0)
                for m in range(M):
                    t = (px + qx) * kvecs[m, 0] + (py + qy) * kvecs[m, 1] + (pz + qz) * kvecs[m, 2]
                    cr = math.cos(0.5 * t)
                    ci = -math.sin(0.5 * t)
                    for e in range(E):
                        if i == j:
                            we = base * diag[e, i]
                        else:
                            we = base * g ** exps[e]
                        acc_re[c, e, m] += we * cr
                        acc_im[c, e, m] += we * ci
    re = np.zeros((E, M))
    im = np.zeros((E, M))
    for c in range(nchunks):
        re += acc_re[c]
        im += acc_im[c]
    return re, im
