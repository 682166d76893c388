"""Compiled inner loops: trace evaluation, gradients, and the optimizer.

Works on the packed integer encoding from :mod:`msprep.circuit` (kind codes
0=RX 1=RY 2=RZ 3=U3 4=CNOT).  The production route propagates the m input
columns forward and the m output columns backward, contracting derivative
traces locally at each gate site, so one pass costs O(gates * m * 2^n) and
scales with the number of mapped states.  A dense pairing-matrix route is
kept alongside as an independent cross-check.  The multistart driver's
quasi-Newton loop is also compiled, with workspaces allocated once per
start.
"""

import numpy as np
from numba import njit

K_RX = 0
K_RY = 1
K_RZ = 2
K_U3 = 3
K_CNOT = 4

NUM_PARAMS = np.array([1, 1, 1, 3, 0], dtype=np.int64)


@njit(cache=True, nogil=True)
def _fill_gate(kind, params, off, out):
    if kind == K_RX:
        t = params[off]
        c, s = np.cos(t / 2), np.sin(t / 2)
        out[0, 0] = c
        out[0, 1] = -1j * s
        out[1, 0] = -1j * s
        out[1, 1] = c
    elif kind == K_RY:
        t = params[off]
        c, s = np.cos(t / 2), np.sin(t / 2)
        out[0, 0] = c
        out[0, 1] = -s
        out[1, 0] = s
        out[1, 1] = c
    elif kind == K_RZ:
        t = params[off]
        out[0, 0] = np.exp(-0.5j * t)
        out[0, 1] = 0.0
        out[1, 0] = 0.0
        out[1, 1] = np.exp(0.5j * t)
    else:
        t, phi, lam = params[off], params[off + 1], params[off + 2]
        c, s = np.cos(t / 2), np.sin(t / 2)
        out[0, 0] = c
        out[0, 1] = -np.exp(1j * lam) * s
        out[1, 0] = np.exp(1j * phi) * s
        out[1, 1] = np.exp(1j * (phi + lam)) * c


@njit(cache=True, nogil=True)
def _fill_deriv(kind, params, off, which, out):
    if kind == K_RX:
        t = params[off]
        c, s = np.cos(t / 2) / 2, np.sin(t / 2) / 2
        out[0, 0] = -s
        out[0, 1] = -1j * c
        out[1, 0] = -1j * c
        out[1, 1] = -s
    elif kind == K_RY:
        t = params[off]
        c, s = np.cos(t / 2) / 2, np.sin(t / 2) / 2
        out[0, 0] = -s
        out[0, 1] = -c
        out[1, 0] = c
        out[1, 1] = -s
    elif kind == K_RZ:
        t = params[off]
        out[0, 0] = -0.5j * np.exp(-0.5j * t)
        out[0, 1] = 0.0
        out[1, 0] = 0.0
        out[1, 1] = 0.5j * np.exp(0.5j * t)
    else:
        t, phi, lam = params[off], params[off + 1], params[off + 2]
        c, s = np.cos(t / 2), np.sin(t / 2)
        ep, el, epl = np.exp(1j * phi), np.exp(1j * lam), np.exp(1j * (phi + lam))
        if which == 0:
            out[0, 0] = -s / 2
            out[0, 1] = -el * c / 2
            out[1, 0] = ep * c / 2
            out[1, 1] = -epl * s / 2
        elif which == 1:
            out[0, 0] = 0.0
            out[0, 1] = 0.0
            out[1, 0] = 1j * ep * s
            out[1, 1] = 1j * epl * c
        else:
            out[0, 0] = 0.0
            out[0, 1] = -1j * el * s
            out[1, 0] = 0.0
            out[1, 1] = 1j * epl * c


@njit(cache=True, nogil=True, inline="always")
def _pair_base(rest, pos):
    # index with bit `pos` cleared, remaining bits taken from `rest`
    return ((rest >> pos) << (pos + 1)) | (rest & ((1 << pos) - 1))


@njit(cache=True, nogil=True)
def _columns_1q(src, dst, g, pos, dim, ncols):
    """dst = (one-qubit gate at bit pos) applied to the columns of src."""
    mask = 1 << pos
    for rest in range(dim >> 1):
        r0 = _pair_base(rest, pos)
        r1 = r0 | mask
        for c in range(ncols):
            x0 = src[r0, c]
            x1 = src[r1, c]
            dst[r0, c] = g[0, 0] * x0 + g[0, 1] * x1
            dst[r1, c] = g[1, 0] * x0 + g[1, 1] * x1


@njit(cache=True, nogil=True)
def _columns_cnot(src, dst, cpos, tpos, dim, ncols):
    """dst = CNOT applied to the columns of src (self-inverse permutation)."""
    cmask = 1 << cpos
    tmask = 1 << tpos
    for r in range(dim):
        rs = r ^ tmask if (r & cmask) != 0 else r
        for c in range(ncols):
            dst[r, c] = src[rs, c]


@njit(cache=True, nogil=True)
def _fill_trig(kinds, poff, params, trig):
    """Per-gate transcendentals, computed once and reused by every sweep.

    Slots: RX/RY get (cos(t/2), sin(t/2)); RZ gets (e^{-it/2}, e^{+it/2});
    U3 gets (cos(t/2), sin(t/2), e^{i phi}, e^{i lam}, e^{i(phi+lam)}).
    """
    for i in range(kinds.shape[0]):
        kind = kinds[i]
        if kind == K_CNOT:
            continue
        off = poff[i]
        if kind == K_RZ:
            t = params[off]
            trig[i, 0] = np.exp(-0.5j * t)
            trig[i, 1] = np.exp(0.5j * t)
        elif kind == K_U3:
            t = params[off]
            trig[i, 0] = np.cos(t / 2)
            trig[i, 1] = np.sin(t / 2)
            trig[i, 2] = np.exp(1j * params[off + 1])
            trig[i, 3] = np.exp(1j * params[off + 2])
            trig[i, 4] = trig[i, 2] * trig[i, 3]
        else:
            t = params[off]
            trig[i, 0] = np.cos(t / 2)
            trig[i, 1] = np.sin(t / 2)


@njit(cache=True, nogil=True, inline="always")
def _gate_from_trig(kind, trig, i, out):
    if kind == K_RX:
        out[0, 0] = trig[i, 0]
        out[0, 1] = -1j * trig[i, 1]
        out[1, 0] = out[0, 1]
        out[1, 1] = trig[i, 0]
    elif kind == K_RY:
        out[0, 0] = trig[i, 0]
        out[0, 1] = -trig[i, 1]
        out[1, 0] = trig[i, 1]
        out[1, 1] = trig[i, 0]
    elif kind == K_RZ:
        out[0, 0] = trig[i, 0]
        out[0, 1] = 0.0
        out[1, 0] = 0.0
        out[1, 1] = trig[i, 1]
    else:
        out[0, 0] = trig[i, 0]
        out[0, 1] = -trig[i, 3] * trig[i, 1]
        out[1, 0] = trig[i, 2] * trig[i, 1]
        out[1, 1] = trig[i, 4] * trig[i, 0]


@njit(cache=True, nogil=True, inline="always")
def _deriv_from_trig(kind, trig, i, which, out):
    if kind == K_RX:
        out[0, 0] = -trig[i, 1] / 2
        out[0, 1] = -0.5j * trig[i, 0]
        out[1, 0] = out[0, 1]
        out[1, 1] = out[0, 0]
    elif kind == K_RY:
        out[0, 0] = -trig[i, 1] / 2
        out[0, 1] = -trig[i, 0] / 2
        out[1, 0] = trig[i, 0] / 2
        out[1, 1] = -trig[i, 1] / 2
    elif kind == K_RZ:
        out[0, 0] = -0.5j * trig[i, 0]
        out[0, 1] = 0.0
        out[1, 0] = 0.0
        out[1, 1] = 0.5j * trig[i, 1]
    elif which == 0:
        out[0, 0] = -trig[i, 1] / 2
        out[0, 1] = -trig[i, 3] * trig[i, 0] / 2
        out[1, 0] = trig[i, 2] * trig[i, 0] / 2
        out[1, 1] = -trig[i, 4] * trig[i, 1] / 2
    elif which == 1:
        out[0, 0] = 0.0
        out[0, 1] = 0.0
        out[1, 0] = 1j * trig[i, 2] * trig[i, 1]
        out[1, 1] = 1j * trig[i, 4] * trig[i, 0]
    else:
        out[0, 0] = 0.0
        out[0, 1] = -1j * trig[i, 3] * trig[i, 1]
        out[1, 0] = 0.0
        out[1, 1] = 1j * trig[i, 4] * trig[i, 0]


@njit(cache=True, nogil=True)
def _columns_trace_grad(n, kinds, qa, qb, poff, params, v_cols, w_cols, fwd, back, dtrace, g, dg, trig):
    """Trace sum_i <w_i|U|v_i> and derivatives, using caller-owned buffers.

    ``fwd`` stores every forward prefix block (gates+1, dim, m); ``back`` is
    a (dim, m) scratch block for the adjoint sweep; ``dtrace`` receives one
    complex derivative per parameter; ``trig`` is the (gates, 5) scratch for
    per-gate transcendentals.
    """
    dim = 1 << n
    ncols = v_cols.shape[1]
    num_gates = kinds.shape[0]

    _fill_trig(kinds, poff, params, trig)

    fwd[0] = v_cols
    for i in range(num_gates):
        if kinds[i] == K_CNOT:
            _columns_cnot(fwd[i], fwd[i + 1], n - 1 - qa[i], n - 1 - qb[i], dim, ncols)
        else:
            _gate_from_trig(kinds[i], trig, i, g)
            _columns_1q(fwd[i], fwd[i + 1], g, n - 1 - qa[i], dim, ncols)

    trace = 0.0 + 0.0j
    for r in range(dim):
        for c in range(ncols):
            trace += np.conj(w_cols[r, c]) * fwd[num_gates, r, c]

    back[:, :] = w_cols
    scratch = fwd[num_gates]  # final block is free once the trace is formed
    for i in range(num_gates - 1, -1, -1):
        if kinds[i] == K_CNOT:
            # the permutation is self-inverse, so the adjoint is itself
            _columns_cnot(back, scratch, n - 1 - qa[i], n - 1 - qb[i], dim, ncols)
            tmp = back
            back = scratch
            scratch = tmp
            continue
        pos = n - 1 - qa[i]
        npar = NUM_PARAMS[kinds[i]]
        # b2[a, b] = sum_cols sum_rest conj(back[(a,rest)]) * fwd_i[(b,rest)]
        b00 = 0.0 + 0.0j
        b01 = 0.0 + 0.0j
        b10 = 0.0 + 0.0j
        b11 = 0.0 + 0.0j
        mask = 1 << pos
        for rest in range(dim >> 1):
            r0 = _pair_base(rest, pos)
            r1 = r0 | mask
            for c in range(ncols):
                f0 = fwd[i, r0, c]
                f1 = fwd[i, r1, c]
                a0 = np.conj(back[r0, c])
                a1 = np.conj(back[r1, c])
                b00 += a0 * f0
                b01 += a0 * f1
                b10 += a1 * f0
                b11 += a1 * f1
        for w in range(npar):
            _deriv_from_trig(kinds[i], trig, i, w, dg)
            dtrace[poff[i] + w] = dg[0, 0] * b00 + dg[0, 1] * b01 + dg[1, 0] * b10 + dg[1, 1] * b11
        _gate_from_trig(kinds[i], trig, i, g)
        # adjoint gate: conjugate transpose, applied out of place
        dg[0, 0] = np.conj(g[0, 0])
        dg[0, 1] = np.conj(g[1, 0])
        dg[1, 0] = np.conj(g[0, 1])
        dg[1, 1] = np.conj(g[1, 1])
        _columns_1q(back, scratch, dg, pos, dim, ncols)
        tmp = back
        back = scratch
        scratch = tmp

    return trace


@njit(cache=True, nogil=True)
def trace_and_grad_states(n, kinds, qa, qb, poff, params, v_cols, w_cols, num_params):
    """Column-route trace and per-parameter derivatives (fresh buffers)."""
    dim = 1 << n
    ncols = v_cols.shape[1]
    num_gates = kinds.shape[0]
    fwd = np.empty((num_gates + 1, dim, ncols), dtype=np.complex128)
    back = np.empty((dim, ncols), dtype=np.complex128)
    dtrace = np.zeros(num_params, dtype=np.complex128)
    g = np.empty((2, 2), dtype=np.complex128)
    dg = np.empty((2, 2), dtype=np.complex128)
    trig = np.empty((num_gates, 5), dtype=np.complex128)
    trace = _columns_trace_grad(
        n, kinds, qa, qb, poff, params, v_cols, w_cols, fwd, back, dtrace, g, dg, trig
    )
    return trace, dtrace


@njit(cache=True, nogil=True)
def trace_only_states(n, kinds, qa, qb, poff, params, v_cols, w_cols):
    """Column-route trace sum_i <w_i|U|v_i> without derivatives."""
    dim = 1 << n
    ncols = v_cols.shape[1]
    num_gates = kinds.shape[0]
    cur = v_cols.copy()
    nxt = np.empty((dim, ncols), dtype=np.complex128)
    g = np.empty((2, 2), dtype=np.complex128)
    for i in range(num_gates):
        if kinds[i] == K_CNOT:
            _columns_cnot(cur, nxt, n - 1 - qa[i], n - 1 - qb[i], dim, ncols)
        else:
            _fill_gate(kinds[i], params, poff[i], g)
            _columns_1q(cur, nxt, g, n - 1 - qa[i], dim, ncols)
        tmp = cur
        cur = nxt
        nxt = tmp
    trace = 0.0 + 0.0j
    for r in range(dim):
        for c in range(ncols):
            trace += np.conj(w_cols[r, c]) * cur[r, c]
    return trace


# --- dense pairing-matrix route (independent cross-check of the above) ---


@njit(cache=True, nogil=True)
def _left_1q(a, g, pos, dim):
    mask = 1 << pos
    for rest in range(dim >> 1):
        r0 = _pair_base(rest, pos)
        r1 = r0 | mask
        for c in range(dim):
            x0 = a[r0, c]
            x1 = a[r1, c]
            a[r0, c] = g[0, 0] * x0 + g[0, 1] * x1
            a[r1, c] = g[1, 0] * x0 + g[1, 1] * x1


@njit(cache=True, nogil=True)
def _right_1q(a, g, pos, dim):
    mask = 1 << pos
    for rest in range(dim >> 1):
        c0 = _pair_base(rest, pos)
        c1 = c0 | mask
        for r in range(dim):
            x0 = a[r, c0]
            x1 = a[r, c1]
            a[r, c0] = x0 * g[0, 0] + x1 * g[1, 0]
            a[r, c1] = x0 * g[0, 1] + x1 * g[1, 1]


@njit(cache=True, nogil=True)
def _left_cnot(a, cpos, tpos, dim):
    cmask = 1 << cpos
    tmask = 1 << tpos
    for r in range(dim):
        if (r & cmask) != 0 and (r & tmask) == 0:
            r2 = r | tmask
            for c in range(dim):
                tmp = a[r, c]
                a[r, c] = a[r2, c]
                a[r2, c] = tmp


@njit(cache=True, nogil=True)
def _right_cnot(a, cpos, tpos, dim):
    cmask = 1 << cpos
    tmask = 1 << tpos
    for c in range(dim):
        if (c & cmask) != 0 and (c & tmask) == 0:
            c2 = c | tmask
            for r in range(dim):
                tmp = a[r, c]
                a[r, c] = a[r, c2]
                a[r, c2] = tmp


@njit(cache=True, nogil=True)
def trace_and_grad(n, kinds, qa, qb, poff, params, pairing, num_params):
    """Dense route: trace of U(params) @ pairing and its derivatives.

    Forward pass stores every gate prefix of the full unitary; the backward
    pass drags the pairing matrix through the remaining suffix and contracts
    each parameterized gate's derivative locally at its site.
    """
    dim = 1 << n
    num_gates = kinds.shape[0]

    prefixes = np.empty((num_gates + 1, dim, dim), dtype=np.complex128)
    for r in range(dim):
        for c in range(dim):
            prefixes[0, r, c] = 1.0 if r == c else 0.0
    g = np.empty((2, 2), dtype=np.complex128)
    for i in range(num_gates):
        prefixes[i + 1] = prefixes[i]
        if kinds[i] == K_CNOT:
            _left_cnot(prefixes[i + 1], n - 1 - qa[i], n - 1 - qb[i], dim)
        else:
            _fill_gate(kinds[i], params, poff[i], g)
            _left_1q(prefixes[i + 1], g, n - 1 - qa[i], dim)

    trace = 0.0 + 0.0j
    for r in range(dim):
        for c in range(dim):
            trace += prefixes[num_gates, r, c] * pairing[c, r]

    dtrace = np.zeros(num_params, dtype=np.complex128)
    rmat = pairing.copy()
    dg = np.empty((2, 2), dtype=np.complex128)
    b2 = np.empty((2, 2), dtype=np.complex128)
    for i in range(num_gates - 1, -1, -1):
        if kinds[i] == K_CNOT:
            _right_cnot(rmat, n - 1 - qa[i], n - 1 - qb[i], dim)
            continue
        pos = n - 1 - qa[i]
        # b2[a, b] = sum_rest (prefix_i @ rmat)[(b,rest), (a,rest)]
        for a_bit in range(2):
            for b_bit in range(2):
                acc = 0.0 + 0.0j
                for rest in range(dim >> 1):
                    row = _pair_base(rest, pos) | (b_bit << pos)
                    col = _pair_base(rest, pos) | (a_bit << pos)
                    for k in range(dim):
                        acc += prefixes[i, row, k] * rmat[k, col]
                b2[a_bit, b_bit] = acc
        for w in range(NUM_PARAMS[kinds[i]]):
            _fill_deriv(kinds[i], params, poff[i], w, dg)
            dtrace[poff[i] + w] = (
                dg[0, 0] * b2[0, 0]
                + dg[0, 1] * b2[0, 1]
                + dg[1, 0] * b2[1, 0]
                + dg[1, 1] * b2[1, 1]
            )
        _fill_gate(kinds[i], params, poff[i], g)
        _right_1q(rmat, g, pos, dim)

    return trace, dtrace


@njit(cache=True, nogil=True)
def trace_only(n, kinds, qa, qb, poff, params, pairing):
    """Dense route: trace of U(params) @ pairing without derivatives."""
    dim = 1 << n
    num_gates = kinds.shape[0]
    u = np.empty((dim, dim), dtype=np.complex128)
    for r in range(dim):
        for c in range(dim):
            u[r, c] = 1.0 if r == c else 0.0
    g = np.empty((2, 2), dtype=np.complex128)
    for i in range(num_gates):
        if kinds[i] == K_CNOT:
            _left_cnot(u, n - 1 - qa[i], n - 1 - qb[i], dim)
        else:
            _fill_gate(kinds[i], params, poff[i], g)
            _left_1q(u, g, n - 1 - qa[i], dim)
    trace = 0.0 + 0.0j
    for r in range(dim):
        for c in range(dim):
            trace += u[r, c] * pairing[c, r]
    return trace


# --- compiled multistart quasi-Newton driver ---


@njit(cache=True, nogil=True)
def _cost_grad_ws(n, kinds, qa, qb, poff, x, v_cols, w_cols, m, fwd, back, dtrace, g2, dg2, trig, gout):
    """Cost 1 - |trace|/m with the gradient written into gout."""
    trace = _columns_trace_grad(
        n, kinds, qa, qb, poff, x, v_cols, w_cols, fwd, back, dtrace, g2, dg2, trig
    )
    mag = abs(trace)
    if mag < 1e-12:
        for k in range(x.shape[0]):
            gout[k] = 0.0  # degenerate point: reported flat by convention
    else:
        for k in range(x.shape[0]):
            gout[k] = -(trace.real * dtrace[k].real + trace.imag * dtrace[k].imag) / (m * mag)
    return 1.0 - mag / m


@njit(cache=True, nogil=True)
def lbfgs_minimize(n, kinds, qa, qb, poff, x0, v_cols, w_cols, m, maxiter, maxfun, gtol, ftol):
    """Limited-memory quasi-Newton descent with a strong-Wolfe line search.

    Unconstrained two-loop L-BFGS (memory 10) on the mapping cost: the line
    search brackets by step doubling, then bisects until both the sufficient
    decrease and strong curvature conditions hold.  Returns the final point,
    its cost, iteration and evaluation counts, and the accepted-cost history
    (non-increasing by construction).
    """
    num_params = x0.shape[0]
    dim = 1 << n
    ncols = v_cols.shape[1]
    num_gates = kinds.shape[0]
    mem = 10
    c1 = 1e-4
    c2 = 0.9

    fwd = np.empty((num_gates + 1, dim, ncols), dtype=np.complex128)
    back = np.empty((dim, ncols), dtype=np.complex128)
    dtrace = np.empty(num_params, dtype=np.complex128)
    g2 = np.empty((2, 2), dtype=np.complex128)
    dg2 = np.empty((2, 2), dtype=np.complex128)
    trig = np.empty((num_gates, 5), dtype=np.complex128)

    x = x0.copy()
    g = np.empty(num_params)
    f = _cost_grad_ws(n, kinds, qa, qb, poff, x, v_cols, w_cols, m, fwd, back, dtrace, g2, dg2, trig, g)
    nfev = 1

    s_mem = np.zeros((mem, num_params))
    y_mem = np.zeros((mem, num_params))
    rho = np.zeros(mem)
    alpha = np.zeros(mem)
    stored = 0
    head = 0

    xt = np.empty(num_params)
    gt = np.empty(num_params)

    fhist = np.empty(maxiter + 1)
    fhist[0] = f
    niter = 0

    while niter < maxiter and nfev < maxfun:
        gmax = 0.0
        for k in range(num_params):
            if abs(g[k]) > gmax:
                gmax = abs(g[k])
        if gmax <= gtol:
            break

        # two-loop recursion for the quasi-Newton direction
        q = g.copy()
        for j in range(stored):
            idx = (head - 1 - j) % mem
            alpha[idx] = rho[idx] * np.dot(s_mem[idx], q)
            q -= alpha[idx] * y_mem[idx]
        if stored > 0:
            last = (head - 1) % mem
            yy = np.dot(y_mem[last], y_mem[last])
            if yy > 0.0:
                q *= 1.0 / (rho[last] * yy)
        for j in range(stored - 1, -1, -1):
            idx = (head - 1 - j) % mem
            beta = rho[idx] * np.dot(y_mem[idx], q)
            q += (alpha[idx] - beta) * s_mem[idx]
        d = -q

        dphi0 = np.dot(g, d)
        if dphi0 >= 0.0:
            d = -g.copy()
            dphi0 = -np.dot(g, g)
            stored = 0
        if dphi0 == 0.0:
            break  # flat (degenerate) point; the caller's restarts escape

        if stored == 0:
            gnorm = np.sqrt(np.dot(g, g))
            step = min(1.0, 1.0 / max(gnorm, 1e-12))
        else:
            step = 1.0

        # strong-Wolfe line search: bracket by doubling the step
        f0 = f
        prev_step = 0.0
        prev_phi = f0
        lo = -1.0
        hi = -1.0
        phi_lo = f0
        accepted = -1.0
        new_f = f0
        for it in range(20):
            for k in range(num_params):
                xt[k] = x[k] + step * d[k]
            phi = _cost_grad_ws(
                n, kinds, qa, qb, poff, xt, v_cols, w_cols, m, fwd, back, dtrace, g2, dg2, trig, gt
            )
            nfev += 1
            dphi = np.dot(gt, d)
            if phi > f0 + c1 * step * dphi0 or (it > 0 and phi >= prev_phi):
                lo, phi_lo, hi = prev_step, prev_phi, step
                break
            if abs(dphi) <= -c2 * dphi0:
                accepted = step
                new_f = phi
                break
            if dphi >= 0.0:
                lo, phi_lo, hi = step, phi, prev_step
                break
            prev_step, prev_phi = step, phi
            step *= 2.0
            if step > 1e8:
                break

        if accepted < 0.0 and hi < 0.0:
            # never bracketed; settle for the last point if it decreased
            if prev_step > 0.0 and prev_phi < f0:
                accepted = prev_step
                for k in range(num_params):
                    xt[k] = x[k] + accepted * d[k]
                new_f = _cost_grad_ws(
                    n, kinds, qa, qb, poff, xt, v_cols, w_cols, m, fwd, back, dtrace, g2, dg2, trig, gt
                )
                nfev += 1
            else:
                break

        if accepted < 0.0:
            # zoom: bisect [lo, hi] until the curvature condition holds
            best_step = lo if phi_lo < f0 else -1.0
            for _ in range(30):
                step = 0.5 * (lo + hi)
                for k in range(num_params):
                    xt[k] = x[k] + step * d[k]
                phi = _cost_grad_ws(
                    n, kinds, qa, qb, poff, xt, v_cols, w_cols, m, fwd, back, dtrace, g2, dg2, trig, gt
                )
                nfev += 1
                dphi = np.dot(gt, d)
                if phi > f0 + c1 * step * dphi0 or phi >= phi_lo:
                    hi = step
                else:
                    if abs(dphi) <= -c2 * dphi0:
                        accepted = step
                        new_f = phi
                        break
                    if dphi * (hi - lo) >= 0.0:
                        hi = lo
                    lo, phi_lo = step, phi
                    best_step = step
                if abs(hi - lo) < 1e-16:
                    break
            if accepted < 0.0:
                if best_step > 0.0:
                    accepted = best_step
                    for k in range(num_params):
                        xt[k] = x[k] + accepted * d[k]
                    new_f = _cost_grad_ws(
                        n, kinds, qa, qb, poff, xt, v_cols, w_cols, m, fwd, back, dtrace, g2, dg2, trig, gt
                    )
                    nfev += 1
                else:
                    break  # no decrease found anywhere along d

        for k in range(num_params):
            xt[k] = x[k] + accepted * d[k]
        s_vec = xt - x
        y_vec = gt - g
        x[:] = xt
        f_prev = f
        f = new_f
        g[:] = gt
        niter += 1
        fhist[niter] = f

        sy = np.dot(s_vec, y_vec)
        scomp = np.sqrt(np.dot(s_vec, s_vec)) * np.sqrt(np.dot(y_vec, y_vec))
        if sy > 1e-12 * scomp:
            s_mem[head] = s_vec
            y_mem[head] = y_vec
            rho[head] = 1.0 / sy
            head = (head + 1) % mem
            if stored < mem:
                stored += 1

        if f_prev - f <= ftol * max(max(abs(f_prev), abs(f)), 1.0):
            break

    return x, f, niter, nfev, fhist[: niter + 1]
