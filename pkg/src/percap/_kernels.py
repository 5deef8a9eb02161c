"""Hot numerical loops, jitted with numba.

All kernels are deterministic: fixed iteration order, no fastmath, and any
randomness comes in as pre-drawn arrays, so results are identical across
thread counts and platforms.  nogil lets the Python-level thread pools get
real parallelism out of them.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# dual coordinate ascent exit codes
DCD_UNSAT = 0
DCD_SAT = 1
DCD_CONVERGED = 2
DCD_BUDGET = 3


@njit(cache=True, nogil=True)
def dcd_margin_kernel(Z, max_epochs, check_every, rel_gap_tol, decide, use_decide):
    """Dual coordinate ascent on min ||v||^2 s.t. Z v >= 1 (hard margin).

    Maintains two bounds on the maximal margin kappa_max = max_{|u|=1} min Z u:
    a primal lower bound L from the best iterate direction, and the dual
    upper bound U = ||v|| / sum(alpha) (a convex-combination point of the
    constraint rows).  With use_decide the kernel exits as soon as either
    bound settles the comparison against ``decide``.

    Returns (status, L_best, U, v_best, epochs).
    """
    p, n = Z.shape
    zn2 = np.empty(p)
    for i in range(p):
        s = 0.0
        for j in range(n):
            s += Z[i, j] * Z[i, j]
        zn2[i] = s

    alpha = np.zeros(p)
    v = np.zeros(n)
    v_best = np.zeros(n)
    L_best = -1.0e300
    U = 1.0e300
    status = DCD_BUDGET
    epoch = 0
    while epoch < max_epochs:
        for i in range(p):
            if zn2[i] == 0.0:
                continue
            g = 1.0
            for j in range(n):
                g -= Z[i, j] * v[j]
            na = alpha[i] + g / zn2[i]
            if na < 0.0:
                na = 0.0
            d = na - alpha[i]
            if d != 0.0:
                alpha[i] = na
                for j in range(n):
                    v[j] += d * Z[i, j]
        epoch += 1
        if epoch % check_every == 0 or epoch == max_epochs:
            # rebuild v from alpha to cancel incremental drift
            for j in range(n):
                s = 0.0
                for i in range(p):
                    s += alpha[i] * Z[i, j]
                v[j] = s
            nv = 0.0
            for j in range(n):
                nv += v[j] * v[j]
            nv = np.sqrt(nv)
            S = 0.0
            for i in range(p):
                S += alpha[i]
            if nv > 0.0:
                m = 1.0e300
                for i in range(p):
                    s = 0.0
                    for j in range(n):
                        s += Z[i, j] * v[j]
                    if s < m:
                        m = s
                L = m / nv
                if L > L_best:
                    L_best = L
                    for j in range(n):
                        v_best[j] = v[j]
                if S > 0.0:
                    U = nv / S
            if use_decide:
                if L_best >= decide:
                    status = DCD_SAT
                    break
                if U < decide:
                    status = DCD_UNSAT
                    break
            gap = U - L_best
            if gap <= rel_gap_tol * max(1.0, abs(U)):
                status = DCD_CONVERGED
                break
    return status, L_best, U, v_best, epoch


@njit(cache=True, nogil=True)
def hit_and_run_chain(Z, thr, u0, normals, uniforms, burn_in, thin, n_samples):
    """Great-circle hit-and-run on the unit sphere inside {u : Z u >= thr}.

    Each step intersects a random great circle through the current point
    with every constraint arc analytically and samples uniformly on the
    feasible angle set, so there is no rejection inside the chain.
    ``normals`` and ``uniforms`` supply the randomness (one row / one value
    per step).  Returns (samples, max_norm_drift) where samples holds every
    ``thin``-th point after ``burn_in`` steps.
    """
    k, n = Z.shape
    u = u0.copy()
    nu = 0.0
    for j in range(n):
        nu += u[j] * u[j]
    nu = np.sqrt(nu)
    for j in range(n):
        u[j] /= nu

    total_steps = burn_in + thin * n_samples
    samples = np.empty((n_samples, n))
    max_drift = 0.0
    kept = 0
    t = np.empty(n)
    # each constraint arc wraps into at most 2 angle segments in (-pi, pi]
    seg_start = np.empty(2 * k if k > 0 else 1)
    seg_end = np.empty(2 * k if k > 0 else 1)

    for step in range(total_steps):
        # tangent direction: Gram-Schmidt of a fresh Gaussian against u
        dot = 0.0
        for j in range(n):
            dot += normals[step, j] * u[j]
        nt = 0.0
        for j in range(n):
            t[j] = normals[step, j] - dot * u[j]
            nt += t[j] * t[j]
        nt = np.sqrt(nt)
        if nt < 1e-300:
            for j in range(n):
                t[j] = 0.0  # degenerate draw: step stays in place
            nt = 1.0
        for j in range(n):
            t[j] /= nt

        # feasible angle set: intersection of per-constraint arcs
        feasible = True
        count_needed = 0
        n_int = 0
        for i in range(k):
            a = 0.0
            b = 0.0
            for j in range(n):
                a += Z[i, j] * u[j]
                b += Z[i, j] * t[j]
            r = np.sqrt(a * a + b * b)
            if r <= 1e-300:
                if 0.0 >= thr:
                    continue  # constraint row ~ 0 and thr <= 0: whole circle
                feasible = False
                break
            ratio = thr / r
            if ratio <= -1.0:
                continue  # whole circle feasible for this constraint
            if ratio >= 1.0:
                feasible = False  # only the tangency point; stay in place
                break
            psi = np.arctan2(b, a)
            hw = np.arccos(ratio)
            lo = psi - hw
            hi = psi + hw
            whole_circle = False
            if lo < -np.pi:
                seg_start[n_int] = lo + 2.0 * np.pi
                seg_end[n_int] = np.pi
                n_int += 1
                seg_start[n_int] = -np.pi
                seg_end[n_int] = hi
                n_int += 1
            elif hi > np.pi:
                seg_start[n_int] = lo
                seg_end[n_int] = np.pi
                n_int += 1
                seg_start[n_int] = -np.pi
                seg_end[n_int] = hi - 2.0 * np.pi
                n_int += 1
            else:
                seg_start[n_int] = lo
                seg_end[n_int] = hi
                n_int += 1
            count_needed += 1

        theta = 0.0
        if not feasible:
            theta = 0.0  # degenerate tangency: do not move
        elif count_needed == 0:
            theta = -np.pi + 2.0 * np.pi * uniforms[step]
        else:
            # sweep: coverage == count_needed marks the feasible set
            n_ev = 2 * n_int
            ev_ang = np.empty(n_ev)
            ev_val = np.empty(n_ev, dtype=np.int64)
            for i in range(n_int):
                ev_ang[2 * i] = seg_start[i]
                ev_val[2 * i] = 1
                ev_ang[2 * i + 1] = seg_end[i]
                ev_val[2 * i + 1] = -1
            order = np.argsort(ev_ang)
            # total feasible measure
            total = 0.0
            cover = 0
            prev = -np.pi
            for e in range(n_ev):
                ang = ev_ang[order[e]]
                if cover == count_needed and ang > prev:
                    total += ang - prev
                cover += ev_val[order[e]]
                prev = ang
            if total <= 0.0:
                theta = 0.0  # numerically empty: stay
            else:
                target = uniforms[step] * total
                acc = 0.0
                cover = 0
                prev = -np.pi
                theta = 0.0
                for e in range(n_ev):
                    ang = ev_ang[order[e]]
                    if cover == count_needed and ang > prev:
                        seg = ang - prev
                        if acc + seg >= target:
                            theta = prev + (target - acc)
                            break
                        acc += seg
                    cover += ev_val[order[e]]
                    prev = ang

        ct = np.cos(theta)
        st = np.sin(theta)
        norm2 = 0.0
        for j in range(n):
            u[j] = ct * u[j] + st * t[j]
            norm2 += u[j] * u[j]
        drift = abs(norm2 - 1.0)
        if drift > max_drift:
            max_drift = drift
        inv = 1.0 / np.sqrt(norm2)
        for j in range(n):
            u[j] *= inv

        if step >= burn_in and (step - burn_in) % thin == thin - 1:
            for j in range(n):
                samples[kept, j] = u[j]
            kept += 1
            if kept == n_samples:
                break

    return samples, max_drift
