"""Compiled inner loops for the support-function flow.

Speed functions and Phi families are passed as integer codes plus parameter
arrays; the codes are produced by ``flow_sim._encode_f`` / ``_encode_phi``.
Axisymmetric curvature vectors are ``(a, b, ..., b)`` with ``b`` repeated
``n - 1`` times.
"""

import math

import numpy as np
from numba import njit

F_MEAN, F_SIGMA_K, F_NORM_A, F_GAUSS = 0, 1, 2, 3
PHI_POWER_SUM, PHI_LOG_POWER, PHI_ENTROPY, PHI_POWER = 0, 1, 2, 3

STATUS_MAX_STEPS, STATUS_CONVEXITY, STATUS_TARGET, STATUS_TIME = 0, 1, 2, 3


@njit(cache=True)
def _reflect(i, m):
    if i < 0:
        return -i
    if i > m - 1:
        return 2 * (m - 1) - i
    return i


@njit(cache=True)
def support_radii(s, h, cot, r1, r2):
    """Axial and rotational principal radii from fourth-order centred differences.

    ``s`` is even about both poles, which supplies the ghost values.
    """
    m = s.size
    for j in range(m):
        sm2 = s[_reflect(j - 2, m)]
        sm1 = s[_reflect(j - 1, m)]
        sp1 = s[_reflect(j + 1, m)]
        sp2 = s[_reflect(j + 2, m)]
        d2 = (-sp2 + 16.0 * sp1 - 30.0 * s[j] + 16.0 * sm1 - sm2) / (12.0 * h * h)
        r1[j] = d2 + s[j]
        if j == 0 or j == m - 1:
            r2[j] = r1[j]
        else:
            d1 = (-sp2 + 8.0 * sp1 - 8.0 * sm1 + sm2) / (12.0 * h)
            r2[j] = s[j] + d1 * cot[j]


@njit(cache=True)
def speed_axisym(a, b, n, code, par):
    """Return (F, dF/da, dF/db for one rotational entry)."""
    if code == F_MEAN:
        return (a + (n - 1) * b) / n, 1.0 / n, 1.0 / n
    if code == F_NORM_A:
        F = math.sqrt((a * a + (n - 1) * b * b) / n)
        return F, a / (n * F), b / (n * F)
    if code == F_GAUSS:
        F = math.exp((math.log(a) + (n - 1) * math.log(b)) / n)
        return F, F / (n * a), F / (n * b)
    # sigma-k: par = (k, C(n,k), C(n-1,k), C(n-1,k-1), C(n-2,k-1), C(n-2,k-2))
    k = par[0]
    sig = par[2] * b**k + par[3] * a * b ** (k - 1)
    F = (sig / par[1]) ** (1.0 / k)
    ds_a = par[3] * b ** (k - 1)
    ds_b = par[4] * b ** (k - 1)
    if k >= 2:
        ds_b += par[5] * a * b ** (k - 2)
    c = F / (k * sig)
    return F, c * ds_a, c * ds_b


@njit(cache=True)
def _pow(z, k):
    # small integer exponents dominate in practice; pow() is the hot spot otherwise
    if k == 0.0:
        return 1.0
    if k == 1.0:
        return z
    if k == 2.0:
        return z * z
    if k == 3.0:
        return z * z * z
    return z**k


@njit(cache=True)
def phi_pair(z, code, pc, pk):
    """Return (Phi(z), Phi'(z))."""
    if code == PHI_POWER_SUM:
        v = 0.0
        d = 0.0
        for i in range(pc.size):
            v += pc[i] * _pow(z, pk[i])
            d += pc[i] * pk[i] * _pow(z, pk[i] - 1.0)
        return v, d
    a = pc[0]
    if code == PHI_LOG_POWER:
        return math.log1p(z) + _pow(z, a), 1.0 / (1.0 + z) + a * _pow(z, a - 1.0)
    if code == PHI_ENTROPY:
        w = z + a
        return w * (math.log(w) - 1.0) + a * (1.0 - math.log(a)), math.log(w)
    return _pow(z, a), a * _pow(z, a - 1.0)


@njit(cache=True)
def advance(s, h, cot, n, fcode, fpar, pcode, pc, pk, horizon, s_target, safety, max_steps):
    """Explicit Euler steps of ds/dt = -Phi(F) at the parabolic stability limit.

    Stops when ``min(s) < s_target``, after ``horizon`` time units, on loss of
    convexity, or after ``max_steps``.  ``s`` is updated in place.  Returns
    ``(elapsed, steps, status)``; ``elapsed`` is summed with compensation
    since late steps are far below the float spacing of absolute time.
    """
    m = s.size
    r1 = np.empty(m)
    r2 = np.empty(m)
    speed = np.empty(m)
    inv_grid = (m / math.pi) ** 2
    steps = 0
    t = 0.0
    comp = 0.0
    while steps < max_steps:
        support_radii(s, h, cot, r1, r2)
        rmin = np.inf
        dphi_max = 0.0
        fsum_max = 0.0
        for j in range(m):
            if r1[j] <= 0.0 or r2[j] <= 0.0:
                return t - comp, steps, STATUS_CONVEXITY
            rmin = min(rmin, r1[j], r2[j])
            F, fa, fb = speed_axisym(1.0 / r1[j], 1.0 / r2[j], n, fcode, fpar)
            v, d = phi_pair(F, pcode, pc, pk)
            speed[j] = v
            dphi_max = max(dphi_max, d)
            fsum_max = max(fsum_max, fa + (n - 1) * fb)
        dt = safety * rmin * rmin / (dphi_max * fsum_max * inv_grid)
        last = False
        if t - comp + dt >= horizon:
            dt = horizon - (t - comp)
            last = True
        smin = np.inf
        for j in range(m):
            s[j] -= dt * speed[j]
            smin = min(smin, s[j])
        # Kahan summation of elapsed time
        y = dt - comp
        tn = t + y
        comp = (tn - t) - y
        t = tn
        steps += 1
        if last:
            return horizon, steps, STATUS_TIME
        if smin < s_target:
            return t - comp, steps, STATUS_TARGET
    return t - comp, steps, STATUS_MAX_STEPS
