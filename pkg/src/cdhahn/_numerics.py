"""Compiled numerical core shared by the special-function, measure and
sampling modules.

Everything here works on plain floats and float arrays so it can be jitted.
Gamma-function magnitudes are kept in log space; a continuous density is
described by a list of gamma arguments ``(re, shift)`` meaning the factor
``|Gamma(re + i(w + shift))|^2`` in the variable ``w = sqrt(y)``.
"""
import math

import numba
import numpy as np

LANCZOS_G = 607.0 / 128.0
LANCZOS_COEF = np.array([
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
])
LOG_2PI = math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)
LOG_4PI = math.log(4.0 * math.pi)

KIND_DEGENERATE = 0
KIND_FINITE = 1
KIND_MIXED = 2

STATE_TOL = 1e-9

# Gauss-Kronrod 15/7 nodes and weights on [-1, 1]
XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
               0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
               0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
               0.207784955007898467600689403773245, 0.0])
WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
               0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
               0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
               0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
               0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
XG = np.array([0.949107912342758524526189684047851, 0.741531185599394439863864773280788,
               0.405845151377397166906606412076961, 0.0])

PANEL_WIDTH = 0.5
PANEL_TOL = 1e-12
NEWTON_TOL = 1e-13


# ---------------------------------------------------------------- gamma


@numba.njit(cache=True)
def _lag_right(a, y):
    # 2 Re log Gamma(a + iy) for a >= 0.5, real arithmetic only
    u = a - 1.0
    sr = LANCZOS_COEF[0]
    si = 0.0
    for k in range(1, 15):
        d = u + k
        den = d * d + y * y
        sr += LANCZOS_COEF[k] * d / den
        si -= LANCZOS_COEF[k] * y / den
    tr = u + LANCZOS_G + 0.5
    half = (0.5 * LOG_2PI + (u + 0.5) * 0.5 * math.log(tr * tr + y * y)
            - y * math.atan2(y, tr) - tr + 0.5 * math.log(sr * sr + si * si))
    return 2.0 * half


@numba.njit(cache=True)
def log_sin_sq(a, y):
    """log |sin(pi (a + iy))|^2 = log(sin^2(pi a) + sinh^2(pi y))."""
    ay = abs(y)
    sa = math.sin(math.pi * a)
    if ay > 5.0:
        e = math.exp(-2.0 * math.pi * ay)
        return 2.0 * math.pi * ay + math.log(0.25 * (1.0 - e) ** 2 + sa * sa * e)
    sh = math.sinh(math.pi * ay)
    return math.log(sa * sa + sh * sh)


@numba.njit(cache=True)
def lag(a, y):
    """log |Gamma(a + iy)|^2."""
    if a >= 0.5:
        return _lag_right(a, abs(y))
    return 2.0 * LOG_PI - log_sin_sq(a, y) - _lag_right(1.0 - a, abs(y))


@numba.njit(cache=True)
def lag_2iw(w):
    # log |Gamma(2iw)|^2 = log(pi / (2w sinh(2 pi w)))
    y = 2.0 * w
    if y > 5.0:
        return math.log(math.pi / y) - (math.pi * y + math.log(0.5 * (1.0 - math.exp(-2.0 * math.pi * y))))
    return math.log(math.pi / (y * math.sinh(math.pi * y)))


@numba.njit(cache=True)
def _wrap(phase):
    r = phase - 2.0 * math.pi * math.floor(phase / (2.0 * math.pi))
    if r > math.pi:
        r -= 2.0 * math.pi
    elif r <= -math.pi:
        r += 2.0 * math.pi
    return r


@numba.njit(cache=True)
def _lgc_right(z):
    zz = z - 1.0
    x = LANCZOS_COEF[0] + 0j
    for k in range(1, 15):
        x += LANCZOS_COEF[k] / (zz + k)
    t = zz + LANCZOS_G + 0.5
    return 0.5 * LOG_2PI + (zz + 0.5) * np.log(t) - t + np.log(x)


@numba.njit(cache=True)
def lgamma_complex(zr, zi):
    """Principal log Gamma(zr + i zi); imaginary part reduced to (-pi, pi]."""
    if zr >= 0.5:
        v = _lgc_right(complex(zr, zi))
        return v.real, _wrap(v.imag)
    w = _lgc_right(complex(1.0 - zr, -zi))
    re = LOG_PI - 0.5 * log_sin_sq(zr, zi) - w.real
    # arg sin(pi z), scaled by 1/cosh(pi y) to avoid overflow
    px = math.pi * zr
    arg = math.atan2(math.cos(px) * math.tanh(math.pi * zi), math.sin(px))
    return re, _wrap(-arg - w.imag)


@numba.njit(cache=True)
def lgamma_real(a):
    """(log |Gamma(a)|, sign Gamma(a)) for real a off the poles."""
    la = 0.5 * lag(a, 0.0)
    if a > 0.0:
        return la, 1.0
    return la, (-1.0 if int(math.ceil(-a)) % 2 == 1 else 1.0)


@numba.njit(cache=True)
def is_pole(a, b):
    return b == 0.0 and a <= 0.0 and a == math.floor(a)


# ---------------------------------------------------------------- density


@numba.njit(cache=True)
def density_w(w, ar, ai, ln):
    """Density of the continuous part in w = sqrt(y)."""
    if w <= 0.0:
        return 0.0
    s = -lag_2iw(w) - ln
    for j in range(ar.shape[0]):
        s += lag(ar[j], w + ai[j])
    return 2.0 * math.exp(s)


@numba.njit(cache=True)
def log_density_y(y, ar, ai, ln):
    """log of the density in y (> 0)."""
    w = math.sqrt(y)
    s = -lag_2iw(w) - ln - math.log(w)
    for j in range(ar.shape[0]):
        s += lag(ar[j], w + ai[j])
    return s


@numba.njit(cache=True)
def gk15(a, b, ar, ai, ln):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fc = density_w(c, ar, ai, ln)
    rk = fc * WK[7]
    rg = fc * WG[3]
    for j in range(7):
        x = h * XK[j]
        f1 = density_w(c - x, ar, ai, ln)
        f2 = density_w(c + x, ar, ai, ln)
        rk += WK[j] * (f1 + f2)
        if j % 2 == 1:
            rg += WG[j // 2] * (f1 + f2)
    return rk * h, abs((rk - rg) * h)


@numba.njit(cache=True)
def g7(a, b, ar, ai, ln):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    r = WG[3] * density_w(c, ar, ai, ln)
    for j in range(3):
        x = h * XG[j]
        r += WG[j] * (density_w(c - x, ar, ai, ln) + density_w(c + x, ar, ai, ln))
    return r * h


@numba.njit(cache=True)
def _tail_start(ar, ai):
    # beyond this point the density decays at least like exp(-pi w)
    m = 0.0
    for j in range(ai.shape[0]):
        m = max(m, abs(ai[j]))
    s = 0.0
    for j in range(ar.shape[0]):
        s += abs(ar[j])
    return m + 4.0 + s


@numba.njit(cache=True, nogil=True)
def invert_sorted(ar, ai, ln, targets, out):
    """Solve int_0^w density = target for ascending targets.

    Walks width-0.5 panels left to right, subdividing each one adaptively
    with GK15.  Inside the accepted subinterval holding a target a
    safeguarded Newton iteration on 7-point Gauss partial integrals finishes
    the job.  The arithmetic done for one target does not depend on the
    other targets, so a batch and a single call agree bitwise.
    Results are values of y = w^2.
    """
    n = targets.shape[0]
    i = 0
    cum = 0.0
    a = 0.0
    wtail = _tail_start(ar, ai)
    stack_a = np.empty(200)
    stack_b = np.empty(200)
    while i < n:
        b = a + PANEL_WIDTH
        stack_a[0] = a
        stack_b[0] = b
        sp = 1
        panel_total = 0.0
        while sp > 0 and i < n:
            sp -= 1
            lo = stack_a[sp]
            hi = stack_b[sp]
            val, err = gk15(lo, hi, ar, ai, ln)
            if err > PANEL_TOL and (hi - lo) > 1e-9 and sp < 198:
                mid = 0.5 * (lo + hi)
                stack_a[sp] = mid
                stack_b[sp] = hi
                sp += 1
                stack_a[sp] = lo
                stack_b[sp] = mid
                sp += 1
                continue
            while i < n and cum + val >= targets[i]:
                need = targets[i] - cum
                left = lo
                right = hi
                m = lo + (hi - lo) * need / val if val > 0.0 else 0.5 * (lo + hi)
                for _ in range(60):
                    f = g7(lo, m, ar, ai, ln) - need
                    if abs(f) <= NEWTON_TOL:
                        break
                    if f > 0.0:
                        right = m
                    else:
                        left = m
                    d = density_w(m, ar, ai, ln)
                    step = m - f / d if d > 0.0 else 0.5 * (left + right)
                    if not (left < step < right):
                        step = 0.5 * (left + right)
                    if abs(step - m) < 1e-14 * (1.0 + m):
                        m = step
                        break
                    m = step
                out[i] = m * m
                i += 1
            cum += val
            panel_total += val
        a = b
        if i < n and a > wtail and panel_total < 1e-18:
            # remaining targets exceed the computed mass by rounding only
            while i < n:
                out[i] = a * a
                i += 1
    return out


@numba.njit(cache=True)
def integrate_density(ar, ai, ln, w_end, w_start=0.0):
    """Adaptive GK15 integral of the w-density over [w_start, w_end]."""
    total = 0.0
    a = w_start
    stack_a = np.empty(200)
    stack_b = np.empty(200)
    while a < w_end:
        b = min(a + PANEL_WIDTH, w_end)
        stack_a[0] = a
        stack_b[0] = b
        sp = 1
        while sp > 0:
            sp -= 1
            lo = stack_a[sp]
            hi = stack_b[sp]
            val, err = gk15(lo, hi, ar, ai, ln)
            if err > PANEL_TOL and (hi - lo) > 1e-9 and sp < 198:
                mid = 0.5 * (lo + hi)
                stack_a[sp] = mid
                stack_b[sp] = hi
                sp += 1
                stack_a[sp] = lo
                stack_b[sp] = mid
                sp += 1
                continue
            total += val
        a = b
    return total


# ---------------------------------------------------------------- atoms


@numba.njit(cache=True)
def generic_atom_mass(a, b_re, b_im, c_re, c_im, k):
    """Mass of the atom at -(a+k)^2 of the orthogonality measure with one
    negative parameter a and the other two b, c (real, or conjugate)."""
    conj = b_im != 0.0
    if conj:
        lg_ratio = lag(b_re - a, b_im)
    else:
        l1, s1 = lgamma_real(b_re - a)
        l2, s2 = lgamma_real(c_re - a)
        lg_ratio = l1 + l2
    lg_ratio -= lgamma_real(-2.0 * a)[0] + lgamma_real(b_re + c_re)[0]
    b = complex(b_re, b_im)
    c = complex(c_re, c_im)
    prod = complex(1.0, 0.0)
    for j in range(k):
        prod *= (2.0 * a + j) * (a + b + j) * (a + c + j)
        prod /= (a - b + 1.0 + j) * (a - c + 1.0 + j) * (j + 1.0)
    prod *= (a + k) / a
    sign = -1.0 if k % 2 == 1 else 1.0
    return sign * prod.real * math.exp(lg_ratio)


@numba.njit(cache=True)
def _n_atoms(a):
    # number of k >= 0 with a + k < 0
    if a >= 0.0:
        return 0
    return int(math.ceil(-a))


@numba.njit(cache=True)
def mixed_setup(alpha, b_re, b_im, c_re, c_im):
    """Density description and atoms of the measure with parameters
    (alpha, b, c); b, c both real or b = conj(c)."""
    ar = np.array([alpha, b_re, c_re])
    ai = np.array([0.0, b_im, c_im])
    ln = LOG_4PI + lgamma_real(b_re + c_re)[0]
    if b_im != 0.0:
        ln += lag(alpha + b_re, b_im)
    else:
        ln += lgamma_real(alpha + b_re)[0] + lgamma_real(alpha + c_re)[0]
    na = _n_atoms(alpha)
    nb = 0
    nc = 0
    if b_im == 0.0:
        nb = _n_atoms(b_re)
        nc = _n_atoms(c_re)
    total = na + nb + nc
    locs = np.empty(total)
    masses = np.empty(total)
    i = 0
    for k in range(na):
        locs[i] = -(alpha + k) ** 2
        masses[i] = generic_atom_mass(alpha, b_re, b_im, c_re, c_im, k)
        i += 1
    for k in range(nb):
        locs[i] = -(b_re + k) ** 2
        masses[i] = generic_atom_mass(b_re, alpha, 0.0, c_re, 0.0, k)
        i += 1
    for k in range(nc):
        locs[i] = -(c_re + k) ** 2
        masses[i] = generic_atom_mass(c_re, alpha, 0.0, b_re, 0.0, k)
        i += 1
    order = np.argsort(locs)
    return ar, ai, ln, locs[order], masses[order]


@numba.njit(cache=True)
def finite_christoffel(alpha, beta, gamma, locs):
    """Exact masses of an N-atom measure (N = len(locs)) with real
    parameters, from finite sums of squared orthonormal polynomials."""
    n_atoms = locs.shape[0]
    masses = np.empty(n_atoms)
    for i in range(n_atoms):
        y = locs[i]
        prev = 0.0
        cur = 1.0
        acc = 1.0
        sq_prev = 0.0
        for n in range(n_atoms - 1):
            an = (n + alpha + beta) * (n + alpha + gamma)
            cn = n * (n - 1 + beta + gamma)
            bn = an + cn - alpha * alpha
            beta_next = an * (n + 1) * (n + beta + gamma)
            sq = math.sqrt(beta_next)
            nxt = ((y - bn) * cur - sq_prev * prev) / sq
            prev = cur
            cur = nxt
            sq_prev = sq
            acc += cur * cur
        masses[i] = 1.0 / acc
    return masses


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def kernel_setup(C, s, t, x):
    """Classify the transition kernel from (s, x) to time t.

    Returns (kind, point, ar, ai, ln, locs, masses)."""
    empty = np.empty(0)
    d = C - s
    boundary = -(d * d)
    point = -(C - t) ** 2
    if s <= C:
        if x < boundary + STATE_TOL:
            return KIND_DEGENERATE, point, empty, empty, 0.0, empty, empty
    else:
        if x < 0.0:
            v = math.sqrt(-x)
            nn = int(round(s - C - v))
            if nn < 0 or nn >= s - C or abs(x + (d + nn) ** 2) > STATE_TOL or nn == 0:
                # off E_s or on the boundary atom
                return KIND_DEGENERATE, point, empty, empty, 0.0, empty, empty
            locs = np.empty(nn + 1)
            for k in range(nn + 1):
                locs[k] = -(C - t + k) ** 2
            masses = finite_christoffel(C - t, t - s - v, t - s + v, locs)
            return KIND_FINITE, point, empty, empty, 0.0, locs, masses
        gap = s - C
        if x <= STATE_TOL and abs(gap - round(gap)) <= 1e-12:
            nn = int(round(gap))
            locs = np.empty(nn + 1)
            for k in range(nn + 1):
                locs[k] = -(C - t + k) ** 2
            masses = finite_christoffel(C - t, t - s, t - s, locs)
            return KIND_FINITE, point, empty, empty, 0.0, locs, masses
    if x > 0.0:
        ar, ai, ln, locs, masses = mixed_setup(C - t, t - s, -math.sqrt(x), t - s, math.sqrt(x))
    else:
        v = math.sqrt(-x) if x < 0.0 else 0.0
        ar, ai, ln, locs, masses = mixed_setup(C - t, t - s - v, 0.0, t - s + v, 0.0)
    return KIND_MIXED, point, ar, ai, ln, locs, masses


@numba.njit(cache=True)
def draw(kind, point, ar, ai, ln, locs, masses, u):
    """Inverse-CDF draw: atoms take [F(x-), F(x)) in ascending order, the
    rest of [0, 1) maps to the continuous part."""
    if kind == KIND_DEGENERATE:
        return point
    cum = 0.0
    for j in range(locs.shape[0]):
        if u < cum + masses[j]:
            return locs[j]
        cum += masses[j]
    if kind == KIND_FINITE:
        return locs[locs.shape[0] - 1]
    tgt = np.empty(1)
    tgt[0] = u - cum
    out = np.empty(1)
    invert_sorted(ar, ai, ln, tgt, out)
    return out[0]


@numba.njit(cache=True)
def kernel_draw(C, s, t, x, u):
    kind, point, ar, ai, ln, locs, masses = kernel_setup(C, s, t, x)
    return draw(kind, point, ar, ai, ln, locs, masses, u)


@numba.njit(cache=True, nogil=True)
def chain_kernels(C, times, states, uniforms, start):
    """Fill states[:, j] for j > start by chaining kernels row by row."""
    n = states.shape[0]
    for i in range(n):
        for j in range(start + 1, times.shape[0]):
            states[i, j] = kernel_draw(C, times[j - 1], times[j], states[i, j - 1], uniforms[i, j])
    return states
