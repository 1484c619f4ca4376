"""Hot loops over dense D x K blocks.

Everything here is written in the numpy subset numba understands, so the same
source runs compiled (default) or interpreted (``GRASSAVG_DISABLE_NUMBA=1``).
Kernels never raise for numerical trouble; they return status flags and
counters and the callers in `linalg`, `geometry` and `learners` translate
those into exceptions or telemetry.
"""
import numpy as np

from ._accel import jit

RANK_TOL = 1e-10
SING_TOL = 1e-12
SIGN_TOL = 1e-12
ZERO_DIST = 1e-12


@jit
def qr_pos(a):
    """Reduced QR with a nonnegative diagonal on R."""
    q, r = np.linalg.qr(np.ascontiguousarray(a))
    q = np.ascontiguousarray(q)
    r = np.ascontiguousarray(r)
    for j in range(r.shape[0]):
        if r[j, j] < 0.0:
            q[:, j] = -q[:, j]
            r[j, :] = -r[j, :]
    return q, r


@jit
def sv_ratio(r):
    s = np.linalg.svd(r, full_matrices=False)[1]
    if s[0] <= 0.0:
        return 0.0
    return s[-1] / s[0]


@jit
def orth(a):
    """Orthonormal basis of span(a) and the smallest/largest singular value ratio."""
    q, r = qr_pos(a)
    return q, sv_ratio(r)


@jit
def _fix_signs(u, vt):
    for j in range(u.shape[1]):
        for i in range(u.shape[0]):
            if abs(u[i, j]) > SIGN_TOL:
                if u[i, j] < 0.0:
                    u[:, j] = -u[:, j]
                    vt[j, :] = -vt[j, :]
                break
    return u, vt


@jit
def svd_thin(a):
    """Thin SVD through a QR of the tall side: O(m n^2) for m >> n."""
    m, n = a.shape
    if m >= n:
        q, r = np.linalg.qr(np.ascontiguousarray(a))
        ur, s, vt = np.linalg.svd(r, full_matrices=False)
        u = np.ascontiguousarray(q) @ np.ascontiguousarray(ur)
        vt = np.ascontiguousarray(vt)
    else:
        q, r = np.linalg.qr(np.ascontiguousarray(a.T))
        ur, s, vt_r = np.linalg.svd(r, full_matrices=False)
        # a = r^T q^T = vt_r^T s ur^T q^T
        u = np.ascontiguousarray(vt_r.T)
        vt = np.ascontiguousarray((np.ascontiguousarray(q) @ np.ascontiguousarray(ur)).T)
    u, vt = _fix_signs(u, vt)
    return u, s, vt


@jit
def cosines(x, y):
    """Singular values of x^T y, sorted nonincreasing (cosines of principal angles)."""
    return np.linalg.svd(np.ascontiguousarray(x.T) @ y, full_matrices=False)[1]


@jit
def angles_from_cosines(s):
    c = np.minimum(np.maximum(s, 0.0), 1.0)
    return np.arccos(c)[::-1].copy()


@jit
def principal_angles_core(x, y):
    """Principal angles, ascending, accurate for small angles too.

    arccos of the cosines loses half the digits near zero, so angles up to
    pi/4 are taken from arcsin of the singular values of (I - x x^T) y.
    Returns (angles, cosines).
    """
    c = cosines(x, y)
    resid = np.ascontiguousarray(y - x @ (np.ascontiguousarray(x.T) @ y))
    sn = np.linalg.svd(resid, full_matrices=False)[1]
    k = c.shape[0]
    out = np.empty(k)
    for i in range(k):
        ci = min(max(c[i], 0.0), 1.0)
        si = min(max(sn[k - 1 - i], 0.0), 1.0)
        if ci * ci >= 0.5:
            out[i] = np.arcsin(si)
        else:
            out[i] = np.arccos(ci)
    return out, c


@jit
def log_factors(x, y):
    """Thin SVD factors of (I - x x^T) y (x^T y)^{-1}.

    Returns (u, theta, vt, ok, s) where theta = arctan of the singular values
    and s are the cosines of the principal angles. ``ok`` is False when x^T y
    is numerically singular, i.e. some principal angle reaches pi/2.
    """
    xty = np.ascontiguousarray(x.T) @ y
    s = np.linalg.svd(xty, full_matrices=False)[1]
    k = x.shape[1]
    if s[0] <= 0.0 or s[-1] / s[0] < SING_TOL or s[-1] < SING_TOL:
        return (np.zeros(x.shape), np.zeros(k), np.eye(k), False, s)
    resid = y - x @ xty
    a = np.linalg.solve(np.ascontiguousarray(xty.T), np.ascontiguousarray(resid.T)).T
    u, sig, vt = svd_thin(np.ascontiguousarray(a))
    return u, np.arctan(sig), vt, True, s


@jit
def log_core(x, y):
    u, theta, vt, ok, s = log_factors(x, y)
    return (u * theta) @ vt, ok


@jit
def geodesic_core(x, y, t):
    """Orthonormal basis of span(x V cos(theta t) + U sin(theta t))."""
    u, theta, vt, ok, s = log_factors(x, y)
    if not ok:
        return x.copy(), False, s
    v = np.ascontiguousarray(vt.T)
    g = (x @ v) * np.cos(theta * t) + u * np.sin(theta * t)
    q, r = qr_pos(g)
    return q, True, s


@jit
def exp_core(x, v):
    u, psi, vt = svd_thin(np.ascontiguousarray(v))
    w = np.ascontiguousarray(vt.T)
    g = ((x @ w) * np.cos(psi)) @ vt + (u * np.sin(psi)) @ vt
    q, r = qr_pos(g)
    return q


@jit
def _distance_from_cos(s):
    a = angles_from_cosines(s)
    return np.sqrt(np.sum(a * a))


@jit
def riga_run(m, count, rows, k, radius):
    """Feed consecutive K-row blocks of ``rows`` through the inductive mean.

    Returns (m, count, rank_skipped, geodesic_skipped, ball_violations).
    ``count == 0`` means no block has been absorbed yet and ``m`` is ignored.
    """
    nblocks = rows.shape[0] // k
    rank_skipped = 0
    geo_skipped = 0
    ball = 0
    for b in range(nblocks):
        blk = np.ascontiguousarray(rows[b * k:(b + 1) * k].T)
        q, ratio = orth(blk)
        if ratio <= RANK_TOL:
            rank_skipped += 1
            continue
        if count == 0:
            m = q
            count = 1
            continue
        new, ok, s = geodesic_core(m, q, 1.0 / (count + 1))
        if not ok:
            geo_skipped += 1
            continue
        if _distance_from_cos(s) >= radius:
            ball += 1
        m = new
        count += 1
    return m, count, rank_skipped, geo_skipped, ball


@jit
def median_flush(m, count, buf, nbuf):
    """One stochastic median step from the ``nbuf`` buffered points.

    Returns (m, count, skipped) where skipped counts buffered points that
    contributed nothing (at the current estimate or geodesic undefined).
    """
    g = np.zeros(m.shape)
    skipped = 0
    for i in range(nbuf):
        v, ok = log_core(m, buf[i])
        if not ok:
            skipped += 1
            continue
        d = np.sqrt(np.sum(v * v))
        if d < ZERO_DIST:
            skipped += 1
            continue
        g += v / d
    g /= nbuf
    m = exp_core(m, g / (count + 1))
    return m, count + 1, skipped


@jit
def rriga_run(m, count, buf, nbuf, rows, k, radius):
    """Stochastic Frechet median over K-row blocks, mini-batched by ``buf``.

    Returns (m, count, nbuf, rank_skipped, zero_skipped, ball_violations);
    ``buf`` is updated in place.
    """
    nblocks = rows.shape[0] // k
    batch = buf.shape[0]
    rank_skipped = 0
    zero_skipped = 0
    ball = 0
    for b in range(nblocks):
        blk = np.ascontiguousarray(rows[b * k:(b + 1) * k].T)
        q, ratio = orth(blk)
        if ratio <= RANK_TOL:
            rank_skipped += 1
            continue
        if count == 0:
            m = q
            count = 1
            continue
        if _distance_from_cos(cosines(m, q)) >= radius:
            ball += 1
        buf[nbuf] = q
        nbuf += 1
        if nbuf == batch:
            m, count, sk = median_flush(m, count, buf, nbuf)
            zero_skipped += sk
            nbuf = 0
    return m, count, nbuf, rank_skipped, zero_skipped, ball


@jit
def oja_run(v, t, rows, alpha):
    """Normalised Oja updates with step alpha / (D sqrt(t)).

    Stops early when an update loses rank. Returns (v, t, stop) where ``stop``
    is the row index that failed (v is then the unnormalised update) or -1.
    """
    d = v.shape[0]
    for i in range(rows.shape[0]):
        x = rows[i]
        t += 1
        gamma = alpha / (d * np.sqrt(t))
        w = v + gamma * np.outer(x, x @ v)
        q, ratio = orth(w)
        if ratio <= RANK_TOL:
            return w, t, i
        v = q
    return v, t, -1


@jit
def empca_run(v, avg, n_avg, t, rows, alpha, reorth_every):
    """Online EM-PCA with step 1 / t^alpha and Polyak-Ruppert averaging.

    Returns (v, avg, n_avg, t, skipped).
    """
    skipped = 0
    for i in range(rows.shape[0]):
        x = rows[i]
        t += 1
        vtv = np.ascontiguousarray(v.T) @ v
        y = np.linalg.solve(vtv, np.ascontiguousarray(v.T) @ x)
        yy = y @ y
        if yy < 1e-12:
            skipped += 1
            continue
        gamma = 1.0 / t ** alpha
        v = (1.0 - gamma) * v + gamma * np.outer(x, y / yy)
        if t % reorth_every == 0:
            v, r = qr_pos(v)
        n_avg += 1
        avg = avg + (v - avg) / n_avg
    return v, avg, n_avg, t, skipped
