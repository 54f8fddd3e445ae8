"""Hot loops: inclusion-exclusion evaluation, Monte-Carlo choice counting,
and the opaque-price line search.

Every kernel exists twice.  The ``*_loop`` variants are scalar loops that
numba compiles with ``@njit``; the ``*_numpy`` variants are vectorized
NumPy.  ``BACKEND`` picks which pair the rest of the package calls.  Set
``OPAQUE_MNL_DISABLE_NUMBA=1`` (or uninstall numba) to force the NumPy path.

Subset masks use bit ``k`` for the ``k``-th member of the assortment, so
mask ``m`` is the set ``I`` of products whose price is replaced by the
opaque price.  All exponentials are shifted by ``c = max(0, v - r, v - rho)``
so that the largest term is ``1``; ratios are unaffected.
"""
import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

_DISABLED = os.environ.get("OPAQUE_MNL_DISABLE_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)
BACKEND = "numba" if (numba is not None and not _DISABLED) else "numpy"

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# scalar-loop kernels (compiled by numba)
# ---------------------------------------------------------------------------


@_njit
def _shift_loop(v, r, rho):
    c = 0.0
    for k in range(v.shape[0]):
        c = max(c, v[k] - r[k], v[k] - rho)
    return c


@_njit
def _subset_sums_loop(a, b, ra):
    """Per-mask sums of ``a``, ``b`` and ``r*a`` over the members of the mask."""
    m = a.shape[0]
    size = 1 << m
    sa = np.zeros(size)
    sb = np.zeros(size)
    sra = np.zeros(size)
    odd = np.zeros(size, dtype=np.bool_)
    for mask in range(1, size):
        k = 0
        while not (mask >> k) & 1:
            k += 1
        prev = mask ^ (1 << k)
        sa[mask] = sa[prev] + a[k]
        sb[mask] = sb[prev] + b[k]
        sra[mask] = sra[prev] + ra[k]
        odd[mask] = not odd[prev]
    return sa, sb, sra, odd


def ie_revenue_loop(v, r, rho):
    """Alternating subset sum of traditional revenues with prices in I set to rho."""
    m = v.shape[0]
    c = _shift_loop(v, r, rho)
    a = np.exp(v - r - c)
    b = np.exp(v - rho - c)
    one = math.exp(-c)
    sa, sb, sra, odd = _subset_sums_loop(a, b, r * a)
    full = (1 << m) - 1
    total = 0.0
    comp = 0.0
    for mask in range(1, full + 1):
        rest = full ^ mask
        term = (sra[rest] + rho * sb[mask]) / (one + sa[rest] + sb[mask])
        if not odd[mask]:
            term = -term
        # Neumaier compensated summation
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
    return total + comp


def ie_probs_loop(v, r, rho):
    """Choice probabilities and revenue under the opaque-active branch.

    Returns ``(p_product, p_opaque, p_none, revenue)``.
    """
    m = v.shape[0]
    c = _shift_loop(v, r, rho)
    a = np.exp(v - r - c)
    b = np.exp(v - rho - c)
    one = math.exp(-c)
    sa, sb, sra, odd = _subset_sums_loop(a, b, r * a)
    full = (1 << m) - 1
    # accumulators: [0, m) products (sum of s/D over masks without k),
    # m opaque, m + 1 none, m + 2 revenue
    acc = np.zeros(m + 3)
    cmp_ = np.zeros(m + 3)
    for mask in range(1, full + 1):
        rest = full ^ mask
        inv = 1.0 / (one + sa[rest] + sb[mask])
        if not odd[mask]:
            inv = -inv
        for j in range(m + 3):
            if j < m:
                if (mask >> j) & 1:
                    continue
                term = inv
            elif j == m:
                term = sb[mask] * inv
            elif j == m + 1:
                term = one * inv
            else:
                term = (sra[rest] + rho * sb[mask]) * inv
            t = acc[j] + term
            if abs(acc[j]) >= abs(term):
                cmp_[j] += (acc[j] - t) + term
            else:
                cmp_[j] += (term - t) + acc[j]
            acc[j] = t
    tot = acc + cmp_
    p = np.empty(m)
    for k in range(m):
        p[k] = a[k] * tot[k]
    return p, tot[m], tot[m + 1], tot[m + 2]


def mc_counts_loop(g, idx, v, r, rho, active):
    """Tally utility-maximizing options over rows of Gumbel noise ``g``.

    ``g[:, 0]`` is the no-purchase noise and ``g[:, idx[k]]`` the noise of
    the ``k``-th member.  Returns counts indexed ``[members..., opaque, none]``.
    Ties: lower member index beats higher, members beat no-purchase, opaque
    beats everything.
    """
    T = g.shape[0]
    m = v.shape[0]
    counts = np.zeros(m + 2, dtype=np.int64)
    for t in range(T):
        best_k = -1
        best_u = -np.inf
        vmin = np.inf
        for k in range(m):
            vk = v[k] + g[t, idx[k]]
            if vk < vmin:
                vmin = vk
            u = vk - r[k]
            if u > best_u:
                best_u = u
                best_k = k
        choice = best_k
        if g[t, 0] > best_u:
            best_u = g[t, 0]
            choice = m + 1
        if active and vmin - rho >= best_u:
            choice = m
        counts[choice] += 1
    return counts


ie_revenue_jit = _njit(ie_revenue_loop)
ie_probs_jit = _njit(ie_probs_loop)
mc_counts_jit = _njit(mc_counts_loop)


# ---------------------------------------------------------------------------
# vectorized NumPy kernels
# ---------------------------------------------------------------------------


def _subset_sums_numpy(a, b, ra):
    sa = np.zeros(1)
    sb = np.zeros(1)
    sra = np.zeros(1)
    odd = np.zeros(1, dtype=bool)
    for k in range(a.shape[0]):
        sa = np.concatenate((sa, sa + a[k]))
        sb = np.concatenate((sb, sb + b[k]))
        sra = np.concatenate((sra, sra + ra[k]))
        odd = np.concatenate((odd, ~odd))
    return sa, sb, sra, odd


def _prepare_numpy(v, r, rho):
    c = max(0.0, float(np.max(v - r)), float(np.max(v - rho)))
    a = np.exp(v - r - c)
    b = np.exp(v - rho - c)
    one = math.exp(-c)
    sa, sb, sra, odd = _subset_sums_numpy(a, b, r * a)
    full = (1 << v.shape[0]) - 1
    masks = np.arange(1, full + 1)
    rest = full ^ masks
    inv = 1.0 / (one + sa[rest] + sb[masks])
    inv = np.where(odd[masks], inv, -inv)
    return a, one, sb, sra, masks, rest, inv


def ie_revenue_numpy(v, r, rho):
    _, _, sb, sra, masks, rest, inv = _prepare_numpy(v, r, rho)
    return math.fsum((sra[rest] + rho * sb[masks]) * inv)


def ie_probs_numpy(v, r, rho):
    a, one, sb, sra, masks, rest, inv = _prepare_numpy(v, r, rho)
    p = np.empty(v.shape[0])
    for k in range(v.shape[0]):
        p[k] = a[k] * math.fsum(inv[(masks >> k) & 1 == 0])
    return (
        p,
        math.fsum(sb[masks] * inv),
        one * math.fsum(inv),
        math.fsum((sra[rest] + rho * sb[masks]) * inv),
    )


def mc_counts_numpy(g, idx, v, r, rho, active):
    m = v.shape[0]
    V = v + g[:, idx]
    U = V - r
    best_k = U.argmax(axis=1)
    best_u = U[np.arange(U.shape[0]), best_k]
    choice = np.where(g[:, 0] > best_u, m + 1, best_k)
    if active:
        best_u = np.maximum(best_u, g[:, 0])
        choice = np.where(V.min(axis=1) - rho >= best_u, m, choice)
    return np.bincount(choice, minlength=m + 2).astype(np.int64)


# ---------------------------------------------------------------------------
# opaque-price line search, built over either revenue kernel
# ---------------------------------------------------------------------------


def _make_search(rev, jit):
    def golden(v, r, lo, hi, tol):
        x1 = hi - INV_PHI * (hi - lo)
        x2 = lo + INV_PHI * (hi - lo)
        f1 = rev(v, r, x1)
        f2 = rev(v, r, x2)
        while hi - lo > tol:
            if f1 < f2:
                lo = x1
                x1 = x2
                f1 = f2
                x2 = lo + INV_PHI * (hi - lo)
                f2 = rev(v, r, x2)
            else:
                hi = x2
                x2 = x1
                f2 = f1
                x1 = hi - INV_PHI * (hi - lo)
                f1 = rev(v, r, x1)
        if f2 > f1:
            return x2, f2
        return x1, f1

    if jit:
        golden = numba.njit(nogil=True)(golden)

    def search(v, r, hi, tol, points):
        """Plain golden section on [0, hi] and grid-guarded golden section.

        Returns ``(rho_plain, rev_plain, rho_guarded, rev_guarded)``.
        """
        rp, fp = golden(v, r, 0.0, hi, tol)
        step = hi / (points - 1)
        kbest = 0
        fbest = rev(v, r, 0.0)
        for k in range(1, points):
            f = rev(v, r, k * step)
            if f > fbest:
                fbest = f
                kbest = k
        lo_k = max(kbest - 1, 0)
        hi_k = min(kbest + 1, points - 1)
        rg, fg = golden(v, r, lo_k * step, min(hi_k * step, hi), tol)
        if fbest > fg:
            rg = kbest * step
            fg = fbest
        return rp, fp, rg, fg

    if jit:
        search = numba.njit(nogil=True)(search)
    return search


search_numpy = _make_search(ie_revenue_numpy, False)
search_jit = _make_search(ie_revenue_jit, True) if numba is not None else search_numpy

if BACKEND == "numba":
    ie_revenue = ie_revenue_jit
    ie_probs = ie_probs_jit
    mc_counts = mc_counts_jit
    search = search_jit
else:
    ie_revenue = ie_revenue_numpy
    ie_probs = ie_probs_numpy
    mc_counts = mc_counts_numpy
    search = search_numpy
