"""Divergence-radius geometry: the center/radius solver with a duality-gap
certificate, peripheral sets, the variance-range linear programs,
Caratheodory support reduction, and eigenvalue-floored covering nets."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .divergences import SUPPORT_LEAK_TOL, relative_entropy_variance
from .operator_core import (
    SUPPORT_TOL,
    DensityMatrix,
    asmat,
    trace_distance,
)
from .simplex import solve_lp

DEDUP_TOL = 1e-10
WEIGHT_FLOOR = 1e-15
DEFAULT_LP_TOL = 1e-7


class BarycenterInfeasible(RuntimeError):
    """The center is not expressible as a mixture of the given states within
    the LP tolerance; the caller should widen the peripheral slack."""


def fibonacci_sphere(n: int):
    """n near-uniform unit vectors on S2, golden-angle spiral order."""
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    ang = math.pi * (3.0 - math.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(ang), r * np.sin(ang), z])


_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def bloch_state(v) -> DensityMatrix:
    """Qubit state with Bloch vector v, |v| <= 1."""
    v = np.asarray(v, dtype=float)
    mat = 0.5 * (np.eye(2, dtype=complex) + v[0] * _PAULI[0] + v[1] * _PAULI[1] + v[2] * _PAULI[2])
    return DensityMatrix(mat)


def bloch_vector(rho):
    m = asmat(rho)
    return np.array([float(np.trace(m @ p).real) for p in _PAULI])


def _state_key(mat, decimals: int = 8):
    flat = np.round(mat.ravel().view(float), decimals)
    flat = flat + 0.0  # collapse -0.0 and 0.0 to one key
    return flat.tobytes()


class StateSet:
    """Finite list of same-dimensional density matrices, deduplicated under
    trace distance <= DEDUP_TOL (grid-hash buckets with exact in-bucket
    checks; distinct states straddling a grid cell are kept, which only
    enlarges the set)."""

    def __init__(self, states, labels=None, dedup: bool = True):
        if not states:
            raise ValueError("empty state set")
        states = [s if isinstance(s, DensityMatrix) else DensityMatrix(s) for s in states]
        d = states[0].dim
        if any(s.dim != d for s in states):
            raise ValueError("mixed dimensions in state set")
        if labels is not None and len(labels) != len(states):
            raise ValueError("labels length mismatch")
        self.dim = d
        self._lookup = {}
        if dedup:
            kept, kept_labels = [], []
            for i, s in enumerate(states):
                key = _state_key(s.mat)
                dup = False
                for j in self._lookup.get(key, ()):
                    if trace_distance(kept[j], s) <= DEDUP_TOL:
                        dup = True
                        break
                if dup:
                    continue
                self._lookup.setdefault(key, []).append(len(kept))
                kept.append(s)
                if labels is not None:
                    kept_labels.append(labels[i])
            self.states = kept
            self.labels = kept_labels if labels is not None else None
        else:
            self.states = states
            self.labels = list(labels) if labels is not None else None
            for i, s in enumerate(states):
                self._lookup.setdefault(_state_key(s.mat), []).append(i)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i) -> DensityMatrix:
        return self.states[i]

    def __iter__(self):
        return iter(self.states)

    def as_array(self):
        return np.stack([s.mat for s in self.states])

    def index_of(self, state) -> int:
        """Index of a member equal to state within DEDUP_TOL, or -1."""
        cand = state if isinstance(state, DensityMatrix) else DensityMatrix(asmat(state))
        for j in self._lookup.get(_state_key(cand.mat), ()):
            if trace_distance(self.states[j], cand) <= DEDUP_TOL:
                return j
        for j, s in enumerate(self.states):
            if trace_distance(s, cand) <= DEDUP_TOL:
                return j
        return -1

    def __repr__(self) -> str:
        return f"StateSet(n={len(self)}, d={self.dim})"


class RadiusReport:
    """Output of the divergence-center solver: the center, the radius with a
    two-sided enclosure [lower, upper], the optimizing weights, and the
    peripheral index set."""

    def __init__(self, chi, sigma_star, weights, gap, iterations, peripheral,
                 converged, lower, upper, peripheral_slack, tol):
        self.chi = float(chi)
        self.sigma_star = sigma_star
        self.weights = np.asarray(weights, dtype=float)
        self.gap = float(gap)
        self.iterations = int(iterations)
        self.peripheral = list(peripheral)
        self.converged = bool(converged)
        self.lower = float(lower)
        self.upper = float(upper)
        self.peripheral_slack = float(peripheral_slack)
        self.tol = float(tol)

    def __repr__(self) -> str:
        return (f"RadiusReport(chi={self.chi:.9g}, gap={self.gap:.3g}, "
                f"iterations={self.iterations}, converged={self.converged})")


class DispersionRange:
    """Extreme peripheral information variances and the decompositions that
    attain them (probability vectors aligned with `indices`)."""

    def __init__(self, v_min, v_max, p_min, p_max, indices, lp_tol):
        self.v_min = float(v_min)
        self.v_max = float(v_max)
        self.p_min = np.asarray(p_min, dtype=float)
        self.p_max = np.asarray(p_max, dtype=float)
        self.indices = list(indices)
        self.lp_tol = float(lp_tol)

    def __repr__(self) -> str:
        return f"DispersionRange([{self.v_min:.9g}, {self.v_max:.9g}])"


def _stack(states):
    if isinstance(states, StateSet):
        return states.as_array()
    return np.stack([asmat(s) for s in states])


def _batch_entropies(arr):
    w = np.linalg.eigvalsh(arr)
    w = np.clip(w, 0.0, None)
    return -np.where(w > 0.0, w * np.log(np.where(w > 0.0, w, 1.0)), 0.0).sum(axis=1)


def _divergence_profile(arr, sigma_mat, entropies=None):
    """D(rho_i || sigma) for a stacked family; +inf where rho leaks out of
    sigma's support."""
    if entropies is None:
        entropies = _batch_entropies(arr)
    w, u = np.linalg.eigh(sigma_mat)
    on = w > SUPPORT_TOL
    m = np.einsum("ib,nib->nb", u.conj(), arr @ u).real
    dvals = -entropies - (m[:, on] @ np.log(w[on]))
    dvals = np.where((dvals < 0.0) & (dvals > -1e-9), 0.0, dvals)
    if not on.all():
        leak = m[:, ~on].sum(axis=1)
        dvals = np.where(leak > SUPPORT_LEAK_TOL, np.inf, dvals)
    return dvals


def holevo_quantity(weights, states) -> float:
    """I(P) = H(mixture) - sum P(i) H(rho_i), in nats."""
    arr = _stack(states)
    p = np.asarray(weights, dtype=float).reshape(-1)
    if p.size != arr.shape[0]:
        raise ValueError("weights length mismatch")
    if p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("weights are not a distribution")
    p = np.clip(p, 0.0, None)
    mix = np.einsum("n,nij->ij", p, arr)
    h_mix = _batch_entropies(mix[None])[0]
    return max(float(h_mix - p @ _batch_entropies(arr)), 0.0)


def _joint_support_isometry(arr):
    """Isometry onto the joint support of the family, or None if full rank."""
    avg = arr.mean(axis=0)
    w, u = np.linalg.eigh(avg)
    on = w > max(1e-12 * float(w.max()), 1e-15)
    if on.all():
        return None
    return u[:, on]


def _traceless_basis(d: int):
    """Orthonormal traceless Hermitian basis (d^2 - 1 matrices)."""
    mats = []
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for k in range(d - 1):
        e = np.zeros((d, d), dtype=complex)
        # difference of adjacent diagonal units, Gram-Schmidt-free scaling
        e[k, k] = 1.0
        e[k + 1, k + 1] = -1.0
        mats.append(e * inv_sqrt2)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = inv_sqrt2
            mats.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = -1j * inv_sqrt2
            e[k, j] = 1j * inv_sqrt2
            mats.append(e)
    # orthonormalize the diagonal block (adjacent differences overlap)
    out = np.stack(mats)
    flat = out.reshape(len(mats), -1)
    q, _ = np.linalg.qr(flat.conj().T)
    return q.T.conj().reshape(len(mats), d, d)


def _log_gradients(sigma, rhos, basis):
    """Rows g_i with g_ik = d/dt D(rho_i || sigma + t B_k) at t = 0."""
    w, v = np.linalg.eigh(sigma)
    w = np.clip(w, 1e-300, None)
    lw = np.log(w)
    diff = w[:, None] - w[None, :]
    near = np.abs(diff) <= 1e-12 * (w[:, None] + w[None, :])
    phi = np.where(near, 2.0 / (w[:, None] + w[None, :]),
                   (lw[:, None] - lw[None, :]) / np.where(near, 1.0, diff))
    r_t = np.einsum("ai,nab,bj->nij", v.conj(), rhos, v).transpose(0, 2, 1)
    c = np.einsum("ai,kab,bj->kij", v.conj(), basis, v)
    return -np.einsum("nab,ab,kab->nk", r_t, phi, c).real


def _minimax_polish(arr, ent, evaluate, sigma, dvals, lower, tol, budget):
    """Trust-region descent on max_i D(rho_i || sigma) over trace-one
    Hermitian perturbations of sigma.

    Linearizes the active divergences through the derivative of the matrix
    logarithm and steps via a small box LP in the d^2 - 1 traceless
    coordinates; afterwards a barycentric LP on the tight set recovers a
    matching weight witness.  Returns (evals, sigma, dvals, max_d, q, qst)
    with q/qst None when no witness was found.
    """
    d = arr.shape[-1]
    basis = _traceless_basis(d)
    m = basis.shape[0]
    max_d = float(dvals.max())
    delta = 0.05
    evals = 0
    for _ in range(60):
        if evals >= budget or max_d - lower <= tol:
            break
        evals += 1
        band = max(8.0 * (max_d - lower), 1e-5)
        order = np.argsort(dvals)[::-1]
        active = order[: min(512, int((dvals >= max_d - band).sum()))]
        g = _log_gradients(sigma, arr[active], basis)
        # variables y = x + delta (box-shifted step) and z = chi_tilde - 2,
        # both nonnegative for the simplex solver
        nv = m + 1
        a_ub = np.zeros((len(active) + nv, nv))
        a_ub[: len(active), :m] = g
        a_ub[: len(active), m] = -1.0
        a_ub[len(active):] = np.eye(nv)
        b_ub = np.concatenate([
            -dvals[active] + delta * g.sum(axis=1) - 2.0,
            np.full(m, 2.0 * delta),
            [max_d + 2.0],
        ])
        c = np.zeros(nv)
        c[m] = 1.0
        res = solve_lp(c, None, None, a_ub, b_ub)
        if res.status != "optimal":
            break
        predicted = float(res.value) - 2.0
        if predicted >= max_d - tol / 8.0 and delta <= 1e-7:
            break
        x = res.x[:m] - delta
        cand = sigma + np.einsum("k,kij->ij", x, basis)
        cand = 0.5 * (cand + cand.conj().T)
        if np.linalg.eigvalsh(cand)[0] <= 1e-13:
            delta *= 0.3
            continue
        cand_dvals = _divergence_profile(arr, cand, ent)
        cand_max = float(cand_dvals.max())
        if cand_max < max_d - 1e-14:
            sigma, dvals, max_d = cand, cand_dvals, cand_max
            delta = min(1.7 * delta, 0.2)
        else:
            delta *= 0.3
            if delta < 1e-9:
                break

    # recover a weight witness: tight-set mixture reproducing sigma
    n = arr.shape[0]
    target = _basis_coords(sigma)[0]
    for band in (2e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4):
        tight = np.nonzero(dvals >= max_d - band)[0]
        if tight.size == 0:
            continue
        coords = _basis_coords(arr[tight])
        for w in (1e-9, 1e-8, 1e-7):
            a_ub = np.vstack([coords.T, -coords.T])
            b_ub = np.concatenate([target + w / d, -(target - w / d)])
            res = solve_lp(dvals[tight], np.ones((1, tight.size)),
                           np.array([1.0]), a_ub, b_ub, maximize=True)
            if res.status == "optimal":
                q = np.zeros(n)
                q[tight] = np.clip(res.x, 0.0, None)
                q /= q.sum()
                qst = evaluate(q)
                evals += 1
                return evals, sigma, dvals, max_d, q, qst
    return evals, sigma, dvals, max_d, None, None


def divergence_center(s: StateSet, tol: float = 1e-6, max_iter: int = 10000,
                      init_weights=None) -> RadiusReport:
    """Divergence center and radius of a state set by multiplicative dual
    ascent, with a certified enclosure [I(P), I(P) + gap] around the radius.

    Every iterate certifies I(P) <= chi <= max_i D(rho_i || mixture), so the
    returned enclosure is valid regardless of convergence; converged=False
    flags a gap above tol after max_iter rounds.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    arr = _stack(s)
    n = arr.shape[0]
    iso = _joint_support_isometry(arr)
    if iso is not None:
        arr = np.einsum("ji,njk,kl->nil", iso.conj(), arr, iso)
        arr = 0.5 * (arr + np.conj(np.transpose(arr, (0, 2, 1))))

    ent = _batch_entropies(arr)
    if init_weights is None:
        p = np.full(n, 1.0 / n)
    else:
        p = np.asarray(init_weights, dtype=float).reshape(-1).copy()
        if p.size != n or p.min() < 0.0 or p.sum() <= 0.0:
            raise ValueError("invalid initial weights")
        p = p / p.sum()

    class _Stats:
        __slots__ = ("sigma", "dvals", "info", "max_d")

    def evaluate(q):
        st = _Stats()
        st.sigma = np.einsum("n,nij->ij", q, arr)
        st.sigma = 0.5 * (st.sigma + st.sigma.conj().T)
        st.dvals = _divergence_profile(arr, st.sigma, ent)
        sw = np.clip(np.linalg.eigvalsh(st.sigma), 0.0, None)
        swp = sw[sw > 0.0]
        st.info = float(-(swp * np.log(swp)).sum()) - float(q @ ent)
        st.max_d = float(st.dvals.max())
        return st

    def push(q, st, t):
        q = q * np.exp(t * (st.dvals - st.max_d))
        q[q < WEIGHT_FLOOR] = 0.0
        total = q.sum()
        return q / total if total > 0.0 else np.full(n, 1.0 / n)

    def clean(q):
        q = np.clip(q, 0.0, None)
        q[q < WEIGHT_FLOOR] = 0.0
        total = q.sum()
        return q / total if total > 0.0 else None

    # Any weights certify a lower bound I(P) and any mixture certifies an
    # upper bound max_i D; the enclosure pairs the best witnesses seen.
    it = 0
    cur = evaluate(p)
    low_info, low_p = cur.info, p.copy()
    up_maxd, up = cur.max_d, cur

    def note(st, q):
        nonlocal low_info, low_p, up_maxd, up
        if st.info > low_info:
            low_info, low_p = st.info, q.copy()
        if st.max_d < up_maxd:
            up_maxd, up = st.max_d, st

    # Over-relaxed multiplicative ascent: exponent 1 is the provably
    # ascending update; larger exponents are kept while the objective rises,
    # period-2 bounces are absorbed by averaging consecutive iterates, and
    # genuine overshoots back off.  When the ascent dawdles, a trust-region
    # polish descends the upper certificate directly in mixture space.
    step = 1.0
    prev_p = prev_st = None
    next_polish = 384
    while up_maxd - low_info > tol and it < max_iter:
        if it >= next_polish and math.isfinite(up_maxd):
            used, psig, pdv, pmax, q, qst = _minimax_polish(
                arr, ent, evaluate, up.sigma, up.dvals, low_info, tol,
                max_iter - it)
            it += used
            if pmax < up_maxd:
                st = _Stats()
                st.sigma, st.dvals, st.max_d = psig, pdv, pmax
                st.info = -math.inf
                up_maxd, up = pmax, st
            if qst is not None:
                note(qst, q)
                if qst.info >= cur.info:
                    p, cur = q, qst
                    prev_p = prev_st = None
                    step = 1.0
            next_polish = it + 384
            continue
        if math.isinf(cur.max_d):
            # a zero-weight state fell outside the mixture support; blend in
            # weight on those states so the support recovers
            out = np.isinf(cur.dvals)
            p = 0.5 * p + 0.5 * out.astype(float) / out.sum()
            cur = evaluate(p)
            it += 1
            note(cur, p)
            step = 1.0
            prev_p = prev_st = None
            continue
        if prev_st is not None and cur.info < prev_st.info - 1e-12 and step > 1.0:
            avg = clean(0.5 * (p + prev_p))
            accepted = False
            if avg is not None:
                st = evaluate(avg)
                it += 1
                note(st, avg)
                if st.info >= prev_st.info - 1e-12 and not math.isinf(st.max_d):
                    p, cur = avg, st
                    step = max(1.0, 0.75 * step)
                    accepted = True
            if not accepted:
                step = max(1.0, 0.25 * step)
                p, cur = prev_p, prev_st
            prev_p = prev_st = None
            continue
        prev_p, prev_st = p, cur
        p = push(p, cur, step)
        cur = evaluate(p)
        it += 1
        note(cur, p)
        step = min(1.5 * step, 2.0 ** 20)

    converged = up_maxd - low_info <= tol
    info = low_info
    gap = max(up_maxd - low_info, 0.0)
    p = low_p
    dvals, sigma = up.dvals, up.sigma
    chi = info + gap / 2.0
    center = sigma if iso is None else iso @ sigma @ iso.conj().T
    slack = max(10.0 * tol, gap)
    peripheral = [int(i) for i in np.nonzero(dvals >= chi - slack)[0]]
    return RadiusReport(
        chi=chi, sigma_star=DensityMatrix(center), weights=p, gap=gap,
        iterations=it, peripheral=peripheral, converged=converged,
        lower=info, upper=info + gap, peripheral_slack=slack, tol=tol,
    )


def peripheral_set(s: StateSet, report: RadiusReport, slack: float = None):
    """Indices at maximal divergence from the center, up to slack."""
    if slack is None:
        slack = max(10.0 * report.tol, report.gap)
    if slack < report.gap:
        raise ValueError("slack must be at least the certified gap")
    dvals = _divergence_profile(_stack(s), report.sigma_star.mat)
    idx = [int(i) for i in np.nonzero(dvals >= report.chi - slack)[0]]
    if not idx:
        raise RuntimeError("empty peripheral set: enclosure is inconsistent")
    return idx


def _hermitian_basis(d: int):
    """Orthonormal basis of d x d Hermitian matrices under Tr(A B)."""
    mats = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        mats.append(e)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = inv_sqrt2
            mats.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = -1j * inv_sqrt2
            e[k, j] = 1j * inv_sqrt2
            mats.append(e)
    return np.stack(mats)


def _basis_coords(arr, basis=None):
    if arr.ndim == 2:
        arr = arr[None]
    if basis is None:
        basis = _hermitian_basis(arr.shape[-1])
    return np.einsum("kij,nji->nk", basis, arr).real


def dispersion_range(s: StateSet, peripheral, sigma_star,
                     lp_tol: float = DEFAULT_LP_TOL) -> DispersionRange:
    """Extremes of sum p_i V(rho_i || sigma*) over decompositions of the
    center into the peripheral states, by linear programming with the
    barycenter constraint relaxed to a +-lp_tol/d box per coordinate."""
    peripheral = list(peripheral)
    if not peripheral:
        raise ValueError("peripheral set is empty")
    arr = _stack([s[i] for i in peripheral])
    d = arr.shape[-1]
    vvals = np.array([relative_entropy_variance(s[i], sigma_star) for i in peripheral])
    if not np.isfinite(vvals).all():
        raise BarycenterInfeasible("a peripheral state leaks outside the center support")
    coords = _basis_coords(arr)
    target = _basis_coords(asmat(sigma_star))[0]
    w = lp_tol / d
    a_ub = np.vstack([coords.T, -coords.T])
    b_ub = np.concatenate([target + w, -(target - w)])
    a_eq = np.ones((1, len(peripheral)))
    b_eq = np.array([1.0])

    lo = solve_lp(vvals, a_eq, b_eq, a_ub, b_ub, maximize=False)
    if lo.status == "infeasible":
        raise BarycenterInfeasible(
            "center not decomposable over the peripheral set within lp_tol; "
            "widen the peripheral slack")
    if lo.status != "optimal":
        raise ArithmeticError(f"variance LP ended with status {lo.status}")
    hi = solve_lp(vvals, a_eq, b_eq, a_ub, b_ub, maximize=True)
    if hi.status != "optimal":
        raise ArithmeticError(f"variance LP ended with status {hi.status}")
    v_min = max(float(lo.value), 0.0)
    v_max = max(float(hi.value), v_min)
    return DispersionRange(v_min, v_max, lo.x, hi.x, peripheral, lp_tol)


def caratheodory_prune(weights, states, sigma_star, preserve_value: float):
    """Thin a feasible decomposition to at most d^2 + 1 support points while
    preserving the barycenter and the value sum p_i V(rho_i || sigma*).

    Returns (weights', support') with support' a list of indices into
    `states` and weights' the matching probabilities.  Works by walking null
    directions of the stacked (coords, mass, value) constraint matrix to a
    boundary of the simplex, zeroing one weight per step.
    """
    w_all = np.asarray(weights, dtype=float)
    support = [int(i) for i in np.nonzero(w_all > 0.0)[0]]
    w = w_all[support].copy()
    arr = _stack(states)
    d = arr.shape[-1]
    limit = d * d + 1
    if len(support) <= limit:
        return w.copy(), support
    vvals = np.array([relative_entropy_variance(states[i], sigma_star) for i in support])
    coords = _basis_coords(arr[support]).T  # (d^2, k)

    while len(support) > limit:
        mat = np.vstack([coords, np.ones((1, len(support))), vvals[None, :]])
        # trace redundancy keeps this matrix rank-deficient whenever the
        # support exceeds d^2 + 1, so a null direction always exists
        _, _, vh = np.linalg.svd(mat)
        u = vh[-1]
        u = u / np.abs(u).max()
        if not (u > 1e-14).any():
            u = -u
        pos = u > 1e-14
        steps = w[pos] / u[pos]
        t = steps.min()
        w = w - t * u
        w[w < WEIGHT_FLOOR] = 0.0
        keep = w > 0.0
        w = w[keep]
        support = [si for si, k in zip(support, keep) if k]
        coords = coords[:, keep]
        vvals = vvals[keep]
    w = w / w.sum()
    return w, support


def _compositions(total: int, parts: int):
    """All positive integer compositions of total into parts, lexicographic."""
    out = []
    for cut in combinations(range(1, total), parts - 1):
        prev = 0
        row = []
        for c in cut:
            row.append(c - prev)
            prev = c
        row.append(total - prev)
        out.append(row)
    return np.array(out, dtype=float)


def _haar_unitary(d: int, rng) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    ph = np.diag(r).copy()
    ph = ph / np.abs(ph)
    return q * ph.conj()


class GammaNet(StateSet):
    """Covering net of full-rank states: eigenframes crossed with all
    full-support m-types of the eigenvalue simplex, m = ceil(2d/gamma).
    Every element has minimum eigenvalue at least gamma/(2d+gamma)."""

    def __init__(self, states, gamma, m, dim, directions=None, frames=None,
                 radii=None, types=None):
        super().__init__(states, dedup=True)
        self.gamma = float(gamma)
        self.m = int(m)
        self.directions = directions
        self.frames = frames
        self.radii = radii
        self.types = types
        g, d = self.gamma, dim
        self.lemma_cardinality_bound = (5.0 / g) ** (2 * d * d) * (2 * d / g + 2.0) ** (d - 1)
        self.eigenvalue_floor = g / (2 * d + g)

    def cover(self, rho) -> int:
        """Index of a net element near rho (nearest eigenframe and nearest
        admissible spectrum)."""
        mat = asmat(rho)
        d = mat.shape[0]
        if d == 2:
            v = bloch_vector(mat)
            r = float(np.linalg.norm(v))
            hat = v / r if r > 1e-15 else self.directions[0]
            didx = int(np.argmax(self.directions @ hat))
            k = int(np.clip(round(self.m * (1.0 + r) / 2.0), 1, self.m - 1))
            tau = bloch_state(self.radii[k - 1] * self.directions[didx])
        else:
            # pick the frame whose pinching keeps rho most concentrated, then
            # round the pinched spectrum to a full-support m-type
            best, qbest, fbest = -1.0, None, None
            for f in self.frames:
                q = np.einsum("id,ij,jd->d", f.conj(), mat, f).real
                score = float((q * q).sum())
                if score > best:
                    best, qbest, fbest = score, q, f
            t = np.maximum(np.round(np.clip(qbest, 0.0, None) * self.m), 1.0)
            while t.sum() > self.m:
                t[int(np.argmax(t))] -= 1.0
            while t.sum() < self.m:
                t[int(np.argmin(t))] += 1.0
            tau = DensityMatrix((fbest * (t / self.m)) @ fbest.conj().T)
        idx = self.index_of(tau)
        if idx < 0:
            raise RuntimeError("cover produced a state missing from the net")
        return idx


def gamma_net(d: int, gamma: float, seed: int = 0) -> GammaNet:
    """Full-rank covering net with trace-distance radius gamma and the
    eigenvalue floor gamma/(2d+gamma)."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if d < 2:
        raise ValueError("dimension must be at least 2")
    m = math.ceil(2 * d / gamma)
    if d == 2:
        ndir = int(math.ceil((3.2 / gamma) ** 2))
        dirs = fibonacci_sphere(ndir)
        radii = np.array([(2 * k - m) / m for k in range(1, m)])
        states = [bloch_state(r * n) for n in dirs for r in radii]
        return GammaNet(states, gamma, m, d, directions=dirs, radii=radii)
    rng = np.random.default_rng(seed)
    nframes = int(math.ceil(d * (4.0 / gamma) ** 2))
    frames = [_haar_unitary(d, rng) for _ in range(nframes)]
    types = _compositions(m, d)
    states = []
    for f in frames:
        for t in types:
            states.append(DensityMatrix((f * (t / m)) @ f.conj().T))
    return GammaNet(states, gamma, m, d, frames=frames, types=types)
