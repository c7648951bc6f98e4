"""Entropic quantities, the two-matrix classical reduction, Neyman-Pearson
optimal tests, and computable two-sided brackets on the hypothesis-testing
divergence.  All values are in nats."""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .normal import phi_inv
from .operator_core import (
    SUPPORT_TOL,
    DensityMatrix,
    asmat,
    eig,
    log_on_support,
)

# Atoms whose log-likelihood ratios differ by less than this are one atom.
ATOM_MERGE_TOL = 1e-12
# Eigenvector overlaps below this carry no joint weight and are dropped.
OVERLAP_TOL = 1e-14
# rho-mass allowed outside the support of sigma before D(rho||sigma) = inf.
SUPPORT_LEAK_TOL = 1e-10

# Above this dimension scipy's MRRR eigensolver beats the default divide
# and conquer path by ~2x, which matters inside the threshold search.
_BIG_EIGH_DIM = 128


def _eigh(mat):
    if mat.shape[0] >= _BIG_EIGH_DIM:
        return scipy.linalg.eigh(mat, driver="evr")
    return np.linalg.eigh(mat)


class ClassicalDistribution:
    """Probability weights on a finite alphabet, summing to one within 1e-10."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise ValueError("empty distribution")
        if w.min() < -1e-12:
            raise ValueError(f"negative weight {w.min()!r}")
        w = np.clip(w, 0.0, None)
        total = float(w.sum())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {total!r}, not 1")
        self.weights = w

    def __len__(self) -> int:
        return self.weights.size

    def __repr__(self) -> str:
        return f"ClassicalDistribution(n={len(self)})"


def _merge_atoms(p, q, z):
    """Coalesce atoms whose z values agree within ATOM_MERGE_TOL.

    Returns arrays sorted by ascending z.  Infinite z values merge among
    themselves; the anchor of each group is its first member.
    """
    order = np.argsort(z, kind="stable")
    p, q, z = p[order], q[order], z[order]
    out_p, out_q, out_z = [], [], []
    for pi, qi, zi in zip(p, q, z):
        if out_z and (zi == out_z[-1] or abs(zi - out_z[-1]) < ATOM_MERGE_TOL):
            out_p[-1] += pi
            out_q[-1] += qi
        else:
            out_p.append(pi)
            out_q.append(qi)
            out_z.append(zi)
    return np.array(out_p), np.array(out_q), np.array(out_z)


class JointLogLikelihood:
    """Atoms (P-mass, Q-mass, log P/Q) of the log-likelihood ratio under P.

    Zero-P atoms are dropped on construction; the remaining P-masses must sum
    to one within 1e-9.  Atoms where Q vanishes but P does not carry z = +inf.
    """

    def __init__(self, p, q, z):
        p = np.asarray(p, dtype=float).reshape(-1)
        q = np.asarray(q, dtype=float).reshape(-1)
        z = np.asarray(z, dtype=float).reshape(-1)
        if not (p.shape == q.shape == z.shape):
            raise ValueError("atom arrays differ in length")
        keep = p > 0.0
        p, q, z = p[keep], q[keep], z[keep]
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"P-masses sum to {p.sum()!r}, not 1")
        self.p, self.q, self.z = _merge_atoms(p, q, z)

    @classmethod
    def from_distributions(cls, P: ClassicalDistribution, Q: ClassicalDistribution):
        if len(P) != len(Q):
            raise ValueError("alphabets differ in size")
        p, q = P.weights, Q.weights
        with np.errstate(divide="ignore"):
            z = np.where(q > 0.0, np.log(np.where(p > 0.0, p, 1.0)) - np.log(np.where(q > 0.0, q, 1.0)), math.inf)
        return cls(p, q, z)

    def product(self, other: "JointLogLikelihood") -> "JointLogLikelihood":
        """Atoms of the pair (P1xP2, Q1xQ2); z values add."""
        p = np.outer(self.p, other.p).ravel()
        q = np.outer(self.q, other.q).ravel()
        z = (self.z[:, None] + other.z[None, :]).ravel()
        return JointLogLikelihood(p, q, z)

    def _finite(self):
        """(p, z) over finite atoms, or (None, None) when the infinite atoms
        carry more than numerical-dust mass."""
        fin = np.isfinite(self.z)
        if fin.all():
            return self.p, self.z
        if float(self.p[~fin].sum()) > SUPPORT_LEAK_TOL:
            return None, None
        return self.p[fin], self.z[fin]

    def mean(self) -> float:
        p, z = self._finite()
        if p is None:
            return math.inf
        return float(p @ z)

    def variance(self) -> float:
        d = self.mean()
        if not math.isfinite(d):
            return math.inf
        p, z = self._finite()
        return float(p @ (z - d) ** 2)

    def third_abs(self) -> float:
        d = self.mean()
        if not math.isfinite(d):
            return math.inf
        p, z = self._finite()
        return float(p @ np.abs(z - d) ** 3)


def entropy(rho) -> float:
    """von Neumann entropy -Tr rho ln rho in nats."""
    if isinstance(rho, DensityMatrix):
        w = rho.eigenvalues()
    else:
        w = np.linalg.eigvalsh(asmat(rho))
    w = w[w > 0.0]
    return float(-(w * np.log(w)).sum())


def _sigma_spectrum(sigma):
    if isinstance(sigma, DensityMatrix):
        return sigma.spectrum()
    return eig(asmat(sigma))


def _log_terms(rho, sigma):
    """(entropy term -H(rho), Tr rho ln sigma) or (None, None) on support leak."""
    R = asmat(rho)
    spec = _sigma_spectrum(sigma)
    if R.shape[0] != spec.eigenvalues.size:
        raise ValueError("dimension mismatch")
    # mass of rho on each eigenvector of sigma
    m = np.einsum("ib,ib->b", spec.vectors.conj(), R @ spec.vectors).real
    on = spec.eigenvalues > SUPPORT_TOL
    leak = float(m[~on].sum()) if (~on).any() else 0.0
    if leak > SUPPORT_LEAK_TOL:
        return None, None
    cross = float(m[on] @ np.log(spec.eigenvalues[on]))
    return -entropy(rho), cross


def relative_entropy(rho, sigma) -> float:
    """D(rho||sigma) = Tr rho (ln rho - ln sigma); +inf if sigma fails to
    dominate the support of rho."""
    neg_h, cross = _log_terms(rho, sigma)
    if neg_h is None:
        return math.inf
    d = neg_h - cross
    if -1e-9 < d < 0.0:
        d = 0.0
    return d


def relative_entropy_variance(rho, sigma) -> float:
    """V(rho||sigma) = Tr rho (ln rho - ln sigma - D)^2; +inf off support.

    Evaluated as Tr rho B^2 - D^2 with B the difference of on-support matrix
    logarithms; the kernel convention makes this agree with the classical
    variance of the eigensystem reduction even at rank deficiency.
    """
    d = relative_entropy(rho, sigma)
    if not math.isfinite(d):
        return math.inf
    b = log_on_support(rho).mat - log_on_support(sigma).mat
    r = asmat(rho)
    second = float(np.einsum("ij,jk,ki->", r, b, b).real)
    return max(second - d * d, 0.0)


def nussbaum_skola(rho, sigma):
    """Classical pair over eigenvector index pairs with the same D and V.

    P(a,b) = r_a |<phi_a|psi_b>|^2, Q(a,b) = s_b |<phi_a|psi_b>|^2.  Atom pairs
    whose overlap falls below OVERLAP_TOL are dropped from both sides.
    """
    spec_r = rho.spectrum() if isinstance(rho, DensityMatrix) else eig(asmat(rho))
    spec_s = _sigma_spectrum(sigma)
    if spec_r.eigenvalues.size != spec_s.eigenvalues.size:
        raise ValueError("dimension mismatch")
    r = np.clip(spec_r.eigenvalues, 0.0, None)
    s = np.clip(spec_s.eigenvalues, 0.0, None)
    ov = np.abs(spec_r.vectors.conj().T @ spec_s.vectors) ** 2
    keep = (ov >= OVERLAP_TOL).ravel()
    p = (r[:, None] * ov).ravel()[keep]
    q = (s[None, :] * ov).ravel()[keep]
    return ClassicalDistribution(p / p.sum()), ClassicalDistribution(q / q.sum())


def third_abs_moment(P: ClassicalDistribution, Q: ClassicalDistribution) -> float:
    """E_P |ln(P/Q) - D(P||Q)|^3; +inf when P is not dominated by Q."""
    return JointLogLikelihood.from_distributions(P, Q).third_abs()


def pinching_projectors(sigma, tol: float = 1e-10):
    """Spectral projectors of sigma, eigenvalues grouped within tol."""
    spec = _sigma_spectrum(sigma)
    w, v = spec.eigenvalues, spec.vectors
    projs = []
    start = 0
    for i in range(1, w.size + 1):
        if i == w.size or abs(w[i] - w[i - 1]) > tol:
            cols = v[:, start:i]
            projs.append(cols @ cols.conj().T)
            start = i
    return projs


def pinch(rho, projectors) -> DensityMatrix:
    """Sum of P rho P over the given projectors."""
    R = asmat(rho)
    out = np.zeros_like(R)
    for pj in projectors:
        out += pj @ R @ pj
    return DensityMatrix(out)


def classical_beta(P: ClassicalDistribution, Q: ClassicalDistribution, eps: float) -> float:
    """Minimum Q-mass of a randomized test with P-mass at least 1 - eps.

    Greedy by descending likelihood ratio, with a fractional boundary atom.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if len(P) != len(Q):
        raise ValueError("alphabets differ in size")
    p, q = P.weights, Q.weights
    live = (p > 0.0) | (q > 0.0)
    p, q = p[live], q[live]
    with np.errstate(divide="ignore"):
        z = np.where(
            q > 0.0,
            np.where(p > 0.0, np.log(np.where(p > 0.0, p, 1.0)) - np.log(q), -math.inf),
            math.inf,
        )
    p, q, z = _merge_atoms(p, q, z)
    target = 1.0 - eps
    got = 0.0
    beta = 0.0
    for pi, qi in zip(p[::-1], q[::-1]):  # descending likelihood ratio
        if got + pi < target:
            got += pi
            beta += qi
        else:
            if pi > 0.0:
                beta += qi * (target - got) / pi
            return float(beta)
    return float(beta)


def quantum_beta(rho, sigma, eps: float, max_iter: int = 200) -> float:
    """Minimum Tr(Q sigma) over operator tests 0 <= Q <= 1 with
    Tr(Q rho) >= 1 - eps.

    Walks the Neyman-Pearson family {rho - t sigma > 0} plus a weighted piece
    of the zero eigenspace, locating t by a safeguarded secant/bisection
    search and then solving the boundary weight in closed form, so the type-I
    constraint is met to within solver dust.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    R = asmat(rho)
    S = asmat(sigma)
    if R.shape != S.shape:
        raise ValueError("dimension mismatch")
    target = 1.0 - eps

    sw, sv = _eigh(S)
    on = sw > SUPPORT_TOL
    if not on.any():
        raise ValueError("sigma has empty support")
    s_half = (sv[:, on] * np.sqrt(sw[on])) @ sv[:, on].conj().T
    if not on.all():
        # projecting onto sigma's kernel costs no type-II error at all
        ker = sv[:, ~on]
        ker_mass = float(np.einsum("ik,ij,jk->", ker.conj(), R, ker).real)
        if ker_mass >= target - 1e-12:
            return 0.0
    snorm = float(sw[-1])
    lam_min = float(sw[on].min())
    rho_max = float(np.linalg.eigvalsh(R)[-1])
    strace = float(np.trace(S).real)

    def evaluate(t, zwiden=0.0):
        w, v = _eigh(R - t * S)
        ztol = max(1e-10 * max(1.0, float(np.abs(w).max())), zwiden)
        pos = w > ztol
        zero = ~pos & (w >= -ztol)
        lam_pos = float(w[pos].sum()) if pos.any() else 0.0
        if zero.any():
            s0 = float(np.linalg.norm(s_half @ v[:, zero]) ** 2)
            c = float(w[zero].sum()) + t * s0
        else:
            s0, c = 0.0, 0.0
        npos = int(pos.sum())
        if npos == 0:
            sp = 0.0
        elif 2 * npos <= w.size:
            sp = float(np.linalg.norm(s_half @ v[:, pos]) ** 2)
        else:
            # project the smaller block; sigma's mass over the three
            # eigenvector blocks sums to its trace
            neg = w < -ztol
            sneg = float(np.linalg.norm(s_half @ v[:, neg]) ** 2) if neg.any() else 0.0
            sp = max(strace - sneg - s0, 0.0)
        a = lam_pos + t * sp
        return a, max(c, 0.0), sp, s0

    def finish(a, c, sp, s0):
        x = 0.0 if c <= 0.0 else (target - a) / c
        beta = sp + min(max(x, 0.0), 1.0) * s0
        return float(min(max(beta, 0.0), 1.0))

    lo, f_lo = 0.0, eps  # the full-accept test has type-I error 0
    hi = rho_max / lam_min + 1.0
    a, c, sp, s0 = evaluate(hi)
    if a - target <= 0.0 <= a + c - target:
        return finish(a, c, sp, s0)
    f_hi = a - target
    grows = 0
    while f_hi > 0.0 and grows < 60:
        lo, f_lo = hi, f_hi
        hi *= 4.0
        a, c, sp, s0 = evaluate(hi)
        if a - target <= 0.0 <= a + c - target:
            return finish(a, c, sp, s0)
        f_hi = a - target
        grows += 1
    if f_hi > 0.0:
        raise ArithmeticError("failed to bracket the test threshold")

    # a(t) is a staircase that only jumps where R - t*S loses rank on
    # sigma's support, i.e. at eigenvalues of the sigma-weighted pencil;
    # one eigensolve lists them all, so plateau midpoints bisect exactly
    inv_half = (sv[:, on] / np.sqrt(sw[on])) @ sv[:, on].conj().T
    pencil = inv_half @ R @ inv_half
    cands = np.linalg.eigvalsh(0.5 * (pencil + pencil.conj().T))
    cands = cands[(cands > lo) & (cands < hi)]
    if cands.size:
        keep = np.ones(cands.size, dtype=bool)
        keep[1:] = np.diff(cands) > 1e-12 * np.maximum(1.0, cands[1:])
        edges = np.concatenate(([lo], cands[keep], [hi]))
        k_lo, k_hi = 0, edges.size - 2
        while k_hi - k_lo > 1:
            k = (k_lo + k_hi) // 2
            t = 0.5 * (edges[k] + edges[k + 1])
            a, c, sp, s0 = evaluate(t)
            if a - target <= 0.0 <= a + c - target:
                return finish(a, c, sp, s0)
            if a - target > 0.0:
                k_lo = k
            else:
                k_hi = k
        t = float(edges[k_hi])  # the jump separating the two plateaus
        a, c, sp, s0 = evaluate(t)
        if a - target <= 0.0 <= a + c - target:
            return finish(a, c, sp, s0)
        # numerical miss at the jump: widen the zero group so the
        # crossing eigenvalues land in it
        a, c, sp, s0 = evaluate(t, zwiden=1e-9 * max(1.0, t) * snorm)
        if a - target <= 2e-13 and a + c - target >= -2e-13:
            return finish(a, c, sp, s0)
        # hand the adjacent plateau midpoints to the safeguarded search;
        # their signs are known from the bisection invariant
        lo, f_lo = 0.5 * (edges[k_lo] + edges[k_lo + 1]), 1.0
        hi, f_hi = 0.5 * (edges[k_hi] + edges[k_hi + 1]), -1.0

    for it in range(max_iter):
        width = hi - lo
        if width <= 1e-15 * max(1.0, hi):
            # bracket exhausted: widen the zero group so the crossing
            # eigenvalues land in it, then interpolate
            t = lo + 0.5 * width
            a, c, sp, s0 = evaluate(t, zwiden=4.0 * width * snorm + 1e-12 * max(1.0, abs(t)) * snorm)
            if a - target <= 2e-13 and a + c - target >= -2e-13:
                return finish(a, c, sp, s0)
            raise ArithmeticError("threshold bracket collapsed without meeting the target")
        if it % 2 == 0 and f_lo - f_hi > 0.0:
            t = lo + f_lo * width / (f_lo - f_hi)
            t = min(max(t, lo + 0.02 * width), hi - 0.02 * width)
        else:
            t = lo + 0.5 * width
        a, c, sp, s0 = evaluate(t)
        f_t = a - target
        if f_t <= 0.0 <= f_t + c:
            return finish(a, c, sp, s0)
        if f_t > 0.0:
            lo, f_lo = t, f_t
        else:
            hi, f_hi = t, f_t
    raise ArithmeticError(f"no convergence after {max_iter} evaluations")


def dh(rho, sigma, eps: float) -> float:
    """Hypothesis-testing divergence -ln(beta/(1-eps)) in nats."""
    beta = quantum_beta(rho, sigma, eps)
    if beta <= 0.0:
        return math.inf
    return -math.log(beta / (1.0 - eps))


def info_spectrum(P: ClassicalDistribution, Q: ClassicalDistribution, eps: float) -> float:
    """eps-information-spectrum divergence: the largest log-likelihood atom z
    with Pr[Z < z] <= eps, or +inf when the finite atoms hold mass <= eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    jll = JointLogLikelihood.from_distributions(P, Q)
    fin = np.isfinite(jll.z)
    p, z = jll.p[fin], jll.z[fin]
    if float(p.sum()) <= eps:
        return math.inf
    below = np.concatenate(([0.0], np.cumsum(p)[:-1]))
    ok = below <= eps
    return float(z[ok][-1])


def xi_bins(sigma) -> int:
    """Dyadic eigenvalue-bin budget of sigma: twice the ceiled log2 spread of
    its nonzero spectrum, floored at 2 so flat spectra stay usable."""
    spec = _sigma_spectrum(sigma)
    w = spec.eigenvalues[spec.eigenvalues > SUPPORT_TOL]
    if w.size == 0:
        raise ValueError("sigma has empty support")
    ratio = float(w.max() / w.min())
    k = math.ceil(math.log2(ratio) - 1e-12)
    return 2 * max(1, k)


class DhBracket:
    """Two-sided bracket [lower, upper] on a divergence, with the constants
    that produced it."""

    def __init__(self, lower: float, upper: float, variant: str, constants_used: dict):
        lower, upper = float(lower), float(upper)
        if math.isnan(lower) or math.isnan(upper) or lower > upper:
            raise ValueError(f"invalid bracket [{lower}, {upper}]")
        self.lower = lower
        self.upper = upper
        self.variant = variant
        self.constants_used = dict(constants_used)

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    def __repr__(self) -> str:
        return f"DhBracket([{self.lower:.6g}, {self.upper:.6g}], {self.variant})"


def f1_term(eps: float, delta: float) -> float:
    """Upper-side pinching pad ln((1-eps)(eps+3*delta)/(1-eps-3*delta))."""
    s = eps + 3.0 * delta
    if s >= 1.0:
        return math.inf
    return math.log((1.0 - eps) * s / (1.0 - s))


def f2_term(eps: float) -> float:
    """Lower-side pinching pad ln(1/(1-eps))."""
    return math.log(1.0 / (1.0 - eps))


def q_to_cl_bracket(rho, sigma, eps: float, delta: float) -> DhBracket:
    """Bracket the hypothesis-testing divergence of (rho, sigma) between
    information-spectrum divergences of the classical reduction at shifted
    error levels.  Requires 0 < delta < min(eps, (1-eps)/4)."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if not 0.0 < delta < min(eps, (1.0 - eps) / 4.0):
        raise ValueError(f"delta={delta!r} outside (0, min(eps, (1-eps)/4))")
    if not math.isfinite(relative_entropy(rho, sigma)):
        raise ValueError("sigma does not dominate rho")
    P, Q = nussbaum_skola(rho, sigma)
    xi = xi_bins(sigma)
    ln_xi = math.log(xi)
    ln_inv_delta = math.log(1.0 / delta)
    lower = info_spectrum(P, Q, eps - delta) - ln_xi - ln_inv_delta - f2_term(eps)
    upper = info_spectrum(P, Q, eps + 4.0 * delta) + ln_xi + 4.0 * ln_inv_delta + f1_term(eps, delta)
    return DhBracket(lower, upper, "info_spectrum", {
        "delta": delta, "xi": xi, "f1": f1_term(eps, delta), "f2": f2_term(eps),
    })


def product_dh_bracket(per_copy, sigma_xi: float, n: int, eps: float, delta: float,
                       variant: str = "chebyshev") -> DhBracket:
    """Bracket the hypothesis-testing divergence of an n-fold product pair
    from per-copy moment triples (D, V, T) and the bin count of the reference.

    D_n, V_n, T_n are the means over the rows of per_copy, so an iid pair
    needs only a single row however large n is.  Shift levels that leave
    (0, 1) push the affected side to +-inf rather than raising, so callers
    can probe parameter choices freely.
    """
    if variant not in ("chebyshev", "berry_esseen"):
        raise ValueError(f"unknown variant {variant!r}")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    if sigma_xi < 1:
        raise ValueError("sigma_xi must be at least 1")
    rows = [tuple(map(float, row)) for row in per_copy]
    if not rows:
        raise ValueError("per_copy must be nonempty")
    d_n = sum(r[0] for r in rows) / len(rows)
    v_n = sum(r[1] for r in rows) / len(rows)
    t_n = sum(r[2] for r in rows) / len(rows)
    ln_nxi = math.log(n * float(sigma_xi))
    ln_inv_delta = math.log(1.0 / delta)
    up_pad = ln_nxi + 4.0 * ln_inv_delta + f1_term(eps, delta)
    low_pad = ln_nxi + ln_inv_delta + f2_term(eps)

    if variant == "chebyshev":
        u_level = 1.0 - eps - 4.0 * delta
        upper = (n * d_n + math.sqrt(n * v_n / u_level) + up_pad
                 if u_level > 0.0 else math.inf)
        l_level = eps - delta
        lower = (n * d_n - math.sqrt(n * v_n / l_level) - low_pad
                 if l_level > 0.0 else -math.inf)
    else:
        if v_n <= 0.0:
            raise ValueError("berry_esseen variant needs positive variance")
        be = 6.0 * t_n / math.sqrt(n * v_n ** 3)
        upper = n * d_n + math.sqrt(n * v_n) * phi_inv(eps + 4.0 * delta + be) + up_pad
        lower = n * d_n + math.sqrt(n * v_n) * phi_inv(eps - delta - be) - low_pad
    return DhBracket(lower, upper, variant, {
        "delta": delta, "xi": float(sigma_xi),
        "d_n": d_n, "v_n": v_n, "t_n": t_n,
        "f1": f1_term(eps, delta), "f2": f2_term(eps),
    })
