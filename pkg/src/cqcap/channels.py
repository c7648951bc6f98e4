"""Kraus channel models, image discretization, and the capacity/dispersion
pipeline that feeds the geometry solvers."""

from __future__ import annotations

import math

import numpy as np

from .geometry import (
    DEFAULT_LP_TOL,
    BarycenterInfeasible,
    StateSet,
    bloch_state,
    dispersion_range,
    divergence_center,
    peripheral_set,
)
from .operator_core import DensityMatrix, asmat

KRAUS_TOL = 1e-10
MIN_RESOLUTION = 8
MAX_PERIPHERAL_SLACK = 1e-2

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    def __init__(self, kraus_ops, label: str = ""):
        ops = [np.asarray(k, dtype=complex) for k in kraus_ops]
        if not ops or any(k.ndim != 2 for k in ops):
            raise ValueError("kraus_ops must be a nonempty list of matrices")
        d_out, d_in = ops[0].shape
        if any(k.shape != (d_out, d_in) for k in ops):
            raise ValueError("kraus_ops must share one shape")
        total = sum(k.conj().T @ k for k in ops)
        if np.abs(total - np.eye(d_in)).max() > KRAUS_TOL:
            raise ValueError("Kraus operators are not trace preserving")
        self.kraus_ops = tuple(ops)
        self.d_in = d_in
        self.d_out = d_out
        self.label = label

    def __repr__(self) -> str:
        name = self.label or "kraus"
        return f"KrausChannel({name}, {self.d_in}->{self.d_out}, k={len(self.kraus_ops)})"


def apply(ch: KrausChannel, rho) -> DensityMatrix:
    """Channel output sum_k K rho K^dag."""
    R = asmat(rho)
    if R.shape[0] != ch.d_in:
        raise ValueError(f"input dimension {R.shape[0]} != channel d_in {ch.d_in}")
    out = np.zeros((ch.d_out, ch.d_out), dtype=complex)
    for k in ch.kraus_ops:
        out += k @ R @ k.conj().T
    return DensityMatrix(out)


def amplitude_damping(gamma: float) -> KrausChannel:
    """Qubit amplitude damping of magnitude gamma."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return KrausChannel([k0, k1], label=f"amplitude_damping({gamma:g})")


def pauli_channel(px: float, py: float, pz: float) -> KrausChannel:
    """Qubit channel applying X, Y, Z with the given probabilities."""
    probs = (px, py, pz)
    if any(p < 0.0 for p in probs) or sum(probs) > 1.0 + 1e-12:
        raise ValueError("flip probabilities must be nonnegative with sum <= 1")
    p_id = max(1.0 - px - py - pz, 0.0)
    ops = [math.sqrt(w) * m for w, m in
           zip((p_id, px, py, pz), (np.eye(2, dtype=complex), _X, _Y, _Z)) if w > 0.0]
    return KrausChannel(ops, label=f"pauli({px:g},{py:g},{pz:g})")


class ChannelImage:
    """Deduplicated sample of a channel's output set plus how it was drawn."""

    def __init__(self, s: StateSet, provenance: dict):
        self.set = s
        self.provenance = dict(provenance)

    def __repr__(self) -> str:
        return f"ChannelImage({self.set!r}, {self.provenance.get('channel', '?')})"


# Bloch directions fixed by the reflection group below; they pin the exact
# extreme points of axis-aligned qubit images (Pauli ellipsoids, damping).
_CARDINALS = np.array([
    [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0], [0.0, 0.0, -1.0],
])

# Orbit of the reflection group {id, rotate pi about z, flip z, both}: any
# grid closed under it has xy-components cancelling in pairs, so ascent
# iterates for axis-symmetric channels keep the center exactly on the z-axis.
_REFLECTIONS = np.array([
    [1.0, 1.0, 1.0], [-1.0, -1.0, 1.0],
    [1.0, 1.0, -1.0], [-1.0, -1.0, -1.0],
])

_GOLDEN_FRAC = (math.sqrt(5.0) - 1.0) / 2.0


def _van_der_corput(k):
    """Base-2 radical inverse of positive integers k."""
    k = np.asarray(k, dtype=np.int64)
    out = np.zeros(k.shape, dtype=float)
    scale = 0.5
    while k.any():
        out += scale * (k & 1)
        k = k >> 1
        scale *= 0.5
    return out


def _qubit_input_grid(resolution: int):
    """Deterministic input directions: 4 cardinal points plus reflection
    orbits of a golden-angle spiral whose prefixes nest, so raising the
    resolution only enlarges the grid."""
    m = max(1, math.ceil((resolution - len(_CARDINALS)) / len(_REFLECTIONS)))
    k = np.arange(1, m + 1)
    z = _van_der_corput(k)
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    ang = 2.0 * math.pi * np.mod(k * _GOLDEN_FRAC, 1.0)
    base = np.column_stack([s * np.cos(ang), s * np.sin(ang), z])
    orbit = (base[:, None, :] * _REFLECTIONS[None, :, :]).reshape(-1, 3)
    return np.concatenate([_CARDINALS, orbit])


def _haar_pure_states(d: int, count: int, rng):
    g = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return [DensityMatrix(np.outer(v, v.conj())) for v in g]


def _hs_mixed_states(d: int, count: int, rng):
    out = []
    for _ in range(count):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        m = g @ g.conj().T
        out.append(DensityMatrix(m / np.trace(m).real))
    return out


def discretize_image(ch: KrausChannel, resolution: int, seed: int = 0,
                     include_mixed: bool = False) -> ChannelImage:
    """Sample the channel image over pure inputs into a deduplicated StateSet.

    Pure inputs suffice for radius and dispersion work: any mixed-input
    output is a convex combination of pure-input outputs, and divergence to
    a fixed reference is quasi-convex along segments, so maxima sit at the
    sampled endpoints.  include_mixed appends a seeded mixed-input sample
    for cross-checks.
    """
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}")
    rng = np.random.Generator(np.random.PCG64(seed))
    if ch.d_in == 2:
        inputs = [bloch_state(v) for v in _qubit_input_grid(resolution)]
    else:
        inputs = _haar_pure_states(ch.d_in, resolution, rng)
    if include_mixed:
        inputs.extend(_hs_mixed_states(ch.d_in, resolution, rng))
    outputs = [apply(ch, rho) for rho in inputs]
    provenance = {
        "channel": ch.label or "kraus",
        "resolution": resolution,
        "seed": seed,
        "inputs": "pure+mixed" if include_mixed else "pure",
    }
    return ChannelImage(StateSet(outputs), provenance)


class ChannelMetrics:
    """Capacity/dispersion summary of one image: chi and sigma_star from the
    center solver, the variance range from the peripheral LPs, and the
    intermediate objects needed to assemble finite-blocklength bounds."""

    def __init__(self, chi, v_min, v_max, sigma_star, report,
                 image_set, radius_report, dispersion):
        self.chi = float(chi)
        self.v_min = float(v_min)
        self.v_max = float(v_max)
        self.sigma_star = sigma_star
        self.report = dict(report)
        self.image_set = image_set
        self.radius_report = radius_report
        self.dispersion = dispersion

    def v_eps(self, eps: float) -> float:
        return dispersion_for_eps(self.v_min, self.v_max, eps)

    def __repr__(self) -> str:
        return (f"ChannelMetrics(chi={self.chi:.9g}, "
                f"v=[{self.v_min:.6g}, {self.v_max:.6g}])")


def dispersion_for_eps(v_min: float, v_max: float, eps: float) -> float:
    """Variance governing the second-order term: v_min at eps <= 1/2, else v_max."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return v_min if eps <= 0.5 else v_max


def _pairwise_trace_distance(arr):
    n, d = arr.shape[0], arr.shape[1]
    if d == 2:
        # 2x2 differences are traceless Hermitian, so the trace norm is
        # sqrt(2) times the Frobenius norm; Gram trick avoids the n^2 stack.
        flat = np.ascontiguousarray(arr).view(float).reshape(n, -1)
        g = flat @ flat.T
        sq = np.clip(np.diag(g)[:, None] + np.diag(g)[None, :] - 2.0 * g, 0.0, None)
        return np.sqrt(sq / 2.0)
    out = np.zeros((n, n))
    for i in range(n):
        w = np.linalg.eigvalsh(arr[i + 1:] - arr[i])
        out[i, i + 1:] = out[i + 1:, i] = 0.5 * np.abs(w).sum(axis=1)
    return out


def peripheral_clusters(s: StateSet, indices, threshold: float):
    """Group peripheral indices whose states sit within threshold of each
    other in trace distance (transitive closure); diagnostics only."""
    indices = list(indices)
    if not indices:
        return []
    near = _pairwise_trace_distance(s.as_array()[indices]) <= threshold
    clusters = []
    unseen = set(range(len(indices)))
    while unseen:
        stack = [unseen.pop()]
        group = []
        while stack:
            i = stack.pop()
            group.append(indices[i])
            hits = [j for j in unseen if near[i, j]]
            for j in hits:
                unseen.remove(j)
            stack.extend(hits)
        clusters.append(sorted(group))
    clusters.sort()
    return clusters


def _metrics_from_set(s: StateSet, tol: float, max_iter: int,
                      resolution_hint: int, provenance: dict) -> ChannelMetrics:
    rep = divergence_center(s, tol=tol, max_iter=max_iter)
    # Widen the peripheral band until the center is expressible as a mixture
    # of it; the band must at least absorb the solver's own gap.  As a last
    # resort the LP box itself is relaxed one notch before giving up.
    slack = max(10.0 * tol, rep.gap)
    lp_tol = DEFAULT_LP_TOL
    while True:
        peripheral = peripheral_set(s, rep, slack=slack)
        try:
            disp = dispersion_range(s, peripheral, rep.sigma_star, lp_tol=lp_tol)
            break
        except BarycenterInfeasible:
            if slack * 10.0 <= MAX_PERIPHERAL_SLACK:
                slack *= 10.0
            elif lp_tol < 1e-6:
                lp_tol = 1e-6
            else:
                raise
    clusters = peripheral_clusters(s, peripheral, 5.0 / math.sqrt(resolution_hint))
    report = {
        "provenance": dict(provenance),
        "image_size": len(s),
        "gap": rep.gap,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "peripheral": list(peripheral),
        "peripheral_count": len(peripheral),
        "peripheral_slack": slack,
        "peripheral_clusters": clusters,
        "lp_tol": disp.lp_tol,
    }
    return ChannelMetrics(rep.chi, disp.v_min, disp.v_max, rep.sigma_star,
                          report, s, rep, disp)


def channel_metrics(ch: KrausChannel, resolution: int, tol: float = 1e-6,
                    seed: int = 0, max_iter: int = 10000) -> ChannelMetrics:
    """Full pipeline: discretize_image -> divergence_center -> peripheral_set
    -> dispersion_range."""
    image = discretize_image(ch, resolution, seed=seed)
    return _metrics_from_set(image.set, tol, max_iter, resolution, image.provenance)


def stateset_metrics(states, tol: float = 1e-6, max_iter: int = 10000) -> ChannelMetrics:
    """Pipeline for an explicitly given image (classical-quantum state list)."""
    s = states if isinstance(states, StateSet) else StateSet(list(states))
    provenance = {"channel": "explicit", "resolution": len(s), "seed": None,
                  "inputs": "explicit"}
    return _metrics_from_set(s, tol, max_iter, len(s), provenance)
