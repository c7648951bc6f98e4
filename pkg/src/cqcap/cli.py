"""Command-line front end: JSON config ingestion, pipeline orchestration, and
deterministic CSV/JSON emission of capacity, dispersion, and rate-curve
reports."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .blocklength import BudgetExceeded, iid_dh_exact, rate_curve
from .channels import (
    amplitude_damping,
    channel_metrics,
    discretize_image,
    pauli_channel,
    stateset_metrics,
)
from .divergences import (
    nussbaum_skola,
    product_dh_bracket,
    relative_entropy,
    relative_entropy_variance,
    third_abs_moment,
    xi_bins,
)
from .geometry import (
    BarycenterInfeasible,
    StateSet,
    caratheodory_prune,
    divergence_center,
    gamma_net,
)
from .operator_core import DensityMatrix, trace_distance

SCHEMA_VERSION = "1"
RNG_NAME = "numpy.random.PCG64"
LN2 = math.log(2.0)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_LP_INFEASIBLE = 3
EXIT_BUDGET = 4

_CONFIG_KEYS = {
    "channel", "resolution", "tol", "eps", "n_grid", "units", "seed",
    "rho", "sigma", "n", "delta", "d", "gamma",
}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class RunConfig:
    """Validated run parameters shared by every subcommand."""

    def __init__(self, doc: dict, eps=None, units=None, seed=None):
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        unknown = sorted(set(doc) - _CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        doc = dict(doc)
        if eps is not None:
            doc["eps"] = eps
        if units is not None:
            doc["units"] = units
        if seed is not None:
            doc["seed"] = seed

        self.units = doc.get("units", "bits")
        if self.units not in ("bits", "nats"):
            raise ConfigError(f"units must be 'bits' or 'nats', got {self.units!r}")
        self.seed = _as_int(doc.get("seed", 0), "seed")
        self.resolution = _as_int(doc.get("resolution", 2000), "resolution")
        if self.resolution < 8:
            raise ConfigError(f"resolution must be at least 8, got {self.resolution}")
        self.tol = _as_float(doc.get("tol", 1e-6), "tol")
        if not 0.0 < self.tol <= 1e-2:
            raise ConfigError(f"tol must lie in (0, 1e-2], got {self.tol!r}")
        self.eps = None
        if "eps" in doc:
            self.eps = _as_float(doc["eps"], "eps")
            if not 0.0 < self.eps < 1.0:
                raise ConfigError(f"eps must lie in (0, 1), got {self.eps!r}")
        self.n_grid = None
        if "n_grid" in doc:
            grid = doc["n_grid"]
            if not isinstance(grid, list) or not grid:
                raise ConfigError("n_grid must be a nonempty list of integers")
            self.n_grid = [_as_int(n, "n_grid entry") for n in grid]
            if any(n < 1 for n in self.n_grid):
                raise ConfigError("n_grid entries must be positive")
        self.doc = doc

    def require_eps(self) -> float:
        if self.eps is None:
            raise ConfigError("this command needs 'eps' (config field or --eps)")
        return self.eps

    def scale(self) -> float:
        """Multiplier taking nats to the configured units."""
        return 1.0 / LN2 if self.units == "bits" else 1.0


def _as_int(x, name: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x:
        raise ConfigError(f"{name} must be an integer, got {x!r}")
    return int(x)


def _as_float(x, name: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{name} must be a number, got {x!r}")
    return float(x)


def _matrix_from_json(obj, name: str) -> np.ndarray:
    try:
        arr = np.asarray([[complex(re, im) for re, im in row] for row in obj])
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a matrix of [re, im] pairs") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {arr.shape}")
    return arr


def _state_from_json(obj, name: str) -> DensityMatrix:
    try:
        return DensityMatrix(_matrix_from_json(obj, name))
    except ValueError as e:
        raise ConfigError(f"{name}: {e}") from None


# 13 significant digits: coarse enough to absorb last-ulp jitter across BLAS
# thread counts, fine enough that bits-vs-nats rounding stays well under the
# 1e-12 coherence budget
def _round13(x: float) -> float:
    if not math.isfinite(x):
        return x
    return float(f"{x:.13g}")


def _fmt(x: float) -> str:
    """CSV cell: 13 significant digits, infinities as literal inf/-inf."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{_round13(x):.13g}"


def _jsonify(obj):
    """Round floats to 12 significant digits; non-finite floats to strings."""
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return _round13(x)
    return obj


def _matrix_to_json(mat) -> list:
    m = np.asarray(mat, dtype=complex)
    return [[[_round13(float(z.real)), _round13(float(z.imag))] for z in row]
            for row in m]


def _emit_json(report: dict) -> str:
    return json.dumps(_jsonify(report), indent=2, sort_keys=True) + "\n"


def _header(cfg: RunConfig, command: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "rng": RNG_NAME,
        "seed": cfg.seed,
        "units": cfg.units,
    }


def _build_channel(cfg: RunConfig):
    """('kraus', KrausChannel) or ('states', [DensityMatrix, ...])."""
    spec = cfg.doc.get("channel")
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(
            "channel must be an object with exactly one of "
            "'cq_states', 'amplitude_damping', 'pauli'")
    (kind, value), = spec.items()
    if kind == "cq_states":
        if not isinstance(value, list) or not value:
            raise ConfigError("channel.cq_states must be a nonempty matrix list")
        states = [_state_from_json(m, f"channel.cq_states[{i}]")
                  for i, m in enumerate(value)]
        if any(s.dim != states[0].dim for s in states):
            raise ConfigError("channel.cq_states entries differ in dimension")
        return "states", states
    if kind == "amplitude_damping":
        gamma = _as_float(value, "channel.amplitude_damping")
        try:
            return "kraus", amplitude_damping(gamma)
        except ValueError as e:
            raise ConfigError(f"channel.amplitude_damping: {e}") from None
    if kind == "pauli":
        if not isinstance(value, list) or len(value) != 3:
            raise ConfigError("channel.pauli must be a list [px, py, pz]")
        probs = [_as_float(p, "channel.pauli entry") for p in value]
        try:
            return "kraus", pauli_channel(*probs)
        except ValueError as e:
            raise ConfigError(f"channel.pauli: {e}") from None
    raise ConfigError(f"unknown channel kind {kind!r}")


def _channel_metrics(cfg: RunConfig):
    kind, ch = _build_channel(cfg)
    if kind == "states":
        return stateset_metrics(ch, tol=cfg.tol)
    return channel_metrics(ch, cfg.resolution, tol=cfg.tol, seed=cfg.seed)


def cmd_capacity(cfg: RunConfig):
    kind, ch = _build_channel(cfg)
    if kind == "states":
        s = StateSet(ch)
    else:
        s = discretize_image(ch, cfg.resolution, seed=cfg.seed).set
    rep = divergence_center(s, tol=cfg.tol)
    u = cfg.scale()
    report = _header(cfg, "capacity")
    report.update({
        "chi": rep.chi * u,
        "gap": rep.gap * u,
        "sigma_star": _matrix_to_json(rep.sigma_star.mat),
        "peripheral_count": len(rep.peripheral),
        "converged": rep.converged,
        "iterations": rep.iterations,
        "image_size": len(s),
        "tol": cfg.tol,
    })
    return _emit_json(report), EXIT_OK if rep.converged else EXIT_NO_CONVERGENCE


def cmd_dispersion(cfg: RunConfig):
    eps = cfg.require_eps()
    m = _channel_metrics(cfg)
    disp = m.dispersion
    states = [m.image_set[i] for i in disp.indices]
    _, sup_min = caratheodory_prune(disp.p_min, states, m.sigma_star, disp.v_min)
    _, sup_max = caratheodory_prune(disp.p_max, states, m.sigma_star, disp.v_max)
    u2 = cfg.scale() ** 2
    report = _header(cfg, "dispersion")
    report.update({
        "v_min": m.v_min * u2,
        "v_max": m.v_max * u2,
        "v_eps": m.v_eps(eps) * u2,
        "eps": eps,
        "support_sizes": {"v_min": len(sup_min), "v_max": len(sup_max)},
        "peripheral_count": m.report["peripheral_count"],
        "converged": m.radius_report.converged,
    })
    code = EXIT_OK if m.radius_report.converged else EXIT_NO_CONVERGENCE
    return _emit_json(report), code


def cmd_curve(cfg: RunConfig):
    eps = cfg.require_eps()
    if cfg.n_grid is None:
        raise ConfigError("curve needs 'n_grid'")
    m = _channel_metrics(cfg)
    points = rate_curve(m, eps, sorted(cfg.n_grid))
    u = cfg.scale()
    lines = ["n,approx,lower,upper"]
    for pt in points:
        lines.append(",".join([
            str(pt.n),
            _fmt(pt.approx * u / pt.n),
            _fmt(pt.lower * u / pt.n),
            _fmt(pt.upper * u / pt.n),
        ]))
    code = EXIT_OK if m.radius_report.converged else EXIT_NO_CONVERGENCE
    return "\n".join(lines) + "\n", code


def cmd_dh(cfg: RunConfig):
    eps = cfg.require_eps()
    if "rho" not in cfg.doc or "sigma" not in cfg.doc:
        raise ConfigError("dh needs 'rho' and 'sigma' matrices")
    rho = _state_from_json(cfg.doc["rho"], "rho")
    sigma = _state_from_json(cfg.doc["sigma"], "sigma")
    if rho.dim != sigma.dim:
        raise ConfigError("rho and sigma differ in dimension")
    n = _as_int(cfg.doc.get("n", 1), "n")
    if n < 1:
        raise ConfigError("n must be positive")
    delta = _as_float(cfg.doc.get("delta", n ** -0.5), "delta")
    if delta <= 0.0:
        raise ConfigError("delta must be positive")

    exact = iid_dh_exact(rho, sigma, n, eps)
    d = relative_entropy(rho, sigma)
    v = relative_entropy_variance(rho, sigma)
    t = third_abs_moment(*nussbaum_skola(rho, sigma)) if math.isfinite(d) else math.inf
    xi = xi_bins(sigma)
    u = cfg.scale()

    def bracket_json(variant):
        try:
            br = product_dh_bracket([(d, v, t)], xi, n, eps, delta, variant)
        except ValueError:
            return None
        return {"lower": br.lower * u, "upper": br.upper * u}

    report = _header(cfg, "dh")
    report.update({
        "n": n,
        "eps": eps,
        "dh_exact": exact * u,
        "bracket_chebyshev": bracket_json("chebyshev"),
        "bracket_berry_esseen": bracket_json("berry_esseen"),
        "constants": {
            "delta": delta, "xi": xi,
            "d": d * u, "v": v * u * u, "t": t * u ** 3,
        },
    })
    return _emit_json(report), EXIT_OK


def cmd_net(cfg: RunConfig):
    if "gamma" not in cfg.doc:
        raise ConfigError("net needs 'gamma'")
    gamma = _as_float(cfg.doc["gamma"], "gamma")
    d = _as_int(cfg.doc.get("d", 2), "d")
    try:
        net = gamma_net(d, gamma, seed=cfg.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    covered = 0
    samples = 1000
    for _ in range(samples):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        m = g @ g.conj().T
        rho = DensityMatrix(m / np.trace(m).real)
        tau = net[net.cover(rho)]
        if trace_distance(rho, tau) <= gamma + 1e-12:
            covered += 1
    min_eig = float(np.linalg.eigvalsh(net.as_array())[:, 0].min())

    report = _header(cfg, "net")
    report.update({
        "d": d,
        "gamma": gamma,
        "cardinality": len(net),
        "min_eigenvalue_floor": min_eig,
        "eigenvalue_floor_bound": net.eigenvalue_floor,
        "empirical_coverage_rate": covered / samples,
        "samples": samples,
        "lemma_cardinality_bound": net.lemma_cardinality_bound,
    })
    return _emit_json(report), EXIT_OK


_COMMANDS = {
    "capacity": cmd_capacity,
    "dispersion": cmd_dispersion,
    "curve": cmd_curve,
    "dh": cmd_dh,
    "net": cmd_net,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route through ConfigError so
    # every configuration problem maps to exit code 1
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cqcap",
        description="Capacity, dispersion and finite-blocklength bounds for "
                    "classical-quantum channels.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("capacity", "divergence radius and center of the channel image"),
        ("dispersion", "peripheral variance range and the eps-selected value"),
        ("curve", "rate-curve CSV over the configured blocklength grid"),
        ("dh", "exact hypothesis-testing divergence with two-sided brackets"),
        ("net", "covering-net cardinality, eigenvalue floor, and coverage"),
    ):
        p = sub.add_parser(name, help=doc, description=doc)
        p.add_argument("config", help="path to a JSON config, or - for stdin")
        p.add_argument("--eps", type=float, help="override the config error level")
        p.add_argument("--units", choices=("bits", "nats"),
                       help="override the output units")
        p.add_argument("--seed", type=int, help="override the config seed")
    return parser


def _load_config(args) -> RunConfig:
    if args.config == "-":
        raw = sys.stdin.read()
    else:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    return RunConfig(doc, eps=args.eps, units=args.units, seed=args.seed)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config(args)
        text, code = _COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BarycenterInfeasible as e:
        print(f"dispersion LP infeasible: {e}", file=sys.stderr)
        return EXIT_LP_INFEASIBLE
    except BudgetExceeded as e:
        print(str(e), file=sys.stderr)
        return EXIT_BUDGET
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
