"""Command-line interface: grid evaluation, verification suite and Monte Carlo runs.

Subcommands
-----------
exponent     F, F_circ or F_hat over a complex grid (CSV)
factors      ladder matrices and their components over a lambda grid (CSV)
verify       closed-form identity residuals against tolerances (JSON)
simulate     Monte Carlo overshoot histograms (CSV) with a KS summary (JSON)
identities   the hypergeometric identities on their own (JSON)

Every option can also be given in a ``key = value`` file passed with
``--config``; keys are option names without the leading dashes.  Flags
override the file.

Exit codes: 0 success, 1 verification or statistical failure, 2 usage or
domain error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .errors import BudgetError, DegenerateError, DomainError, NoConvergence
from .exit_laws import (
    cramer_conditional_cdf,
    exit_probability,
    hypergeometric_terms,
    overshoot_branch_mass,
    p_hat_inf_mass,
    rogozin_conditional_cdf,
)
from .map_exponent import F, F_circ, F_hat, det_F, det_prefactor, dual_transpose, esscher, stationary_pi
from .montecarlo import (
    HISTOGRAM_COLUMNS,
    MCConfig,
    default_workers,
    estimate_ladder_overshoot,
    histogram,
    ks_statistic,
    simulate_two_sided_exit,
)
from .quadrature import QuadConfig
from .stable_params import StableParams
from .wiener_hopf import (
    LadderFactor,
    ladder_components,
    mirror_residual,
    row_sums_at_zero,
    shift_residual,
    verify_factorisation,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

_EXPONENTS: dict[str, tuple[Callable, Callable]] = {
    # name -> (function, strip as a function of alpha)
    "F": (F, lambda al: (-1.0, al)),
    "F_circ": (F_circ, lambda al: (-al, 1.0)),
    "F_hat": (F_hat, lambda al: (-al, 1.0)),
}

# Built-in option defaults; ``None`` in argparse marks "not given on the command line".
_DEFAULTS = {
    "common": {"alpha": None, "rho": None, "output": "-", "quad_rel_tol": 1e-10, "quad_abs_tol": 1e-14, "quad_max_levels": 12},
    "exponent": {"which": "F", "z_real": "-0.5:0.5:11", "z_imag": "0"},
    "factors": {"lam": "0:10:41", "kind": "ascending"},
    "verify": {"z_count": 10, "theta": "0.5,1,2,5", "lam": "0.5,1,2,5"},
    "identities": {},
    "simulate": {
        "x": 0.3,
        "a": 5.0,
        "n_paths": 200000,
        "time_step": 1e-4,
        "seed": 20240601,
        "workers": None,
        "refine": 0.1,
        "bins": 40,
        "max_overshoot": None,
        "ks_bound": None,
        "summary": None,
    },
}


@dataclass
class RunConfig:
    """Fully resolved settings of one invocation, embedded in every output."""

    command: str
    params: StableParams | None
    grids: dict = field(default_factory=dict)
    quad: QuadConfig = field(default_factory=QuadConfig)
    mc: MCConfig | None = None
    output_path: str = "-"
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "version": __version__,
            "params": None if self.params is None else {"alpha": self.params.alpha, "rho": self.params.rho},
            "grids": {k: list(map(float, v)) if isinstance(v, np.ndarray) else v for k, v in self.grids.items()},
            "quad": asdict(self.quad),
            "mc": None if self.mc is None else self.mc.as_dict(),
            "output_path": self.output_path,
            **self.extra,
        }


class UsageError(DomainError):
    """Malformed option value or configuration file."""


# ----------------------------------------------------------------------------
# Parsing helpers
# ----------------------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``"start:stop:count"`` (inclusive linspace) or a comma-separated list."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            n = int(count)
            if n < 1:
                raise UsageError(f"grid {text!r} needs a positive count")
            grid = np.linspace(float(start), float(stop), n)
        else:
            grid = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}; use start:stop:count or a comma list") from None
    if grid.size == 0:
        raise UsageError("grid is empty")
    return grid


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _read_config_file(path: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[run]\n" + fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path!r}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in parser["run"].items()}


def _resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file and explicit flags (in that order)."""
    allowed = {**_DEFAULTS["common"], **_DEFAULTS[args.command]}
    values = dict(allowed)
    if args.config:
        for key, raw in _read_config_file(args.config).items():
            if key not in allowed:
                raise UsageError(f"unknown key {key!r} in config file for '{args.command}'")
            values[key] = raw
    for key in allowed:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def _as_float(values: dict, key: str) -> float:
    try:
        return float(values[key])
    except (TypeError, ValueError):
        raise UsageError(f"option {key.replace('_', '-')} must be a number, got {values[key]!r}") from None


def _as_int(values: dict, key: str) -> int:
    try:
        return int(values[key])
    except (TypeError, ValueError):
        raise UsageError(f"option {key.replace('_', '-')} must be an integer, got {values[key]!r}") from None


def _params(values: dict) -> StableParams:
    if values["alpha"] is None or values["rho"] is None:
        raise UsageError("both --alpha and --rho are required (flag or config file)")
    return StableParams(_as_float(values, "alpha"), _as_float(values, "rho"))


def _quad(values: dict) -> QuadConfig:
    return QuadConfig(
        rel_tol=_as_float(values, "quad_rel_tol"),
        abs_tol=_as_float(values, "quad_abs_tol"),
        max_levels=_as_int(values, "quad_max_levels"),
    )


# ----------------------------------------------------------------------------
# Output helpers
# ----------------------------------------------------------------------------


def _open_output(path: str):
    return sys.stdout if path in ("-", "") else open(path, "w", encoding="utf-8", newline="")


def write_csv(path: str, header: list[str], rows, run: RunConfig) -> None:
    """CSV with ``#`` comment lines holding the run configuration as JSON."""
    fh = _open_output(path)
    try:
        for line in json.dumps(run.as_dict(), indent=1, sort_keys=True).splitlines():
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def write_json(path: str, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    fh = _open_output(path)
    try:
        fh.write(text + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _entry_columns(prefix: str, complex_parts: bool = True) -> list[str]:
    names = [f"{prefix}{i}{j}" for i in (1, 2) for j in (1, 2)]
    if not complex_parts:
        return names
    return [f"{n}_{part}" for n in names for part in ("re", "im")]


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------


def cmd_exponent(values: dict) -> int:
    params = _params(values)
    which = values["which"]
    if which not in _EXPONENTS:
        raise UsageError(f"--which must be one of {sorted(_EXPONENTS)}")
    fn, strip = _EXPONENTS[which]
    re, im = parse_grid(values["z_real"]), parse_grid(values["z_imag"])
    z = (re[:, None] + 1j * im[None, :]).ravel()
    lo, hi = strip(params.alpha)
    if np.any((z.real <= lo) | (z.real >= hi)):
        raise DomainError(f"{which} is defined on the strip {lo:g} < Re z < {hi:g}; the z grid leaves it")
    m = fn(params, z)
    header = ["z_re", "z_im"] + _entry_columns(which + "_")
    with_det = which == "F"
    if with_det:
        d = det_F(params, z) / det_prefactor(params, z)
        header += ["det_scaled_re", "det_scaled_im"]
    rows = []
    for k, zk in enumerate(z):
        row = [zk.real, zk.imag]
        for v in m[k].ravel():
            row += [v.real, v.imag]
        if with_det:
            row += [d[k].real, d[k].imag]
        rows.append(row)
    run = RunConfig("exponent", params, {"z_real": re, "z_imag": im}, output_path=values["output"], extra={"which": which})
    write_csv(values["output"], header, rows, run)
    return EXIT_OK


def cmd_factors(values: dict) -> int:
    params = _params(values)
    quad = _quad(values)
    lam = parse_grid(values["lam"])
    if np.any(lam < 0):
        raise DomainError("factors needs lambda >= 0")
    kind = values["kind"]
    factor = LadderFactor(params, kind=kind, cfg=quad)
    kap = np.real(LadderFactor(params, kind="ascending", cfg=quad)(lam))
    kap_hat = np.real(LadderFactor(params, kind="dual_ascending", cfg=quad)(lam))
    comp = ladder_components(factor, lam)
    header = (
        ["lambda"]
        + _entry_columns("kappa_", False)
        + _entry_columns("kappa_hat_", False)
        + ["Phi1", "Phi2", "Lambda12", "Lambda21", "K12", "K21"]
    )
    rows = []
    for n, lv in enumerate(lam):
        rows.append(
            [lv, *kap[n].ravel(), *kap_hat[n].ravel(), comp.phi[n, 0], comp.phi[n, 1],
             comp.rates[0, 1], comp.rates[1, 0], comp.k[n, 0, 1], comp.k[n, 1, 0]]
        )
    run = RunConfig("factors", params, {"lambda": lam}, quad, output_path=values["output"], extra={"components_of": kind})
    write_csv(values["output"], header, rows, run)
    return EXIT_OK


def _rel_diff(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.abs(b), 1e-300)
    return float(np.max(np.abs(a - b) / scale))


def _strip_grid(params: StableParams, n: int) -> np.ndarray:
    """``n`` real parts inside ``(-alpha, 1)`` times imaginary parts {0, 0.7}."""
    lo, hi = -params.alpha, 1.0
    pad = 0.05 * (hi - lo)
    re = np.linspace(lo + pad, hi - pad, n)
    return np.concatenate([re + 0j, re + 0.7j])


def verification_records(params: StableParams, z_count: int, theta: np.ndarray, lam: np.ndarray, quad: QuadConfig) -> list[dict]:
    """Residual records for every identity applicable to ``params``."""
    al = params.alpha
    big = al > 1.0
    records = []

    def add(name, grid, residual, tol):
        records.append({"name": name, "grid": grid, "max_residual": float(residual), "tolerance": tol, "pass": bool(residual <= tol)})

    root = al - 1.0
    add("det_root", [root], abs(det_F(params, root)) / abs(det_prefactor(params, root)), 1e-10)

    z = _strip_grid(params, z_count)
    zgrid = [[v.real, v.imag] for v in z]
    add("esscher_circ", zgrid, _rel_diff(esscher(params, z, root), F_circ(params, z)), 1e-10)
    add("duality", zgrid, _rel_diff(F_hat(params, z), dual_transpose(params, F(params, -z))), 1e-12)

    th = np.concatenate([-theta[::-1], theta])
    rep = verify_factorisation(params, list(th), cfg=quad)
    add("factorisation", list(th), rep.max_rel_residual, 1e-6)

    if big:
        add("kappa_shift", list(lam), shift_residual(params, lam, cfg=quad), 1e-8)
        add("kappa_circ_mirror", list(lam), mirror_residual(params, lam, cfg=quad), 1e-8)
        mass = p_hat_inf_mass(params, quad)
        add("p_hat_inf_mass", [], abs(mass - 1.0), 1e-10)
    if al != 1.0:
        terms = hypergeometric_terms(params, "big_alpha" if big else "small_alpha", quad)
        add("hypergeometric_identity", [], abs(terms.lhs - terms.rhs) / abs(terms.rhs), 1e-8)

    total = overshoot_branch_mass(params, 1, "ascending", quad) + overshoot_branch_mass(params, 2, "ascending", quad)
    add("overshoot_law_mass", [], abs(total - 1.0), 1e-8)

    sums = row_sums_at_zero(params, cfg=quad)
    killed, free = ("kappa", "kappa_hat") if big else ("kappa_hat", "kappa")
    tol = 1e-9
    pattern_bad = float(np.max(np.abs(sums[free])))
    if al != 1.0:
        pattern_bad = max(pattern_bad, float(tol - np.min(sums[killed])) if np.min(sums[killed]) <= tol else 0.0)
    add("killing_pattern", [0.0], pattern_bad, tol)
    return records


def cmd_verify(values: dict) -> int:
    params = _params(values)
    quad = _quad(values)
    theta, lam = parse_grid(values["theta"]), parse_grid(values["lam"])
    z_count = _as_int(values, "z_count")
    if z_count < 1:
        raise UsageError("--z-count must be >= 1")
    records = verification_records(params, z_count, theta, lam, quad)
    ok = all(r["pass"] for r in records)
    run = RunConfig("verify", params, {"theta": theta, "lambda": lam, "z_count": z_count}, quad, output_path=values["output"])
    write_json(values["output"], {"config": run.as_dict(), "records": records, "all_pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_identities(values: dict) -> int:
    params = _params(values)
    quad = _quad(values)
    which = "big_alpha" if params.alpha > 1.0 else "small_alpha"
    t = hypergeometric_terms(params, which, quad)
    residual = abs(t.lhs - t.rhs) / abs(t.rhs)
    run = RunConfig("identities", params, quad=quad, output_path=values["output"])
    payload = {
        "config": run.as_dict(),
        "which": which,
        "lhs": t.lhs,
        "rhs": t.rhs,
        "integrals": list(t.integrals),
        "closed_forms": list(t.closed_forms),
        "relative_residual": residual,
        "tolerance": 1e-8,
        "pass": residual <= 1e-8,
    }
    write_json(values["output"], payload)
    return EXIT_OK if residual <= 1e-8 else EXIT_FAIL


def _mc_config(values: dict) -> MCConfig:
    workers = values["workers"]
    return MCConfig(
        n_paths=_as_int(values, "n_paths"),
        time_step=_as_float(values, "time_step"),
        seed=_as_int(values, "seed"),
        n_workers=default_workers() if workers is None else int(workers),
        refine=_as_float(values, "refine"),
    )


def cmd_simulate(values: dict, experiment: str) -> int:
    params = _params(values)
    quad = _quad(values)
    mc = _mc_config(values)
    bins = _as_int(values, "bins")
    if bins < 1:
        raise UsageError("--bins must be >= 1")
    rows, branches = [], []
    summary: dict = {"experiment": experiment}
    if experiment == "two-sided-exit":
        x = _as_float(values, "x")
        bound = 0.02 if values["ks_bound"] is None else _as_float(values, "ks_bound")
        top = 2.0 if values["max_overshoot"] is None else _as_float(values, "max_overshoot")
        rec = simulate_two_sided_exit(params, x, mc)
        up = rec.up_probability()
        p_up = exit_probability(params, x, quad)
        summary["up_probability"] = {"estimate": up.value, "std_error": up.std_error, "analytic": p_up, "z_score": up.z_score(p_up)}
        # Down-exit overshoots from x are up-exit overshoots of the dual process from -x.
        laws = {1: (rogozin_conditional_cdf(params, x, quad), p_up), -1: (rogozin_conditional_cdf(params.swapped(), -x, quad), 1.0 - p_up)}
        for side, (cdf, mass) in laws.items():
            branches.append((str(side), rec.overshoots(side), cdf, mass))
        n_total = rec.n_paths
        extra = {"x": x}
    elif experiment == "ladder-overshoot":
        a = _as_float(values, "a")
        bound = 0.03 if values["ks_bound"] is None else _as_float(values, "ks_bound")
        top = 3.0 if values["max_overshoot"] is None else _as_float(values, "max_overshoot")
        sample = estimate_ladder_overshoot(params, a, mc)
        for j in (1, 2):
            mass = overshoot_branch_mass(params, j, "ascending", quad)
            est = sample.branch_probability(j)
            summary[f"branch_{j}_probability"] = {"estimate": est.value, "std_error": est.std_error, "analytic": mass, "z_score": est.z_score(mass)}
            branches.append((str(j), sample.branch(j), cramer_conditional_cdf(params, j, "ascending", quad), mass))
        n_total = int(sample.u.size)
        extra = {"a": a}
    else:
        raise UsageError(f"unknown experiment {experiment!r}")

    edges = np.linspace(0.0, top, bins + 1)
    ks = {}
    for name, data, cdf, mass in branches:
        ks[name] = ks_statistic(data, cdf)[0] if data.size else math.nan
        for r in histogram(data, edges, n_total, cdf, mass):
            rows.append([name, *r[:2], int(r[2]), *r[3:]])
    worst = max(v for v in ks.values() if not math.isnan(v))
    ok = worst <= bound
    summary.update({"ks": ks, "ks_bound": bound, "pass": ok, "n_paths": n_total})
    run = RunConfig(
        "simulate", params, {"histogram": {"start": 0.0, "stop": top, "bins": bins}}, quad, mc, values["output"],
        extra={"experiment": experiment, **extra},
    )
    write_csv(values["output"], ["branch", *HISTOGRAM_COLUMNS], rows, run)
    summary["config"] = run.as_dict()
    if values["summary"]:
        write_json(values["summary"], summary)
    else:
        print(json.dumps({k: summary[k] for k in ("ks", "ks_bound", "pass")}, default=_json_default), file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--alpha", type=float, help="stability index in (0, 2)")
    p.add_argument("--rho", type=float, help="positivity parameter")
    p.add_argument("--output", "-o", help="output path ('-' for stdout)")
    p.add_argument("--quad-rel-tol", dest="quad_rel_tol", type=float)
    p.add_argument("--quad-abs-tol", dest="quad_abs_tol", type=float)
    p.add_argument("--quad-max-levels", dest="quad_max_levels", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepwh", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponent", help="matrix exponent over a complex grid")
    _common(p)
    p.add_argument("--which", choices=sorted(_EXPONENTS))
    p.add_argument("--z-real", dest="z_real", help="grid start:stop:count or comma list")
    p.add_argument("--z-imag", dest="z_imag", help="grid start:stop:count or comma list")

    p = sub.add_parser("factors", help="ladder matrices over a lambda grid")
    _common(p)
    p.add_argument("--lambda", dest="lam", help="grid of lambda >= 0")
    p.add_argument("--kind", choices=["ascending", "dual_ascending", "circ_ascending"], help="ladder whose components are listed")

    p = sub.add_parser("verify", help="identity residuals against tolerances")
    _common(p)
    p.add_argument("--z-count", dest="z_count", type=int, help="real parts per strip row")
    p.add_argument("--theta", help="positive theta values (mirrored to negative)")
    p.add_argument("--lambda", dest="lam", help="lambda grid for the shift relations")

    p = sub.add_parser("identities", help="hypergeometric identities")
    _common(p)

    p = sub.add_parser("simulate", help="Monte Carlo overshoot experiments")
    p.add_argument("experiment", choices=["two-sided-exit", "ladder-overshoot"])
    _common(p)
    p.add_argument("--x", type=float, help="start point for two-sided-exit")
    p.add_argument("--a", type=float, help="level for ladder-overshoot (paths start at exp(-a))")
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--time-step", dest="time_step", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker threads (default: $DEEPWH_WORKERS or all CPUs)")
    p.add_argument("--refine", type=float, help="near-barrier step cap as a fraction of the distance (0 disables)")
    p.add_argument("--bins", type=int)
    p.add_argument("--max-overshoot", dest="max_overshoot", type=float, help="right edge of the histogram")
    p.add_argument("--ks-bound", dest="ks_bound", type=float)
    p.add_argument("--summary", help="JSON summary path")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = _resolve(args)
        if args.command == "exponent":
            return cmd_exponent(values)
        if args.command == "factors":
            return cmd_factors(values)
        if args.command == "verify":
            return cmd_verify(values)
        if args.command == "identities":
            return cmd_identities(values)
        return cmd_simulate(values, args.experiment)
    except DomainError as exc:
        print(f"deepwh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoConvergence, DegenerateError, BudgetError) as exc:
        print(f"deepwh: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
