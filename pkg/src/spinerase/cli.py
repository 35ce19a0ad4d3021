"""Command-line front end: exact and Monte Carlo runs written as CSV or JSON.

Exit codes: 0 success, 1 I/O error, 2 invalid parameters, 3 an emitted table
failed its own consistency checks.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_TAIL_TOL,
    LN2,
    DomainError,
    ErasureParams,
    alpha_from_gamma,
    gamma_from_alpha,
    mean_spinlabor,
    variance_spinlabor,
    vb_bound,
)
from .distribution import pmf_after_m_cycles, pmf_full_erasure
from .fluctuation import (
    decay_limit_study,
    jarzynski_lhs,
    jarzynski_rhs,
    partial_exp_averages,
    violation_curve,
)
from .montecarlo import (
    ConfigurationError,
    StopRule,
    chi_square_vs_exact,
    ledger_check,
    simulate_ensemble,
)

COMMANDS = ("pmf", "simulate", "bounds", "jarzynski", "semianalytic", "figures")
FIGURES = ("1a", "1b", "2a", "2b", "supp")
# illustrative reservoir polarisations; the published figures do not state theirs
DEFAULT_ALPHAS = {"1": [0.2, 0.4], "2": [0.45, 0.48, 0.49]}
DEFAULT_SUPP_B = list(range(1, 65))


class UsageError(Exception):
    """Invalid or conflicting parameters (exit code 2)."""


class InvariantViolation(Exception):
    """An output table failed validation before writing (exit code 3)."""


@dataclass
class RunConfig:
    command: str
    g: float | None = None
    alpha: float | None = None
    p_init: float = 0.5
    tail_tol: float = DEFAULT_TAIL_TOL
    cycles: int | None = None
    full: bool = False
    n_samples: int = 100_000
    master_seed: int = 0
    eps_max: float | None = None
    eps_step: float = 0.1
    b_list: list[int] = field(default_factory=list)
    fig: str | None = None
    alphas: list[float] = field(default_factory=list)
    output_path: str | None = None
    format: str = "csv"
    workers: int = 1

    @property
    def b(self) -> int | None:
        return self.b_list[0] if len(self.b_list) == 1 else None

    def params(self) -> ErasureParams:
        if self.g is None:
            raise UsageError("one of --alpha, --gamma or --b is required")
        return ErasureParams(self.g, self.p_init, self.tail_tol)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinerase", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    temp = parser.add_mutually_exclusive_group()
    temp.add_argument("--alpha", type=float, default=None, help="reservoir up-fraction in (0, 1/2)")
    temp.add_argument("--gamma", type=float, default=None, help="dimensionless inverse spin temperature g > 0")
    parser.add_argument("--p-init", type=float, default=None)
    length = parser.add_mutually_exclusive_group()
    length.add_argument("--cycles", type=int, default=None)
    length.add_argument("--full", action="store_true", default=None)
    parser.add_argument("--tail-tol", type=float, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--eps-max", type=float, default=None)
    parser.add_argument("--eps-step", type=float, default=None)
    parser.add_argument("--b", type=_int_list, default=None, help="b or comma list; sets g = ln2/b")
    parser.add_argument("--fig", choices=FIGURES, default=None)
    parser.add_argument("--alphas", type=_float_list, default=None)
    parser.add_argument("--output", default=None)
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--config", default=None, help="flat JSON file of flag values")
    return parser


# config-file keys, written like the flags without dashes
_CONFIG_KEYS = {
    "alpha": "alpha",
    "gamma": "gamma",
    "p-init": "p_init",
    "cycles": "cycles",
    "full": "full",
    "tail-tol": "tail_tol",
    "samples": "samples",
    "seed": "seed",
    "workers": "workers",
    "eps-max": "eps_max",
    "eps-step": "eps_step",
    "b": "b",
    "fig": "fig",
    "alphas": "alphas",
    "output": "output",
    "format": "format",
}


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON in {path}: {exc}")
    if not isinstance(raw, dict):
        raise UsageError("--config: expected a flat JSON object")
    out = {}
    for key, value in raw.items():
        name = _CONFIG_KEYS.get(key.replace("_", "-"))
        if name is None:
            raise UsageError(f"--config: unknown key {key!r}")
        if name == "b" and not isinstance(value, list):
            value = _int_list(value)
        if name == "alphas" and not isinstance(value, list):
            value = _float_list(value)
        out[name] = value
    return out


def parse_and_validate(argv=None) -> RunConfig:
    """Parse ``argv`` (plus an optional ``--config`` file) into a :class:`RunConfig`.

    Flags override config-file values. Raises :class:`UsageError` on conflicts.
    """
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    merged = _load_config(ns["config"]) if ns["config"] else {}
    for key, value in ns.items():
        if key in ("command", "config") or value is None:
            continue
        if key == "alpha" and "gamma" in merged:
            del merged["gamma"]
        if key == "gamma" and "alpha" in merged:
            del merged["alpha"]
        if key == "cycles":
            merged.pop("full", None)
        if key == "full":
            merged.pop("cycles", None)
        merged[key] = value

    cmd = ns["command"]
    cfg = RunConfig(command=cmd)
    alpha, gamma, b = merged.get("alpha"), merged.get("gamma"), merged.get("b")
    if alpha is not None and gamma is not None:
        raise UsageError("--alpha and --gamma are mutually exclusive")
    b_is_list = cmd in ("semianalytic", "figures")
    if b is not None and not b_is_list and (alpha is not None or gamma is not None):
        raise UsageError("--b sets the inverse temperature; do not combine it with --alpha/--gamma")
    if alpha is not None:
        try:
            cfg.g = gamma_from_alpha(alpha)
        except DomainError as exc:
            raise UsageError(f"--alpha: {exc}")
        cfg.alpha = float(alpha)
    elif gamma is not None:
        cfg.g = float(gamma)
        if not math.isfinite(cfg.g):
            raise UsageError("--gamma must be finite")
        cfg.alpha = alpha_from_gamma(cfg.g)
    if b is not None:
        if not b or any(x < 1 for x in b):
            raise UsageError("--b values must be positive integers")
        cfg.b_list = list(b)
        if not b_is_list:
            if len(b) != 1:
                raise UsageError(f"--b takes a single value for {cmd}")
            cfg.g = LN2 / b[0]
            cfg.alpha = alpha_from_gamma(cfg.g)

    if merged.get("cycles") is not None and merged.get("full"):
        raise UsageError("--cycles and --full are mutually exclusive")
    cfg.cycles = merged.get("cycles")
    cfg.full = bool(merged.get("full")) or cfg.cycles is None
    if cfg.cycles is not None and cfg.cycles < 1:
        raise UsageError("--cycles must be >= 1")

    cfg.p_init = float(merged.get("p_init", 0.5))
    cfg.tail_tol = float(merged.get("tail_tol", DEFAULT_TAIL_TOL))
    cfg.n_samples = int(merged.get("samples", cfg.n_samples))
    cfg.master_seed = int(merged.get("seed", cfg.master_seed))
    cfg.workers = int(merged.get("workers", 1))
    cfg.eps_max = merged.get("eps_max")
    cfg.eps_step = float(merged.get("eps_step", 0.1))
    cfg.fig = merged.get("fig")
    cfg.alphas = list(merged.get("alphas") or [])
    cfg.output_path = merged.get("output")
    cfg.format = merged.get("format", "csv")
    if cfg.format not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    if not 0.0 <= cfg.p_init <= 1.0:
        raise UsageError("--p-init must lie in [0, 1]")
    if not 0.0 < cfg.tail_tol <= 1e-6:
        raise UsageError("--tail-tol must lie in (0, 1e-6]")
    if cfg.n_samples < 1:
        raise UsageError("--samples must be >= 1")
    if cfg.eps_step <= 0:
        raise UsageError("--eps-step must be > 0")
    if cfg.eps_max is not None and cfg.eps_max < 0:
        raise UsageError("--eps-max must be >= 0")

    needs_g = cmd in ("pmf", "simulate", "bounds", "jarzynski")
    if needs_g and cfg.g is None:
        raise UsageError(f"{cmd} needs one of --alpha, --gamma or --b")
    if needs_g and cfg.g <= 0:
        raise UsageError("--alpha/--gamma: erasure needs g > 0 (alpha < 1/2)")
    if cmd == "semianalytic" and not cfg.b_list:
        raise UsageError("semianalytic needs --b")
    if cmd in ("bounds", "jarzynski") and cfg.p_init != 0.5:
        raise UsageError(f"--p-init: {cmd} is defined for p_init = 0.5")
    if cmd == "figures":
        if cfg.fig is None:
            raise UsageError("figures needs --fig")
        if cfg.fig != "supp":
            cfg.alphas = cfg.alphas or DEFAULT_ALPHAS[cfg.fig[0]]
            if any(not 0.0 < a < 0.5 for a in cfg.alphas):
                raise UsageError("--alphas values must lie in (0, 1/2)")
        elif not cfg.b_list:
            cfg.b_list = DEFAULT_SUPP_B
    return cfg


def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def render(self, format: str) -> str:
        if format == "csv":
            buf = io.StringIO()
            buf.write(",".join(self.columns) + "\n")
            for row in self.rows:
                buf.write(",".join(fmt(v) for v in row) + "\n")
            return buf.getvalue()
        doc = dict(self.meta)
        doc["columns"] = self.columns
        doc["rows"] = self.rows
        return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def _pmf_for(cfg: RunConfig):
    params = cfg.params()
    if cfg.cycles is not None:
        return params, pmf_after_m_cycles(params, cfg.cycles)
    return params, pmf_full_erasure(params)


def _check_pmf(pmf) -> None:
    try:
        pmf.validate()
    except ValueError as exc:
        raise InvariantViolation(str(exc))


def _check_curve(curve) -> None:
    try:
        curve.validate()
    except ValueError as exc:
        raise InvariantViolation(str(exc))


def run_pmf(cfg: RunConfig) -> Table:
    params, pmf = _pmf_for(cfg)
    _check_pmf(pmf)
    meta = {
        "command": "pmf",
        "gamma": params.g,
        "alpha": params.alpha,
        "p_init": params.p_init,
        "cycles": pmf.cycles if pmf.cycles is not None else "converged",
        "tail_bound": pmf.tail_bound,
        "mean": pmf.mean,
        "variance": pmf.variance,
        "vb_bound": vb_bound(params.g),
    }
    if pmf.converged:
        meta["mean_formula"] = mean_spinlabor(params)
        meta["variance_formula"] = variance_spinlabor(params)
    rows = [[q, p] for q, p in enumerate(pmf.probs)]
    return Table(["q", "probability"], rows, meta)


def run_bounds(cfg: RunConfig) -> Table:
    params = cfg.params()
    curve = violation_curve(params, cfg.eps_max, cfg.eps_step)
    _check_curve(curve)
    semi = curve.bound_semi if curve.bound_semi is not None else [None] * len(curve.epsilons)
    rows = [
        [e, pr, a, b, s]
        for e, pr, a, b, s in zip(curve.epsilons, curve.pr_violation, curve.bound_a, curve.bound_b, semi)
    ]
    meta = {"command": "bounds", "gamma": params.g, "alpha": params.alpha}
    if curve.fit is not None:
        meta.update(b=curve.fit.b, amplitude_c=curve.fit.amplitude_c, decay_a=curve.fit.decay_a)
    return Table(["epsilon", "pr_violation", "bound_a", "bound_b", "bound_semi"], rows, meta)


def run_jarzynski(cfg: RunConfig) -> Table:
    params = cfg.params()
    pmf = pmf_full_erasure(params)
    _check_pmf(pmf)
    lhs = jarzynski_lhs(pmf)
    rhs = jarzynski_rhs(params.g)
    first, rest = partial_exp_averages(params)
    row = [params.g, lhs, rhs, abs(lhs - rhs), first, rest]
    cols = ["gamma", "lhs", "rhs", "abs_diff", "first_cnot", "remaining_cycles"]
    if cfg.format == "json":
        return Table(cols, [row], dict(zip(["command"] + cols, ["jarzynski"] + row)))
    return Table(cols, [row])


def run_semianalytic(cfg: RunConfig, b_list=None) -> Table:
    rows = decay_limit_study(b_list or cfg.b_list, cfg.tail_tol)
    return Table(
        ["b", "gamma", "a", "a_squared"],
        [[r.b, r.g, r.a, r.a_squared] for r in rows],
        {"command": "semianalytic"},
    )


def run_simulate(cfg: RunConfig) -> Table:
    params = cfg.params()
    if cfg.cycles is not None:
        rule = StopRule(max_cycles=cfg.cycles)
        exact = pmf_after_m_cycles(params, cfg.cycles)
    else:
        rule = StopRule.for_params(params)
        exact = pmf_full_erasure(params)
    try:
        ens = simulate_ensemble(params, cfg.n_samples, cfg.master_seed, rule, cfg.workers)
    except ConfigurationError as exc:
        raise UsageError(str(exc))
    if ens.ledger_violations:
        raise InvariantViolation(f"{ens.ledger_violations} trajectories broke the first-law ledger")
    size = max(len(ens.counts), len(exact.probs))
    rows = [[q, (ens.counts[q] if q < len(ens.counts) else 0) / ens.n_samples, exact[q]] for q in range(size)]
    report = ledger_check(ens)
    chi = chi_square_vs_exact(ens, exact)
    exp_avg, exp_se = ens.exp_average()
    se = ens.standard_errors
    meta = {
        "command": "simulate",
        "gamma": params.g,
        "alpha": params.alpha,
        "p_init": params.p_init,
        "n_samples": ens.n_samples,
        "seed": cfg.master_seed,
        "cycles_run": ens.cycles_run,
        "mean_spinlabor": ens.mean_spinlabor,
        "mean_spinlabor_se": se["spinlabor"],
        "mean_spintherm": ens.mean_spintherm,
        "mean_spintherm_se": se["spintherm"],
        "exp_average": exp_avg,
        "exp_average_se": exp_se,
        "ledger_violations": ens.ledger_violations,
        "unfinished": ens.unfinished,
        "mean_delta_jz": report.mean_delta_jz,
        "spintherm_excess": report.mean_spintherm_excess,
        "chi_square": chi.statistic,
        "chi_square_dof": chi.dof,
        "chi_square_p": chi.p_value,
    }
    return Table(["q", "frequency", "exact_probability"], rows, meta)


def run_figures(cfg: RunConfig) -> Table:
    if cfg.fig == "supp":
        return run_semianalytic(cfg)
    rows = []
    if cfg.fig.endswith("a"):
        for a in cfg.alphas:
            params = ErasureParams.from_alpha(a, cfg.p_init, cfg.tail_tol)
            pmf = pmf_full_erasure(params)
            _check_pmf(pmf)
            vb = vb_bound(params.g)
            rows += [[a, params.g, vb, q, p] for q, p in enumerate(pmf.probs)]
        return Table(["alpha", "gamma", "vb_bound", "q", "probability"], rows, {"figure": cfg.fig})
    for a in cfg.alphas:
        params = ErasureParams.from_alpha(a, 0.5, cfg.tail_tol)
        curve = violation_curve(params, cfg.eps_max, cfg.eps_step)
        _check_curve(curve)
        semi = curve.bound_semi if curve.bound_semi is not None else [None] * len(curve.epsilons)
        for i, e in enumerate(curve.epsilons):
            rows.append([
                a, e, curve.pr_violation[i], curve.bound_a[i], curve.bound_b[i], semi[i], curve.bound_sqrt[i],
            ])
    cols = ["alpha", "epsilon", "pr_violation", "bound_a", "bound_b", "bound_semi", "bound_sqrt"]
    return Table(cols, rows, {"figure": cfg.fig})


RUNNERS = {
    "pmf": run_pmf,
    "simulate": run_simulate,
    "bounds": run_bounds,
    "jarzynski": run_jarzynski,
    "semianalytic": run_semianalytic,
    "figures": run_figures,
}


def execute(cfg: RunConfig) -> str:
    try:
        table = RUNNERS[cfg.command](cfg)
    except DomainError as exc:
        raise UsageError(str(exc))
    return table.render(cfg.format)


def main(argv=None) -> int:
    try:
        cfg = parse_and_validate(argv)
        text = execute(cfg)
    except SystemExit as exc:  # argparse errors already use exit code 2
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"spinerase: error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"spinerase: invariant violated: {exc}", file=sys.stderr)
        return 3
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"spinerase: cannot write {cfg.output_path}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
