"""``quantal-design`` command-line front end.

Every subcommand resolves its options from three layers: built-in defaults,
an optional JSON config file (``--config``), then explicit flags.  The fully
resolved configuration is echoed in the ``meta`` block of the JSON output.

Dose units: with ``--dose-scale s`` the models work on the dose ``s * x``.
Design spaces, design files and data files are given in original units, the
coefficients refer to the scaled dose, and reported doses are converted back
to original units (scaled value divided by ``s``).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__, fit, pso, verify, wc
from .errors import DesignError, DomainError, MultipleRootsWarning, ValidationError
from .links import Exponential, Link, parse_link
from .model import (
    Design,
    DesignSpace,
    Linear,
    LinearWithOffset,
    Power,
    ThreeParamModel,
    TwoParamModel,
    check_space,
    d_criterion,
    d_efficiency,
)

TOOL = "quantal-design"

# ---------------------------------------------------------------------------
# Option defaults, by command
# ---------------------------------------------------------------------------

_MODEL_DEFAULTS = {
    "link": "logit",
    "predictor": "linear",
    "beta0": 0.0,
    "beta1": 1.0,
    "alpha": 1.0,
    "c": None,
    "info_form": "linearized",
    "dose_scale": 1.0,
}
_SPACE_DEFAULTS = {"lower": None, "upper": None}
_PSO_DEFAULTS = {
    "particles": 50,
    "iterations": 500,
    "c1": 0.5,
    "c2": 0.3,
    "inertia": 0.9,
    "seed": 0,
    "k": None,
    "point_tol": None,
    "weight_tol": pso.DEFAULT_WEIGHT_TOL,
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "solve-wc": {**_MODEL_DEFAULTS, **_SPACE_DEFAULTS, "eta_lower": None, "eta_upper": None},
    "pso": {**_MODEL_DEFAULTS, **_SPACE_DEFAULTS, **_PSO_DEFAULTS},
    "verify": {**_MODEL_DEFAULTS, "design": None, "grid": verify.DEFAULT_GRID, "tol": verify.DEFAULT_TOL, "curve": None},
    "efficiency": {**_MODEL_DEFAULTS, "design": None, "reference": None},
    "fit": {"link": "logit", "data": None, "dose_scale": 1.0, "max_iter": 100, "tol": 1e-10},
    "info": {"link": "logit", "eta": [0.0]},
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; 2 means "no root" here."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _add_model(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--link", help="logit, probit, laplace, cloglog, student-t:<df>, exponential[:<eta_low>]")
    g.add_argument("--eta-low", dest="eta_low", type=float, help="lower eta bound of the exponential link")
    g.add_argument("--predictor", choices=["linear", "power", "linear-offset"])
    g.add_argument("--beta0", type=float)
    g.add_argument("--beta1", type=float)
    g.add_argument("--alpha", type=float, help="exponent of the power predictor")
    g.add_argument("--c", type=float, help="background response rate; selects the three-parameter model")
    g.add_argument("--info-form", dest="info_form", choices=["linearized", "printed"])
    g.add_argument("--dose-scale", dest="dose_scale", type=float, help="model dose = scale * original dose")


def _add_space(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lower", type=float, help="design space lower bound (original units)")
    p.add_argument("--upper", type=float, help="design space upper bound (original units)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file of option values (flag names with '_')")
    p.add_argument("--output", "-o", type=Path, help="write JSON here instead of stdout")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in meta")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=TOOL, description="Locally D-optimal designs for binary dose-response models.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve-wc", help="two-point design from the WC equation", argument_default=argparse.SUPPRESS)
    _add_model(p)
    _add_space(p)
    p.add_argument("--eta-lower", dest="eta_lower", type=float, help="eta1 search bracket lower end")
    p.add_argument("--eta-upper", dest="eta_upper", type=float, help="eta1 search bracket upper end")
    _add_common(p)

    p = sub.add_parser("pso", help="particle swarm design search", argument_default=argparse.SUPPRESS)
    _add_model(p)
    _add_space(p)
    p.add_argument("--particles", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--inertia", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, help="number of support points")
    p.add_argument("--point-tol", dest="point_tol", type=float, help="merge distance (original units)")
    p.add_argument("--weight-tol", dest="weight_tol", type=float)
    _add_common(p)

    p = sub.add_parser("verify", help="equivalence-theorem check of a design", argument_default=argparse.SUPPRESS)
    _add_model(p)
    p.add_argument("--design", type=Path, help="design JSON")
    p.add_argument("--grid", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--curve", type=Path, help="write the sensitivity function as CSV")
    _add_common(p)

    p = sub.add_parser("efficiency", help="D-efficiency of a design", argument_default=argparse.SUPPRESS)
    _add_model(p)
    p.add_argument("--design", type=Path, help="design JSON to rate")
    p.add_argument("--reference", type=Path, help="reference design JSON (default: WC design on the same space)")
    _add_common(p)

    p = sub.add_parser("fit", help="maximum likelihood fit of grouped binary data", argument_default=argparse.SUPPRESS)
    p.add_argument("--link")
    p.add_argument("--eta-low", dest="eta_low", type=float)
    p.add_argument("--data", type=Path, help="CSV with header dose,trials,events")
    p.add_argument("--dose-scale", dest="dose_scale", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    _add_common(p)

    p = sub.add_parser("info", help="link function values for debugging", argument_default=argparse.SUPPRESS)
    p.add_argument("--link")
    p.add_argument("--eta-low", dest="eta_low", type=float)
    p.add_argument("--eta", type=float, nargs="+")
    _add_common(p)
    return parser


# ---------------------------------------------------------------------------
# Config resolution
# ---------------------------------------------------------------------------

_PLUMBING = {"command", "config", "output", "timings"}


def resolve(command: str, flags: dict[str, Any]) -> dict[str, Any]:
    """Merge defaults, the config file named in ``flags`` and the flags."""
    cfg = dict(DEFAULTS[command])
    cfg.setdefault("eta_low", None)
    path = flags.get("config")
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ValidationError("config must be a JSON object")
        unknown = sorted(set(doc) - set(cfg))
        if unknown:
            raise ValidationError(f"unknown config keys for {command}: {unknown}")
        cfg.update(doc)
    cfg.update({k: v for k, v in flags.items() if k not in _PLUMBING})
    return _validate(command, cfg)


def _validate(command: str, cfg: dict[str, Any]) -> dict[str, Any]:
    for key in ("beta0", "beta1", "alpha", "dose_scale", "c", "lower", "upper"):
        v = cfg.get(key)
        if v is not None and not (isinstance(v, (int, float)) and math.isfinite(v)):
            raise ValidationError(f"{key} must be a finite number, got {v!r}")
    if cfg.get("dose_scale") is not None and cfg["dose_scale"] <= 0:
        raise ValidationError(f"dose_scale must be positive, got {cfg['dose_scale']!r}")
    if cfg.get("c") is not None and not 0.0 <= cfg["c"] < 1.0:
        raise ValidationError(f"c must lie in [0, 1), got {cfg['c']!r}")
    if command in ("verify", "efficiency") and cfg.get("design") is None:
        raise ValidationError(f"{command} needs --design")
    if command == "fit" and cfg.get("data") is None:
        raise ValidationError("fit needs --data")
    if command == "pso" and (cfg.get("lower") is None or cfg.get("upper") is None):
        raise ValidationError("pso needs --lower and --upper")
    # Normalize paths to strings so meta serializes.
    for key in ("design", "reference", "data", "curve"):
        if cfg.get(key) is not None:
            cfg[key] = str(cfg[key])
    parse_link(cfg["link"])  # fail early on a bad link name
    return cfg


def _link(cfg: dict[str, Any]) -> Link:
    link = parse_link(cfg["link"])
    if cfg.get("eta_low") is not None:
        if not isinstance(link, Exponential):
            raise ValidationError("--eta-low only applies to the exponential link")
        link = Exponential(cfg["eta_low"])
    return link


def _model(cfg: dict[str, Any]):
    link = _link(cfg)
    kind = cfg["predictor"]
    if kind == "linear":
        pred = Linear(cfg["beta0"], cfg["beta1"])
    elif kind == "power":
        pred = Power(cfg["beta0"], cfg["beta1"], cfg["alpha"])
    elif kind == "linear-offset":
        pred = LinearWithOffset(cfg["beta0"], cfg["beta1"])
    else:
        raise ValidationError(f"unknown predictor {kind!r}")
    if cfg.get("c") is not None:
        if not isinstance(pred, Linear):
            raise ValidationError("the three-parameter model takes a linear predictor")
        return ThreeParamModel(link, pred, cfg["c"], form=cfg["info_form"])
    return TwoParamModel(link, pred)


# ---------------------------------------------------------------------------
# Unit conversion
# ---------------------------------------------------------------------------


def _space_in(cfg: dict[str, Any]) -> DesignSpace:
    s = cfg["dose_scale"]
    return DesignSpace(cfg["lower"] * s, cfg["upper"] * s)


def _design_out(design: Design, scale: float) -> dict:
    out = {
        "points": [x / scale for x in design.points],
        "weights": list(design.weights),
        "space": {"lower": design.space.lower / scale, "upper": design.space.upper / scale},
    }
    if scale != 1.0:
        out["points_scaled"] = list(design.points)
    return out


def _design_in(path: str, scale: float) -> Design:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read design {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"design {path} is not valid JSON: {exc}") from exc
    # Accept the output of solve-wc / pso directly.
    if isinstance(doc, dict) and isinstance(doc.get("design"), dict):
        doc = doc["design"]
    if not isinstance(doc, dict):
        raise ValidationError(f"design {path} must be a JSON object")
    raw = Design.from_dict(doc)
    weights = list(raw.weights)
    space = DesignSpace(raw.space.lower * scale, raw.space.upper * scale)
    return Design(tuple(x * scale for x in raw.points), tuple(weights), space)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_solve_wc(cfg: dict[str, Any]) -> dict:
    model = _model(cfg)
    if isinstance(model, ThreeParamModel):
        raise ValidationError("solve-wc covers two-parameter models; use pso for c > 0")
    link, pred = model.link, model.predictor
    if isinstance(pred, LinearWithOffset):
        raise ValidationError("solve-wc needs an invertible predictor (linear or power)")
    bracket = None
    if cfg["eta_lower"] is not None or cfg["eta_upper"] is not None:
        lo, hi = wc._default_bracket(link)
        bracket = (cfg["eta_lower"] if cfg["eta_lower"] is not None else lo,
                   cfg["eta_upper"] if cfg["eta_upper"] is not None else hi)

    if isinstance(link, Exponential) and bracket is None:
        warnings.warn(
            "the one-hit WC equation has no interior root; its apparent zeros are rounding noise. "
            f"Reporting the design with one point on the eta bound {link.eta_low:g}",
            MultipleRootsWarning,
            stacklevel=2,
        )
        sol = wc.solve_boundary(link, link.eta_low)
    else:
        sol = wc.solve(link, bracket)

    space = None
    if cfg["lower"] is not None and cfg["upper"] is not None:
        space = _space_in(cfg)
    design = wc.design_from_eta(pred, sol.etas, space)
    return {"design": _design_out(design, cfg["dose_scale"]), "wc": sol.to_dict(), "log_det": d_criterion(model, design)}


def cmd_pso(cfg: dict[str, Any]) -> dict:
    model = _model(cfg)
    space = _space_in(cfg)
    check_space(model, space)
    config = pso.PsoConfig(
        n_particles=cfg["particles"],
        n_iterations=cfg["iterations"],
        c1=cfg["c1"],
        c2=cfg["c2"],
        w=cfg["inertia"],
        seed=cfg["seed"],
        k_points=cfg["k"],
    )
    res = pso.optimize_design(model, space, config)
    scale = cfg["dose_scale"]
    point_tol = cfg["point_tol"] * scale if cfg["point_tol"] is not None else pso.MERGE_FRACTION * 10 * space.width
    design = pso.collapse(res.design, point_tol, cfg["weight_tol"])
    return {
        "design": _design_out(design, scale),
        "raw_design": _design_out(res.design, scale),
        "log_det": d_criterion(model, design),
        "seed": config.seed,
        "evaluations": res.evaluations,
    }


def cmd_verify(cfg: dict[str, Any]) -> dict:
    model = _model(cfg)
    scale = cfg["dose_scale"]
    design = _design_in(cfg["design"], scale)
    check_space(model, design.space)
    verdict = verify.check_global(model, design, cfg["grid"], cfg["tol"])
    out = verdict.to_dict()
    out["argmax_x"] = verdict.argmax_x / scale
    out["violations"] = [[x / scale, v] for x, v in verdict.violations]
    out["support_psi"] = [[x / scale, v] for x, v in verdict.support_psi]
    if cfg["curve"] is not None:
        curve = verify.sensitivity_curve(model, design, cfg["grid"])
        Path(cfg["curve"]).write_text(verify.curve_to_csv([(x / scale, v) for x, v in curve]))
    return {"verdict": out}


def cmd_efficiency(cfg: dict[str, Any]) -> dict:
    model = _model(cfg)
    scale = cfg["dose_scale"]
    design = _design_in(cfg["design"], scale)
    check_space(model, design.space)
    if cfg["reference"] is not None:
        reference = _design_in(cfg["reference"], scale)
        ref_source = "file"
    else:
        if isinstance(model, ThreeParamModel):
            raise ValidationError("give --reference for three-parameter models")
        sol = wc.solve(model.link)
        reference = wc.design_from_eta(model.predictor, sol.etas, design.space)
        ref_source = "wc"
    eff = d_efficiency(model, design, reference)
    ld, ldr = d_criterion(model, design), d_criterion(model, reference)
    return {
        "efficiency": eff,
        "log_det": ld,
        "det": math.exp(ld) if ld > -math.inf else 0.0,
        "reference_log_det": ldr,
        "reference_det": math.exp(ldr),
        "reference": _design_out(reference, scale),
        "reference_source": ref_source,
    }


def cmd_fit(cfg: dict[str, Any]) -> dict:
    link = _link(cfg)
    try:
        text = Path(cfg["data"]).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read data {cfg['data']}: {exc.strerror}") from exc
    data = fit.Dataset.from_text(text)
    if cfg["dose_scale"] != 1.0:
        data = data.scaled(cfg["dose_scale"])
    res = fit.fit_mle(data, link, max_iter=cfg["max_iter"], tol=cfg["tol"])
    return {"fit": res.to_dict(), "n_rows": len(data.doses)}


def cmd_info(cfg: dict[str, Any]) -> dict:
    link = _link(cfg)
    rows = []
    for e in cfg["eta"]:
        e = float(e)
        try:
            rows.append({
                "eta": e,
                "pdf": link.pdf(e),
                "cdf": link.cdf(e),
                "sf": link.sf(e),
                "log_cdf": link.log_cdf(e),
                "log_sf": link.log_sf(e),
                "weight": link.weight(e),
                "log_weight": link.log_weight(e),
                "W": link.w(e),
            })
        except DomainError as exc:
            rows.append({"eta": e, "error": str(exc)})
    return {"link": link.spec, "symmetric": link.symmetric, "values": rows}


COMMANDS: dict[str, Callable[[dict[str, Any]], dict]] = {
    "solve-wc": cmd_solve_wc,
    "pso": cmd_pso,
    "verify": cmd_verify,
    "efficiency": cmd_efficiency,
    "fit": cmd_fit,
    "info": cmd_info,
}


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Entry point returning the exit code; used by :func:`main` and tests."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(parser.format_usage().rstrip(), file=stderr)
        print(f"error: {exc}", file=stderr)
        return 1
    flags = vars(args)
    command = flags["command"]
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = resolve(command, flags)
            result = COMMANDS[command](cfg)
    except DesignError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return exc.exit_code
    messages = [str(w.message) for w in caught]
    for m in messages:
        print(f"warning: {m}", file=stderr)
    meta: dict[str, Any] = {"tool": TOOL, "version": __version__, "command": command, "config": cfg}
    if messages:
        meta["warnings"] = messages
    if flags.get("timings"):
        meta["timings"] = {"total_seconds": time.perf_counter() - t0}
    result["meta"] = meta
    text = json.dumps(_jsonable(result), indent=2, sort_keys=True) + "\n"
    if flags.get("output") is not None:
        Path(flags["output"]).write_text(text)
    else:
        stdout.write(text)
    return 0


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))
