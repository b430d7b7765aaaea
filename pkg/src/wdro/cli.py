"""Batch command line front end.

Each invocation reads local files, dispatches to one toolkit module, and
writes a single JSON report containing the resolved configuration, the
results, and cheap certificates (dual gaps, residuals) so downstream
checks need no recomputation.  Exit codes: 0 on success, 1 when the
computation itself fails (a partial report carrying the error is still
written), 2 on usage errors.

Reports are deterministic: re-running an identical configuration gives a
byte-identical document except for the ``timings`` block.  The shape is
published in ``report.schema.json`` next to this module.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .calibrate import MomentTailModel, TailModel, radius_empirical, radius_moments
from .empirical_risk import (
    BallSpec,
    PiecewiseAffineLoss,
    QuadraticLoss,
    expected_loss,
    wc_risk_pwa,
    wc_risk_quadratic,
)
from .errors import ToolkitError, UsageError
from .learn import UnivariateLoss, dro_objective_crosscheck, dro_train_classifier, dro_train_regressor
from .mmse import JointMoments, fw_solve, mmse_objective
from .moment_risk import gelbrich_risk_quadratic
from .numerics import DEFAULT_TOL, Tolerance
from .shrinkage import _eq51_residual, sample_moments, wasserstein_shrinkage
from .transport import DiscreteDistribution, MomentPair, gelbrich_distance, wasserstein_p
from .convex_analysis import NormSpec, SetSpec

COMMANDS = ("transport", "wc-risk", "gelbrich", "shrink", "mmse", "train", "calibrate")

_SEED_MAX = 2**64 - 1


@dataclasses.dataclass
class RunConfig:
    """A validated invocation: scalars for the report echo, parsed payloads."""

    command: str
    options: dict
    payload: dict
    tol: Tolerance
    seed: int
    output: str | None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Input readers.


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc


def _read_csv(path: str) -> np.ndarray:
    """Samples as rows; first line is a header and is skipped."""
    rows = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise UsageError(f"{path}: empty file")
            width = len(header)
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != width:
                    raise UsageError(
                        f"{path}:{lineno}: expected {width} fields, found {len(row)}"
                    )
                try:
                    rows.append([float(v) for v in row])
                except ValueError as exc:
                    raise UsageError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from exc
    if not rows:
        raise UsageError(f"{path}: no data rows")
    return np.array(rows)


def _descriptor(obj, path: str, key: str, expect=dict):
    if not isinstance(obj, expect):
        raise UsageError(f"{path}: {key} must be a JSON {expect.__name__}")
    return obj


def _parse_distribution(path: str) -> DiscreteDistribution:
    if path.endswith(".csv"):
        return DiscreteDistribution(_read_csv(path))
    obj = _descriptor(_read_json(path), path, "distribution")
    if "atoms" not in obj:
        raise UsageError(f"{path}: distribution needs an 'atoms' field")
    try:
        return DiscreteDistribution(np.array(obj["atoms"], dtype=float), obj.get("weights"))
    except (ToolkitError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _parse_moments(path: str) -> MomentPair:
    obj = _descriptor(_read_json(path), path, "moment pair")
    for field in ("mean", "cov"):
        if field not in obj:
            raise UsageError(f"{path}: moment pair needs a '{field}' field")
    try:
        return MomentPair(np.array(obj["mean"], dtype=float), np.array(obj["cov"], dtype=float))
    except (ToolkitError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _parse_norm_obj(obj, path: str) -> NormSpec:
    kind = obj.get("kind")
    try:
        if kind == "p":
            return NormSpec.p_norm(float(obj["p"]))
        if kind == "scaled":
            return NormSpec.scaled(float(obj["alpha"]), float(obj["p"]))
        if kind == "weighted":
            return NormSpec.weighted(np.array(obj["matrix"], dtype=float), float(obj["p"]))
        if kind in ("block_sum", "block_max"):
            blocks = [_parse_norm_obj(b, path) for b in obj["blocks"]]
            sizes = [int(s) for s in obj["sizes"]]
            maker = NormSpec.block_sum if kind == "block_sum" else NormSpec.block_max
            return maker(blocks, sizes)
    except KeyError as exc:
        raise UsageError(f"{path}: norm descriptor is missing field {exc}") from exc
    except (ToolkitError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc
    raise UsageError(f"{path}: unknown norm kind {kind!r}")


def _parse_norm(path: str) -> NormSpec:
    return _parse_norm_obj(_descriptor(_read_json(path), path, "norm"), path)


def _parse_support(path: str) -> SetSpec:
    obj = _descriptor(_read_json(path), path, "support")
    kind = obj.get("kind")
    try:
        if kind == "whole":
            return SetSpec.whole(int(obj["dim"]))
        if kind == "polyhedron":
            return SetSpec.polyhedron(np.array(obj["C"], dtype=float), np.array(obj["d"], dtype=float))
        if kind == "ball":
            return SetSpec.ball(
                _parse_norm_obj(obj["norm"], path), float(obj["radius"]), int(obj["dim"])
            )
    except KeyError as exc:
        raise UsageError(f"{path}: support descriptor is missing field {exc}") from exc
    except (ToolkitError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc
    raise UsageError(f"{path}: unknown support kind {kind!r}")


def _parse_loss(path: str):
    obj = _descriptor(_read_json(path), path, "loss")
    kind = obj.get("kind")
    try:
        if kind == "pwa":
            slopes = np.array(obj["slopes"], dtype=float)
            intercepts = np.array(obj["intercepts"], dtype=float)
            if slopes.ndim != 2 or intercepts.ndim != 1 or slopes.shape[0] != intercepts.size:
                raise UsageError(f"{path}: slopes must be JxM and intercepts length J")
            return PiecewiseAffineLoss(list(zip(slopes, intercepts)))
        if kind == "quadratic":
            return QuadraticLoss(np.array(obj["Q"], dtype=float), np.array(obj["q"], dtype=float))
    except KeyError as exc:
        raise UsageError(f"{path}: loss descriptor is missing field {exc}") from exc
    except (ToolkitError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc
    raise UsageError(f"{path}: unknown loss kind {kind!r}")


# ---------------------------------------------------------------------------
# Flag parsing and config-file merging.


def _build_parser() -> _Parser:
    shared = _Parser(add_help=False)
    shared.add_argument("--tol", type=float, default=None)
    shared.add_argument("--seed", type=int, default=None)
    shared.add_argument("--output", default=None)
    shared.add_argument("--config", default=None)

    top = _Parser(prog="wdro", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("transport", parents=[shared])
    p.add_argument("--q", default=None, help="first distribution (JSON or CSV)")
    p.add_argument("--qp", default=None, help="second distribution (JSON or CSV)")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--norm", default=None, help="ground norm descriptor (JSON)")

    p = sub.add_parser("wc-risk", parents=[shared])
    p.add_argument("--samples", default=None, help="distribution (JSON or CSV)")
    p.add_argument("--loss", default=None, help="loss descriptor (JSON)")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--norm", default=None)
    p.add_argument("--support", default=None)
    p.add_argument("--method", choices=("auto", "closed_form", "lp"), default=None)

    p = sub.add_parser("gelbrich", parents=[shared])
    p.add_argument("--moments", default=None, help="moment pair (JSON)")
    p.add_argument("--other", default=None, help="second moment pair: distance mode")
    p.add_argument("--loss", default=None, help="quadratic loss: worst-case risk mode")
    p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("shrink", parents=[shared])
    p.add_argument("--input", default=None, help="samples (CSV)")
    p.add_argument("--moments", default=None, help="moment pair (JSON)")
    p.add_argument("--eps", type=float, default=None)

    p = sub.add_parser("mmse", parents=[shared])
    p.add_argument("--moments", default=None, help="joint moment pair (JSON)")
    p.add_argument("--mx", type=int, default=None, help="size of the estimated block")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--iters", type=int, default=None)

    p = sub.add_parser("train", parents=[shared])
    p.add_argument("--input", default=None, help="samples with the label last (CSV)")
    p.add_argument("--loss", default=None, help="loss name")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--p", type=float, default=None, help="ball order for regression")
    p.add_argument("--norm", default=None)
    p.add_argument("--standardize", action="store_true", default=None)

    p = sub.add_parser("calibrate", parents=[shared])
    p.add_argument("--mode", choices=("empirical", "moments"), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--bound", type=float, default=None, help="tail moment bound")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--c2", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    return top


def _merge_config_file(args: argparse.Namespace) -> dict:
    """Resolved option dict: explicit flags override config-file values."""
    merged = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.config is not None:
        obj = _read_json(args.config)
        if not isinstance(obj, dict):
            raise UsageError(f"{args.config}: config file must hold a JSON object")
        for key, value in obj.items():
            attr = key.replace("-", "_")
            if attr in ("command", "config"):
                raise UsageError(f"{args.config}: {key!r} cannot be set from a config file")
            if attr not in merged:
                raise UsageError(f"{args.config}: unknown option {key!r} for this command")
            if merged[attr] is None:
                merged[attr] = value
    return merged


def _require(opts: dict, names: list[str], command: str):
    missing = [n for n in names if opts.get(n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{command}: missing required option(s) {flags}")


def _exactly_one(opts: dict, names: list[str], command: str):
    given = [n for n in names if opts.get(n) is not None]
    if len(given) != 1:
        flags = " / ".join("--" + n for n in names)
        raise UsageError(f"{command}: exactly one of {flags} is required")
    return given[0]


def parse_config(argv=None) -> RunConfig:
    """Parse flags plus an optional JSON config file into a validated run.

    Every referenced file is read and every descriptor is validated here,
    before any computation starts; failures raise UsageError.
    """
    args = _build_parser().parse_args(argv)
    command = args.command
    opts = _merge_config_file(args)

    seed = opts.pop("seed")
    seed = 0 if seed is None else int(seed)
    if not 0 <= seed <= _SEED_MAX:
        raise UsageError(f"--seed must be an unsigned 64-bit integer, got {seed}")
    tol_scale = opts.pop("tol")
    tol = DEFAULT_TOL if tol_scale is None else Tolerance(
        abs_tol=float(tol_scale), rel_tol=float(tol_scale)
    )
    if not (tol.abs_tol > 0 and tol.rel_tol > 0):
        raise UsageError("--tol must be positive")
    output = opts.pop("output")

    payload: dict = {}
    if command == "transport":
        _require(opts, ["q", "qp", "p"], command)
        payload["q"] = _parse_distribution(opts["q"])
        payload["qp"] = _parse_distribution(opts["qp"])
        payload["norm"] = _parse_norm(opts["norm"]) if opts["norm"] else None
        if not (float(opts["p"]) >= 1.0 and math.isfinite(float(opts["p"]))):
            raise UsageError("--p must be finite and >= 1")
    elif command == "wc-risk":
        _require(opts, ["samples", "loss", "eps", "p"], command)
        payload["samples"] = _parse_distribution(opts["samples"])
        payload["loss"] = _parse_loss(opts["loss"])
        payload["norm"] = _parse_norm(opts["norm"]) if opts["norm"] else None
        payload["support"] = _parse_support(opts["support"]) if opts["support"] else None
        if isinstance(payload["loss"], QuadraticLoss):
            if float(opts["p"]) != 2.0:
                raise UsageError("quadratic losses need --p 2")
            if opts["norm"] or opts["support"]:
                raise UsageError(
                    "quadratic losses use the Euclidean norm on the whole space; "
                    "--norm/--support do not apply"
                )
        if opts["eps"] < 0:
            raise UsageError("--eps must be nonnegative")
        try:
            payload["ball"] = BallSpec(
                float(opts["eps"]),
                float(opts["p"]),
                norm=payload["norm"],
                support=payload["support"],
            )
        except (ToolkitError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    elif command == "gelbrich":
        _require(opts, ["moments"], command)
        payload["moments"] = _parse_moments(opts["moments"])
        mode = _exactly_one(opts, ["other", "loss"], command)
        if mode == "other":
            payload["other"] = _parse_moments(opts["other"])
        else:
            payload["loss"] = _parse_loss(opts["loss"])
            if not isinstance(payload["loss"], QuadraticLoss):
                raise UsageError("gelbrich risk mode needs a quadratic loss descriptor")
            _require(opts, ["eps"], command)
            if not opts["eps"] > 0:
                raise UsageError("--eps must be positive")
    elif command == "shrink":
        _require(opts, ["eps"], command)
        source = _exactly_one(opts, ["input", "moments"], command)
        if source == "input":
            payload["moments"] = sample_moments(_read_csv(opts["input"]))
        else:
            payload["moments"] = _parse_moments(opts["moments"])
        if not opts["eps"] > 0:
            raise UsageError("--eps must be positive")
    elif command == "mmse":
        _require(opts, ["moments", "mx", "eps"], command)
        pair = _parse_moments(opts["moments"])
        mx = int(opts["mx"])
        if not 0 < mx < pair.dim:
            raise UsageError(f"--mx must lie strictly between 0 and {pair.dim}")
        try:
            payload["joint"] = JointMoments(mx, pair.dim - mx, pair.mu, pair.sigma)
        except (ToolkitError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        if opts["eps"] < 0:
            raise UsageError("--eps must be nonnegative")
        if opts["iters"] is not None and int(opts["iters"]) < 1:
            raise UsageError("--iters must be at least 1")
    elif command == "train":
        _require(opts, ["input", "loss", "eps"], command)
        data = _read_csv(opts["input"])
        if data.shape[1] < 2:
            raise UsageError(f"{opts['input']}: need at least one feature column plus a label")
        payload["X"], payload["y"] = data[:, :-1], data[:, -1]
        try:
            payload["loss"] = UnivariateLoss(opts["loss"], delta=opts["delta"])
        except (ToolkitError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        payload["norm"] = _parse_norm(opts["norm"]) if opts["norm"] else None
        if opts["eps"] < 0:
            raise UsageError("--eps must be nonnegative")
    elif command == "calibrate":
        _require(opts, ["mode", "n", "eta"], command)
        if opts["mode"] == "empirical":
            _require(opts, ["p", "alpha", "bound", "dim"], command)
            try:
                payload["model"] = TailModel(
                    alpha=float(opts["alpha"]),
                    A=float(opts["bound"]),
                    m=int(opts["dim"]),
                    c1=math.e if opts["c1"] is None else float(opts["c1"]),
                    c2=1.0 if opts["c2"] is None else float(opts["c2"]),
                )
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
        else:
            try:
                payload["model"] = MomentTailModel(
                    c=math.e if opts["c"] is None else float(opts["c"])
                )
            except ValueError as exc:
                raise UsageError(str(exc)) from exc

    options = {k: v for k, v in opts.items()}
    options["seed"] = seed
    options["tol"] = {"abs": tol.abs_tol, "rel": tol.rel_tol}
    return RunConfig(command, options, payload, tol, seed, output)


# ---------------------------------------------------------------------------
# Command implementations.  Each returns (results, certificates).


def _run_transport(cfg: RunConfig):
    p = float(cfg.options["p"])
    res = wasserstein_p(cfg.payload["q"], cfg.payload["qp"], p, cfg.payload["norm"], cfg.tol)
    q, qp = cfg.payload["q"], cfg.payload["qp"]
    dual_value = float(res.duals.psi @ qp.weights - res.duals.phi @ q.weights)
    gap = abs(res.distance**p - dual_value)
    return (
        {
            "distance": res.distance,
            "plan": res.plan.matrix,
            "phi": res.duals.phi,
            "psi": res.duals.psi,
        },
        {"duality_gap": gap, "marginal_error": res.plan.max_marginal_error()},
    )


def _run_wc_risk(cfg: RunConfig):
    loss, samples = cfg.payload["loss"], cfg.payload["samples"]
    eps = float(cfg.options["eps"])
    if isinstance(loss, QuadraticLoss):
        value = wc_risk_quadratic(loss, samples, eps, cfg.tol)
    else:
        method = cfg.options["method"] or "auto"
        value = wc_risk_pwa(loss, samples, cfg.payload["ball"], cfg.tol, method)
    nominal = expected_loss(loss, samples)
    return (
        {"value": value, "nominal_risk": nominal},
        {"robustness_margin": value - nominal},
    )


def _run_gelbrich(cfg: RunConfig):
    center = cfg.payload["moments"]
    if "other" in cfg.payload:
        return {"distance": gelbrich_distance(center, cfg.payload["other"], cfg.tol)}, {}
    eps = float(cfg.options["eps"])
    res = gelbrich_risk_quadratic(cfg.payload["loss"], center, eps, cfg.tol)
    dist = gelbrich_distance(center, res.extremal, cfg.tol)
    certs = {
        "dual_gap": abs(res.value - res.primal_value) if res.interior else 0.0,
        "boundary_residual": abs(dist - eps) if res.interior else max(dist - eps, 0.0),
    }
    return (
        {
            "value": res.value,
            "gamma_star": res.gamma_star,
            "interior": res.interior,
            "extremal_mean": res.extremal.mu,
            "extremal_cov": res.extremal.sigma,
            "regularization": res.regularization,
        },
        certs,
    )


def _run_shrink(cfg: RunConfig):
    eps = float(cfg.options["eps"])
    res = wasserstein_shrinkage(cfg.payload["moments"], eps, cfg.tol)
    lam = np.array([pair[0] for pair in res.eigen_map])
    residual = abs(_eq51_residual(res.gamma_star, lam, eps, lam.size))
    return (
        {
            "mean": res.mean,
            "precision": res.precision,
            "gamma_star": res.gamma_star,
            "eigen_map": [list(pair) for pair in res.eigen_map],
        },
        {"equation_residual": residual},
    )


def _run_mmse(cfg: RunConfig):
    joint = cfg.payload["joint"]
    eps = float(cfg.options["eps"])
    iters = int(cfg.options["iters"]) if cfg.options["iters"] is not None else 200
    res = fw_solve(joint, eps, iters=iters, tol=cfg.tol)
    dist = gelbrich_distance(
        MomentPair(np.zeros(joint.cov.shape[0]), res.S),
        MomentPair(np.zeros(joint.cov.shape[0]), joint.cov + res.regularization * np.eye(joint.cov.shape[0])),
        cfg.tol,
    )
    return (
        {
            "gain": res.estimator.gain,
            "offset": res.estimator.offset,
            "worst_case_mse": mmse_objective(res.S, joint.mx, cfg.tol),
            "gap_history": res.gaps,
            "regularization": res.regularization,
        },
        {
            "final_gap": res.gaps[-1] if res.gaps else 0.0,
            "feasibility_residual": max(dist - eps, 0.0),
        },
    )


def _run_train(cfg: RunConfig):
    X, y, loss = cfg.payload["X"], cfg.payload["y"], cfg.payload["loss"]
    eps = float(cfg.options["eps"])
    norm = cfg.payload["norm"]
    results: dict = {"standardized": bool(cfg.options["standardize"])}
    if cfg.options["standardize"]:
        means = X.mean(axis=0)
        scales = X.std(axis=0)
        scales[scales == 0.0] = 1.0
        X = (X - means) / scales
        results["feature_means"] = means
        results["feature_scales"] = scales
    if loss.is_classification:
        model = dro_train_classifier(X, y, loss, eps, input_norm=norm, tol=cfg.tol)
    else:
        p = float(cfg.options["p"]) if cfg.options["p"] is not None else (
            2.0 if loss.kind == "squared" else 1.0
        )
        model = dro_train_regressor(X, y, loss, eps, p, input_norm=norm, tol=cfg.tol)
    results.update(
        {
            "weights": model.weights,
            "value": model.value,
            "iterations": model.iterations,
            "unattained": model.unattained,
            "degenerate_data": model.degenerate_data,
        }
    )
    certs: dict = {"solver_gap": model.gap}
    try:
        loss.pieces()
    except ToolkitError:
        certs["crosscheck_diff"] = None
    else:
        _, _, diff = dro_objective_crosscheck(model, X, y, loss, eps, norm, cfg.tol)
        certs["crosscheck_diff"] = diff
    return results, certs


def _run_calibrate(cfg: RunConfig):
    n, eta = int(cfg.options["n"]), float(cfg.options["eta"])
    model = cfg.payload["model"]
    if cfg.options["mode"] == "empirical":
        radius = radius_empirical(model, n, eta, float(cfg.options["p"]))
        threshold = math.log(model.c1 / eta) / model.c2
        results = {
            "radius": radius,
            "branch": "large_sample" if n >= threshold else "small_sample",
            "sample_threshold": threshold,
        }
    else:
        results = {"radius": radius_moments(model, n, eta)}
    return results, {}


_DISPATCH = {
    "transport": _run_transport,
    "wc-risk": _run_wc_risk,
    "gelbrich": _run_gelbrich,
    "shrink": _run_shrink,
    "mmse": _run_mmse,
    "train": _run_train,
    "calibrate": _run_calibrate,
}


# ---------------------------------------------------------------------------
# Report plumbing.


def _jsonify(value):
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonify(value.tolist())
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    return value


def _write_report(report: dict, output: str | None):
    text = json.dumps(_jsonify(report), indent=2, sort_keys=True) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)


def run(cfg: RunConfig) -> int:
    """Execute a validated run and write the report; returns the exit code."""
    start = time.perf_counter()
    report = {
        "command": cfg.command,
        "config": dict(cfg.options, output=cfg.output),
        "results": {},
        "certificates": {},
        "version": __version__,
        "error": None,
    }
    code = 0
    try:
        results, certificates = _DISPATCH[cfg.command](cfg)
        report["results"] = results
        report["certificates"] = certificates
    except (ToolkitError, ValueError, np.linalg.LinAlgError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 1
    report["timings"] = {"total_seconds": time.perf_counter() - start}
    _write_report(report, cfg.output)
    return code


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
