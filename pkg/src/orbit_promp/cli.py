"""Command-line front end: dataset generation, primitive fitting, and
minimum-disturbance planning, with manifested, reproducible outputs."""
import argparse
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .demos import (
    DEFAULT_DT,
    DEFAULT_DURATION,
    DEFAULT_NOISE_STD,
    STRATEGIES,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from .errors import NonEmptyOutputError, OrbitPrompError, ParameterError
from .manifest import build_manifest, read_manifest, sha256_bytes, sha256_file, write_manifest
from .model import REFERENCE_HOME, coupling_inertias, load_model, rest_state
from .planner import CostConfig, export_plan, plan
from .promp import (
    DEFAULT_BANDWIDTH,
    DEFAULT_RIDGE_LAMBDA,
    DEFAULT_SIGMA_X,
    BasisConfig,
    fit_promp,
    load_promp,
    save_promp,
)

LOG = logging.getLogger("orbit_promp")


def _setup_logging():
    raw = os.environ.get("ORBIT_PROMP_LOG", "").strip()
    level = logging.WARNING
    if raw:
        if raw.isdigit():
            level = int(raw)
        else:
            level = getattr(logging, raw.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _parse_vector(text, n, what):
    try:
        vals = [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ParameterError(f"{what} must be {n} numbers") from exc
    if len(vals) != n:
        raise ParameterError(f"{what} must have {n} values, got {len(vals)}")
    return np.array(vals, dtype=np.float64)


def _read_goals(path, n_dof=7):
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"goals file not found: {path}")
    goals = []
    for ln, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        goals.append(_parse_vector(line, n_dof, f"{path}:{ln}"))
    if not goals:
        raise ParameterError(f"goals file {path} holds no goals")
    return goals


def _load_model_arg(path):
    """Model plus the sha256 of its config text; default packaged reference."""
    if path:
        p = Path(path)
        if not p.is_file():
            raise ParameterError(f"model config not found: {p}")
        text = p.read_text()
    else:
        text = (
            resources.files("orbit_promp")
            .joinpath("configs/reference_model.yaml")
            .read_text()
        )
    return load_model(text), sha256_bytes(text.encode())


def _prepare_out_dir(out, overwrite):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if any(out.iterdir()) and not overwrite:
        raise NonEmptyOutputError(f"output directory {out} is not empty")
    return out


def cmd_demos(args):
    model, model_sha = _load_model_arg(args.model)
    goals = _read_goals(args.goals)
    home = (
        _parse_vector(args.home, 7, "--home")
        if args.home
        else np.array(REFERENCE_HOME)
    )
    dataset = generate_dataset(
        model,
        home,
        goals,
        per_goal=args.per_goal,
        seed=args.seed,
        dt=args.dt,
        duration=args.duration,
        noise_std=args.noise_std,
        jobs=args.jobs,
    )
    params = {
        "per_goal": args.per_goal,
        "dt": args.dt,
        "duration": args.duration,
        "noise_std": args.noise_std,
        "strategy_mix": list(STRATEGIES),
        "home": home,
        "goals_file": Path(args.goals).name,
    }
    inputs = {"model": model_sha, "goals": sha256_file(args.goals)}
    manifest = save_dataset(
        dataset, args.out, args.seed, params, inputs, overwrite=args.overwrite
    )
    LOG.info("dataset manifest hash %s", manifest["manifest_hash"])
    print(f"wrote {dataset.n_demos} demos to {args.out}")
    return 0


def cmd_fit(args):
    dataset = load_dataset(args.dataset)
    dataset_manifest = read_manifest(args.dataset)
    basis = BasisConfig(duration=dataset.duration, bandwidth=args.bandwidth)
    promp = fit_promp(
        dataset,
        basis=basis,
        ridge_lambda=args.ridge_lambda,
        sigma_x=args.sigma_x,
        include_velocity=not args.position_only,
        dataset_hash=dataset_manifest["manifest_hash"],
    )
    out = _prepare_out_dir(args.out, args.overwrite)
    promp_path = save_promp(promp, out / "promp.json")
    params = {
        "bandwidth": args.bandwidth,
        "ridge_lambda": args.ridge_lambda,
        "sigma_x": args.sigma_x,
        "position_only": bool(args.position_only),
        "dataset_dir": Path(args.dataset).name,
    }
    manifest = build_manifest(
        command="fit",
        seed=args.seed,
        params=params,
        inputs={"dataset_manifest": dataset_manifest["manifest_hash"]},
        output_paths=[promp_path],
    )
    write_manifest(manifest, out)
    print(f"wrote {promp_path} from {dataset.n_demos} demos")
    return 0


def cmd_plan(args):
    model, model_sha = _load_model_arg(args.model)
    promp_path = Path(args.promp)
    if not promp_path.is_file():
        raise ParameterError(f"primitive file not found: {promp_path}")
    promp = load_promp(promp_path)
    if args.goal_joints:
        goal = _parse_vector(args.goal_joints, promp.n_dof, "--goal-joints")
        goal_params = {"goal_joints": goal}
    else:
        pose = _parse_vector(args.goal_pose, 7, "--goal-pose")
        goal = (pose[:3], pose[3:])
        goal_params = {"goal_pose": pose}
    cfg = CostConfig(c=args.c, dt=promp.dt)
    result = plan(
        model,
        promp,
        goal,
        n_samples=args.samples,
        seed=args.seed,
        cfg=cfg,
        jobs=args.jobs,
    )
    out = _prepare_out_dir(args.out, args.overwrite)
    paths = export_plan(result, out, overwrite=True)
    params = {
        "samples": args.samples,
        "c": args.c,
        "promp_file": promp_path.name,
        **goal_params,
    }
    extra = {
        "plan": {
            "selected_index": result.selected_index,
            "selected_cost": float(result.costs[result.selected_index]),
        }
    }
    manifest = build_manifest(
        command="plan",
        seed=args.seed,
        params=params,
        inputs={"model": model_sha, "promp": sha256_file(promp_path)},
        output_paths=paths,
        extra=extra,
    )
    write_manifest(manifest, out)
    sel = result.selected_index
    print(f"selected {sel} cost {result.costs[sel]:.9g}")
    return 0


def cmd_model_check(args):
    model, model_sha = _load_model_arg(args.model)
    state = rest_state(model, REFERENCE_HOME[: model.n_joints])
    coupling_inertias(model, state)
    print(
        f"model ok: {model.n_joints} joints, total mass {model.total_mass:g} kg, "
        f"reach {model.reach:g} m, config sha256 {model_sha[:12]}"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orbit-promp",
        description=(
            "Low-disturbance trajectory planning for a free-floating "
            "spacecraft manipulator: LQR demos, movement-primitive fitting, "
            "and minimum-disturbance planning."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("demos", help="generate an LQR demonstration dataset")
    d.add_argument("--model", help="model config YAML (default: packaged reference)")
    d.add_argument("--goals", required=True, help="text file, one joint goal per line")
    d.add_argument("--per-goal", type=int, default=20, help="demos per goal")
    d.add_argument("--home", help="home joint vector (default: reference home)")
    d.add_argument("--dt", type=float, default=DEFAULT_DT)
    d.add_argument("--duration", type=float, default=DEFAULT_DURATION)
    d.add_argument("--noise-std", type=float, default=DEFAULT_NOISE_STD)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--jobs", type=int, default=1)
    d.add_argument("--out", required=True, help="output dataset directory")
    d.add_argument("--overwrite", action="store_true")
    d.set_defaults(func=cmd_demos)

    f = sub.add_parser("fit", help="fit the movement primitive to a dataset")
    f.add_argument("--dataset", required=True, help="dataset directory")
    f.add_argument("--bandwidth", type=float, default=DEFAULT_BANDWIDTH)
    f.add_argument("--ridge-lambda", type=float, default=DEFAULT_RIDGE_LAMBDA)
    f.add_argument("--sigma-x", type=float, default=DEFAULT_SIGMA_X)
    f.add_argument("--position-only", action="store_true")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True, help="output directory for promp.json")
    f.add_argument("--overwrite", action="store_true")
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("plan", help="plan a minimum-disturbance trajectory")
    p.add_argument("--model", help="model config YAML (default: packaged reference)")
    p.add_argument("--promp", required=True, help="fitted primitive JSON")
    goal = p.add_mutually_exclusive_group(required=True)
    goal.add_argument("--goal-joints", help="joint goal, 7 numbers")
    goal.add_argument("--goal-pose", help="end-effector pose x,y,z,qw,qx,qy,qz")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--c", type=float, default=1.0, help="angular-to-linear weight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_plan)

    m = sub.add_parser("model", help="model utilities")
    msub = m.add_subparsers(dest="model_command", required=True)
    mc = msub.add_parser("check", help="load and validate a model config")
    mc.add_argument("--model", help="model config YAML (default: packaged reference)")
    mc.set_defaults(func=cmd_model_check)
    return parser


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OrbitPrompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
