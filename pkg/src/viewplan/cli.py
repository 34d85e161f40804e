"""Command-line entry point for the view-planning toolkit.

One binary, five subcommands: generate maximin view spaces (and their
lookup table), fit and label quality curves, predict required view counts,
plan visiting paths, and run the synthetic comparison harness.  Exit codes:
0 success, 2 usage or schema problems, 3 curve-fit failure, 4 undecodable
image input, 5 mid-run experiment failure.
"""

import functools
import os
import sys

import click
from click.core import ParameterSource

import numpy as np

from . import jsonio
from .curvefit import (DEFAULT_ALPHA, DEFAULT_V_MAX, DEFAULT_V_MIN, fit_curve,
                       load_samples_csv, required_views, save_fit_label)
from .errors import (FitFailureError, FormatError, ImageDecodeError,
                     InvalidArgumentError, TooLargeError)
from .features import extract_features_from_files
from .geometry import (NAMED_VIEW_DIRECTIONS, load_view_space, look_at_pose,
                       min_pairwise_angle, save_view_space)
from .pathplan import (EXACT_SOLVER_CAP, ObstacleSphere, hamiltonian_path_exact,
                       hamiltonian_path_heuristic, load_cost_csv,
                       plan_global_path, save_path)
from .predict import (load_model, predict_regressor, predict_statistic,
                      STATISTIC_KINDS)
from .simulate import compare, load_config, write_outputs
from .tables import build_table, save_table
from .tammes import DEFAULT_ITERS, DEFAULT_RESTARTS, tammes_hemisphere

EXIT_USAGE = 2
EXIT_FIT_FAILURE = 3
EXIT_DECODE = 4
EXIT_RUNTIME = 5

OUT_DIR_ENV = "VIEWPLAN_OUT_DIR"

#: Keys a --config file may supply as flag defaults (explicit flags win).
CONFIG_KEYS = frozenset({"radius", "alpha", "v_min", "v_max", "seed",
                         "restarts", "iters", "exact_cap", "obstacle_radius"})


def _fail(code: int, message) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ImageDecodeError as exc:
            _fail(EXIT_DECODE, exc)
        except FitFailureError as exc:
            _fail(EXIT_FIT_FAILURE, exc)
        except (InvalidArgumentError, FormatError, TooLargeError) as exc:
            _fail(EXIT_USAGE, exc)
    return wrapper


def _out_path(out, default_name: str) -> str:
    if out:
        return out
    return os.path.join(os.environ.get(OUT_DIR_ENV, "."), default_name)


def _merged(ctx, **flags) -> dict:
    """Apply --config file values under explicitly passed flags."""
    cfg = ctx.obj or {}
    merged = {}
    for name, value in flags.items():
        explicit = ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE
        merged[name] = cfg[name] if not explicit and name in cfg else value
    return merged


@click.group()
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON file of flag defaults; explicit flags override it.")
@click.pass_context
def main(ctx, config_path):
    """Plan how many views to capture and the shortest way to visit them.

    View spaces live on a hemisphere over a tabletop object; quality is
    modeled as a log-normal CDF of the view count; paths start at the
    zenith view and detour around the object.
    """
    if config_path:
        cfg = jsonio.load_file(config_path)
        if not isinstance(cfg, dict):
            raise click.UsageError("--config must contain a JSON object")
        unknown = sorted(set(cfg) - CONFIG_KEYS)
        if unknown:
            raise click.UsageError(f"unknown config keys: {unknown}")
        ctx.obj = cfg
    else:
        ctx.obj = {}


@main.command()
@click.option("--n", type=int, default=None, help="Number of views to place.")
@click.option("--radius", type=float, default=0.3, show_default=True,
              help="View sphere radius in meters.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=DEFAULT_RESTARTS, show_default=True,
              help="Independent solver restarts; best result wins.")
@click.option("--iters", type=int, default=DEFAULT_ITERS, show_default=True,
              help="Gradient-ascent iterations per restart.")
@click.option("--table", "table_range", default=None, metavar="LO..HI",
              help="Solve every count in the range and write one lookup table.")
@click.option("--out", type=click.Path(), default=None,
              help="Output file [default: tammes_N.json or table.json].")
@click.pass_context
@_handle_errors
def tammes(ctx, n, radius, seed, restarts, iters, table_range, out):
    """Spread views on the hemisphere by maximizing the minimum pairwise angle."""
    opts = _merged(ctx, radius=radius, seed=seed, restarts=restarts, iters=iters)
    if table_range is not None:
        lo, sep, hi = table_range.partition("..")
        if sep != ".." or not lo.strip() or not hi.strip():
            raise InvalidArgumentError(f"--table expects LO..HI, got {table_range!r}")
        try:
            lo, hi = int(lo), int(hi)
        except ValueError as exc:
            raise InvalidArgumentError(f"--table expects integers: {exc}") from exc
        if not 1 <= lo <= hi:
            raise InvalidArgumentError(f"invalid table range {lo}..{hi}")
        table = build_table(range(lo, hi + 1), radius=opts["radius"],
                            seed=opts["seed"], restarts=opts["restarts"],
                            iters=opts["iters"])
        path = _out_path(out, "table.json")
        save_table(table, path)
        click.echo(f"wrote {len(table)} view spaces ({lo}..{hi}) to {path}")
        return
    if n is None:
        raise InvalidArgumentError("either --n or --table is required")
    vs = tammes_hemisphere(n, radius=opts["radius"], seed=opts["seed"],
                           restarts=opts["restarts"], iters=opts["iters"])
    path = _out_path(out, f"tammes_{n}.json")
    save_view_space(vs, path)
    if n >= 2:
        angle = np.degrees(min_pairwise_angle(vs))
        click.echo(f"min pairwise angle: {angle:.4f} deg")
    else:
        click.echo("min pairwise angle: inf")
    click.echo(f"wrote {n} poses to {path}")


@main.command()
@click.argument("samples_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=float, default=DEFAULT_ALPHA, show_default=True,
              help="Marginal-gain threshold in dB per added view.")
@click.option("--v-min", type=int, default=DEFAULT_V_MIN, show_default=True)
@click.option("--v-max", type=int, default=DEFAULT_V_MAX, show_default=True)
@click.option("--out", type=click.Path(), default=None,
              help="Fit/label JSON [default: fit_label.json].")
@click.pass_context
@_handle_errors
def label(ctx, samples_csv, alpha, v_min, v_max, out):
    """Fit quality samples (v, psnr CSV) and report the required view count."""
    opts = _merged(ctx, alpha=alpha, v_min=v_min, v_max=v_max)
    samples = load_samples_csv(samples_csv)
    curve = fit_curve(samples)
    lab = required_views(curve, alpha=opts["alpha"],
                         v_min=opts["v_min"], v_max=opts["v_max"])
    path = _out_path(out, "fit_label.json")
    save_fit_label(curve, lab, path)
    suffix = " (saturated at range end)" if lab.saturated else ""
    click.echo(f"v_star: {lab.v_star}{suffix}")
    click.echo(f"residual_rms: {curve.residual_rms:.6f} dB")
    click.echo(f"wrote {path}")


@main.command()
@click.option("--images", "-i", "images", multiple=True,
              type=click.Path(exists=True, dir_okay=False),
              help="1-5 object images (repeatable flag).")
@click.option("--model", "model_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Regressor model JSON trained by the simulate command.")
@click.option("--statistic", "statistic", default=None,
              type=click.Choice(sorted(STATISTIC_KINDS)),
              help="Constant predictor from a label distribution.")
@click.option("--labels", "labels_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Label file (one integer per line) for --statistic; "
                   "bundled reference statistics are used without it.")
@click.option("--out", type=click.Path(), default=None,
              help="Optional prediction JSON output.")
@_handle_errors
def predict(images, model_path, statistic, labels_path, out):
    """Predict the required number of views for an object."""
    if (model_path is None) == (statistic is None):
        raise InvalidArgumentError("exactly one of --model or --statistic is required")
    if statistic is not None:
        labels = None
        if labels_path:
            labels = _read_label_lines(labels_path)
        prediction = predict_statistic(statistic, labels=labels)
    else:
        if not images:
            raise InvalidArgumentError("--model requires at least one --images file")
        model = load_model(model_path)
        if len(images) == 1:
            click.echo("warning: single image; variance features are all zero",
                       err=True)
        prediction = predict_regressor(model, extract_features_from_files(images))
    click.echo(f"v_hat: {prediction.v_hat}")
    click.echo(f"v_hat_real: {prediction.v_hat_real:.6f}")
    if out:
        jsonio.dump_file({"v_hat": prediction.v_hat,
                          "v_hat_real": float(prediction.v_hat_real),
                          "source": prediction.source}, out)
        click.echo(f"wrote {out}")


def _read_label_lines(path):
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError as exc:
                raise FormatError(f"{path}: {exc}", line=lineno) from exc
    if not labels:
        raise InvalidArgumentError(f"{path}: no labels found")
    return labels


@main.command()
@click.argument("viewspace_json", required=False,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--matrix", "matrix_csv", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Solve a raw cost-matrix CSV instead of a view-space file.")
@click.option("--start", default="top", show_default=True,
              help="Start view: a named view for view spaces "
                   "(top/left/right/front/back), a node index for --matrix.")
@click.option("--obstacle-radius", type=float, default=0.0, show_default=True,
              help="Obstacle sphere radius at the view-space center, meters.")
@click.option("--exact-cap", type=int, default=EXACT_SOLVER_CAP, show_default=True,
              help="Largest view count solved exactly; larger uses the heuristic.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-timing", is_flag=True,
              help="Zero the planning-time field for byte-stable output.")
@click.option("--out", type=click.Path(), default=None,
              help="Path JSON [default: path.json].")
@click.pass_context
@_handle_errors
def plan(ctx, viewspace_json, matrix_csv, start, obstacle_radius, exact_cap,
         seed, no_timing, out):
    """Compute the shortest visiting order over a view space from the start view."""
    opts = _merged(ctx, obstacle_radius=obstacle_radius, exact_cap=exact_cap,
                   seed=seed)
    if (viewspace_json is None) == (matrix_csv is None):
        raise InvalidArgumentError("provide either a view-space file or --matrix")
    if matrix_csv is not None:
        costs = load_cost_csv(matrix_csv)
        try:
            start_idx = int(start) if start != "top" else 0
        except ValueError as exc:
            raise InvalidArgumentError(f"--matrix needs an integer start: {exc}") from exc
        if len(costs) <= opts["exact_cap"]:
            result = hamiltonian_path_exact(costs, start_idx, cap=opts["exact_cap"])
        else:
            result = hamiltonian_path_heuristic(costs, start_idx, seed=opts["seed"])
    else:
        vs = load_view_space(viewspace_json)
        name = start.lower()
        if name not in NAMED_VIEW_DIRECTIONS:
            raise InvalidArgumentError(
                f"unknown start view {start!r}; expected one of "
                f"{sorted(NAMED_VIEW_DIRECTIONS)}")
        start_pose = look_at_pose(vs.center + vs.radius * NAMED_VIEW_DIRECTIONS[name],
                                  vs.center)
        obs = ObstacleSphere(center=tuple(vs.center),
                             radius_obs=opts["obstacle_radius"])
        result = plan_global_path(vs, start_pose, obs,
                                  exact_cap=opts["exact_cap"], seed=opts["seed"])
    if no_timing:
        result.planning_time_s = 0.0
    path = _out_path(out, "path.json")
    save_path(result, path)
    click.echo(f"total length: {result.total_length:.6f} m ({result.solver})")
    click.echo(f"planning time: {result.planning_time_s:.4f} s")
    click.echo(f"wrote {path}")


@main.command()
@click.argument("config_json", required=False,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=None, type=click.Path(file_okay=False),
              help=f"Output directory [default: ${OUT_DIR_ENV} or ./simout].")
@click.option("--objects", type=int, default=None,
              help="Override the number of evaluation objects.")
@click.option("--trials", type=int, default=None,
              help="Override trials per (object, strategy, predictor) cell.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--no-timing", is_flag=True,
              help="Zero all timing fields for byte-stable outputs.")
@_handle_errors
def simulate(config_json, out_dir, objects, trials, seed, no_timing):
    """Run the synthetic strategy comparison and write its report files."""
    overrides = {}
    if objects is not None:
        overrides["objects"] = objects
    if trials is not None:
        overrides["trials_per_cell"] = trials
    if seed is not None:
        overrides["seed"] = seed
    if no_timing:
        overrides["timing"] = False
    config = load_config(config_json, overrides)
    out_dir = out_dir or os.environ.get(OUT_DIR_ENV) or "./simout"
    manifest = os.path.join(out_dir, "manifest.json")
    try:
        result = compare(config)
        files = write_outputs(result, out_dir, config)
        os.makedirs(out_dir, exist_ok=True)
        jsonio.dump_file({"completed": True, "files": sorted(files)}, manifest)
    except (InvalidArgumentError, FormatError):
        raise  # usage-level problems keep exit code 2
    except Exception as exc:  # partial run: record what exists, then exit 5
        os.makedirs(out_dir, exist_ok=True)
        present = sorted(f for f in os.listdir(out_dir) if f != "manifest.json")
        jsonio.dump_file({"completed": False, "error": str(exc),
                          "files": present}, manifest)
        _fail(EXIT_RUNTIME, f"experiment failed mid-run: {exc}")
    for row in result.rows:
        click.echo(f"{row['strategy']:>12} / {row['predictor']:<9} "
                   f"psnr {row['mean_psnr_db']:6.2f} dB  "
                   f"movement {row['mean_movement_m']:7.3f} m  "
                   f"|dv| {row['mean_abs_view_error']:5.2f}")
    click.echo(f"wrote {len(files) + 1} files to {out_dir}")


if __name__ == "__main__":
    main()
