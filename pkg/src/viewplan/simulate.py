"""End-to-end synthetic experiments comparing view-planning strategies.

Objects are generated with a known quality curve (so ground-truth labels
are exact), paired with procedurally rendered images whose visual
complexity tracks the curve's latent difficulty, and run through three
strategies:

- prv_tammes: predict the view count, configure the precomputed maximin
  view space of that size, plan one global visiting path;
- prv_uniform: same view count, but views sampled uniformly at random
  from the dense candidate grid;
- nbv_proxy: iterative next-best-view baseline that repeatedly travels to
  the grid view farthest (in minimum angle) from everything visited.

Achieved quality uses a declared surrogate: the object's curve evaluated
at an effective view count that discounts poorly spread view sets by the
ratio of their minimum pairwise angle to the maximin reference.  All
randomness is derived from per-purpose seed streams, so a rerun with the
same config is bitwise identical.
"""

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import jsonio
from .curvefit import FittedCurve, ViewCountLabel, curve_eval, required_views
from .errors import InvalidArgumentError
from .features import extract_features
from .geometry import ViewSpace, min_pairwise_angle, candidate_grid, top_view
from .pathplan import (ObstacleSphere, hamiltonian_path_heuristic, local_path,
                       build_cost_matrix, obstacle_for_object, plan_global_path)
from .predict import (Prediction, RegressorModel, label_statistic, predict_oracle,
                      predict_regressor, predict_statistic, train_regressor,
                      STATISTIC_KINDS, SOURCE_ORACLE, SOURCE_REGRESSOR)
from .tables import ViewSpaceTable

STRATEGY_TAMMES = "prv_tammes"
STRATEGY_UNIFORM = "prv_uniform"
STRATEGY_NBV = "nbv_proxy"
STRATEGIES = (STRATEGY_TAMMES, STRATEGY_UNIFORM, STRATEGY_NBV)

PREDICTOR_KINDS = (SOURCE_ORACLE,) + STATISTIC_KINDS + (SOURCE_REGRESSOR,)

#: Frozen generation ranges for synthetic quality curves.  Calibrated by
#: Monte-Carlo (10k draws): every label under alpha=0.02 on [3, 58] lands
#: in [13, 58] with zero saturation, spanning roughly 13-51 with median
#: near 27, and refitting after 0.15 dB sample noise moves the label by
#: more than 2 views in under 1% of draws (steep gain crossing; large
#: sigma values make the crossing shallow and the label jittery).  The
#: latent complexity c couples curve difficulty to the procedural image
#: generator so image features are predictive of labels.
GEN_MU = (1.35, 1.0, 0.08)      # base, slope in c, +/- jitter
GEN_SIGMA = (0.55, 0.15, 0.05)
GEN_SCALE = (9.0, 6.0, 0.5)
GEN_OFFSET = (15.0, 25.0)       # uniform range, dB
SIZE_RANGE = (0.07, 0.12)       # object diameter, meters

MIN_ANGLE_EPS = 1e-6

# Seed-stream tags keeping object generation, images, and trials independent.
_STREAM_EVAL = 1
_STREAM_TRAIN = 2
_STREAM_IMAGES = 3
_STREAM_TRIALS = 4

DEFAULT_CONFIG = {
    "objects": 50,
    "train_objects": 120,
    "trials_per_cell": 5,
    "seed": 0,
    "alpha": 0.02,
    "radius": 0.3,
    "grid_size": 540,
    "label_range": [3, 58],
    "predict_range": [13, 58],
    "strategies": list(STRATEGIES),
    "predictors": list(PREDICTOR_KINDS),
    "ridge_lambda": 0.01,
    "images_per_object": 3,
    "image_size": [128, 96],
    "solver_cap": 12,
    "extra_starts": 3,
    "clearance": 0.02,
    "timing": True,
}


def load_config(path=None, overrides=None) -> dict:
    """Defaults, updated by an optional JSON file, updated by overrides."""
    config = dict(DEFAULT_CONFIG)
    for source in (jsonio.load_file(path) if path else None, overrides):
        if not source:
            continue
        unknown = sorted(set(source) - set(DEFAULT_CONFIG))
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {unknown}")
        config.update(source)
    for key in ("strategies", "predictors"):
        config[key] = [str(s) for s in config[key]]
    bad = set(config["strategies"]) - set(STRATEGIES)
    if bad:
        raise InvalidArgumentError(f"unknown strategies: {sorted(bad)}")
    bad = set(config["predictors"]) - set(PREDICTOR_KINDS)
    if bad:
        raise InvalidArgumentError(f"unknown predictors: {sorted(bad)}")
    if config["objects"] < 1 or config["trials_per_cell"] < 1:
        raise InvalidArgumentError("objects and trials_per_cell must be >= 1")
    return config


@dataclass(eq=False)
class SyntheticObject:
    id: int
    curve: FittedCurve
    size: float
    label: ViewCountLabel
    complexity: float  # latent difficulty in [0, 1], drives curve and images


def gen_object(seed, object_id: int = 0, alpha: float = 0.02,
               v_min: int = 3, v_max: int = 58) -> SyntheticObject:
    """Sample one object from the frozen ranges; label is exact by construction."""
    rng = np.random.default_rng(seed)
    c = rng.uniform()
    mu = GEN_MU[0] + GEN_MU[1] * c + rng.uniform(-GEN_MU[2], GEN_MU[2])
    sigma = GEN_SIGMA[0] + GEN_SIGMA[1] * c + rng.uniform(-GEN_SIGMA[2], GEN_SIGMA[2])
    scale = GEN_SCALE[0] + GEN_SCALE[1] * c + rng.uniform(-GEN_SCALE[2], GEN_SCALE[2])
    offset = rng.uniform(*GEN_OFFSET)
    size = rng.uniform(*SIZE_RANGE)
    curve = FittedCurve(mu=mu, sigma=sigma, scale=scale, offset=offset)
    label = required_views(curve, alpha=alpha, v_min=v_min, v_max=v_max)
    return SyntheticObject(id=object_id, curve=curve, size=size,
                           label=label, complexity=c)


def gen_images(obj: SyntheticObject, count: int = 3, size=(128, 96), seed=0):
    """Procedural object views: shape count and clutter scale with complexity.

    Renders vivid random ellipses and rectangles on a muted background,
    plus pixel noise growing with complexity, so histogram entropy, edge
    density, saturation, and foreground coverage all track the latent c.
    """
    width, height = int(size[0]), int(size[1])
    if width < 8 or height < 8:
        raise InvalidArgumentError("image size must be at least 8x8")
    rng = np.random.default_rng(seed)
    xs = np.arange(width)[None, :]
    ys = np.arange(height)[:, None]
    images = []
    for _ in range(count):
        base = rng.integers(140, 200)
        img = np.full((height, width, 3), base, dtype=float)
        img += rng.integers(-10, 11, size=3)[None, None, :]
        n_shapes = 2 + int(round(28 * obj.complexity))
        for shape in range(n_shapes):
            cx = rng.uniform(0.1, 0.9) * width
            cy = rng.uniform(0.1, 0.9) * height
            a = rng.uniform(0.03, 0.16) * width
            b = rng.uniform(0.03, 0.16) * height
            color = rng.integers(0, 256, size=3).astype(float)
            if shape % 2 == 0:
                mask = ((xs - cx) / a) ** 2 + ((ys - cy) / b) ** 2 <= 1.0
            else:
                mask = (np.abs(xs - cx) <= a) & (np.abs(ys - cy) <= b)
            img[mask] = color
        noise_std = 2.0 + 18.0 * obj.complexity
        img += rng.normal(0.0, noise_std, size=img.shape)
        images.append(np.clip(img, 0.0, 255.0).astype(np.uint8))
    return images


_REFERENCE_TABLE = ViewSpaceTable(radius=0.3)  # shared maximin reference cache


def quality_model(obj: SyntheticObject, views, table: ViewSpaceTable = None) -> float:
    """Surrogate reconstruction quality for a view set, in dB.

    The object's quality curve is evaluated at an effective view count
    n_eff = n * min(1, set_min_angle / maximin_angle(n)), so a maximin set
    scores the full curve value and clustered sets are discounted.  Exactly
    coincident views contribute an angle of MIN_ANGLE_EPS, driving n_eff
    toward its floor of one view.
    """
    if isinstance(views, ViewSpace):
        units = views.unit_directions()
    else:
        units = np.asarray(views, dtype=float)
    n = len(units)
    if n == 0:
        raise InvalidArgumentError("quality model needs a nonempty view set")
    if n == 1:
        return curve_eval(obj.curve, 1.0)
    dots = np.clip(units @ units.T, -1.0, 1.0)
    iu = np.triu_indices(n, k=1)
    angles = np.maximum(np.arccos(dots[iu]), MIN_ANGLE_EPS)
    if table is None:
        table = _REFERENCE_TABLE
    ref = min_pairwise_angle(table.get(n).view_space)
    ratio = min(1.0, float(angles.min()) / ref)
    n_eff = max(n * ratio, 1.0)
    return curve_eval(obj.curve, n_eff)


@dataclass(eq=False)
class TrialReport:
    object_id: int
    strategy: str
    predictor: str
    trial: int
    n_views: int
    v_star: int
    achieved_psnr: float
    movement_cost: float
    planning_time: float
    detail: dict = field(default=None, repr=False)  # in-memory extras, not serialized

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "object_id": int(self.object_id),
            "strategy": self.strategy,
            "predictor": self.predictor,
            "trial": int(self.trial),
            "n_views": int(self.n_views),
            "v_star": int(self.v_star),
            "achieved_psnr_db": float(self.achieved_psnr),
            "movement_cost_m": float(self.movement_cost),
            "planning_time_s": float(self.planning_time) if timing else 0.0,
        }


def _nbv_traversal(grid_units: np.ndarray, start_unit: np.ndarray, steps: int):
    """Greedy coverage baseline: repeatedly pick the view with the largest
    minimum angle to everything visited.  Returns grid indices in visit order."""
    dots_to_start = np.clip(grid_units @ start_unit, -1.0, 1.0)
    min_angle = np.arccos(dots_to_start)
    chosen = []
    taken = np.zeros(len(grid_units), dtype=bool)
    for _ in range(steps):
        scores = np.where(taken, -np.inf, min_angle)
        pick = int(np.argmax(scores))
        chosen.append(pick)
        taken[pick] = True
        new_dots = np.clip(grid_units @ grid_units[pick], -1.0, 1.0)
        min_angle = np.minimum(min_angle, np.arccos(new_dots))
    return chosen


def run_strategy(obj: SyntheticObject, strategy: str, prediction: Prediction,
                 seed, *, table: ViewSpaceTable, grid: ViewSpace,
                 obs: ObstacleSphere = None, solver_cap: int = 12,
                 extra_starts: int = 3, trial: int = 0) -> TrialReport:
    """Execute one strategy for one object at the predicted view count."""
    if strategy not in STRATEGIES:
        raise InvalidArgumentError(f"unknown strategy: {strategy!r}")
    v_hat = int(prediction.v_hat)
    if v_hat < 1:
        raise InvalidArgumentError("predicted view count must be >= 1")
    center, radius = grid.center, grid.radius
    if obs is None:
        obs = obstacle_for_object(center, obj.size)
    start = top_view(center, radius)
    detail = {}

    if strategy == STRATEGY_TAMMES:
        vs = table.get(v_hat).view_space
        plan = plan_global_path(vs, start, obs, exact_cap=solver_cap, seed=0)
        movement, ptime = plan.total_length, plan.planning_time_s
        psnr = quality_model(obj, vs, table=table)
        detail["order"] = list(plan.order)
    elif strategy == STRATEGY_UNIFORM:
        rng = np.random.default_rng(seed)
        if v_hat > len(grid.poses):
            raise InvalidArgumentError("predicted count exceeds the candidate grid")
        idx = np.sort(rng.choice(len(grid.poses), size=v_hat, replace=False))
        subset = ViewSpace(center=center, radius=radius,
                           poses=[grid.poses[i] for i in idx], kind="custom")
        plan = plan_global_path(subset, start, obs, exact_cap=solver_cap, seed=0)
        movement, ptime = plan.total_length, plan.planning_time_s
        psnr = quality_model(obj, subset, table=table)
        detail["grid_indices"] = [int(i) for i in idx]
    else:  # STRATEGY_NBV
        t0 = time.perf_counter()
        grid_units = grid.unit_directions()
        start_unit = (start.position - center) / radius
        chosen = _nbv_traversal(grid_units, start_unit, v_hat)
        positions = grid.positions()
        movement = 0.0
        cur = start.position
        for pick in chosen:
            movement += local_path(cur, positions[pick], obs).length
            cur = positions[pick]
        ptime = time.perf_counter() - t0
        psnr = quality_model(obj, grid_units[chosen], table=table)
        detail["grid_indices"] = [int(i) for i in chosen]
        detail["visited_positions"] = np.vstack([start.position[None, :],
                                                 positions[chosen]])
    return TrialReport(object_id=obj.id, strategy=strategy,
                       predictor=prediction.source, trial=trial,
                       n_views=v_hat, v_star=obj.label.v_star,
                       achieved_psnr=psnr, movement_cost=movement,
                       planning_time=ptime, detail=detail)


def _train_predictors(config, rng_seed):
    """Generate the training set, fit the regressor, collect label statistics."""
    v_min, v_max = (int(x) for x in config["label_range"])
    labels, feats = [], []
    for i in range(int(config["train_objects"])):
        obj = gen_object([rng_seed, _STREAM_TRAIN, i], object_id=i,
                         alpha=config["alpha"], v_min=v_min, v_max=v_max)
        labels.append(obj.label)
        images = gen_images(obj, count=int(config["images_per_object"]),
                            size=config["image_size"],
                            seed=[rng_seed, _STREAM_IMAGES, _STREAM_TRAIN, i])
        feats.append(extract_features(images))
    out_min, out_max = (int(x) for x in config["predict_range"])
    model = train_regressor(np.vstack(feats), labels,
                            ridge_lambda=float(config["ridge_lambda"]),
                            out_min=out_min, out_max=out_max)
    stats = {kind: label_statistic(kind, labels) for kind in STATISTIC_KINDS}
    return model, stats, [lab.v_star for lab in labels]


def _predict_for(obj, predictor, model, train_labels, config, rng_seed):
    if predictor == SOURCE_ORACLE:
        return predict_oracle(obj.label)
    out_min, out_max = (int(x) for x in config["predict_range"])
    if predictor in STATISTIC_KINDS:
        return predict_statistic(predictor, labels=train_labels,
                                 out_min=out_min, out_max=out_max)
    if predictor == SOURCE_REGRESSOR:
        images = gen_images(obj, count=int(config["images_per_object"]),
                            size=config["image_size"],
                            seed=[rng_seed, _STREAM_IMAGES, _STREAM_EVAL, obj.id])
        return predict_regressor(model, extract_features(images))
    raise InvalidArgumentError(f"unknown predictor: {predictor!r}")


@dataclass(eq=False)
class ComparisonTable:
    rows: list            # one dict per (strategy, predictor) cell
    trials: list          # all TrialReports in deterministic order
    model: RegressorModel = None
    train_label_stats: dict = None
    eval_labels: list = None


def compare(config: dict) -> ComparisonTable:
    """Run the full experiment grid described by the config."""
    seed = int(config["seed"])
    v_min, v_max = (int(x) for x in config["label_range"])
    radius = float(config["radius"])
    strategies = config["strategies"]
    predictors = config["predictors"]

    objects = [gen_object([seed, _STREAM_EVAL, i], object_id=i,
                          alpha=config["alpha"], v_min=v_min, v_max=v_max)
               for i in range(int(config["objects"]))]
    grid = candidate_grid(int(config["grid_size"]), radius=radius)
    table = ViewSpaceTable(radius=radius)

    model, train_stats, train_labels = None, None, None
    needs_training = SOURCE_REGRESSOR in predictors or any(
        k in predictors for k in STATISTIC_KINDS)
    if needs_training:
        model, train_stats, train_labels = _train_predictors(config, seed)

    trials = []
    for obj in objects:
        obs = obstacle_for_object(grid.center, obj.size,
                                  clearance=float(config["clearance"]))
        predictions = {p: _predict_for(obj, p, model, train_labels, config, seed)
                       for p in predictors}
        for s_idx, strategy in enumerate(strategies):
            for p_idx, predictor in enumerate(predictors):
                prediction = predictions[predictor]
                for trial in range(int(config["trials_per_cell"])):
                    trial_seed = [seed, _STREAM_TRIALS, obj.id, s_idx, p_idx, trial]
                    trials.append(run_strategy(
                        obj, strategy, prediction, trial_seed,
                        table=table, grid=grid, obs=obs,
                        solver_cap=int(config["solver_cap"]),
                        extra_starts=int(config["extra_starts"]), trial=trial))

    rows = _aggregate(trials, strategies, predictors)
    return ComparisonTable(rows=rows, trials=trials, model=model,
                           train_label_stats=train_stats,
                           eval_labels=[o.label.v_star for o in objects])


def _aggregate(trials, strategies, predictors) -> list:
    by_cell = {}
    for t in trials:
        by_cell.setdefault((t.strategy, t.predictor), []).append(t)
    oracle_mean_movement = {
        strategy: float(np.mean([t.movement_cost for t in cell]))
        for (strategy, predictor), cell in by_cell.items()
        if predictor == SOURCE_ORACLE
    }
    rows = []
    for strategy in strategies:
        for predictor in predictors:
            cell = by_cell.get((strategy, predictor), [])
            if not cell:
                continue
            psnr = np.array([t.achieved_psnr for t in cell])
            move = np.array([t.movement_cost for t in cell])
            ptime = np.array([t.planning_time for t in cell])
            verr = np.array([abs(t.n_views - t.v_star) for t in cell], dtype=float)
            base = oracle_mean_movement.get(strategy)
            rows.append({
                "strategy": strategy,
                "predictor": predictor,
                "trials": len(cell),
                "mean_psnr_db": float(psnr.mean()),
                "std_psnr_db": float(psnr.std()),
                "mean_movement_m": float(move.mean()),
                "std_movement_m": float(move.std()),
                "mean_planning_time_s": float(ptime.mean()),
                "std_planning_time_s": float(ptime.std()),
                "mean_abs_view_error": float(verr.mean()),
                "movement_diff_m": (float(move.mean() - base)
                                    if base is not None else None),
            })
    return rows


_CSV_COLUMNS = ("strategy", "predictor", "trials", "mean_psnr_db", "std_psnr_db",
                "mean_movement_m", "std_movement_m", "mean_planning_time_s",
                "std_planning_time_s", "mean_abs_view_error", "movement_diff_m")


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return jsonio.format_float(value)
    return str(value)


def label_summary(labels) -> dict:
    """Distribution summary of a label collection (count, stats, histogram)."""
    values = np.array([int(v) for v in labels])
    if values.size == 0:
        raise InvalidArgumentError("label summary needs a nonempty collection")
    hist = {}
    for v in sorted(np.unique(values)):
        hist[str(int(v))] = int(np.count_nonzero(values == v))
    return {
        "count": int(values.size),
        "mode": label_statistic("mode", values),
        "median": label_statistic("median", values),
        "mean": label_statistic("mean", values),
        "histogram": hist,
    }


def write_outputs(result: ComparisonTable, out_dir, config: dict) -> list:
    """Write all experiment artifacts; returns the list of files written."""
    os.makedirs(out_dir, exist_ok=True)
    timing = bool(config.get("timing", True))
    written = []

    def target(name):
        written.append(name)
        return os.path.join(out_dir, name)

    with open(target("trials.jsonl"), "w", encoding="utf-8") as fh:
        for t in result.trials:
            fh.write(jsonio.dumps(t.to_dict(timing=timing)))
            fh.write("\n")

    rows = result.rows
    if not timing:
        rows = [{**r, "mean_planning_time_s": 0.0, "std_planning_time_s": 0.0}
                for r in rows]
    with open(target("comparison.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for row in rows:
            writer.writerow([_csv_cell(row[c]) for c in _CSV_COLUMNS])
    jsonio.dump_file({"config": {k: config[k] for k in sorted(config)},
                      "rows": rows}, target("comparison.json"))

    with open(target("psnr_vs_movement.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "predictor", "object_id", "trial",
                         "movement_cost_m", "achieved_psnr_db"])
        for t in result.trials:
            writer.writerow([t.strategy, t.predictor, t.object_id, t.trial,
                             jsonio.format_float(t.movement_cost),
                             jsonio.format_float(t.achieved_psnr)])

    jsonio.dump_file(label_summary(result.eval_labels), target("labels.json"))

    if result.model is not None:
        from .predict import save_model
        save_model(result.model, target("model.json"))
    return written
