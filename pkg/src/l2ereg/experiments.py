"""Simulation scenarios, metrics, cross-validation, and the replicate runner."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .blockdescent import FitOptions, FitReport, fit_l2e
from .data import Dataset, mad
from .loss import l2e_loss
from .penalties import Penalty
from .pg import PgOptions, fit_pg
from .projections import ConstraintSet, project_isotonic

SUPPORT_TOL = 1e-6
DISTANCE_RHO = 1e8
SPARSITY_GRID = (3, 5, 7, 9, 11, 13, 15)

# fold fits only steer model selection, so they run with looser tolerances
# than the final full-data fit
CV_FIT_OPTIONS = FitOptions(
    max_outer=30, outer_tol=1e-6, n_beta_inner=30, beta_inner_tol=1e-6
)

ISOTONIC_METHODS = ("mm", "pg", "ls")
SPARSE_METHODS = ("lasso", "mcp", "distance")


@dataclass(frozen=True)
class IsotonicScenario:
    n: int = 1000
    m: int = 100
    shift: float = 14.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError("need 0 <= m <= n")


@dataclass(frozen=True)
class SparseScenario:
    n: int = 200
    p: int = 50
    m: int = 20
    shift: float = 5.0
    tau_true: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError("need 0 <= m <= n")
        if self.tau_true <= 0:
            raise ValueError("tau_true must be positive")


@dataclass(frozen=True)
class Metrics:
    mse: float
    relative_error: float
    f1: float
    true_positives: int
    false_positives: int


@dataclass
class ExperimentSummary:
    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    # columns excluded from the deterministic CSV (wall-clock varies per run)
    TIMING_COLUMNS = ("runtime",)

    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            for key in row:
                if key not in cols:
                    cols.append(key)
        return cols

    def write_csv(self, path, include_timing: bool = False) -> None:
        cols = [
            c
            for c in self.columns()
            if include_timing or c not in self.TIMING_COLUMNS
        ]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for row in self.rows:
                fh.write(",".join(_csv_cell(row.get(c)) for c in cols) + "\n")

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.aggregates, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def gen_isotonic(sc: IsotonicScenario):
    """Cubic signal on [-2.5, 2.5] with a consecutive block of shifted responses.

    Returns (Dataset with identity design, truth) where truth is the
    uncontaminated signal x^3.  The outlier block starts at case 251
    (1-based) for n = 1000 and scales proportionally otherwise.
    """
    rng = np.random.default_rng(sc.seed)
    x = np.linspace(-2.5, 2.5, sc.n)
    truth = x**3
    s = np.zeros(sc.n)
    start = int(round(250 * sc.n / 1000))
    s[start : start + sc.m] = sc.shift
    y = truth + s + rng.standard_normal(sc.n)
    return Dataset(y=y, X=np.eye(sc.n)), truth


def gen_sparse(sc: SparseScenario):
    """Gaussian design with a 5-spike coefficient vector and leverage outliers.

    y = X beta + eps / tau_true; then the first m responses and every entry
    of the first m design rows are shifted by `shift`.
    """
    rng = np.random.default_rng(sc.seed)
    X = rng.standard_normal((sc.n, sc.p))
    truth = np.zeros(sc.p)
    truth[: min(5, sc.p)] = 1.0
    y = X @ truth + rng.standard_normal(sc.n) / sc.tau_true
    y[: sc.m] += sc.shift
    X[: sc.m, :] += sc.shift
    return Dataset(y=y, X=X), truth


def compute_metrics(beta_hat, truth, support_tol: float = SUPPORT_TOL) -> Metrics:
    beta_hat = np.asarray(beta_hat, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if beta_hat.shape != truth.shape:
        raise ValueError("beta_hat and truth must have equal length")
    err = beta_hat - truth
    mse = float(np.mean(err * err))
    tnorm = float(np.linalg.norm(truth))
    rel = float(np.linalg.norm(err)) / tnorm if tnorm > 0 else float("nan")
    sup_hat = np.abs(beta_hat) > support_tol
    sup_true = np.abs(truth) > support_tol
    tp = int(np.sum(sup_hat & sup_true))
    fp = int(np.sum(sup_hat & ~sup_true))
    fn = int(np.sum(~sup_hat & sup_true))
    denom = 2 * tp + fp + fn
    f1 = 1.0 if denom == 0 else 2.0 * tp / denom
    return Metrics(mse=mse, relative_error=rel, f1=f1, true_positives=tp, false_positives=fp)


def _penalty_strength(pen: Penalty) -> float:
    """Larger means more penalized; used to break cross-validation ties."""
    if pen.kind in ("lasso", "mcp"):
        return pen.lam
    if pen.kind == "distance" and pen.cset is not None and pen.cset.kind == "sparse":
        return -float(pen.cset.k)
    return 0.0


def _holdout_score(test: Dataset, beta: np.ndarray) -> float:
    """Held-out L2E loss at beta, profiled over the precision parameter.

    Scoring at the training-fold eta lets interpolating fits inflate tau and
    swamp the comparison; minimizing the held-out loss over eta instead gives
    a robust goodness-of-fit measure for beta alone.  A coarse grid locates
    the basin and a bounded 1-D minimization refines it.
    """
    etas = np.linspace(-10.0, 10.0, 41)
    vals = np.array([l2e_loss(test, beta, e) for e in etas])
    j = int(np.argmin(vals))
    lo, hi = etas[max(j - 1, 0)], etas[min(j + 1, etas.size - 1)]
    res = minimize_scalar(lambda e: l2e_loss(test, beta, e), bounds=(lo, hi), method="bounded")
    return float(min(res.fun, vals[j]))


def cross_validate(
    data: Dataset,
    pen_family: list[Penalty],
    folds: int = 5,
    seed: int = 0,
    fit_opts: FitOptions | None = None,
) -> Penalty:
    """Pick the penalty whose profiled held-out L2E loss is smallest.

    Fold assignment is a seeded permutation split; ties go to the more
    penalized candidate.
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if not pen_family:
        raise ValueError("penalty grid is empty")
    n = data.n
    perm = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[perm] = np.arange(n) % folds

    # within each fold, fit the candidates as a warm-started path.  For
    # shrinkage penalties the path runs strong-to-weak (beta = 0 is exact at
    # lambda_max); for set-distance penalties it runs weak-to-strong, pruning
    # an easy loosely-constrained solution down to the tight ones.
    weak_first = all(pen.kind == "distance" for pen in pen_family)
    sign = 1.0 if weak_first else -1.0
    order = sorted(range(len(pen_family)), key=lambda i: sign * _penalty_strength(pen_family[i]))
    base_opts = fit_opts if fit_opts is not None else FitOptions()
    scores: dict[int, list[float]] = {i: [] for i in range(len(pen_family))}
    for f in range(folds):
        hold = fold_of == f
        train = Dataset(y=data.y[~hold], X=data.X[~hold])
        test = Dataset(y=data.y[hold], X=data.X[hold])
        warm_beta, warm_eta = None, None
        for i in order:
            opts = (
                base_opts
                if warm_beta is None
                else replace(base_opts, init_beta=warm_beta, init_eta=warm_eta)
            )
            rep = fit_l2e(train, pen_family[i], opts)
            warm_beta, warm_eta = rep.beta, rep.eta
            scores[i].append(_holdout_score(test, rep.beta))

    best_pen = None
    best_score = math.inf
    best_strength = -math.inf
    for i, pen in enumerate(pen_family):
        score = float(np.mean(scores[i]))
        strength = _penalty_strength(pen)
        if score < best_score or (score == best_score and strength > best_strength):
            best_pen, best_score, best_strength = pen, score, strength
    return best_pen


def lasso_grid(data: Dataset, n_values: int = 7) -> list[float]:
    """Geometric lambda grid below the zero-solution threshold at unit weights."""
    from .loss import surrogate_scale

    m = mad(data.y)
    eta0 = 0.0 if m == 0 else -math.log(m)
    scale = surrogate_scale(eta0, data.n)
    lam_max = scale * float(np.max(np.abs(data.X.T @ data.y)))
    return list(lam_max * np.geomspace(0.01, 1.0, n_values))


def distance_grid(rho: float = DISTANCE_RHO, ks=SPARSITY_GRID) -> list[Penalty]:
    return [Penalty.distance(rho, ConstraintSet.sparse(k)) for k in ks]


def _fit_isotonic_method(method: str, data: Dataset, truth: np.ndarray):
    if method == "mm":
        rep = fit_l2e(data, Penalty.indicator(ConstraintSet.isotonic()))
    elif method == "pg":
        rep = fit_pg(data, Penalty.indicator(ConstraintSet.isotonic()))
    elif method == "ls":
        import time

        t0 = time.perf_counter()
        beta = project_isotonic(data.y)
        rep = FitReport(
            beta=beta,
            eta=0.0,
            weights=np.ones(data.n),
            loss_trace=np.asarray([]),
            outer_iters=1,
            inner_beta_iters=[1],
            inner_eta_iters=[0],
            converged=True,
            precision_diverged=False,
            wall_time=time.perf_counter() - t0,
        )
    else:
        raise ValueError(f"unknown isotonic method {method!r}")
    return rep


def _fit_sparse_method(method: str, data: Dataset, cv: bool, cv_seed: int):
    if method == "lasso":
        grid = [Penalty.lasso(l) for l in lasso_grid(data)]
        default = grid[len(grid) // 2]
    elif method == "mcp":
        grid = [Penalty.mcp(l, 3.0) for l in lasso_grid(data)]
        default = grid[len(grid) // 2]
    elif method == "distance":
        grid = distance_grid()
        default = Penalty.distance(DISTANCE_RHO, ConstraintSet.sparse(5))
    else:
        raise ValueError(f"unknown sparse method {method!r}")
    pen = cross_validate(data, grid, folds=5, seed=cv_seed, fit_opts=CV_FIT_OPTIONS) if cv else default
    return fit_l2e(data, pen)


def _replicate_seed(master_seed: int, rep: int) -> int:
    return int(np.random.SeedSequence(master_seed).spawn(rep + 1)[rep].generate_state(1)[0])


def _run_one(args):
    scenario, methods, rep, master_seed, cv = args
    seed = _replicate_seed(master_seed, rep)
    out = []
    if isinstance(scenario, IsotonicScenario):
        sc = IsotonicScenario(n=scenario.n, m=scenario.m, shift=scenario.shift, seed=seed)
        data, truth = gen_isotonic(sc)
        for method in methods:
            try:
                rep_obj = _fit_isotonic_method(method, data, truth)
                out.append(_row(rep, method, rep_obj, truth))
            except Exception as exc:  # recorded, not fatal
                out.append({"replicate": rep, "method": method, "error": str(exc)})
    else:
        sc = SparseScenario(
            n=scenario.n,
            p=scenario.p,
            m=scenario.m,
            shift=scenario.shift,
            tau_true=scenario.tau_true,
            seed=seed,
        )
        data, truth = gen_sparse(sc)
        for method in methods:
            try:
                rep_obj = _fit_sparse_method(method, data, cv, cv_seed=seed)
                out.append(_row(rep, method, rep_obj, truth))
            except Exception as exc:
                out.append({"replicate": rep, "method": method, "error": str(exc)})
    return out


def _row(rep: int, method: str, report: FitReport, truth: np.ndarray) -> dict:
    met = compute_metrics(report.beta, truth)
    nb = report.inner_beta_iters
    ne = report.inner_eta_iters
    return {
        "replicate": rep,
        "method": method,
        "mse": met.mse,
        "relative_error": met.relative_error,
        "f1": met.f1,
        "true_positives": met.true_positives,
        "false_positives": met.false_positives,
        "outer_iters": report.outer_iters,
        "mean_inner_beta": float(np.mean(nb)) if nb else 0.0,
        "mean_inner_eta": float(np.mean(ne)) if ne else 0.0,
        "converged": report.converged,
        "precision_diverged": report.precision_diverged,
        "runtime": report.wall_time,
    }


def run_replicates(
    scenario,
    methods,
    n_reps: int = 20,
    seed: int = 0,
    cv: bool = False,
    jobs: int = 1,
) -> ExperimentSummary:
    """Run each method over n_reps independently seeded replicates."""
    if n_reps < 1:
        raise ValueError("n_reps must be at least 1")
    methods = list(methods)
    tasks = [(scenario, methods, rep, seed, cv) for rep in range(n_reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_one, tasks))
    else:
        chunks = [_run_one(t) for t in tasks]

    summary = ExperimentSummary()
    for chunk in chunks:
        summary.rows.extend(chunk)
    summary.aggregates = aggregate(summary.rows)
    return summary


_AGG_FIELDS = (
    "mse",
    "relative_error",
    "f1",
    "true_positives",
    "false_positives",
    "outer_iters",
    "mean_inner_beta",
    "mean_inner_eta",
)


def aggregate(rows: list[dict]) -> dict:
    """Per-method mean and median of every numeric metric."""
    out: dict = {}
    methods = sorted({r["method"] for r in rows})
    for method in methods:
        ok = [r for r in rows if r["method"] == method and "error" not in r]
        failed = sum(1 for r in rows if r["method"] == method and "error" in r)
        stats: dict = {"replicates": len(ok), "failed": failed}
        for f in _AGG_FIELDS:
            vals = np.asarray([r[f] for r in ok], dtype=float)
            if vals.size and np.all(np.isfinite(vals)):
                stats[f"mean_{f}"] = float(np.mean(vals))
                stats[f"median_{f}"] = float(np.median(vals))
        out[method] = stats
    return out


def parse_config(path) -> dict:
    """Read a plain-text key = value scenario config; '#' starts a comment."""
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            out[key] = val
    return out
