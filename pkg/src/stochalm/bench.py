"""
Synthetic benchmark harness.

A scenario fixes the objective, the data distribution and the competing
algorithms. One dataset is drawn per scenario and shared by all trials; the
trials differ only in the random index stream. Output is CSV.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import csv
import io
import json
import logging
import math
import os

import numpy as np

from . import baselines
from .distributed import make_graph, run_decentralized, run_federated
from .engine import run
from .problem import CompositeProblem, ElasticNet, HuberLoss, QuadraticLoss, Ridge
from .reference import Reference, solve_reference
from .schedules import IID

log = logging.getLogger(__name__)

SCENARIOS = ("central_elastic_net", "central_quadratic", "fed_ridge", "fed_huber", "dec_elastic_net")

TRIAL_COLUMNS = ("trial", "algorithm", "t", "error", "f_star", "messages")
MEAN_COLUMNS = ("algorithm", "t", "error", "messages")

_DEFAULT_ALGOS = {
    "central_elastic_net": [{"name": "stochalm"}, {"name": "saga", "gamma": "opt"},
                            {"name": "saga", "gamma": "safe"}],
    "central_quadratic": [{"name": "stochalm"}, {"name": "saga", "gamma": "opt"},
                          {"name": "saga", "gamma": "safe"}],
    "fed_ridge": [{"name": "fed-stochalm"}, {"name": "admm", "rho": list(baselines.RHO_GRID)}],
    "fed_huber": [{"name": "fed-stochalm"}, {"name": "admm", "rho": list(baselines.RHO_GRID)}],
    "dec_elastic_net": [{"name": "dist-stochalm"}, {"name": "sgd", "rule": "constant"},
                        {"name": "sgd", "rule": "one_over_t"}],
}

_DEFAULT_T = {"central_elastic_net": 1000, "central_quadratic": 1000, "fed_ridge": 1500,
              "fed_huber": 1500, "dec_elastic_net": 1000}


@dataclass
class ExperimentConfig:
    """
    Everything needed to regenerate a benchmark.

    `T` counts StochaLM rounds. Federated ADMM is given the same number of
    messages, i.e. ``T // n`` of its synchronous rounds. Fields left as None
    take the scenario's default.
    """

    scenario: str = "central_elastic_net"
    n: int = 30
    p: int = 120
    m: int = 4
    lam1: float = 0.1
    lam2: float = 0.5
    lam: float = 0.5
    M: float = 1.0
    noise: str = None          # "gaussian" or "laplace"
    noise_level: float = 0.1   # std of the Gaussian / multiplier of the standard Laplace
    trials: int = 20
    T: int = None
    seed: int = 0
    tol: float = 1e-10
    algorithms: list = None
    graph: dict = field(default_factory=lambda: {"kind": "random", "p_edge": 0.2, "seed": 0})

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; pick one of {SCENARIOS}")
        for name in ("n", "p", "m", "trials"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.noise is None:
            self.noise = "laplace" if self.scenario == "fed_huber" else "gaussian"
        if self.noise not in ("gaussian", "laplace"):
            raise ValueError(f"unknown noise {self.noise!r}")
        if self.T is None:
            self.T = _DEFAULT_T[self.scenario]
        if self.algorithms is None:
            self.algorithms = [dict(a) for a in _DEFAULT_ALGOS[self.scenario]]

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path, **overrides):
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)

    def to_dict(self):
        return asdict(self)

    @property
    def error_kind(self):
        return "node" if self.scenario.startswith("fed") else "iterate"


def make_regularizer(cfg):
    if cfg.scenario in ("central_elastic_net", "dec_elastic_net"):
        return ElasticNet(cfg.lam1, cfg.lam2)
    return Ridge(cfg.lam)


def generate_dataset(cfg):
    """
    Draw ``x_true ~ U(-1,1)^p``, blocks ``A_i ~ U(-1,1)^{m x p}`` and
    ``y_i = A_i x_true + v_i``.

    Returns
    -------
    (CompositeProblem, ndarray)
        The problem and `x_true`.
    """
    rng = np.random.default_rng(cfg.seed)
    x_true = rng.uniform(-1.0, 1.0, cfg.p)
    comps = []
    for _ in range(cfg.n):
        A = rng.uniform(-1.0, 1.0, (cfg.m, cfg.p))
        if cfg.noise == "gaussian":
            v = cfg.noise_level * rng.standard_normal(cfg.m)
        else:
            v = cfg.noise_level * rng.laplace(size=cfg.m)
        y = A @ x_true + v
        if cfg.scenario == "fed_huber":
            comps.append(HuberLoss(A, y, cfg.n, cfg.M))
        else:
            comps.append(QuadraticLoss(A, y, cfg.n))
    return CompositeProblem(make_regularizer(cfg), comps), x_true


def relative_error(x, ref):
    """``||x - x*|| / ||x*||``; `ref` is a `Reference` or the vector ``x*``."""
    x_star = ref.x_star if isinstance(ref, Reference) else np.asarray(ref)
    nrm = np.linalg.norm(x_star)
    if nrm == 0:
        raise ValueError("relative error undefined for a zero reference")
    return float(np.linalg.norm(np.asarray(x) - x_star) / nrm)


def mean_node_error(xs, ref):
    """Mean of the relative errors of the rows of `xs` (one per peripheral node)."""
    return float(np.mean([relative_error(x, ref) for x in xs]))


def trial_seed(seed, trial):
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def save_dataset(problem, ref, x_true, path):
    """Write the problem file and its reference next to it (``*.reference.json``)."""
    problem.save(path, x_true=x_true.tolist())
    ref.save(reference_path(path))


def reference_path(path):
    root, ext = os.path.splitext(path)
    return f"{root}.reference{ext or '.json'}"


def load_dataset(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    problem = CompositeProblem.from_dict(d)
    ref = Reference.load(reference_path(path))
    return problem, ref, np.asarray(d.get("x_true", []), dtype=float)


#%% ALGORITHM DISPATCH

def _expand(cfg):
    """Flatten the algorithm list into (label, spec) pairs, one per rho for ADMM."""
    out = []
    for spec in cfg.algorithms:
        name = spec["name"]
        if name == "admm":
            rhos = spec.get("rho", list(baselines.RHO_GRID))
            for rho in (rhos if isinstance(rhos, (list, tuple)) else [rhos]):
                out.append((f"admm-rho={float(rho):g}", {"name": "admm", "rho": float(rho)}))
        elif name == "saga":
            out.append((f"saga-{spec.get('gamma', 'opt')}", spec))
        elif name == "sgd":
            out.append((f"sgd-{spec.get('rule', 'constant')}", spec))
        else:
            out.append((name, spec))
    return out


def _is_random(spec):
    return spec["name"] != "admm"


class _Context:
    """Per-scenario data shared across trials."""

    def __init__(self, cfg, problem, ref):
        self.cfg = cfg
        self.problem = problem
        self.ref = ref
        self.graph = make_graph(cfg.graph, cfg.n) if cfg.scenario == "dec_elastic_net" else None
        self._sgd_alpha = None

    def sgd_alpha(self, spec):
        if "alpha0" in spec:
            return float(spec["alpha0"])
        if self._sgd_alpha is None:
            # probe on a fixed stream, not on any trial's
            self._sgd_alpha = baselines.largest_stable_step(
                self.problem, self.graph, self.cfg.T, seed=self.cfg.seed)
        return self._sgd_alpha


def run_algorithm(ctx, spec, seed):
    """Run one algorithm; returns ``(errors, f_star, messages)`` arrays indexed by round."""
    cfg, P, xs = ctx.cfg, ctx.problem, ctx.ref.x_star
    name = spec["name"]
    if name == "stochalm":
        tr = run(P, IID(P.n, seed=seed), cfg.T, tol=cfg.tol)
    elif name == "fed-stochalm":
        tr, _ = run_federated(P, IID(P.n, seed=seed), cfg.T, tol=cfg.tol, x_star=xs)
    elif name == "dist-stochalm":
        tr, _ = run_decentralized(P, ctx.graph, seed, cfg.T, tol=cfg.tol)
    elif name == "saga":
        split = baselines.SagaSplit.from_problem(P)
        g_opt, g_safe = baselines.saga_step_sizes(split)
        gamma = spec.get("gamma", "opt")
        gamma = {"opt": g_opt, "safe": g_safe}.get(gamma, gamma)
        tr = baselines.run_saga(P, float(gamma), cfg.T, seed=seed)
    elif name == "admm":
        tr = baselines.run_admm(P, spec["rho"], max(1, cfg.T // P.n), tol=cfg.tol, x_star=xs)
    elif name == "sgd":
        tr = baselines.run_token_sgd(P, ctx.graph, seed, cfg.T, ctx.sgd_alpha(spec),
                                     spec.get("rule", "constant"))
    else:
        raise ValueError(f"unknown algorithm {name!r}")

    if cfg.error_kind == "node":
        err = tr.node_error
    else:
        err = tr.errors(xs)
    return err, tr.f_star, tr.messages


def _run_trial(args):
    ctx, trial, algos = args
    seed = trial_seed(ctx.cfg.seed, trial)
    out = {}
    for label, spec in algos:
        try:
            out[label] = run_algorithm(ctx, spec, seed)
        except Exception as exc:  # recorded per trial, the batch goes on
            log.warning("trial %d, %s failed: %s", trial, label, exc)
            out[label] = exc
    return trial, out


#%% INVARIANTS ON TRACES

def check_certificate(f_star, F_star, mono_tol=1e-9, bound_tol=1e-8):
    """Problems with a certificate sequence; empty list when it is fine."""
    fs = np.asarray(f_star)[1:]
    fs = fs[np.isfinite(fs)]
    bad = []
    if fs.size > 1 and np.min(np.diff(fs)) < -mono_tol:
        bad.append(f"certificate decreased by {-np.min(np.diff(fs)):.3e}")
    if fs.size and np.max(fs) > F_star + bound_tol:
        bad.append(f"certificate exceeds F* by {np.max(fs) - F_star:.3e}")
    return bad


#%% DRIVER

@dataclass
class BenchResult:
    config: ExperimentConfig
    reference: Reference
    per_trial: dict            # trial -> label -> (err, f_star, messages) or exception
    failures: list

    def labels(self):
        seen = []
        for res in self.per_trial.values():
            for label in res:
                if label not in seen:
                    seen.append(label)
        return seen

    def mean_curve(self, label):
        """Mean error per round over the trials where `label` succeeded."""
        errs = [res[label][0] for res in self.per_trial.values()
                if not isinstance(res[label], Exception)]
        return np.mean(errs, axis=0) if errs else None

    def messages(self, label):
        for res in self.per_trial.values():
            if not isinstance(res[label], Exception):
                return res[label][2]
        return None

    def write_trials(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for trial in sorted(self.per_trial):
            for label, res in self.per_trial[trial].items():
                if isinstance(res, Exception):
                    continue
                err, fs, msgs = res
                for t in range(len(err)):
                    w.writerow((trial, label, t, _fmt(err[t]), _fmt(fs[t]), int(msgs[t])))

    def write_mean(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEAN_COLUMNS)
        for label in self.labels():
            curve, msgs = self.mean_curve(label), self.messages(label)
            if curve is None:
                continue
            for t in range(len(curve)):
                w.writerow((label, t, _fmt(curve[t]), int(msgs[t])))

    def write_gnuplot(self, fh):
        """Whitespace-separated blocks, one per algorithm, separated by two blank lines."""
        for label in self.labels():
            curve, msgs = self.mean_curve(label), self.messages(label)
            if curve is None:
                continue
            fh.write(f"# {label}\n# t messages error\n")
            for t in range(len(curve)):
                fh.write(f"{t} {int(msgs[t])} {_fmt(curve[t])}\n")
            fh.write("\n\n")


def _fmt(v):
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def run_benchmark(cfg, out_dir=None, workers=1, gnuplot=False):
    """
    Generate the scenario dataset, run every algorithm on every trial and
    (optionally) write the CSV files into `out_dir`.

    Algorithms without randomness (ADMM) run once and are reported for every
    trial. Failures of single runs are logged and skipped; violations of the
    certificate invariants end up in ``result.failures``.

    Returns
    -------
    BenchResult
    """
    problem, x_true = generate_dataset(cfg)
    ref = solve_reference(problem)
    ctx = _Context(cfg, problem, ref)
    algos = _expand(cfg)
    rand_algos = [a for a in algos if _is_random(a[1])]
    fixed_algos = [a for a in algos if not _is_random(a[1])]
    if ctx.graph is not None and any(a[1]["name"] == "sgd" for a in algos):
        for _, spec in algos:
            if spec["name"] == "sgd":
                ctx.sgd_alpha(spec)

    jobs = [(ctx, trial, rand_algos) for trial in range(cfg.trials)]
    if workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = dict(ex.map(_run_trial, jobs))
    else:
        results = dict(map(_run_trial, jobs))

    fixed = _run_trial((ctx, 0, fixed_algos))[1] if fixed_algos else {}
    per_trial = {}
    for trial in range(cfg.trials):
        row = {}
        for label, _ in algos:
            row[label] = results[trial][label] if label in results[trial] else fixed[label]
        per_trial[trial] = row

    failures = []
    for trial, row in per_trial.items():
        for label, res in row.items():
            if isinstance(res, Exception):
                failures.append(f"trial {trial} {label}: {res}")
            elif label.endswith("stochalm"):
                failures += [f"trial {trial} {label}: {msg}" for msg in check_certificate(res[1], ref.F_star)]

    result = BenchResult(cfg, ref, per_trial, failures)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        stem = os.path.join(out_dir, cfg.scenario)
        save_dataset(problem, ref, x_true, f"{stem}_dataset.json")
        with open(f"{stem}_config.json", "w", encoding="utf-8") as fh:
            json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        with open(f"{stem}_trials.csv", "w", encoding="utf-8", newline="") as fh:
            result.write_trials(fh)
        with open(f"{stem}_mean.csv", "w", encoding="utf-8", newline="") as fh:
            result.write_mean(fh)
        if gnuplot:
            with open(f"{stem}_mean.dat", "w", encoding="utf-8") as fh:
                result.write_gnuplot(fh)
    return result


def trials_csv_text(result):
    buf = io.StringIO()
    result.write_trials(buf)
    return buf.getvalue()
