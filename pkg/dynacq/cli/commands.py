"""
CLI command implementations.

Each ``cmd_*`` takes an ExperimentConfig, writes its outputs through an
OutputStore and returns the paths it wrote. Errors propagate as DynAcq
errors; ``main`` turns them into exit codes.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, TextIO, Tuple

import numpy as np
import pandas as pd

from ..acquisition import (
    AcquisitionSession,
    Budget,
    Confidence,
    DynamicPolicy,
    Exhaustion,
    StaticPolicy,
    StoppingRule,
    candidate_payoff,
    performance_curve,
    run_batch,
    static_order,
)
from ..acquisition.policy import acquisition_cap
from ..bn import cpdag_diff, learn_bn, read_edge_list, write_edge_list
from ..bn.graph import Dag
from ..condmodel import FittedEngine, fit_engine, load_engine, save_engine
from ..condmodel.gaussian import GaussianParams
from ..config import ExperimentConfig
from ..core.dataset import Dataset, MinMaxStats, apply_normalizer, fit_normalizer, split
from ..core.errors import ConfigError, DataError, DimensionMismatch, DynAcqError, NoCandidates
from ..data import (
    DatasetSidecar,
    HierarchicalSpec,
    LinearGaussianBnSpec,
    build_linear_gaussian_bn,
    gen_chain_timeseries,
    gen_hierarchical,
    gen_linear_gaussian_bn,
    generating_params,
    load_csv,
    load_fixture,
    read_sidecar,
    truth_dag,
    write_csv,
    write_sidecar,
)
from ..data.csv_io import DEFAULT_LABEL_COLUMN, HEADERLESS_LAST_COLUMN
from ..logging_config import log_error
from ..storage import OutputStore
from ..timeseries import (
    collect_calibration_pairs,
    expected_calibration_error,
    fit_calibration,
    run_chrono_episode,
    run_consecutive,
    stop_summary,
)
from .plotting import plot_curves

logger = logging.getLogger(__name__)


# ========================================
# Shared helpers
# ========================================

@dataclass
class Splits:
    train: Dataset
    val: Dataset
    test: Dataset
    sidecar: Optional[DatasetSidecar]


def _load_dataset(cfg: ExperimentConfig) -> Tuple[Dataset, Optional[DatasetSidecar]]:
    if cfg.data is None:
        raise ConfigError("no dataset given (--data)")
    sidecar = read_sidecar(cfg.data)
    label_column = cfg.label_column
    target_column = cfg.target_column
    if sidecar is not None and label_column is None and target_column is None:
        label_column, target_column = sidecar.label_column, sidecar.target_column
    if label_column is None and target_column is None:
        if not cfg.header:
            if cfg.task == "regression":
                target_column = HEADERLESS_LAST_COLUMN
            else:
                label_column = HEADERLESS_LAST_COLUMN
        elif cfg.task == "regression":
            raise ConfigError("regression data needs --target-column")
        else:
            label_column = DEFAULT_LABEL_COLUMN
    ds = load_csv(cfg.data, label_column=label_column, target_column=target_column, header=cfg.header)
    return ds, sidecar


def prepare_splits(cfg: ExperimentConfig, stats: Optional[MinMaxStats] = None) -> Splits:
    """
    Load, split and (optionally) normalize the configured dataset.

    Normalization statistics come from ``stats`` (a fitted engine's) or the
    training split.
    """
    ds, sidecar = _load_dataset(cfg)
    train, val, test = split(ds, cfg.split_ratios, cfg.split_seed)
    if cfg.normalize or stats is not None:
        stats = stats if stats is not None else fit_normalizer(train)
        train, val, test = (apply_normalizer(part, stats) for part in (train, val, test))
    return Splits(train, val, test, sidecar)


def _engine_for(cfg: ExperimentConfig) -> Tuple[FittedEngine, Splits]:
    """The configured model file, or a fresh fit on the training split."""
    if cfg.model is not None:
        engine = load_engine(cfg.model)
        splits = prepare_splits(cfg, engine.normalization)
        if engine.dim != splits.test.dim:
            raise DimensionMismatch(f"model covers {engine.dim} columns, data has {splits.test.dim}")
        return engine, splits
    splits = prepare_splits(cfg)
    logger.info("No model file given; fitting on the training split")
    return fit_engine(splits.train, cfg.engine_choice, cfg.seed), splits


def _bn_spec(sidecar: DatasetSidecar) -> LinearGaussianBnSpec:
    """Rebuild the generating network recorded in a sidecar."""
    if sidecar.nodes is None or sidecar.edges is None or sidecar.weights is None:
        raise DataError("sidecar does not describe a Bayesian network")
    index = {n: i for i, n in enumerate(sidecar.nodes)}
    edges = [(index[a], index[b]) for a, b in sidecar.edges]
    return LinearGaussianBnSpec(
        dag=Dag(len(sidecar.nodes), edges, sidecar.nodes),
        n=sidecar.params.get("n", 1),
        noise_var=sidecar.params.get("noise_var", 0.3),
        weights=dict(zip(edges, sidecar.weights)),
        task=sidecar.task,
        target=sidecar.params.get("target"),
        seed=sidecar.seed,
    )


def _stopping_rule(cfg: ExperimentConfig) -> StoppingRule:
    if cfg.confidence is not None:
        return Confidence(cfg.confidence, cfg.budget)
    if cfg.budget is not None:
        return Budget(cfg.budget)
    return Exhaustion()


def _generating_params(cfg: ExperimentConfig, sidecar: Optional[DatasetSidecar]) -> Optional[GaussianParams]:
    """Parameters of a generated network for the exact oracle, if the sidecar has them."""
    if cfg.oracle != "exact" or sidecar is None or sidecar.generator != "bn":
        return None
    return generating_params(_bn_spec(sidecar))


def _pruner(cfg: ExperimentConfig, splits: Splits) -> Optional[Dag]:
    if cfg.prune_bn is None:
        return None
    if cfg.prune_bn == "learn":
        return learn_bn(
            splits.train,
            cfg.engine_choice,
            cfg.epsilon,
            cfg.seed,
            cfg.oracle,
            cfg.ci_null,
            cfg.n_samples,
            cfg.workers,
            _generating_params(cfg, splits.sidecar),
        )
    return read_edge_list(cfg.prune_bn)


# ========================================
# fit
# ========================================

def cmd_fit(cfg: ExperimentConfig) -> Path:
    """Fit the engine on the training split and write the model JSON."""
    splits = prepare_splits(cfg)
    engine = fit_engine(splits.train, cfg.engine_choice, cfg.seed)
    path = cfg.model if cfg.model is not None else OutputStore(cfg.out).path("model.json")
    return save_engine(engine, path)


# ========================================
# acquire
# ========================================

def cmd_acquire(cfg: ExperimentConfig) -> Dict[str, Path]:
    """
    Run acquisition episodes over the test split.

    Writes ``curve_<policy>.csv`` and ``traces_<policy>.jsonl`` per policy,
    ``candidates.csv`` when a pruning graph is used, and ``curves.svg``.
    """
    engine, splits = _engine_for(cfg)
    store = OutputStore(cfg.out)
    stop = _stopping_rule(cfg)
    if isinstance(stop, Confidence) and not engine.is_classification:
        raise ConfigError("--confidence applies to classification data only")
    horizon = acquisition_cap(stop, len(engine.feature_indices))
    pruner = _pruner(cfg, splits)

    policies = []
    if cfg.policy in ("dfa", "both"):
        policies.append(DynamicPolicy())
    if cfg.policy in ("sfa", "both"):
        reference = splits.test if cfg.static_on_test else splits.val
        order = static_order(engine, reference, cfg.n_samples, cfg.seed, cfg.workers)
        policies.append(StaticPolicy(order))
        store.write_json("static_order.json", {"order": list(order), "names": [engine.feature_name(i) for i in order]})

    outputs: Dict[str, Path] = {}
    frames, labels = [], []
    for policy in policies:
        batch = run_batch(engine, splits.test.rows, policy, stop, pruner, cfg.n_samples, cfg.seed, cfg.workers)
        curve = performance_curve(batch.traces, splits.test.targets, splits.test.task, horizon)
        frame = curve.to_frame()
        outputs[f"curve_{policy.name}"] = store.write_frame(f"curve_{policy.name}.csv", frame)
        outputs[f"traces_{policy.name}"] = store.write_jsonl(f"traces_{policy.name}.jsonl", batch.traces)
        if pruner is not None:
            payoff = candidate_payoff(batch.traces, horizon)
            outputs[f"candidates_{policy.name}"] = store.write_frame(
                f"candidates_{policy.name}.csv",
                pd.DataFrame({"step": np.arange(1, horizon + 1), "mean_candidates": payoff}),
            )
        if batch.failed:
            logger.warning(f"{len(batch.failed)} instances failed under {policy.name}: {batch.failed}")
        frames.append(frame)
        labels.append(policy.name.upper())

    outputs["plot"] = plot_curves(frames, labels, store.path("curves.svg"), ylabel=curve.metric)
    return outputs


# ========================================
# learn-bn
# ========================================

def cmd_learn_bn(cfg: ExperimentConfig, out: TextIO) -> Dict[str, Path]:
    """
    Learn a DAG over the training split and write it as an edge list.

    When the data came from a generated network the true CPDAG is compared
    and the difference written to ``bn_diff.json``.
    """
    splits = prepare_splits(cfg)
    sidecar = splits.sidecar
    params = _generating_params(cfg, sidecar)
    truth = truth_dag(_bn_spec(sidecar)) if sidecar is not None and sidecar.generator == "bn" else None

    dag = learn_bn(
        splits.train,
        cfg.engine_choice,
        cfg.epsilon,
        cfg.seed,
        cfg.oracle,
        cfg.ci_null,
        cfg.n_samples,
        cfg.workers,
        params,
    )
    store = OutputStore(cfg.out)
    outputs = {"dag": write_edge_list(dag, store.path("learned_dag.txt"))}
    out.write(f"Learned {len(dag.edges)} edges over {dag.num_nodes} nodes\n")

    if truth is not None:
        diff = cpdag_diff(dag, truth)
        outputs["diff"] = store.write_json("bn_diff.json", diff)
        out.write(f"skeleton errors: {diff.skeleton_errors}, v-structure errors: {diff.v_structure_errors}\n")
        for label, edges in (("missing", diff.missing), ("extra", diff.extra), ("misoriented", diff.misoriented)):
            for edge in edges:
                out.write(f"  {label}: {edge}\n")
    return outputs


# ========================================
# ts
# ========================================

def _series_shape(cfg: ExperimentConfig, sidecar: Optional[DatasetSidecar], dim: int) -> Tuple[int, int]:
    step_width = cfg.step_width
    T = cfg.time_steps
    if sidecar is not None and sidecar.T is not None:
        T = T if T is not None else sidecar.T
        step_width = sidecar.step_width or step_width
    if T is None:
        T = dim // step_width
    if T * step_width != dim:
        raise ConfigError(f"{T} steps of width {step_width} do not cover {dim} features")
    return T, step_width


def _parallel(fn: Callable[[int], object], count: int, workers: int) -> List:
    """Run ``fn`` over 0..count-1; failures are logged and returned as None."""
    def guarded(r: int):
        try:
            return fn(r)
        except DynAcqError as e:
            log_error(logger, e, {"instance": r})
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(guarded, range(count)))
    return [guarded(r) for r in range(count)]


def cmd_ts(cfg: ExperimentConfig) -> Dict[str, Path]:
    """
    Time-series acquisition over the test split.

    Budget modes (dirichlet, uniform) write accuracy per acquisition step;
    the consecutive mode fits per-step calibration on the validation split,
    stops at the threshold and writes accuracy against calibrated confidence
    per time step.
    """
    engine, splits = _engine_for(cfg)
    if not engine.is_classification:
        raise ConfigError("time-series commands need classification data")
    T, step_width = _series_shape(cfg, splits.sidecar, engine.dim)
    store = OutputStore(cfg.out)
    test = splits.test
    labels = test.labels
    outputs: Dict[str, Path] = {}

    if cfg.ts_mode in ("dirichlet", "uniform"):
        budget = cfg.budget if cfg.budget is not None else T
        results = _parallel(
            lambda r: run_chrono_episode(
                engine, test.rows[r], T, step_width, budget, cfg.alpha, cfg.ts_mode,
                cfg.posterior_draws, cfg.n_samples, cfg.seed + r, instance_id=r,
            ),
            test.n,
            cfg.workers,
        )
        traces = [t for t in results if t is not None]
        rows = []
        for k in range(budget + 1):
            preds = np.array([tr.prediction_at(k) for tr in traces])
            correct = (preds == labels[[tr.instance for tr in traces]]).astype(float)
            p = float(correct.mean()) if len(traces) else 0.0
            reached = [tr.steps[k - 1].time_step for tr in traces if k >= 1 and len(tr.steps) >= k]
            rows.append({
                "step": k,
                "metric_mean": p,
                "metric_stderr": float(np.sqrt(p * (1 - p) / len(traces))) if traces else 0.0,
                "mean_time_step": float(np.mean(reached)) if reached else float("nan"),
            })
        frame = pd.DataFrame(rows)
        outputs["curve"] = store.write_frame(f"ts_curve_{cfg.ts_mode}.csv", frame)
        outputs["traces"] = store.write_jsonl(f"ts_traces_{cfg.ts_mode}.jsonl", traces)
        outputs["plot"] = plot_curves([frame], [cfg.ts_mode], store.path(f"ts_curve_{cfg.ts_mode}.svg"))
        return outputs

    pairs = collect_calibration_pairs(engine, splits.val.rows, splits.val.labels, T, step_width)
    calib = fit_calibration(pairs, cfg.calibration_bins)
    outputs["calibration"] = calib.save(store.path("calibration.json"))

    test_pairs = collect_calibration_pairs(engine, test.rows, labels, T, step_width)
    report = []
    for t, (conf, correct) in enumerate(test_pairs):
        calibrated = calib.calibrate(t, conf)
        val_conf, val_correct = pairs[t]
        report.append({
            "time_step": t,
            "accuracy": float(np.mean(correct)),
            "mean_calibrated_confidence": float(np.mean(calibrated)),
            "mean_raw_confidence": float(np.mean(conf)),
            "val_ece_raw": expected_calibration_error(val_conf, val_correct, cfg.calibration_bins),
            "val_ece_calibrated": expected_calibration_error(
                calib.calibrate(t, val_conf), val_correct, cfg.calibration_bins
            ),
        })
    outputs["report"] = store.write_frame("ts_calibration.csv", pd.DataFrame(report))

    results = _parallel(
        lambda r: run_consecutive(engine, test.rows[r], cfg.tau, calib, T, step_width, instance_id=r),
        test.n,
        cfg.workers,
    )
    traces = [t for t in results if t is not None]
    mean_stop, accuracy = stop_summary(traces, labels)
    outputs["traces"] = store.write_jsonl("ts_traces_consecutive.jsonl", traces)
    outputs["summary"] = store.write_json(
        "ts_summary.json",
        {"tau": cfg.tau, "mean_stop_step": mean_stop, "accuracy_at_stop": accuracy, "instances": len(traces)},
    )
    logger.info(f"Consecutive mode: mean stop step {mean_stop:.2f}, accuracy {accuracy:.3f}")
    return outputs


# ========================================
# gen-data
# ========================================

def cmd_gen_data(cfg: ExperimentConfig) -> Dict[str, Path]:
    """Generate a dataset, its CSV and sidecar (plus the true DAG for networks)."""
    path = cfg.data if cfg.data is not None else OutputStore(cfg.out).path(f"{cfg.generator}.csv")
    outputs: Dict[str, Path] = {}

    if cfg.generator == "hierarchical":
        spec = HierarchicalSpec(n=cfg.n if cfg.n is not None else 20000, seed=cfg.seed)
        ds = gen_hierarchical(spec)
        sidecar = DatasetSidecar(
            generator="hierarchical", seed=cfg.seed, task="classification",
            label_column=DEFAULT_LABEL_COLUMN, params=spec.model_dump(),
        )
    elif cfg.generator == "bn":
        task = cfg.task or "regression"
        dag = load_fixture(cfg.fixture)
        spec = LinearGaussianBnSpec(
            dag=dag, n=cfg.n if cfg.n is not None else 5000, task=task, target=cfg.target_column, seed=cfg.seed,
        )
        ds, truth = gen_linear_gaussian_bn(spec)
        bn = build_linear_gaussian_bn(spec)
        target_name = dag.names[spec.target_node()]
        sidecar = DatasetSidecar(
            generator="bn",
            seed=cfg.seed,
            task=task,
            label_column=DEFAULT_LABEL_COLUMN if task == "classification" else None,
            target_column=target_name if task == "regression" else None,
            params={"fixture": cfg.fixture, "n": spec.n, "noise_var": spec.noise_var, "target": target_name},
            nodes=list(dag.names),
            edges=[(dag.names[a], dag.names[b]) for a, b in dag.edges],
            weights=list(bn.edge_weights().values()),
        )
        outputs["dag"] = write_edge_list(truth, path.with_name(path.stem + ".dag.txt"))
    else:
        T = cfg.time_steps if cfg.time_steps is not None else 12
        n = cfg.n if cfg.n is not None else 2000
        ds = gen_chain_timeseries(n=n, T=T, step_width=cfg.step_width, seed=cfg.seed)
        sidecar = DatasetSidecar(
            generator="chain", seed=cfg.seed, task="classification", label_column=DEFAULT_LABEL_COLUMN,
            params={"n": n}, T=T, step_width=cfg.step_width,
        )

    outputs["data"] = write_csv(ds, path)
    outputs["sidecar"] = write_sidecar(sidecar, path)
    return outputs


# ========================================
# interactive
# ========================================

STOP_WORD = "stop"


def _describe_belief(engine: FittedEngine, session: AcquisitionSession) -> str:
    if engine.is_classification:
        posterior = engine.class_posterior(session.state.x_o, session.state.observed)
        names = engine.class_names or tuple(str(k) for k in range(engine.num_classes))
        return ", ".join(f"P({n})={p:.3f}" for n, p in zip(names, posterior))
    return f"prediction {session.prediction:.4f}"


def cmd_interactive(cfg: ExperimentConfig, stdin: TextIO, stdout: TextIO) -> Path:
    """
    Terminal session: the user answers each proposed feature.

    Values are entered in the data's original units and normalized with the
    engine's statistics. Typing ``stop`` (or end of input) ends the session
    with the current prediction; the transcript is saved as a trace JSON.
    """
    if cfg.model is None:
        raise ConfigError("interactive mode needs a fitted model (--model)")
    engine = load_engine(cfg.model)
    pruner = read_edge_list(cfg.prune_bn) if cfg.prune_bn not in (None, "learn") else None
    session = AcquisitionSession(engine, DynamicPolicy(), pruner, cfg.n_samples, cfg.seed)
    stopped_by = "user"

    stdout.write(f"Current belief: {_describe_belief(engine, session)}\n")
    while True:
        try:
            feature, candidates, scores = session.propose()
        except NoCandidates:
            stopped_by = "exhausted"
            break
        name = engine.feature_name(feature)
        stdout.write(f"Next feature: {name} (CMI {scores.get(feature, 0.0):.4f})\n")

        value = None
        while value is None:
            stdout.write(f"Value for {name} (or '{STOP_WORD}'): ")
            stdout.flush()
            line = stdin.readline()
            if not line or line.strip().lower() == STOP_WORD:
                break
            try:
                value = float(line.strip())
            except ValueError:
                stdout.write("Not a number, try again.\n")
        if value is None:
            break

        if engine.normalization is not None:
            value = engine.normalization.transform_value(feature, value)
            if not 0.0 <= value <= 1.0:
                logger.warning(f"{name} lies outside the training range; the model extrapolates")
        session.observe(feature, value, candidates, scores)
        stdout.write(f"Current belief: {_describe_belief(engine, session)}\n")

    trace = session.trace(stopped_by)
    stdout.write(f"Final prediction: {trace.final_prediction}\n")
    return OutputStore(cfg.out).write_json("interactive_trace.json", trace)
