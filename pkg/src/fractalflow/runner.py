"""Unsupervised training runs, checkpoints, logs and lambda_tv sweeps."""

import csv
import gc
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data.colorwheel import flow_to_color
from .data.flo import read_flo, write_flo
from .data.imageio import load_grayscale, save_rgb
from .data.phantom import DEFAULT_EDGE_WIDTH, default_circles, make_phantom_pair
from .data.types import FlowField
from .energy import REDUCTIONS, EnergyWeights, total_energy
from .engine import AdamState, Tensor, adam_step
from .errors import TrainingDivergedError
from .metrics import evaluate
from .model import FdnConfig, init_model, predict_flow

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("benchmark", "lambda_tv", "best_loss", "best_epoch", "aee", "sdee", "aae", "sdae")


@dataclass
class ExperimentConfig:
    """Everything that determines a training run.

    Without ``frames`` the input is the moving-disc phantom described by
    ``phantom_size``, ``phantom_shift`` and ``phantom_edge_width``.
    """

    frames: tuple = None
    gt: str = None
    phantom_size: int = 256
    phantom_shift: float = 3.0
    phantom_edge_width: float = DEFAULT_EDGE_WIDTH
    lambda1: float = 0.2
    lambda2: float = 0.8
    lambda_tv: float = 0.0
    epochs: int = 10000
    learning_rate: float = 1e-4
    seed: int = 0
    depth: int = 4
    base_width: int = 32
    loss_normalization: str = "mean"
    name: str = None
    output_dir: str = None
    log_every: int = 100

    def __post_init__(self):
        if self.frames is not None:
            self.frames = tuple(str(f) for f in self.frames)
            if len(self.frames) != 2:
                raise ValueError("frames must name exactly two images")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.loss_normalization not in REDUCTIONS:
            raise ValueError(f"loss_normalization must be one of {REDUCTIONS}")
        self.weights  # validates the lambdas

    @property
    def weights(self):
        return EnergyWeights(self.lambda1, self.lambda2, self.lambda_tv)

    @property
    def model_config(self):
        return FdnConfig.scaled(self.depth, self.base_width)

    @property
    def benchmark(self):
        if self.name:
            return self.name
        if self.frames is None:
            return f"phantom{self.phantom_size}"
        return os.path.basename(os.path.dirname(os.path.abspath(self.frames[0]))) or "frames"

    def as_dict(self):
        """JSON-ready snapshot; the output directory is left out so reruns elsewhere match."""
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "output_dir"}
        if out["frames"] is not None:
            out["frames"] = list(out["frames"])
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class EpochRecord:
    epoch: int
    total_loss: float
    data_l1: float
    data_l2: float
    tv: float
    aee: float = None
    sdee: float = None
    aae: float = None
    sdae: float = None

    def as_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class RunSummary:
    benchmark: str
    lambda_tv: float
    best_loss: float
    best_epoch: int
    initial_loss: float
    epochs: int
    metrics: dict = None
    artifacts: dict = field(default_factory=dict)
    status: str = "ok"

    def as_dict(self):
        return asdict(self)

    def table_row(self):
        m = self.metrics or {}
        return {
            "benchmark": self.benchmark,
            "lambda_tv": self.lambda_tv,
            "best_loss": self.best_loss,
            "best_epoch": self.best_epoch,
            "aee": m.get("aee"),
            "sdee": m.get("sdee"),
            "aae": m.get("aae"),
            "sdae": m.get("sdae"),
        }


def load_inputs(config):
    """Return ``(frame1, frame2, gt)`` as arrays / FlowField (gt may be None)."""
    if config.frames is None:
        circles = default_circles(config.phantom_size, config.phantom_shift, config.phantom_edge_width)
        f1, f2, gt = make_phantom_pair(config.phantom_size, circles)
        return f1.values, f2.values, gt
    f1 = load_grayscale(config.frames[0]).values
    f2 = load_grayscale(config.frames[1]).values
    if f1.shape != f2.shape:
        raise ValueError(f"frames differ in size: {f1.shape} vs {f2.shape}")
    gt = read_flo(config.gt) if config.gt else None
    if gt is not None and gt.shape != f1.shape:
        raise ValueError(f"ground truth {gt.shape} does not match frames {f1.shape}")
    return f1, f2, gt


def _copy_norms(model):
    return {name: (s.running_mean.copy(), s.running_var.copy()) for name, s in model.norms.items()}


def _copy_adam(state):
    return AdamState(
        state.step_count,
        [m.copy() for m in state.first_moment],
        [v.copy() for v in state.second_moment],
        state.beta1,
        state.beta2,
        state.epsilon,
    )


class Trainer:
    """Owns the model, optimizer state and best-so-far snapshot of one run."""

    def __init__(self, config, inputs=None, checkpoint=None):
        self.config = config
        self.frame1, self.frame2, self.gt = inputs if inputs is not None else load_inputs(config)
        self.pair = Tensor(np.stack([self.frame1, self.frame2])[None])
        self.model = init_model(config.model_config, config.seed)
        self.params = self.model.parameters()
        self.adam = AdamState.for_params(self.params)
        self.epoch = 0
        self.best_loss = math.inf
        self.best_epoch = 0
        self.best = None
        if checkpoint is not None:
            self.restore(checkpoint)

    # -- state ------------------------------------------------------------

    def restore(self, ckpt):
        expected = {name: p.data.shape for name, p in self.model.named_parameters()}
        if list(ckpt.params) != list(expected):
            raise ValueError("checkpoint parameters do not match the model")
        for name, p in self.model.named_parameters():
            if ckpt.params[name].shape != p.data.shape:
                raise ValueError(f"checkpoint shape mismatch for {name}")
            p.data[...] = ckpt.params[name]
            p.zero_grad()
        for name, (mean, var) in ckpt.norms.items():
            self.model.norms[name].running_mean[...] = mean
            self.model.norms[name].running_var[...] = var
        self.adam = _copy_adam(ckpt.adam)
        self.epoch = ckpt.epoch
        self.best_loss = ckpt.best_loss
        self.best_epoch = ckpt.best_epoch

    def checkpoint(self):
        """Current state; resuming from it continues the run exactly."""
        return Checkpoint(
            config=self.config.as_dict(),
            params={name: p.data.copy() for name, p in self.model.named_parameters()},
            norms=_copy_norms(self.model),
            adam=_copy_adam(self.adam),
            best_loss=self.best_loss,
            best_epoch=self.best_epoch,
            epoch=self.epoch,
        )

    def best_checkpoint(self):
        """State at the start of the best epoch (re-running it reproduces the best flow)."""
        if self.best is None:
            return None
        return Checkpoint(
            config=self.config.as_dict(),
            params=self.best["params"],
            norms=self.best["norms"],
            adam=self.best["adam"],
            best_loss=self.best_loss,
            best_epoch=self.best_epoch,
            epoch=self.best_epoch - 1,
        )

    @property
    def best_flow(self):
        return None if self.best is None else self.best["flow"]

    # -- training ---------------------------------------------------------

    def step(self):
        cfg = self.config
        epoch = self.epoch + 1
        norms_before = _copy_norms(self.model)
        flow = predict_flow(self.pair, self.model, cfg.model_config, training=True)
        energy = total_energy(self.frame1, self.frame2, flow, cfg.weights, cfg.loss_normalization)
        values = energy.as_floats()
        loss = values["total_loss"]
        if not math.isfinite(loss):
            raise TrainingDivergedError(epoch, loss)
        record = EpochRecord(epoch=epoch, **values)
        field_out = FlowField.from_tensor(flow)
        if self.gt is not None:
            report = evaluate(field_out, self.gt)
            record.aee, record.sdee = report.aee, report.sdee
            record.aae, record.sdae = report.aae, report.sdae

        energy.total.backward()
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.best = {
                "params": {name: p.data.copy() for name, p in self.model.named_parameters()},
                "norms": norms_before,
                "adam": _copy_adam(self.adam),
                "flow": field_out,
            }
        adam_step(self.params, self.adam, cfg.learning_rate)
        for p in self.params:
            p.zero_grad()
        self.epoch = epoch
        return record


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _write_best_artifacts(trainer, out_dir):
    artifacts = {}
    ckpt = trainer.best_checkpoint()
    if ckpt is None:
        return artifacts
    save_checkpoint(os.path.join(out_dir, "best.ckpt"), ckpt)
    write_flo(os.path.join(out_dir, "flow.flo"), trainer.best_flow)
    save_rgb(os.path.join(out_dir, "flow.png"), flow_to_color(trainer.best_flow))
    artifacts.update({"checkpoint": "best.ckpt", "flow": "flow.flo", "visualization": "flow.png"})
    return artifacts


def run_experiment(config, resume=None):
    """Train for ``config.epochs`` epochs and write the run directory.

    Layout: ``config.json``, ``log.jsonl`` (one record per epoch),
    ``summary.json``, ``best.ckpt``, ``flow.flo``, ``flow.png``. Metrics in
    the summary belong to the best-loss epoch.
    """
    out_dir = config.output_dir
    if out_dir is None:
        raise ValueError("config.output_dir is required")
    os.makedirs(out_dir, exist_ok=True)
    _dump_json(os.path.join(out_dir, "config.json"), config.as_dict())

    checkpoint = load_checkpoint(resume) if isinstance(resume, (str, os.PathLike)) else resume
    trainer = Trainer(config, checkpoint=checkpoint)
    initial_loss = None
    log_path = os.path.join(out_dir, "log.jsonl")
    mode = "a" if checkpoint is not None else "w"
    try:
        with open(log_path, mode) as log:
            while trainer.epoch < config.epochs:
                record = trainer.step()
                if initial_loss is None:
                    initial_loss = record.total_loss
                log.write(json.dumps(record.as_dict()) + "\n")
                if config.log_every and (record.epoch % config.log_every == 0 or record.epoch == 1):
                    logger.info("epoch %d loss %.6e best %.6e", record.epoch, record.total_loss, trainer.best_loss)
    except TrainingDivergedError as exc:
        artifacts = _write_best_artifacts(trainer, out_dir)
        summary = RunSummary(
            config.benchmark, config.lambda_tv, trainer.best_loss, trainer.best_epoch,
            initial_loss, trainer.epoch, None, artifacts, status=f"diverged at epoch {exc.epoch}",
        )
        _dump_json(os.path.join(out_dir, "summary.json"), summary.as_dict())
        raise

    artifacts = _write_best_artifacts(trainer, out_dir)
    metrics = None
    if trainer.gt is not None:
        metrics = evaluate(trainer.best_flow, trainer.gt).as_dict()
    artifacts.update({"config": "config.json", "log": "log.jsonl", "summary": "summary.json"})
    summary = RunSummary(
        config.benchmark, config.lambda_tv, trainer.best_loss, trainer.best_epoch,
        initial_loss, trainer.epoch, metrics, artifacts,
    )
    _dump_json(os.path.join(out_dir, "summary.json"), summary.as_dict())
    return summary


def _format_lambda(value):
    return repr(float(value)).replace("+", "")


def sweep(configs, output_dir=None):
    """Run configs one after another and collect one results row per run.

    A failing run is recorded with its error and does not stop the others.
    Writes ``results.csv`` and ``results.json`` into ``output_dir`` when given.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("sweep needs at least one configuration")
    rows = []
    summaries = []
    for config in configs:
        try:
            summary = run_experiment(config)
            row = summary.table_row()
            row["status"] = "ok"
            summaries.append(summary)
        except Exception as exc:  # one bad run must not abort the sweep
            logger.error("run %s (lambda_tv=%s) failed: %s", config.benchmark, config.lambda_tv, exc)
            row = {c: None for c in TABLE_COLUMNS}
            row.update(benchmark=config.benchmark, lambda_tv=config.lambda_tv, status=f"error: {exc}")
        row["run_dir"] = os.path.basename(os.path.normpath(config.output_dir)) if config.output_dir else None
        rows.append(row)
        # release per-run model state before the next configuration
        gc.collect()

    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        with open(os.path.join(output_dir, "results.csv"), "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(TABLE_COLUMNS) + ["status", "run_dir"])
            writer.writeheader()
            writer.writerows(rows)
        _dump_json(os.path.join(output_dir, "results.json"), rows)
    return rows


def sweep_configs(base, lambda_values, output_dir):
    """One config per lambda_tv, each in its own subdirectory of ``output_dir``."""
    lambda_values = list(lambda_values)
    if not lambda_values:
        raise ValueError("sweep needs at least one lambda_tv value")
    configs = []
    for lam in lambda_values:
        params = base.as_dict()
        params.update(lambda_tv=float(lam))
        cfg = ExperimentConfig.from_dict(params)
        cfg.output_dir = os.path.join(output_dir, f"{cfg.benchmark}_tv{_format_lambda(lam)}")
        configs.append(cfg)
    return configs
