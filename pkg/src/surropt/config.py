"""Experiment configuration: a single versioned JSON file.

Unknown keys are rejected at every level so a typo in a hyperparameter name
fails loudly instead of silently using a default.  Every error message names
the offending field.
"""

from __future__ import annotations

import json

import numpy as np

from .demand import HospitalDemandConfig, ZinbParams
from .errors import ConfigError
from .learners.gbdt import GbdtParams
from .learners.ridge import DEFAULT_LAMBDAS
from .losses import LossSpec
from .pipeline import ExperimentConfig, LearnerSpec
from .simulate import CostParams, InventoryState
from .two_stage import SaaConfig

CONFIG_VERSION = 1

_TOP_KEYS = {
    "version",
    "seed",
    "horizon_days",
    "rollout_days",
    "train_fraction",
    "max_age",
    "issuing",
    "hospitals",
    "costs",
    "saa",
    "learner",
    "initial_inventory",
}
_HOSPITAL_KEYS = {"id", "pi", "r", "p"}
_COST_KEYS = {"holding", "ordering", "transship_unit", "shortage", "outdate"}
_SAA_KEYS = {"scenario_count", "rounding", "form"}
_LEARNER_KEYS = {"kind", "loss", "delta", "folds", "gbdt", "ridge_lambdas", "svr"}
_GBDT_KEYS = {
    "eta",
    "max_depth",
    "min_child_weight",
    "subsample",
    "colsample_bytree",
    "n_iterations",
    "l1",
    "l2",
    "max_bins",
}
_SVR_KEYS = {"C", "gamma", "epsilon"}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return obj[key]


def parse_config(obj: dict, where: str = "config") -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: must be a JSON object")
    _reject_unknown(obj, _TOP_KEYS, where)
    version = obj.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"{where}.version: unsupported version {version}")

    hospitals = _require(obj, "hospitals", where)
    if not isinstance(hospitals, list) or not hospitals:
        raise ConfigError(f"{where}.hospitals: must be a nonempty list")
    demand_configs = []
    for k, entry in enumerate(hospitals):
        loc = f"{where}.hospitals[{k}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{loc}: must be an object")
        _reject_unknown(entry, _HOSPITAL_KEYS, loc)
        for fieldname in ("pi", "r", "p"):
            _require(entry, fieldname, loc)
        try:
            params = ZinbParams(float(entry["pi"]), int(entry["r"]), float(entry["p"]))
        except ConfigError as exc:
            raise ConfigError(f"{loc}: {exc}") from None
        demand_configs.append(HospitalDemandConfig(int(entry.get("id", k + 1)), params))

    costs_obj = obj.get("costs", {})
    _reject_unknown(costs_obj, _COST_KEYS, f"{where}.costs")
    costs = CostParams(**{k: float(v) for k, v in costs_obj.items()})

    saa_obj = obj.get("saa", {})
    _reject_unknown(saa_obj, _SAA_KEYS, f"{where}.saa")
    saa = SaaConfig(seed=int(obj.get("seed", 0)), **saa_obj)

    learner_obj = obj.get("learner", {})
    _reject_unknown(learner_obj, _LEARNER_KEYS, f"{where}.learner")
    loss_kind = learner_obj.get("loss", "mse")
    try:
        loss = LossSpec(loss_kind, float(learner_obj.get("delta", 1.0)))
    except ConfigError as exc:
        raise ConfigError(f"{where}.learner.loss: {exc}") from None
    gbdt_obj = learner_obj.get("gbdt", {})
    _reject_unknown(gbdt_obj, _GBDT_KEYS, f"{where}.learner.gbdt")
    try:
        gbdt = GbdtParams(**gbdt_obj)
    except ConfigError as exc:
        raise ConfigError(f"{where}.learner.gbdt: {exc}") from None
    svr_obj = learner_obj.get("svr", {})
    _reject_unknown(svr_obj, _SVR_KEYS, f"{where}.learner.svr")
    svr_c = svr_obj.get("C", 1.0)
    if isinstance(svr_c, list):
        svr_c = tuple(float(c) for c in svr_c)
    else:
        svr_c = float(svr_c)
    lambdas = learner_obj.get("ridge_lambdas", list(DEFAULT_LAMBDAS))
    try:
        learner = LearnerSpec(
            kind=learner_obj.get("kind", "ridge"),
            loss=loss,
            gbdt=gbdt,
            ridge_lambdas=tuple(float(l) for l in lambdas),
            svr_C=svr_c,
            svr_gamma=None if svr_obj.get("gamma") is None else float(svr_obj["gamma"]),
            svr_epsilon=float(svr_obj.get("epsilon", 0.1)),
            folds=int(learner_obj.get("folds", 10)),
        )
    except ConfigError as exc:
        raise ConfigError(f"{where}.learner: {exc}") from None

    max_age = int(obj.get("max_age", 11))
    initial = obj.get("initial_inventory", "empty")
    if initial == "empty":
        state = InventoryState.zeros(len(demand_configs), max_age)
    else:
        grid = np.asarray(initial)
        if grid.shape != (len(demand_configs), max_age):
            raise ConfigError(
                f"{where}.initial_inventory: expected shape "
                f"({len(demand_configs)}, {max_age}), got {grid.shape}"
            )
        state = InventoryState(grid)

    try:
        return ExperimentConfig(
            seed=int(obj.get("seed", 0)),
            horizon_days=int(obj.get("horizon_days", 500)),
            rollout_days=int(obj.get("rollout_days", 200)),
            train_fraction=float(obj.get("train_fraction", 0.9)),
            demand_configs=tuple(demand_configs),
            costs=costs,
            saa=saa,
            learner=learner,
            max_age=max_age,
            initial_state=state,
            issuing=obj.get("issuing", "fifo"),
        )
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(obj, where=str(path))


def config_to_dict(config: ExperimentConfig) -> dict:
    """Canonical dict form, round-trippable through parse_config."""
    return {
        "version": CONFIG_VERSION,
        "seed": config.seed,
        "horizon_days": config.horizon_days,
        "rollout_days": config.rollout_days,
        "train_fraction": config.train_fraction,
        "max_age": config.max_age,
        "issuing": config.issuing,
        "hospitals": [
            {"id": c.hospital_id, "pi": c.params.pi, "r": c.params.r, "p": c.params.p}
            for c in config.demand_configs
        ],
        "costs": config.costs.to_dict(),
        "saa": {
            "scenario_count": config.saa.scenario_count,
            "rounding": config.saa.rounding,
            "form": config.saa.form,
        },
        "learner": {
            "kind": config.learner.kind,
            "loss": config.learner.loss.kind,
            "delta": config.learner.loss.delta,
            "folds": config.learner.folds,
            "gbdt": config.learner.gbdt.to_dict(),
            "ridge_lambdas": list(config.learner.ridge_lambdas),
            "svr": {
                "C": list(config.learner.svr_C)
                if isinstance(config.learner.svr_C, tuple)
                else config.learner.svr_C,
                "gamma": config.learner.svr_gamma,
                "epsilon": config.learner.svr_epsilon,
            },
        },
        "initial_inventory": "empty"
        if config.initial_state.total() == 0
        else config.initial_state.units.tolist(),
    }
