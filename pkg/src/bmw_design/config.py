"""Config-document and scenario-file handling.

A single JSON document carries the design, grid, seed, and optional
scenario sections; it is validated against the published schema in
schema/config.schema.json before any computation. Tie probabilities and
the alternative log win ratio can be given explicitly or derived from a
scenario's marginal rates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .calibration import DesignSpec, GridSpec, ToxSpec
from .inference import AnalysisSchedule, NormalPrior
from .trialsim import TruthLabels
from .winratio import ScenarioTruth, theoretical_wlt

__all__ = [
    "ConfigError",
    "load_config",
    "parse_config",
    "parse_scenarios",
    "load_scenarios",
    "config_schema",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration document; message carries field context."""


def config_schema() -> dict:
    text = resources.files("bmw_design").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def _grid_axis(node) -> tuple[float, ...]:
    if isinstance(node, list):
        return tuple(float(v) for v in node)
    start, stop, step = node["start"], node["stop"], node["step"]
    values = []
    v = start
    while v <= stop + 1e-12:
        values.append(round(v, 10))
        v += step
    return tuple(values)


def parse_scenario(node: dict) -> tuple[str, ScenarioTruth, TruthLabels]:
    truth = ScenarioTruth(
        q_e0=tuple(node["q_e0"]),
        q_e1=tuple(node["q_e1"]),
        q_t0=node.get("q_t0", 0.3),
        q_t1=node.get("q_t1", 0.3),
        rho_ee=node.get("rho_ee", 0.25),
        rho_et=node.get("rho_et", 0.2),
        rho_e2t=node.get("rho_e2t"),
    )
    labels = TruthLabels(
        efficacy_null=bool(node["efficacy_null"]),
        toxicity_null=bool(node["toxicity_null"]),
    )
    return str(node["id"]), truth, labels


def parse_scenarios(doc: dict) -> list[tuple[str, ScenarioTruth, TruthLabels]]:
    return [parse_scenario(node) for node in doc["scenarios"]]


def load_scenarios(path) -> list[tuple[str, ScenarioTruth, TruthLabels]]:
    with open(path) as fh:
        doc = json.load(fh)
    full = config_schema()
    schema = {"$ref": "#/$defs/scenario_file", "$defs": full["$defs"]}
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"{path}: {_describe(err)}") from err
    return parse_scenarios(doc)


def _describe(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"at {where}: {err.message}"


def parse_config(doc: dict) -> DesignSpec:
    """Validate and convert a config document into a DesignSpec."""
    try:
        jsonschema.validate(doc, config_schema())
    except jsonschema.ValidationError as err:
        raise ConfigError(_describe(err)) from err
    design = doc["design"]
    schedule = AnalysisSchedule(tuple(design["schedule"]), design.get("phi", 0.5))
    prior_node = design.get("prior", {})
    prior = NormalPrior(prior_node.get("mean", 0.0), prior_node.get("variance", 100.0))

    if "targets_from_scenario" in design:
        t = design["targets_from_scenario"]
        rho = t.get("rho_ee", 0.25)
        base = dict(q_t0=0.3, q_t1=0.3, rho_ee=rho)
        _, _, p_t_null, _ = theoretical_wlt(
            ScenarioTruth(tuple(t["q_e0"]), tuple(t["q_e1_null"]), **base))
        _, _, p_t_alt, theta_alt = theoretical_wlt(
            ScenarioTruth(tuple(t["q_e0"]), tuple(t["q_e1_alt"]), **base))
    else:
        for key in ("theta_alt", "p_t_null", "p_t_alt"):
            if key not in design:
                raise ConfigError(f"design.{key} is required unless "
                                  "design.targets_from_scenario is given")
        theta_alt = design["theta_alt"]
        p_t_null = design["p_t_null"]
        p_t_alt = design["p_t_alt"]

    tox = None
    if "toxicity" in design:
        t = design["toxicity"]
        tox = ToxSpec(t["delta"], t["q_t0_null"], t["q_t1_alt"],
                      t.get("prior_a", 1.0), t.get("prior_b", 1.0))

    grid_node = doc.get("grid", {})
    grid_kwargs = {}
    if "lambdas" in grid_node:
        grid_kwargs["lambdas"] = _grid_axis(grid_node["lambdas"])
    if "gammas" in grid_node:
        grid_kwargs["gammas"] = _grid_axis(grid_node["gammas"])
    grid = GridSpec(**grid_kwargs)

    try:
        return DesignSpec(
            alpha=design["alpha"],
            schedule=schedule,
            theta_alt=theta_alt,
            p_t_null=p_t_null,
            p_t_alt=p_t_alt,
            prior=prior,
            n_paths=design.get("n_paths", 5000),
            tox=tox,
            grid=grid,
            seed=doc.get("seeds", {}).get("master", 0),
            futility_only=design.get("futility_only", False),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def load_config(path) -> DesignSpec:
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: line {err.lineno}: {err.msg}") from err
    try:
        return parse_config(doc)
    except ConfigError as err:
        raise ConfigError(f"{path}: {err}") from err


def load_config_doc(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
