"""Suite configuration: JSON in, validated objects out.

Rationals are strings "p/q" (plain integers are accepted too).  A model is
either a preset name or a mapping with "sites", "n" and either "M" or
"edges" + "mass2".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from gmpy2 import mpq

from .deform import Deformation, FreeModel, twist
from .galg import Scalar, _q
from .rg import Kernel, RenMap

__all__ = ["ConfigError", "SuiteConfig", "load_config", "parse_config", "model_from_json", "PRESETS", "resolve_model",
           "renmap_from_json"]

SUITE_NAMES = ("galg", "deform", "sym", "rg", "bv", "gauge", "cocycle")


class ConfigError(ValueError):
    pass


PRESETS = {
    "M1": {"sites": [0], "n": 1, "M": [["1"]]},
    "M2": {"sites": [0, 1], "n": 1, "edges": [[0, 1]], "mass2": "1"},
    "P2": {"sites": [0, 1], "n": 2, "edges": [[0, 1]], "mass2": "1"},
    "G1": {"sites": [0, 1, 2, 3], "n": 2, "edges": [[0, 1], [1, 2], [2, 3]], "mass2": "1"},
    "G3": {"sites": [0, 1, 2], "n": 3, "edges": [[0, 1], [1, 2]], "mass2": "1"},
}

# twists used when a config names none; each hits a site every preset has
DEFAULT_TWIST = [{"order": 2, "site": 0, "comps": [0, 0], "coeff": "1/3"},
                 {"order": 4, "site": 0, "comps": [0, 0, 0, 0], "coeff": "1/5"}]


def _rat(x, what) -> mpq:
    try:
        return _q(x)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise ConfigError(f"{what}: cannot parse {x!r} as a rational") from e


MODEL_DIR = Path(__file__).parent / "models"


def resolve_model(ref: str):
    """A model reference: a JSON file path, a shipped model file name, or a preset name.

    A file may hold a bare model or a whole suite config (its "model" is used).
    """
    for p in (Path(ref), MODEL_DIR / ref, MODEL_DIR / f"{ref.lower()}.json"):
        if p.is_file():
            try:
                data = json.loads(p.read_text())
            except json.JSONDecodeError as e:
                raise ConfigError(f"{p}: invalid JSON ({e})") from e
            if isinstance(data, dict) and "model" in data:
                data = data["model"]
            if isinstance(data, str):
                return resolve_model(data)
            if not isinstance(data, dict) or "sites" not in data:
                raise ConfigError(f"{p} holds neither a model nor a suite config")
            return data
    if ref in PRESETS:
        return {"name": ref, **PRESETS[ref]}
    if ref.endswith(".json"):
        raise ConfigError(f"no such model file: {ref}")
    raise ConfigError(f"unknown model {ref!r} (presets: {', '.join(PRESETS)})")


def model_from_json(spec, name: str = "") -> FreeModel:
    if isinstance(spec, str):
        spec = resolve_model(spec)
    if not isinstance(spec, dict):
        raise ConfigError("model must be a preset name or an object")
    try:
        sites = [int(s) for s in spec["sites"]]
        n = int(spec["n"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"model needs integer 'sites' and 'n': {e}") from e
    name = spec.get("name", name)
    edges = [tuple(int(v) for v in e) for e in spec.get("edges", [])]
    try:
        if "M" in spec:
            M = [[_rat(v, "M entry") for v in row] for row in spec["M"]]
            return FreeModel(sites, n, M, edges=edges, mass2=spec.get("mass2"), name=name)
        if "mass2" not in spec:
            raise ConfigError("model needs 'M' or 'edges' + 'mass2'")
        return FreeModel.from_graph(sites, n, edges, _rat(spec["mass2"], "mass2"), name=name)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"invalid model: {e}") from e


def renmap_from_json(items) -> RenMap:
    ks = []
    for k in items or []:
        try:
            c = k["coeff"]
            coeff = Scalar(_rat(c["re"], "coeff"), _rat(c.get("im", 0), "coeff")) if isinstance(c, dict) \
                else Scalar(_rat(c, "coeff"))
            ks.append(Kernel(int(k["order"]), int(k["site"]), tuple(int(a) for a in k["comps"]), coeff))
        except (KeyError, TypeError) as e:
            raise ConfigError(f"twist kernel needs order, site, comps, coeff: {e}") from e
        except ValueError as e:
            raise ConfigError(f"invalid twist kernel: {e}") from e
    return RenMap(ks)


@dataclass
class SuiteConfig:
    name: str
    model: FreeModel
    K: int = 3
    K_lam: int = 3
    K_mu: int = 3
    degree: int = 4
    twist: RenMap = field(default_factory=RenMap)
    seed: int = 0
    suites: tuple = ("all",)
    trials: int = 20
    gauge: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def contexts(self, model: FreeModel | None = None) -> list[Deformation]:
        """Untwisted and twisted contexts; kernels off the model's sites are dropped."""
        m = model or self.model
        ks = [k for k in self.twist.kernels if k.site in m.sites and max(k.comps) < m.n]
        return [Deformation(m), twist(m, RenMap(ks))]

    def selected(self) -> tuple:
        out = []
        for s in self.suites:
            out.extend(SUITE_NAMES if s == "all" else [s])
        return tuple(dict.fromkeys(out))


def _cap(raw, key, default):
    v = raw.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(f"cap {key!r} must be an integer >= 1")
    return v


def parse_config(raw: dict[str, Any], name: str = "config") -> SuiteConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "model" not in raw:
        raise ConfigError("config has no 'model'")
    model = model_from_json(raw["model"], raw.get("name", name))
    caps = raw.get("caps", {})
    if not isinstance(caps, dict):
        raise ConfigError("'caps' must be an object")
    suites = raw.get("suites", ["all"])
    if isinstance(suites, str):
        suites = [suites]
    for s in suites:
        if s != "all" and s not in SUITE_NAMES:
            raise ConfigError(f"unknown suite {s!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    gauge = raw.get("gauge", {})
    if not isinstance(gauge, dict):
        raise ConfigError("'gauge' must be an object")
    return SuiteConfig(
        name=raw.get("name", name), model=model,
        K=_cap(caps, "K", 3), K_lam=_cap(caps, "K_lam", 3), K_mu=_cap(caps, "K_mu", 3),
        degree=_cap(caps, "degree", 4),
        twist=renmap_from_json(raw.get("twist", DEFAULT_TWIST)),
        seed=seed, suites=tuple(suites), trials=_cap(raw, "trials", 20), gauge=gauge, raw=raw,
    )


def load_config(path) -> SuiteConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"no such config file: {p}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from e
    return parse_config(raw, p.stem)
