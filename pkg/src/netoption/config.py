"""Experiment configuration: one JSON document, parsed into dataclasses.

Example (the bundled ``diamond.json``)::

    {
      "topology": {"nodes": ["A", "B", "C", "D"],
                   "links": [["B", "A"], ["A", "C"], ["B", "D"], ["D", "C"]]},
      "query": {"src": "B", "dst": "C", "max_hops": 8},
      "resources": [{"name": "A", "s0": 1.0, "sigma": 0.2}, ...],
      "rho": 0.3,
      "contract": {"K": 3.0, "T1": 1.0, "T2": 2.0, "r": 0.05},
      "mc": {"n_samples": 1000000, "seed": 0, "chunk_size": 65536}
    }

``rho`` is either a full matrix or one number used for every off-diagonal
entry. ``incidence`` (``{"v": [[...]], "paths": [[...]]}``) may replace
``topology`` + ``query``; its columns follow the order of ``resources``.
The ``hedge`` section names one resource and holds the experiment settings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .hedging import HedgeConfig
from .network import DEFAULT_MAX_HOPS, IncidenceMatrix, RouteQuery, Topology, enumerate_paths
from .pricing import McConfig, NetworkOptionContract
from .sde import GbmParams, MeanRevParams, validate_correlation

BUNDLED = ("diamond", "hedge")


class ConfigError(ValueError):
    """A config field is missing or invalid; the message starts with the field path."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


@dataclass
class ResourceSpec:
    name: str
    s0: float
    sigma: float
    alpha: Optional[float] = None
    mu: Optional[float] = None


@dataclass
class TopologySpec:
    nodes: list[str]
    links: list[list[str]]


@dataclass
class QuerySpec:
    src: str
    dst: str
    max_hops: int = DEFAULT_MAX_HOPS


@dataclass
class IncidenceSpec:
    v: list[list[float]]
    paths: Optional[list[list[str]]] = None


@dataclass
class ContractSpec:
    K: float
    T1: float
    T2: float
    r: float = 0.0


@dataclass
class McSpec:
    n_samples: int = 10**6
    seed: int = 0
    chunk_size: int = 2**16


@dataclass
class HedgeSpec:
    resource: str
    K: float
    T: float
    process: str = "meanrev"  # "gbm" | "meanrev"
    drift: float = 0.0  # natural drift for "gbm"
    r: float = 0.0
    rebalance_dt: float = 0.1
    sim_dt: float = 1e-3
    n_paths: int = 1000
    use_adjusted_sigma: bool = False


@dataclass
class ExperimentConfig:
    resources: list[ResourceSpec]
    rho: list[list[float]] = field(default_factory=list)
    topology: Optional[TopologySpec] = None
    query: Optional[QuerySpec] = None
    incidence: Optional[IncidenceSpec] = None
    contract: Optional[ContractSpec] = None
    mc: McSpec = field(default_factory=McSpec)
    hedge: Optional[HedgeSpec] = None

    # ------------------------------------------------------------ parsing

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {"resources", "rho", "topology", "query", "incidence", "contract", "mc", "hedge"}
        for key in doc:
            if key not in known:
                raise ConfigError(key, "unknown section")
        raw_resources = _require(doc, "resources", list)
        resources = [
            _build(ResourceSpec, item, f"resources[{k}]") for k, item in enumerate(raw_resources)
        ]
        cfg = cls(
            resources=resources,
            rho=_parse_rho(doc.get("rho", 0.0), len(resources)),
            topology=_optional(TopologySpec, doc, "topology"),
            query=_optional(QuerySpec, doc, "query"),
            incidence=_optional(IncidenceSpec, doc, "incidence"),
            contract=_optional(ContractSpec, doc, "contract"),
            mc=_optional(McSpec, doc, "mc") or McSpec(),
            hedge=_optional(HedgeSpec, doc, "hedge"),
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = {"resources": [_drop_none(asdict(r)) for r in self.resources], "rho": self.rho}
        for name in ("topology", "query", "incidence", "contract", "mc", "hedge"):
            value = getattr(self, name)
            if value is not None:
                out[name] = _drop_none(asdict(value))
        return out

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    # ------------------------------------------------------------ validation

    def validate(self) -> None:
        names = [r.name for r in self.resources]
        if not names:
            raise ConfigError("resources", "at least one resource is required")
        if len(set(names)) != len(names):
            raise ConfigError("resources", "resource names must be unique")
        for k, r in enumerate(self.resources):
            try:
                GbmParams(r.s0, sigma=r.sigma)
            except ValueError as exc:
                raise ConfigError(f"resources[{k}]", str(exc)) from None
        try:
            validate_correlation(self.rho)
        except ValueError as exc:
            raise ConfigError("rho", str(exc)) from None
        if self.topology is not None:
            try:
                topo = self.build_topology()
            except ValueError as exc:
                raise ConfigError("topology", str(exc)) from None
            missing = [n for n in topo.nodes if n not in names]
            if missing:
                raise ConfigError("topology.nodes", f"no resource named {missing[0]!r}")
            if self.query is None:
                raise ConfigError("query", "required with a topology")
            try:
                self.build_query().validate(topo)
            except ValueError as exc:
                raise ConfigError("query", str(exc)) from None
        if self.incidence is not None:
            try:
                self._incidence_from_spec()
            except ValueError as exc:
                raise ConfigError("incidence", str(exc)) from None
        if self.contract is not None:
            c = self.contract
            if not 0 <= c.T1 < c.T2:
                raise ConfigError("contract.T1", f"need 0 <= T1 < T2, got T1={c.T1}, T2={c.T2}")
            if not c.K >= 0:
                raise ConfigError("contract.K", f"must be >= 0, got {c.K}")
        try:
            self.build_mc()
        except ValueError as exc:
            raise ConfigError("mc", str(exc)) from None
        if self.hedge is not None:
            if self.hedge.resource not in names:
                raise ConfigError("hedge.resource", f"no resource named {self.hedge.resource!r}")
            if self.hedge.process not in ("gbm", "meanrev"):
                raise ConfigError("hedge.process", f"expected 'gbm' or 'meanrev', got {self.hedge.process!r}")
            try:
                self.build_hedge()
            except (TypeError, ValueError) as exc:
                raise ConfigError("hedge", str(exc)) from None

    # ------------------------------------------------------------ builders

    def require(self, *sections: str) -> None:
        for name in sections:
            if getattr(self, name) is None:
                raise ConfigError(name, "section is required for this command")

    def build_topology(self) -> Topology:
        return Topology(tuple(self.topology.nodes), tuple(tuple(l) for l in self.topology.links))

    def build_query(self) -> RouteQuery:
        return RouteQuery(self.query.src, self.query.dst, self.query.max_hops)

    def _incidence_from_spec(self) -> IncidenceMatrix:
        names = tuple(r.name for r in self.resources)
        paths = self.incidence.paths
        return IncidenceMatrix(np.array(self.incidence.v, dtype=float), names, tuple(map(tuple, paths or ())))

    def build_incidence(self) -> IncidenceMatrix:
        """Incidence over ``resources`` order; enumerated from the topology when given."""
        if self.incidence is not None:
            return self._incidence_from_spec()
        if self.topology is None:
            raise ConfigError("topology", "either topology+query or incidence is required")
        raw = enumerate_paths(self.build_topology(), self.build_query())
        names = tuple(r.name for r in self.resources)
        v = np.zeros((raw.M, len(names)))
        for k, node in enumerate(raw.resources):
            v[:, names.index(node)] = raw.v[:, k]
        return IncidenceMatrix(v, names, raw.path_labels)

    def build_contract(self) -> NetworkOptionContract:
        self.require("contract")
        c = self.contract
        return NetworkOptionContract(
            tuple(GbmParams(r.s0, sigma=r.sigma) for r in self.resources),
            np.array(self.rho),
            self.build_incidence(),
            c.K,
            c.T1,
            c.T2,
            c.r,
        )

    def build_mc(self) -> McConfig:
        return McConfig(self.mc.n_samples, self.mc.seed, self.mc.chunk_size)

    def build_hedge(self) -> HedgeConfig:
        self.require("hedge")
        h = self.hedge
        res = next(r for r in self.resources if r.name == h.resource)
        if h.process == "gbm":
            process = GbmParams(res.s0, mu=h.drift, sigma=res.sigma)
        else:
            if res.alpha is None or res.mu is None:
                raise ValueError(f"resource {res.name!r} needs alpha and mu for a mean-reverting hedge")
            process = MeanRevParams(res.s0, alpha=res.alpha, mu=res.mu, sigma=res.sigma)
        return HedgeConfig(
            process,
            K=h.K,
            T=h.T,
            r=h.r,
            rebalance_dt=h.rebalance_dt,
            sim_dt=h.sim_dt,
            use_adjusted_sigma=h.use_adjusted_sigma,
            n_paths=h.n_paths,
            seed=self.mc.seed,
        )


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def _require(doc: dict, key: str, kind):
    if key not in doc:
        raise ConfigError(key, "missing")
    if not isinstance(doc[key], kind):
        raise ConfigError(key, f"expected {kind.__name__}")
    return doc[key]


_NUMERIC = {"float": float, "int": int, "Optional[float]": float}


def _build(cls, item: Any, path: str):
    if not isinstance(item, dict):
        raise ConfigError(path, "expected an object")
    fields = cls.__dataclass_fields__
    for key in item:
        if key not in fields:
            raise ConfigError(f"{path}.{key}", "unknown field")
    kwargs = {}
    for name, f in fields.items():
        if name not in item:
            continue
        value = item[name]
        kind = _NUMERIC.get(str(f.type))
        if kind is not None and value is not None:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{path}.{name}", f"expected a number, got {value!r}")
            if kind is int and not float(value).is_integer():
                raise ConfigError(f"{path}.{name}", f"expected an integer, got {value!r}")
            value = kind(value)
        elif str(f.type) == "bool" and not isinstance(value, bool):
            raise ConfigError(f"{path}.{name}", f"expected true/false, got {value!r}")
        elif str(f.type) == "str" and not isinstance(value, str):
            raise ConfigError(f"{path}.{name}", f"expected a string, got {value!r}")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        missing = [n for n, f in fields.items() if n not in kwargs and f.default is f.default_factory]
        raise ConfigError(f"{path}.{missing[0]}" if missing else path, "missing") from exc


def _optional(cls, doc: dict, key: str):
    if doc.get(key) is None:
        return None
    return _build(cls, doc[key], key)


def _parse_rho(raw, n: int) -> list[list[float]]:
    if isinstance(raw, bool):
        raise ConfigError("rho", "expected a number or a matrix")
    if isinstance(raw, (int, float)):
        D = np.full((n, n), float(raw))
        np.fill_diagonal(D, 1.0)
        return D.tolist()
    try:
        D = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("rho", "expected a number or a matrix") from None
    if D.shape != (n, n):
        raise ConfigError("rho", f"expected a {n}x{n} matrix, got shape {D.shape}")
    return D.tolist()


def load_config(source: str | Path) -> ExperimentConfig:
    """Parse a config file, or one of the bundled names ``diamond`` / ``hedge``."""
    source = str(source)
    if source in BUNDLED:
        text = importlib_resources.files("netoption.configs").joinpath(f"{source}.json").read_text()
        where = f"<bundled {source}>"
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {source}: {exc.strerror}") from None
        where = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"{where} is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(doc)
