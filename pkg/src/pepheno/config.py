"""Pipeline configuration: a YAML file that round-trips losslessly and
content-addresses the stage outputs.

The config hash covers every semantic knob plus the content of the input
files, so identical configs (and inputs) name identical stage files. Runtime
knobs like worker count deliberately stay out of it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .identifier import IdentifierMode
from .metrics import CiMethod
from .sections import SectionKind

DEFAULT_SCAN_SCOPE = ("Findings", "Impression", "Other")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "baseline"  # "baseline" | "external"
    transport: str = "http"  # "http" | "pipe" (external only)
    endpoint: str | None = None
    command: tuple[str, ...] | None = None
    batch_size: int = 64
    timeout: float = 30.0
    retries: int = 2
    window: int = 32

    def __post_init__(self) -> None:
        if self.kind not in ("baseline", "external"):
            raise ConfigError(f"classifier.kind must be baseline|external, got {self.kind!r}")
        if self.kind == "external":
            if self.transport not in ("http", "pipe"):
                raise ConfigError(f"classifier.transport must be http|pipe, got {self.transport!r}")
            if self.transport == "http" and not self.endpoint:
                raise ConfigError("classifier.endpoint required for http transport")
            if self.transport == "pipe" and not self.command:
                raise ConfigError("classifier.command required for pipe transport")

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "external":
            d["transport"] = self.transport
            if self.endpoint:
                d["endpoint"] = self.endpoint
            if self.command:
                d["command"] = list(self.command)
            d["batch_size"] = self.batch_size
            d["timeout"] = self.timeout
            d["retries"] = self.retries
            d["window"] = self.window
        return d

    @classmethod
    def from_dict(cls, data: dict | str | None) -> "ClassifierConfig":
        if data is None:
            return cls()
        if isinstance(data, str):
            return cls(kind=data)
        command = data.get("command")
        return cls(
            kind=data.get("kind", "baseline"),
            transport=data.get("transport", "http"),
            endpoint=data.get("endpoint"),
            command=tuple(command) if command else None,
            batch_size=int(data.get("batch_size", 64)),
            timeout=float(data.get("timeout", 30.0)),
            retries=int(data.get("retries", 2)),
            window=int(data.get("window", 32)),
        )


@dataclass(frozen=True)
class PipelineConfig:
    reports: str
    output_dir: str
    icd: str | None = None
    terms: str | None = None  # None -> packaged default term table
    identifier_mode: IdentifierMode = IdentifierMode.UNION
    scan_scope: tuple[str, ...] = DEFAULT_SCAN_SCOPE
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    ci_method: CiMethod = CiMethod.WILSON

    def __post_init__(self) -> None:
        for kind in self.scan_scope:
            try:
                SectionKind(kind)
            except ValueError:
                raise ConfigError(f"unknown section kind in scan_scope: {kind!r}") from None

    def scope_kinds(self) -> frozenset[SectionKind]:
        return frozenset(SectionKind(k) for k in self.scan_scope)

    def to_dict(self) -> dict:
        return {
            "reports": self.reports,
            "icd": self.icd,
            "terms": self.terms,
            "identifier_mode": self.identifier_mode.value,
            "scan_scope": list(self.scan_scope),
            "classifier": self.classifier.to_dict(),
            "ci_method": self.ci_method.value,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        try:
            reports = data["reports"]
            output_dir = data["output_dir"]
        except KeyError as exc:
            raise ConfigError(f"config missing required key {exc}") from None
        return cls(
            reports=str(reports),
            output_dir=str(output_dir),
            icd=data.get("icd"),
            terms=data.get("terms"),
            identifier_mode=IdentifierMode(data.get("identifier_mode", "Union")),
            scan_scope=tuple(data.get("scan_scope", DEFAULT_SCAN_SCOPE)),
            classifier=ClassifierConfig.from_dict(data.get("classifier")),
            ci_method=CiMethod(data.get("ci_method", "wilson")),
        )


def load_config(path: str | Path) -> PipelineConfig:
    try:
        data = yaml.safe_load(Path(path).read_text("utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from None
    return PipelineConfig.from_dict(data)


def dump_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(
        yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False),
        encoding="utf-8",
    )


def _file_digest(path: str | Path | None) -> str:
    if path is None:
        return "-"
    p = Path(path)
    if not p.exists():
        return "missing"
    return hashlib.sha256(p.read_bytes()).hexdigest()


def config_hash(config: PipelineConfig) -> str:
    """12-hex content address covering the semantic config and the input file
    contents. output_dir and runtime knobs (worker count) stay out, so the
    same pipeline writes the same filenames wherever it lands.
    """
    semantic = config.to_dict()
    semantic.pop("output_dir")
    payload = {
        "config": semantic,
        "inputs": {
            "reports": _file_digest(config.reports),
            "icd": _file_digest(config.icd),
            "terms": _file_digest(config.terms),
        },
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def stage_path(config: PipelineConfig, stage: str, suffix: str = "jsonl") -> Path:
    return Path(config.output_dir) / f"{stage}-{config_hash(config)}.{suffix}"
