"""Service configuration: listen address, provider selection, asset paths."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .assets import DOMAINS, default_paths


@dataclass
class ProviderConfig:
    kind: str = "oracle"  # oracle | remote
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "STEPCHEF_API_KEY"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    transcript_dir: Path = Path("./transcripts")
    domain_paths: dict = field(default_factory=dict)  # domain -> {name: Path}
    console_dir: Path | None = None

    def paths_for(self, domain: str) -> dict:
        resolved = default_paths(domain)
        resolved.update(self.domain_paths.get(domain, {}))
        return resolved


def load_service_config(path: str | Path) -> ServiceConfig:
    """Load and validate a YAML service config; asset paths must exist."""
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    base = path.parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    listen = raw.get("listen", {})
    provider_raw = raw.get("provider", {})
    provider = ProviderConfig(
        kind=provider_raw.get("kind", "oracle"),
        endpoint=provider_raw.get("endpoint", ""),
        model=provider_raw.get("model", ""),
        api_key_env=provider_raw.get("api_key_env", "STEPCHEF_API_KEY"),
    )
    if provider.kind not in ("oracle", "remote"):
        raise ValueError(f"unknown provider kind {provider.kind!r}")
    if provider.kind == "remote" and not provider.endpoint:
        raise ValueError("remote provider requires an endpoint")

    domain_paths: dict = {}
    for domain, entries in (raw.get("domains") or {}).items():
        if domain not in DOMAINS:
            raise ValueError(f"unknown domain {domain!r} in config")
        keys = {"guidelines", "lexicon", "skills", "world"}
        domain_paths[domain] = {k: resolve(v) for k, v in (entries or {}).items() if k in keys}
    if "calibration" in raw:
        for domain in DOMAINS:
            domain_paths.setdefault(domain, {})["calibration"] = resolve(raw["calibration"])

    config = ServiceConfig(
        host=listen.get("host", "127.0.0.1"),
        port=int(listen.get("port", 8080)),
        provider=provider,
        transcript_dir=resolve(raw.get("transcript_dir", "./transcripts")),
        domain_paths=domain_paths,
        console_dir=resolve(raw["console_dir"]) if raw.get("console_dir") else None,
    )

    for domain in DOMAINS:
        for name, asset_path in config.paths_for(domain).items():
            if not Path(asset_path).exists():
                raise FileNotFoundError(f"{domain} {name} path does not exist: {asset_path}")
    if config.console_dir is not None and not config.console_dir.exists():
        raise FileNotFoundError(f"console_dir does not exist: {config.console_dir}")
    return config
