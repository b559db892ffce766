import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from core.cli.scenario import DEFAULT_SCENARIO, ScenarioConfig, deep_merge, scenario_from_mapping
from core.config import load_yaml_mapping
from core.errors import ConfigurationError


logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).resolve().with_name("presets.yaml")


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    defaults: Mapping[str, Any]
    series: Tuple[Mapping[str, Any], ...]


def _parse_preset(name: str, body: Any) -> Preset:
    if not isinstance(body, Mapping):
        raise ConfigurationError(f"预设 {name}: 需要映射结构")
    series = body.get("series") or []
    if not isinstance(series, list) or not series:
        raise ConfigurationError(f"预设 {name}: series 必须是非空列表")
    return Preset(
        name=name,
        description=str(body.get("description", "")),
        defaults=dict(body.get("defaults") or {}),
        series=tuple(dict(s) for s in series),
    )


@lru_cache(maxsize=4)
def load_presets(path: Path = PRESETS_PATH) -> Dict[str, Preset]:
    data = load_yaml_mapping(Path(path))
    return {name: _parse_preset(name, body) for name, body in data.items()}


def list_presets(path: Path = PRESETS_PATH) -> List[Preset]:
    return list(load_presets(path).values())


def preset_mappings(name: str, overrides: Optional[Mapping[str, Any]] = None,
                    path: Path = PRESETS_PATH) -> List[Dict[str, Any]]:
    presets = load_presets(path)
    if name not in presets:
        raise ConfigurationError(f"未知预设 {name}，可选: {', '.join(presets)}")
    preset = presets[name]
    mappings = []
    for index, series in enumerate(preset.series):
        merged = deep_merge(preset.defaults, series)
        merged["name"] = f"{name}/{series.get('name', index)}"
        mappings.append(deep_merge(merged, overrides or {}))
    return mappings


def preset_scenarios(name: str, overrides: Optional[Mapping[str, Any]] = None,
                     defaults: Optional[Mapping[str, Any]] = None,
                     path: Path = PRESETS_PATH) -> List[ScenarioConfig]:
    """预设 → 逐条序列的 ScenarioConfig，命令行显式给出的字段覆盖预设"""
    base = defaults if defaults is not None else DEFAULT_SCENARIO
    configs = [scenario_from_mapping(m, base) for m in preset_mappings(name, overrides, path)]
    logger.info("预设 %s: %d 条序列", name, len(configs))
    return configs
