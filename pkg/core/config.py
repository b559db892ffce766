import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Any, Optional

try:
    import yaml
except ImportError as e:
    raise ImportError("缺少必要的依赖包: PyYAML，请运行: pip install -r requirements.txt") from e

from core.errors import ConfigurationError


DEFAULT_CONFIG_PATH = "config.yaml"
EXAMPLE_CONFIG_PATH = Path(__file__).resolve().parents[1] / "config.example.yaml"


@dataclass(frozen=True)
class NumericSettings:
    n_max: int = 128
    truncation_tol: float = 1e-12
    grid_size: int = 1024
    r1_min: float = 1e-8


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-10
    upper_multiple: float = 40.0
    subdivision_limit: int = 200
    max_chunks: int = 5000


def load_yaml_mapping(path: Path) -> Dict[str, Any]:
    """读取 YAML 文件，顶层必须是映射结构"""
    if path.is_dir():
        raise IsADirectoryError(f"配置路径是目录，无法读取: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"YAML 格式错误 ({path}): {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"YAML 格式错误 ({path}): 顶层必须是映射结构")
    return data


class Config:
    """配置管理"""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = config_path
        self.logger = logging.getLogger(__name__)
        self.config = self._load_config()
        self._validate_config()

    def _load_config(self) -> Dict[str, Any]:
        if self.config_path is not None:
            path = Path(self.config_path)
            if not path.exists():
                raise FileNotFoundError(f"配置文件不存在: {self.config_path}")
            return load_yaml_mapping(path)

        path = Path(DEFAULT_CONFIG_PATH)
        if path.exists() and path.stat().st_size > 0:
            return load_yaml_mapping(path)

        if EXAMPLE_CONFIG_PATH.exists():
            self.logger.info("未找到配置文件 %s，使用示例配置 %s", path, EXAMPLE_CONFIG_PATH)
            return load_yaml_mapping(EXAMPLE_CONFIG_PATH)

        self.logger.info("未找到任何配置文件，使用内置默认值")
        return {}

    def _validate_config(self):
        positive_keys = [
            'numerics.n_max',
            'numerics.truncation_tol',
            'numerics.grid_size',
            'numerics.r1_min',
            'quadrature.abs_tol',
            'quadrature.upper_multiple',
            'quadrature.subdivision_limit',
            'quadrature.max_chunks',
            'runtime.workers',
        ]

        for key in positive_keys:
            value = self._get_nested_value(key)
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigurationError(f"配置项必须是数字: {key}={value!r}")
            if value <= 0:
                raise ConfigurationError(f"配置项必须为正数: {key}={value!r}")

        grid = self._get_nested_value('numerics.grid_size')
        if grid is not None and grid < 8:
            raise ConfigurationError(f"numerics.grid_size 过小: {grid}")

    def _get_nested_value(self, key: str) -> Any:
        keys = key.split('.')
        value = self.config
        for k in keys:
            if not isinstance(value, dict):
                return None
            value = value.get(k, {})
        return value if value != {} else None

    @property
    def n_max(self) -> int:
        return int(self._get_nested_value('numerics.n_max') or NumericSettings.n_max)

    @property
    def truncation_tol(self) -> float:
        return float(self._get_nested_value('numerics.truncation_tol') or NumericSettings.truncation_tol)

    @property
    def grid_size(self) -> int:
        return int(self._get_nested_value('numerics.grid_size') or NumericSettings.grid_size)

    @property
    def r1_min(self) -> float:
        return float(self._get_nested_value('numerics.r1_min') or NumericSettings.r1_min)

    @property
    def workers(self) -> int:
        return int(self._get_nested_value('runtime.workers') or 1)

    @property
    def log_level(self) -> str:
        return str(self._get_nested_value('logging.level') or "INFO")

    @property
    def log_file(self) -> Optional[str]:
        log_file = self._get_nested_value('logging.file')
        if log_file and str(log_file).strip():
            return str(log_file).strip()
        return None

    def numerics(self) -> NumericSettings:
        return NumericSettings(
            n_max=self.n_max,
            truncation_tol=self.truncation_tol,
            grid_size=self.grid_size,
            r1_min=self.r1_min,
        )

    def quadrature(self) -> QuadratureSettings:
        defaults = QuadratureSettings()
        return QuadratureSettings(
            abs_tol=float(self._get_nested_value('quadrature.abs_tol') or defaults.abs_tol),
            upper_multiple=float(self._get_nested_value('quadrature.upper_multiple') or defaults.upper_multiple),
            subdivision_limit=int(self._get_nested_value('quadrature.subdivision_limit') or defaults.subdivision_limit),
            max_chunks=int(self._get_nested_value('quadrature.max_chunks') or defaults.max_chunks),
        )
