import copy
import io
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from core.bath.kernels import BathParams, KernelMethod, TemperatureRegime, kernels
from core.config import NumericSettings, QuadratureSettings
from core.errors import ConfigurationError, QndPhaseError
from core.phasedist.distribution import (
    PhaseDistribution,
    atomic_phase_distribution_general,
    oscillator_phase_distribution,
)
from core.states.atomic import AtomicStateParams, atomic_initial_dm
from core.states.oscillator import (
    CoherentParams,
    KerrParams,
    SqueezeParams,
    coherent_coeffs,
    coherent_dimension,
    kerr_coeffs,
    pure_state_dm,
    split_sectors,
    squeezed_coherent_dm,
    squeezed_kerr_coeffs,
)
from core.systems.propagator import ReducedDensityMatrix, propagate
from core.systems.spectra import Basis, SystemKind, SystemSpec


logger = logging.getLogger(__name__)


class StateKind(str, Enum):
    COHERENT = "coherent"
    SQUEEZED_COHERENT = "squeezed_coherent"
    KERR = "kerr"
    SQUEEZED_KERR = "squeezed_kerr"
    DICKE = "dicke"
    ATOMIC_COHERENT = "atomic_coherent"
    ATOMIC_SQUEEZED = "atomic_squeezed"


ALLOWED_STATES = {
    SystemKind.HARMONIC: (StateKind.COHERENT, StateKind.SQUEEZED_COHERENT),
    SystemKind.ANHARMONIC: (StateKind.COHERENT, StateKind.KERR, StateKind.SQUEEZED_KERR),
    SystemKind.TWO_LEVEL: (StateKind.DICKE, StateKind.ATOMIC_COHERENT, StateKind.ATOMIC_SQUEEZED),
}

POLES = {"south": Fraction(-1, 2), "north": Fraction(1, 2)}

ANHARMONIC_BASES = ("sectors", "number")

STATE_FIELDS = {
    StateKind.COHERENT: ("alpha2", "theta0"),
    StateKind.SQUEEZED_COHERENT: ("alpha2", "theta0", "r1", "psi"),
    StateKind.KERR: ("alpha2", "theta0", "chi"),
    StateKind.SQUEEZED_KERR: ("alpha2", "theta0", "r1", "psi", "chi"),
    StateKind.DICKE: ("m_tilde",),
    StateKind.ATOMIC_COHERENT: ("atom_alpha", "atom_beta"),
    StateKind.ATOMIC_SQUEEZED: ("theta_s", "pole"),
}

DEFAULT_SCENARIO: Dict[str, Any] = {
    "name": "scenario",
    "system": {"kind": "harmonic", "omega": 1.0, "lambda": None},
    "state": {
        "kind": "coherent",
        "alpha2": 5.0,
        "theta0": 0.0,
        "r1": None,
        "psi": 0.0,
        "chi": None,
        "atom_alpha": "pi/4",
        "atom_beta": "pi/4",
        "theta_s": -0.5494,
        "pole": "south",
        "m_tilde": "1/2",
    },
    "bath": {"gamma0": 0.0025, "omega_c": 100.0, "temperature": 0.0, "r": 0.0, "a": 0.0, "regime": None},
    "times": [0.1],
    "grid": 1024,
    "kernels": "closed",
    "anharmonic_basis": "sectors",
    "output": None,
}

_ANGLE_PATTERN = re.compile(
    r"^\s*(?P<coef>[+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)


def parse_angle(value: Any, name: str) -> float:
    """数值或 "pi/4"、"-3*pi/4"、"2pi" 形式的角度"""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigurationError(f"{name}: 无法解析的角度 {value!r}")
    text = value.strip().lower()
    match = _ANGLE_PATTERN.match(text)
    if match:
        coef = match.group("coef")
        coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        den = float(match.group("den")) if match.group("den") else 1.0
        return coef * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"{name}: 无法解析的角度 {value!r}") from None


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass(frozen=True)
class StateSelector:
    kind: StateKind
    coherent: Optional[CoherentParams] = None
    squeeze: Optional[SqueezeParams] = None
    chi: Optional[float] = None
    atomic: Optional[AtomicStateParams] = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    system: SystemSpec
    state: StateSelector
    bath: BathParams
    times: Tuple[float, ...]
    grid: int = 1024
    kernel_method: KernelMethod = "closed"
    anharmonic_basis: str = "sectors"
    output: Optional[str] = None
    source: Mapping[str, Any] = field(default_factory=dict, compare=False)


def _field(section: Mapping[str, Any], key: str, prefix: str, cast=float):
    value = section.get(key)
    if value is None:
        raise ConfigurationError(f"{prefix}.{key}: 缺少必填字段")
    try:
        return cast(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"{prefix}.{key}: 类型错误 {value!r} ({e})") from None


def _wrap(prefix: str, builder):
    try:
        return builder()
    except ConfigurationError:
        raise
    except QndPhaseError as e:
        raise ConfigurationError(f"{prefix}: {e}") from e


def _system_from(section: Mapping[str, Any]) -> SystemSpec:
    kind = _field(section, "kind", "system", SystemKind)
    omega = _field(section, "omega", "system")
    lam = section.get("lambda")
    if kind is SystemKind.ANHARMONIC and lam is None:
        raise ConfigurationError("system.lambda: 非谐振子需要 λ")
    lam = float(lam) if kind is SystemKind.ANHARMONIC else None
    return _wrap("system", lambda: SystemSpec(kind, omega, lam))


def _state_from(section: Mapping[str, Any], system: SystemSpec) -> StateSelector:
    kind = _field(section, "kind", "state", StateKind)
    if kind not in ALLOWED_STATES[system.kind]:
        allowed = ", ".join(k.value for k in ALLOWED_STATES[system.kind])
        raise ConfigurationError(f"state.kind: {kind.value} 不适用于 {system.kind.value} 体系 (可选: {allowed})")

    if kind is StateKind.DICKE:
        m_tilde = _field(section, "m_tilde", "state", Fraction)
        return StateSelector(kind, atomic=_wrap("state.m_tilde", lambda: AtomicStateParams.dicke(m_tilde)))
    if kind is StateKind.ATOMIC_COHERENT:
        alpha = parse_angle(section.get("atom_alpha"), "state.atom_alpha")
        beta = parse_angle(section.get("atom_beta"), "state.atom_beta")
        return StateSelector(kind, atomic=_wrap("state", lambda: AtomicStateParams.coherent(alpha, beta)))
    if kind is StateKind.ATOMIC_SQUEEZED:
        theta_s = _field(section, "theta_s", "state")
        pole = str(section.get("pole", "")).lower()
        if pole not in POLES:
            raise ConfigurationError(f"state.pole: 只能是 north 或 south，得到 {section.get('pole')!r}")
        return StateSelector(kind, atomic=_wrap("state.theta_s",
                                                lambda: AtomicStateParams.squeezed(theta_s, POLES[pole])))

    alpha2 = _field(section, "alpha2", "state")
    theta0 = parse_angle(section.get("theta0", 0.0), "state.theta0")
    coherent = _wrap("state.alpha2", lambda: CoherentParams.from_alpha2(alpha2, theta0))
    squeeze = None
    if kind in (StateKind.SQUEEZED_COHERENT, StateKind.SQUEEZED_KERR):
        r1 = _field(section, "r1", "state")
        psi = parse_angle(section.get("psi", 0.0), "state.psi")
        squeeze = _wrap("state.r1", lambda: SqueezeParams(r1, psi))
    chi = None
    if kind in (StateKind.KERR, StateKind.SQUEEZED_KERR):
        chi = _field(section, "chi", "state")
    return StateSelector(kind, coherent=coherent, squeeze=squeeze, chi=chi)


def _bath_from(section: Mapping[str, Any]) -> BathParams:
    temperature = _field(section, "temperature", "bath")
    regime = section.get("regime")
    if regime is None:
        regime = TemperatureRegime.ZERO_TEMPERATURE if temperature == 0 else TemperatureRegime.HIGH_TEMPERATURE
        logger.debug("bath.regime 未指定，按 T=%s 选用 %s", temperature, regime.value)
    else:
        try:
            regime = TemperatureRegime(regime)
        except ValueError:
            raise ConfigurationError(f"bath.regime: 未知温区 {regime!r}") from None
    return _wrap("bath", lambda: BathParams(
        gamma0=_field(section, "gamma0", "bath"),
        omega_c=_field(section, "omega_c", "bath"),
        temperature=temperature,
        r=_field(section, "r", "bath"),
        a=_field(section, "a", "bath"),
        regime=regime,
    ))


def scenario_from_mapping(mapping: Mapping[str, Any], defaults: Optional[Mapping[str, Any]] = None) -> ScenarioConfig:
    """把 (预设/命令行/场景文件) 映射解析为 ScenarioConfig，字段错误带路径"""
    data = deep_merge(defaults if defaults is not None else DEFAULT_SCENARIO, mapping)
    unknown = set(data) - set(DEFAULT_SCENARIO) - {"description"}
    if unknown:
        raise ConfigurationError(f"未知字段: {', '.join(sorted(unknown))}")
    for section in ("system", "state", "bath"):
        if not isinstance(data[section], Mapping):
            raise ConfigurationError(f"{section}: 需要映射结构")
        unknown = set(data[section]) - set(DEFAULT_SCENARIO[section])
        if unknown:
            raise ConfigurationError(f"{section}: 未知字段 {', '.join(sorted(unknown))}")

    system = _system_from(data["system"])
    state = _state_from(data["state"], system)
    bath = _bath_from(data["bath"])

    raw_times = data["times"]
    if isinstance(raw_times, (int, float)):
        raw_times = [raw_times]
    try:
        times = tuple(float(t) for t in raw_times)
    except (TypeError, ValueError):
        raise ConfigurationError(f"times: 需要数值列表，得到 {raw_times!r}") from None
    if not times:
        raise ConfigurationError("times: 至少需要一个时间点")
    if any(t < 0 for t in times):
        raise ConfigurationError(f"times: 时间必须非负 {list(times)}")

    method = data["kernels"]
    if method not in ("closed", "quadrature"):
        raise ConfigurationError(f"kernels: 只能是 closed 或 quadrature，得到 {method!r}")
    if method == "closed" and bath.a > 0:
        bad = [t for t in times if t <= 2 * bath.a]
        if bad:
            raise ConfigurationError(f"times: 闭式核函数要求 t > 2a = {2 * bath.a}，违规时间 {bad}")

    grid = _field(data, "grid", "scenario", int)
    if grid < 8:
        raise ConfigurationError(f"grid: 网格点数必须 ≥ 8，得到 {grid}")
    basis = data["anharmonic_basis"]
    if basis not in ANHARMONIC_BASES:
        raise ConfigurationError(f"anharmonic_basis: 只能是 sectors 或 number，得到 {basis!r}")

    return ScenarioConfig(
        name=str(data["name"]),
        system=system,
        state=state,
        bath=bath,
        times=times,
        grid=grid,
        kernel_method=method,
        anharmonic_basis=basis,
        output=data.get("output"),
        source=data,
    )


InitialState = Union[ReducedDensityMatrix, Tuple[ReducedDensityMatrix, ReducedDensityMatrix]]


def build_initial_state(cfg: ScenarioConfig, settings: Optional[NumericSettings] = None) -> InitialState:
    """按体系与初态选择构造 ρˢ(0)；非谐振子在 sectors 模式下返回 (偶, 奇) 扇区矩阵"""
    settings = settings or NumericSettings()
    state = cfg.state

    if cfg.system.kind is SystemKind.TWO_LEVEL:
        return atomic_initial_dm(state.atomic)

    if state.kind is StateKind.SQUEEZED_COHERENT:
        return squeezed_coherent_dm(state.coherent, state.squeeze, settings=settings)

    N = coherent_dimension(state.coherent, settings.truncation_tol, settings.n_max)
    if cfg.system.kind is SystemKind.HARMONIC:
        return pure_state_dm(coherent_coeffs(state.coherent, N, settings.n_max))

    kerr = KerrParams(state.chi or 0.0, state.coherent)
    if state.kind is StateKind.SQUEEZED_KERR:
        coeffs = squeezed_kerr_coeffs(kerr, state.squeeze, settings=settings)
    else:
        coeffs = kerr_coeffs(kerr, N, settings.n_max)

    if cfg.anharmonic_basis == "number":
        return pure_state_dm(coeffs, Basis.NUMBER)
    return split_sectors(coeffs)


def evaluate(cfg: ScenarioConfig, initial: InitialState, t: float,
             quadrature: Optional[QuadratureSettings] = None) -> PhaseDistribution:
    pair = kernels(cfg.bath, t, cfg.kernel_method, quadrature)
    meta = {"series": cfg.name}
    if isinstance(initial, ReducedDensityMatrix):
        rho = propagate(initial, cfg.system, cfg.bath, t, pair=pair)
        if rho.basis is Basis.DICKE_J_HALF:
            return atomic_phase_distribution_general(rho, cfg.grid, meta)
        return oscillator_phase_distribution(rho, cfg.grid, meta)
    sectors = [propagate(sector, cfg.system, cfg.bath, t, pair=pair) for sector in initial]
    return oscillator_phase_distribution(sectors, cfg.grid, meta)


def _flatten(prefix: str, value: Any) -> Iterable[Tuple[str, Any]]:
    if isinstance(value, Mapping):
        for key, inner in value.items():
            yield from _flatten(f"{prefix}.{key}" if prefix else str(key), inner)
    else:
        yield prefix, value


def format_block(cfg: ScenarioConfig, t: float, pd: PhaseDistribution) -> str:
    """# 注释块 (参数、η、γ、截断误差) + 表头 + M 行 15 位有效数字"""
    lines = [f"# series: {cfg.name}"]
    recorded = copy.deepcopy({k: v for k, v in cfg.source.items() if k not in ("name", "description", "times", "output")})
    recorded["bath"]["regime"] = cfg.bath.regime.value
    state_keys = ("kind",) + STATE_FIELDS[cfg.state.kind]
    recorded["state"] = {k: v for k, v in recorded["state"].items() if k in state_keys}
    if cfg.system.kind is not SystemKind.ANHARMONIC:
        recorded["system"] = {k: v for k, v in recorded["system"].items() if k != "lambda"}
        recorded.pop("anharmonic_basis", None)
    for key, value in _flatten("", recorded):
        lines.append(f"# {key}: {value}")
    lines.append(f"# t: {t:.15g}")
    lines.append(f"# eta: {pd.metadata.get('eta', 0.0):.15g}")
    lines.append(f"# gamma: {pd.metadata.get('gamma', 0.0):.15g}")
    lines.append(f"# trunc_error: {pd.metadata.get('trunc_error', 0.0):.15g}")
    lines.append(f"{pd.variable},P")
    rows = io.StringIO()
    np.savetxt(rows, np.column_stack([pd.grid, pd.values]), fmt="%.15g", delimiter=",")
    return "\n".join(lines) + "\n" + rows.getvalue()


def compute_scenarios(configs: Sequence[ScenarioConfig], settings: Optional[NumericSettings] = None,
                      quadrature: Optional[QuadratureSettings] = None,
                      workers: int = 1) -> List[Tuple[ScenarioConfig, float, PhaseDistribution]]:
    """逐 (序列, 时间) 计算相位分布；结果按配置顺序排列，与完成顺序无关"""
    settings = settings or NumericSettings()
    initials = []
    for cfg in configs:
        logger.info("构造初态: %s (%s / %s)", cfg.name, cfg.system.kind.value, cfg.state.kind.value)
        initials.append(build_initial_state(cfg, settings))

    jobs = [(cfg, initial, t) for cfg, initial in zip(configs, initials) for t in cfg.times]

    def run(job):
        cfg, initial, t = job
        return cfg, t, evaluate(cfg, initial, t, quadrature)

    if workers <= 1 or len(jobs) <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run, jobs))


def run_scenario(cfg: Union[ScenarioConfig, Sequence[ScenarioConfig]], stream: TextIO,
                 settings: Optional[NumericSettings] = None, quadrature: Optional[QuadratureSettings] = None,
                 workers: int = 1) -> List[PhaseDistribution]:
    configs = [cfg] if isinstance(cfg, ScenarioConfig) else list(cfg)
    results = compute_scenarios(configs, settings, quadrature, workers)
    for index, (config, t, pd) in enumerate(results):
        if index:
            stream.write("\n")
        stream.write(format_block(config, t, pd))
    logger.info("已输出 %d 个数据块", len(results))
    return [pd for _, _, pd in results]


def read_csv_blocks(text: str) -> List[Dict[str, Any]]:
    """解析 run_scenario 的输出: 每块返回 {"meta": {...}, "variable": str, "grid": [...], "values": [...]}"""
    blocks: List[Dict[str, Any]] = []
    current: Optional[Dict[str, Any]] = None
    for line in text.splitlines():
        if not line.strip():
            current = None
            continue
        if line.startswith("#"):
            if current is None or current["grid"]:
                current = {"meta": {}, "variable": None, "grid": [], "values": []}
                blocks.append(current)
            key, _, value = line[1:].strip().partition(": ")
            current["meta"][key] = value
            continue
        if current is None:
            raise ConfigurationError(f"CSV 数据块缺少注释头: {line!r}")
        if current["variable"] is None:
            current["variable"] = line.split(",")[0]
            continue
        x, y = line.split(",")
        current["grid"].append(float(x))
        current["values"].append(float(y))
    return blocks
