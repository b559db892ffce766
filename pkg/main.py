import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO

from core.cli.presets import list_presets, preset_scenarios
from core.cli.scenario import (
    ANHARMONIC_BASES,
    DEFAULT_SCENARIO,
    POLES,
    ScenarioConfig,
    StateKind,
    deep_merge,
    run_scenario,
    scenario_from_mapping,
)
from core.cli.validate import SUITES, report, run_suite
from core.bath.kernels import TemperatureRegime
from core.config import Config, load_yaml_mapping
from core.errors import CapacityError, ConfigurationError, DomainError, NumericalError
from core.logging import setup_logging
from core.systems.spectra import SystemKind


EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2

# 命令行参数 → 场景映射中的路径
FLAG_PATHS = {
    "system": ("system", "kind"),
    "omega": ("system", "omega"),
    "lam": ("system", "lambda"),
    "state": ("state", "kind"),
    "alpha2": ("state", "alpha2"),
    "theta0": ("state", "theta0"),
    "r1": ("state", "r1"),
    "psi": ("state", "psi"),
    "chi": ("state", "chi"),
    "atom_alpha": ("state", "atom_alpha"),
    "atom_beta": ("state", "atom_beta"),
    "theta_s": ("state", "theta_s"),
    "pole": ("state", "pole"),
    "m_tilde": ("state", "m_tilde"),
    "gamma0": ("bath", "gamma0"),
    "omega_c": ("bath", "omega_c"),
    "temp": ("bath", "temperature"),
    "bath_r": ("bath", "r"),
    "bath_a": ("bath", "a"),
    "regime": ("bath", "regime"),
    "time": ("times",),
    "grid": ("grid",),
    "kernels": ("kernels",),
    "anharmonic_basis": ("anharmonic_basis",),
}


def _add_output_options(parser: argparse.ArgumentParser):
    parser.add_argument("--out", help="CSV 输出路径，缺省写到标准输出")
    parser.add_argument("--workers", type=int, help="并行计算的线程数 (缺省取配置 runtime.workers)")


def _add_scenario_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("体系与初态")
    group.add_argument("--system", choices=[k.value for k in SystemKind])
    group.add_argument("--omega", type=float, help="系统频率 ω")
    group.add_argument("--lambda", dest="lam", type=float, help="非谐参数 λ")
    group.add_argument("--state", choices=[k.value for k in StateKind])
    group.add_argument("--alpha2", type=float, help="|α|²")
    group.add_argument("--theta0", help="相干态相位 θ₀，可写作 pi/4")
    group.add_argument("--r1", type=float, help="系统压缩幅度 r₁")
    group.add_argument("--psi", help="系统压缩相位 (压缩相干态 ψ，压缩 Kerr 态 φ)")
    group.add_argument("--chi", type=float, help="Kerr 相位 χ")
    group.add_argument("--atom-alpha", dest="atom_alpha", help="原子相干态 α")
    group.add_argument("--atom-beta", dest="atom_beta", help="原子相干态 β")
    group.add_argument("--theta-s", dest="theta_s", type=float, help="原子压缩参数 Θ (< 0)")
    group.add_argument("--pole", choices=sorted(POLES))
    group.add_argument("--m-tilde", dest="m_tilde", help="Dicke 态 m̃，±1/2")

    group = parser.add_argument_group("热浴")
    group.add_argument("--gamma0", type=float)
    group.add_argument("--omega-c", dest="omega_c", type=float)
    group.add_argument("--temp", type=float, help="温度 T (ħ = k_B = 1)")
    group.add_argument("--bath-r", dest="bath_r", type=float, help="浴压缩幅度 r")
    group.add_argument("--bath-a", dest="bath_a", type=float, help="浴压缩相位斜率 a")
    group.add_argument("--regime", choices=[r.value for r in TemperatureRegime],
                       help="γ(t) 闭式解的温区，缺省按 T 是否为 0 选择")

    group = parser.add_argument_group("计算")
    group.add_argument("--time", type=float, action="append", help="演化时间，可重复")
    group.add_argument("--grid", type=int, help="角度网格点数 M")
    group.add_argument("--kernels", choices=["closed", "quadrature"], help="η、γ 的计算方式")
    group.add_argument("--anharmonic-basis", dest="anharmonic_basis", choices=ANHARMONIC_BASES,
                       help="非谐振子按 SU(1,1) 扇区或数态基求相位分布")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qnd-phase", description="QND 退相干下的量子相位分布")
    parser.add_argument("--config", help="配置文件路径 (缺省 config.yaml)")
    parser.add_argument("--log-level", dest="log_level", help="覆盖配置中的日志级别")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="按命令行参数或场景文件计算相位分布")
    _add_scenario_options(run)
    _add_output_options(run)
    run.add_argument("--preset", help="以预设 figN 为底，再用显式参数覆盖")
    run.add_argument("--scenario-file", dest="scenario_file", help="YAML 场景文件")
    run.add_argument("--list-presets", dest="list_presets", action="store_true", help="列出全部预设后退出")

    preset = sub.add_parser("preset", help="计算预设序列 fig1–fig8")
    preset.add_argument("name", help="预设名，如 fig1")
    _add_output_options(preset)
    preset.add_argument("--grid", type=int)
    preset.add_argument("--kernels", choices=["closed", "quadrature"])
    preset.add_argument("--anharmonic-basis", dest="anharmonic_basis", choices=ANHARMONIC_BASES)

    validate = sub.add_parser("validate", help="运行数值校验套件")
    validate.add_argument("--suite", choices=SUITES, default="all")

    sub.add_parser("validate-bath", help="η、γ 闭式解与数值积分对照")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """只收集命令行显式给出的字段"""
    overrides: Dict[str, Any] = {}
    for attr, path in FLAG_PATHS.items():
        value = getattr(args, attr, None)
        if value is None:
            continue
        target = overrides
        for key in path[:-1]:
            target = target.setdefault(key, {})
        target[path[-1]] = value
    return overrides


def scenarios_from_file(path: str, overrides: Dict[str, Any], base: Dict[str, Any]) -> List[ScenarioConfig]:
    """场景文件: 单个场景映射，或 {defaults: {...}, series: [...]}"""
    data = load_yaml_mapping(Path(path))
    if "series" not in data:
        return [scenario_from_mapping(deep_merge(data, overrides), base)]
    series = data["series"]
    if not isinstance(series, list) or not series:
        raise ConfigurationError(f"{path}: series 必须是非空列表")
    defaults = deep_merge(base, data.get("defaults") or {})
    configs = []
    for index, s in enumerate(series):
        if not isinstance(s, dict):
            raise ConfigurationError(f"{path}: series[{index}] 需要映射结构")
        mapping = deep_merge({"name": f"series{index}"}, s)
        configs.append(scenario_from_mapping(deep_merge(mapping, overrides), defaults))
    return configs


def resolve_scenarios(args: argparse.Namespace, config: Config) -> List[ScenarioConfig]:
    overrides = overrides_from_args(args)
    base = deep_merge(DEFAULT_SCENARIO, {"grid": config.grid_size})
    if args.command == "preset":
        return preset_scenarios(args.name, overrides, base)
    if args.preset and args.scenario_file:
        raise ConfigurationError("--preset 与 --scenario-file 不能同时使用")
    if args.preset:
        return preset_scenarios(args.preset, overrides, base)
    if args.scenario_file:
        return scenarios_from_file(args.scenario_file, overrides, base)
    return [scenario_from_mapping(overrides, base)]


@contextmanager
def open_output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        yield f


def run_command(args: argparse.Namespace, config: Config) -> int:
    logger = logging.getLogger(__name__)
    if getattr(args, "list_presets", False):
        for p in list_presets():
            print(f"{p.name}\t{len(p.series)} 条序列\t{p.description}")
        return EXIT_OK

    configs = resolve_scenarios(args, config)
    workers = args.workers if args.workers is not None else config.workers
    if workers < 1:
        raise ConfigurationError(f"--workers 必须 ≥ 1: {workers}")

    # 场景文件中的 output 字段按输出目标分组，组内保持原顺序
    groups: Dict[Optional[str], List[ScenarioConfig]] = {}
    for cfg in configs:
        groups.setdefault(args.out or cfg.output, []).append(cfg)
    for target, group in groups.items():
        logger.info("开始计算 %d 条序列 → %s", len(group), target or "stdout")
        with open_output(target) as stream:
            run_scenario(group, stream, config.numerics(), config.quadrature(), workers)
    return EXIT_OK


def validate_command(suite: str, config: Config) -> int:
    results = run_suite(suite, config.numerics(), config.quadrature())
    passed = report(results, sys.stdout)
    return EXIT_OK if passed else EXIT_VALIDATION


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or "INFO")
    logger = logging.getLogger(__name__)

    try:
        logger.info("正在加载配置...")
        config = Config(args.config)
        setup_logging(args.log_level or config.log_level, config.log_file)
        logger.info("配置加载成功")

        if args.command in ("run", "preset"):
            return run_command(args, config)
        if args.command == "validate":
            return validate_command(args.suite, config)
        return validate_command("bath", config)

    except (ConfigurationError, DomainError, CapacityError, FileNotFoundError, IsADirectoryError) as e:
        logger.error(f"配置错误: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"数值计算失败: {e} (误差估计 {e.estimate:.3e})")
        return EXIT_VALIDATION
    except KeyboardInterrupt:
        logger.info("收到中断信号，正在退出...")
        return EXIT_VALIDATION
    except Exception as e:
        logger.error(f"程序运行出错: {e}")
        return EXIT_VALIDATION


if __name__ == '__main__':
    sys.exit(main())
