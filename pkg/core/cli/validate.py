import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, TextIO

import numpy as np
from scipy.special import eval_hermite, hyp2f1

from core.bath.kernels import (
    BathParams,
    TemperatureRegime,
    eta_closed,
    eta_quadrature,
    gamma_closed,
    gamma_quadrature,
    kernels,
)
from core.cli.presets import preset_scenarios
from core.cli.scenario import build_initial_state
from core.config import NumericSettings, QuadratureSettings
from core.errors import ConfigurationError
from core.phasedist.distribution import atomic_closed_form, atomic_phase_distribution_general
from core.specfun.special import beta, hermite_sequence, hyp2f1_terminating, wigner_d, wigner_d_matrix
from core.states.atomic import AtomicStateParams, atomic_initial_dm, atomic_squeeze_norm, atomic_squeezed_amplitudes
from core.states.oscillator import (
    CoherentParams,
    KerrParams,
    SqueezeParams,
    coherent_coeffs,
    coherent_dimension,
    kerr_coeffs,
    pure_state_dm,
    squeeze_matrix,
    squeezed_coherent_dm,
    squeezed_kerr_coeffs,
)
from core.systems.propagator import ReducedDensityMatrix, propagate


logger = logging.getLogger(__name__)

SUITES = ("bath", "states", "dualpath", "specfun", "all")

BATH_TIMES = (0.01, 0.05, 0.1, 0.2, 0.5, 1.0)
BATH_SQUEEZE = (0.0, 1.0, 2.0)
HIGH_T_RELATIVE = 0.02


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.max_error) and self.max_error < self.tolerance


def _reference_bath(r: float, temperature: float) -> BathParams:
    regime = TemperatureRegime.ZERO_TEMPERATURE if temperature == 0 else TemperatureRegime.HIGH_TEMPERATURE
    return BathParams(gamma0=0.0025, omega_c=100.0, temperature=temperature, r=r, a=0.0, regime=regime)


def check_bath(quadrature: Optional[QuadratureSettings] = None) -> List[CheckResult]:
    """闭式 η、γ 与数值积分对照表"""
    results = []
    for t in BATH_TIMES:
        bath = _reference_bath(0.0, 0.0)
        err = abs(eta_closed(bath, t) - eta_quadrature(bath, t, quadrature))
        results.append(CheckResult(f"η t={t}", err, 1e-8))

        thermal = bath.gamma0 / (2 * math.pi) * math.log1p((bath.omega_c * t) ** 2)
        results.append(CheckResult(f"γ 热浴极限 t={t}", abs(gamma_closed(bath, t) - thermal),
                                   1e-15 * max(1.0, thermal) + 1e-18))

        for r in BATH_SQUEEZE:
            cold = _reference_bath(r, 0.0)
            closed = gamma_closed(cold, t)
            err = abs(closed - gamma_quadrature(cold, t, quadrature)) / max(1.0, abs(closed))
            results.append(CheckResult(f"γ T=0 r={r} t={t}", err, 1e-7))

            # 高温闭式以 2T/ω 代替 coth(ω/2T)，偏差约 ⟨ω²⟩/12T²
            if t >= 0.05 or r == 0:
                hot = _reference_bath(r, 300.0)
                closed = gamma_closed(hot, t)
                reference = gamma_quadrature(hot, t, quadrature)
                results.append(CheckResult(f"γ T=300 r={r} t={t}", abs(closed - reference) / abs(reference),
                                           HIGH_T_RELATIVE))
    return results


def _density_checks(label: str, rho: ReducedDensityMatrix) -> List[CheckResult]:
    return [
        CheckResult(f"{label} 厄米性", rho.hermiticity_error(), 1e-12),
        CheckResult(f"{label} 迹", abs(rho.trace - 1.0), 1e-10 + rho.trunc_error),
        CheckResult(f"{label} 半正定", max(0.0, -rho.min_eigenvalue()), 1e-10),
    ]


def check_states(settings: Optional[NumericSettings] = None) -> List[CheckResult]:
    """初态的厄米性、迹、半正定，以及 G 矩阵列归一化与 |A_p|²"""
    settings = settings or NumericSettings()
    base = CoherentParams.from_alpha2(5.0)
    N = coherent_dimension(base, settings.truncation_tol, settings.n_max)
    kerr = KerrParams(0.02, base)

    results = []
    results += _density_checks("相干态", pure_state_dm(coherent_coeffs(base, N, settings.n_max)))
    results += _density_checks("压缩相干态", squeezed_coherent_dm(base, SqueezeParams(0.5, math.pi / 4),
                                                              settings=settings))
    results += _density_checks("Kerr 态", pure_state_dm(kerr_coeffs(kerr, N, settings.n_max)))
    results += _density_checks("压缩 Kerr 态", pure_state_dm(squeezed_kerr_coeffs(kerr, SqueezeParams(0.4),
                                                                                  settings=settings)))
    for label, params in (
        ("Dicke 态", AtomicStateParams.dicke(Fraction(1, 2))),
        ("原子相干态", AtomicStateParams.coherent(math.pi / 4, math.pi / 4)),
        ("原子压缩态 (南极)", AtomicStateParams.squeezed(-0.5494, Fraction(-1, 2))),
        ("原子压缩态 (北极)", AtomicStateParams.squeezed(-0.5494, Fraction(1, 2))),
    ):
        results += _density_checks(label, atomic_initial_dm(params))

    g = squeeze_matrix(SqueezeParams(0.4), min(121, settings.n_max + 1), 4, settings)
    column_norms = np.sum(np.abs(g) ** 2, axis=0)
    results.append(CheckResult("G 列归一化 p≤3", float(np.max(np.abs(column_norms - 1.0))), 1e-10))

    for pole in (Fraction(-1, 2), Fraction(1, 2)):
        _, numeric = atomic_squeezed_amplitudes(-0.5494, pole)
        err = max(abs(numeric - atomic_squeeze_norm(-0.5494, pole)),
                  abs(numeric - 1.0 / math.cosh(-0.5494)))
        results.append(CheckResult(f"|A_p|² p={pole}", err, 1e-12))
    return results


def check_dualpath(settings: Optional[NumericSettings] = None,
                   quadrature: Optional[QuadratureSettings] = None) -> List[CheckResult]:
    """原子体系: 一般求和与闭式逐点对照 (fig6–fig8)"""
    results = []
    for name in ("fig6", "fig7", "fig8"):
        for cfg in preset_scenarios(name):
            initial = build_initial_state(cfg, settings)
            for t in cfg.times:
                pair = kernels(cfg.bath, t, cfg.kernel_method, quadrature)
                general = atomic_phase_distribution_general(propagate(initial, cfg.system, cfg.bath, t, pair=pair),
                                                            cfg.grid)
                closed = atomic_closed_form(cfg.state.atomic, cfg.system, cfg.bath, t, cfg.grid, pair=pair)
                err = float(np.max(np.abs(general.values - closed.values)))
                results.append(CheckResult(f"{cfg.name} t={t}", err, 1e-12))
    return results


def check_specfun() -> List[CheckResult]:
    results = []

    worst = 0.0
    for z in (-1.3, 0.0, 0.7, 2.5):
        ours = hermite_sequence(20, z).real
        reference = eval_hermite(np.arange(21), z)
        worst = max(worst, float(np.max(np.abs(ours - reference) / np.maximum(1.0, np.abs(reference)))))
    results.append(CheckResult("Hermite n≤20 对照 scipy", worst, 1e-12))

    worst = 0.0
    for p, m, c, x in ((3, 5, 0.5, -2.0), (4, 4, 1.5, -0.7), (6, 2, 0.5, 0.3), (0, 7, 1.5, -5.0)):
        ours = hyp2f1_terminating(p, m, c, x)
        reference = hyp2f1(-p, -m, c, x)
        worst = max(worst, abs(ours - reference) / max(1.0, abs(reference)))
    results.append(CheckResult("₂F₁ 终止级数对照 scipy", worst, 1e-10))

    b = math.pi / 3
    explicit = np.array([[math.cos(b / 2), math.sin(b / 2)], [-math.sin(b / 2), math.cos(b / 2)]])
    results.append(CheckResult("d^{1/2}(β) 显式矩阵", float(np.max(np.abs(wigner_d_matrix(Fraction(1, 2), b)
                                                                      - explicit))), 1e-14))
    d = wigner_d_matrix(Fraction(3, 2), 1.1)
    results.append(CheckResult("d^{3/2} 正交性", float(np.max(np.abs(d @ d.T - np.eye(4)))), 1e-12))
    results.append(CheckResult("d^j(0) = δ", abs(wigner_d(2, 1, 1, 0.0) - 1.0) + abs(wigner_d(2, 1, 0, 0.0)),
                               1e-15))
    results.append(CheckResult("B(2, 1) = 1/2", abs(beta(2, 1) - 0.5), 1e-14))
    return results


def run_suite(suite: str, settings: Optional[NumericSettings] = None,
              quadrature: Optional[QuadratureSettings] = None) -> List[CheckResult]:
    runners: Dict[str, Callable[[], List[CheckResult]]] = {
        "bath": lambda: check_bath(quadrature),
        "states": lambda: check_states(settings),
        "dualpath": lambda: check_dualpath(settings, quadrature),
        "specfun": check_specfun,
    }
    if suite not in SUITES:
        raise ConfigurationError(f"未知的校验套件: {suite}，可选: {', '.join(SUITES)}")
    selected = list(runners) if suite == "all" else [suite]
    results = []
    for name in selected:
        logger.info("运行校验套件: %s", name)
        results.extend(runners[name]())
    return results


def report(results: List[CheckResult], stream: TextIO) -> bool:
    for r in results:
        mark = "✅" if r.passed else "❌"
        stream.write(f"{mark} {r.name}: 最大误差 {r.max_error:.3e} (容差 {r.tolerance:.1e})\n")
    failed = sum(1 for r in results if not r.passed)
    stream.write(f"\n共 {len(results)} 项，通过 {len(results) - failed}，失败 {failed}\n")
    return failed == 0
