import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Literal, Optional

import numpy as np
from scipy.integrate import quad

from core.config import QuadratureSettings
from core.errors import ConfigurationError, DomainError, NumericalError


logger = logging.getLogger(__name__)

KernelMethod = Literal["closed", "quadrature"]


class TemperatureRegime(str, Enum):
    ZERO_TEMPERATURE = "zero_temperature"
    HIGH_TEMPERATURE = "high_temperature"


@dataclass(frozen=True)
class BathParams:
    """Ohmic 压缩热浴: I(ω) = (γ₀/π)·ω·e^{−ω/ω_c}，r(ω) ≡ r，Φ(ω) = aω，ħ = k_B = 1"""

    gamma0: float
    omega_c: float
    temperature: float
    r: float
    a: float
    regime: TemperatureRegime

    def __post_init__(self):
        object.__setattr__(self, "regime", TemperatureRegime(self.regime))
        if self.gamma0 < 0:
            raise DomainError(f"γ₀ 必须非负: {self.gamma0}")
        if self.omega_c <= 0:
            raise DomainError(f"ω_c 必须为正: {self.omega_c}")
        if self.temperature < 0:
            raise DomainError(f"温度必须非负: {self.temperature}")
        if self.a < 0:
            raise DomainError(f"浴压缩相位斜率 a 必须非负: {self.a}")
        is_zero = self.regime is TemperatureRegime.ZERO_TEMPERATURE
        if is_zero != (self.temperature == 0):
            raise ConfigurationError(
                f"温区标签与温度不一致: regime={self.regime.value}, T={self.temperature}"
            )


@dataclass(frozen=True)
class KernelPair:
    eta: float
    gamma: float


def spectral_density(bath: BathParams, omega):
    return bath.gamma0 / math.pi * omega * np.exp(-omega / bath.omega_c)


def _check_time(t: float) -> None:
    if t < 0:
        raise DomainError(f"时间必须非负: t={t}")


def _check_closed_form_window(bath: BathParams, t: float) -> None:
    _check_time(t)
    # a = 0 时 t = 0 处闭式解连续取值 0
    if bath.a > 0 and t <= 2 * bath.a:
        raise DomainError(f"γ(t) 闭式解仅在 t > 2a 时成立: t={t}, a={bath.a}")


def eta_closed(bath: BathParams, t: float) -> float:
    """η(t) = −(γ₀/π)·arctan(ω_c t)"""
    _check_time(t)
    return -bath.gamma0 / math.pi * math.atan(bath.omega_c * t)


def gamma_closed(bath: BathParams, t: float) -> float:
    """γ(t)：T = 0 与高温两种极限下的闭式解，需 t > 2a"""
    _check_closed_form_window(bath, t)
    if bath.gamma0 == 0:
        return 0.0

    wc, a, g0 = bath.omega_c, bath.a, bath.gamma0
    ch, sh = math.cosh(2 * bath.r), math.sinh(2 * bath.r)

    if bath.regime is TemperatureRegime.ZERO_TEMPERATURE:
        if bath.temperature != 0:
            raise ConfigurationError(f"零温闭式解要求 T = 0，当前 T={bath.temperature}")
        thermal = g0 / (2 * math.pi) * ch * math.log1p((wc * t) ** 2)
        squeezed = 0.0
        if sh != 0.0:
            squeezed = -g0 / (4 * math.pi) * sh * (
                math.log1p(4 * (wc * (t - a)) ** 2) - 2 * math.log1p((wc * (t - 2 * a)) ** 2)
            ) - g0 / (4 * math.pi) * sh * math.log1p(4 * (a * wc) ** 2)
        return thermal + squeezed

    if bath.temperature <= 0:
        raise ConfigurationError("高温闭式解要求 T > 0")
    scale = g0 * bath.temperature / (math.pi * wc)
    thermal = scale * ch * (2 * wc * t * math.atan(wc * t) - math.log1p((wc * t) ** 2))
    squeezed = 0.0
    if sh != 0.0:
        squeezed = -scale / 2 * sh * (
            4 * wc * (t - a) * math.atan(2 * wc * (t - a))
            - 4 * wc * (t - 2 * a) * math.atan(wc * (t - 2 * a))
            + 4 * a * wc * math.atan(2 * a * wc)
            + 2 * math.log1p((wc * (t - 2 * a)) ** 2) - math.log1p(4 * (wc * (t - a)) ** 2)
            - math.log1p(4 * (a * wc) ** 2)
        )
    return thermal + squeezed


def _oscillatory_quad(integrand: Callable[[float], float], upper: float, frequency: float,
                      settings: QuadratureSettings, what: str) -> float:
    """按振荡周期分段积分 [0, upper]，逐段 scipy quad 后用 fsum 累加"""
    n_chunks = max(1, math.ceil(upper * frequency / (2 * math.pi)))
    if n_chunks > settings.max_chunks:
        raise NumericalError(
            f"{what}: 振荡分段数 {n_chunks} 超过上限 {settings.max_chunks}",
            estimate=float("inf"),
        )

    edges = np.linspace(0.0, upper, n_chunks + 1)
    chunk_tol = settings.abs_tol / n_chunks
    values, errors = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        result = quad(integrand, lo, hi, epsabs=chunk_tol, epsrel=1e-12,
                      limit=settings.subdivision_limit, full_output=1)
        values.append(result[0])
        errors.append(result[1])
        # ier > 0 时 quad 追加 message；误差估计仍在预算内则接受
        if len(result) > 3 and result[1] > chunk_tol:
            raise NumericalError(
                f"{what}: 区间 [{lo:.6g}, {hi:.6g}] 积分未收敛: {result[3]}",
                estimate=math.fsum(errors),
            )

    estimate = math.fsum(errors)
    if estimate > settings.abs_tol:
        raise NumericalError(f"{what}: 误差估计 {estimate:.3e} 超过目标 {settings.abs_tol:.1e}",
                             estimate=estimate)
    return math.fsum(values)


def eta_quadrature(bath: BathParams, t: float, settings: Optional[QuadratureSettings] = None) -> float:
    """η(t) = −∫₀^∞ dω I(ω)/ω² · sin(ωt)"""
    _check_time(t)
    settings = settings or QuadratureSettings()
    if t == 0 or bath.gamma0 == 0:
        return 0.0

    g0, wc = bath.gamma0, bath.omega_c

    def integrand(w: float) -> float:
        return -g0 / math.pi * math.exp(-w / wc) * math.sin(w * t) / w

    return _oscillatory_quad(integrand, settings.upper_multiple * wc, t, settings, "η(t) 数值积分")


def gamma_quadrature(bath: BathParams, t: float, settings: Optional[QuadratureSettings] = None) -> float:
    """γ(t) = ½∫₀^∞ dω I(ω)/ω² · coth(ω/2T) · |(e^{iωt}−1)cosh r + (e^{−iωt}−1)sinh r·e^{2iaω}|²

    模方化简为 4 sin²(ωt/2)·[cosh 2r − sinh 2r·cos(ω(t − 2a))]；T = 0 时 coth 取 1。
    """
    _check_time(t)
    settings = settings or QuadratureSettings()
    if t == 0 or bath.gamma0 == 0:
        return 0.0

    g0, wc, temp = bath.gamma0, bath.omega_c, bath.temperature
    ch, sh = math.cosh(2 * bath.r), math.sinh(2 * bath.r)
    shift = t - 2 * bath.a

    def integrand(w: float) -> float:
        thermal = 1.0 if temp == 0 else 1.0 / math.tanh(w / (2 * temp))
        s = math.sin(w * t / 2)
        modulus = 4 * s * s * (ch - sh * math.cos(w * shift))
        return 0.5 * g0 / math.pi * math.exp(-w / wc) / w * thermal * modulus

    frequency = abs(t) + abs(shift)
    return _oscillatory_quad(integrand, settings.upper_multiple * wc, frequency, settings, "γ(t) 数值积分")


def kernels(bath: BathParams, t: float, method: KernelMethod = "closed",
            settings: Optional[QuadratureSettings] = None) -> KernelPair:
    if method == "closed":
        pair = KernelPair(eta=eta_closed(bath, t), gamma=gamma_closed(bath, t))
    elif method == "quadrature":
        pair = KernelPair(eta=eta_quadrature(bath, t, settings), gamma=gamma_quadrature(bath, t, settings))
    else:
        raise ConfigurationError(f"未知的核函数计算方式: {method}")
    logger.debug("t=%s 核函数(%s): η=%.12g, γ=%.12g", t, method, pair.eta, pair.gamma)
    return pair


def kernel_rates(bath: BathParams, t: float, h: float = 1e-5, method: KernelMethod = "closed",
                 settings: Optional[QuadratureSettings] = None) -> KernelPair:
    """η̇(t)、γ̇(t) 的中心差分"""
    if t - h < 0:
        raise DomainError(f"中心差分需要 t ≥ h: t={t}, h={h}")
    hi = kernels(bath, t + h, method, settings)
    lo = kernels(bath, t - h, method, settings)
    return KernelPair(eta=(hi.eta - lo.eta) / (2 * h), gamma=(hi.gamma - lo.gamma) / (2 * h))
