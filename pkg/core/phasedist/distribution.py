import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from core.bath.kernels import BathParams, KernelMethod, KernelPair, kernels
from core.config import QuadratureSettings
from core.errors import ConfigurationError, DomainError, NumericalError
from core.specfun.special import beta, log_factorials
from core.states.atomic import AtomicStateKind, AtomicStateParams, J_HALF
from core.systems.propagator import ReducedDensityMatrix
from core.systems.spectra import Basis, SystemKind, SystemSpec


logger = logging.getLogger(__name__)

NEGATIVE_TOLERANCE = 1e-12
NORMALIZATION_TOLERANCE = 1e-6

SECTOR_BASES = (Basis.SU11_EVEN, Basis.SU11_ODD)


def angle_grid(M: int) -> np.ndarray:
    """[0, 2π) 上 M 个等距点"""
    if M < 8:
        raise ConfigurationError(f"角度网格点数必须 ≥ 8: M={M}")
    return np.arange(M) * (2 * math.pi / M)


@dataclass(frozen=True)
class PhaseDistribution:
    """网格上的相位分布 P(θ) 或 P(φ)

    fold 为分布的对称阶数: su11 扇区求和以 π 为周期，fold = 2。
    """

    grid: np.ndarray
    values: np.ndarray
    variable: str = "theta"
    fold: int = 1
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise NumericalError(f"网格与取值形状不一致: {grid.shape} vs {values.shape}")
        lowest = float(values.min())
        if lowest < -NEGATIVE_TOLERANCE:
            raise NumericalError(f"相位分布出现负值 {lowest:.3e}，超过容差 {NEGATIVE_TOLERANCE}",
                                 estimate=-lowest)
        values = np.clip(values, 0.0, None)
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def size(self) -> int:
        return len(self.grid)

    @property
    def spacing(self) -> float:
        return 2 * math.pi / self.size

    def integral(self) -> float:
        # 周期被积函数上的梯形公式
        return math.fsum(self.values) * self.spacing

    def weights(self) -> np.ndarray:
        return self.values * self.spacing


def _fourier_assemble(grid: np.ndarray, zero_mode: float, modes: np.ndarray, amplitudes: np.ndarray) -> np.ndarray:
    """(1/2π)[S₀ + 2 Re Σ_{d>0} S_d e^{−idθ}]"""
    values = np.full(len(grid), zero_mode, dtype=float)
    if len(modes):
        values += 2 * (np.exp(-1j * np.outer(grid, modes)) @ amplitudes).real
    return values / (2 * math.pi)


def _diagonal_sums(entries: np.ndarray) -> np.ndarray:
    """S_d = Σₙ ρ_{n+d, n}，d = 0 … N−1"""
    return np.array([np.trace(entries, offset=-d) for d in range(entries.shape[0])])


def _check_normalization(pd: PhaseDistribution) -> None:
    total = pd.integral()
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        logger.warning("相位分布积分 %.12g 偏离 1 超过 %.0e", total, NORMALIZATION_TOLERANCE)


def oscillator_phase_distribution(rho: Union[ReducedDensityMatrix, Sequence[ReducedDensityMatrix]], M: int,
                                  metadata: Optional[Mapping[str, Any]] = None) -> PhaseDistribution:
    """P(θ) = (1/2π) Σ ρ_{m,n} e^{i(n−m)θ}，按对角线分组为 Fourier 模式求和

    传入 su11 偶/奇扇区矩阵序列时，两扇区的模式叠加且指数加倍为 e^{i2(n−m)θ}。
    """
    matrices = [rho] if isinstance(rho, ReducedDensityMatrix) else list(rho)
    if not matrices:
        raise ConfigurationError("至少需要一个密度矩阵")

    bases = {m.basis for m in matrices}
    if bases <= set(SECTOR_BASES):
        fold = 2
    elif bases == {Basis.NUMBER} and len(matrices) == 1:
        fold = 1
    else:
        raise ConfigurationError(f"振子相位分布不支持基矢组合: {sorted(b.value for b in bases)}")

    grid = angle_grid(M)
    zero_mode = 0.0
    collected: dict[int, complex] = {}
    for m in matrices:
        sums = _diagonal_sums(m.entries)
        zero_mode += float(sums[0].real)
        for d in range(1, len(sums)):
            collected[fold * d] = collected.get(fold * d, 0j) + sums[d]

    modes = np.array(sorted(collected), dtype=float)
    amplitudes = np.array([collected[int(d)] for d in modes], dtype=complex)
    values = _fourier_assemble(grid, zero_mode, modes, amplitudes)

    head = matrices[0]
    meta = {
        "basis": ",".join(m.basis.value for m in matrices),
        "t": head.t,
        "trunc_error": max(m.trunc_error for m in matrices),
        **{k: v for k, v in head.diagnostics.items() if k in ("eta", "gamma")},
    }
    meta.update(metadata or {})
    pd = PhaseDistribution(grid, values, "theta", fold, meta)
    _check_normalization(pd)
    return pd


def dipole_phase_weights(j: Fraction = J_HALF) -> np.ndarray:
    """θ 积分后的权重 (2j+1)/(2π) · √[C(2j,j+n) C(2j,j+m)] · B(j+(n+m)/2+1, j−(n+m)/2+1)

    行列按 n, m 从 −j 升序。
    """
    j = Fraction(j)
    two_j = int(2 * j)
    if two_j != 2 * j or two_j < 0:
        raise DomainError(f"j 必须是非负半整数: {j}")
    table = log_factorials(max(128, two_j))
    projections = [-j + k for k in range(two_j + 1)]
    half_binomial = np.array([0.5 * table.log_binomial(two_j, int(j + n)) for n in projections])
    weights = np.empty((two_j + 1, two_j + 1))
    for a, n in enumerate(projections):
        for b, m in enumerate(projections):
            s = float(n + m) / 2
            weights[a, b] = math.exp(half_binomial[a] + half_binomial[b]) \
                * beta(float(j) + s + 1, float(j) - s + 1)
    return weights * (two_j + 1) / (2 * math.pi)


def atomic_phase_distribution_general(rho: ReducedDensityMatrix, M: int,
                                      metadata: Optional[Mapping[str, Any]] = None) -> PhaseDistribution:
    """偶极矩相位分布 P(φ) = Σ_{n,m} w_{nm} ρ_{nm} e^{i(n−m)φ}"""
    if rho.basis is not Basis.DICKE_J_HALF:
        raise ConfigurationError(f"原子相位分布需要 Dicke 基，得到 {rho.basis.value}")
    if rho.dim != 2:
        raise ConfigurationError(f"j = 1/2 的 Dicke 基维度应为 2，得到 {rho.dim}")

    weighted = dipole_phase_weights(J_HALF) * rho.entries
    # ρ 行下标为 n，列下标为 m，n − m = d 即第 −d 条对角线
    sums = _diagonal_sums(weighted) * (2 * math.pi)
    grid = angle_grid(M)
    modes = np.arange(1, len(sums), dtype=float)
    # e^{+i d φ}，与振子约定相反
    values = _fourier_assemble(-grid, float(sums[0].real), modes, sums[1:])

    meta = {"basis": rho.basis.value, "t": rho.t, "trunc_error": rho.trunc_error,
            **{k: v for k, v in rho.diagnostics.items() if k in ("eta", "gamma")}}
    meta.update(metadata or {})
    pd = PhaseDistribution(grid, values, "phi", 1, meta)
    _check_normalization(pd)
    return pd


def atomic_contrast(variant: AtomicStateParams, omega: float, gamma: float) -> float:
    """闭式中余弦项的带符号幅度 ±C"""
    decay = math.exp(-omega * omega * gamma)
    if variant.variant is AtomicStateKind.ATOMIC_COHERENT:
        return math.pi / 4 * math.sin(variant.alpha) * decay
    if variant.variant is AtomicStateKind.ATOMIC_SQUEEZED:
        sign = 1.0 if variant.pole > 0 else -1.0
        return sign * math.pi / (4 * math.cosh(variant.theta_s)) * decay
    return 0.0


def atomic_closed_form(variant: AtomicStateParams, spec: SystemSpec, bath: BathParams, t: float, M: int,
                       method: KernelMethod = "closed", settings: Optional[QuadratureSettings] = None,
                       pair: Optional[KernelPair] = None) -> PhaseDistribution:
    """j = 1/2 的闭式相位分布

    coherent(α, β):  (1/2π)[1 + (π/4) sin α cos(β + ωt − φ) e^{−ω²γ(t)}]
    squeezed:        (1/2π)[1 ∓ π/(4 cosh Θ) cos(φ − ωt) e^{−ω²γ(t)}]，南极取 −，北极取 +
    dicke:           (2j+1)/(2π) · C(2j, j+m̃) · B(j+m̃+1, j−m̃+1) = 1/(2π)
    """
    if spec.kind is not SystemKind.TWO_LEVEL:
        raise ConfigurationError(f"原子闭式解只适用于二能级体系，得到 {spec.kind.value}")
    pair = pair if pair is not None else kernels(bath, t, method, settings)
    grid = angle_grid(M)
    omega = spec.omega

    if variant.variant is AtomicStateKind.DICKE:
        m_tilde = float(variant.m_tilde)
        level = 2 / (2 * math.pi) * beta(1.5 + m_tilde, 1.5 - m_tilde)
        values = np.full(M, level)
    else:
        contrast = atomic_contrast(variant, omega, pair.gamma)
        if variant.variant is AtomicStateKind.ATOMIC_COHERENT:
            argument = variant.beta + omega * t - grid
        else:
            argument = grid - omega * t
        values = (1 + contrast * np.cos(argument)) / (2 * math.pi)

    meta = {"basis": Basis.DICKE_J_HALF.value, "t": t, "trunc_error": 0.0, "eta": pair.eta,
            "gamma": pair.gamma, "variant": variant.variant.value}
    return PhaseDistribution(grid, values, "phi", 1, meta)
