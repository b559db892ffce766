import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.special import gammainc

from core.config import NumericSettings
from core.errors import CapacityError, DegenerateSqueezeError, DomainError
from core.specfun.special import hyp2f1_terminating, log_factorials, scaled_hermite_sequence
from core.systems.propagator import ReducedDensityMatrix
from core.systems.spectra import Basis


logger = logging.getLogger(__name__)

R1_MIN = NumericSettings.r1_min


@dataclass(frozen=True)
class CoherentParams:
    alpha_mag: float
    theta0: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.alpha_mag) or self.alpha_mag < 0:
            raise DomainError(f"|α| 必须是有限非负数: {self.alpha_mag}")

    @classmethod
    def from_alpha2(cls, alpha2: float, theta0: float = 0.0) -> "CoherentParams":
        if alpha2 < 0:
            raise DomainError(f"|α|² 必须非负: {alpha2}")
        return cls(math.sqrt(alpha2), theta0)

    @property
    def alpha(self) -> complex:
        return self.alpha_mag * complex(math.cos(self.theta0), math.sin(self.theta0))


@dataclass(frozen=True)
class SqueezeParams:
    """r1 与压缩相位；Hermite 乘积形式中为 ψ，G 矩阵中为 φ (两者相差 π)"""

    r1: float
    phase: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.r1) or self.r1 <= 0:
            raise DomainError(f"压缩幅度 r1 必须为有限正数: {self.r1}")


@dataclass(frozen=True)
class KerrParams:
    chi: float
    base: CoherentParams

    def __post_init__(self):
        if not math.isfinite(self.chi):
            raise DomainError(f"Kerr 相位 χ 必须有限: {self.chi}")


@dataclass(frozen=True)
class StateCoeffs:
    """纯态在数态基下的系数 cₙ = ⟨n|ψ⟩，n < N"""

    amplitudes: np.ndarray
    tail_weight: float

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex)
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    @property
    def norm_sq(self) -> float:
        return math.fsum(np.abs(self.amplitudes) ** 2)


def _check_dimension(N: int, n_max: int) -> None:
    if N < 1:
        raise DomainError(f"截断维度 N 必须 ≥ 1: {N}")
    if N > n_max + 1:
        raise CapacityError(f"截断维度 N={N} 超过容量 n_max+1={n_max + 1}")


def _check_squeeze(s: SqueezeParams, r1_min: float) -> None:
    if s.r1 < r1_min:
        raise DegenerateSqueezeError(
            f"r1={s.r1} 低于退化阈值 {r1_min}，请改用 coherent_coeffs / kerr_coeffs"
        )


def poisson_tail(alpha2: float, N: int) -> float:
    """P(n ≥ N)，n ~ Poisson(|α|²)"""
    if alpha2 == 0:
        return 0.0
    return float(gammainc(N, alpha2))


def coherent_dimension(p: CoherentParams, tol: float = NumericSettings.truncation_tol,
                       n_max: int = NumericSettings.n_max) -> int:
    """丢弃权重 < tol 的最小截断维度"""
    alpha2 = p.alpha_mag ** 2
    for N in range(1, n_max + 2):
        if poisson_tail(alpha2, N) < tol:
            return N
    raise CapacityError(f"|α|²={alpha2} 在 n_max={n_max} 内无法满足截断容差 {tol}")


def coherent_coeffs(p: CoherentParams, N: int, n_max: int = NumericSettings.n_max) -> StateCoeffs:
    """cₙ = ⟨n|α⟩ = |α|ⁿ/√n! · e^{−|α|²/2} · e^{inθ₀}"""
    _check_dimension(N, n_max)
    n = np.arange(N)
    if p.alpha_mag == 0:
        amplitudes = (n == 0).astype(complex)
    else:
        lf = log_factorials(n_max).values[:N]
        log_mag = n * math.log(p.alpha_mag) - 0.5 * lf - 0.5 * p.alpha_mag ** 2
        amplitudes = np.exp(log_mag) * np.exp(1j * n * p.theta0)
    return StateCoeffs(amplitudes, poisson_tail(p.alpha_mag ** 2, N))


def kerr_coeffs(p: KerrParams, N: int, n_max: int = NumericSettings.n_max) -> StateCoeffs:
    """qₙ = αⁿ/√n! · e^{−|α|²/2} · e^{−iχn(n−1)}"""
    base = coherent_coeffs(p.base, N, n_max)
    n = np.arange(N)
    return StateCoeffs(base.amplitudes * np.exp(-1j * p.chi * n * (n - 1)), base.tail_weight)


def _squeezed_coherent_amplitudes(p: CoherentParams, s: SqueezeParams, count: int, n_max: int) -> np.ndarray:
    r1, psi = s.r1, s.phase
    z = p.alpha_mag * np.exp(1j * (p.theta0 - psi / 2)) / math.sqrt(math.sinh(2 * r1))
    # u_n = H_n(z)·(tanh r₁/2)^{n/2}/√n!
    u = scaled_hermite_sequence(count - 1, z, math.sqrt(math.tanh(r1) / 2), n_max)
    envelope = math.exp(-0.5 * p.alpha_mag ** 2 * (1 - math.tanh(r1) * math.cos(2 * p.theta0 - psi)))
    n = np.arange(count)
    return np.exp(1j * psi * n / 2) * u * envelope / math.sqrt(math.cosh(r1))


def _dimension_from_weights(amplitudes: np.ndarray, tol: float, what: str, n_max: int) -> int:
    cumulative = np.cumsum(np.abs(amplitudes) ** 2)
    reached = np.nonzero(1.0 - cumulative < tol)[0]
    if len(reached) == 0:
        raise CapacityError(f"{what}在 n_max={n_max} 内无法满足截断容差 {tol}")
    return int(reached[0]) + 1


def squeezed_coherent_dimension(p: CoherentParams, s: SqueezeParams,
                                settings: Optional[NumericSettings] = None) -> int:
    settings = settings or NumericSettings()
    _check_squeeze(s, settings.r1_min)
    full = _squeezed_coherent_amplitudes(p, s, settings.n_max + 1, settings.n_max)
    return _dimension_from_weights(full, settings.truncation_tol, "压缩相干态", settings.n_max)


def squeezed_coherent_dm(p: CoherentParams, s: SqueezeParams, N: Optional[int] = None,
                         settings: Optional[NumericSettings] = None) -> ReducedDensityMatrix:
    """压缩相干态 ρₘₙ(0)，Hermite 乘积形式，截断后归一化到迹 1"""
    settings = settings or NumericSettings()
    _check_squeeze(s, settings.r1_min)

    if N is None:
        N = squeezed_coherent_dimension(p, s, settings)
    _check_dimension(N, settings.n_max)
    amplitudes = _squeezed_coherent_amplitudes(p, s, N, settings.n_max)

    pre_trace = math.fsum(np.abs(amplitudes) ** 2)
    trunc_error = max(0.0, 1.0 - pre_trace)
    logger.debug("压缩相干态 N=%d, 归一化前迹=%.15g", N, pre_trace)

    entries = np.outer(amplitudes, amplitudes.conj()) / pre_trace
    return ReducedDensityMatrix(entries, Basis.NUMBER, 0.0, trunc_error,
                                {"pre_normalization_trace": pre_trace})


def squeeze_matrix_element(m: int, p: int, s: SqueezeParams, n_max: int = NumericSettings.n_max,
                           r1_min: float = R1_MIN) -> complex:
    """G_{mp}(z) = ⟨m|S(z)|p⟩，z = r₁e^{iφ}；m, p 奇偶不同时严格为 0"""
    if m < 0 or p < 0:
        raise DomainError(f"数态下标必须非负: m={m}, p={p}")
    _check_squeeze(s, r1_min)
    if (m + p) % 2:
        return 0j

    odd = m % 2
    big_m, big_p = m // 2, p // 2
    r1 = s.r1
    table = log_factorials(max(n_max, m, p))

    log_mag = (0.5 * (table.log_factorial(m) + table.log_factorial(p))
               - table.log_factorial(big_m) - table.log_factorial(big_p)
               - (1.5 if odd else 0.5) * math.log(math.cosh(r1))
               + (big_m + big_p) * math.log(math.tanh(r1) / 2))
    sign = -1.0 if big_p % 2 else 1.0
    series = hyp2f1_terminating(big_p, big_m, 1.5 if odd else 0.5, -1.0 / math.sinh(r1) ** 2,
                                max(n_max, big_m, big_p))
    return sign * math.exp(log_mag) * series * complex(math.cos((big_m - big_p) * s.phase),
                                                        math.sin((big_m - big_p) * s.phase))


@lru_cache(maxsize=16)
def _squeeze_matrix_cached(s: SqueezeParams, rows: int, cols: int, n_max: int, r1_min: float) -> np.ndarray:
    g = np.zeros((rows, cols), dtype=complex)
    for m in range(rows):
        for p in range(m % 2, cols, 2):
            g[m, p] = squeeze_matrix_element(m, p, s, n_max, r1_min)
    g.setflags(write=False)
    return g


def squeeze_matrix(s: SqueezeParams, rows: int, cols: Optional[int] = None,
                   settings: Optional[NumericSettings] = None) -> np.ndarray:
    settings = settings or NumericSettings()
    cols = rows if cols is None else cols
    _check_dimension(rows, settings.n_max)
    _check_dimension(cols, settings.n_max)
    return _squeeze_matrix_cached(s, rows, cols, settings.n_max, settings.r1_min)


def squeezed_kerr_coeffs(p: KerrParams, s: SqueezeParams, N: Optional[int] = None,
                         settings: Optional[NumericSettings] = None) -> StateCoeffs:
    """s_{2m} = Σ_p q_{2p} G_{2m,2p}(z)，s_{2m+1} = Σ_p q_{2p+1} G_{2m+1,2p+1}(z)"""
    settings = settings or NumericSettings()
    _check_squeeze(s, settings.r1_min)

    source_dim = coherent_dimension(p.base, settings.truncation_tol, settings.n_max)
    q = kerr_coeffs(p, source_dim, settings.n_max)
    rows = settings.n_max + 1 if N is None else N
    amplitudes = squeeze_matrix(s, rows, source_dim, settings) @ q.amplitudes

    if N is None:
        amplitudes = amplitudes[:_dimension_from_weights(amplitudes, settings.truncation_tol, "压缩 Kerr 态",
                                                         settings.n_max)]

    tail = max(0.0, 1.0 - math.fsum(np.abs(amplitudes) ** 2))
    return StateCoeffs(amplitudes, tail)


def pure_state_dm(coeffs: StateCoeffs, basis: Basis = Basis.NUMBER) -> ReducedDensityMatrix:
    a = coeffs.amplitudes
    return ReducedDensityMatrix(np.outer(a, a.conj()), basis, 0.0, coeffs.tail_weight)


def split_sectors(coeffs: StateCoeffs) -> Tuple[ReducedDensityMatrix, ReducedDensityMatrix]:
    """数态振幅 → SU(1,1) 偶 (k = 1/4)、奇 (k = 3/4) 扇区密度矩阵"""
    even = coeffs.amplitudes[0::2]
    odd = coeffs.amplitudes[1::2]
    return (
        ReducedDensityMatrix(np.outer(even, even.conj()), Basis.SU11_EVEN, 0.0, coeffs.tail_weight),
        ReducedDensityMatrix(np.outer(odd, odd.conj()), Basis.SU11_ODD, 0.0, coeffs.tail_weight),
    )


def merge_sectors(even: ReducedDensityMatrix, odd: ReducedDensityMatrix) -> ReducedDensityMatrix:
    """两个扇区拼回数态基 (n = 2m 与 n = 2m+1)，跨宇称相干项为 0"""
    if even.basis is not Basis.SU11_EVEN or odd.basis is not Basis.SU11_ODD:
        raise DomainError(f"需要偶、奇扇区矩阵，得到 {even.basis.value}, {odd.basis.value}")
    dim = even.dim + odd.dim
    entries = np.zeros((dim, dim), dtype=complex)
    entries[0::2, 0::2] = even.entries
    entries[1::2, 1::2] = odd.entries
    return ReducedDensityMatrix(entries, Basis.NUMBER, even.t, max(even.trunc_error, odd.trunc_error))
