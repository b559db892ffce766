import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from core.errors import DomainError
from core.specfun.special import log_factorials, wigner_d
from core.systems.propagator import ReducedDensityMatrix
from core.systems.spectra import Basis


logger = logging.getLogger(__name__)

J_HALF = Fraction(1, 2)
DEFAULT_THETA_S = -0.5494


class AtomicStateKind(str, Enum):
    DICKE = "dicke"
    ATOMIC_COHERENT = "atomic_coherent"
    ATOMIC_SQUEEZED = "atomic_squeezed"


@dataclass(frozen=True)
class AtomicStateParams:
    """二能级原子初态: Wigner-Dicke |j, m̃⟩、原子相干态 |α, β⟩、原子压缩态 |ζ, p⟩"""

    variant: AtomicStateKind
    m_tilde: Fraction = J_HALF
    alpha: float = 0.0
    beta: float = 0.0
    theta_s: float = DEFAULT_THETA_S
    pole: Fraction = -J_HALF

    def __post_init__(self):
        object.__setattr__(self, "variant", AtomicStateKind(self.variant))
        object.__setattr__(self, "m_tilde", Fraction(self.m_tilde))
        object.__setattr__(self, "pole", Fraction(self.pole))
        if self.variant is AtomicStateKind.DICKE and self.m_tilde not in (-J_HALF, J_HALF):
            raise DomainError(f"j = 1/2 时 m̃ 只能取 ±1/2: {self.m_tilde}")
        if self.variant is AtomicStateKind.ATOMIC_COHERENT:
            if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
                raise DomainError(f"原子相干态角度必须有限: α={self.alpha}, β={self.beta}")
        if self.variant is AtomicStateKind.ATOMIC_SQUEEZED:
            if self.pole not in (-J_HALF, J_HALF):
                raise DomainError(f"极点 p 只能取 ±1/2: {self.pole}")
            if not (math.isfinite(self.theta_s) and self.theta_s < 0):
                raise DomainError(f"e^{{2Θ}} = tanh(2|ζ|) 要求 Θ < 0: Θ={self.theta_s}")

    @classmethod
    def dicke(cls, m_tilde: Fraction) -> "AtomicStateParams":
        return cls(AtomicStateKind.DICKE, m_tilde=m_tilde)

    @classmethod
    def coherent(cls, alpha: float, beta: float) -> "AtomicStateParams":
        return cls(AtomicStateKind.ATOMIC_COHERENT, alpha=alpha, beta=beta)

    @classmethod
    def squeezed(cls, theta_s: float, pole: Fraction) -> "AtomicStateParams":
        return cls(AtomicStateKind.ATOMIC_SQUEEZED, theta_s=theta_s, pole=pole)


def zeta_from_theta(theta_s: float) -> float:
    """|ζ| = artanh(e^{2Θ}) / 2"""
    if theta_s >= 0:
        raise DomainError(f"Θ 必须为负: {theta_s}")
    return math.atanh(math.exp(2 * theta_s)) / 2


def theta_from_zeta(zeta_mag: float) -> float:
    """Θ = ½ ln tanh(2|ζ|)"""
    if zeta_mag <= 0:
        raise DomainError(f"|ζ| 必须为正: {zeta_mag}")
    return 0.5 * math.log(math.tanh(2 * zeta_mag))


def _projections(j: Fraction) -> list[Fraction]:
    j = Fraction(j)
    return [j - k for k in range(int(2 * j), -1, -1)]


def atomic_coherent_amplitudes(alpha: float, beta: float, j: Fraction = J_HALF) -> np.ndarray:
    """⟨j,m|α,β⟩ = √C(2j, j+m) · sin(α/2)^{j+m} · cos(α/2)^{j−m} · e^{−i(j+m)β}，m 从 −j 升序"""
    j = Fraction(j)
    table = log_factorials(max(128, int(2 * j)))
    out = []
    for m in _projections(j):
        up, down = int(j + m), int(j - m)
        magnitude = math.exp(0.5 * table.log_binomial(int(2 * j), up)) \
            * math.sin(alpha / 2) ** up * math.cos(alpha / 2) ** down
        out.append(magnitude * complex(math.cos(up * beta), -math.sin(up * beta)))
    return np.array(out)


def atomic_squeeze_norm(theta_s: float, p: Fraction, j: Fraction = J_HALF) -> float:
    """|A_p|² 的闭式: (Σ_r (−1)^r (2j−r)! (cosh Θ)^{2j−2r} / [r! (j+p−r)! (j−p−r)!])^{−1}"""
    j, p = Fraction(j), Fraction(p)
    two_j, up, down = int(2 * j), int(j + p), int(j - p)
    table = log_factorials(max(128, two_j))
    ch = math.cosh(theta_s)
    terms = []
    for r in range(0, min(up, down, two_j) + 1):
        log_mag = table.log_factorial(two_j - r) - table.log_factorial(r) \
            - table.log_factorial(up - r) - table.log_factorial(down - r)
        terms.append((-1) ** r * math.exp(log_mag) * ch ** (two_j - 2 * r))
    return 1.0 / math.fsum(terms)


def atomic_squeezed_amplitudes(theta_s: float, p: Fraction, j: Fraction = J_HALF) -> tuple[np.ndarray, float]:
    """⟨j,n|ζ,p⟩ = A_p e^{nΘ} d^j_{np}(π/2)，A_p 由数值归一化确定；返回 (振幅, |A_p|²)"""
    raw = np.array([math.exp(float(n) * theta_s) * wigner_d(j, n, p, math.pi / 2) for n in _projections(j)])
    norm_sq = 1.0 / math.fsum(raw ** 2)
    return raw * math.sqrt(norm_sq), norm_sq


def atomic_initial_dm(p: AtomicStateParams, j: Fraction = J_HALF) -> ReducedDensityMatrix:
    """j = 1/2 的 2×2 初始密度矩阵，基矢顺序 (−1/2, +1/2)"""
    if Fraction(j) != J_HALF:
        raise DomainError(f"二能级原子要求 j = 1/2: {j}")

    diagnostics: dict = {}
    if p.variant is AtomicStateKind.DICKE:
        amplitudes = np.zeros(2, dtype=complex)
        amplitudes[int(p.m_tilde + J_HALF)] = 1.0
    elif p.variant is AtomicStateKind.ATOMIC_COHERENT:
        amplitudes = atomic_coherent_amplitudes(p.alpha, p.beta, j)
    else:
        amplitudes, norm_sq = atomic_squeezed_amplitudes(p.theta_s, p.pole, j)
        closed = atomic_squeeze_norm(p.theta_s, p.pole, j)
        diagnostics = {"a_p_sq_numeric": norm_sq, "a_p_sq_closed": closed}
        if abs(norm_sq - closed) > 1e-12 * max(1.0, closed):
            logger.warning("|A_p|² 数值归一化 %.15g 与闭式 %.15g 不一致", norm_sq, closed)

    return ReducedDensityMatrix(np.outer(amplitudes, np.conj(amplitudes)), Basis.DICKE_J_HALF, 0.0, 0.0,
                                diagnostics)
