from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np

from core.errors import ConfigurationError, DomainError


class SystemKind(str, Enum):
    HARMONIC = "harmonic"
    ANHARMONIC = "anharmonic"
    TWO_LEVEL = "two_level"


class Basis(str, Enum):
    NUMBER = "number"
    SU11_EVEN = "su11_even"
    SU11_ODD = "su11_odd"
    DICKE_J_HALF = "dicke_j_half"


# SU(1,1) 正离散系列的 Bargmann 指标
BARGMANN_INDEX = {Basis.SU11_EVEN: 0.25, Basis.SU11_ODD: 0.75}

SUPPORTED_BASES = {
    SystemKind.HARMONIC: (Basis.NUMBER,),
    SystemKind.ANHARMONIC: (Basis.SU11_EVEN, Basis.SU11_ODD, Basis.NUMBER),
    SystemKind.TWO_LEVEL: (Basis.DICKE_J_HALF,),
}


@dataclass(frozen=True)
class SystemSpec:
    kind: SystemKind
    omega: float
    lam: Optional[float] = None
    j: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "kind", SystemKind(self.kind))
        object.__setattr__(self, "j", Fraction(self.j))
        if self.omega <= 0:
            raise DomainError(f"系统频率 ω 必须为正: {self.omega}")
        if (self.lam is not None) != (self.kind is SystemKind.ANHARMONIC):
            raise ConfigurationError(f"λ 仅且必须用于非谐振子: kind={self.kind.value}, λ={self.lam}")
        if self.lam is not None and self.lam < 0:
            raise DomainError(f"非谐参数 λ 必须非负: {self.lam}")
        if self.kind is SystemKind.TWO_LEVEL and self.j != Fraction(1, 2):
            raise ConfigurationError(f"二能级原子固定 j = 1/2，得到 j={self.j}")

    @classmethod
    def harmonic(cls, omega: float) -> "SystemSpec":
        return cls(SystemKind.HARMONIC, omega)

    @classmethod
    def anharmonic(cls, omega: float, lam: float) -> "SystemSpec":
        return cls(SystemKind.ANHARMONIC, omega, lam)

    @classmethod
    def two_level(cls, omega: float) -> "SystemSpec":
        return cls(SystemKind.TWO_LEVEL, omega)


def check_basis(spec: SystemSpec, basis: Basis) -> Basis:
    basis = Basis(basis)
    if basis not in SUPPORTED_BASES[spec.kind]:
        raise ConfigurationError(f"基矢 {basis.value} 不适用于 {spec.kind.value} 体系")
    return basis


def dicke_projection(index: int) -> Fraction:
    """Dicke 基下标 → 磁量子数: 0 ↔ −1/2, 1 ↔ +1/2"""
    if index not in (0, 1):
        raise DomainError(f"j = 1/2 的 Dicke 基下标只能是 0 或 1: {index}")
    return Fraction(2 * index - 1, 2)


def _su11_energy(omega: float, lam: float, m: int, k: float) -> float:
    return 2.0 * (omega * (m + k) + lam * m * (m + 2 * k - 1))


def energy(spec: SystemSpec, basis: Basis, n: int) -> float:
    """本征能量 (ħ = 1)

    number 基: 谐振子 ω(n + ½)；非谐振子取 n = 2m + 宇称 对应扇区的 SU(1,1) 能量。
    su11 基: 2[ω(m + k) + λm(m + 2k − 1)]，k = 1/4 (偶) 或 3/4 (奇)。
    dicke 基: ωm，下标 0, 1 对应 m = −1/2, +1/2。
    """
    basis = check_basis(spec, basis)
    if basis is Basis.DICKE_J_HALF:
        return spec.omega * float(dicke_projection(n))
    if n < 0:
        raise DomainError(f"能级下标必须非负: {n}")
    if spec.kind is SystemKind.HARMONIC:
        return spec.omega * (n + 0.5)
    if basis is Basis.NUMBER:
        sector = Basis.SU11_ODD if n % 2 else Basis.SU11_EVEN
        return _su11_energy(spec.omega, spec.lam, n // 2, BARGMANN_INDEX[sector])
    return _su11_energy(spec.omega, spec.lam, n, BARGMANN_INDEX[basis])


def energies(spec: SystemSpec, basis: Basis, dim: int) -> np.ndarray:
    return np.array([energy(spec, basis, n) for n in range(dim)], dtype=float)
