import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from core.bath.kernels import BathParams, KernelMethod, KernelPair, kernels
from core.config import QuadratureSettings
from core.errors import NumericalError, UsageError
from core.systems.spectra import Basis, SystemSpec, check_basis, energies


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """系统本征基下截断的约化密度矩阵 ρˢₙₘ(t)

    su11 扇区矩阵单独的迹等于该扇区的概率权重，两个扇区合起来迹为 1。
    """

    entries: np.ndarray
    basis: Basis
    t: float = 0.0
    trunc_error: float = 0.0
    diagnostics: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise NumericalError(f"密度矩阵必须是方阵，得到形状 {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "basis", Basis(self.basis))
        object.__setattr__(self, "diagnostics", dict(self.diagnostics))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def hermiticity_error(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2).min())


def phase_factors(spec: SystemSpec, basis: Basis, dim: int, t: float, pair: KernelPair) -> np.ndarray:
    """exp[−i(Eₙ−Eₘ)t] · exp[iη(t)(Eₙ²−Eₘ²)] · exp[−(Eₙ−Eₘ)²γ(t)]，对角元恒为 1"""
    e = energies(spec, basis, dim)
    delta = e[:, None] - e[None, :]
    delta_sq = (e * e)[:, None] - (e * e)[None, :]
    return np.exp(-1j * delta * t + 1j * pair.eta * delta_sq - delta * delta * pair.gamma)


def propagate(rho0: ReducedDensityMatrix, spec: SystemSpec, bath: BathParams, t: float,
              method: KernelMethod = "closed", settings: Optional[QuadratureSettings] = None,
              pair: Optional[KernelPair] = None) -> ReducedDensityMatrix:
    """QND 退相干传播: 逐元素乘以相位/衰减因子，布居不变"""
    if rho0.t != 0:
        raise UsageError(f"只能传播 t = 0 的初始密度矩阵，当前 t={rho0.t}")
    basis = check_basis(spec, rho0.basis)
    pair = pair if pair is not None else kernels(bath, t, method, settings)

    factors = phase_factors(spec, basis, rho0.dim, t, pair)
    diagnostics = dict(rho0.diagnostics)
    diagnostics.update(eta=pair.eta, gamma=pair.gamma)
    return ReducedDensityMatrix(
        entries=rho0.entries * factors,
        basis=basis,
        t=t,
        trunc_error=rho0.trunc_error,
        diagnostics=diagnostics,
    )


def master_equation_rhs(rho: ReducedDensityMatrix, spec: SystemSpec, rates: KernelPair) -> np.ndarray:
    """dρₙₘ/dt = [−i(Eₙ−Eₘ) + iη̇(Eₙ²−Eₘ²) − (Eₙ−Eₘ)²γ̇] ρₙₘ"""
    e = energies(spec, rho.basis, rho.dim)
    delta = e[:, None] - e[None, :]
    delta_sq = (e * e)[:, None] - (e * e)[None, :]
    generator = -1j * delta + 1j * rates.eta * delta_sq - delta * delta * rates.gamma
    return generator * rho.entries
