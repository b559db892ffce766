import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import gammaln

from core.errors import CapacityError, DomainError


DEFAULT_N_MAX = 128

HalfInteger = Union[int, float, Fraction]


@dataclass(frozen=True)
class LogFactorialTable:
    """values[n] = ln(n!)，n = 0..n_max，构建后只读共享"""

    values: np.ndarray

    @classmethod
    def build(cls, n_max: int = DEFAULT_N_MAX) -> "LogFactorialTable":
        if n_max < 0:
            raise DomainError(f"n_max 必须非负: {n_max}")
        values = gammaln(np.arange(n_max + 1, dtype=float) + 1.0)
        values[0] = 0.0
        values.setflags(write=False)
        return cls(values=values)

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    def log_factorial(self, n: int) -> float:
        if n < 0:
            raise DomainError(f"阶乘参数必须非负: {n}")
        if n > self.n_max:
            raise CapacityError(f"阶乘参数 {n} 超过容量 n_max={self.n_max}")
        return float(self.values[n])

    def log_binomial(self, n: int, k: int) -> float:
        if k < 0 or k > n:
            raise DomainError(f"二项式系数参数越界: C({n}, {k})")
        return self.log_factorial(n) - self.log_factorial(k) - self.log_factorial(n - k)


@lru_cache(maxsize=8)
def log_factorials(n_max: int = DEFAULT_N_MAX) -> LogFactorialTable:
    return LogFactorialTable.build(n_max)


def log_binomial(n: int, k: int, n_max: int = DEFAULT_N_MAX) -> float:
    return log_factorials(max(n_max, n)).log_binomial(n, k)


def hermite(n: int, z: complex, n_max: int = DEFAULT_N_MAX) -> complex:
    """物理学家 Hermite 多项式 H_n(z)，三项递推"""
    return complex(hermite_sequence(n, z, n_max)[n])


def hermite_sequence(n: int, z: complex, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """返回 H_0(z) .. H_n(z)"""
    if n < 0:
        raise DomainError(f"Hermite 阶数必须非负: {n}")
    if n > n_max:
        raise CapacityError(f"Hermite 阶数 {n} 超过容量 n_max={n_max}")

    out = np.empty(n + 1, dtype=complex)
    out[0] = 1.0
    if n >= 1:
        out[1] = 2.0 * z
    for k in range(1, n):
        out[k + 1] = 2.0 * z * out[k] - 2.0 * k * out[k - 1]
    return out


def scaled_hermite_sequence(n: int, z: complex, scale: float, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """返回 u_k = H_k(z) · scale^k / √(k!)，k = 0..n

    等价递推: u_{k+1} = 2z·scale/√(k+1)·u_k − 2k·scale²/√(k(k+1))·u_{k−1}，
    |z| 很大而 scale 很小时不会溢出。
    """
    if n < 0:
        raise DomainError(f"Hermite 阶数必须非负: {n}")
    if n > n_max:
        raise CapacityError(f"Hermite 阶数 {n} 超过容量 n_max={n_max}")

    out = np.empty(n + 1, dtype=complex)
    out[0] = 1.0
    if n >= 1:
        out[1] = 2.0 * z * scale
    for k in range(1, n):
        out[k + 1] = (2.0 * z * scale * out[k] - 2.0 * k * scale * scale * out[k - 1] / math.sqrt(k)) / math.sqrt(k + 1)
    return out


def hyp2f1_terminating(p: int, m: int, c: float, x: float, n_max: int = DEFAULT_N_MAX) -> float:
    """₂F₁[−p, −m; c; x]，有限项求和

    项比 (s−p)(s−m) / ((c+s)(s+1)) · x 关于 p, m 对称，交换参数结果逐位一致。
    """
    if c <= 0:
        raise DomainError(f"₂F₁ 参数 c 必须为正: c={c}")
    if p < 0 or m < 0:
        raise DomainError(f"₂F₁ 终止参数必须非负: p={p}, m={m}")
    if p > n_max or m > n_max:
        raise CapacityError(f"₂F₁ 参数超过容量 n_max={n_max}: p={p}, m={m}")

    terms = [1.0]
    term = 1.0
    for s in range(min(p, m)):
        term *= (s - p) * (s - m) / ((c + s) * (s + 1)) * x
        terms.append(term)
    return math.fsum(terms)


def ln_gamma(x: float) -> float:
    if x <= 0:
        raise DomainError(f"ln Γ 的参数必须为正: x={x}")
    return float(gammaln(x))


def beta(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        raise DomainError(f"Beta 函数的参数必须为正: a={a}, b={b}")
    return math.exp(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))


def _twice(value: HalfInteger, name: str) -> int:
    doubled = Fraction(value).limit_denominator(4) * 2
    if doubled.denominator != 1:
        raise DomainError(f"{name} 必须是整数或半整数: {value}")
    return int(doubled)


def wigner_d(j: HalfInteger, n: HalfInteger, p: HalfInteger, beta_angle: float,
             n_max: int = DEFAULT_N_MAX) -> float:
    """Wigner 小 d 矩阵元 d^j_{np}(β) = ⟨j,n| exp(−iβJ_Y) |j,p⟩"""
    j2, n2, p2 = _twice(j, "j"), _twice(n, "n"), _twice(p, "p")
    if j2 < 1:
        raise DomainError(f"j 必须不小于 1/2: j={j}")
    if abs(n2) > j2 or abs(p2) > j2:
        raise DomainError(f"磁量子数超出范围: |n|, |p| ≤ j，得到 j={j}, n={n}, p={p}")
    if (j2 - n2) % 2 or (j2 - p2) % 2:
        raise DomainError(f"j 与磁量子数的奇偶不一致: j={j}, n={n}, p={p}")

    jpn, jmn = (j2 + n2) // 2, (j2 - n2) // 2
    jpp, jmp = (j2 + p2) // 2, (j2 - p2) // 2
    n_minus_p = (n2 - p2) // 2
    table = log_factorials(max(n_max, j2))

    lf = table.values
    log_norm = 0.5 * ((lf[jpn] + lf[jmn]) + (lf[jpp] + lf[jmp]))
    cos_half = math.cos(beta_angle / 2.0)
    sin_half = math.sin(beta_angle / 2.0)

    total = 0.0
    for s in range(max(0, -n_minus_p), min(jpp, jmn) + 1):
        log_den = (lf[jpp - s] + lf[s]) + (lf[n_minus_p + s] + lf[jmn - s])
        sign = -1.0 if (n_minus_p + s) % 2 else 1.0
        total += sign * math.exp(log_norm - log_den) \
            * cos_half ** (j2 - n_minus_p - 2 * s) * sin_half ** (n_minus_p + 2 * s)
    return total


def wigner_d_matrix(j: HalfInteger, beta_angle: float) -> np.ndarray:
    """[d^j_{np}(β)]，行列按 n, p 从 −j 升序排列"""
    j2 = _twice(j, "j")
    ms = [Fraction(k - j2, 2) for k in range(0, 2 * j2 + 1, 2)]
    return np.array([[wigner_d(j, n, p, beta_angle) for p in ms] for n in ms])
