import math
from dataclasses import dataclass

import numpy as np

from core.phasedist.distribution import PhaseDistribution


TWO_PI = 2 * math.pi
# 低于该值的合成矢量视为各向同性
ISOTROPIC_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CircularStats:
    """相位分布的圆统计量；fold > 1 时使用 fold 阶三角矩"""

    mean_angle: float
    resultant_length: float
    circular_variance: float
    peak_angle: float
    peak_value: float
    fold: int = 1


def wrap_angle(angle: float) -> float:
    """映射到 [0, 2π)"""
    wrapped = math.fmod(angle, TWO_PI)
    return wrapped + TWO_PI if wrapped < 0 else wrapped


def circular_distance(a: float, b: float) -> float:
    """圆周上两角的最短距离，取值 [0, π]"""
    d = wrap_angle(a - b)
    return min(d, TWO_PI - d)


def _parabolic_peak(values: np.ndarray, index: int) -> tuple[float, float]:
    """三点抛物线插值，返回 (网格单位偏移, 峰值)"""
    left = values[(index - 1) % len(values)]
    centre = values[index]
    right = values[(index + 1) % len(values)]
    curvature = left - 2 * centre + right
    if curvature >= 0:
        return 0.0, float(centre)
    offset = 0.5 * (left - right) / curvature
    return float(offset), float(centre - 0.25 * (left - right) * offset)


def circular_stats(pd: PhaseDistribution) -> CircularStats:
    moment = complex(np.sum(pd.weights() * np.exp(1j * pd.fold * pd.grid)))
    resultant = min(1.0, abs(moment))
    mean_angle = 0.0
    if resultant > ISOTROPIC_TOLERANCE:
        mean_angle = wrap_angle(math.atan2(moment.imag, moment.real) / pd.fold)

    index = int(np.argmax(pd.values))
    offset, peak_value = _parabolic_peak(pd.values, index)
    return CircularStats(
        mean_angle=mean_angle,
        resultant_length=resultant,
        circular_variance=1.0 - resultant,
        peak_angle=wrap_angle(pd.grid[index] + offset * pd.spacing),
        peak_value=peak_value,
        fold=pd.fold,
    )


def count_local_maxima(pd: PhaseDistribution, floor_ratio: float = 1.05) -> int:
    """周期网格上高于 floor_ratio × 最小值的局部极大个数，平台只计一次"""
    values = pd.values
    left = np.roll(values, 1)
    right = np.roll(values, -1)
    peaks = (values > left) & (values >= right) & (values > floor_ratio * values.min())
    return int(np.count_nonzero(peaks))
