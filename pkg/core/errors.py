class QndPhaseError(Exception):
    """项目内所有可预期错误的基类"""


class CapacityError(QndPhaseError, ValueError):
    """请求的阶数或维度超过配置容量 (numerics.n_max)"""


class DomainError(QndPhaseError, ValueError):
    """参数超出函数定义域"""


class DegenerateSqueezeError(DomainError):
    """压缩幅度 r1 低于退化阈值"""


class ConfigurationError(QndPhaseError, ValueError):
    """配置或组合不合法 (基矢/体系不匹配、温区标签与温度不一致等)"""


class UsageError(QndPhaseError, RuntimeError):
    """调用顺序错误，例如对已演化的密度矩阵再次传播"""


class NumericalError(QndPhaseError, RuntimeError):
    """数值过程未收敛或结果违反不变量"""

    def __init__(self, message: str, estimate: float = float("nan")):
        super().__init__(message)
        self.estimate = estimate
