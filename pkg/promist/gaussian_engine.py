#!/usr/bin/env python3
"""
高斯模糊引擎
可分离 FIR 卷积（先水平后垂直），边界反射填充
"""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import ndimage

try:
    from .color_transfer import LinearImage
    from .errors import ParameterError
except ImportError:
    from color_transfer import LinearImage
    from errors import ParameterError


EdgeMode = Literal["reflect", "mirror"]

# reflect: d c b a | a b c d | d c b a（边缘样本重复，常数与总能量严格守恒）
# mirror:  d c b | a b c d | c b a（边缘样本不重复）
EDGE_MODES = ("reflect", "mirror")

# 截断半径 = ceil(3σ)
TRUNCATE_SIGMAS = 3.0


@dataclass(frozen=True)
class Kernel1D:
    """一维高斯核"""

    sigma: float
    radius: int
    taps: np.ndarray

    @property
    def size(self) -> int:
        return len(self.taps)

    @property
    def center(self) -> float:
        return float(self.taps[self.radius])


def _check_sigma(sigma: float) -> float:
    try:
        sigma = float(sigma)
    except (TypeError, ValueError):
        raise ParameterError(f"sigma 必须是数值: {sigma!r}")
    if not math.isfinite(sigma) or sigma < 0:
        raise ParameterError(f"sigma 必须是非负有限值: {sigma}")
    return sigma


def make_kernel(sigma: float) -> Kernel1D:
    """
    生成归一化的采样高斯核

    Args:
        sigma: 标准差（像素），0 表示恒等核

    Returns:
        Kernel1D，taps 长度为 2·ceil(3σ)+1，和为 1

    Raises:
        ParameterError: sigma 为负或非有限值
    """
    sigma = _check_sigma(sigma)
    if sigma == 0:
        return Kernel1D(sigma=0.0, radius=0, taps=np.ones(1))

    radius = int(math.ceil(TRUNCATE_SIGMAS * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    taps /= taps.sum()
    return Kernel1D(sigma=sigma, radius=radius, taps=taps)


def blur_array(data: np.ndarray, kernel: Kernel1D, edge: EdgeMode = "reflect") -> np.ndarray:
    """对 (高, 宽[, 通道]) 数组做可分离高斯卷积"""
    if edge not in EDGE_MODES:
        raise ParameterError(f"未知的边界模式: {edge}（可选 {', '.join(EDGE_MODES)}）")
    if kernel.radius == 0:
        return np.array(data, dtype=np.float64, copy=True)

    out = ndimage.correlate1d(data, kernel.taps, axis=1, mode=edge, output=np.float64)
    out = ndimage.correlate1d(out, kernel.taps, axis=0, mode=edge, output=np.float64)
    # 非负输入的凸组合不会小于 0，这里只消除舍入误差
    return np.maximum(out, 0.0, out=out)


def blur(img: LinearImage, sigma: float, edge: EdgeMode = "reflect") -> LinearImage:
    """
    二维高斯模糊

    Args:
        img: 线性图像
        sigma: 标准差（像素）
        edge: 边界模式，默认 reflect

    Returns:
        同尺寸的模糊图像

    Raises:
        ParameterError: sigma 非法
    """
    kernel = make_kernel(sigma)
    return LinearImage(blur_array(img.data, kernel, edge))


if __name__ == "__main__":
    # 测试
    k = make_kernel(1.0)
    print(f"sigma=1 半径={k.radius} 中心={k.center:.5f} 和={k.taps.sum():.12f}")
