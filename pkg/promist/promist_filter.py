#!/usr/bin/env python3
"""
Pro-Mist 滤镜模块
由密度与焦距推导多层模糊参数，并在线性空间合成漫射效果
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

try:
    from .color_transfer import (
        TONE_OPERATORS, TRANSFERS, EncodedImage, LinearImage,
        decode_srgb, encode_srgb, tone_map,
    )
    from .errors import ParameterError
    from .gaussian_engine import EdgeMode, blur_array, make_kernel
except ImportError:
    from color_transfer import (
        TONE_OPERATORS, TRANSFERS, EncodedImage, LinearImage,
        decode_srgb, encode_srgb, tone_map,
    )
    from errors import ParameterError
    from gaussian_engine import EdgeMode, blur_array, make_kernel


logger = logging.getLogger(__name__)

BlendMode = Literal["convex", "additive"]
BLEND_MODES = ("convex", "additive")

DEFAULT_LAYER_COUNT = 6
DEFAULT_BASE_SIGMA = 1.0
DEFAULT_REFERENCE_WIDTH = 1024
# 焦距缩放基准（毫米）
REFERENCE_FOCAL_MM = 20.0

# 权重几何比：>1 时大半径层占主导，<1 时小半径层占主导
DEFAULT_WEIGHT_RATIOS: Dict[Fraction, float] = {
    Fraction(1, 2): 1.5,
    Fraction(1, 8): 0.6,
}

# 数据集的四种配置（顺序同数据集汇总表）
DEFAULT_CONFIG_GRID: Tuple[Tuple[float, float], ...] = (
    (1 / 8, 20.0),
    (1 / 8, 50.0),
    (1 / 2, 20.0),
    (1 / 2, 50.0),
)

WEIGHT_SUM_TOLERANCE = 1e-9


def density_fraction(density: float) -> Fraction:
    """密度等级的有理数形式（1/2、1/8 ...）"""
    return Fraction(density).limit_denominator(1000)


def density_grade(density: float) -> str:
    """密度等级字符串，如 "1/2" """
    frac = density_fraction(density)
    if frac.denominator == 1:
        return str(frac.numerator)
    return f"{frac.numerator}/{frac.denominator}"


def weight_ratio_for_density(
    density: float,
    overrides: Optional[Dict[Fraction, float]] = None
) -> float:
    """
    密度对应的权重几何比

    1/2 与 1/8 取表中锚点；其他密度在 log2(密度) 上对两个锚点做对数线性插值（越界时外推）。

    Args:
        density: 密度 (0, 1]
        overrides: 覆盖表，键为密度等级
    """
    table = dict(DEFAULT_WEIGHT_RATIOS)
    if overrides:
        table.update(overrides)

    frac = density_fraction(density)
    if frac in table:
        return table[frac]

    low, high = Fraction(1, 8), Fraction(1, 2)
    r_low, r_high = table[low], table[high]
    t = (math.log2(density) - math.log2(low)) / (math.log2(high) - math.log2(low))
    return r_low * (r_high / r_low) ** t


@dataclass(frozen=True)
class FilterConfig:
    """用户可见的滤镜参数"""

    density: float
    focal_mm: float
    layer_count: int = DEFAULT_LAYER_COUNT
    base_sigma: float = DEFAULT_BASE_SIGMA
    reference_width: int = DEFAULT_REFERENCE_WIDTH
    tone_operator: str = "clamp"
    weight_ratio: Optional[float] = None
    blend_mode: str = "convex"
    transfer: str = "srgb"

    def __post_init__(self):
        if not (isinstance(self.density, (int, float)) and 0 < self.density <= 1):
            raise ParameterError(f"密度必须在 (0, 1] 之间: {self.density}")
        if not (math.isfinite(self.focal_mm) and self.focal_mm > 0):
            raise ParameterError(f"焦距必须为正: {self.focal_mm}")
        if isinstance(self.layer_count, bool) or not isinstance(self.layer_count, int) \
                or self.layer_count < 1:
            raise ParameterError(f"模糊层数必须是正整数: {self.layer_count}")
        if not (math.isfinite(self.base_sigma) and self.base_sigma > 0):
            raise ParameterError(f"base_sigma 必须为正: {self.base_sigma}")
        if not (isinstance(self.reference_width, int) and self.reference_width >= 1):
            raise ParameterError(f"reference_width 必须是正整数: {self.reference_width}")
        if self.tone_operator not in TONE_OPERATORS:
            raise ParameterError(
                f"未知的色调映射算子: {self.tone_operator}（可选 {', '.join(TONE_OPERATORS)}）"
            )
        if self.weight_ratio is not None and not (
            math.isfinite(self.weight_ratio) and self.weight_ratio > 0
        ):
            raise ParameterError(f"权重比必须为正: {self.weight_ratio}")
        if self.blend_mode not in BLEND_MODES:
            raise ParameterError(
                f"未知的混合模式: {self.blend_mode}（可选 {', '.join(BLEND_MODES)}）"
            )
        if self.transfer not in TRANSFERS:
            raise ParameterError(f"未知的传递函数: {self.transfer}（可选 {', '.join(TRANSFERS)}）")

    @property
    def grade(self) -> str:
        return density_grade(self.density)

    @property
    def label(self) -> str:
        """规范配置标签，如 d1-2_f20"""
        return f"d{self.grade.replace('/', '-')}_f{self.focal_mm:g}"

    @property
    def resolved_weight_ratio(self) -> float:
        if self.weight_ratio is not None:
            return self.weight_ratio
        return weight_ratio_for_density(self.density)

    def to_dict(self) -> Dict[str, Any]:
        """解析后的参数（用于溯源输出与清单）"""
        params = asdict(self)
        params["density"] = self.grade
        params["weight_ratio"] = self.resolved_weight_ratio
        return params


@dataclass(frozen=True)
class BlurStack:
    """每层 (sigma, 权重) 以及混合比例 alpha"""

    layers: Tuple[Tuple[float, float], ...]
    alpha: float
    blend_mode: str = "convex"

    def __post_init__(self):
        if not self.layers:
            raise ParameterError("模糊层不能为空")
        sigmas = self.sigmas
        if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
            raise ParameterError(f"各层 sigma 必须严格递增: {sigmas}")
        if any(s < 0 or not math.isfinite(s) for s in sigmas):
            raise ParameterError(f"sigma 必须是非负有限值: {sigmas}")
        weights = self.weights
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ParameterError(f"权重必须非负且和为 1: {weights}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha 必须在 [0, 1] 之间: {self.alpha}")
        if self.blend_mode not in BLEND_MODES:
            raise ParameterError(f"未知的混合模式: {self.blend_mode}")

    @property
    def sigmas(self) -> List[float]:
        return [sigma for sigma, _ in self.layers]

    @property
    def weights(self) -> List[float]:
        return [weight for _, weight in self.layers]


def _check_width(image_width: int) -> None:
    if isinstance(image_width, bool) or not isinstance(image_width, (int, np.integer)) \
            or image_width < 1:
        raise ParameterError(f"图像宽度必须是正整数: {image_width}")


def _geometric_stack(
    cfg: FilterConfig,
    image_width: int,
    octaves: Sequence[float]
) -> BlurStack:
    ratio = cfg.resolved_weight_ratio
    sigmas = [
        cfg.base_sigma * 2.0 ** k * (cfg.focal_mm / REFERENCE_FOCAL_MM)
        * (image_width / cfg.reference_width)
        for k in octaves
    ]
    raw = [ratio ** k for k in octaves]
    total = sum(raw)
    weights = [w / total for w in raw]
    return BlurStack(
        layers=tuple(zip(sigmas, weights)),
        alpha=float(cfg.density),
        blend_mode=cfg.blend_mode
    )


def derive_params(cfg: FilterConfig, image_width: int) -> BlurStack:
    """
    推导模糊层参数

    σ_k = base_sigma · 2^k · (focal_mm / 20) · (image_width / reference_width)，
    w_k ∝ r^k 归一化，alpha = density。

    Args:
        cfg: 滤镜配置
        image_width: 图像宽度（像素）

    Returns:
        BlurStack

    Raises:
        ParameterError: 配置或宽度非法
    """
    _check_width(image_width)
    return _geometric_stack(cfg, image_width, range(cfg.layer_count))


def reference_stack(
    cfg: FilterConfig,
    image_width: int,
    dense_layers: int = 32,
    span_layers: int = DEFAULT_LAYER_COUNT
) -> BlurStack:
    """
    密集参考模糊栈（层数消融的基准）

    dense_layers 个 sigma 在默认 span_layers 层所覆盖的倍频程区间内按几何级数均匀分布，
    权重按连续倍频程位置取 r^s。
    """
    _check_width(image_width)
    if dense_layers < 1 or span_layers < 1:
        raise ParameterError(f"层数必须为正: dense={dense_layers}, span={span_layers}")
    if dense_layers == 1:
        octaves = [0.0]
    else:
        span = float(span_layers - 1)
        octaves = [span * j / (dense_layers - 1) for j in range(dense_layers)]
    return _geometric_stack(cfg, image_width, octaves)


def apply_filter(
    img: LinearImage,
    stack: BlurStack,
    edge: EdgeMode = "reflect",
    workers: int = 1
) -> LinearImage:
    """
    合成漫射效果

    convex: out = (1 − alpha)·img + alpha·Σ w_k·blur(img, σ_k)
    additive: out = img + alpha·Σ w_k·blur(img, σ_k)

    Args:
        img: 线性图像
        stack: 模糊栈
        edge: 边界模式
        workers: 并行模糊的线程数；加权求和顺序固定，结果与线程数无关

    Returns:
        同尺寸的线性图像
    """
    if stack.alpha == 0.0:
        return LinearImage(img.data.copy())

    kernels = [make_kernel(sigma) for sigma in stack.sigmas]
    diffused = np.zeros_like(img.data)

    if workers > 1 and len(kernels) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            layers = executor.map(lambda k: blur_array(img.data, k, edge), kernels)
            for weight, layer in zip(stack.weights, layers):
                diffused += weight * layer
    else:
        for weight, kernel in zip(stack.weights, kernels):
            diffused += weight * blur_array(img.data, kernel, edge)

    if stack.blend_mode == "additive":
        return LinearImage(img.data + stack.alpha * diffused)
    return LinearImage((1.0 - stack.alpha) * img.data + stack.alpha * diffused)


def emulate(img: EncodedImage, cfg: FilterConfig, workers: int = 1) -> EncodedImage:
    """
    完整的 Pro-Mist 仿真流程

    线性化 → 多层模糊合成 → 色调映射 → 编码，输出位深与输入一致。

    Args:
        img: 编码图像
        cfg: 滤镜配置
        workers: 层并行线程数

    Returns:
        滤镜处理后的编码图像
    """
    linear = decode_srgb(img, cfg.transfer)
    stack = derive_params(cfg, img.width)
    logger.debug("%s: sigmas=%s", cfg.label, ["%.4g" % s for s in stack.sigmas])
    filtered = apply_filter(linear, stack, workers=workers)
    return encode_srgb(tone_map(filtered, cfg.tone_operator), img.bit_depth, cfg.transfer)


# ==================== 冲激响应分析 ====================

def _padded_taps(sigma: float, radius: int) -> np.ndarray:
    kernel = make_kernel(sigma)
    if kernel.radius > radius:
        raise ParameterError(f"半径 {radius} 小于核半径 {kernel.radius}")
    pad = radius - kernel.radius
    return np.pad(kernel.taps, pad)


def stack_radius(stack: BlurStack) -> int:
    """模糊栈中最大的核半径"""
    return max(make_kernel(sigma).radius for sigma in stack.sigmas)


def scatter_response(stack: BlurStack, radius: Optional[int] = None) -> np.ndarray:
    """散射分量的点扩散函数 Σ w_k·G_k（不含 alpha 与未散射部分）"""
    radius = stack_radius(stack) if radius is None else radius
    psf = np.zeros((2 * radius + 1, 2 * radius + 1))
    for sigma, weight in stack.layers:
        taps = _padded_taps(sigma, radius)
        psf += weight * np.outer(taps, taps)
    return psf


def impulse_response(stack: BlurStack, radius: Optional[int] = None) -> np.ndarray:
    """
    单位冲激经 apply_filter 后的完整响应（远离边界时）

    Args:
        stack: 模糊栈
        radius: 响应半径，默认取最大核半径

    Returns:
        (2·radius+1, 2·radius+1) 数组
    """
    psf = stack.alpha * scatter_response(stack, radius)
    center = psf.shape[0] // 2
    psf[center, center] += 1.0 if stack.blend_mode == "additive" else 1.0 - stack.alpha
    return psf


def radial_profile(psf: np.ndarray) -> np.ndarray:
    """以中心为原点、按整数半径分箱的径向平均剖面"""
    cy, cx = psf.shape[0] // 2, psf.shape[1] // 2
    yy, xx = np.indices(psf.shape)
    radii = np.rint(np.hypot(yy - cy, xx - cx)).astype(np.int64).ravel()
    sums = np.bincount(radii, weights=psf.ravel())
    counts = np.bincount(radii)
    return sums / np.maximum(counts, 1)


def profile_distance(a: np.ndarray, b: np.ndarray) -> float:
    """两个径向剖面之间的 L2 距离（较短者补零）"""
    n = max(len(a), len(b))
    pa = np.pad(a, (0, n - len(a)))
    pb = np.pad(b, (0, n - len(b)))
    return float(np.sqrt(np.sum((pa - pb) ** 2)))


def halo_radius(stack: BlurStack, threshold: float = 0.01) -> int:
    """
    光晕半径：散射分量径向剖面降到峰值 threshold 倍以下的最小距离（像素）
    """
    profile = radial_profile(scatter_response(stack))
    below = np.nonzero(profile < threshold * profile[0])[0]
    return int(below[0]) if below.size else len(profile)


if __name__ == "__main__":
    # 测试
    for density, focal in DEFAULT_CONFIG_GRID:
        cfg = FilterConfig(density=density, focal_mm=focal)
        stack = derive_params(cfg, 1024)
        print(f"{cfg.label}: sigmas={[round(s, 3) for s in stack.sigmas]} "
              f"weights={[round(w, 4) for w in stack.weights]} halo={halo_radius(stack)}px")
