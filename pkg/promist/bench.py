#!/usr/bin/env python3
"""
性能基准
测量每个模糊 sigma 以及完整仿真流程的吞吐量（百万像素/秒）
"""

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

try:
    from .color_transfer import EncodedImage, decode_srgb
    from .errors import ParameterError
    from .gaussian_engine import blur
    from .promist_filter import FilterConfig, derive_params, emulate
except ImportError:
    from color_transfer import EncodedImage, decode_srgb
    from errors import ParameterError
    from gaussian_engine import blur
    from promist_filter import FilterConfig, derive_params, emulate


BENCH_HEADER = "kind\tsigma\tmegapixels_per_s"


@dataclass(frozen=True)
class BenchRow:
    """一行基准结果"""

    kind: str
    sigma: Optional[float]
    megapixels_per_s: float


def parse_size(text: str) -> Tuple[int, int]:
    """解析 "宽x高" 形式的尺寸"""
    width, sep, height = text.lower().partition("x")
    try:
        size = (int(width), int(height))
    except ValueError:
        raise ParameterError(f"尺寸格式应为 宽x高: {text!r}")
    if not sep or size[0] < 1 or size[1] < 1:
        raise ParameterError(f"尺寸格式应为 宽x高（正整数）: {text!r}")
    return size


def _throughput(pixels: int, iters: int, elapsed: float) -> float:
    return pixels * iters / max(elapsed, 1e-12) / 1e6


def run_bench(
    width: int,
    height: int,
    iters: int,
    cfg: Optional[FilterConfig] = None,
    seed: int = 0
) -> List[BenchRow]:
    """
    运行基准

    Args:
        width: 测试图像宽度
        height: 测试图像高度
        iters: 每项重复次数 ≥ 1
        cfg: 滤镜配置，默认 1/2 @ 20mm
        seed: 随机测试图像的种子

    Returns:
        每个 sigma 一行（按 sigma 递增），最后一行为完整流程
    """
    if iters < 1:
        raise ParameterError(f"iters 必须 ≥ 1: {iters}")
    cfg = cfg or FilterConfig(density=0.5, focal_mm=20.0)

    rng = np.random.default_rng(seed)
    encoded = EncodedImage(rng.integers(0, 256, size=(height, width, 3)), 8)
    linear = decode_srgb(encoded)
    pixels = width * height

    rows = []
    for sigma in derive_params(cfg, width).sigmas:
        start = time.perf_counter()
        for _ in range(iters):
            blur(linear, sigma)
        rows.append(BenchRow("blur", sigma, _throughput(pixels, iters, time.perf_counter() - start)))

    start = time.perf_counter()
    for _ in range(iters):
        emulate(encoded, cfg)
    rows.append(BenchRow("pipeline", None, _throughput(pixels, iters, time.perf_counter() - start)))
    return rows


def format_bench(rows: Sequence[BenchRow]) -> str:
    """制表符分隔的稳定输出格式"""
    lines = [BENCH_HEADER]
    for row in rows:
        sigma = "-" if row.sigma is None else f"{row.sigma:.4f}"
        lines.append(f"{row.kind}\t{sigma}\t{row.megapixels_per_s:.3f}")
    return "\n".join(lines)


if __name__ == "__main__":
    # 测试
    print(format_bench(run_bench(256, 256, 2)))
