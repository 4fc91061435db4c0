#!/usr/bin/env python3
"""
自检
快速验证传递函数、模糊引擎、能量守恒与指标的基本性质
"""

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

try:
    from .analysis_metrics import psnr, ssim
    from .color_transfer import EncodedImage, LinearImage, decode_srgb, encode_srgb
    from .gaussian_engine import blur, make_kernel
    from .promist_filter import FilterConfig, apply_filter, derive_params
except ImportError:
    from analysis_metrics import psnr, ssim
    from color_transfer import EncodedImage, LinearImage, decode_srgb, encode_srgb
    from gaussian_engine import blur, make_kernel
    from promist_filter import FilterConfig, apply_filter, derive_params


@dataclass(frozen=True)
class CheckResult:
    """单项自检结果"""

    name: str
    passed: bool
    detail: str


def _check_round_trip() -> Tuple[bool, str]:
    codes = np.arange(256).reshape(1, 256, 1).repeat(3, axis=2)
    img = EncodedImage(codes, 8)
    back = encode_srgb(decode_srgb(img), 8)
    mismatches = int(np.count_nonzero(back.data != img.data))
    return mismatches == 0, f"{mismatches} 个码值不一致"


def _check_kernel() -> Tuple[bool, str]:
    kernel = make_kernel(1.0)
    ok = abs(kernel.taps.sum() - 1.0) < 1e-12 and abs(kernel.center - 0.39905) < 1e-4
    return ok, f"中心 {kernel.center:.5f}"


def _check_separable() -> Tuple[bool, str]:
    rng = np.random.default_rng(0)
    data = rng.random((16, 16, 3))
    kernel = make_kernel(1.5)
    padded = np.pad(data, ((kernel.radius,) * 2, (kernel.radius,) * 2, (0, 0)), mode="symmetric")
    dense = np.zeros_like(data)
    weights = np.outer(kernel.taps, kernel.taps)
    size = kernel.size
    for dy in range(size):
        for dx in range(size):
            dense += weights[dy, dx] * padded[dy:dy + 16, dx:dx + 16]
    diff = float(np.abs(blur(LinearImage(data), 1.5).data - dense).max())
    return diff <= 1e-5, f"最大差 {diff:.2e}"


def _check_energy() -> Tuple[bool, str]:
    rng = np.random.default_rng(1)
    img = LinearImage(rng.random((64, 64, 3)))
    stack = derive_params(FilterConfig(density=0.5, focal_mm=50.0, reference_width=64), 64)
    out = apply_filter(img, stack)
    rel = abs(out.total_energy() - img.total_energy()) / img.total_energy()
    return rel <= 1e-4, f"相对误差 {rel:.2e}"


def _check_metrics() -> Tuple[bool, str]:
    zeros = np.zeros((16, 16, 3))
    halves = np.full((16, 16, 3), 0.5)
    value = psnr(zeros, halves)
    ok = abs(value - 10 * math.log10(4)) < 1e-3 and ssim(halves, halves) == 1.0
    return ok, f"PSNR {value:.4f} dB"


CHECKS: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
    ("sRGB 往返", _check_round_trip),
    ("高斯核归一化", _check_kernel),
    ("可分离卷积 vs 二维卷积", _check_separable),
    ("能量守恒", _check_energy),
    ("PSNR/SSIM", _check_metrics),
]


def run_selftest() -> List[CheckResult]:
    """运行全部自检项"""
    results = []
    for name, check in CHECKS:
        try:
            passed, detail = check()
        except Exception as e:
            passed, detail = False, f"异常: {e}"
        results.append(CheckResult(name, passed, detail))
    return results


if __name__ == "__main__":
    for result in run_selftest():
        print(f"{'✓' if result.passed else '✗'} {result.name}: {result.detail}")
