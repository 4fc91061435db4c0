#!/usr/bin/env python3
"""
分析指标模块
HSV 直方图诊断、PSNR/SSIM 保真度指标与成对图像报告
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy.signal import convolve2d

try:
    from .color_transfer import SUPPORTED_SUFFIXES, EncodedImage, decode_srgb, read_image
    from .errors import ImageStructureError, ParameterError
except ImportError:
    from color_transfer import SUPPORTED_SUFFIXES, EncodedImage, decode_srgb, read_image
    from errors import ImageStructureError, ParameterError


DEFAULT_BINS = 64
HUE_DOMAIN = (0.0, 360.0)
UNIT_DOMAIN = (0.0, 1.0)

# Rec. 709 亮度系数
LUMA_709 = np.array([0.2126, 0.7152, 0.0722])

SSIM_WINDOW = 8
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2

# 动态范围取 V 通道的 p99 − p1
DYNAMIC_RANGE_PERCENTILES = (1.0, 99.0)

PSNR_SENTINEL = math.inf

CSV_FIELDS = (
    "original",
    "filtered",
    "mean_value_delta",
    "mean_sat_delta",
    "hue_histogram_l1",
    "sat_histogram_l1",
    "val_histogram_l1",
    "dynamic_range_original",
    "dynamic_range_filtered",
    "psnr_db",
    "ssim",
)


def _as_array(img: Union[np.ndarray, EncodedImage]) -> np.ndarray:
    if isinstance(img, EncodedImage):
        return img.normalized()
    return np.asarray(img, dtype=np.float64)


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ImageStructureError(f"图像尺寸不一致: {a.shape} vs {b.shape}")


# ==================== HSV ====================

def rgb_to_hsv(rgb: Union[np.ndarray, EncodedImage]) -> np.ndarray:
    """
    六棱锥 HSV 转换

    Args:
        rgb: (..., 3) 数组，取值 [0, 1]；或编码图像（按最大码值归一化）

    Returns:
        (..., 3) 数组：H 为角度 [0, 360)，S/V 为 [0, 1]；饱和度为 0 时 H 取 0

    Raises:
        ParameterError: 采样超出 [0, 1]
    """
    rgb = _as_array(rgb)
    if rgb.shape[-1] != 3:
        raise ImageStructureError(f"最后一维必须是 RGB 三通道: {rgb.shape}")
    if rgb.size and (rgb.min() < 0.0 or rgb.max() > 1.0):
        raise ParameterError("HSV 转换的输入必须在 [0, 1] 之间")

    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    delta = v - rgb.min(axis=-1)
    s = np.divide(delta, v, out=np.zeros_like(v), where=v > 0)

    safe = np.where(delta > 0, delta, 1.0)
    hue = np.where(
        v == r,
        np.mod((g - b) / safe, 6.0),
        np.where(v == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0)
    )
    h = np.where(delta > 0, 60.0 * hue, 0.0)
    # 负零与舍入到 360 的值归回 [0, 360)
    h = np.where(h >= 360.0, 0.0, h) + 0.0
    return np.stack([h, s, v], axis=-1)


def histogram(
    samples: np.ndarray,
    bins: int = DEFAULT_BINS,
    domain: Tuple[float, float] = UNIT_DOMAIN
) -> np.ndarray:
    """
    均匀分箱直方图（左闭右开，最后一箱包含右端点）

    Args:
        samples: 任意形状的采样
        bins: 箱数 ≥ 1
        domain: (下界, 上界)

    Returns:
        长度为 bins 的整数计数
    """
    if bins < 1:
        raise ParameterError(f"直方图箱数必须 ≥ 1: {bins}")
    counts, _ = np.histogram(np.ravel(samples), bins=bins, range=domain)
    return counts.astype(np.int64)


@dataclass
class HsvHistogram:
    """H/S/V 三个通道的一维直方图"""

    bins: int
    hue_counts: np.ndarray
    sat_counts: np.ndarray
    val_counts: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bins": self.bins,
            "hue_counts": self.hue_counts.tolist(),
            "sat_counts": self.sat_counts.tolist(),
            "val_counts": self.val_counts.tolist(),
        }


def hsv_histogram(hsv: np.ndarray, bins: int = DEFAULT_BINS) -> HsvHistogram:
    """由 HSV 栅格计算三个通道的直方图"""
    return HsvHistogram(
        bins=bins,
        hue_counts=histogram(hsv[..., 0], bins, HUE_DOMAIN),
        sat_counts=histogram(hsv[..., 1], bins, UNIT_DOMAIN),
        val_counts=histogram(hsv[..., 2], bins, UNIT_DOMAIN),
    )


def histogram_l1(a: np.ndarray, b: np.ndarray) -> float:
    """归一化直方图之间的 L1 距离，取值 [0, 2]"""
    pa = a / max(a.sum(), 1)
    pb = b / max(b.sum(), 1)
    return float(np.abs(pa - pb).sum())


# ==================== 保真度指标 ====================

def psnr(a: Union[np.ndarray, EncodedImage], b: Union[np.ndarray, EncodedImage]) -> float:
    """
    峰值信噪比（取值范围 [0, 1]，峰值为 1）

    Returns:
        10·log10(1 / MSE)，MSE 为 0 时返回 math.inf

    Raises:
        ImageStructureError: 尺寸不一致
    """
    a, b = _as_array(a), _as_array(b)
    _check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_SENTINEL
    return 10.0 * math.log10(1.0 / mse)


def _luma(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3 and img.shape[-1] == 3:
        return img @ LUMA_709
    if img.ndim == 2:
        return img
    raise ImageStructureError(f"不支持的图像形状: {img.shape}")


def _window_mean(x: np.ndarray) -> np.ndarray:
    window = np.full((SSIM_WINDOW, SSIM_WINDOW), 1.0 / SSIM_WINDOW ** 2)
    return convolve2d(x, window, mode="valid")


def ssim(a: Union[np.ndarray, EncodedImage], b: Union[np.ndarray, EncodedImage]) -> float:
    """
    结构相似度

    先转换为 Rec. 709 亮度，8×8 均匀窗口、步长 1，C1 = 0.01²，C2 = 0.03²（[0, 1] 取值范围），
    返回所有窗口局部 SSIM 的平均值。

    Raises:
        ImageStructureError: 尺寸不一致
        ParameterError: 图像小于窗口
    """
    a, b = _as_array(a), _as_array(b)
    _check_same_shape(a, b)
    ya, yb = _luma(a), _luma(b)
    if ya.shape[0] < SSIM_WINDOW or ya.shape[1] < SSIM_WINDOW:
        raise ParameterError(f"图像尺寸 {ya.shape} 小于 SSIM 窗口 {SSIM_WINDOW}x{SSIM_WINDOW}")

    mu_a = _window_mean(ya)
    mu_b = _window_mean(yb)
    var_a = _window_mean(ya * ya) - mu_a * mu_a
    var_b = _window_mean(yb * yb) - mu_b * mu_b
    cov = _window_mean(ya * yb) - mu_a * mu_b

    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


# ==================== 成对报告 ====================

@dataclass
class PairReport:
    """原图与滤镜图之间的统计对比"""

    mean_value_delta: float
    mean_sat_delta: float
    hue_histogram_l1: float
    sat_histogram_l1: float
    val_histogram_l1: float
    dynamic_range_original: float
    dynamic_range_filtered: float
    psnr_db: float
    ssim: float
    original_histogram: HsvHistogram = field(repr=False)
    filtered_histogram: HsvHistogram = field(repr=False)

    def metrics(self) -> Dict[str, Any]:
        """标量字段；PSNR 哨兵值写作字符串 "inf" """
        return {
            "mean_value_delta": self.mean_value_delta,
            "mean_sat_delta": self.mean_sat_delta,
            "hue_histogram_l1": self.hue_histogram_l1,
            "sat_histogram_l1": self.sat_histogram_l1,
            "val_histogram_l1": self.val_histogram_l1,
            "dynamic_range_original": self.dynamic_range_original,
            "dynamic_range_filtered": self.dynamic_range_filtered,
            "psnr_db": "inf" if math.isinf(self.psnr_db) else self.psnr_db,
            "ssim": self.ssim,
        }

    def to_dict(self) -> Dict[str, Any]:
        result = self.metrics()
        result["original_histogram"] = self.original_histogram.to_dict()
        result["filtered_histogram"] = self.filtered_histogram.to_dict()
        return result


def _dynamic_range(values: np.ndarray) -> float:
    low, high = np.percentile(values, DYNAMIC_RANGE_PERCENTILES)
    return float(high - low)


def pair_report(
    original: EncodedImage,
    filtered: EncodedImage,
    bins: int = DEFAULT_BINS,
    transfer: str = "srgb"
) -> PairReport:
    """
    生成成对报告

    HSV 统计在解码后的线性光值上计算（显示参考、已色调映射），PSNR/SSIM 在归一化码值上计算。

    Args:
        original: 原图
        filtered: 滤镜图
        bins: 直方图箱数
        transfer: 解码使用的传递函数

    Raises:
        ImageStructureError: 尺寸不一致
    """
    if original.data.shape != filtered.data.shape:
        raise ImageStructureError(
            f"图像尺寸不一致: {original.width}x{original.height} vs "
            f"{filtered.width}x{filtered.height}"
        )

    hsv_o = rgb_to_hsv(np.clip(decode_srgb(original, transfer).data, 0.0, 1.0))
    hsv_f = rgb_to_hsv(np.clip(decode_srgb(filtered, transfer).data, 0.0, 1.0))
    hist_o = hsv_histogram(hsv_o, bins)
    hist_f = hsv_histogram(hsv_f, bins)

    return PairReport(
        mean_value_delta=float(hsv_f[..., 2].mean() - hsv_o[..., 2].mean()),
        mean_sat_delta=float(hsv_f[..., 1].mean() - hsv_o[..., 1].mean()),
        hue_histogram_l1=histogram_l1(hist_o.hue_counts, hist_f.hue_counts),
        sat_histogram_l1=histogram_l1(hist_o.sat_counts, hist_f.sat_counts),
        val_histogram_l1=histogram_l1(hist_o.val_counts, hist_f.val_counts),
        dynamic_range_original=_dynamic_range(hsv_o[..., 2]),
        dynamic_range_filtered=_dynamic_range(hsv_f[..., 2]),
        psnr_db=psnr(original, filtered),
        ssim=ssim(original, filtered),
        original_histogram=hist_o,
        filtered_histogram=hist_f,
    )


# ==================== 报告输出 ====================

def write_report_json(report: PairReport, path: Union[str, Path], **extra: Any) -> Path:
    """写出单对报告 JSON（稳定键序，无时间戳）"""
    path = Path(path)
    payload = dict(extra)
    payload.update(report.to_dict())
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8"
    )
    return path


def write_reports_csv(
    rows: Sequence[Tuple[str, str, PairReport]],
    path: Union[str, Path]
) -> Path:
    """
    写出汇总 CSV，每行一对图像

    Args:
        rows: (原图路径, 滤镜图路径, 报告) 列表
        path: 输出路径
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for original, filtered, report in rows:
            row: Dict[str, Any] = {"original": original, "filtered": filtered}
            row.update({k: _format_value(v) for k, v in report.metrics().items()})
            writer.writerow(row)
    return path


def _format_value(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value


# ==================== 批量分析 ====================

REPORT_CSV = "report.csv"


def collect_pairs(
    original: Union[str, Path],
    filtered: Union[str, Path]
) -> List[Tuple[Path, Path, str, str]]:
    """
    收集待比较的图像对

    两个参数同为文件时返回一对；同为目录时按文件名配对（只取两边都存在的图像）。

    Returns:
        (原图路径, 滤镜图路径, 原图名称, 滤镜图名称) 列表，按名称排序

    Raises:
        ParameterError: 一个是文件一个是目录、路径不存在或没有可配对的图像
    """
    original, filtered = Path(original), Path(filtered)
    if original.is_file() and filtered.is_file():
        return [(original, filtered, original.name, filtered.name)]
    if original.is_dir() and filtered.is_dir():
        names = sorted(
            p.name for p in original.iterdir()
            if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES
            and (filtered / p.name).is_file()
        )
        if not names:
            raise ParameterError(f"两个目录中没有同名图像: {original} / {filtered}")
        return [(original / n, filtered / n, n, n) for n in names]
    raise ParameterError(f"--original 与 --filtered 必须同为已存在的文件或目录: {original} / {filtered}")


def _check_unique_stems(names: Iterable[str]) -> None:
    """每对报告以原图主名命名，主名不能重复"""
    seen: Dict[str, str] = {}
    for name in names:
        stem = Path(name).stem
        if stem in seen:
            raise ParameterError(f"原图重名（忽略扩展名）: {seen[stem]} 与 {name}")
        seen[stem] = name


def _analyze_one(task: Tuple[Path, Path, int, str]) -> PairReport:
    original_path, filtered_path, bins, transfer = task
    return pair_report(read_image(original_path), read_image(filtered_path), bins, transfer)


def analyze_pairs(
    pairs: Sequence[Tuple[Path, Path, str, str]],
    out_dir: Union[str, Path],
    bins: int = DEFAULT_BINS,
    jobs: int = 1,
    transfer: str = "srgb"
) -> List[Tuple[str, str, PairReport]]:
    """
    批量生成报告：每对一个 <名称>.json，另写汇总 report.csv

    Args:
        pairs: collect_pairs 的结果
        out_dir: 报告目录
        bins: 直方图箱数
        jobs: 并行进程数；输出顺序与 pairs 一致
        transfer: 解码使用的传递函数

    Returns:
        (原图名称, 滤镜图名称, 报告) 列表

    Raises:
        ParameterError: 箱数非法或原图主名重复
        ImageReadError: 图像无法读取
    """
    if bins < 1:
        raise ParameterError(f"直方图箱数必须 ≥ 1: {bins}")
    _check_unique_stems(name for _, _, name, _ in pairs)
    tasks = [(o, f, bins, transfer) for o, f, _, _ in pairs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            reports = list(executor.map(_analyze_one, tasks))
    else:
        reports = [_analyze_one(task) for task in tasks]

    out_dir = Path(out_dir)
    rows = []
    for (_, _, name_o, name_f), report in zip(pairs, reports):
        write_report_json(
            report, out_dir / f"{Path(name_o).stem}.json",
            original=name_o, filtered=name_f
        )
        rows.append((name_o, name_f, report))
    write_reports_csv(rows, out_dir / REPORT_CSV)
    return rows


if __name__ == "__main__":
    # 测试
    zeros = np.zeros((16, 16, 3))
    halves = np.full((16, 16, 3), 0.5)
    print(f"PSNR(0, 0.5) = {psnr(zeros, halves):.4f} dB")
    print(f"SSIM(x, x) = {ssim(halves, halves)}")
    print(f"HSV(0, 1, 1) = {rgb_to_hsv(np.array([0.0, 1.0, 1.0]))}")
