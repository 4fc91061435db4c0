#!/usr/bin/env python3
"""
模糊层数消融
比较不同层数的冲激响应径向剖面与密集参考剖面的距离
"""

import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Sequence, Union

try:
    from .color_transfer import read_image, write_png
    from .errors import ParameterError
    from .promist_filter import (
        FilterConfig, derive_params, emulate, halo_radius, impulse_response,
        profile_distance, radial_profile, reference_stack, stack_radius,
    )
except ImportError:
    from color_transfer import read_image, write_png
    from errors import ParameterError
    from promist_filter import (
        FilterConfig, derive_params, emulate, halo_radius, impulse_response,
        profile_distance, radial_profile, reference_stack, stack_radius,
    )


logger = logging.getLogger(__name__)

DEFAULT_LAYER_COUNTS = (1, 2, 4, 6)
DEFAULT_DENSE_LAYERS = 32
ABLATION_CSV = "ablation.csv"


@dataclass(frozen=True)
class AblationRow:
    """单个层数的消融结果"""

    layer_count: int
    l2_distance: float
    halo_radius_px: int


def layer_ablation(
    cfg: FilterConfig,
    image_width: int,
    layer_counts: Sequence[int] = DEFAULT_LAYER_COUNTS,
    dense_layers: int = DEFAULT_DENSE_LAYERS
) -> List[AblationRow]:
    """
    计算每个层数的径向剖面到密集参考剖面的 L2 距离

    Args:
        cfg: 滤镜配置（layer_count 字段被忽略）
        image_width: 图像宽度，决定 sigma 的像素尺度
        layer_counts: 待比较的层数
        dense_layers: 参考栈层数

    Returns:
        与 layer_counts 同序的结果

    Raises:
        ParameterError: 层数列表为空或包含非正数
    """
    if not layer_counts:
        raise ParameterError("层数列表不能为空")
    if any(n < 1 for n in layer_counts):
        raise ParameterError(f"层数必须为正整数: {list(layer_counts)}")

    reference = reference_stack(cfg, image_width, dense_layers)
    stacks = [derive_params(replace(cfg, layer_count=n), image_width) for n in layer_counts]
    radius = max(stack_radius(s) for s in stacks + [reference])
    ref_profile = radial_profile(impulse_response(reference, radius))

    rows = []
    for n, stack in zip(layer_counts, stacks):
        profile = radial_profile(impulse_response(stack, radius))
        rows.append(AblationRow(
            layer_count=n,
            l2_distance=profile_distance(profile, ref_profile),
            halo_radius_px=halo_radius(stack),
        ))
        logger.info("层数 %d: 距离 %.6g", n, rows[-1].l2_distance)
    return rows


def write_ablation_csv(rows: Sequence[AblationRow], path: Union[str, Path]) -> Path:
    """写出消融 CSV（layer_count, l2_distance, halo_radius_px）"""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["layer_count", "l2_distance", "halo_radius_px"])
        for row in rows:
            writer.writerow([row.layer_count, repr(row.l2_distance), row.halo_radius_px])
    return path


def run_layer_ablation(
    input_path: Union[str, Path],
    out_dir: Union[str, Path],
    cfg: FilterConfig,
    layer_counts: Sequence[int] = DEFAULT_LAYER_COUNTS,
    dense_layers: int = DEFAULT_DENSE_LAYERS
) -> List[AblationRow]:
    """
    对输入图像运行层数消融

    每个层数输出一张 layers_<N>.png，并写出 ablation.csv。
    """
    if not layer_counts:
        raise ParameterError("层数列表不能为空")
    image = read_image(input_path)
    rows = layer_ablation(cfg, image.width, layer_counts, dense_layers)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for n in layer_counts:
        write_png(emulate(image, replace(cfg, layer_count=n)), out_dir / f"layers_{n}.png")
    write_ablation_csv(rows, out_dir / ABLATION_CSV)
    return rows


if __name__ == "__main__":
    # 测试
    for row in layer_ablation(FilterConfig(density=0.5, focal_mm=20.0), 1024):
        print(row)
