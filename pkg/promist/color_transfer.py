#!/usr/bin/env python3
"""
颜色传递模块
显示参考（gamma 编码）图像与场景参考线性图像之间的转换、色调映射以及 PNG 读写
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence, Union

import cv2
import numpy as np

try:
    from .errors import ImageReadError, ImageStructureError, ParameterError
except ImportError:
    from errors import ImageReadError, ImageStructureError, ParameterError


logger = logging.getLogger(__name__)

ToneOperator = Literal["clamp", "reinhard"]
Transfer = Literal["srgb", "gamma"]

TONE_OPERATORS = ("clamp", "reinhard")
TRANSFERS = ("srgb", "gamma")
BIT_DEPTHS = {8: np.uint8, 16: np.uint16}

# sRGB 分段传递函数常数
SRGB_A = 0.055
SRGB_PHI = 12.92
SRGB_K0 = 0.04045
SRGB_GAMMA = 2.4
# 纯幂律选项
PURE_GAMMA = 2.2

SUPPORTED_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp")


def _check_raster_shape(data: np.ndarray) -> None:
    if data.ndim != 3 or data.shape[2] != 3:
        raise ImageStructureError(f"图像数据必须是 (高, 宽, 3) 形状，实际为 {data.shape}")
    if data.shape[0] < 1 or data.shape[1] < 1:
        raise ImageStructureError(f"图像尺寸必须为正: {data.shape}")


@dataclass(frozen=True)
class EncodedImage:
    """显示参考的整数 RGB 图像（行优先，通道交错）"""

    data: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        if self.bit_depth not in BIT_DEPTHS:
            raise ImageStructureError(f"不支持的位深: {self.bit_depth}（仅支持 8 或 16）")
        data = np.asarray(self.data)
        _check_raster_shape(data)
        if not np.issubdtype(data.dtype, np.integer):
            raise ImageStructureError(f"编码图像必须是整数采样，实际类型 {data.dtype}")
        max_code = (1 << self.bit_depth) - 1
        if data.size and (data.min() < 0 or data.max() > max_code):
            raise ImageStructureError(f"采样值超出 {self.bit_depth} 位范围 [0, {max_code}]")
        object.__setattr__(self, "data", data.astype(BIT_DEPTHS[self.bit_depth], copy=False))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def max_code(self) -> int:
        return (1 << self.bit_depth) - 1

    def normalized(self) -> np.ndarray:
        """返回归一化到 [0, 1] 的浮点采样"""
        return self.data.astype(np.float64) / self.max_code

    @classmethod
    def from_buffer(
        cls,
        samples: Union[Sequence[int], np.ndarray],
        width: int,
        height: int,
        bit_depth: int = 8
    ) -> "EncodedImage":
        """
        从行优先、通道交错的一维采样缓冲区构造图像

        Args:
            samples: 采样序列，长度必须为 width × height × 3
            width: 宽度（像素）
            height: 高度（像素）
            bit_depth: 位深 (8/16)

        Raises:
            ImageStructureError: 缓冲区长度与尺寸不符
        """
        flat = np.asarray(samples).reshape(-1)
        expected = width * height * 3
        if width < 1 or height < 1 or flat.size != expected:
            raise ImageStructureError(
                f"缓冲区长度 {flat.size} 与尺寸 {width}x{height}x3 = {expected} 不符"
            )
        return cls(flat.reshape(height, width, 3), bit_depth)


@dataclass(frozen=True)
class LinearImage:
    """场景参考的线性 RGB 图像，允许超过 1.0 的高光余量"""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        _check_raster_shape(data)
        if not np.all(np.isfinite(data)):
            raise ImageStructureError("线性图像包含非有限值")
        if data.size and data.min() < 0:
            raise ImageStructureError("线性图像包含负值")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def total_energy(self) -> float:
        """所有采样之和（线性光能量）"""
        return float(self.data.sum())


def _check_transfer(transfer: str) -> None:
    if transfer not in TRANSFERS:
        raise ParameterError(f"未知的传递函数: {transfer}（可选 {', '.join(TRANSFERS)}）")


def srgb_eotf(encoded: np.ndarray, transfer: Transfer = "srgb") -> np.ndarray:
    """归一化编码值 → 线性值"""
    _check_transfer(transfer)
    if transfer == "gamma":
        return np.power(encoded, PURE_GAMMA)
    return np.where(
        encoded <= SRGB_K0,
        encoded / SRGB_PHI,
        np.power((encoded + SRGB_A) / (1 + SRGB_A), SRGB_GAMMA)
    )


def srgb_inverse_eotf(linear: np.ndarray, transfer: Transfer = "srgb") -> np.ndarray:
    """线性值 [0, 1] → 归一化编码值"""
    _check_transfer(transfer)
    if transfer == "gamma":
        return np.power(linear, 1 / PURE_GAMMA)
    return np.where(
        linear <= SRGB_K0 / SRGB_PHI,
        linear * SRGB_PHI,
        (1 + SRGB_A) * np.power(linear, 1 / SRGB_GAMMA) - SRGB_A
    )


def decode_srgb(img: EncodedImage, transfer: Transfer = "srgb") -> LinearImage:
    """
    去除 gamma 编码，得到线性图像

    Args:
        img: 编码图像
        transfer: 传递函数，srgb 为标准分段函数，gamma 为纯 2.2 幂律

    Returns:
        线性图像，取值 [0, 1]
    """
    return LinearImage(srgb_eotf(img.normalized(), transfer))


def encode_srgb(
    img: LinearImage,
    bit_depth: int = 8,
    transfer: Transfer = "srgb"
) -> EncodedImage:
    """
    线性图像编码为整数图像

    先裁剪到 [0, 1]，经过反向传递函数后按位深四舍五入量化。

    Args:
        img: 线性图像
        bit_depth: 输出位深 (8/16)
        transfer: 传递函数

    Returns:
        编码图像
    """
    if bit_depth not in BIT_DEPTHS:
        raise ImageStructureError(f"不支持的位深: {bit_depth}（仅支持 8 或 16）")
    max_code = (1 << bit_depth) - 1
    encoded = srgb_inverse_eotf(np.clip(img.data, 0.0, 1.0), transfer)
    codes = np.floor(encoded * max_code + 0.5)
    return EncodedImage(np.clip(codes, 0, max_code).astype(BIT_DEPTHS[bit_depth]), bit_depth)


def tone_map(img: LinearImage, operator: ToneOperator = "clamp") -> LinearImage:
    """
    将场景参考线性值压缩到显示范围 [0, 1]

    Args:
        img: 线性图像
        operator: clamp 为 min(x, 1)，reinhard 为 x / (1 + x)
    """
    if operator == "clamp":
        return LinearImage(np.minimum(img.data, 1.0))
    if operator == "reinhard":
        return LinearImage(img.data / (1.0 + img.data))
    raise ParameterError(f"未知的色调映射算子: {operator}（可选 {', '.join(TONE_OPERATORS)}）")


# ==================== 文件读写 ====================

def read_image(path: Union[str, Path]) -> EncodedImage:
    """
    读取图像文件（PNG/JPEG/TIFF/BMP，8 或 16 位）

    灰度图扩展为 RGB，alpha 通道被丢弃。

    Raises:
        ImageReadError: 文件不存在或无法解码
    """
    path = Path(path)
    if not path.is_file():
        raise ImageReadError(str(path), "文件不存在")
    try:
        buffer = np.fromfile(str(path), dtype=np.uint8)
    except OSError as e:
        raise ImageReadError(str(path), str(e))

    # imdecode 可处理非 ASCII 路径
    raw = cv2.imdecode(buffer, cv2.IMREAD_UNCHANGED) if buffer.size else None
    if raw is None:
        raise ImageReadError(str(path), "无法解码图像")

    if raw.dtype == np.uint8:
        bit_depth = 8
    elif raw.dtype == np.uint16:
        bit_depth = 16
    else:
        raise ImageReadError(str(path), f"不支持的采样类型 {raw.dtype}")

    if raw.ndim == 2:
        rgb = np.repeat(raw[:, :, None], 3, axis=2)
    elif raw.shape[2] == 4:
        rgb = cv2.cvtColor(raw, cv2.COLOR_BGRA2RGB)
    elif raw.shape[2] == 3:
        rgb = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    else:
        raise ImageReadError(str(path), f"不支持的通道数 {raw.shape[2]}")

    logger.debug("读取 %s: %dx%d, %d 位", path.name, rgb.shape[1], rgb.shape[0], bit_depth)
    return EncodedImage(rgb, bit_depth)


def write_png(img: EncodedImage, path: Union[str, Path]) -> Path:
    """
    写出 PNG 文件（固定压缩级别，结果逐字节可复现）

    Returns:
        写出的文件路径
    """
    path = Path(path)
    bgr = cv2.cvtColor(img.data, cv2.COLOR_RGB2BGR)
    ok, encoded = cv2.imencode(".png", bgr, [cv2.IMWRITE_PNG_COMPRESSION, 3])
    if not ok:
        raise OSError(f"PNG 编码失败: {path}")
    path.parent.mkdir(parents=True, exist_ok=True)
    encoded.tofile(str(path))
    return path


if __name__ == "__main__":
    # 测试
    img = EncodedImage.from_buffer([0, 128, 255] * 4, width=2, height=2)
    linear = decode_srgb(img)
    print(f"线性值: {linear.data[0, 0]}")
    print(f"往返: {encode_srgb(linear).data[0, 0]}")
