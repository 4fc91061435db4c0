#!/usr/bin/env python3
"""
配置模块
运行设置（环境变量 / .env 文件）与滤镜参数文件的解析
"""

import os
import re
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from dotenv import dotenv_values, find_dotenv, load_dotenv

try:
    from .errors import ParameterError
    from .promist_filter import FilterConfig, density_fraction, weight_ratio_for_density
except ImportError:
    from errors import ParameterError
    from promist_filter import FilterConfig, density_fraction, weight_ratio_for_density


ENV_PREFIX = "PROMIST_"

# 参数文件允许的键
PARAM_KEYS = (
    "density",
    "focal_mm",
    "layer_count",
    "base_sigma",
    "reference_width",
    "weight_ratio_overrides",
    "tone_operator",
    "blend_mode",
    "transfer",
)


@dataclass(frozen=True)
class Settings:
    """运行设置"""

    jobs: int
    seed: int
    split_ratio: float
    params_file: Optional[Path]
    log_level: str
    bins: int


def _default_jobs() -> int:
    return min(4, os.cpu_count() or 1)


def _env(name: str) -> Optional[str]:
    value = os.environ.get(ENV_PREFIX + name)
    return value.strip() if value and value.strip() else None


def _parse_int(key: str, value: str, minimum: Optional[int] = None) -> int:
    try:
        result = int(value)
    except ValueError:
        raise ParameterError(f"{key} 必须是整数: {value!r}")
    if minimum is not None and result < minimum:
        raise ParameterError(f"{key} 不能小于 {minimum}: {result}")
    return result


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParameterError(f"{key} 必须是数值: {value!r}")


def parse_split_ratio(value: Union[str, float]) -> float:
    """训练集比例，必须在 (0, 1) 之间"""
    ratio = _parse_float("split_ratio", value) if isinstance(value, str) else float(value)
    if not 0 < ratio < 1:
        raise ParameterError(f"split_ratio 必须在 (0, 1) 之间: {ratio}")
    return ratio


def load_settings(env_file: Optional[str] = None) -> Settings:
    """
    加载运行设置

    优先级：进程环境变量 > .env 文件 > 默认值（命令行参数在 CLI 中再覆盖）。

    Args:
        env_file: .env 文件路径，默认从当前目录向上查找

    Returns:
        Settings

    Raises:
        ParameterError: 环境变量取值非法
    """
    # 自动加载 .env 文件（从当前目录向上查找），不覆盖已有环境变量
    load_dotenv(env_file or find_dotenv(usecwd=True))

    jobs = _env("JOBS")
    seed = _env("SEED")
    ratio = _env("SPLIT_RATIO")
    params = _env("PARAMS")
    bins = _env("BINS")
    level = (_env("LOG_LEVEL") or "WARNING").upper()

    return Settings(
        jobs=_parse_int("PROMIST_JOBS", jobs, 1) if jobs else _default_jobs(),
        seed=_parse_int("PROMIST_SEED", seed, 0) if seed else 0,
        split_ratio=parse_split_ratio(ratio) if ratio else 0.9,
        params_file=Path(params) if params else None,
        log_level=level,
        bins=_parse_int("PROMIST_BINS", bins, 1) if bins else 64,
    )


# ==================== 密度与配置标签 ====================

def parse_density(text: Union[str, float]) -> float:
    """
    解析密度等级

    支持 "1/2"、"1/8" 等分数写法和 "0.5" 等小数写法。

    Raises:
        ParameterError: 无法解析或不在 (0, 1] 之间
    """
    raw = str(text).strip()
    try:
        if "/" in raw:
            num, _, den = raw.partition("/")
            value = float(Fraction(int(num), int(den)))
        else:
            value = float(raw)
    except (ValueError, ZeroDivisionError):
        raise ParameterError(f"无法解析密度: {text!r}（示例: 1/2、1/8、0.25）")
    if not 0 < value <= 1:
        raise ParameterError(f"密度必须在 (0, 1] 之间: {text}")
    return value


def parse_focal(text: Union[str, float]) -> float:
    """解析焦距（毫米），允许 "50mm" 写法"""
    raw = str(text).strip().lower()
    if raw.endswith("mm"):
        raw = raw[:-2]
    value = _parse_float("focal_mm", raw)
    if not value > 0 or value == float("inf"):
        raise ParameterError(f"焦距必须为正: {text}")
    return value


_LABEL_RE = re.compile(r"^d(\d+)(?:-(\d+))?_f([0-9.]+)$")


def parse_config_spec(text: str) -> Tuple[float, float]:
    """
    解析配置描述

    支持规范标签 "d1-2_f20" 与表格写法 "1/2@20"、"1/2@20mm"。

    Returns:
        (density, focal_mm)
    """
    raw = text.strip()
    match = _LABEL_RE.match(raw)
    if match:
        num, den, focal = match.groups()
        density = parse_density(f"{num}/{den}" if den else num)
        return density, parse_focal(focal)
    if "@" in raw:
        density, _, focal = raw.partition("@")
        return parse_density(density), parse_focal(focal)
    raise ParameterError(f"无法解析配置: {text!r}（示例: 1/2@20 或 d1-2_f20）")


def parse_weight_ratio_overrides(text: str) -> Dict[Fraction, float]:
    """解析 "1/2:1.4,1/8:0.5" 形式的权重比覆盖表"""
    overrides = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        grade, sep, ratio = item.partition(":")
        if not sep:
            raise ParameterError(f"weight_ratio_overrides 项格式应为 密度:比值，实际 {item!r}")
        value = _parse_float("weight_ratio_overrides", ratio)
        if not value > 0:
            raise ParameterError(f"权重比必须为正: {item}")
        overrides[density_fraction(parse_density(grade))] = value
    return overrides


# ==================== 参数文件 ====================

def load_params_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    读取滤镜参数文件（KEY=VALUE 纯文本，# 开头为注释）

    Args:
        path: 参数文件路径

    Returns:
        已解析类型的参数字典，只包含文件中出现的键

    Raises:
        ParameterError: 文件不存在、包含未知键或取值非法
    """
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"参数文件不存在: {path}")

    params: Dict[str, Any] = {}
    for key, value in dotenv_values(path).items():
        name = key.strip().lower()
        if name not in PARAM_KEYS:
            raise ParameterError(f"参数文件包含未知键: {key}（允许 {', '.join(PARAM_KEYS)}）")
        if value is None or not value.strip():
            raise ParameterError(f"参数文件中 {key} 缺少取值")
        value = value.strip()

        if name == "density":
            params[name] = parse_density(value)
        elif name == "focal_mm":
            params[name] = parse_focal(value)
        elif name in ("layer_count", "reference_width"):
            params[name] = _parse_int(name, value, 1)
        elif name == "base_sigma":
            params[name] = _parse_float(name, value)
        elif name == "weight_ratio_overrides":
            params[name] = parse_weight_ratio_overrides(value)
        else:
            params[name] = value.lower()
    return params


_CONFIG_FIELDS = {f.name for f in fields(FilterConfig)}


def create_filter_config(
    density: Optional[Union[str, float]] = None,
    focal_mm: Optional[Union[str, float]] = None,
    params: Optional[Dict[str, Any]] = None,
    **overrides: Any
) -> FilterConfig:
    """
    创建滤镜配置

    优先级：显式参数 > 参数文件 > FilterConfig 默认值；密度与焦距均缺省时取 1/2 @ 20mm。

    Args:
        density: 密度等级（"1/2" 或数值）
        focal_mm: 焦距（毫米）
        params: load_params_file 的结果
        **overrides: 其他 FilterConfig 字段，None 值忽略
    """
    params = dict(params or {})
    ratio_table = params.pop("weight_ratio_overrides", None) or {}

    values: Dict[str, Any] = {k: v for k, v in params.items() if k in _CONFIG_FIELDS}
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - _CONFIG_FIELDS
    if unknown:
        raise ParameterError(f"未知的滤镜参数: {', '.join(sorted(unknown))}")

    if density is not None:
        values["density"] = parse_density(density)
    if focal_mm is not None:
        values["focal_mm"] = parse_focal(focal_mm)
    values.setdefault("density", 0.5)
    values.setdefault("focal_mm", 20.0)

    if ratio_table and "weight_ratio" not in values:
        values["weight_ratio"] = weight_ratio_for_density(values["density"], ratio_table)
    return FilterConfig(**values)


if __name__ == "__main__":
    # 测试
    settings = load_settings()
    print(f"运行设置: {settings}")
    print(f"默认配置: {create_filter_config().to_dict()}")
