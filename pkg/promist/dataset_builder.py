#!/usr/bin/env python3
"""
数据集构建模块
扫描语料、确定性划分训练/测试集、批量生成四种配置的成对图像并写出清单
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

try:
    from .color_transfer import SUPPORTED_SUFFIXES, read_image, write_png
    from .errors import DatasetIOError, EmptyCorpusError, ImageReadError, ParameterError
    from .promist_filter import DEFAULT_CONFIG_GRID, FilterConfig, emulate
except ImportError:
    from color_transfer import SUPPORTED_SUFFIXES, read_image, write_png
    from errors import DatasetIOError, EmptyCorpusError, ImageReadError, ParameterError
    from promist_filter import DEFAULT_CONFIG_GRID, FilterConfig, emulate


logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
ORIGINAL_DIR = "original"
SPLITS = ("train", "test")
DEFAULT_SEED = 0
DEFAULT_SPLIT_RATIO = 0.9
# floor(ratio·N) 的浮点容差，避免 0.57×100 = 56.999… 这类误差
_FLOOR_EPS = 1e-9


@dataclass
class ManifestEntry:
    """清单中的一条源图像记录"""

    source_path: str
    split: str
    outputs: Dict[str, str] = field(default_factory=dict)
    status: str = "ok"
    reason: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        entry: Dict[str, Any] = {
            "outputs": dict(sorted(self.outputs.items())),
            "source_path": self.source_path,
            "split": self.split,
            "status": self.status,
        }
        if self.reason is not None:
            entry["reason"] = self.reason
        return entry


@dataclass
class DatasetManifest:
    """可复现的数据集清单"""

    seed: int
    split_ratio: float
    configs: List[str]
    entries: List[ManifestEntry]
    config_params: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def split_counts(self) -> Dict[str, Dict[str, int]]:
        """每个配置在 train/test 中成功生成的图像数"""
        counts = {label: {split: 0 for split in SPLITS} for label in self.configs}
        for entry in self.entries:
            for label in entry.outputs:
                if label in counts:
                    counts[label][entry.split] += 1
        return counts

    @property
    def skipped(self) -> List[ManifestEntry]:
        return [e for e in self.entries if e.status != "ok"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config_params": self.config_params,
            "configs": list(self.configs),
            "entries": [entry.to_dict() for entry in self.entries],
            "seed": self.seed,
            "split_ratio": self.split_ratio,
        }

    def to_json(self) -> str:
        """稳定键序的 JSON 文本（相同输入逐字节一致）"""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def write(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(self.to_json(), encoding="utf-8")
        return path


# ==================== 语料扫描与划分 ====================

def scan_corpus(directory: Union[str, Path]) -> List[Path]:
    """
    扫描语料目录（不递归）

    Args:
        directory: 语料目录

    Returns:
        按文件名字典序排列的支持格式图像路径

    Raises:
        DatasetIOError: 目录不存在或不可读
        EmptyCorpusError: 没有支持的图像文件
    """
    directory = Path(directory)
    try:
        candidates = list(directory.iterdir())
    except OSError as e:
        raise DatasetIOError(str(directory), f"无法读取语料目录: {e}")

    images = sorted(
        (p for p in candidates if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES),
        key=lambda p: p.name
    )
    if not images:
        raise EmptyCorpusError(str(directory))
    logger.info("语料 %s: %d 个图像文件", directory, len(images))
    return images


def split(
    entries: Sequence[Any],
    ratio: float = DEFAULT_SPLIT_RATIO,
    seed: int = DEFAULT_SEED
) -> Tuple[List[Any], List[Any]]:
    """
    确定性划分训练/测试集

    使用 numpy PCG64 生成器（以 seed 初始化）打乱顺序，前 floor(ratio·N) 个为训练集。

    Args:
        entries: 非空条目序列
        ratio: 训练集比例 (0, 1)
        seed: 随机种子

    Returns:
        (train, test)

    Raises:
        ParameterError: 比例或种子非法、条目为空
    """
    if not 0 < ratio < 1:
        raise ParameterError(f"split_ratio 必须在 (0, 1) 之间: {ratio}")
    if not entries:
        raise ParameterError("划分的条目不能为空")
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ParameterError(f"随机种子必须是非负整数: {seed}")

    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(entries))
    n_train = int(math.floor(ratio * len(entries) + _FLOOR_EPS))
    shuffled = [entries[i] for i in order]
    return shuffled[:n_train], shuffled[n_train:]


def default_configs(**overrides: Any) -> List[FilterConfig]:
    """数据集的四种默认配置 {1/2, 1/8} × {20mm, 50mm}"""
    return [
        FilterConfig(density=density, focal_mm=focal, **overrides)
        for density, focal in DEFAULT_CONFIG_GRID
    ]


# ==================== 生成 ====================

@dataclass(frozen=True)
class _Job:
    source: Path
    split: str
    out_dir: Path
    configs: Tuple[FilterConfig, ...]


def _output_path(out_dir: Path, label: str, split_name: str, stem: str) -> Path:
    return out_dir / label / split_name / f"{stem}.png"


def _relative(path: Path, root: Path) -> str:
    return path.relative_to(root).as_posix()


def _process_entry(job: _Job) -> ManifestEntry:
    """处理单张源图像：生成所有配置的输出并复制原图"""
    entry = ManifestEntry(source_path=job.source.name, split=job.split)
    try:
        image = read_image(job.source)
    except ImageReadError as e:
        entry.status = "skipped"
        entry.reason = e.reason
        return entry

    stem = job.source.stem
    original_path = _output_path(job.out_dir, ORIGINAL_DIR, job.split, stem)
    write_png(image, original_path)
    entry.outputs[ORIGINAL_DIR] = _relative(original_path, job.out_dir)

    for cfg in job.configs:
        path = _output_path(job.out_dir, cfg.label, job.split, stem)
        write_png(emulate(image, cfg), path)
        entry.outputs[cfg.label] = _relative(path, job.out_dir)
    return entry


def _run_jobs(jobs: Sequence[_Job], workers: int, progress: bool) -> List[ManifestEntry]:
    bar = tqdm(total=len(jobs), desc="生成", unit="张", disable=not progress)
    try:
        if workers <= 1:
            results = []
            for job in jobs:
                results.append(_process_entry(job))
                bar.update()
            return results
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = []
            # map 保持提交顺序，清单与完成顺序无关
            for entry in executor.map(_process_entry, jobs):
                results.append(entry)
                bar.update()
            return results
    finally:
        bar.close()


def _check_unique_stems(sources: Iterable[Path]) -> None:
    seen: Dict[str, str] = {}
    for source in sources:
        if source.stem in seen:
            raise ParameterError(
                f"源文件重名（忽略扩展名）: {seen[source.stem]} 与 {source.name}"
            )
        seen[source.stem] = source.name


def generate(
    corpus: Union[str, Path],
    configs: Sequence[FilterConfig],
    out: Union[str, Path],
    seed: int = DEFAULT_SEED,
    ratio: float = DEFAULT_SPLIT_RATIO,
    jobs: int = 1,
    progress: bool = False
) -> DatasetManifest:
    """
    生成成对数据集

    输出布局：out/<配置标签>/{train,test}/<名称>.png 与 out/original/{train,test}/<名称>.png，
    清单写入 out/manifest.json。无法解码的源图像记为 skipped 并写明原因。

    Args:
        corpus: 语料目录
        configs: 滤镜配置列表（非空，标签不重复）
        out: 输出根目录
        seed: 划分随机种子
        ratio: 训练集比例
        jobs: 并行进程数
        progress: 是否显示进度条

    Returns:
        DatasetManifest

    Raises:
        ParameterError: 配置为空或重复、比例非法、源文件重名
        EmptyCorpusError: 语料为空
        DatasetIOError: 输出根目录无法写入
    """
    if not configs:
        raise ParameterError("至少需要一个滤镜配置")
    labels = [cfg.label for cfg in configs]
    if len(set(labels)) != len(labels):
        raise ParameterError(f"配置标签重复: {labels}")
    if jobs < 1:
        raise ParameterError(f"jobs 必须为正整数: {jobs}")

    sources = scan_corpus(corpus)
    _check_unique_stems(sources)
    train, test = split(sources, ratio, seed)
    assignment = {path: "train" for path in train}
    assignment.update({path: "test" for path in test})

    out_dir = Path(out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for label in [ORIGINAL_DIR] + labels:
            for split_name in SPLITS:
                (out_dir / label / split_name).mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DatasetIOError(str(out_dir), str(e))

    job_list = [_Job(path, assignment[path], out_dir, tuple(configs)) for path in sources]
    try:
        entries = _run_jobs(job_list, jobs, progress)
    except OSError as e:
        raise DatasetIOError(str(out_dir), str(e))

    for entry in entries:
        if entry.status != "ok":
            logger.warning("跳过 %s: %s", entry.source_path, entry.reason)

    manifest = DatasetManifest(
        seed=seed,
        split_ratio=ratio,
        configs=labels,
        entries=entries,
        config_params={cfg.label: cfg.to_dict() for cfg in configs},
    )
    try:
        manifest.write(out_dir)
    except OSError as e:
        raise DatasetIOError(str(out_dir), str(e))
    return manifest


if __name__ == "__main__":
    import sys

    if len(sys.argv) != 3:
        print("用法: python dataset_builder.py <语料目录> <输出目录>")
        sys.exit(1)
    result = generate(sys.argv[1], default_configs(), sys.argv[2], progress=True)
    print(f"清单: {len(result.entries)} 条, 跳过 {len(result.skipped)} 条")
