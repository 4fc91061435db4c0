#!/usr/bin/env python3
"""
命令行入口

用法：
    promist apply --input in.png --output out.png --density 1/2 --focal 20
    promist generate --corpus images/ --out dataset/ --jobs 4
    promist analyze --original a.png --filtered b.png --out report/
    promist ablate-layers --input in.png --out ablation/ --layer-counts 1,2,4,6
    promist bench --size 1024x1024 --iters 3
    promist selftest

退出码：0 成功，1 I/O 错误，2 参数错误
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

try:
    from .ablation import DEFAULT_DENSE_LAYERS, run_layer_ablation
    from .analysis_metrics import analyze_pairs, collect_pairs
    from .bench import format_bench, parse_size, run_bench
    from .color_transfer import TONE_OPERATORS, TRANSFERS, read_image, write_png
    from .config import (
        Settings, create_filter_config, load_params_file, load_settings,
        parse_config_spec, parse_split_ratio,
    )
    from .dataset_builder import generate
    from .errors import EmptyCorpusError, ImageStructureError, ParameterError
    from .promist_filter import BLEND_MODES, DEFAULT_CONFIG_GRID, FilterConfig, emulate
    from .selftest import run_selftest
except ImportError:
    from ablation import DEFAULT_DENSE_LAYERS, run_layer_ablation
    from analysis_metrics import analyze_pairs, collect_pairs
    from bench import format_bench, parse_size, run_bench
    from color_transfer import TONE_OPERATORS, TRANSFERS, read_image, write_png
    from config import (
        Settings, create_filter_config, load_params_file, load_settings,
        parse_config_spec, parse_split_ratio,
    )
    from dataset_builder import generate
    from errors import EmptyCorpusError, ImageStructureError, ParameterError
    from promist_filter import BLEND_MODES, DEFAULT_CONFIG_GRID, FilterConfig, emulate
    from selftest import run_selftest


EXIT_OK = 0
EXIT_IO = 1
EXIT_PARAMS = 2

logger = logging.getLogger("promist")


def _echo_params(command: str, params: Dict[str, Any]) -> None:
    """输出解析后的参数（溯源）"""
    text = json.dumps(params, sort_keys=True, ensure_ascii=False, default=str)
    print(f"[{command}] 参数: {text}", file=sys.stderr)


def _load_params(args: argparse.Namespace, settings: Settings) -> Dict[str, Any]:
    path = getattr(args, "params", None) or settings.params_file
    return load_params_file(path) if path else {}


def _filter_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "layer_count": getattr(args, "layers", None),
        "tone_operator": getattr(args, "tone", None),
        "transfer": getattr(args, "transfer", None),
        "blend_mode": getattr(args, "blend", None),
    }


def _parse_int_list(text: str, name: str) -> List[int]:
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise ParameterError(f"{name} 不能为空")
    try:
        return [int(item) for item in items]
    except ValueError:
        raise ParameterError(f"{name} 必须是逗号分隔的整数: {text!r}")


# ==================== 子命令 ====================

def cmd_apply(args: argparse.Namespace, settings: Settings) -> int:
    """对单张图像应用滤镜"""
    cfg = create_filter_config(
        args.density, args.focal, _load_params(args, settings), **_filter_overrides(args)
    )
    _echo_params("apply", {"input": args.input, "output": args.output, **cfg.to_dict()})

    image = read_image(args.input)
    write_png(emulate(image, cfg), args.output)
    print(f"✓ {cfg.label}: {args.output}")
    return EXIT_OK


def _resolve_configs(args: argparse.Namespace, settings: Settings) -> List[FilterConfig]:
    params = _load_params(args, settings)
    # 配置列表决定密度与焦距，参数文件中的这两项不生效
    params = {k: v for k, v in params.items() if k not in ("density", "focal_mm")}
    overrides = _filter_overrides(args)

    if args.configs is None:
        specs = list(DEFAULT_CONFIG_GRID)
    else:
        specs = [parse_config_spec(s) for s in args.configs.split(",") if s.strip()]
    if not specs:
        raise ParameterError("至少需要一个滤镜配置")
    return [create_filter_config(d, f, params, **overrides) for d, f in specs]


def cmd_generate(args: argparse.Namespace, settings: Settings) -> int:
    """生成成对数据集"""
    ratio = parse_split_ratio(args.ratio) if args.ratio is not None else settings.split_ratio
    seed = args.seed if args.seed is not None else settings.seed
    jobs = args.jobs if args.jobs is not None else settings.jobs
    if jobs < 1:
        raise ParameterError(f"--jobs 必须为正整数: {jobs}")
    configs = _resolve_configs(args, settings)
    _echo_params("generate", {
        "corpus": args.corpus,
        "out": args.out,
        "seed": seed,
        "split_ratio": ratio,
        "jobs": jobs,
        "configs": {cfg.label: cfg.to_dict() for cfg in configs},
    })

    progress = not args.no_progress and sys.stderr.isatty()
    manifest = generate(args.corpus, configs, args.out, seed, ratio, jobs, progress)

    for label, counts in manifest.split_counts().items():
        print(f"{label}: train {counts['train']} / test {counts['test']}")
    print(f"共 {len(manifest.entries)} 张源图像，跳过 {len(manifest.skipped)} 张")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, settings: Settings) -> int:
    """分析图像对"""
    bins = args.bins if args.bins is not None else settings.bins
    jobs = args.jobs if args.jobs is not None else settings.jobs
    _echo_params("analyze", {
        "original": args.original,
        "filtered": args.filtered,
        "out": args.out,
        "bins": bins,
        "transfer": args.transfer,
    })

    pairs = collect_pairs(args.original, args.filtered)
    rows = analyze_pairs(pairs, args.out, bins, jobs, args.transfer)
    for name, _, report in rows:
        print(f"{name}: ΔV={report.mean_value_delta:+.4f} ΔS={report.mean_sat_delta:+.4f} "
              f"PSNR={report.psnr_db:.2f}dB SSIM={report.ssim:.4f}")
    return EXIT_OK


def cmd_ablate_layers(args: argparse.Namespace, settings: Settings) -> int:
    """模糊层数消融"""
    counts = _parse_int_list(args.layer_counts, "--layer-counts")
    cfg = create_filter_config(
        args.density, args.focal, _load_params(args, settings),
        tone_operator=args.tone, transfer=args.transfer
    )
    _echo_params("ablate-layers", {
        "input": args.input,
        "out": args.out,
        "layer_counts": counts,
        "dense_layers": args.dense_layers,
        **cfg.to_dict(),
    })

    rows = run_layer_ablation(args.input, args.out, cfg, counts, args.dense_layers)
    for row in rows:
        print(f"layers={row.layer_count}\tl2={row.l2_distance:.6g}\thalo={row.halo_radius_px}px")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, settings: Settings) -> int:
    """吞吐量基准"""
    width, height = parse_size(args.size)
    if args.iters < 1:
        raise ParameterError(f"--iters 必须 ≥ 1: {args.iters}")
    cfg = create_filter_config(args.density, args.focal, _load_params(args, settings))
    _echo_params("bench", {"size": f"{width}x{height}", "iters": args.iters, **cfg.to_dict()})

    print(format_bench(run_bench(width, height, args.iters, cfg)))
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace, settings: Settings) -> int:
    """运行自检"""
    _echo_params("selftest", {})
    results = run_selftest()
    for result in results:
        print(f"{'✓' if result.passed else '✗'} {result.name}: {result.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_IO


# ==================== 参数解析 ====================

def _add_filter_args(parser: argparse.ArgumentParser, with_layers: bool = True) -> None:
    parser.add_argument("--density", help="滤镜密度 1/2、1/8 或数值 (默认: 1/2)")
    parser.add_argument("--focal", help="焦距（毫米）(默认: 20)")
    if with_layers:
        parser.add_argument("--layers", type=int, help="模糊层数 (默认: 6)")
    parser.add_argument("--tone", choices=TONE_OPERATORS, help="色调映射算子 (默认: clamp)")
    parser.add_argument("--transfer", choices=TRANSFERS, help="传递函数 (默认: srgb)")
    parser.add_argument("--params", type=Path, help="滤镜参数文件（KEY=VALUE）")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promist",
        description="Pro-Mist 漫射滤镜仿真与成对数据集工具"
    )
    parser.add_argument("--log-level", help="日志级别 (默认: WARNING 或 PROMIST_LOG_LEVEL)")
    parser.add_argument("--env-file", help=".env 文件路径 (默认自动查找)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("apply", help="对单张图像应用滤镜")
    p.add_argument("--input", required=True, help="输入图像")
    p.add_argument("--output", required=True, help="输出 PNG")
    _add_filter_args(p)
    p.add_argument("--blend", choices=BLEND_MODES, help="混合模式 (默认: convex)")
    p.set_defaults(handler=cmd_apply)

    p = sub.add_parser("generate", help="生成成对数据集")
    p.add_argument("--corpus", required=True, help="源图像目录")
    p.add_argument("--out", required=True, help="输出目录")
    p.add_argument("--seed", type=int, help="划分随机种子 (默认: 0)")
    p.add_argument("--ratio", help="训练集比例 (默认: 0.9)")
    p.add_argument("--configs", help="逗号分隔的配置，如 1/2@20,d1-8_f50 (默认: 四种配置)")
    p.add_argument("--jobs", type=int, help="并行进程数")
    p.add_argument("--layers", type=int, help="模糊层数 (默认: 6)")
    p.add_argument("--tone", choices=TONE_OPERATORS, help="色调映射算子 (默认: clamp)")
    p.add_argument("--transfer", choices=TRANSFERS, help="传递函数 (默认: srgb)")
    p.add_argument("--params", type=Path, help="滤镜参数文件（KEY=VALUE）")
    p.add_argument("--no-progress", action="store_true", help="不显示进度条")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("analyze", help="分析原图与滤镜图")
    p.add_argument("--original", required=True, help="原图文件或目录")
    p.add_argument("--filtered", required=True, help="滤镜图文件或目录")
    p.add_argument("--out", required=True, help="报告目录")
    p.add_argument("--bins", type=int, help="直方图箱数 (默认: 64)")
    p.add_argument("--jobs", type=int, help="并行进程数")
    p.add_argument("--transfer", choices=TRANSFERS, default="srgb", help="解码传递函数")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("ablate-layers", help="模糊层数消融")
    p.add_argument("--input", required=True, help="输入图像")
    p.add_argument("--out", required=True, help="输出目录")
    p.add_argument("--layer-counts", default="1,2,4,6", help="逗号分隔的层数 (默认: 1,2,4,6)")
    p.add_argument("--dense-layers", type=int, default=DEFAULT_DENSE_LAYERS,
                   help=f"参考栈层数 (默认: {DEFAULT_DENSE_LAYERS})")
    _add_filter_args(p, with_layers=False)
    p.set_defaults(handler=cmd_ablate_layers)

    p = sub.add_parser("bench", help="吞吐量基准")
    p.add_argument("--size", default="1024x1024", help="测试尺寸 宽x高 (默认: 1024x1024)")
    p.add_argument("--iters", type=int, default=3, help="重复次数 (默认: 3)")
    p.add_argument("--density", help="滤镜密度 (默认: 1/2)")
    p.add_argument("--focal", help="焦距（毫米）(默认: 20)")
    p.add_argument("--params", type=Path, help="滤镜参数文件（KEY=VALUE）")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("selftest", help="运行自检")
    p.set_defaults(handler=cmd_selftest)

    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    命令行主函数

    Returns:
        退出码
    """
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args.env_file)
        _configure_logging(args.log_level or settings.log_level)
        logger.debug("子命令 %s, 设置 %s", args.command, settings)
        return args.handler(args, settings)
    except (ParameterError, ImageStructureError, EmptyCorpusError) as e:
        logger.debug("参数错误", exc_info=True)
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_PARAMS
    except OSError as e:
        logger.debug("I/O 错误", exc_info=True)
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
