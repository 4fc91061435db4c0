"""
Pro-Mist 漫射滤镜仿真工具集
"""

from .errors import (
    PromistError, ParameterError, ImageStructureError, ImageReadError,
    EmptyCorpusError, DatasetIOError,
)
from .color_transfer import (
    EncodedImage, LinearImage, decode_srgb, encode_srgb, tone_map, read_image, write_png,
)
from .gaussian_engine import Kernel1D, make_kernel, blur
from .promist_filter import (
    FilterConfig, BlurStack, derive_params, apply_filter, emulate,
    reference_stack, impulse_response, radial_profile, halo_radius,
)
from .config import Settings, load_settings, load_params_file, create_filter_config
from .dataset_builder import DatasetManifest, ManifestEntry, scan_corpus, split, generate
from .analysis_metrics import (
    PairReport, rgb_to_hsv, histogram, hsv_histogram, psnr, ssim, pair_report, analyze_pairs,
)
from .ablation import AblationRow, layer_ablation, run_layer_ablation
from .bench import BenchRow, run_bench
from .selftest import CheckResult, run_selftest

__version__ = "0.1.0"

__all__ = [
    "PromistError",
    "ParameterError",
    "ImageStructureError",
    "ImageReadError",
    "EmptyCorpusError",
    "DatasetIOError",
    "EncodedImage",
    "LinearImage",
    "decode_srgb",
    "encode_srgb",
    "tone_map",
    "read_image",
    "write_png",
    "Kernel1D",
    "make_kernel",
    "blur",
    "FilterConfig",
    "BlurStack",
    "derive_params",
    "apply_filter",
    "emulate",
    "reference_stack",
    "impulse_response",
    "radial_profile",
    "halo_radius",
    "Settings",
    "load_settings",
    "load_params_file",
    "create_filter_config",
    "DatasetManifest",
    "ManifestEntry",
    "scan_corpus",
    "split",
    "generate",
    "PairReport",
    "rgb_to_hsv",
    "histogram",
    "hsv_histogram",
    "psnr",
    "ssim",
    "pair_report",
    "analyze_pairs",
    "AblationRow",
    "layer_ablation",
    "run_layer_ablation",
    "BenchRow",
    "run_bench",
    "CheckResult",
    "run_selftest",
]
