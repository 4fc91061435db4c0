"""
pytest 配置和共享 fixtures
"""

import os
import sys
import pytest
import numpy as np

# 添加项目根目录到 Python 路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def pytest_configure(config):
    """配置 pytest markers"""
    config.addinivalue_line(
        "markers", "unit: fast unit tests on synthetic in-memory images"
    )
    config.addinivalue_line(
        "markers", "integration: tests that write images and reports to a temporary directory"
    )


# ==================== 图像 Fixtures ====================

@pytest.fixture
def rng():
    """固定种子的随机数生成器"""
    return np.random.default_rng(1234)


@pytest.fixture
def random_image(rng):
    """随机 8 位编码图像 (24x32)"""
    from promist import EncodedImage
    return EncodedImage(rng.integers(0, 256, size=(24, 32, 3)), 8)


@pytest.fixture
def make_png(rng):
    """写出随机 PNG 文件的工厂函数"""
    from promist import EncodedImage, write_png

    def _make(path, width=16, height=12, bit_depth=8):
        max_code = (1 << bit_depth) - 1
        img = EncodedImage(rng.integers(0, max_code + 1, size=(height, width, 3)), bit_depth)
        write_png(img, path)
        return img

    return _make


@pytest.fixture
def corpus_dir(tmp_path, make_png):
    """20 张 PNG 加 3 个非图像文件的语料目录"""
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for i in range(20):
        make_png(corpus / f"img_{i:02d}.png")
    for i in range(3):
        (corpus / f"notes_{i}.txt").write_text("not an image", encoding="utf-8")
    return corpus


@pytest.fixture
def env_file(tmp_path):
    """不存在的 .env 路径，避免读取工作目录下的真实配置"""
    return str(tmp_path / "missing.env")
