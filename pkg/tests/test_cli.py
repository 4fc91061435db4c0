"""
命令行入口测试
"""

import json
import os

import numpy as np
import pytest
from unittest.mock import patch


def run(env_file, *args):
    from promist.cli import main
    return main(["--env-file", env_file, *args])


class TestApply:
    """测试 apply 子命令"""

    @pytest.mark.integration
    def test_apply(self, tmp_path, make_png, env_file, capsys):
        """测试单张图像滤镜"""
        from promist import read_image
        make_png(tmp_path / "in.png", width=20, height=10)
        out = tmp_path / "out" / "mist.png"
        code = run(env_file, "apply", "--input", str(tmp_path / "in.png"), "--output", str(out),
                   "--density", "1/8", "--focal", "50")
        assert code == 0
        assert read_image(out).data.shape == (10, 20, 3)

        captured = capsys.readouterr()
        assert "d1-8_f50" in captured.out
        assert "[apply] 参数:" in captured.err
        params = json.loads(captured.err.split("参数:", 1)[1].strip().splitlines()[0])
        assert params["density"] == "1/8"
        assert params["focal_mm"] == 50.0

    @pytest.mark.integration
    def test_apply_changes_pixels(self, tmp_path, make_png, env_file):
        """测试滤镜输出与输入不同"""
        from promist import read_image
        original = make_png(tmp_path / "in.png", width=32, height=24)
        code = run(env_file, "apply", "--input", str(tmp_path / "in.png"),
                   "--output", str(tmp_path / "out.png"), "--density", "1/2", "--focal", "20")
        assert code == 0
        filtered = read_image(tmp_path / "out.png")
        assert filtered.data.shape == original.data.shape
        assert not np.array_equal(filtered.data, original.data)

    @pytest.mark.integration
    def test_params_file(self, tmp_path, make_png, env_file, capsys):
        """测试参数文件生效且命令行优先"""
        make_png(tmp_path / "in.png")
        params = tmp_path / "filter.params"
        params.write_text("DENSITY=1/8\nLAYER_COUNT=3\n", encoding="utf-8")
        code = run(env_file, "apply", "--input", str(tmp_path / "in.png"),
                   "--output", str(tmp_path / "out.png"), "--params", str(params), "--layers", "2")
        assert code == 0
        err = capsys.readouterr().err
        assert '"density": "1/8"' in err
        assert '"layer_count": 2' in err

    @pytest.mark.integration
    def test_missing_input(self, tmp_path, env_file, capsys):
        """测试输入不存在时退出码为 1"""
        code = run(env_file, "apply", "--input", str(tmp_path / "nope.png"),
                   "--output", str(tmp_path / "out.png"))
        assert code == 1
        assert "错误:" in capsys.readouterr().err

    @pytest.mark.integration
    def test_bad_density(self, tmp_path, make_png, env_file, capsys):
        """测试非法密度时退出码为 2"""
        make_png(tmp_path / "in.png")
        code = run(env_file, "apply", "--input", str(tmp_path / "in.png"),
                   "--output", str(tmp_path / "out.png"), "--density", "3/2")
        assert code == 2
        assert "密度" in capsys.readouterr().err
        assert not (tmp_path / "out.png").exists()

    @pytest.mark.integration
    def test_zero_layers(self, tmp_path, make_png, env_file):
        """测试层数为 0 时退出码为 2"""
        make_png(tmp_path / "in.png")
        code = run(env_file, "apply", "--input", str(tmp_path / "in.png"),
                   "--output", str(tmp_path / "out.png"), "--layers", "0")
        assert code == 2

    @pytest.mark.unit
    def test_missing_subcommand(self):
        """测试缺少子命令"""
        from promist.cli import main
        with pytest.raises(SystemExit) as exc_info:
            main([])
        assert exc_info.value.code == 2


class TestGenerate:
    """测试 generate 子命令"""

    @pytest.mark.integration
    def test_generate(self, corpus_dir, tmp_path, env_file, capsys):
        """测试生成并输出每个配置的划分数量"""
        out = tmp_path / "dataset"
        code = run(env_file, "generate", "--corpus", str(corpus_dir), "--out", str(out),
                   "--configs", "1/2@20,d1-8_f50", "--jobs", "1", "--no-progress")
        assert code == 0
        stdout = capsys.readouterr().out
        assert "d1-2_f20: train 18 / test 2" in stdout
        assert "d1-8_f50: train 18 / test 2" in stdout
        assert (out / "manifest.json").is_file()

    @pytest.mark.integration
    def test_seed_from_environment(self, corpus_dir, tmp_path):
        """测试 .env 中的种子与比例"""
        env = tmp_path / ".env"
        env.write_text("PROMIST_SEED=17\nPROMIST_SPLIT_RATIO=0.5\n", encoding="utf-8")
        out = tmp_path / "dataset"
        # load_dotenv 会写入进程环境，退出时还原
        with patch.dict(os.environ):
            os.environ.pop("PROMIST_SEED", None)
            os.environ.pop("PROMIST_SPLIT_RATIO", None)
            code = run(str(env), "generate", "--corpus", str(corpus_dir), "--out", str(out),
                       "--configs", "1/2@20", "--jobs", "1", "--no-progress")
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] == 17
        assert manifest["split_ratio"] == 0.5

    @pytest.mark.integration
    def test_empty_corpus(self, tmp_path, env_file, capsys):
        """测试空语料时退出码为 2"""
        (tmp_path / "corpus").mkdir()
        code = run(env_file, "generate", "--corpus", str(tmp_path / "corpus"),
                   "--out", str(tmp_path / "dataset"), "--no-progress")
        assert code == 2
        assert "没有支持的图像" in capsys.readouterr().err

    @pytest.mark.integration
    def test_bad_config(self, corpus_dir, tmp_path, env_file):
        """测试无法解析的配置"""
        code = run(env_file, "generate", "--corpus", str(corpus_dir),
                   "--out", str(tmp_path / "dataset"), "--configs", "strong")
        assert code == 2


    @pytest.mark.integration
    def test_bad_ratio(self, corpus_dir, tmp_path, env_file):
        """测试划分比例超出 (0, 1)"""
        code = run(env_file, "generate", "--corpus", str(corpus_dir),
                   "--out", str(tmp_path / "dataset"), "--ratio", "1.5", "--no-progress")
        assert code == 2


    @pytest.mark.integration
    def test_manifest_independent_of_jobs(self, corpus_dir, tmp_path, env_file):
        """测试 --jobs 1 与 --jobs 3 生成的清单逐字节一致"""
        for jobs in ("1", "3"):
            code = run(env_file, "generate", "--corpus", str(corpus_dir),
                       "--out", str(tmp_path / f"jobs{jobs}"), "--configs", "1/8@20,1/2@50",
                       "--jobs", jobs, "--no-progress")
            assert code == 0
        serial = (tmp_path / "jobs1" / "manifest.json").read_bytes()
        assert serial == (tmp_path / "jobs3" / "manifest.json").read_bytes()

    @pytest.mark.integration
    def test_negative_seed(self, corpus_dir, tmp_path, env_file, capsys):
        """测试负的随机种子退出码为 2"""
        code = run(env_file, "generate", "--corpus", str(corpus_dir), "--out", str(tmp_path / "dataset"),
                   "--seed", "-1", "--configs", "1/8@20", "--no-progress")
        assert code == 2
        assert "种子" in capsys.readouterr().err

    @pytest.mark.integration
    def test_negative_seed_from_environment(self, corpus_dir, tmp_path, env_file):
        """测试环境变量中的负种子退出码为 2"""
        with patch.dict(os.environ, {"PROMIST_SEED": "-1"}):
            code = run(env_file, "generate", "--corpus", str(corpus_dir),
                       "--out", str(tmp_path / "dataset"), "--configs", "1/8@20", "--no-progress")
        assert code == 2


class TestAnalyze:
    """测试 analyze 子命令"""

    @pytest.mark.integration
    def test_analyze_pair(self, tmp_path, make_png, env_file, capsys):
        """测试单对图像分析"""
        make_png(tmp_path / "a.png")
        make_png(tmp_path / "b.png")
        out = tmp_path / "report"
        code = run(env_file, "analyze", "--original", str(tmp_path / "a.png"),
                   "--filtered", str(tmp_path / "b.png"), "--out", str(out), "--bins", "8")
        assert code == 0
        assert (out / "report.csv").is_file()
        data = json.loads((out / "a.json").read_text(encoding="utf-8"))
        assert len(data["original_histogram"]["val_counts"]) == 8
        assert "SSIM=" in capsys.readouterr().out

    @pytest.mark.integration
    def test_unreadable_file_parallel(self, tmp_path, make_png, env_file, capsys):
        """测试并行分析遇到无法解码的图像时退出码为 1"""
        for side in ("original", "filtered"):
            make_png(tmp_path / side / "a.png")
            (tmp_path / side / "b.png").write_bytes(b"not a png")
        code = run(env_file, "analyze", "--original", str(tmp_path / "original"),
                   "--filtered", str(tmp_path / "filtered"), "--out", str(tmp_path / "report"),
                   "--jobs", "2")
        assert code == 1
        assert "b.png" in capsys.readouterr().err

    @pytest.mark.integration
    def test_size_mismatch(self, tmp_path, make_png, env_file):
        """测试尺寸不一致时退出码为 2"""
        make_png(tmp_path / "a.png", width=16, height=12)
        make_png(tmp_path / "b.png", width=12, height=12)
        code = run(env_file, "analyze", "--original", str(tmp_path / "a.png"),
                   "--filtered", str(tmp_path / "b.png"), "--out", str(tmp_path / "report"))
        assert code == 2


class TestOtherCommands:
    """测试 ablate-layers、bench 与 selftest 子命令"""

    @pytest.mark.integration
    def test_ablate_layers(self, tmp_path, make_png, env_file, capsys):
        """测试层数消融"""
        make_png(tmp_path / "in.png", width=24, height=16)
        out = tmp_path / "ablation"
        code = run(env_file, "ablate-layers", "--input", str(tmp_path / "in.png"),
                   "--out", str(out), "--layer-counts", "1,3")
        assert code == 0
        assert (out / "layers_1.png").is_file()
        assert (out / "layers_3.png").is_file()
        assert "layers=3" in capsys.readouterr().out

    @pytest.mark.integration
    def test_ablate_bad_counts(self, tmp_path, make_png, env_file):
        """测试非法层数列表"""
        make_png(tmp_path / "in.png")
        code = run(env_file, "ablate-layers", "--input", str(tmp_path / "in.png"),
                   "--out", str(tmp_path / "ablation"), "--layer-counts", "a,b")
        assert code == 2

    @pytest.mark.unit
    def test_bench(self, env_file, capsys):
        """测试基准输出"""
        from promist.bench import BENCH_HEADER
        code = run(env_file, "bench", "--size", "32x16", "--iters", "1")
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == BENCH_HEADER
        assert lines[-1].startswith("pipeline\t-\t")

    @pytest.mark.unit
    def test_bench_bad_iters(self, env_file):
        """测试非法重复次数"""
        assert run(env_file, "bench", "--size", "32x16", "--iters", "0") == 2

    @pytest.mark.unit
    def test_selftest(self, env_file, capsys):
        """测试自检"""
        assert run(env_file, "selftest") == 0
        out = capsys.readouterr().out
        assert out.count("✓") == 5
        assert "✗" not in out

    @pytest.mark.unit
    def test_selftest_failure(self, env_file, mocker):
        """测试自检失败时退出码为 1"""
        from promist.selftest import CheckResult
        mocker.patch("promist.cli.run_selftest", return_value=[CheckResult("x", False, "坏")])
        assert run(env_file, "selftest") == 1
