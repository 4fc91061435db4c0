"""
颜色传递模块单元测试
"""

import pytest
import numpy as np


class TestEncodedImage:
    """测试编码图像结构"""

    @pytest.mark.unit
    def test_from_buffer_layout(self):
        """测试行优先、通道交错的缓冲区布局"""
        from promist import EncodedImage
        img = EncodedImage.from_buffer(list(range(12)), width=2, height=2)
        assert img.width == 2 and img.height == 2
        assert img.data[0, 1].tolist() == [3, 4, 5]
        assert img.data[1, 0].tolist() == [6, 7, 8]
        assert img.data.dtype == np.uint8

    @pytest.mark.unit
    def test_from_buffer_length_mismatch(self):
        """测试缓冲区长度与尺寸不符"""
        from promist import EncodedImage, ImageStructureError
        with pytest.raises(ImageStructureError, match="不符"):
            EncodedImage.from_buffer([0] * 11, width=2, height=2)

    @pytest.mark.unit
    def test_sample_out_of_range(self):
        """测试采样超出位深范围"""
        from promist import EncodedImage, ImageStructureError
        with pytest.raises(ImageStructureError, match="超出"):
            EncodedImage(np.full((2, 2, 3), 256), 8)

    @pytest.mark.unit
    def test_unsupported_bit_depth(self):
        """测试不支持的位深"""
        from promist import EncodedImage, ImageStructureError
        with pytest.raises(ImageStructureError, match="位深"):
            EncodedImage(np.zeros((2, 2, 3), dtype=np.uint16), 12)

    @pytest.mark.unit
    def test_float_samples_rejected(self):
        """测试浮点采样被拒绝"""
        from promist import EncodedImage, ImageStructureError
        with pytest.raises(ImageStructureError):
            EncodedImage(np.zeros((2, 2, 3)), 8)

    @pytest.mark.unit
    def test_wrong_shape(self):
        """测试非三通道数据"""
        from promist import EncodedImage, ImageStructureError
        with pytest.raises(ImageStructureError, match="形状"):
            EncodedImage(np.zeros((4, 4), dtype=np.uint8), 8)

    @pytest.mark.unit
    def test_errors_are_value_errors(self):
        """结构错误同时是 ValueError"""
        from promist import ImageStructureError
        assert issubclass(ImageStructureError, ValueError)


class TestLinearImage:
    """测试线性图像约束"""

    @pytest.mark.unit
    def test_negative_rejected(self):
        """测试负值"""
        from promist import LinearImage, ImageStructureError
        data = np.zeros((2, 2, 3))
        data[0, 0, 0] = -0.1
        with pytest.raises(ImageStructureError, match="负值"):
            LinearImage(data)

    @pytest.mark.unit
    def test_non_finite_rejected(self):
        """测试 NaN"""
        from promist import LinearImage, ImageStructureError
        data = np.zeros((2, 2, 3))
        data[1, 1, 2] = np.nan
        with pytest.raises(ImageStructureError, match="非有限"):
            LinearImage(data)

    @pytest.mark.unit
    def test_headroom_allowed(self):
        """测试允许超过 1.0 的高光"""
        from promist import LinearImage
        img = LinearImage(np.full((2, 2, 3), 100.0))
        assert img.total_energy() == pytest.approx(1200.0)


class TestTransfer:
    """测试 sRGB 传递函数"""

    @pytest.mark.unit
    def test_round_trip_8bit(self):
        """测试 8 位全部码值往返一致"""
        from promist import EncodedImage, decode_srgb, encode_srgb
        codes = np.arange(256).reshape(1, 256, 1).repeat(3, axis=2)
        img = EncodedImage(codes, 8)
        back = encode_srgb(decode_srgb(img), 8)
        assert np.array_equal(back.data, img.data)

    @pytest.mark.unit
    def test_round_trip_16bit(self):
        """测试 16 位码值往返一致"""
        from promist import EncodedImage, decode_srgb, encode_srgb
        codes = np.arange(0, 65536, 7).reshape(1, -1, 1).repeat(3, axis=2)
        img = EncodedImage(codes, 16)
        back = encode_srgb(decode_srgb(img), 16)
        assert back.bit_depth == 16
        assert np.array_equal(back.data, img.data)

    @pytest.mark.unit
    def test_known_values(self):
        """测试端点与线性段"""
        from promist import EncodedImage, decode_srgb
        img = EncodedImage(np.array([[[0, 10, 255]]]), 8)
        linear = decode_srgb(img).data[0, 0]
        assert linear[0] == 0.0
        assert linear[1] == pytest.approx(10 / 255 / 12.92)
        assert linear[2] == pytest.approx(1.0)

    @pytest.mark.unit
    def test_mid_gray(self):
        """测试码值 128 约为 0.2159"""
        from promist import EncodedImage, decode_srgb
        img = EncodedImage(np.full((1, 1, 3), 128), 8)
        assert decode_srgb(img).data[0, 0, 0] == pytest.approx(0.21586, abs=1e-4)

    @pytest.mark.unit
    def test_pure_gamma_option(self):
        """测试纯 2.2 幂律"""
        from promist import EncodedImage, decode_srgb
        img = EncodedImage(np.full((1, 1, 3), 128), 8)
        assert decode_srgb(img, "gamma").data[0, 0, 0] == pytest.approx((128 / 255) ** 2.2)

    @pytest.mark.unit
    def test_unknown_transfer(self):
        """测试未知传递函数"""
        from promist import EncodedImage, ParameterError, decode_srgb
        img = EncodedImage(np.zeros((1, 1, 3), dtype=np.uint8), 8)
        with pytest.raises(ParameterError, match="传递函数"):
            decode_srgb(img, "pq")

    @pytest.mark.unit
    def test_encode_clips_headroom(self):
        """测试编码时裁剪超出 [0, 1] 的值"""
        from promist import LinearImage, encode_srgb
        img = LinearImage(np.array([[[0.0, 1.0, 7.5]]]))
        assert encode_srgb(img, 8).data[0, 0].tolist() == [0, 255, 255]
        assert encode_srgb(img, 16).data[0, 0].tolist() == [0, 65535, 65535]


class TestToneMap:
    """测试色调映射"""

    @pytest.mark.unit
    def test_clamp(self):
        """测试截断"""
        from promist import LinearImage, tone_map
        out = tone_map(LinearImage(np.array([[[0.25, 1.0, 3.0]]])), "clamp")
        assert out.data[0, 0].tolist() == [0.25, 1.0, 1.0]

    @pytest.mark.unit
    def test_reinhard(self):
        """测试 x / (1 + x)"""
        from promist import LinearImage, tone_map
        out = tone_map(LinearImage(np.array([[[0.0, 1.0, 3.0]]])), "reinhard")
        assert out.data[0, 0].tolist() == pytest.approx([0.0, 0.5, 0.75])

    @pytest.mark.unit
    def test_unknown_operator(self):
        """测试未知算子"""
        from promist import LinearImage, ParameterError, tone_map
        with pytest.raises(ParameterError, match="色调映射"):
            tone_map(LinearImage(np.zeros((1, 1, 3))), "aces")


class TestImageFiles:
    """测试图像文件读写"""

    @pytest.mark.integration
    def test_png_8bit(self, tmp_path, random_image):
        """测试 8 位 PNG 写出后读回一致"""
        from promist import read_image, write_png
        path = write_png(random_image, tmp_path / "sub" / "a.png")
        back = read_image(path)
        assert back.bit_depth == 8
        assert np.array_equal(back.data, random_image.data)

    @pytest.mark.integration
    def test_png_16bit(self, tmp_path, make_png):
        """测试 16 位 PNG 保留位深"""
        from promist import read_image
        img = make_png(tmp_path / "deep.png", width=9, height=5, bit_depth=16)
        back = read_image(tmp_path / "deep.png")
        assert back.bit_depth == 16
        assert np.array_equal(back.data, img.data)

    @pytest.mark.integration
    def test_grayscale_expanded(self, tmp_path):
        """测试灰度图扩展为 RGB"""
        import cv2
        from promist import read_image
        gray = np.arange(20, dtype=np.uint8).reshape(4, 5)
        ok, buf = cv2.imencode(".png", gray)
        assert ok
        buf.tofile(str(tmp_path / "gray.png"))

        img = read_image(tmp_path / "gray.png")
        assert img.data.shape == (4, 5, 3)
        assert np.array_equal(img.data[..., 0], gray)
        assert np.array_equal(img.data[..., 2], gray)

    @pytest.mark.integration
    def test_missing_file(self, tmp_path):
        """测试文件不存在"""
        from promist import ImageReadError, read_image
        with pytest.raises(ImageReadError, match="文件不存在"):
            read_image(tmp_path / "nope.png")

    @pytest.mark.integration
    def test_undecodable_file(self, tmp_path):
        """测试无法解码的文件"""
        from promist import ImageReadError, read_image
        path = tmp_path / "broken.png"
        path.write_bytes(b"definitely not a png")
        with pytest.raises(ImageReadError, match="无法解码") as exc_info:
            read_image(path)
        assert isinstance(exc_info.value, OSError)
        assert exc_info.value.path == str(path)
