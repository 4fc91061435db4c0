"""
自检测试
"""

import pytest


class TestSelftest:
    """测试自检"""

    @pytest.mark.unit
    def test_all_checks_pass(self):
        """测试全部自检项通过"""
        from promist import run_selftest
        results = run_selftest()
        assert len(results) == 5
        failed = [r for r in results if not r.passed]
        assert not failed, failed

    @pytest.mark.unit
    def test_exception_reported_as_failure(self, mocker):
        """测试自检项抛出异常时记为失败"""
        from promist import selftest

        def boom():
            raise RuntimeError("kaboom")

        mocker.patch.object(selftest, "CHECKS", [("爆炸", boom)])
        results = selftest.run_selftest()
        assert len(results) == 1
        assert not results[0].passed
        assert "kaboom" in results[0].detail
