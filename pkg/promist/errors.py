#!/usr/bin/env python3
"""
异常定义
所有模块共用的错误类型，CLI 根据类型映射退出码
"""


class PromistError(Exception):
    """Pro-Mist 工具集基础错误"""
    pass


class ParameterError(PromistError, ValueError):
    """参数错误（滤镜参数、命令行参数、配置文件）"""
    pass


class ImageStructureError(PromistError, ValueError):
    """图像结构错误（尺寸、长度、取值范围不符合要求）"""
    pass


class ImageReadError(PromistError, OSError):
    """图像读取错误"""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"图像读取失败: {path}\n原因: {reason}")

    def __reduce__(self):
        return (type(self), (self.path, self.reason))


class EmptyCorpusError(PromistError):
    """语料目录中没有可用图像"""

    def __init__(self, directory: str):
        self.directory = directory
        super().__init__(f"目录中没有支持的图像文件: {directory}")

    def __reduce__(self):
        return (type(self), (self.directory,))


class DatasetIOError(PromistError, OSError):
    """数据集输出目录无法写入"""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"输出目录写入失败: {path}\n原因: {reason}")

    def __reduce__(self):
        return (type(self), (self.path, self.reason))
