"""
promist 测试模块
"""
