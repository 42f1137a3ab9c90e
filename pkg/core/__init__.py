"""
核心演算法套件
"""
