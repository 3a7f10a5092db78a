"""T-KRR - Tensor-Kernel Ridge Regression with deterministic Fourier features"""
