"""Machine-checkable proof that F_n + F_m = 2^a1 + ... + 2^a5 has exactly 38 solutions."""

__version__ = "0.1.0"
