"""Domain-length classes: C_0 = {1}, C_n = [2^(n-1)+1, 2^n] for n >= 1.

The partition drives the whole coalescence hierarchy: merging two
class-n domains always lands strictly above class n, which is what
makes the epoch-by-epoch picture consistent.
"""


def class_of(d: int) -> int:
    """Class index of a domain of length d (d >= 1)."""
    if d <= 0:
        raise ValueError(f"domain length must be positive, got {d}")
    if d == 1:
        return 0
    # unique n with 2^(n-1) + 1 <= d <= 2^n
    return (d - 1).bit_length()


def class_range(n: int) -> tuple[int, int]:
    """Inclusive (lo, hi) of C_n."""
    if n < 0:
        raise ValueError(f"class index must be >= 0, got {n}")
    if n == 0:
        return (1, 1)
    return (2 ** (n - 1) + 1, 2 ** n)
