"""Polar code definition, Bhattacharyya construction and the F^{(x)m} transform.

Indices exposed through the public interface (file format, ``frozen_indices``)
are 1-based; arrays are stored 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class PolarCodeError(ValueError):
    """Invalid polar code parameters or malformed frozen-set description."""


def _log2_exact(n: int) -> int:
    if n < 1 or (n & (n - 1)) != 0:
        raise PolarCodeError(f"length must be a power of two, got {n}")
    return n.bit_length() - 1


@dataclass(frozen=True, eq=False)
class PolarCodeSpec:
    """Static (n, k) polar code: length, dimension and frozen positions.

    ``frozen_mask[i]`` is True when source bit ``u_{i+1}`` is frozen to 0.
    """

    n: int
    k: int
    frozen_mask: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = _log2_exact(self.n)
        mask = np.asarray(self.frozen_mask, dtype=bool).copy()
        if mask.shape != (self.n,):
            raise PolarCodeError(f"frozen mask must have length {self.n}")
        if not 1 <= self.k <= self.n:
            raise PolarCodeError(f"k must be in [1, {self.n}], got {self.k}")
        if int(mask.sum()) != self.n - self.k:
            raise PolarCodeError(
                f"frozen mask marks {int(mask.sum())} positions, expected {self.n - self.k}"
            )
        mask.flags.writeable = False
        object.__setattr__(self, "frozen_mask", mask)
        object.__setattr__(self, "m", m)
        info = np.flatnonzero(~mask)
        info.flags.writeable = False
        object.__setattr__(self, "info_positions", info)

    m: int = field(init=False)
    info_positions: np.ndarray = field(init=False, repr=False)

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def frozen_indices(self) -> list[int]:
        """Ascending 1-based frozen positions."""
        return [int(i) + 1 for i in np.flatnonzero(self.frozen_mask)]

    @classmethod
    def from_frozen_indices(cls, n: int, frozen: Iterable[int]) -> "PolarCodeSpec":
        frozen = list(frozen)
        mask = np.zeros(n, dtype=bool)
        for idx in frozen:
            if not 1 <= idx <= n:
                raise PolarCodeError(f"frozen index {idx} out of range 1..{n}")
            if mask[idx - 1]:
                raise PolarCodeError(f"duplicate frozen index {idx}")
            mask[idx - 1] = True
        return cls(n=n, k=n - len(frozen), frozen_mask=mask)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolarCodeSpec):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and bool(np.array_equal(self.frozen_mask, other.frozen_mask))
        )

    def __hash__(self) -> int:
        return hash((self.n, self.k, self.frozen_mask.tobytes()))


def bhattacharyya_parameters(n: int, design_param: float = 0.5) -> np.ndarray:
    """Bhattacharyya value of every bit-channel of the natural-order transform.

    At each level a channel with parameter ``z`` splits into ``2z - z**2``
    (upper, degraded) and ``z**2`` (lower, upgraded); the most significant
    index bit is split first, which matches ``x = u F^{(x)m}``.
    """
    m = _log2_exact(n)
    if not 0.0 < design_param < 1.0:
        raise PolarCodeError(f"design parameter must lie in (0, 1), got {design_param}")
    z = np.array([design_param], dtype=np.float64)
    for _ in range(m):
        nxt = np.empty(2 * z.size)
        nxt[0::2] = 2.0 * z - z * z
        nxt[1::2] = z * z
        z = nxt
    return z


def construct_frozen_set(n: int, k: int, design_param: float = 0.5) -> PolarCodeSpec:
    """Freeze the ``n - k`` positions with the largest Bhattacharyya values.

    Ties are resolved by freezing the lower index first.
    """
    z = bhattacharyya_parameters(n, design_param)
    if not 1 <= k <= n:
        raise PolarCodeError(f"k must be in [1, {n}], got {k}")
    # stable sort on (-z, index): largest z first, lower index first among equals
    order = np.lexsort((np.arange(n), -z))
    mask = np.zeros(n, dtype=bool)
    mask[order[: n - k]] = True
    return PolarCodeSpec(n=n, k=k, frozen_mask=mask)


def as_bits(v: Sequence[int] | np.ndarray) -> np.ndarray:
    """Validate and convert to a uint8 0/1 array."""
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise PolarCodeError("bit vector must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise PolarCodeError("bit vector entries must be 0 or 1")
    return arr.astype(np.uint8)


def polar_transform(v: Sequence[int] | np.ndarray) -> np.ndarray:
    """Return ``v F^{(x)s}`` over GF(2) via the butterfly network.

    The transform is its own inverse, so it maps source words to codewords
    and codewords back to source words.
    """
    x = as_bits(v).copy()
    n = x.size
    _log2_exact(n)
    d = 1
    while d < n:
        # rows grouped as (block, half, offset); upper half absorbs lower half
        blocks = x.reshape(-1, 2, d)
        blocks[:, 0, :] ^= blocks[:, 1, :]
        d *= 2
    return x


def kronecker_generator(n: int) -> np.ndarray:
    """Explicit ``F^{(x)m}`` as a dense 0/1 matrix (reference use only)."""
    m = _log2_exact(n)
    f = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    g = np.ones((1, 1), dtype=np.uint8)
    for _ in range(m):
        g = np.kron(g, f)
    return g


def encode(spec: PolarCodeSpec, info_bits: Sequence[int] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Place ``info_bits`` on the unfrozen positions and encode.

    Returns
    -------
    u, x : ndarray
        Source word and codeword, both of length ``n``.
    """
    info = as_bits(info_bits)
    if info.size != spec.k:
        raise PolarCodeError(f"expected {spec.k} information bits, got {info.size}")
    u = np.zeros(spec.n, dtype=np.uint8)
    u[spec.info_positions] = info
    return u, polar_transform(u)


def save_frozen_set(spec: PolarCodeSpec) -> str:
    frozen = ",".join(str(i) for i in spec.frozen_indices)
    return f"n={spec.n}\nk={spec.k}\nfrozen={frozen}\n"


def load_frozen_set(text: str) -> PolarCodeSpec:
    """Parse the ``n=/k=/frozen=`` text format (``#`` lines are comments)."""
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in ("n", "k", "frozen"):
            raise PolarCodeError(f"malformed frozen-set line: {raw!r}")
        if key in fields:
            raise PolarCodeError(f"duplicate key {key!r}")
        fields[key] = value.strip()
    if "n" not in fields or "frozen" not in fields:
        raise PolarCodeError("frozen-set file needs 'n' and 'frozen' entries")
    try:
        n = int(fields["n"])
        frozen = [int(tok) for tok in fields["frozen"].split(",") if tok.strip()]
        k = int(fields["k"]) if "k" in fields else None
    except ValueError as exc:
        raise PolarCodeError(f"non-integer value in frozen-set file: {exc}") from None
    if frozen != sorted(frozen):
        raise PolarCodeError("frozen indices must be listed in ascending order")
    spec = PolarCodeSpec.from_frozen_indices(n, frozen)
    if k is not None and k != spec.k:
        raise PolarCodeError(f"k={k} inconsistent with {len(frozen)} frozen indices for n={n}")
    return spec
