import numpy as np

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


class BitVector:
    """Immutable bit array with constant-time rank.

    Bits are packed least-significant-bit first within each byte.
    """

    def __init__(self, bits):
        bits = np.asarray(bits, dtype=bool)
        self.size = len(bits)
        self.data = np.packbits(bits, bitorder="little")
        self._build_rank()

    @classmethod
    def from_bytes(cls, raw: bytes, size: int) -> "BitVector":
        if len(raw) != (size + 7) // 8:
            raise ValueError("byte length does not match bit count")
        self = cls.__new__(cls)
        self.size = size
        self.data = np.frombuffer(raw, dtype=np.uint8).copy()
        self._build_rank()
        return self

    def _build_rank(self):
        # rank_index[b] = ones in bytes [0, b)
        self.rank_index = np.zeros(len(self.data) + 1, dtype=np.int64)
        np.cumsum(_POPCOUNT[self.data], out=self.rank_index[1:])

    def __len__(self):
        return self.size

    def __getitem__(self, i: int) -> bool:
        if not 0 <= i < self.size:
            raise IndexError(i)
        return bool((self.data[i >> 3] >> (i & 7)) & 1)

    def rank1(self, i: int) -> int:
        """Number of set bits in positions ``[0, i)``."""
        if not 0 <= i <= self.size:
            raise IndexError(i)
        byte, off = divmod(i, 8)
        partial = 0
        if off:
            partial = int(_POPCOUNT[self.data[byte] & ((1 << off) - 1)])
        return int(self.rank_index[byte]) + partial

    def count(self) -> int:
        return self.rank1(self.size)

    def ones(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Positions of set bits in ``[start, stop)``."""
        stop = self.size if stop is None else stop
        bits = np.unpackbits(self.data, bitorder="little", count=self.size)
        return np.flatnonzero(bits[start:stop]) + start

    def to_bytes(self) -> bytes:
        return self.data.tobytes()
