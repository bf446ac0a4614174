"""
GF(2) linear algebra on bit-packed machine words.

- BitVector / BitMatrix: immutable values stored as little-endian uint64 words
- random_vector, dot, rank, solve: the primitives every encoder and decoder shares
- Eliminator: incremental reduced row-echelon workspace for decoders and feedback
  trackers that receive equations one slot at a time
- strip_known: substitute bits a receiver already holds (its cache)

Bit j of a row lives in word j // 64 at position j % 64.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

WORD_BITS = 64

_ONE = np.uint64(1)
_ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)
_FOLDS = tuple(np.uint64(s) for s in (32, 16, 8, 4, 2, 1))


def n_words(nbits: int) -> int:
    """Number of 64-bit words needed for nbits."""
    return (nbits + WORD_BITS - 1) // WORD_BITS


def tail_mask(nbits: int) -> np.uint64:
    """Mask of the bits in use in the last word of an nbits-long row."""
    rem = nbits % WORD_BITS
    if rem == 0:
        return _ALL_ONES
    return np.uint64((1 << rem) - 1)


def pack_bits(bits) -> np.ndarray:
    """Pack a 0/1 array of shape (..., n) into uint64 words of shape (..., n_words(n))."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    lead = bits.shape[:-1]
    if n == 0:
        return np.zeros(lead + (0,), dtype=np.uint64)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    pad = n_words(n) * 8 - packed.shape[-1]
    if pad:
        packed = np.concatenate([packed, np.zeros(lead + (pad,), dtype=np.uint8)], axis=-1)
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def unpack_bits(words, nbits: int) -> np.ndarray:
    """Inverse of pack_bits: uint64 words (..., w) to a 0/1 uint8 array (..., nbits)."""
    words = np.ascontiguousarray(words, dtype="<u8")
    lead = words.shape[:-1]
    if nbits == 0:
        return np.zeros(lead + (0,), dtype=np.uint8)
    return np.unpackbits(words.view(np.uint8), axis=-1, count=nbits, bitorder="little")


def word_parity(words) -> np.ndarray:
    """Parity of every uint64 word, as uint8."""
    x = np.array(words, dtype=np.uint64, copy=True)
    for shift in _FOLDS:
        x ^= x >> shift
    return (x & _ONE).astype(np.uint8)


def row_parity(words: np.ndarray) -> np.ndarray:
    """Parity of each row of a (rows, w) word array."""
    if words.shape[-1] == 0:
        return np.zeros(words.shape[:-1], dtype=np.uint8)
    return word_parity(np.bitwise_xor.reduce(words, axis=-1))


def random_words(rows: int, nbits: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random (rows, n_words(nbits)) words; every bit is Ber(1/2), tail bits cleared."""
    w = n_words(nbits)
    data = rng.integers(0, _ALL_ONES, size=(rows, w), dtype=np.uint64, endpoint=True)
    if w:
        data[:, -1] &= tail_mask(nbits)
    return data


def set_bit(words: np.ndarray, j: int) -> None:
    """Set bit j of a 1-D word array in place."""
    words[j // WORD_BITS] |= _ONE << np.uint64(j % WORD_BITS)


def index_mask(nbits: int, indices) -> np.ndarray:
    """Word mask with the given bit positions set."""
    bits = np.zeros(nbits, dtype=np.uint8)
    bits[np.asarray(indices, dtype=np.int64)] = 1
    return pack_bits(bits)


class BitVector:
    """Immutable packed bit vector."""

    __slots__ = ("_nbits", "_words")

    def __init__(self, nbits: int, words: Optional[np.ndarray] = None):
        if nbits < 0:
            raise ValueError(f"BitVector length must be >= 0, got {nbits}")
        w = n_words(nbits)
        if words is None:
            data = np.zeros(w, dtype=np.uint64)
        else:
            data = np.array(words, dtype=np.uint64, copy=True).reshape(-1)
            if data.shape != (w,):
                raise ValueError(f"expected {w} words for {nbits} bits, got {data.shape[0]}")
            if w:
                data[-1] &= tail_mask(nbits)
        data.flags.writeable = False
        self._nbits = nbits
        self._words = data

    @classmethod
    def from_bits(cls, bits) -> "BitVector":
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        return cls(bits.shape[0], pack_bits(bits))

    @classmethod
    def from_string(cls, text: str) -> "BitVector":
        """BitVector.from_string('1011'): first character is bit 0."""
        return cls.from_bits([int(ch) for ch in text])

    @classmethod
    def zeros(cls, nbits: int) -> "BitVector":
        return cls(nbits)

    @classmethod
    def unit(cls, nbits: int, j: int) -> "BitVector":
        if not 0 <= j < nbits:
            raise IndexError(f"unit index {j} outside length {nbits}")
        words = np.zeros(n_words(nbits), dtype=np.uint64)
        set_bit(words, j)
        return cls(nbits, words)

    @property
    def words(self) -> np.ndarray:
        return self._words

    def __len__(self) -> int:
        return self._nbits

    def __getitem__(self, j: int) -> int:
        if j < 0:
            j += self._nbits
        if not 0 <= j < self._nbits:
            raise IndexError(f"bit {j} outside length {self._nbits}")
        return int((self._words[j // WORD_BITS] >> np.uint64(j % WORD_BITS)) & _ONE)

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self._words, self._nbits)

    def count(self) -> int:
        """Number of ones."""
        return int(self.to_bits().sum())

    def select(self, indices) -> "BitVector":
        """Bits at the given positions, in order."""
        return BitVector.from_bits(self.to_bits()[np.asarray(indices, dtype=np.int64)])

    def __xor__(self, other: "BitVector") -> "BitVector":
        if len(other) != self._nbits:
            raise ValueError(f"length mismatch: {self._nbits} vs {len(other)}")
        return BitVector(self._nbits, self._words ^ other.words)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._nbits == other._nbits and bool(np.array_equal(self._words, other._words))

    def __hash__(self) -> int:
        return hash((self._nbits, self._words.tobytes()))

    def __repr__(self) -> str:
        if self._nbits <= 64:
            return f"BitVector('{''.join(map(str, self.to_bits()))}')"
        return f"BitVector(len={self._nbits}, ones={self.count()})"


class BitMatrix:
    """Immutable row-major packed bit matrix."""

    __slots__ = ("_rows", "_cols", "_data")

    def __init__(self, rows: int, cols: int, data: Optional[np.ndarray] = None):
        if rows < 0 or cols < 0:
            raise ValueError(f"matrix shape must be nonnegative, got {rows}x{cols}")
        w = n_words(cols)
        if data is None:
            arr = np.zeros((rows, w), dtype=np.uint64)
        else:
            arr = np.array(data, dtype=np.uint64, copy=True).reshape(rows, w)
            if w:
                arr[:, -1] &= tail_mask(cols)
        arr.flags.writeable = False
        self._rows = rows
        self._cols = cols
        self._data = arr

    @classmethod
    def from_bits(cls, bits) -> "BitMatrix":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2:
            raise ValueError("from_bits expects a 2-D 0/1 array")
        return cls(bits.shape[0], bits.shape[1], pack_bits(bits))

    @classmethod
    def from_rows(cls, rows: Iterable[BitVector], cols: int) -> "BitMatrix":
        vectors = list(rows)
        for v in vectors:
            if len(v) != cols:
                raise ValueError(f"row length {len(v)} does not match {cols} columns")
        if not vectors:
            return cls(0, cols)
        return cls(len(vectors), cols, np.stack([v.words for v in vectors]))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_bits(np.eye(n, dtype=np.uint8))

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls(rows, cols, random_words(rows, cols, rng))

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self):
        return (self._rows, self._cols)

    @property
    def data(self) -> np.ndarray:
        return self._data

    def row(self, i: int) -> BitVector:
        return BitVector(self._cols, self._data[i])

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self._data, self._cols)

    def take_rows(self, indices) -> "BitMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return BitMatrix(idx.shape[0], self._cols, self._data[idx])

    def take_columns(self, indices) -> "BitMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        return BitMatrix.from_bits(self.to_bits()[:, idx].reshape(self._rows, idx.shape[0]))

    def append_row(self, v: BitVector) -> "BitMatrix":
        if len(v) != self._cols:
            raise ValueError(f"row length {len(v)} does not match {self._cols} columns")
        return BitMatrix(self._rows + 1, self._cols, np.vstack([self._data, v.words[None, :]]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    def __repr__(self) -> str:
        return f"BitMatrix({self._rows}x{self._cols})"


@dataclass(frozen=True)
class LinearSystem:
    """coefficients . x = rhs over GF(2)."""

    coefficients: BitMatrix
    rhs: BitVector

    def __post_init__(self):
        if self.coefficients.rows != len(self.rhs):
            raise ValueError(
                f"{self.coefficients.rows} equations but {len(self.rhs)} right-hand-side bits"
            )


@dataclass(frozen=True)
class Underdetermined:
    """Consistent system whose rank is below the number of unknowns."""

    rank: int
    unknowns: int


@dataclass(frozen=True)
class Inconsistent:
    """The augmented matrix has higher rank than the coefficient matrix."""

    rank: int
    augmented_rank: int


SolveResult = Union[BitVector, Underdetermined, Inconsistent]


def random_vector(length: int, rng: np.random.Generator) -> BitVector:
    """Vector of i.i.d. Ber(1/2) bits."""
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    return BitVector(length, random_words(1, length, rng)[0])


def dot(coeffs: BitVector, msg: BitVector) -> int:
    """Inner product over GF(2)."""
    if len(coeffs) != len(msg):
        raise ValueError(f"length mismatch: {len(coeffs)} vs {len(msg)}")
    if not len(msg):
        return 0
    return int(word_parity(np.bitwise_xor.reduce(coeffs.words & msg.words)))


def dot_rows(m: BitMatrix, x: BitVector) -> BitVector:
    """m . x, one output bit per row."""
    if m.cols != len(x):
        raise ValueError(f"matrix has {m.cols} columns, vector has {len(x)} bits")
    return BitVector.from_bits(row_parity(m.data & x.words))


def _forward_eliminate(data: np.ndarray, ncols: int, rhs: Optional[np.ndarray] = None) -> List[int]:
    """In-place forward elimination; pivot is the lowest-index row holding the column bit."""
    nrows = data.shape[0]
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        w = c // WORD_BITS
        hits = np.flatnonzero((data[r:, w] >> np.uint64(c % WORD_BITS)) & _ONE)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            data[[r, p]] = data[[p, r]]
            if rhs is not None:
                rhs[[r, p]] = rhs[[p, r]]
        below = r + hits[1:]
        if below.size:
            data[below, w:] ^= data[r, w:]
            if rhs is not None:
                rhs[below] ^= rhs[r]
        pivots.append(c)
        r += 1
    return pivots


def rank(m: BitMatrix) -> int:
    """Row rank over GF(2)."""
    return len(_forward_eliminate(m.data.copy(), m.cols))


def solve(system: LinearSystem) -> SolveResult:
    """Solve by forward elimination then back-substitution."""
    a = system.coefficients
    data = a.data.copy()
    rhs = system.rhs.to_bits().copy()
    pivots = _forward_eliminate(data, a.cols, rhs)
    r = len(pivots)
    if np.any(rhs[r:]):
        return Inconsistent(rank=r, augmented_rank=r + 1)
    if r < a.cols:
        return Underdetermined(rank=r, unknowns=a.cols)
    x = np.zeros(n_words(a.cols), dtype=np.uint64)
    for i in range(r - 1, -1, -1):
        acc = np.bitwise_xor.reduce(data[i] & x) if x.size else np.uint64(0)
        if int(rhs[i]) ^ int(word_parity(acc)):
            set_bit(x, pivots[i])
    return BitVector(a.cols, x)


def strip_known(
    rows: np.ndarray, rhs: np.ndarray, known_mask: np.ndarray, known_values: np.ndarray
):
    """Substitute known bits into equations.

    Returns (rows without the known columns, rhs with their contribution removed).
    known_values only matters where known_mask is set.
    """
    rows = np.asarray(rows, dtype=np.uint64)
    contribution = row_parity(rows & (known_mask & known_values))
    return rows & ~known_mask, (np.asarray(rhs, dtype=np.uint8) ^ contribution)


class Eliminator:
    """Incremental elimination kept in reduced row-echelon form.

    Every pivot column is a unit column across the stored rows, so a new row is
    reduced with one vectorized XOR. Single owner, no locking.
    """

    def __init__(self, ncols: int, capacity: int = 64):
        if ncols < 0:
            raise ValueError(f"ncols must be >= 0, got {ncols}")
        self.ncols = ncols
        self._w = n_words(ncols)
        cap = max(1, min(capacity, ncols) if ncols else 1)
        self._rows = np.zeros((cap, self._w), dtype=np.uint64)
        self._rhs = np.zeros(cap, dtype=np.uint8)
        self._piv = np.zeros(cap, dtype=np.int64)
        self._rank = 0
        self.offered = 0
        self.inconsistent = 0

    @property
    def rank(self) -> int:
        return self._rank

    @property
    def is_full_rank(self) -> bool:
        return self._rank == self.ncols

    def _grow(self) -> None:
        cap = min(max(2 * self._rows.shape[0], 1), max(self.ncols, 1))
        rows = np.zeros((cap, self._w), dtype=np.uint64)
        rows[: self._rank] = self._rows[: self._rank]
        rhs = np.zeros(cap, dtype=np.uint8)
        rhs[: self._rank] = self._rhs[: self._rank]
        piv = np.zeros(cap, dtype=np.int64)
        piv[: self._rank] = self._piv[: self._rank]
        self._rows, self._rhs, self._piv = rows, rhs, piv

    def add(self, row: np.ndarray, rhs: int = 0) -> bool:
        """Insert one equation given as packed words; True if it raised the rank."""
        self.offered += 1
        v = np.array(row, dtype=np.uint64, copy=True).reshape(self._w)
        b = int(rhs) & 1
        r = self._rank
        if r:
            piv = self._piv[:r]
            on = (v[piv >> 6] >> (piv & 63).astype(np.uint64)) & _ONE
            sel = np.flatnonzero(on)
            if sel.size:
                v ^= np.bitwise_xor.reduce(self._rows[sel], axis=0)
                b ^= int(np.bitwise_xor.reduce(self._rhs[sel]))
        nz = np.flatnonzero(v)
        if nz.size == 0:
            if b:
                self.inconsistent += 1
            return False
        w = int(nz[0])
        word = int(v[w])
        bit = (word & -word).bit_length() - 1
        if r:
            hit = np.flatnonzero((self._rows[:r, w] >> np.uint64(bit)) & _ONE)
            if hit.size:
                self._rows[hit] ^= v
                self._rhs[hit] ^= np.uint8(b)
        if r == self._rows.shape[0]:
            self._grow()
        self._rows[r] = v
        self._rhs[r] = b
        self._piv[r] = w * WORD_BITS + bit
        self._rank = r + 1
        return True

    def add_vector(self, v: BitVector, rhs: int = 0) -> bool:
        if len(v) != self.ncols:
            raise ValueError(f"row length {len(v)} does not match {self.ncols} columns")
        return self.add(v.words, rhs)

    def add_rows(self, rows: np.ndarray, rhs) -> int:
        """Insert a block of equations; returns how many raised the rank."""
        gained = 0
        rhs = np.asarray(rhs, dtype=np.uint8)
        for i in range(rows.shape[0]):
            if self._rank == self.ncols and not self.inconsistent:
                self.offered += rows.shape[0] - i
                break
            gained += self.add(rows[i], int(rhs[i]))
        return gained

    def solution(self) -> SolveResult:
        """Unique solution once full rank, otherwise the matching result variant."""
        if self.inconsistent:
            return Inconsistent(rank=self._rank, augmented_rank=self._rank + 1)
        if self._rank < self.ncols:
            return Underdetermined(rank=self._rank, unknowns=self.ncols)
        bits = np.zeros(self.ncols, dtype=np.uint8)
        bits[self._piv[: self._rank]] = self._rhs[: self._rank]
        return BitVector.from_bits(bits)

    def solve_for(self, columns) -> Optional[np.ndarray]:
        """Values of the requested unknowns if the equations pin them down, else None.

        A column is determined when it is a pivot and its row touches no free column.
        """
        cols = np.asarray(columns, dtype=np.int64)
        if self.inconsistent:
            return None
        if cols.size == 0:
            return np.zeros(0, dtype=np.uint8)
        r = self._rank
        where = np.full(self.ncols, -1, dtype=np.int64)
        where[self._piv[:r]] = np.arange(r)
        idx = where[cols]
        if np.any(idx < 0):
            return None
        pivot_bits = np.zeros(self.ncols, dtype=np.uint8)
        pivot_bits[self._piv[:r]] = 1
        free = pack_bits(1 - pivot_bits)
        if np.any(self._rows[idx] & free):
            return None
        return self._rhs[idx].copy()
