"""
Tests for becsim.gf2 module.
"""

import itertools
import unittest

import numpy as np

from becsim.gf2 import (
    BitMatrix,
    BitVector,
    Eliminator,
    Inconsistent,
    LinearSystem,
    Underdetermined,
    dot,
    dot_rows,
    index_mask,
    pack_bits,
    random_vector,
    rank,
    row_parity,
    solve,
    strip_known,
    unpack_bits,
    word_parity,
)


def span_rank(bits: np.ndarray) -> int:
    """Rank as log2 of the number of distinct vectors in the row span."""
    rows = [int("".join(map(str, r[::-1])) or "0", 2) for r in bits]
    span = set()
    for choice in itertools.product((0, 1), repeat=len(rows)):
        acc = 0
        for take, r in zip(choice, rows):
            if take:
                acc ^= r
        span.add(acc)
    return len(span).bit_length() - 1


class TestBitVector(unittest.TestCase):
    """Test cases for packed vectors."""

    def test_from_string_indexing(self):
        """Test that character k is bit k."""
        v = BitVector.from_string("1011")
        self.assertEqual([v[j] for j in range(4)], [1, 0, 1, 1])
        self.assertEqual(v[-1], 1)
        self.assertEqual(v.count(), 3)

    def test_crosses_word_boundary(self):
        """Test vectors longer than one machine word."""
        bits = np.zeros(130, dtype=np.uint8)
        bits[[0, 63, 64, 129]] = 1
        v = BitVector.from_bits(bits)
        self.assertEqual(v.words.shape, (3,))
        self.assertEqual(v[63], 1)
        self.assertEqual(v[64], 1)
        self.assertEqual(v[65], 0)
        np.testing.assert_array_equal(v.to_bits(), bits)

    def test_xor_and_equality(self):
        """Test XOR is bitwise and equality compares bits and length."""
        a = BitVector.from_string("1100")
        b = BitVector.from_string("1010")
        self.assertEqual(a ^ b, BitVector.from_string("0110"))
        self.assertNotEqual(BitVector.zeros(3), BitVector.zeros(4))
        with self.assertRaises(ValueError):
            a ^ BitVector.zeros(5)

    def test_immutable(self):
        """Test the word buffer cannot be written."""
        v = BitVector.unit(10, 3)
        with self.assertRaises(ValueError):
            v.words[0] = 0

    def test_tail_bits_cleared(self):
        """Test words beyond the length are masked off."""
        v = BitVector(3, np.array([0xFF], dtype=np.uint64))
        self.assertEqual(v.count(), 3)

    def test_select(self):
        """Test picking bits by index keeps the given order."""
        v = BitVector.from_string("10110")
        self.assertEqual(v.select([4, 0, 2]), BitVector.from_string("011"))

    def test_unit_out_of_range(self):
        """Test unit vectors reject indices outside the length."""
        with self.assertRaises(IndexError):
            BitVector.unit(4, 4)


class TestPrimitives(unittest.TestCase):
    """Test cases for parity, dot products and packing."""

    def test_word_parity(self):
        """Test parity of single words."""
        words = np.array([0, 1, 3, 0xFFFFFFFFFFFFFFFF, 1 << 63], dtype=np.uint64)
        np.testing.assert_array_equal(word_parity(words), [0, 1, 0, 0, 1])

    def test_row_parity_empty_rows(self):
        """Test rows without columns have parity 0."""
        self.assertEqual(row_parity(np.zeros((3, 0), dtype=np.uint64)).tolist(), [0, 0, 0])

    def test_pack_unpack(self):
        """Test packing a 2-D block and unpacking it again."""
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, size=(5, 77), dtype=np.uint8)
        np.testing.assert_array_equal(unpack_bits(pack_bits(bits), 77), bits)

    def test_dot_matches_bit_arithmetic(self):
        """Test the packed dot product against a direct sum mod 2."""
        rng = np.random.default_rng(2)
        for n in (1, 63, 64, 65, 300):
            a, b = random_vector(n, rng), random_vector(n, rng)
            want = int((a.to_bits().astype(int) @ b.to_bits().astype(int)) % 2)
            self.assertEqual(dot(a, b), want)

    def test_dot_rows(self):
        """Test matrix-vector products row by row."""
        m = BitMatrix.from_bits([[1, 1, 0], [0, 1, 1], [1, 1, 1]])
        x = BitVector.from_string("101")
        self.assertEqual(dot_rows(m, x), BitVector.from_string("110"))

    def test_random_vector_is_balanced(self):
        """Test random bits are Ber(1/2)."""
        v = random_vector(100_000, np.random.default_rng(3))
        self.assertLess(abs(v.count() / 100_000 - 0.5), 3 * 0.5 / np.sqrt(100_000))

    def test_strip_known(self):
        """Test substituting known bits moves their contribution to the right-hand side."""
        rows = pack_bits(np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8))
        rhs = np.array([1, 0], dtype=np.uint8)
        known = index_mask(3, [1])
        values = pack_bits(np.array([0, 1, 0], dtype=np.uint8))
        stripped, new_rhs = strip_known(rows, rhs, known, values)
        np.testing.assert_array_equal(unpack_bits(stripped, 3), [[1, 0, 0], [0, 0, 1]])
        np.testing.assert_array_equal(new_rhs, [0, 1])


class TestRankAndSolve(unittest.TestCase):
    """Test cases for rank and solve against exhaustive oracles."""

    def test_rank_matches_span_oracle(self):
        """Test rank on 500 random small matrices against span enumeration."""
        rng = np.random.default_rng(10)
        for _ in range(500):
            rows = int(rng.integers(1, 9))
            cols = int(rng.integers(1, 12))
            bits = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
            self.assertEqual(rank(BitMatrix.from_bits(bits)), span_rank(bits))

    def test_full_rank_frequency(self):
        """Test a random 16x16 matrix is invertible with probability about 0.2887."""
        rng = np.random.default_rng(12)
        draws = 5000
        full = sum(rank(BitMatrix.random(16, 16, rng)) == 16 for _ in range(draws))
        self.assertAlmostEqual(full / draws, 0.2887, delta=0.02)

    def test_rank_invariant_under_row_operations(self):
        """Test row permutations and adding one row into another keep the rank."""
        rng = np.random.default_rng(13)
        for _ in range(200):
            rows = int(rng.integers(2, 12))
            cols = int(rng.integers(1, 12))
            bits = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
            expected = rank(BitMatrix.from_bits(bits))
            permuted = bits[rng.permutation(rows)]
            self.assertEqual(rank(BitMatrix.from_bits(permuted)), expected)
            i, j = rng.choice(rows, size=2, replace=False)
            added = bits.copy()
            added[i] ^= added[j]
            self.assertEqual(rank(BitMatrix.from_bits(added)), expected)

    def test_rank_identity_and_zero(self):
        """Test rank of trivial matrices."""
        self.assertEqual(rank(BitMatrix.identity(70)), 70)
        self.assertEqual(rank(BitMatrix(5, 9)), 0)

    def test_solve_round_trip(self):
        """Test exact recovery on 200 random full-rank systems up to 200 unknowns."""
        rng = np.random.default_rng(11)
        solved = 0
        while solved < 200:
            n = int(rng.integers(1, 201))
            a = BitMatrix.random(n, n, rng)
            if rank(a) < n:
                continue
            x = random_vector(n, rng)
            result = solve(LinearSystem(a, dot_rows(a, x)))
            self.assertEqual(result, x)
            solved += 1

    def test_solve_underdetermined(self):
        """Test a consistent system with too few equations."""
        a = BitMatrix.from_bits([[1, 1, 0], [0, 1, 1]])
        result = solve(LinearSystem(a, BitVector.from_string("10")))
        self.assertEqual(result, Underdetermined(rank=2, unknowns=3))

    def test_solve_inconsistent(self):
        """Test contradictory equations are reported, not solved."""
        a = BitMatrix.from_bits([[1, 1], [1, 1]])
        result = solve(LinearSystem(a, BitVector.from_string("01")))
        self.assertIsInstance(result, Inconsistent)

    def test_system_shape_checked(self):
        """Test rows and right-hand side must agree."""
        with self.assertRaises(ValueError):
            LinearSystem(BitMatrix.identity(3), BitVector.zeros(2))


class TestEliminator(unittest.TestCase):
    """Test cases for incremental elimination."""

    def test_incremental_solution_matches_solve(self):
        """Test feeding rows one at a time gives the batch solution."""
        rng = np.random.default_rng(20)
        n = 150
        x = random_vector(n, rng)
        elim = Eliminator(n)
        a = BitMatrix.random(n + 30, n, rng)
        rhs = dot_rows(a, x).to_bits()
        gained = elim.add_rows(a.data, rhs)
        self.assertEqual(gained, n)
        self.assertTrue(elim.is_full_rank)
        self.assertEqual(elim.solution(), x)

    def test_rank_tracks_batch_rank(self):
        """Test the running rank equals the rank of the rows so far."""
        rng = np.random.default_rng(21)
        bits = rng.integers(0, 2, size=(40, 25), dtype=np.uint8)
        bits[10] = bits[3] ^ bits[4]
        elim = Eliminator(25)
        for i in range(40):
            elim.add(pack_bits(bits[i]))
            self.assertEqual(elim.rank, rank(BitMatrix.from_bits(bits[: i + 1])))

    def test_dependent_row_does_not_raise_rank(self):
        """Test a repeated equation is absorbed."""
        elim = Eliminator(4)
        row = pack_bits(np.array([1, 0, 1, 0], dtype=np.uint8))
        self.assertTrue(elim.add(row, 1))
        self.assertFalse(elim.add(row, 1))
        self.assertEqual(elim.inconsistent, 0)
        self.assertFalse(elim.add(row, 0))
        self.assertEqual(elim.inconsistent, 1)
        self.assertIsInstance(elim.solution(), Inconsistent)

    def test_solve_for_partial(self):
        """Test unknowns pinned down before full rank are returned."""
        elim = Eliminator(4)
        elim.add_vector(BitVector.from_string("1000"), 1)
        elim.add_vector(BitVector.from_string("0110"), 0)
        np.testing.assert_array_equal(elim.solve_for([0]), [1])
        self.assertIsNone(elim.solve_for([1]))
        self.assertIsNone(elim.solve_for([3]))
        elim.add_vector(BitVector.from_string("0100"), 1)
        np.testing.assert_array_equal(elim.solve_for([0, 1, 2]), [1, 1, 1])
        self.assertIsInstance(elim.solution(), Underdetermined)

    def test_solve_for_empty(self):
        """Test asking for no columns."""
        self.assertEqual(Eliminator(3).solve_for([]).size, 0)


if __name__ == "__main__":
    unittest.main()
