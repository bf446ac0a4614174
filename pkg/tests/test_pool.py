"""
Tests for becsim.pool module.
"""

import io
import unittest
from contextlib import redirect_stdout
from unittest import mock

from becsim.errors import ConfigurationError
from becsim.pool import PoolMetrics, TrialPool, default_workers


def square(x: int) -> int:
    return x * x


class TestTrialPool(unittest.TestCase):
    """Test cases for TrialPool."""

    def test_one_worker_runs_inline(self):
        """Test a single worker needs no executor."""
        pool = TrialPool(workers=1)
        self.assertEqual(pool.backend, "inline")
        with pool:
            self.assertEqual(pool.map(square, range(5)), [0, 1, 4, 9, 16])

    def test_backend_follows_gil(self):
        """Test several workers pick threads only when the GIL is off."""
        with mock.patch("becsim.pool.gil_disabled", return_value=True):
            self.assertEqual(TrialPool(workers=2).backend, "thread")
        with mock.patch("becsim.pool.gil_disabled", return_value=False):
            self.assertEqual(TrialPool(workers=2).backend, "process")

    def test_thread_map_keeps_order(self):
        """Test threaded results come back in submission order."""
        with TrialPool(workers=4, backend="thread") as pool:
            self.assertEqual(pool.map(square, range(100)), [x * x for x in range(100)])

    def test_process_map_keeps_order(self):
        """Test process results come back in submission order."""
        with TrialPool(workers=2, backend="process") as pool:
            self.assertEqual(pool.map(square, range(20)), [x * x for x in range(20)])

    def test_metrics(self):
        """Test a finished session reports its task count."""
        pool = TrialPool(workers=2, backend="thread")
        self.assertIsNone(pool.get_metrics())
        with pool:
            pool.map(square, range(10))
            pool.map(square, range(5))
        metrics = pool.get_metrics()
        self.assertIsInstance(metrics, PoolMetrics)
        self.assertEqual(metrics.tasks_completed, 15)
        self.assertEqual(metrics.backend, "thread")
        self.assertGreaterEqual(metrics.utilization, 0.0)
        self.assertLessEqual(metrics.utilization, 1.0)

    def test_print_status(self):
        """Test the status report before and after a session."""
        pool = TrialPool(workers=1)
        out = io.StringIO()
        with redirect_stdout(out):
            pool.print_status()
            with pool:
                pool.map(square, [1, 2])
            pool.print_status()
        text = out.getvalue()
        self.assertIn("No metrics available yet", text)
        self.assertIn("Trials: 2", text)

    def test_map_needs_context(self):
        """Test executor backends must be entered first."""
        with self.assertRaises(RuntimeError):
            TrialPool(workers=2, backend="thread").map(square, [1])

    def test_invalid_settings(self):
        """Test bad worker counts and backends are configuration errors."""
        with self.assertRaises(ConfigurationError):
            TrialPool(workers=0)
        with self.assertRaises(ConfigurationError):
            TrialPool(workers=2, backend="fibers")

    def test_default_workers(self):
        """Test the default worker count is positive."""
        self.assertGreaterEqual(default_workers(), 1)
        self.assertEqual(TrialPool().workers, default_workers())


if __name__ == "__main__":
    unittest.main()
