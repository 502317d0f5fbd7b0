"""Tests for plateau_cli.utils module"""

import signal
import threading
from unittest.mock import patch

import pytest

from plateau_cli.utils import (
    available_threads,
    chunk_slices,
    interrupted_message,
    parallel_map,
    setup_signal_handler,
)


class TestInterruptedMessage:
    """Tests for interrupted_message function"""

    def test_prints_and_exits_130(self):
        """Test that interrupted_message prints a note and exits with status 130"""
        with patch("builtins.print") as mock_print, patch("sys.exit") as mock_exit:
            interrupted_message()

            mock_print.assert_called_once()
            assert "Interrupted" in mock_print.call_args[0][0]
            mock_exit.assert_called_once_with(130)


class TestSetupSignalHandler:
    """Tests for setup_signal_handler function"""

    def test_registers_sigint(self):
        """Test that signal handler is registered for SIGINT"""
        with patch("signal.signal") as mock_signal:
            setup_signal_handler()

            mock_signal.assert_called_once()
            args = mock_signal.call_args[0]
            assert args[0] == signal.SIGINT
            assert callable(args[1])

    def test_handler_calls_interrupted_message(self):
        with (
            patch("signal.signal") as mock_signal,
            patch("plateau_cli.utils.interrupted_message") as mock_interrupted,
        ):
            setup_signal_handler()
            handler_func = mock_signal.call_args[0][1]
            handler_func(signal.SIGINT, None)

            mock_interrupted.assert_called_once()


class TestChunkSlices:
    """Tests for chunk_slices function"""

    def test_covers_range_in_order(self):
        slices = chunk_slices(10, 4)
        assert slices == [slice(0, 4), slice(4, 8), slice(8, 10)]

    def test_empty(self):
        assert chunk_slices(0, 4) == []

    def test_invalid_chunk_size(self):
        with pytest.raises(ValueError):
            chunk_slices(10, 0)


class TestParallelMap:
    """Tests for parallel_map function"""

    @pytest.mark.parametrize("threads", [1, 4])
    def test_preserves_order(self, threads):
        assert parallel_map(lambda x: x * x, range(20), threads) == [x * x for x in range(20)]

    def test_single_thread_stays_on_caller(self):
        caller = threading.get_ident()
        idents = parallel_map(lambda _: threading.get_ident(), range(3), threads=1)
        assert set(idents) == {caller}

    def test_uses_pool_with_threads(self):
        with patch("plateau_cli.utils.ThreadPoolExecutor") as mock_pool:
            mock_pool.return_value.__enter__.return_value.map.return_value = iter([1, 2])
            assert parallel_map(abs, [-1, -2], threads=8) == [1, 2]
            mock_pool.assert_called_once_with(max_workers=2)


class TestAvailableThreads:
    """Tests for available_threads function"""

    def test_at_least_one(self):
        assert available_threads() >= 1

    def test_falls_back_to_cpu_count(self):
        with (
            patch("plateau_cli.utils.os.sched_getaffinity", side_effect=AttributeError, create=True),
            patch("plateau_cli.utils.os.cpu_count", return_value=None),
        ):
            assert available_threads() == 1
