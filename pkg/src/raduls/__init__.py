"""Parallel hybrid MSD radix sort for fixed-size binary records."""
from .datagen import GenSpec, generate, load_file, save_file
from .lsd import LSD1, LSD4, LsdConfig, lsd_sort
from .records import RecordFormatError, RecordLayout, ResourceError, compare_keys, digit
from .scheduler import SchedulerConfig, sort
from .small_sorts import TinyPolicy
from .verify import VerifyReport, check_permutation, check_sorted, digest, oracle_sort

__all__ = [
    "GenSpec", "LSD1", "LSD4", "LsdConfig", "RecordFormatError", "RecordLayout",
    "ResourceError", "SchedulerConfig", "TinyPolicy", "VerifyReport",
    "check_permutation", "check_sorted", "compare_keys", "digest", "digit",
    "generate", "load_file", "lsd_sort", "oracle_sort", "save_file", "sort",
]
