"""ROBDD kernel and bit-vector circuits."""

from domcheck.bdd.bitvec import (
    BitVec,
    bv_add,
    bv_bitwise,
    bv_cmp,
    bv_const,
    bv_ite,
    bv_mul,
    bv_neg,
    bv_not,
    bv_sdiv,
    bv_shift,
    bv_shift_const,
    bv_srem,
    bv_sub,
    bv_var,
)
from domcheck.bdd.store import FALSE, TRUE, BddStore

__all__ = [
    "FALSE",
    "TRUE",
    "BddStore",
    "BitVec",
    "bv_add",
    "bv_bitwise",
    "bv_cmp",
    "bv_const",
    "bv_ite",
    "bv_mul",
    "bv_neg",
    "bv_not",
    "bv_sdiv",
    "bv_shift",
    "bv_shift_const",
    "bv_srem",
    "bv_sub",
    "bv_var",
]
