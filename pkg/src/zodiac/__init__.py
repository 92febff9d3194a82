"""Cryptanalysis of homophonic substitution and transposition ciphers."""
from __future__ import annotations

__version__ = "0.1.0"

from .cipher import (
    Alphabet, FormatError, HomophoneTable, KeyCoverageError, Plaintext,
    SubstitutionKey, SymbolGrid, decrypt, encrypt, parse_cipher, parse_key,
    serialize_cipher, serialize_key,
)
from .transposition import (
    CellOrder, SectionPlan, TranspositionSpec, apply, decimation_order, invert,
    parse_spec, pseudo_period_order,
)
