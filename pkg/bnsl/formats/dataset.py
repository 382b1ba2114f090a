"""
BNSL - Dataset Parser
Whitespace-separated discrete data: names line, arities line, one observation per line.
"""

from typing import List, Dict, Tuple
from dataclasses import dataclass

import numpy as np

from ..errors import ParseError


@dataclass(frozen=True)
class Dataset:
    """Complete discrete data over p named nodes."""
    names: Tuple[str, ...]
    arities: Tuple[int, ...]
    rows: np.ndarray  # N x p, int64 category indices

    @property
    def p(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])

    def index_of(self, name: str) -> int:
        return self.names.index(name)


class DatasetParser:
    """Parser for the names/arities/rows dataset layout."""

    def __init__(self):
        self.errors: List[str] = []
        self.stats: Dict = {
            "lines_read": 0,
            "observations": 0,
            "blank_lines": 0,
        }

    def parse(self, text: str) -> Dataset:
        """Parse dataset text, raising ParseError on the first problem found."""
        self.errors = []
        self.stats = {"lines_read": 0, "observations": 0, "blank_lines": 0}

        lines = text.splitlines()
        self.stats["lines_read"] = len(lines)

        # Trailing blank lines are tolerated, inner ones are not
        while lines and not lines[-1].strip():
            lines.pop()
            self.stats["blank_lines"] += 1

        if not lines:
            self._fail("missing header line", 1)

        names = lines[0].split()
        if not names:
            self._fail("no node names", 1)
        seen = set()
        for name in names:
            if name in seen:
                self._fail(f"duplicate name {name}", 1)
            seen.add(name)

        if len(lines) < 2:
            self._fail("missing arities line", 2)
        arity_tokens = lines[1].split()
        if len(arity_tokens) != len(names):
            self._fail(f"expected {len(names)} arities, found {len(arity_tokens)}", 2)
        arities = []
        for token in arity_tokens:
            value = self._int(token, 2)
            if value < 1:
                self._fail(f"arity {value} must be positive", 2)
            arities.append(value)

        rows = np.zeros((len(lines) - 2, len(names)), dtype=np.int64)
        for offset, line in enumerate(lines[2:]):
            line_no = offset + 3
            tokens = line.split()
            if len(tokens) != len(names):
                self._fail(f"ragged row: expected {len(names)} entries, found {len(tokens)}", line_no)
            for col, token in enumerate(tokens):
                value = self._int(token, line_no)
                if value < 0:
                    self._fail(f"negative entry {value}", line_no)
                if value >= arities[col]:
                    self._fail(f"entry {value} ≥ arity {arities[col]}", line_no)
                rows[offset, col] = value

        self.stats["observations"] = rows.shape[0]
        return Dataset(names=tuple(names), arities=tuple(arities), rows=rows)

    def _int(self, token: str, line_no: int) -> int:
        try:
            return int(token)
        except ValueError:
            self._fail(f"malformed integer {token!r}", line_no)

    def _fail(self, message: str, line_no: int):
        self.errors.append(f"{message} at line {line_no}")
        raise ParseError(message, line_no)

    def get_summary(self) -> Dict:
        return dict(self.stats, errors=list(self.errors))


def parse_dataset(text: str) -> Dataset:
    """Parse a dataset from its text form."""
    return DatasetParser().parse(text)
