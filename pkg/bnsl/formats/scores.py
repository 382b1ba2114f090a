"""
BNSL - Score File Parser
Count-then-lines local score files: line 1 = p, then per node "name k" and k lines
"score m parent_1 ... parent_m".
"""

from typing import Dict, List, Tuple

from ..errors import ParseError
from ..scoring import CandidateFamily, ScoreTable


class ScoreFileParser:
    """Two-pass parser: collect node names first so parents may be forward references."""

    def __init__(self):
        self.errors: List[str] = []
        self.stats: Dict = {"nodes": 0, "candidates": 0, "lines_read": 0}

    def parse(self, text: str) -> ScoreTable:
        self.errors = []
        lines = [(i + 1, line.split()) for i, line in enumerate(text.splitlines())]
        lines = [(no, tokens) for no, tokens in lines if tokens]
        self.stats = {"nodes": 0, "candidates": 0, "lines_read": len(lines)}
        if not lines:
            self._fail("empty score file", 1)

        first_no, first = lines[0]
        if len(first) != 1:
            self._fail("first line must hold the node count", first_no)
        p = self._int(first[0], first_no)
        if p < 1:
            self._fail(f"node count {p} must be positive", first_no)

        blocks = self._split_blocks(lines[1:], p)
        names = [name for name, _, _ in blocks]
        index = {name: v for v, name in enumerate(names)}

        per_node: List[List[CandidateFamily]] = []
        for v, (name, _, entries) in enumerate(blocks):
            cands = []
            seen = set()
            for line_no, tokens in entries:
                cands.append(self._candidate(v, tokens, line_no, index, seen))
            per_node.append(cands)
            self.stats["candidates"] += len(cands)
        self.stats["nodes"] = p
        return ScoreTable(names, per_node)

    def _split_blocks(self, lines, p: int) -> List[Tuple[str, int, list]]:
        blocks = []
        pos = 0
        seen_names = set()
        for _ in range(p):
            if pos >= len(lines):
                self._fail(f"expected {p} nodes, found {len(blocks)}", lines[-1][0] if lines else 1)
            line_no, tokens = lines[pos]
            if len(tokens) != 2:
                self._fail("expected node header 'name k'", line_no)
            name, k = tokens[0], self._int(tokens[1], line_no)
            if name in seen_names:
                self._fail(f"duplicate node {name}", line_no)
            if k < 1:
                self._fail(f"node {name} needs at least one candidate", line_no)
            seen_names.add(name)
            pos += 1
            entries = []
            while len(entries) < k:
                if pos >= len(lines) or self._looks_like_header(lines[pos][1]):
                    at = lines[pos][0] if pos < len(lines) else line_no + len(entries) + 1
                    self._fail(f"expected {k} candidates for {name}, found {len(entries)}", at)
                entries.append(lines[pos])
                pos += 1
            blocks.append((name, k, entries))
        if pos < len(lines):
            self._fail("unexpected content after last node", lines[pos][0])
        return blocks

    @staticmethod
    def _looks_like_header(tokens: List[str]) -> bool:
        if len(tokens) != 2:
            return False
        try:
            float(tokens[0])
        except ValueError:
            return True
        return False

    def _candidate(self, v: int, tokens: List[str], line_no: int, index: Dict[str, int],
                   seen: set) -> CandidateFamily:
        if len(tokens) < 2:
            self._fail("expected 'score m parents...'", line_no)
        try:
            score = float(tokens[0])
        except ValueError:
            self._fail(f"malformed score {tokens[0]!r}", line_no)
        m = self._int(tokens[1], line_no)
        parent_names = tokens[2:]
        if m != len(parent_names):
            self._fail(f"expected {m} parents, found {len(parent_names)}", line_no)
        parents = set()
        for pname in parent_names:
            if pname not in index:
                self._fail(f"unknown parent {pname}", line_no)
            u = index[pname]
            if u in parents:
                self._fail(f"duplicate parent {pname}", line_no)
            if u == v:
                self._fail(f"node {pname} listed as its own parent", line_no)
            parents.add(u)
        key = frozenset(parents)
        if key in seen:
            self._fail("duplicate parent set", line_no)
        seen.add(key)
        try:
            return CandidateFamily(v, key, score)
        except ValueError as exc:
            self._fail(str(exc), line_no)

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


def parse_scores(text: str) -> ScoreTable:
    """Parse a local score file into a ScoreTable (no pruning)."""
    return ScoreFileParser().parse(text)


def _format_score(score: float) -> str:
    text = f"{score:.6f}"
    return text if float(text) == score else repr(score)


def write_scores(table: ScoreTable) -> str:
    """Render a ScoreTable in the count-then-lines layout, best candidate first."""
    lines = [str(table.p)]
    for v, cands in enumerate(table.candidates):
        lines.append(f"{table.names[v]} {len(cands)}")
        for cand in cands:
            parents = " ".join(table.names[u] for u in cand.sorted_parents)
            line = f"{_format_score(cand.score)} {len(cand.parents)}"
            lines.append(f"{line} {parents}" if parents else line)
    return "\n".join(lines) + "\n"
