"""
BNSL - Structural Constraint Parser
Lines of the form "edge u v required" or "edge u v forbidden"; '#' starts a comment.
"""

from dataclasses import dataclass
from typing import List, Sequence

from ..errors import ParseError


@dataclass(frozen=True)
class EdgeConstraint:
    parent: int
    child: int
    required: bool

    def describe(self, names: Sequence[str]) -> str:
        kind = "required" if self.required else "forbidden"
        return f"edge {names[self.parent]} {names[self.child]} {kind}"


def parse_constraints(text: str, names: Sequence[str]) -> List[EdgeConstraint]:
    """Parse edge presence/absence lines against the given node names."""
    index = {name: v for v, name in enumerate(names)}
    result: List[EdgeConstraint] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 4 or tokens[0] != "edge":
            raise ParseError("expected 'edge u v required|forbidden'", line_no)
        _, u_name, v_name, kind = tokens
        for name in (u_name, v_name):
            if name not in index:
                raise ParseError(f"unknown node {name}", line_no)
        if u_name == v_name:
            raise ParseError(f"self edge on {u_name}", line_no)
        if kind not in ("required", "forbidden"):
            raise ParseError(f"unknown edge kind {kind!r}", line_no)
        result.append(EdgeConstraint(index[u_name], index[v_name], kind == "required"))
    return result
