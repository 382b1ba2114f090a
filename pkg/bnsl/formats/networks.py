"""
BNSL - Network Writers
Flat text and DOT renderings of learned networks.
"""

from enum import Enum
from typing import Optional, Sequence

from ..network import Network


class OutputFormat(str, Enum):
    FLAT = "flat"
    DOT = "dot"


def _names(net: Network, names: Optional[Sequence[str]]) -> Sequence[str]:
    if names is None:
        return [str(v) for v in range(net.p)]
    if len(names) != net.p:
        raise ValueError(f"{len(names)} names for {net.p} nodes")
    return names


def write_flat(net: Network, names: Optional[Sequence[str]] = None,
               local_scores: Optional[Sequence[float]] = None) -> str:
    """One 'child <- {parents} score' line per node, then the total."""
    names = _names(net, names)
    lines = []
    for v, ps in enumerate(net.parents):
        parent_text = ",".join(names[u] for u in sorted(ps))
        line = f"{names[v]} <- {{{parent_text}}}"
        if local_scores is not None:
            line += f" {local_scores[v]:.6f}"
        lines.append(line)
    lines.append(f"score {net.score:.6f}")
    return "\n".join(lines) + "\n"


def write_dot(net: Network, names: Optional[Sequence[str]] = None, graph_name: str = "bn") -> str:
    """Directed-graph description with one edge per (parent, child) pair."""
    names = _names(net, names)
    lines = [f"digraph {graph_name} {{", f'  label="score {net.score:.6f}";']
    for name in names:
        lines.append(f'  "{name}";')
    for u, v in net.edges():
        lines.append(f'  "{names[u]}" -> "{names[v]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_network(net: Network, fmt: OutputFormat = OutputFormat.FLAT,
                  names: Optional[Sequence[str]] = None,
                  local_scores: Optional[Sequence[float]] = None) -> str:
    if OutputFormat(fmt) == OutputFormat.DOT:
        return write_dot(net, names)
    return write_flat(net, names, local_scores)
