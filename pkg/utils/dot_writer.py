"""
Minimal Graphviz DOT builder
Output is byte-stable: nodes and edges render in insertion order and every
attribute value is quoted
"""

from typing import Dict, List, Optional, Tuple


def _quote(value: object) -> str:
    text = str(value).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{text}"'


def _attr_list(attrs: Dict[str, object]) -> str:
    if not attrs:
        return ""
    body = ", ".join(f"{key}={_quote(value)}" for key, value in attrs.items())
    return f" [{body}]"


class DotGraph:
    """Directed graph description assembled node by node"""

    def __init__(self, name: str, graph_attrs: Optional[Dict[str, object]] = None):
        self.name = name
        self.graph_attrs = dict(graph_attrs or {})
        self._nodes: Dict[str, Dict[str, object]] = {}
        self._edges: List[Tuple[str, str, Dict[str, object]]] = []

    def add_node(self, node_id: str, **attrs: object) -> None:
        self._nodes.setdefault(node_id, {}).update(attrs)

    def add_edge(self, source: str, target: str, **attrs: object) -> None:
        for node_id in (source, target):
            self._nodes.setdefault(node_id, {})
        self._edges.append((source, target, dict(attrs)))

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def render(self) -> str:
        lines = [f"digraph {_quote(self.name)} {{"]
        if self.graph_attrs:
            lines.append(f"  graph{_attr_list(self.graph_attrs)};")
        for node_id, attrs in self._nodes.items():
            lines.append(f"  {_quote(node_id)}{_attr_list(attrs)};")
        for source, target, attrs in self._edges:
            lines.append(f"  {_quote(source)} -> {_quote(target)}{_attr_list(attrs)};")
        lines.append("}")
        return "\n".join(lines) + "\n"
