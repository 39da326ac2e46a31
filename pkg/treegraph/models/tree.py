"""Syntax tree models - constituency and dependency parses of one sentence."""

from collections.abc import Iterator
from dataclasses import dataclass, field


@dataclass
class ConstNode:
    """A node of a constituency tree.

    Internal nodes carry a phrase label and at least one child. Leaves carry
    the surface word and its token index within the sentence.
    """

    label: str | None = None
    children: list["ConstNode"] = field(default_factory=list)
    token: int | None = None
    word: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.token is not None


@dataclass
class ConstTree:
    """Rooted ordered phrase-structure tree; only leaves hold words."""

    root: ConstNode

    def __len__(self):
        return len(self.leaves())

    def leaves(self) -> list[ConstNode]:
        """Leaves in left-to-right order."""
        return [node for node in self.preorder() if node.is_leaf]

    @property
    def words(self) -> list[str]:
        return [leaf.word for leaf in self.leaves()]

    def preorder(self) -> Iterator[ConstNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def postorder(self) -> Iterator[ConstNode]:
        """Every node after all of its descendants, children left to right."""
        stack: list[tuple[ConstNode, bool]] = [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded or node.is_leaf:
                yield node
                continue
            stack.append((node, True))
            for child in reversed(node.children):
                stack.append((child, False))


@dataclass
class DepNode:
    """One token of a dependency tree; ``head`` is -1 for the root."""

    token: int
    form: str
    head: int
    deprel: str
    children: list[int] = field(default_factory=list)


@dataclass
class DepTree:
    """Head-modifier tree with a word at every node and exactly one root."""

    nodes: list[DepNode]
    root: int

    def __len__(self):
        return len(self.nodes)

    @property
    def words(self) -> list[str]:
        return [node.form for node in self.nodes]

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Child-to-head edges."""
        return [(node.token, node.head) for node in self.nodes if node.head >= 0]

    def postorder(self) -> Iterator[int]:
        """Node indices, each after all of its descendants."""
        stack: list[tuple[int, bool]] = [(self.root, False)]
        while stack:
            index, expanded = stack.pop()
            if expanded:
                yield index
                continue
            stack.append((index, True))
            for child in reversed(self.nodes[index].children):
                stack.append((child, False))
