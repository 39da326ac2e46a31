"""Readers and writers for pre-parsed syntax trees.

Constituency trees come as Penn-style bracketed strings, dependency trees
as CoNLL-U blocks. Both writers emit a canonical form that the readers
parse back to a structurally identical tree.
"""

from treegraph.exceptions import ParseError
from treegraph.models import ConstNode, ConstTree, DepNode, DepTree

_SPACE = " \t\r\n"
_DELIMS = "()" + _SPACE

# CoNLL-U column positions (0-based) for the 10-column layout
ID, FORM, HEAD, DEPREL = 0, 1, 6, 7


class _BracketReader:
    """Recursive-descent reader over a bracketed string."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.leaves = 0

    def error(self, message: str, pos: int | None = None) -> ParseError:
        pos = self.pos if pos is None else pos
        return ParseError(message, offset=len(self.text[:pos].encode("utf-8")))

    def skip_space(self):
        while self.pos < len(self.text) and self.text[self.pos] in _SPACE:
            self.pos += 1

    def atom(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _DELIMS:
            self.pos += 1
        return self.text[start:self.pos]

    def node(self) -> ConstNode:
        start = self.pos
        self.pos += 1  # "("
        self.skip_space()
        if self.pos >= len(self.text):
            raise self.error("unexpected end of input")
        label = "" if self.text[self.pos] == "(" else self.atom()
        children = []
        while True:
            self.skip_space()
            if self.pos >= len(self.text):
                raise self.error("unexpected end of input, unbalanced parentheses")
            char = self.text[self.pos]
            if char == ")":
                self.pos += 1
                break
            if char == "(":
                children.append(self.node())
            else:
                word = self.atom()
                children.append(ConstNode(token=self.leaves, word=word))
                self.leaves += 1
        if not children:
            raise self.error(f"empty node {label!r}", start)
        return ConstNode(label=label, children=children)


def parse_constituency(text: str) -> ConstTree:
    """Parse a bracketed tree such as ``(S (NP (DT the) (NN cat)) (VP (VBZ sits)))``.

    Leaves are numbered left to right from 0 and phrase labels are kept
    verbatim.

    Raises:
        ParseError: Unbalanced parentheses, an empty node, trailing text or
            an input without leaves, with the byte offset of the problem.
    """
    reader = _BracketReader(text)
    reader.skip_space()
    if reader.pos >= len(text):
        raise reader.error("no tree found: zero leaves")
    if text[reader.pos] != "(":
        raise reader.error("expected '('")
    root = reader.node()
    reader.skip_space()
    if reader.pos < len(text):
        raise reader.error("trailing characters after tree")
    return ConstTree(root=root)


def serialize_constituency(tree: ConstTree) -> str:
    """Canonical bracketed form: single spaces, no trailing whitespace."""

    def render(node: ConstNode) -> str:
        if node.is_leaf:
            return node.word
        return f"({node.label} {' '.join(render(child) for child in node.children)})"

    return render(tree.root)


def _conllu_rows(text: str) -> list[tuple[int, list[str]]]:
    """Token rows of the first sentence block as (line number, columns)."""
    rows = []
    ended = False
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if rows:
                ended = True
            continue
        if line.startswith("#"):
            continue
        if ended:
            raise ParseError("more than one sentence in block", line=number)
        columns = line.split("\t") if "\t" in line else line.split()
        rows.append((number, [c.strip() for c in columns]))
    return rows


def parse_conllu(text: str) -> DepTree:
    """Parse one CoNLL-U sentence into a dependency tree.

    Accepts the standard 10-column layout (tab- or space-separated) and a
    compact 4-column ``ID FORM HEAD DEPREL`` layout. Multiword ranges
    (``1-2``) and empty nodes (``1.1``) are skipped.

    Raises:
        ParseError: Bad ids or columns, HEAD out of range, a cycle, or a
            root count other than one; the error names the line.
    """
    tokens = []
    for number, columns in _conllu_rows(text):
        token_id = columns[ID]
        if "-" in token_id or "." in token_id:
            continue
        if len(columns) == 4:
            head_col, rel_col = 2, 3
        elif len(columns) >= 8:
            head_col, rel_col = HEAD, DEPREL
        else:
            raise ParseError(f"expected 4 or at least 8 columns, got {len(columns)}", line=number)
        try:
            index = int(token_id)
            head = int(columns[head_col])
        except ValueError:
            raise ParseError("ID and HEAD must be integers", line=number) from None
        if index != len(tokens) + 1:
            raise ParseError(f"expected token id {len(tokens) + 1}, got {index}", line=number)
        tokens.append((number, columns[FORM], head, columns[rel_col]))

    if not tokens:
        raise ParseError("no tokens in block", line=1)

    n = len(tokens)
    for number, _, head, _ in tokens:
        if not 0 <= head <= n:
            raise ParseError(f"HEAD {head} out of range 0..{n}", line=number)

    for start in range(n):
        seen = set()
        current = start
        while current != -1:
            if current in seen:
                raise ParseError("dependency cycle", line=tokens[start][0])
            seen.add(current)
            current = tokens[current][2] - 1

    roots = [i for i, (_, _, head, _) in enumerate(tokens) if head == 0]
    if len(roots) > 1:
        raise ParseError(f"multiple roots ({len(roots)})", line=tokens[roots[1]][0])

    nodes = [
        DepNode(token=i, form=form, head=head - 1, deprel=rel)
        for i, (_, form, head, rel) in enumerate(tokens)
    ]
    for node in nodes:
        if node.head >= 0:
            nodes[node.head].children.append(node.token)
    return DepTree(nodes=nodes, root=roots[0])


def serialize_conllu(tree: DepTree) -> str:
    """Canonical 10-column CoNLL-U block with a trailing newline."""
    lines = [
        f"{node.token + 1}\t{node.form}\t_\t_\t_\t_\t{node.head + 1}\t{node.deprel}\t_\t_"
        for node in tree.nodes
    ]
    return "\n".join(lines) + "\n"
