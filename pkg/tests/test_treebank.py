"""Tests for the bracketed-tree and CoNLL-U readers and writers."""

import numpy as np
import pytest

from treegraph.exceptions import DataError, ParseError
from treegraph.models import ConstNode, ConstTree, DepNode, DepTree
from treegraph.services import (
    parse_conllu,
    parse_constituency,
    serialize_conllu,
    serialize_constituency,
)


def random_const_tree(rng: np.random.Generator, n_leaves: int) -> ConstTree:
    counter = iter(range(n_leaves))

    def build(n: int, depth: int) -> ConstNode:
        if n == 1 and (depth > 0 and rng.random() < 0.6):
            i = next(counter)
            return ConstNode(label=f"P{rng.integers(3)}", children=[ConstNode(token=i, word=f"t{i}")])
        if n == 1:
            i = next(counter)
            return ConstNode(label="X", children=[ConstNode(token=i, word=f"t{i}")])
        parts = int(rng.integers(2, min(n, 3) + 1))
        cuts = sorted(rng.choice(np.arange(1, n), size=parts - 1, replace=False))
        sizes = np.diff([0, *cuts, n])
        return ConstNode(label=f"N{rng.integers(4)}", children=[build(int(s), depth + 1) for s in sizes])

    return ConstTree(root=build(n_leaves, 0))


def random_dep_tree(rng: np.random.Generator, n: int) -> DepTree:
    order = rng.permutation(n)
    heads = [-1] * n
    for j in range(1, n):
        heads[order[j]] = int(order[rng.integers(0, j)])
    nodes = [DepNode(token=i, form=f"w{i}", head=heads[i], deprel=f"r{i % 3}") for i in range(n)]
    for node in nodes:
        if node.head >= 0:
            nodes[node.head].children.append(node.token)
    return DepTree(nodes=nodes, root=int(order[0]))


class TestParseConstituency:
    def test_single_leaf(self):
        tree = parse_constituency("(X hi)")
        assert tree.root.label == "X"
        assert tree.words == ["hi"]
        assert tree.leaves()[0].token == 0

    def test_nested_tree(self):
        tree = parse_constituency("(S (NP (DT the) (NN cat)) (VP (VBZ sits)))")
        assert len(tree) == 3
        assert tree.words == ["the", "cat", "sits"]
        assert [leaf.token for leaf in tree.leaves()] == [0, 1, 2]
        assert [child.label for child in tree.root.children] == ["NP", "VP"]

    def test_unbalanced_reports_end_offset(self):
        text = "(S (NP the)"
        with pytest.raises(ParseError) as e:
            parse_constituency(text)
        assert e.value.offset == len(text.encode("utf-8"))

    def test_offset_counts_bytes(self):
        text = "(S (NP é)"
        with pytest.raises(ParseError) as e:
            parse_constituency(text)
        assert e.value.offset == len(text.encode("utf-8"))

    @pytest.mark.parametrize("text", ["", "   ", "(S ())", "(S)", "(S a))", "S a", "(S a) (T b)"])
    def test_malformed(self, text):
        with pytest.raises(ParseError) as e:
            parse_constituency(text)
        assert e.value.offset is not None
        assert isinstance(e.value, DataError)

    def test_postorder_visits_children_first(self):
        tree = parse_constituency("(S (A (B x) y) (C z))")
        seen = set()
        for node in tree.postorder():
            assert all(id(child) in seen for child in node.children)
            seen.add(id(node))


class TestParseConllu:
    def test_two_tokens(self):
        tree = parse_conllu("1 hi 0 root\n2 there 1 discourse\n")
        assert tree.root == 0
        assert tree.nodes[0].form == "hi"
        assert tree.nodes[0].children == [1]
        assert tree.nodes[1].deprel == "discourse"

    def test_single_token(self):
        tree = parse_conllu("1 go 0 root")
        assert len(tree) == 1
        assert tree.edges == []

    def test_cycle(self):
        with pytest.raises(ParseError, match="cycle") as e:
            parse_conllu("1 a 2 dep\n2 b 1 dep\n")
        assert e.value.line == 1

    def test_multiple_roots(self):
        with pytest.raises(ParseError, match="multiple roots") as e:
            parse_conllu("1 a 0 root\n2 b 0 root\n")
        assert e.value.line == 2

    def test_head_out_of_range(self):
        with pytest.raises(ParseError, match="out of range") as e:
            parse_conllu("1 a 0 root\n2 b 7 dep\n")
        assert e.value.line == 2

    def test_ten_column_layout_with_comments_and_ranges(self):
        text = (
            "# sent_id = 1\n"
            "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\tdo\tdo\tAUX\t_\t_\t0\troot\t_\t_\n"
            "2\tn't\tnot\tPART\t_\t_\t1\tadvmod\t_\t_\n"
        )
        tree = parse_conllu(text)
        assert tree.words == ["do", "n't"]
        assert tree.nodes[1].head == 0

    @pytest.mark.parametrize(
        "text",
        ["", "1 a\n", "x a 0 root\n", "2 a 0 root\n", "1 a 0 root\n\n1 b 0 root\n", "1 a zero root\n"],
    )
    def test_malformed(self, text):
        with pytest.raises(ParseError) as e:
            parse_conllu(text)
        assert e.value.line is not None

    def test_structure_is_consistent(self, rng):
        for n in range(1, 12):
            tree = parse_conllu(serialize_conllu(random_dep_tree(rng, n)))
            assert len(tree.edges) == n - 1
            assert sorted(tree.postorder()) == list(range(n))


class TestRoundTrip:
    def test_constituency_round_trip(self, rng):
        for _ in range(1000):
            tree = random_const_tree(rng, int(rng.integers(1, 9)))
            text = serialize_constituency(tree)
            again = parse_constituency(text)
            assert serialize_constituency(again) == text
            assert again.words == tree.words

    def test_conllu_round_trip(self, rng):
        for _ in range(1000):
            tree = random_dep_tree(rng, int(rng.integers(1, 9)))
            text = serialize_conllu(tree)
            again = parse_conllu(text)
            assert serialize_conllu(again) == text
            assert [n.head for n in again.nodes] == [n.head for n in tree.nodes]
            assert again.root == tree.root
