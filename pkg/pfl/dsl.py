"""
The .pfl text format: named declarations of carriers, relations, rule sets, orders, axiom-sets, theories and the
structures built from them. The grammar is frozen in docs/GRAMMAR.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

from lark import Lark, Token, Tree
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from pfl.bp import BasicPair, RelationPair
from pfl.carrier import Carrier, Subset, format_label
from pfl.ftop import Axiom, AxiomSet, InductiveTopology, Preorder, SetPresentation
from pfl.geom import BOTTOM, TOP, And, Atom, GeometricAxiom, GeometricTheory, Or, format_body
from pfl.relcat import Relation
from pfl.rules import Rule, RuleSet
from pfl.utils import CarrierMismatch, InvalidStructure, LimitExceeded, ParseError, ResolutionError, get_logger

logger = get_logger(__name__)

GRAMMAR = r"""
start: declaration*

?declaration: carrier_decl
            | relation_decl
            | rules_decl
            | order_decl
            | axioms_decl
            | theory_decl
            | topology_decl
            | presentation_decl
            | space_decl
            | morphism_decl

carrier_decl: "carrier" NAME "=" subset
relation_decl: "relation" NAME ":" NAME "->" NAME "{" pair* "}"
rules_decl: "rules" NAME "on" NAME "{" rule* "}"
order_decl: "order" NAME "on" NAME "{" leq* "}"
axioms_decl: "axioms" NAME "on" NAME "{" axiom* "}"
theory_decl: "theory" NAME "on" NAME "{" theory_axiom* "}"
topology_decl: "topology" NAME "=" NAME "with" NAME
presentation_decl: "presentation" NAME "=" NAME "with" NAME
space_decl: "space" NAME "=" NAME
morphism_decl: "morphism" NAME ":" NAME "->" NAME "=" "(" NAME "," NAME ")"

pair: "(" NAME "," NAME ")" ";"
rule: subset "->" subset ";"
leq: NAME "<=" NAME ";"
axiom: NAME ":" NAME "=>" subset ";"
theory_axiom: subset "|-" disj ";"

disj: conj ("|" conj)*
    | "bottom" -> bottom
conj: factor ("&" factor)*
    | "top" -> top
?factor: NAME -> atom
       | "(" disj ")"

subset: "{" (NAME ("," NAME)*)? "}"

NAME: /[A-Za-z0-9_*][A-Za-z0-9_.'*]*/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""


@lru_cache(maxsize=1)
def _parser() -> Lark:
    return Lark(GRAMMAR, parser="lalr", propagate_positions=True)


@dataclass(frozen=True)
class Declaration:
    kind: str
    name: str
    value: Any
    refs: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def site(self) -> str:
        return f"line {self.line}, column {self.column}"


@dataclass(frozen=True)
class Document:
    declarations: tuple[Declaration, ...] = ()

    def names(self) -> list[str]:
        return [d.name for d in self.declarations]

    def lookup(self, name: str) -> Declaration:
        for d in self.declarations:
            if d.name == name:
                return d
        raise ResolutionError(f"unknown name {name}")

    def get(self, name: str, *kinds: str) -> Any:
        d = self.lookup(name)
        if kinds and d.kind not in kinds:
            raise ResolutionError(f"{name} is a {d.kind}, expected {' or '.join(kinds)}")
        return d.value


class _Resolver:
    def __init__(self):
        self.declared: dict[str, Declaration] = {}

    def ref(self, token: Token, *kinds: str) -> Any:
        name = str(token)
        d = self.declared.get(name)
        if d is None:
            raise ResolutionError(f"line {token.line}, column {token.column}: unknown name {name}")
        if kinds and d.kind not in kinds:
            raise ResolutionError(
                f"line {token.line}, column {token.column}: {name} is a {d.kind}, expected {' or '.join(kinds)}"
            )
        return d.value

    def add(self, kind: str, token: Token, value: Any, refs: tuple[str, ...]) -> Declaration:
        name = str(token)
        decl = Declaration(kind, name, value, refs, token.line, token.column)
        first = self.declared.get(name)
        if first is not None:
            raise ResolutionError(f"duplicate name {name} at {decl.site}, first declared at {first.site}")
        self.declared[name] = decl
        return decl


def _subset(carrier: Carrier, tree: Tree) -> Subset:
    return carrier.subset(str(token) for token in tree.children)


def _body(tree: Tree) -> Any:
    if tree.data == "bottom":
        return BOTTOM
    if tree.data == "top":
        return TOP
    if tree.data == "atom":
        return Atom(str(tree.children[0]))
    if tree.data == "disj":
        return Or(tuple(_body(child) for child in tree.children))
    if tree.data == "conj":
        return And(tuple(_body(child) for child in tree.children))
    raise InvalidStructure(f"unexpected formula node {tree.data}")


def _declare(resolver: _Resolver, tree: Tree) -> Declaration:
    kind = tree.data.removesuffix("_decl")
    children = tree.children
    name = children[0]
    if kind == "carrier":
        labels = [str(token) for token in children[1].children]
        return resolver.add(kind, name, Carrier(str(name), tuple(labels)), ())
    if kind == "relation":
        src, dst = resolver.ref(children[1], "carrier"), resolver.ref(children[2], "carrier")
        pairs = [(str(p.children[0]), str(p.children[1])) for p in children[3:]]
        value = Relation.from_pairs(src, dst, pairs)
        return resolver.add(kind, name, value, (str(children[1]), str(children[2])))
    if kind in ("rules", "order", "axioms", "theory"):
        carrier = resolver.ref(children[1], "carrier")
        items = children[2:]
        if kind == "rules":
            rules = tuple(Rule(_subset(carrier, r.children[0]), _subset(carrier, r.children[1])) for r in items)
            value = RuleSet(carrier, rules, name=str(name))
        elif kind == "order":
            value = Preorder.from_pairs(carrier, [(str(p.children[0]), str(p.children[1])) for p in items])
        elif kind == "axioms":
            axioms = tuple(
                Axiom(str(a.children[0]), str(a.children[1]), _subset(carrier, a.children[2])) for a in items
            )
            value = AxiomSet(carrier, axioms)
        else:
            axioms = tuple(GeometricAxiom(_subset(carrier, a.children[0]), _body(a.children[1])) for a in items)
            value = GeometricTheory(carrier, axioms, name=str(name))
        return resolver.add(kind, name, value, (str(children[1]),))
    if kind in ("topology", "presentation"):
        order, axioms = resolver.ref(children[1], "order"), resolver.ref(children[2], "axioms")
        build = InductiveTopology if kind == "topology" else SetPresentation
        return resolver.add(kind, name, build(order, axioms, name=str(name)), (str(children[1]), str(children[2])))
    if kind == "space":
        forces = resolver.ref(children[1], "relation")
        return resolver.add(kind, name, BasicPair(forces.src, forces, forces.dst, name=str(name)), (str(children[1]),))
    if kind == "morphism":
        source, target = resolver.ref(children[1], "space"), resolver.ref(children[2], "space")
        point_rel, obs_rel = resolver.ref(children[3], "relation"), resolver.ref(children[4], "relation")
        refs = tuple(str(c) for c in children[1:5])
        return resolver.add(kind, name, RelationPair(source, target, point_rel, obs_rel), refs)
    raise InvalidStructure(f"unknown declaration {tree.data}")


def _syntax_error(e: UnexpectedInput) -> ParseError:
    line, column = getattr(e, "line", None), getattr(e, "column", None)
    if isinstance(e, UnexpectedEOF) or (line is not None and line < 0):
        return ParseError("unexpected end of input")
    if isinstance(e, UnexpectedToken):
        found = "end of input" if e.token.type == "$END" else repr(str(e.token))
        return ParseError(f"unexpected {found}", line, column)
    if isinstance(e, UnexpectedCharacters):
        return ParseError(f"unexpected character {e.char!r}", line, column)
    return ParseError(str(e).splitlines()[0], line, column)


def parse(text: str) -> Document:
    try:
        tree = _parser().parse(text)
    except UnexpectedInput as e:
        raise _syntax_error(e) from e
    resolver = _Resolver()
    declarations = []
    for decl_tree in tree.children:
        try:
            declarations.append(_declare(resolver, decl_tree))
        except (CarrierMismatch, InvalidStructure, LimitExceeded) as e:
            site = f"line {decl_tree.meta.line}, column {decl_tree.meta.column}"
            raise type(e)(f"{site}: {e}", e.witness) from e
    logger.debug(f"parsed {len(declarations)} declarations")
    return Document(tuple(declarations))


def _block(header: str, lines: list[str]) -> str:
    if not lines:
        return f"{header} {{}}"
    return header + " {\n" + "".join(f"  {line};\n" for line in lines) + "}"


def print_declaration(d: Declaration) -> str:
    v = d.value
    if d.kind == "carrier":
        return f"carrier {d.name} = {v.full()}"
    if d.kind == "relation":
        pairs = [f"({format_label(x)}, {format_label(y)})" for x, y in v.pairs()]
        return _block(f"relation {d.name} : {d.refs[0]} -> {d.refs[1]}", pairs)
    if d.kind == "rules":
        return _block(f"rules {d.name} on {d.refs[0]}", [str(rule) for rule in v])
    if d.kind == "order":
        c = v.carrier
        pairs = [
            f"{format_label(a)} <= {format_label(b)}" for a, b in v.leq.pairs() if c.position(a) != c.position(b)
        ]
        return _block(f"order {d.name} on {d.refs[0]}", pairs)
    if d.kind == "axioms":
        return _block(f"axioms {d.name} on {d.refs[0]}", [str(axiom) for axiom in v.axioms])
    if d.kind == "theory":
        lines = [f"{axiom.premise} |- {format_body(axiom.body)}" for axiom in v.axioms]
        return _block(f"theory {d.name} on {d.refs[0]}", lines)
    if d.kind in ("topology", "presentation"):
        return f"{d.kind} {d.name} = {d.refs[0]} with {d.refs[1]}"
    if d.kind == "space":
        return f"space {d.name} = {d.refs[0]}"
    if d.kind == "morphism":
        return f"morphism {d.name} : {d.refs[0]} -> {d.refs[1]} = ({d.refs[2]}, {d.refs[3]})"
    raise InvalidStructure(f"cannot print a {d.kind}")


def print_document(document: Document) -> str:
    return "".join(print_declaration(d) + "\n" for d in document.declarations)
