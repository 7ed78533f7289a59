"""
Command line surface: `pfl <command> <file> <name...> [flags]`.

`run` renders one command against a parsed document as text, one item per line in canonical order. `main` reads the
file, runs the command and maps errors to exit codes: 1 for syntax errors, 2 for semantic errors and 3 for a failed
universal-property or generation contract.
"""

import sys
from typing import Any, Callable, Sequence

import fsspec
from cyclopts import App

from pfl import bp, cspa
from pfl.bp import BasicPair
from pfl.carrier import Subset, SubsetFamily, format_label
from pfl.dsl import Declaration, Document, parse, print_declaration, print_document
from pfl.ftop import ftm_generators, ftm_theory, is_ftm, point_rules, points, topology_from_rules
from pfl.generation import minimal_generating, strongly_generates
from pfl.geom import enumerate_models
from pfl.relcat import weak_coequaliser, weak_equaliser
from pfl.rules import (
    biclosed_to_elementary,
    binarize,
    elementary_to_biclosed,
    enumerate_biclosed,
    enumerate_closed,
    rules_from_theory,
    theory_from_rules,
)
from pfl.utils import ContractViolation, LimitConfig, ParseError, PflError, ResolutionError, get_logger, set_limits

logger = get_logger(__name__)

app = App(name="pfl", help="Finite rule systems, basic pairs and inductively generated formal topologies.")


def _witness(w: Any) -> str:
    if isinstance(w, tuple):
        return "(" + ", ".join(_witness(part) for part in w) + ")"
    return format_label(w)


def _family(family: SubsetFamily) -> list[str]:
    return [str(member) for member in family]


def _pair_lines(b: BasicPair) -> list[str]:
    return [f"{format_label(x)} |= {b.forces.row_at(i)}" for i, x in enumerate(b.points.elements)]


def _arity(command: str, names: Sequence[str], *counts: int) -> None:
    if len(names) not in counts:
        expected = " or ".join(str(n) for n in counts)
        raise ResolutionError(f"{command} expects {expected} names, got {len(names)}")


def _closed(document: Document, names: Sequence[str]) -> list[str]:
    _arity("closed", names, 1)
    return _family(enumerate_closed(document.get(names[0], "rules")))


def _biclosed(document: Document, names: Sequence[str]) -> list[str]:
    _arity("biclosed", names, 1)
    return _family(enumerate_biclosed(document.get(names[0], "rules")))


def _generators(
    document: Document, names: Sequence[str], minimal: bool = True, full: bool = False, strong: bool = False
) -> list[str]:
    _arity("generators", names, 1)
    decl = document.lookup(names[0])
    if decl.kind == "rules":
        family = enumerate_closed(decl.value)
    elif decl.kind == "theory":
        family = enumerate_models(decl.value)
    elif decl.kind == "topology":
        family = points(decl.value)
    else:
        raise ResolutionError(f"{decl.name} is a {decl.kind}, expected rules or theory or topology")
    generators = minimal_generating(family) if minimal and not full else family
    lines = _family(generators)
    if strong:
        report = strongly_generates(generators, family)
        lines.append("strong: yes" if report else f"strong: no ({report.witness[0]} at {report.witness[1]})")
    return lines


def _models(document: Document, names: Sequence[str]) -> list[str]:
    _arity("models", names, 1)
    return _family(enumerate_models(document.get(names[0], "theory")))


def _weq(document: Document, names: Sequence[str], minimal: bool = True, co: bool = False) -> list[str]:
    _arity("weq", names, 2)
    r1, r2 = (document.get(name, "relation") for name in names)
    if co:
        return _family(weak_coequaliser(r1, r2, minimal=minimal).dual.generators)
    return _family(weak_equaliser(r1, r2, minimal=minimal).generators)


def _bp_eq(document: Document, names: Sequence[str], minimal: bool = True, co: bool = False) -> list[str]:
    _arity("bp-eq", names, 2)
    p1, p2 = (document.get(name, "morphism") for name in names)
    if co:
        return _pair_lines(bp.coequaliser(p1, p2, minimal=minimal).apex)
    return _pair_lines(bp.equaliser(p1, p2, minimal=minimal).apex)


def _cspa_eq(document: Document, names: Sequence[str], minimal: bool = True) -> list[str]:
    _arity("cspa-eq", names, 2)
    p1, p2 = (document.get(name, "morphism") for name in names)
    return _pair_lines(cspa.equaliser(p1, p2, minimal=minimal).apex.underlying)


def _coreflect(document: Document, names: Sequence[str], minimal: bool = True) -> list[str]:
    _arity("coreflect", names, 1, 2)
    cor = cspa.coreflect(document.get(names[0], "space"), minimal=minimal)
    if len(names) == 1:
        return _pair_lines(cor.space.underlying)
    morphism = document.get(names[1], "morphism")
    lifted = cspa.coreflect_morphism(cor, morphism)
    return [f"{format_label(y)} -> {lifted.point_rel.row_at(i)}" for i, y in enumerate(morphism.source.points.elements)]


def _cover(document: Document, names: Sequence[str]) -> list[str]:
    """a <| U for every U minimal among the subsets covering a, leaving out a below some element of U"""
    _arity("cover", names, 1)
    structure = document.get(names[0], "topology", "presentation")
    carrier = structure.carrier
    cov = structure.cover.covered
    lower = structure.order.lower_table
    lines = []
    for u in range(len(cov)):
        covered = int(cov[u]) & ~int(lower[u])
        for i in Subset(carrier, u).indices():
            covered &= ~int(cov[u & ~(1 << i)])
        lines.extend(f"{format_label(a)} <| {Subset(carrier, u)}" for a in Subset(carrier, covered))
    return lines


def _points(document: Document, names: Sequence[str], axiomatic: bool = False) -> list[str]:
    _arity("points", names, 1)
    return _family(points(document.get(names[0], "topology"), axiomatic=axiomatic))


def _check_ftm(document: Document, names: Sequence[str]) -> list[str]:
    _arity("check-ftm", names, 3)
    r = document.get(names[0], "relation")
    source = document.get(names[1], "presentation")
    target = document.get(names[2], "topology")
    report = is_ftm(r, source, target)
    if report:
        return ["ftm: yes"]
    at = f" at {_witness(report.witness)}" if report.witness is not None else ""
    return [f"ftm: no ({report.condition}{at})"]


def _encode_ftm(document: Document, names: Sequence[str], generators: bool = False) -> list[str]:
    _arity("encode-ftm", names, 2)
    source = document.get(names[0], "presentation")
    target = document.get(names[1], "topology")
    if generators:
        return _family(ftm_generators(source, target))
    return [str(axiom) for axiom in ftm_theory(source, target).axioms]


_TRANSLATIONS = (
    "bi_to_elem",
    "elem_to_bi",
    "binarize",
    "rules_to_theory",
    "theory_to_rules",
    "point_rules",
    "rules_to_topology",
)


def _translate(document: Document, names: Sequence[str], **flags: bool) -> list[str]:
    _arity("translate", names, 1)
    chosen = [t for t in _TRANSLATIONS if flags.get(t)]
    if len(chosen) != 1:
        options = ", ".join("--" + t.replace("_", "-") for t in _TRANSLATIONS)
        raise ResolutionError(f"translate needs exactly one of {options}")
    return [print_declaration(d) for d in _translated(document, names[0], chosen[0])]


def _translated(document: Document, name: str, translation: str) -> list[Declaration]:
    if translation == "point_rules":
        decl = document.lookup(name)
        topology = document.get(name, "topology")
        carrier_name = document.lookup(decl.refs[0]).refs[0]
        rules = point_rules(topology)
        return [Declaration("rules", rules.name, rules, (carrier_name,))]
    if translation == "theory_to_rules":
        decl = document.lookup(name)
        rules = rules_from_theory(document.get(name, "theory"))
        fin = f"Fin_{decl.refs[0]}"
        return [Declaration("carrier", fin, rules.carrier), Declaration("rules", rules.name, rules, (fin,))]
    decl = document.lookup(name)
    rules = document.get(name, "rules")
    carrier_name = decl.refs[0]
    if translation == "bi_to_elem":
        out = biclosed_to_elementary(rules)
        return [Declaration("rules", out.name, out, (carrier_name,))]
    if translation == "elem_to_bi":
        out = elementary_to_biclosed(rules)
        return [Declaration("rules", out.name, out, (carrier_name,))]
    if translation == "binarize":
        extended, out = binarize(rules)
        return [Declaration("carrier", extended.name, extended), Declaration("rules", out.name, out, (extended.name,))]
    if translation == "rules_to_theory":
        theory = theory_from_rules(rules)
        return [Declaration("theory", theory.name, theory, (carrier_name,))]
    topology = topology_from_rules(rules)
    fin = f"Fin_{carrier_name}"
    order, axioms = f"{rules.name}_order", f"{rules.name}_axioms"
    return [
        Declaration("carrier", fin, topology.carrier),
        Declaration("order", order, topology.order, (fin,)),
        Declaration("axioms", axioms, topology.axioms, (fin,)),
        Declaration("topology", topology.name, topology, (order, axioms)),
    ]


def _print(document: Document, names: Sequence[str]) -> list[str]:
    if not names:
        return print_document(document).splitlines()
    return "\n".join(print_declaration(document.lookup(name)) for name in names).splitlines()


COMMANDS: dict[str, Callable[..., list[str]]] = {
    "closed": _closed,
    "biclosed": _biclosed,
    "generators": _generators,
    "models": _models,
    "weq": _weq,
    "bp-eq": _bp_eq,
    "cspa-eq": _cspa_eq,
    "coreflect": _coreflect,
    "cover": _cover,
    "points": _points,
    "check-ftm": _check_ftm,
    "encode-ftm": _encode_ftm,
    "translate": _translate,
    "print": _print,
}


def run(command: str, document: Document, names: Sequence[str] = (), **flags: Any) -> str:
    """Render `command` over the named declarations of `document`, one item per line"""
    if command not in COMMANDS:
        raise ResolutionError(f"unknown command {command}")
    lines = COMMANDS[command](document, list(names), **flags)
    return "".join(line + "\n" for line in lines)


def _execute(command: str, file: str, names: Sequence[str], limit: int | None, **flags: Any) -> None:
    if limit is not None:
        set_limits(LimitConfig(powerset=limit))
    with fsspec.open(file, "rb") as f:
        raw = f.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"input is not valid UTF-8 at byte {e.start}") from e
    document = parse(text)
    logger.info(f"{command} {file} {' '.join(names)}")
    sys.stdout.write(run(command, document, names, **flags))


@app.command(name="closed")
def closed_command(file: str, name: str, *, limit: int | None = None):
    """Closed subsets of a rule set."""
    _execute("closed", file, [name], limit)


@app.command(name="biclosed")
def biclosed_command(file: str, name: str, *, limit: int | None = None):
    """Biclosed subsets of a rule set."""
    _execute("biclosed", file, [name], limit)


@app.command(name="generators")
def generators_command(
    file: str,
    name: str,
    *,
    minimal: bool = True,
    full: bool = False,
    strong: bool = False,
    limit: int | None = None,
):
    """Generating family of the closed subsets, models or points of NAME; minimal unless --full."""
    _execute("generators", file, [name], limit, minimal=minimal, full=full, strong=strong)


@app.command(name="models")
def models_command(file: str, name: str, *, limit: int | None = None):
    """Models of a geometric theory."""
    _execute("models", file, [name], limit)


@app.command(name="weq")
def weq_command(
    file: str, first: str, second: str, *, minimal: bool = True, co: bool = False, limit: int | None = None
):
    """Generators of the weak equaliser (or, with --co, coequaliser) of two relations."""
    _execute("weq", file, [first, second], limit, minimal=minimal, co=co)


@app.command(name="bp-eq")
def bp_eq_command(
    file: str, first: str, second: str, *, minimal: bool = True, co: bool = False, limit: int | None = None
):
    """Equaliser (or, with --co, coequaliser) of two relation pairs between basic pairs."""
    _execute("bp-eq", file, [first, second], limit, minimal=minimal, co=co)


@app.command(name="cspa-eq")
def cspa_eq_command(file: str, first: str, second: str, *, minimal: bool = True, limit: int | None = None):
    """Equaliser of two convergent relation pairs between concrete spaces."""
    _execute("cspa-eq", file, [first, second], limit, minimal=minimal)


@app.command(name="coreflect")
def coreflect_command(
    file: str, space: str, morphism: str | None = None, *, minimal: bool = True, limit: int | None = None
):
    """Concrete space coreflecting a basic pair; with a morphism into it, the lifted point relation."""
    names = [space] if morphism is None else [space, morphism]
    _execute("coreflect", file, names, limit, minimal=minimal)


@app.command(name="cover")
def cover_command(file: str, name: str, *, limit: int | None = None):
    """Non-trivial minimal covers of a topology or presentation."""
    _execute("cover", file, [name], limit)


@app.command(name="points")
def points_command(file: str, name: str, *, axiomatic: bool = False, limit: int | None = None):
    """Points of an inductively generated topology."""
    _execute("points", file, [name], limit, axiomatic=axiomatic)


@app.command(name="check-ftm")
def check_ftm_command(file: str, relation: str, source: str, target: str, *, limit: int | None = None):
    """Whether a relation is a formal topology map from a presentation to a topology."""
    _execute("check-ftm", file, [relation, source, target], limit)


@app.command(name="encode-ftm")
def encode_ftm_command(
    file: str, source: str, target: str, *, generators: bool = False, limit: int | None = None
):
    """Geometric theory of the formal topology maps; --generators lists a minimal generating family of graphs."""
    _execute("encode-ftm", file, [source, target], limit, generators=generators)


@app.command(name="translate")
def translate_command(
    file: str,
    name: str,
    *,
    bi_to_elem: bool = False,
    elem_to_bi: bool = False,
    binarize: bool = False,
    rules_to_theory: bool = False,
    theory_to_rules: bool = False,
    point_rules: bool = False,
    rules_to_topology: bool = False,
    limit: int | None = None,
):
    """Translate a rule set, theory or topology into declarations."""
    flags = dict(
        bi_to_elem=bi_to_elem,
        elem_to_bi=elem_to_bi,
        binarize=binarize,
        rules_to_theory=rules_to_theory,
        theory_to_rules=theory_to_rules,
        point_rules=point_rules,
        rules_to_topology=rules_to_topology,
    )
    _execute("translate", file, [name], limit, **flags)


@app.command(name="print")
def print_command(file: str, *names: str, limit: int | None = None):
    """Canonical rendering of the document, or of the named declarations."""
    _execute("print", file, list(names), limit)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        app(list(argv) if argv is not None else None)
    except ContractViolation as e:
        print(f"error: {e}", file=sys.stderr)
        if e.witness is not None:
            print(f"witness: {_witness(e.witness)}", file=sys.stderr)
        return e.exit_code
    except PflError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    finally:
        set_limits(None)
    return 0


if __name__ == "__main__":
    sys.exit(main())
