"""Command-line frontend: results table, class decisions, simulations, attacks and traces.

Exit codes: 0 success or match, 1 mismatch with the expected data, 2 budget
exhausted, 3 usage error.
"""

from __future__ import annotations

import json
import sys
from importlib import resources

import click

from . import experiments as ex
from .abd import make_abd
from .abd_cert import MUTATIONS, abd_dr_certificate, default_certificate_bounds
from .classes import (
    ClassId,
    check_lazy_read_window,
    decide_class,
    decide_class_lts,
    dr_lin,
    fixture,
    lazify,
    lazy_flags,
    map_tree,
    validate_mapping,
    wsr_lin,
)
from .errors import BudgetExceeded, LinlabError
from .lts import HarnessBounds, compose, enumerate_executions
from .programs import make_program
from .registers import make_register, parse_kind
from .relcomp import make_generic_complete
from .serialize import tree_dot, tree_json, tree_text
from .simulation import weak_sim

EXIT_OK, EXIT_MISMATCH, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 3


def load_data(name: str) -> dict:
    return json.loads(resources.files("linlab").joinpath("data").joinpath(name).read_text(encoding="utf-8"))


def golden() -> dict:
    return load_data("golden.json")


# ---------------------------------------------------------------- bounds parsing

SIM_HARNESS = {"threads": ("A", "B", "C"), "ops": 1, "menu": {"A": "w1", "B": "w2", "C": "r"}}


def _list(text: str) -> list[str]:
    return [t for t in text.split("/") if t]


def parse_bounds(text: str | None, base: HarnessBounds) -> HarnessBounds:
    """Apply `key=value,...` overrides: threads=A/B, ops=2 or A:1/B:2, values=0/1/2,
    menu=A:w1/B:w2+r, depth=16, cap=100000."""
    if not text:
        return base
    changes: dict = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not value:
            raise click.UsageError(f"bad bounds item {item!r}; expected key=value")
        try:
            if key == "threads":
                changes["threads"] = tuple(_list(value))
            elif key == "ops":
                if ":" in value:
                    changes["ops"] = {t: int(n) for t, n in (p.split(":") for p in _list(value))}
                else:
                    changes["ops"] = int(value)
            elif key == "values":
                changes["values"] = tuple(int(v) for v in _list(value))
            elif key == "menu":
                changes["menu"] = {t: calls.split("+") for t, calls in (p.split(":") for p in _list(value))}
            elif key in ("depth", "max_depth"):
                changes["max_depth"] = int(value)
            elif key in ("cap", "node_cap"):
                changes["node_cap"] = int(value)
            else:
                raise click.UsageError(f"unknown bounds key {key!r}")
        except ValueError as err:
            raise click.UsageError(f"bad bounds item {item!r}: {err}") from None
    if "threads" in changes and "menu" not in changes and base.menu is not None:
        changes["menu"] = None
    return base.replace(**changes)


def emit(ctx_format: str, payload: dict, text: str) -> None:
    if ctx_format == "json":
        click.echo(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=False))
    else:
        click.echo(text)


format_option = click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
bounds_option = click.option("--bounds", "bounds_text", default=None, help="Harness overrides: key=value,...")


def _kind(value: str) -> str:
    try:
        parse_kind(value)
    except LinlabError as err:
        raise click.BadParameter(str(err)) from None
    return value.lower()


@click.group()
def cli() -> None:
    """Bounded model checking for linearizability classes of register implementations."""


# ---------------------------------------------------------------- table

_FAMILY = {"abd": "abd:3", "kload": "dlr", "dlr": "dlr", "atr": "atr", "tnsr": "tnsr"}


@cli.command()
@click.option("--golden", "golden_mode", is_flag=True, help="Exit 1 unless the matrix matches the expected one.")
@click.option("--impl", "impls", multiple=True, help="Replace the column of the same family, e.g. abd:2 or kload:1.")
@click.option("--workers", type=int, default=None, help="Parallel cells (default: LINLAB_WORKERS or 1).")
@bounds_option
@format_option
def table(golden_mode, impls, workers, bounds_text, fmt):
    """Attack every program/implementation cell of the results table."""
    columns = list(ex.TABLE_IMPLS)
    replaced = []
    for kind in impls:
        kind = _kind(kind)
        name, _ = parse_kind(kind)
        slot = _FAMILY.get(name)
        if slot is None or slot not in columns:
            raise click.UsageError(f"{kind} does not replace a table column")
        columns[columns.index(slot)] = kind
        replaced.append(kind)
    bounds = parse_bounds(bounds_text, HarnessBounds())
    result = ex.run_table(bounds, tuple(columns), workers=workers)
    payload = result.to_json()
    status = EXIT_OK
    if golden_mode:
        expected = _expected_matrix(columns, replaced)
        payload["expected"] = expected
        payload["matches"] = result.rows() == expected
        status = EXIT_OK if payload["matches"] else EXIT_MISMATCH
    text = result.to_text()
    if golden_mode:
        text += "\ngolden: " + ("match" if status == EXIT_OK else "MISMATCH")
    emit(fmt, payload, text)
    sys.exit(status)


def _expected_matrix(columns: list[str], replaced: list[str]) -> dict[str, str]:
    data = golden()
    base = data["table"]
    rows = {p: list(r) for p, r in base["rows"].items()}
    for kind in replaced:
        variant = data["table_variants"].get(kind)
        if variant is None:
            raise click.UsageError(f"no expected column for {kind}")
        col = columns.index(kind)
        for p, cell in variant.items():
            rows[p][col] = cell
    return {p: "".join(r) for p, r in rows.items()}


# ---------------------------------------------------------------- classify


def class_harness(ops: int) -> HarnessBounds:
    """Writers A (value 1) and B (value 2) share `ops` writes; C reads once."""
    if ops < 1:
        raise click.UsageError("--ops must be >= 1")
    a, b = (ops + 1) // 2, ops // 2
    threads = ("A", "B", "C") if b else ("A", "C")
    counts = {"A": a, "B": b, "C": 1} if b else {"A": a, "C": 1}
    menu = {"A": "w1", "B": "w2", "C": "r"}
    return HarnessBounds(threads=threads, ops=counts, menu={t: menu[t] for t in threads}, max_depth=16)


@cli.command()
@click.option("--fixture", "fixture_name", default=None, help="ex41, ex42 or ex62.")
@click.option("--impl", "impl", default=None, help="Implementation kind or relcomp:<Any|Prefix|WritePrefix|Subsequence>.")
@click.option("--class", "classes", multiple=True, help="Classes to decide (default: all).")
@click.option("--ops", type=int, default=2, show_default=True, help="Writes in the default harness.")
@click.option("--golden", "golden_mode", is_flag=True, help="Compare fixture verdicts with the expected data.")
@bounds_option
@format_option
def classify(fixture_name, impl, classes, ops, golden_mode, bounds_text, fmt):
    """Decide the linearizability classes of a fixture tree or a bounded implementation."""
    if (fixture_name is None) == (impl is None):
        raise click.UsageError("give exactly one of --fixture or --impl")
    try:
        wanted = [ClassId.parse(c) for c in classes] or list(ClassId)
    except LinlabError as err:
        raise click.UsageError(str(err)) from None
    payload: dict = {"verdicts": {}}
    lines = []
    status = EXIT_OK
    if fixture_name is not None:
        tree = fixture(fixture_name)
        payload.update(subject=fixture_name, kind="fixture", nodes=len(tree))
        for cls in wanted:
            d = decide_class(tree, cls)
            payload["verdicts"][cls.value] = d.verdict
            lines.append(f"{cls.value}: {d.verdict}")
            if d.witness is not None:
                payload.setdefault("witnesses", {})[cls.value] = d.witness.to_json()
        if golden_mode:
            expected = golden()["fixtures"][fixture_name]
            ok = all(payload["verdicts"][c] == expected[c] for c in payload["verdicts"])
            payload["matches"] = ok
            lines.append("golden: " + ("match" if ok else "MISMATCH"))
            status = EXIT_OK if ok else EXIT_MISMATCH
    else:
        bounds = parse_bounds(bounds_text, class_harness(ops))
        lts = _classify_lts(impl, bounds)
        payload.update(subject=lts.name, kind="implementation", bounds=bounds.describe())
        lines.append(f"{lts.name} under {_bounds_line(bounds)} (verdicts hold for these bounds only)")
        for cls in wanted:
            d = decide_class_lts(lts, bounds, cls)
            payload["verdicts"][cls.value] = d.verdict
            lines.append(f"{cls.value}: {d.verdict}")
        canon = {"wsr": (wsr_lin, ClassId.WRITE_STRONG), "dr": (dr_lin, ClassId.DECISIVE)}.get(impl.lower())
        if canon is not None:
            lin, cls = canon
            tree = enumerate_executions(lts, bounds)
            lmap = map_tree(tree, lin)
            lazy = lazify(tree, lmap)
            flags = lazy_flags(tree, lazy)
            report = {
                "map": lin.__name__,
                "class": cls.value,
                "nodes": len(tree),
                "valid": validate_mapping(tree, lmap, cls),
                "raw_flags": lazy_flags(tree, lmap).as_dict(),
                "lazified_valid": validate_mapping(tree, lazy, ClassId.DECISIVE),
                "lazified_flags": flags.as_dict(),
                "read_window": check_lazy_read_window(tree, lazy) if flags.all else None,
            }
            payload["canonical_map"] = report
            lines.append(
                f"{lin.__name__}: {cls.value} map valid={report['valid']} on {len(tree)} nodes; "
                f"lazified flags={flags.all} read window={report['read_window']}"
            )
            if not report["valid"]:
                status = EXIT_MISMATCH
    emit(fmt, payload, "\n".join(lines))
    sys.exit(status)


def _classify_lts(impl: str, bounds: HarnessBounds):
    head, _, arg = impl.partition(":")
    if head.lower() == "relcomp":
        try:
            return make_generic_complete(arg or "Any", bounds)
        except LinlabError as err:
            raise click.UsageError(str(err)) from None
    return make_register(_kind(impl), bounds)


def _bounds_line(bounds: HarnessBounds) -> str:
    calls = " ".join(f"{t}:{'+'.join(c)}x{bounds.ops_of(t)}" for t, c in bounds.describe()["calls"].items())
    return f"{calls} depth={bounds.max_depth}"


# ---------------------------------------------------------------- simulate


@cli.command()
@click.option("--from", "source", required=True, help="Concrete implementation kind.")
@click.option("--to", "target", required=True, help="Abstract implementation kind.")
@click.option("--mode", type=click.Choice(["fixpoint", "certificate"]), default="fixpoint", show_default=True)
@click.option("--saturate", is_flag=True, help="Match with full weak steps instead of lazy matching.")
@click.option("--no-prune", is_flag=True, help="Keep dead ABD query messages.")
@click.option("--mutation", type=click.Choice([m for m in MUTATIONS if m]), default=None)
@click.option("--expect", type=click.Choice(["Simulated", "NotSimulated", "CertificateValid", "CertificateViolated"]), default=None)
@bounds_option
@format_option
def simulate(source, target, mode, saturate, no_prune, mutation, expect, bounds_text, fmt):
    """Check a weak forward simulation (fixpoint) or the ABD-to-DR certificate."""
    source, target = _kind(source), _kind(target)
    src_name, n = parse_kind(source)
    if mode == "certificate":
        if src_name != "abd" or target != "dr":
            raise click.UsageError("certificate mode checks abd:<n> against dr")
        bounds = parse_bounds(bounds_text, default_certificate_bounds(n))
        report = abd_dr_certificate(n, bounds, mutation=mutation, prune_queries=not no_prune)
        payload = report.to_json()
        verdict = payload["verdict"]
        text = f"{source} -> {target}: {verdict} ({report.pairs} triples, {report.transitions} transitions)"
        for v in report.violations:
            text += f"\n  violation {v.kind} at {v.label}: {v.detail}"
    else:
        if mutation:
            raise click.UsageError("--mutation applies to certificate mode")
        bounds = parse_bounds(bounds_text, HarnessBounds(**SIM_HARNESS))
        concrete = make_abd(n, bounds, prune_queries=not no_prune) if src_name == "abd" else make_register(source, bounds)
        tgt_name, m = parse_kind(target)
        abstract = make_abd(m, bounds, prune_queries=not no_prune) if tgt_name == "abd" else make_register(target, bounds)
        cap = bounds.node_cap if bounds.node_cap is not None else 5_000_000
        result = weak_sim(concrete, abstract, pair_cap=cap, keep_relation=False, saturate=saturate)
        payload = result.to_json() | {"bounds": bounds.describe()}
        verdict = result.verdict
        text = f"{source} -> {target}: {verdict} ({result.pairs_explored} pairs explored)"
        if result.counterexample is not None:
            ce = result.counterexample
            text += f"\n  initial pair fails on: {ce.get('unmatched_label')}"
            stuck = ce.get("stuck_pair")
            if stuck:
                text += f"\n  stuck after: {', '.join(stuck['concrete_trace'])}"
                text += f"\n  unmatched label there: {stuck['unmatched_label']}"
    payload["mode"] = mode
    status = EXIT_OK
    if expect is not None:
        payload["expected"] = expect
        status = EXIT_OK if verdict == expect else EXIT_MISMATCH
    emit(fmt, payload, text)
    sys.exit(status)


# ---------------------------------------------------------------- attack / generate


@cli.command()
@click.option("--program", "program", required=True, help="P1, P2, P3 or P4.")
@click.option("--impl", "impl", required=True, help="Implementation kind.")
@click.option("--no-prune", is_flag=True, help="Keep dead ABD query messages.")
@bounds_option
@format_option
def attack(program, impl, no_prune, bounds_text, fmt):
    """Search for an adversary that forces a = b (and report anti-correlation)."""
    impl = _kind(impl)
    bounds = parse_bounds(bounds_text, HarnessBounds())
    prog = make_program(program, bounds.values)
    obj = ex.make_impl(impl, prog.bounds, prune_queries=not no_prune)
    result = ex.correlation_attack(prog, obj, bounds)
    verdict = ex.FAIL if result.violated else ex.PASS
    payload = {
        "program": prog.name,
        "impl": obj.name,
        "verdict": verdict,
        "states": result.states,
        "coin_states": result.coin_states,
        "witness": None if result.witness is None else result.witness.to_json(),
        "anti_correlation": None if result.anti is None else result.anti.to_json(),
    }
    lines = [f"{prog.name} with {obj.name}: {verdict} ({result.states} states, {result.coin_states} coin states)"]
    comp = compose(prog, obj)
    if result.witness is not None:
        lines.append(result.witness.to_text(comp))
    else:
        lines.append("no adversary forces a = b at these bounds")
    if result.anti is not None:
        lines.append("anti-correlation: an adversary also forces a != b")
    emit(fmt, payload, "\n".join(lines))
    sys.exit(EXIT_OK)


@cli.command()
@click.option("--target", "target_name", required=True, help="T1, T2, T3 or T4.")
@click.option("--impl", "impl", required=True, help="Implementation kind.")
@click.option("--program", "program", default=None, help="Defaults to the target's program.")
@format_option
def generate(target_name, impl, program, fmt):
    """Decide whether one deterministic script generates a target trace set."""
    impl = _kind(impl)
    try:
        targets = ex.target(target_name)
    except LinlabError as err:
        raise click.UsageError(str(err)) from None
    program = program or ex.TARGET_PROGRAMS[target_name.upper()]
    prog = make_program(program)
    obj = ex.make_impl(impl, prog.bounds)
    witness = ex.generate(prog, obj, targets)
    payload = {
        "program": prog.name,
        "impl": obj.name,
        "target": target_name.upper(),
        "generable": witness is not None,
        "traces": [str(t) for t in targets],
        "script": None if witness is None else witness.to_json(),
    }
    lines = [f"{target_name.upper()} on {prog.name} with {obj.name}: {'generable' if witness else 'not generable'}"]
    if witness is not None:
        lines.append(witness.to_text())
    emit(fmt, payload, "\n".join(lines))
    sys.exit(EXIT_OK)


# ---------------------------------------------------------------- trace


@cli.command()
@click.option("--impl", "impl", default=None, help="Enumerate this implementation's execution tree.")
@click.option("--program", "program", default=None, help="Compose with a program before enumerating.")
@click.option("--fixture", "fixture_name", default=None, help="Dump a fixture tree.")
@click.option("--script", "script", default=None, help="Run a scripted adversary and print both branches.")
@bounds_option
@click.option("--format", "fmt", type=click.Choice(["text", "json", "dot"]), default="text", show_default=True)
def trace(impl, program, fixture_name, script, bounds_text, fmt):
    """Dump execution trees or scripted runs."""
    if script is not None:
        run = ex.run_script(ex.scripted(script))
        payload = run.to_json()
        lines = [f"{script}: {run.script.program} with {run.script.impl}, target {run.script.target} "
                 f"{'matched' if run.matches_target() else 'NOT matched'}"]
        for c in (1, 2):
            lines.append(f"# coin={c}: {run.traces[c]}")
            lines += [f"  {lab}" for lab in run.runs[c]]
        if fmt == "dot":
            raise click.UsageError("scripted runs have no DOT form")
        emit(fmt, payload, "\n".join(lines))
        sys.exit(EXIT_OK if run.matches_target() else EXIT_MISMATCH)
    if fixture_name is not None:
        tree = fixture(fixture_name)
    elif impl is not None:
        base = HarnessBounds(**SIM_HARNESS, max_depth=16)
        if program is not None:
            prog = make_program(program)
            bounds = parse_bounds(bounds_text, prog.bounds.replace(max_depth=64))
            lts = compose(prog, ex.make_impl(_kind(impl), prog.bounds, prune_queries=False))
        else:
            bounds = parse_bounds(bounds_text, base)
            lts = _classify_lts(impl, bounds)
        tree = enumerate_executions(lts, bounds)
    else:
        raise click.UsageError("give --impl, --fixture or --script")
    if fmt == "dot":
        click.echo(tree_dot(tree), nl=False)
    elif fmt == "json":
        click.echo(json.dumps(tree_json(tree), indent=1))
    else:
        click.echo(tree_text(tree), nl=False)
    sys.exit(EXIT_OK)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="linlab", standalone_mode=False)
    except SystemExit as stop:
        return int(stop.code or 0)
    except click.exceptions.Exit as stop:
        return stop.exit_code
    except click.UsageError as err:
        err.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except BudgetExceeded as err:
        click.echo(f"budget exhausted: {err}", err=True)
        return EXIT_BUDGET
    except LinlabError as err:
        click.echo(f"error: {err}", err=True)
        return EXIT_USAGE
    except ValueError as err:
        click.echo(f"error: {err}", err=True)
        return EXIT_USAGE
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    entry()
