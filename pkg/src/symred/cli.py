"""Command-line front end.

Workspaces come from .sr files or `builtin:<id>`.  Every command prints
a human-readable report and, with --json PATH, a versioned machine
report; identical invocations with the same --seed produce byte
identical JSON.

Exit codes: 0 clean, 1 usage or resolution errors, 2 when an analysis
raised a flag (non-generic rank behaviour, residual over tolerance,
failed symmetry).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import (
    AnalysisError,
    classify_transversality,
    constant_kernel_generators,
    defect,
    max_abs_on_points,
    symmetry_check,
    weak_check_candidate,
    weak_minors,
)
from .dsl import DslError, Workspace, load_workspace, workspace_from_entry, workspace_to_text
from .expr import ExpressionError, free_variables, to_text
from .jets import JetError, key_of_variable, sample_points
from .models import MODEL_IDS, ModelError, builtin, residual, resolve_candidate
from .numeric import EvaluationError
from .parser import ParseError
from .sampling import SamplePlan, SamplingError

USAGE_ERROR, FLAGGED = 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; our contract wants 1
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="symred",
                     description="Symmetry reduction analyses over workspaces")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, candidate_required=False, algebra=True):
        p.add_argument("workspace",
                       help=".sr file or builtin:<id> (%s)" % ", ".join(MODEL_IDS))
        if algebra:
            p.add_argument("--algebra", required=True, help="algebra name")
        p.add_argument("--candidate", required=candidate_required,
                       help="candidate name")
        p.add_argument("--seed", type=int, default=None,
                       help="base seed; three consecutive seeds are used")
        p.add_argument("--samples", type=int, default=None,
                       help="points per seed")
        p.add_argument("--tol", type=float, default=None,
                       help="residual tolerance where the command verifies"
                            " values (rank pivots use scale-aware internal"
                            " tolerances)")
        p.add_argument("--json", dest="json_path", default=None,
                       help="also write the report as JSON to this path")

    p = sub.add_parser("classify", help="strong/weak transversality ranks")
    common(p)
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("defect", help="defect delta of a candidate")
    common(p, candidate_required=True)
    p.set_defaults(handler=_cmd_defect)

    p = sub.add_parser("verify", help="per-equation residuals of a candidate")
    common(p, candidate_required=True, algebra=False)
    p.add_argument("--system", default=None,
                   help="system name for file workspaces with several")
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("minors", help="weak transversality minors of Xi2")
    common(p)
    p.set_defaults(handler=_cmd_minors)

    p = sub.add_parser("kernel", help="constant kernel of Q on a candidate")
    common(p, candidate_required=True)
    p.set_defaults(handler=_cmd_kernel)

    p = sub.add_parser("symcheck", help="prolonged field annihilates the system"
                                        " on a donor solution")
    common(p, candidate_required=True, algebra=False)
    p.add_argument("--field", required=True, help="vector field name")
    p.add_argument("--system", default=None, help="system name for files")
    p.set_defaults(handler=_cmd_symcheck)

    p = sub.add_parser("models", help="list built-in models")
    p.add_argument("--export", default=None, metavar="ID",
                   help="print the DSL text of one built-in entry")
    p.add_argument("--json", dest="json_path", default=None)
    p.set_defaults(handler=_cmd_models, seed=None, samples=None, tol=None)

    return parser


# ---------------------------------------------------------------------------
# plumbing

def _load(args):
    name = args.workspace
    if name.startswith("builtin:"):
        entry = builtin(name[len("builtin:"):])
        return workspace_from_entry(entry), entry
    return load_workspace(name), None


def _tuned(plan: SamplePlan, args) -> SamplePlan:
    changes = {}
    if args.seed is not None:
        changes["seeds"] = (args.seed, args.seed + 1, args.seed + 2)
    if args.samples is not None:
        changes["count"] = args.samples
        changes["min_accepted"] = max(4, int(0.6 * args.samples))
    return plan.with_(**changes) if changes else plan


def _algebra(ws: Workspace, name: str):
    try:
        return ws.algebras[name]
    except KeyError:
        raise _UsageError("no algebra %r; available: %s"
                          % (name, ", ".join(sorted(ws.algebras)) or "none"))


def _candidate(ws: Workspace, entry, name: str, args):
    """Resolve a candidate plus its sampling plan, honoring overrides."""
    if entry is not None:
        try:
            entry2, cand, plan = resolve_candidate(entry, name, None)
        except ModelError as err:
            raise _UsageError(str(err))
        return entry2, cand, _tuned(plan, args)
    try:
        cand = ws.candidates[name]
    except KeyError:
        raise _UsageError("no candidate %r; available: %s"
                          % (name, ", ".join(sorted(ws.candidates)) or "none"))
    return None, cand, _tuned(ws.plan_for(name), args)


def _system(ws: Workspace, entry, args):
    if entry is not None:
        return entry.id, entry.equations, entry.order
    if not ws.systems:
        raise _UsageError("workspace declares no system")
    name = getattr(args, "system", None)
    if name is None:
        if len(ws.systems) > 1:
            raise _UsageError("workspace has several systems; pick one with"
                              " --system (%s)" % ", ".join(sorted(ws.systems)))
        name = next(iter(ws.systems))
    try:
        eqs = ws.systems[name]
    except KeyError:
        raise _UsageError("no system %r; available: %s"
                          % (name, ", ".join(sorted(ws.systems))))
    order = 1
    for eq in eqs:
        for varname in free_variables(eq):
            key = key_of_variable(ws.space, varname)
            if key is not None:
                order = max(order, key.order)
    return name, eqs, order


def _emit(args, report: dict, flagged: bool) -> int:
    if args.json_path:
        doc = {
            "schema": 1,
            "command": args.command,
            "workspace": getattr(args, "workspace", None),
            "seed": args.seed,
            "samples": args.samples,
            "tol": args.tol,
            "flagged": flagged,
            "report": report,
        }
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
        Path(args.json_path).write_text(text, encoding="utf-8")
    return FLAGGED if flagged else 0


# ---------------------------------------------------------------------------
# commands

def _cmd_classify(args) -> int:
    ws, entry = _load(args)
    alg = _algebra(ws, args.algebra)
    cand = None
    if args.candidate is not None:
        _, cand, plan = _candidate(ws, entry, args.candidate, args)
    elif entry is not None:
        plan = _tuned(entry.algebra_plan(args.algebra), args)
    else:
        plan = _tuned(ws.plan_for(args.algebra), args)
    rep = classify_transversality(alg, plan, cand)
    strong = "HOLDS" if rep.status == "Strong" else "VIOLATED"
    print("algebra %s: rank Xi1=%d, rank Xi2=%d, strong transversality %s"
          % (alg.name, rep.rank_xi1, rep.rank_xi2, strong))
    if cand is not None:
        weak = "HOLDS" if rep.weak_status == "WeakHolds" else "FAILS"
        print("candidate %s: weak transversality %s" % (cand.name, weak))
    return _emit(args, rep.to_dict(), rep.non_generic)


def _cmd_defect(args) -> int:
    ws, entry = _load(args)
    alg = _algebra(ws, args.algebra)
    _, cand, plan = _candidate(ws, entry, args.candidate, args)
    rep = defect(alg, cand, plan)
    print("generators: %s" % " ".join(f.name for f in alg.fields))
    print("defect delta=%d (m0=%d, orbit rank s=%d): %s"
          % (rep.delta, rep.m0, rep.orbit_rank, rep.classification))
    return _emit(args, rep.to_dict(), rep.non_generic)


def _cmd_verify(args) -> int:
    ws, entry = _load(args)
    tol = args.tol if args.tol is not None else 1e-8
    if entry is not None:
        _, cand, plan = _candidate(ws, entry, args.candidate, args)
        values = residual(entry, args.candidate, plan)
        system_name = entry.id
    else:
        system_name, eqs, order = _system(ws, entry, args)
        _, cand, plan = _candidate(ws, entry, args.candidate, args)
        points = sample_points(cand, plan, order)
        values = {"eq%d" % (i + 1): max_abs_on_points(e, points, plan)
                  for i, e in enumerate(eqs)}
    worst = max(values.values())
    for name, value in values.items():
        print("%-12s %.6e" % (name, value))
    verdict = "PASS" if worst < tol else "FAIL"
    print("max residual %.6e (%s at tol %.1e) for %s on %s"
          % (worst, verdict, tol, cand.name, system_name))
    report = {"system": system_name, "candidate": cand.name,
              "residuals": values, "max": worst, "pass": worst < tol}
    return _emit(args, report, worst >= tol)


def _cmd_minors(args) -> int:
    ws, entry = _load(args)
    alg = _algebra(ws, args.algebra)
    if args.candidate is not None:
        _, cand, plan = _candidate(ws, entry, args.candidate, args)
    else:
        cand, plan = None, _tuned(ws.plan_for(args.algebra), args)
    try:
        minors = weak_minors(alg, plan)
    except AnalysisError as err:
        print("no minors: %s" % err)
        return _emit(args, {"minors": [], "note": str(err)}, False)
    print("%d distinct minors (rank Xi1 + 1 sized) of Xi2:" % len(minors))
    for det in minors:
        print("  %s" % to_text(det))
    report = {"minors": [to_text(d) for d in minors]}
    flagged = False
    if cand is not None:
        order = max((key_of_variable(ws.space, n).order
                     for det in minors for n in free_variables(det)
                     if key_of_variable(ws.space, n) is not None), default=1)
        points = sample_points(cand, plan, max(order, 1))
        worst = max(max_abs_on_points(det, points, plan) for det in minors)
        holds = weak_check_candidate(alg, cand, plan)
        print("max |minor| on %s: %.6e -> weak transversality %s"
              % (cand.name, worst, "HOLDS" if holds else "FAILS"))
        report["candidate"] = cand.name
        report["max_on_candidate"] = worst
        report["weak_holds"] = holds
    return _emit(args, report, flagged)


def _cmd_kernel(args) -> int:
    ws, entry = _load(args)
    alg = _algebra(ws, args.algebra)
    _, cand, plan = _candidate(ws, entry, args.candidate, args)
    hints = None
    if entry is not None:
        hints = entry.kernel_hints.get(args.candidate, {}).get(args.algebra)
    rep = constant_kernel_generators(alg, cand, plan, named_combinations=hints)
    print("generators: %s" % " ".join(rep.generator_order))
    print("pointwise kernel dimension: %d" % rep.pointwise_kernel_dim)
    print("constant kernel dimension: %d" % len(rep.constant_kernel))
    for row in rep.constant_kernel:
        print("  [%s]" % ", ".join("%.6g" % x for x in row))
    if rep.matched_combination:
        print("matches named combination: %s" % rep.matched_combination)
    return _emit(args, rep.to_dict(), rep.non_generic)


def _cmd_symcheck(args) -> int:
    ws, entry = _load(args)
    system_name, eqs, order = _system(ws, entry, args)
    _, cand, plan = _candidate(ws, entry, args.candidate, args)
    try:
        field = ws.fields[args.field]
    except KeyError:
        raise _UsageError("no field %r; available: %s"
                          % (args.field, ", ".join(sorted(ws.fields)) or "none"))
    ok = symmetry_check(eqs, field, cand, plan, order)
    print("pr %s annihilates %s on solution %s: %s"
          % (field.name, system_name, cand.name, "yes" if ok else "NO"))
    report = {"system": system_name, "field": field.name,
              "candidate": cand.name, "symmetry": ok}
    return _emit(args, report, not ok)


def _cmd_models(args) -> int:
    if args.export is not None:
        entry = builtin(args.export)
        sys.stdout.write(workspace_to_text(workspace_from_entry(entry)))
        return 0
    listing = {}
    for model_id in MODEL_IDS:
        entry = builtin(model_id)
        print("%s: %d equations on (%s | %s)"
              % (model_id, len(entry.equations),
                 ", ".join(entry.space.independents),
                 ", ".join(entry.space.dependents)))
        print("  algebras:   %s" % ", ".join(sorted(entry.algebras)))
        print("  candidates: %s" % ", ".join(
            name + ("*" if name in entry.solutions else "")
            for name in sorted(entry.candidates)))
        listing[model_id] = {
            "equations": len(entry.equations),
            "algebras": sorted(entry.algebras),
            "candidates": sorted(entry.candidates),
            "solutions": sorted(entry.solutions),
        }
    print("(* = certified exact solution)")
    if args.json_path:
        args.command, args.workspace = "models", None
        return _emit(args, listing, False)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print("symred: %s" % err, file=sys.stderr)
        return USAGE_ERROR
    try:
        return args.handler(args)
    except _UsageError as err:
        print("symred: %s" % err, file=sys.stderr)
        return USAGE_ERROR
    except (DslError, ModelError, ParseError, ExpressionError, JetError,
            EvaluationError, AnalysisError, SamplingError,
            FileNotFoundError) as err:
        print("symred: %s" % err, file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
