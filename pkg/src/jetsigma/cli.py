"""Command-line front end: load a session file, run checks, and emit a
human-readable or JSON report with a deterministic layout."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import sympy as sp

from .equivalence import (
    gauge_transform_sigma,
    mu_sigma_bridge,
    sigma_from_A,
    standardizing_roundtrip,
    verify_A_sigma,
)
from .exprs import Expr, ExprError, ZeroVerdict, is_zero, print_expr
from .involution import (
    ClosureExceededError,
    NotInvolutiveError,
    close_under_bracket,
    check_involution_transfer,
    structure_functions,
)
from .invariants import generate_invariants
from .jets import VectorFieldSet, lie_bracket
from .oracle import integrate, invariant_along_trajectory
from .prolong import SigmaMatrix, sigma_prolong, standard_prolong
from .reduction import reconstruction_check, reduce_system, solve_for_highest, verify_sigma_symmetry
from .session import MissingSessionDataError, Session, dump_reduced_session, load_session

COMMANDS = [
    "prolong",
    "bracket",
    "involution",
    "theorem2",
    "check-symmetry",
    "ibdp",
    "reduce",
    "equivalence",
    "gauge",
    "bridge",
    "determining",
    "oracle",
    "all",
]

SCHEMA = "jetsigma-report/1"


@dataclass
class Entry:
    name: str
    verdict: str  # Zero | NonZero | Unknown | true | false
    residual: str = ""
    witness: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict in ("Zero", "true")

    @property
    def unknown(self) -> bool:
        return self.verdict == "Unknown"


@dataclass
class Report:
    command: str
    entries: list[Entry] = field(default_factory=list)
    objects: list[tuple[str, list[str]]] = field(default_factory=list)

    def check(self, name: str, verdict: ZeroVerdict | bool, residual: Expr | None = None):
        if isinstance(verdict, bool):
            v, witness = ("true" if verdict else "false"), ""
        else:
            v = {"zero": "Zero", "nonzero": "NonZero", "unknown": "Unknown"}[verdict.status]
            witness = ""
            if verdict.witness:
                pt = ", ".join(f"{k}={v2}" for k, v2 in sorted(verdict.witness.items()))
                witness = f"{pt} -> {verdict.value:.6g}"
        self.entries.append(
            Entry(name, v, print_expr(residual) if residual is not None else "", witness)
        )

    def show(self, name: str, lines):
        self.objects.append((name, [str(ln) for ln in lines]))

    def merge(self, other: "Report"):
        self.entries.extend(other.entries)
        self.objects.extend(other.objects)

    @property
    def exit_status(self) -> int:
        if any(not e.passed and not e.unknown for e in self.entries):
            return 1
        if any(e.unknown for e in self.entries):
            return 2
        return 0

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        for name, body in self.objects:
            lines.append(f"-- {name}")
            lines.extend(f"   {ln}" for ln in body)
        for e in self.entries:
            mark = {True: "PASS"}.get(e.passed, "UNKNOWN" if e.unknown else "FAIL")
            lines.append(f"[{mark}] {e.name}: {e.verdict}")
            if e.residual and not e.passed:
                lines.append(f"       residual: {e.residual}")
            if e.witness and not e.passed:
                lines.append(f"       witness: {e.witness}")
        lines.append(f"exit: {self.exit_status}")
        return "\n".join(lines)

    def to_json(self, session_name: str, seed: int, trials: int) -> str:
        payload = {
            "schema": SCHEMA,
            "command": self.command,
            "session": session_name,
            "seed": seed,
            "numeric_trials": trials,
            "objects": [{"name": n, "lines": body} for n, body in self.objects],
            "entries": [
                {
                    "name": e.name,
                    "verdict": e.verdict,
                    "residual": e.residual,
                    "witness": e.witness,
                }
                for e in self.entries
            ],
            "exit_status": self.exit_status,
        }
        return json.dumps(payload, indent=2, sort_keys=False)


def _prolonged(session: Session, order: int):
    """Twisted prolongation of the session fields; equivalence-style sessions
    (a transformation matrix A present) hold standard-prolongation generators,
    whose twist describes the transformed set instead."""
    fields = session.require("fields")
    if session.sigma is not None and "A" not in session.matrices:
        return sigma_prolong(fields, session.sigma, order)
    return VectorFieldSet([standard_prolong(X, order) for X in fields])


def _run_prolong(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("prolong")
    Ys = _prolonged(session, order)
    for name, Y in zip(session.field_names, Ys):
        rep.show(f"prolonged field {name}", [str(Y)])
    return rep


def _run_bracket(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("bracket")
    Ys = _prolonged(session, order)
    for i in range(len(Ys)):
        for j in range(i + 1, len(Ys)):
            br = lie_bracket(Ys[i], Ys[j])
            n1, n2 = session.field_names[i], session.field_names[j]
            rep.show(f"[{n1},{n2}]", [str(br)])
    return rep


def _run_involution(session: Session, order: int, trials: int, seed: int) -> Report:
    """Purely a report: involutivity is a finding about the set, not a check
    that can fail, so this command never drives a nonzero exit on its own."""
    rep = Report("involution")
    Ys = _prolonged(session, order)
    try:
        sf = structure_functions(Ys, seed=seed)
        rep.show("involutive", ["yes"])
        rep.show("structure functions", [repr(sf)])
    except NotInvolutiveError as exc:
        rep.show("involutive", ["no"])
        rep.show("bracket outside span", [str(exc.bracket)])
        try:
            closed, crep = close_under_bracket(Ys, seed=seed)
            rep.show(
                "closure",
                [f"added {len(crep.added)} generator(s)"] + [str(f) for f in crep.added],
            )
            rep.show("closed structure functions", [repr(crep.structure)])
        except (ClosureExceededError, NotInvolutiveError) as exc2:
            rep.show("closure", [str(exc2)])
    return rep


def _run_theorem2(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("theorem2")
    fields = session.require("fields")
    sigma = session.require("sigma")
    tr = check_involution_transfer(fields, sigma, trials=trials, seed=seed)
    for (i, j), q in sorted(tr.Q.items()):
        rep.show(
            f"Q[{i + 1}{j + 1}]",
            [", ".join(print_expr(e) for e in q)],
        )
    rep.check("pointwise twist condition", tr.holds_pointwise)
    rep.check("contracted twist condition", tr.holds_contracted)
    return rep


def _run_check_symmetry(session: Session, order: int, trials: int, seed: int, zero_sigma=False) -> Report:
    rep = Report("check-symmetry")
    fields = session.require("fields")
    system = session.require("system")
    sigma = session.sigma
    if zero_sigma or sigma is None:
        sigma = SigmaMatrix.zero(session.ctx, len(fields))
    sym = verify_sigma_symmetry(
        fields, sigma, system, trials=trials, seed=seed, deny=session.deny
    )
    for (i, h), verdict in sorted(sym.verdicts.items()):
        rep.check(
            f"field {session.field_names[i]} on equation {h + 1}",
            verdict,
            sym.residuals[(i, h)],
        )
    return rep


def _run_ibdp(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("ibdp")
    session.require("seeds")
    Ys = _prolonged(session, order)
    eta = session.eta if session.eta is not None else session.ctx.parse("x")
    table = generate_invariants(
        Ys,
        eta,
        session.seeds,
        order,
        extra_base=session.extra_base,
        trials=trials,
        seed=seed,
        deny=session.deny,
    )
    rep.show("invariant table", repr(table).splitlines())
    rep.check("all entries verified and independent", True)
    return rep


def _run_reduce(session: Session, order: int, trials: int, seed: int) -> tuple[Report, str]:
    rep = Report("reduce")
    system = session.require("system")
    change = session.require("coordinate_change")
    if system.solved is None:
        system = solve_for_highest(system, seed=seed)
    reduced, rrep = reduce_system(system, None, change, trials=trials, seed=seed)
    rep.show(
        "reduced system",
        [f"{print_expr(e)} = 0" for e in reduced.equations],
    )
    rep.show(
        "orders",
        [f"{name}: {k}" for name, k in sorted(rrep.orders.items())],
    )
    solved_text = {}
    try:
        targets = [
            str(reduced.ctx.coord(name, k)) for name, k in rrep.orders.items() if k > 0
        ]
        solved_red = solve_for_highest(reduced, targets=targets, seed=seed)
        for t in targets:
            solved_text[t] = solved_red.solved[sp.Symbol(t)]
        rep.show(
            "solved reduced system",
            [f"{t} = {print_expr(solved_text[t])}" for t in sorted(solved_text)],
        )
    except ExprError:
        pass
    rep.check("reduction emitted", True)
    return rep, dump_reduced_session(reduced, solved_text or None)


def _run_equivalence(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("equivalence")
    fields = session.require("fields")
    if "A" not in session.matrices:
        raise MissingSessionDataError("matrix A")
    A = session.matrices["A"]
    convention = session.conventions.get("A", "inverse_dx")
    sigma = sigma_from_A(A, session.ctx, convention, seed=seed)
    rep.show("induced twist", [repr(sigma.mat)])
    rt = standardizing_roundtrip(
        fields, A, order, convention, trials=trials, seed=seed, deny=session.deny
    )
    rep.check("twisted set equals combined standard prolongations", rt.holds)
    if session.sigma is not None:
        same = all(
            is_zero(sigma[i, j] - session.sigma[i, j], trials=trials, seed=seed).is_zero
            for i in range(sigma.r)
            for j in range(sigma.r)
        )
        rep.check("induced twist matches the session twist", same)
        if convention == "inverse_dx":
            ok, residual = verify_A_sigma(A, session.sigma, session.ctx, trials=trials, seed=seed)
            rep.check("transport equation D_x A = A sigma", ok)
        else:
            ok, residual = verify_A_sigma(
                A.inverse(seed=seed), session.sigma, session.ctx, trials=trials, seed=seed
            )
            rep.check("transport equation D_x A^-1 = A^-1 sigma", ok)
    return rep


def _run_gauge(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("gauge")
    sigma = session.require("sigma")
    if "B" not in session.matrices:
        raise MissingSessionDataError("matrix B")
    out = gauge_transform_sigma(session.matrices["B"], sigma, session.ctx, seed=seed)
    rep.show("gauged twist", [repr(out.mat)])
    rep.check("gauge transform computed", True)
    return rep


def _run_bridge(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("bridge")
    if "Phi" not in session.matrices:
        raise MissingSessionDataError("matrix Phi")
    S = session.matrices.get("S")
    M = session.matrices.get("M")
    if S is None and M is None:
        raise MissingSessionDataError("matrix S or M")
    result = mu_sigma_bridge(
        session.matrices["Phi"], session.ctx, S=S, M=M, trials=trials, seed=seed
    )
    rep.show("S", [repr(result.S)])
    rep.show("M", [repr(result.M)])
    rep.check("twists agree on the first jet bundle", result.lift_holds)
    return rep


def _run_determining(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("determining")
    system = session.require("system")
    ansatz = session.require("ansatz")
    from .determining import generate_determining

    result = generate_determining(system, ansatz, seed=seed)
    for (i, h), r in sorted(result.residuals.items()):
        rep.show(f"residual field {i + 1} / equation {h + 1}", [print_expr(r)])
    if result.coefficient_equations is not None:
        rep.show(
            "coefficient equations",
            [print_expr(e) for e in result.coefficient_equations] or ["0"],
        )
    if not ansatz.has_opaque() and not session.ctx.table.parameters:
        for (i, h), r in sorted(result.residuals.items()):
            rep.check(f"residual {i + 1}/{h + 1}", is_zero(r, trials=trials, seed=seed), r)
    rep.check("determining residuals generated", True)
    return rep


def _run_oracle(session: Session, order: int, trials: int, seed: int) -> Report:
    rep = Report("oracle")
    system = session.require("system")
    spec = session.require("oracle")
    if system.solved is None:
        system = solve_for_highest(system, seed=seed)
    h = float(spec.step)
    traj = integrate(system, spec.initial, (0.0, float(spec.t1)), h)
    endpoint = ", ".join(
        f"{n}={traj.samples[n][-1]:.9g}" for n in sorted(traj.samples)
    )
    rep.show("trajectory endpoint", [f"t={traj.ts[-1]:.6g}: {endpoint}"])
    half = integrate(system, spec.initial, (0.0, float(spec.t1)), h / 2)
    errs = []
    for n in traj.samples:
        errs.append(abs(traj.samples[n][-1] - half.samples[n][-1]))
    rep.show("halved-step endpoint deviation", [f"{max(errs):.3e}"])
    rep.check("integration finite", True)
    return rep


def run(command: str, session: Session, order: int | None = None, trials: int = 20, seed: int = 0, zero_sigma: bool = False):
    """Dispatch a command against a loaded session; returns (Report, extra)
    where extra is a reduced-session text for the reduce command."""
    ctx_order = order if order is not None else session.ctx.max_order
    extra = None
    if command == "prolong":
        rep = _run_prolong(session, ctx_order, trials, seed)
    elif command == "bracket":
        rep = _run_bracket(session, ctx_order, trials, seed)
    elif command == "involution":
        rep = _run_involution(session, ctx_order, trials, seed)
    elif command == "theorem2":
        rep = _run_theorem2(session, ctx_order, trials, seed)
    elif command == "check-symmetry":
        rep = _run_check_symmetry(session, ctx_order, trials, seed, zero_sigma)
    elif command == "ibdp":
        rep = _run_ibdp(session, ctx_order, trials, seed)
    elif command == "reduce":
        rep, extra = _run_reduce(session, ctx_order, trials, seed)
    elif command == "equivalence":
        rep = _run_equivalence(session, ctx_order, trials, seed)
    elif command == "gauge":
        rep = _run_gauge(session, ctx_order, trials, seed)
    elif command == "bridge":
        rep = _run_bridge(session, ctx_order, trials, seed)
    elif command == "determining":
        rep = _run_determining(session, ctx_order, trials, seed)
    elif command == "oracle":
        rep = _run_oracle(session, ctx_order, trials, seed)
    elif command == "all":
        rep = Report("all")
        if session.fields is not None:
            rep.merge(_run_prolong(session, ctx_order, trials, seed))
            rep.merge(_run_bracket(session, ctx_order, trials, seed))
            if "A" not in session.matrices:
                rep.merge(_run_involution(session, ctx_order, trials, seed))
        if session.fields is not None and session.sigma is not None and "A" not in session.matrices:
            rep.merge(_run_theorem2(session, ctx_order, trials, seed))
        if session.fields is not None and session.system is not None:
            rep.merge(_run_check_symmetry(session, ctx_order, trials, seed))
        if session.seeds:
            rep.merge(_run_ibdp(session, ctx_order, trials, seed))
        if session.system is not None and session.change is not None:
            sub, extra = _run_reduce(session, ctx_order, trials, seed)
            rep.merge(sub)
        if "A" in session.matrices and session.fields is not None:
            rep.merge(_run_equivalence(session, ctx_order, trials, seed))
        if "B" in session.matrices and session.sigma is not None:
            rep.merge(_run_gauge(session, ctx_order, trials, seed))
        if "Phi" in session.matrices:
            rep.merge(_run_bridge(session, ctx_order, trials, seed))
        if session.ansatz is not None and session.system is not None:
            rep.merge(_run_determining(session, ctx_order, trials, seed))
        if session.oracle is not None and session.system is not None:
            rep.merge(_run_oracle(session, ctx_order, trials, seed))
    else:
        raise ExprError(f"unknown command {command!r}")
    return rep, extra


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="jetsigma",
        description="Twisted joint prolongations, differential invariants, and order reduction.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--session", required=True, help="session file to load")
    parser.add_argument("--json", action="store_true", help="emit a JSON report")
    parser.add_argument("--numeric-trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-order", type=int, default=None)
    parser.add_argument("--out", default=None, help="write the report (and any reduced session) here")
    parser.add_argument(
        "--zero-sigma",
        action="store_true",
        help="override the session twist with the zero matrix (check-symmetry)",
    )
    args = parser.parse_args(argv)

    try:
        session = load_session(args.session)
        report, extra = run(
            args.command,
            session,
            order=args.max_order,
            trials=args.numeric_trials,
            seed=args.seed,
            zero_sigma=args.zero_sigma,
        )
    except MissingSessionDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    import os

    text = (
        report.to_json(os.path.basename(args.session), args.seed, args.numeric_trials)
        if args.json
        else report.to_text()
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
            if extra and args.command == "reduce":
                pass
    else:
        print(text)
    if extra is not None and args.out:
        base, _ = os.path.splitext(args.out)
        with open(base + ".session", "w", encoding="utf-8") as fh:
            fh.write(extra)
    elif extra is not None and not args.json:
        print("-- reduced session --")
        print(extra, end="")
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
