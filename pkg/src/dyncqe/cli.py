"""Command-line interface: ``dyncqe check|rewrite|session|compare``.

Exit codes: 0 success, 1 false answer or violated check, 2 usage or parse
error, 3 inconsistent input, 4 capacity or oracle limit exceeded.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from .core import (
    ABox, CQEError, CQEInstance, CapacityExceeded, InconsistentInput, Policy,
    TBox, conjoin_all,
)
from .engine import (
    EXACT, MATERIALIZED, HashMismatch, InconsistentInstance, ReplayMismatch,
    load_session, open_session,
)
from .evaluator import closure, holds_bucq, is_consistent
from .oracle import (
    CensorSpace, LimitExceeded, dyn_answers, iga_entails, skeptical_entails,
    st_cens,
)
from .parser import (
    Signature, SourceError, parse_abox, parse_bucq, parse_policy,
    parse_queries, parse_tbox, render_bucq, render_fo,
)
from .rewriter import (
    EMPTY_POLICY, atom_rewr, brave_ref, perfect_ref, policy_query, simplify,
    state_ref,
)

OK, FALSE_ANSWER, USAGE, INCONSISTENT, CAPACITY = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


class Inputs:
    """Files loaded against one shared signature."""

    def __init__(self, args):
        self.sig = Signature()
        self.tbox = parse_tbox(_read(args.tbox), self.sig) if args.tbox else TBox()
        policy = getattr(args, "policy", None)
        self.policy = parse_policy(_read(policy), self.sig) if policy else Policy()
        abox = getattr(args, "abox", None)
        self.abox = parse_abox(_read(abox), self.sig) if abox else ABox()

    def query(self, text: str):
        text = text.strip()
        if not text.startswith("ASK"):
            text = "ASK " + text
        return parse_bucq(text, self.sig)

    def queries(self, path):
        return parse_queries(_read(path), self.sig)


def _flag(b: bool) -> str:
    return "T" if b else "F"


def _censor_text(c) -> str:
    return "{" + ", ".join(str(a) for a in c.sorted()) + "}"


# ---------------------------------------------------------------------------
# subcommands

def run_check(args) -> int:
    inp = Inputs(args)
    if not is_consistent(inp.tbox, inp.abox):
        print("inconsistent")
        return INCONSISTENT
    print("consistent")
    if args.policy:
        pq = policy_query(inp.policy)
        violated = pq is not EMPTY_POLICY and holds_bucq(
            perfect_ref(pq, inp.tbox), closure(inp.tbox, inp.abox))
        print(f"policy violated: {'yes' if violated else 'no'}")
    return OK


def run_rewrite(args) -> int:
    inp = Inputs(args)
    q = inp.query(args.query)
    earlier = inp.queries(args.entq) if args.entq else []
    if args.mode == "brave":
        target = conjoin_all(earlier + [q], args.cap)
        phi = atom_rewr(brave_ref(target, inp.tbox, inp.policy, args.cap), inp.tbox)
    else:
        seq = earlier + [q]
        i = args.index or len(seq)
        guess = [int(x) for x in args.guess.split(",") if x.strip()] if args.guess else []
        phi = state_ref(CQEInstance(inp.tbox, inp.policy, ABox()).spec, seq, i, guess, args.cap)
    print(render_fo(phi if args.raw else simplify(phi)))
    return OK


SESSION_HELP = """commands:
  ask <query>     answer a query (TRUE or FALSE)
  entq            queries answered TRUE so far
  history         every query with its answer
  materialize     an optimal censor agreeing with the answers so far
  censors         surviving censors, by brute force (small instances)
  save <path>     write the session log
  quit            leave"""


class Repl:
    def __init__(self, session, inputs, out=None, err=None):
        self.s = session
        self.inp = inputs
        self.out = out or sys.stdout
        self.err = err or sys.stderr

    def say(self, text: str = "") -> None:
        print(text, file=self.out)

    def warn(self, text: str) -> None:
        print(text, file=self.err)

    def execute(self, line: str) -> bool:
        """Run one command; False means quit."""
        line = line.strip()
        if not line or line.startswith("#"):
            return True
        cmd, _, rest = line.partition(" ")
        try:
            if cmd == "ask":
                if not rest.strip():
                    raise ValueError("ask needs a query")
                self.say("TRUE" if self.s.ask(self.inp.query(rest)) else "FALSE")
            elif cmd == "entq":
                for q in self.s.entq:
                    self.say(render_bucq(q))
            elif cmd == "history":
                for q, a in self.s.history:
                    self.say(f"{'TRUE' if a else 'FALSE'}\t{render_bucq(q)}")
            elif cmd == "materialize":
                c = self.s.materialized if self.s.mode == MATERIALIZED else self.s.materialize_censor()
                for a in c.sorted():
                    self.say(str(a))
            elif cmd == "censors":
                for c in st_cens(self.s.instance, [q for q, _ in self.s.history]):
                    self.say(_censor_text(c))
            elif cmd == "save":
                path = shlex.split(rest)
                if len(path) != 1:
                    raise ValueError("save needs one path")
                self.s.save(path[0])
            elif cmd in ("quit", "exit"):
                return False
            elif cmd == "help":
                self.say(SESSION_HELP)
            else:
                raise ValueError(f"unknown command {cmd!r} (try help)")
        except (CQEError, ValueError, OSError) as e:
            self.warn(f"error: {e}")
        return True


def run_session(args) -> int:
    inp = Inputs(args)
    if args.resume:
        s = load_session(inp.tbox, inp.policy, inp.abox, args.resume, args.mode, args.cap)
    else:
        s = open_session(inp.tbox, inp.policy, inp.abox, args.mode, args.cap)
    repl = Repl(s, inp)
    if args.script:
        lines = _read(args.script).splitlines()
        for line in lines:
            if not repl.execute(line):
                break
        return OK
    interactive = sys.stdin.isatty()
    while True:
        try:
            line = input("dyncqe> " if interactive else "")
        except EOFError:
            break
        if not repl.execute(line):
            break
    return OK


def run_compare(args) -> int:
    inp = Inputs(args)
    queries = inp.queries(args.queries)
    s = open_session(inp.tbox, inp.policy, inp.abox, EXACT, args.cap)
    engine = [s.ask(q) for q in queries]
    instance = s.instance
    space = CensorSpace(instance)
    oracle = dyn_answers(space, queries)
    skeptical = [skeptical_entails(space, q) for q in queries]
    iga = [iga_entails(space, q) for q in queries]
    honest = [holds_bucq(perfect_ref(q, inp.tbox), inp.abox) for q in queries]
    rows = [("query", "engine", "oracle", "skeptical", "IGA", "honest")]
    violations = []
    for k, q in enumerate(queries):
        rows.append((render_bucq(q), _flag(engine[k]), _flag(oracle[k]),
                     _flag(skeptical[k]), _flag(iga[k]), _flag(honest[k])))
        if engine[k] != oracle[k]:
            violations.append(f"query {k + 1}: engine and oracle disagree")
        if iga[k] and not skeptical[k]:
            violations.append(f"query {k + 1}: IGA entails but skeptical does not")
        if skeptical[k] and not oracle[k]:
            violations.append(f"query {k + 1}: skeptical entails but the state does not")
    width = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    for r in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(r, width)).rstrip())
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return FALSE_ANSWER if violations else OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dyncqe", description="Controlled query evaluation for DL-Lite_R ontologies.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, policy=True, abox=True, policy_required=True):
        sp.add_argument("--tbox", required=True, help="TBox file (.tbox)")
        if policy:
            sp.add_argument("--policy", required=policy_required, help="policy file (.policy)")
        if abox:
            sp.add_argument("--abox", required=True, help="ABox file (.abox)")
        sp.add_argument("--cap", type=int, default=4096, help="disjunct cap for rewritings")

    c = sub.add_parser("check", help="validate an instance")
    common(c, policy_required=False)
    c.set_defaults(func=run_check)

    r = sub.add_parser("rewrite", help="print a rewriting")
    common(r, abox=False)
    r.add_argument("--query", required=True, help="query text, e.g. 'buy(?x,m_b)'")
    r.add_argument("--entq", help="file of previously entailed queries (.bucq)")
    r.add_argument("--mode", choices=("brave", "state"), default="brave")
    r.add_argument("--index", type=int, help="state mode: 1-based query index")
    r.add_argument("--guess", help="state mode: comma-separated indexes guessed true")
    r.add_argument("--raw", action="store_true", help="skip normalisation")
    r.set_defaults(func=run_rewrite)

    s = sub.add_parser("session", help="interactive or scripted session")
    common(s)
    s.add_argument("--resume", help="session log to replay")
    s.add_argument("--mode", choices=(EXACT, MATERIALIZED), default=EXACT)
    s.add_argument("--script", help="file of session commands")
    s.set_defaults(func=run_session)

    m = sub.add_parser("compare", help="compare semantics on a query sequence")
    common(m)
    m.add_argument("--queries", required=True, help="query sequence (.bucq)")
    m.set_defaults(func=run_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SourceError, ReplayMismatch, HashMismatch) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except (InconsistentInstance, InconsistentInput) as e:
        print(f"error: {e}", file=sys.stderr)
        return INCONSISTENT
    except (CapacityExceeded, LimitExceeded) as e:
        print(f"error: {e}", file=sys.stderr)
        return CAPACITY
    except (CQEError, ValueError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
