"""Command-line front end.

Verbs: project, check, homology, hom, euler, rewrite, cache.  Expressions
use the grammar

    expr := p(INT) | dual(expr) | stack(expr, expr) | beside(expr, expr)
          | tr(expr) | vertex(INT, INT, INT) | strand(INT)
          | unknot(INT) | theta(INT, INT, INT) | zero

with hom(expr, expr) allowed at the top level of homology/euler queries.
Reports are deterministic; JSON is the stable machine contract.

Exit codes: 0 ok, 2 parse error, 3 admissibility, 4 divergence,
5 resource cap, 6 integrity/verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile

from . import __version__
from . import complexes as cx
from . import expr as ex
from . import projector as pj
from . import serialize as ser
from . import tl
from .complexes import Window
from .errors import (
    AdmissibilityError,
    ArityError,
    DivergenceError,
    IntegrityError,
    ParseError,
    ResourceError,
    SpinhomError,
)
from .homology import HomologyTable, euler_characteristic, homology_table
from .laurent import LaurentPoly

CACHE_ENV = "SPINHOM_CACHE_DIR"
DEFAULT_CACHE = ".spinhom-cache"
CODE_VERSION = f"spinhom-{__version__}-fmt{ser.FORMAT_VERSION}"


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _lc(self) -> tuple[int, int]:
        line = self.text.count("\n", 0, self.pos) + 1
        col = self.pos - (self.text.rfind("\n", 0, self.pos) + 1) + 1
        return line, col

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, *self._lc())

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch: str) -> None:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def word(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] == "_"
        ):
            self.pos += 1
        if start == self.pos:
            raise self.error("expected a name")
        return self.text[start : self.pos]

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        if self.pos < len(self.text) and self.text[self.pos] == "-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos or self.text[start:self.pos] == "-":
            raise self.error("expected an integer")
        return int(self.text[start : self.pos])

    def ints(self, count: int) -> list[int]:
        self.expect("(")
        out = [self.integer()]
        for _ in range(count - 1):
            self.expect(",")
            out.append(self.integer())
        self.expect(")")
        return out

    def expr(self) -> ex.NetworkExpr:
        self.skip_ws()
        name = self.word()
        if name == "p":
            (n,) = self.ints(1)
            return ex.Proj(n)
        if name == "strand":
            (k,) = self.ints(1)
            return ex.Strand(k)
        if name == "dual":
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return ex.push_duals(ex.Dual(inner))
        if name == "tr":
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return ex.Trace(inner)
        if name == "stack" or name == "beside":
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            return ex.Stack(a, b) if name == "stack" else ex.Beside(a, b)
        if name == "vertex":
            a, b, c = self.ints(3)
            ex.check_vertex(a, b, c)
            return ex.Vertex(a, b, c)
        if name == "unknot":
            (n,) = self.ints(1)
            return ex.unknot(n)
        if name == "theta":
            a, b, c = self.ints(3)
            ex.check_vertex(a, b, c)
            return ex.theta(a, b, c)
        if name == "zero":
            return ex.Zero()
        raise self.error(f"unknown operator {name!r}")

    def top(self) -> tuple[str, tuple]:
        self.skip_ws()
        save = self.pos
        name = self.word()
        if name == "hom":
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            self.finish()
            return ("hom", (a, b))
        self.pos = save
        e = self.expr()
        self.finish()
        return ("net", (e,))

    def finish(self) -> None:
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("trailing input")


def parse_network(text: str) -> ex.NetworkExpr:
    """Parse a network expression (no top-level hom)."""
    p = _Parser(text)
    e = p.expr()
    p.finish()
    a = ex.arity(e)  # surfaces admissibility/arity problems early
    return e


def parse_query(text: str) -> tuple[str, tuple]:
    p = _Parser(text)
    kind, args = p.top()
    for e in args:
        ex.arity(e)
    return kind, args


# ---------------------------------------------------------------------------
# Cache


def cache_dir(explicit: str | None = None) -> str:
    return explicit or os.environ.get(CACHE_ENV) or DEFAULT_CACHE


def _digest(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _atomic_write(path: str, data: str) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cached_projector(n: int, window: Window, cdir: str | None) -> pj.ProjectorComplex:
    key = {
        "kind": "projector",
        "n": n,
        "window": [window.lo, window.hi],
        "construction": "adjacent-p2-sweeps",
        "code": CODE_VERSION,
    }
    d = cache_dir(cdir)
    path = os.path.join(d, _digest(key) + ".json")
    if os.path.exists(path):
        with open(path) as fh:
            entry = json.load(fh)
        body = json.dumps(entry["value"], sort_keys=True, separators=(",", ":"))
        if (
            entry.get("code") == CODE_VERSION
            and entry.get("hash") == hashlib.sha256(body.encode()).hexdigest()
        ):
            value = entry["value"]
            C = ser.complex_from_data(value["complex"])
            C = cx.ChainComplex(
                C.m, C.n, C.window, C.groups, C.diff, C.mode,
                C.tail_lo, C.tail_hi, (window.lo + n, float("inf")),
            )
            cert = pj.Certificate(
                n, window, value["cert"]["margin"],
                value["cert"]["degree_zero_ok"],
                {
                    (side, int(i)): (ok, supp)
                    for (side, i, ok, supp) in value["cert"]["turnbacks"]
                },
                value["cert"].get("euler_ok"),
                value["cert"].get("euler_detail", ""),
            )
            if not cert.passed:
                raise IntegrityError("cache holds an uncertified projector")
            return pj.ProjectorComplex(n, window, C, cert)
        # stale or corrupt: fall through and rebuild
    P = pj.build_projector(n, window)
    value = {
        "complex": ser.complex_to_data(P.complex),
        "cert": {
            "margin": P.certificate.margin,
            "degree_zero_ok": P.certificate.degree_zero_ok,
            "turnbacks": sorted(
                [side, i, ok, supp]
                for (side, i), (ok, supp) in P.certificate.turnbacks.items()
            ),
            "euler_ok": P.certificate.euler_ok,
            "euler_detail": P.certificate.euler_detail,
        },
    }
    body = json.dumps(value, sort_keys=True, separators=(",", ":"))
    entry = {
        "key": key,
        "code": CODE_VERSION,
        "hash": hashlib.sha256(body.encode()).hexdigest(),
        "value": value,
    }
    _atomic_write(path, json.dumps(entry, sort_keys=True, separators=(",", ":")))
    return P


# ---------------------------------------------------------------------------
# Reports


def _poly_str(p: LaurentPoly) -> str:
    return repr(p)


def _table_data(T: HomologyTable) -> dict:
    entries = {}
    for (k, q), (rank, tors) in sorted(T.nonzero().items()):
        key = f"{k},{q if q is not None else '*'}"
        entries[key] = {"rank": rank, "torsion": list(tors)}
        if (k, q) in T.unreliable:
            entries[key]["unreliable"] = True
    return {"specialization": T.specialization, "entries": entries}


def _print_report(data: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(data, sort_keys=True, indent=2))
        return
    def walk(d, indent=0):
        pad = "  " * indent
        if isinstance(d, dict):
            for k in sorted(d):
                v = d[k]
                if isinstance(v, (dict, list)):
                    print(f"{pad}{k}:")
                    walk(v, indent + 1)
                else:
                    print(f"{pad}{k}: {v}")
        elif isinstance(d, list):
            for v in d:
                walk(v, indent)
        else:
            print(f"{pad}{d}")
    walk(data)


# ---------------------------------------------------------------------------
# Pipelines


def _max_label(e: ex.NetworkExpr) -> int:
    match e:
        case ex.Proj(n) | ex.DualProj(n):
            return n
        case ex.Vertex(a, b, c):
            return max(a, b, c)
        case ex.Stack(t, b) | ex.Beside(t, b):
            return max(_max_label(t), _max_label(b))
        case ex.Trace(inner) | ex.Dual(inner):
            return _max_label(inner)
    return 0


def _closed_module(e: ex.NetworkExpr, window: Window, rewrite: bool):
    if not ex.is_closed(e):
        raise ArityError("homology/euler need a closed network")
    e2 = pj.rewrite_network(e) if rewrite else pj.expand_vertices(e)
    C = pj.instantiate(e2, window, reduce=True)
    S, _ = cx.simplify(C)
    return cx.tautological(S)


def _homology_of_query(text: str, window: Window, spec: str, rewrite: bool):
    kind, args = parse_query(text)
    if kind == "hom":
        M = pj.hom_of_networks(args[0], args[1], window, rewrite=rewrite)
    else:
        M = _closed_module(args[0], window, rewrite)
    return homology_table(M, spec), M


def cmd_homology(args) -> dict:
    window = Window(-args.window, 0)
    T, M = _homology_of_query(args.expr, window, args.spec, rewrite=True)
    data = {"query": args.expr, "window": args.window, "table": _table_data(T)}
    if args.verify:
        T2, M2 = _homology_of_query(args.expr, window, args.spec, rewrite=False)
        lo1, hi1 = M.reliable
        lo2, hi2 = M2.reliable
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        mism = []
        keys = set(T.entries) | set(T2.entries)
        for kq in keys:
            if kq[0] is not None and lo <= kq[0] <= hi:
                if T.entries.get(kq, (0, ())) != T2.entries.get(kq, (0, ())):
                    mism.append(kq)
        chi1 = euler_characteristic(M)
        chi2 = euler_characteristic(M2)
        tail = chi1 - chi2
        tail_bad = [e for e in tail.coeffs if abs(e) < 2 * args.window - 4]

        def fin(x):
            return None if x in (float("inf"), float("-inf")) else x

        band = None if lo > hi else [fin(lo), fin(hi)]
        data["verify"] = {
            "compared_band": band,
            "euler_tail_exponents": sorted(tail.coeffs),
        }
        if mism or tail_bad:
            data["verify"]["mismatches"] = sorted(str(x) for x in mism)
            data["verify"]["euler_low_order_defect"] = sorted(tail_bad)
            raise IntegrityError(
                "verification failed: rewritten and direct pipelines disagree: "
                + json.dumps(data["verify"], sort_keys=True)
            )
    return data


def cmd_hom(args) -> dict:
    window = Window(-args.window, 0)
    M = pj.hom_of_networks(
        parse_network(args.source), parse_network(args.target), window
    )
    T = homology_table(M, args.spec)
    return {
        "query": f"hom({args.source},{args.target})",
        "window": args.window,
        "table": _table_data(T),
    }


def cmd_euler(args) -> dict:
    window = Window(-args.window, 0)
    kind, qargs = parse_query(args.expr)
    if kind == "hom":
        M = pj.hom_of_networks(qargs[0], qargs[1], window)
        decat = None
    else:
        M = _closed_module(qargs[0], window, rewrite=True)
        decat = tl.evaluate_network(qargs[0])
    chi = euler_characteristic(M)
    data = {
        "query": args.expr,
        "window": args.window,
        "categorified": _poly_str(chi),
    }
    if decat is not None:
        data["tl_oracle"] = repr(decat)
        try:
            exact = decat.as_laurent()
            tail = chi - exact
        except ArithmeticError:
            series = decat.series(max(chi.coeffs) if chi.coeffs else 0)
            tail = chi - series
        data["difference"] = _poly_str(tail)
        # tails certified per projector up to 2 (window - n) - 1
        threshold = 2 * (args.window - _max_label(qargs[0])) - 1
        low = [e for e in tail.coeffs if abs(e) < threshold]
        data["tail_only"] = not low
        if low:
            raise IntegrityError(
                f"euler mismatch below the truncation tail: exponents {sorted(low)}"
            )
    return data


def cmd_project(args) -> dict:
    window = Window(-args.window, 0)
    P = cached_projector(args.n, window, args.cache_dir)
    return {
        "n": args.n,
        "window": args.window,
        "objects_per_degree": {
            str(k): len(v) for k, v in sorted(P.complex.groups.items())
        },
        "certificate": P.certificate.lines(),
        "passed": P.certificate.passed,
    }


def cmd_check(args) -> dict:
    if args.what != "projector":
        raise ParseError(f"unknown check target {args.what!r}", 1, 1)
    window = Window(-args.window, 0)
    P = cached_projector(args.n, window, args.cache_dir)
    cert = pj.check_projector_axioms(P.complex, args.n, window, check_euler=True)
    for line in cert.lines():
        print(line)
    return {"n": args.n, "window": args.window, "passed": cert.passed}


def cmd_rewrite(args) -> dict:
    e = parse_network(args.expr)
    out = pj.rewrite_network(e, mode=args.mode)
    return {"input": args.expr, "mode": args.mode, "normal_form": ex.to_text(out)}


def cmd_cache(args) -> dict:
    d = cache_dir(args.cache_dir)
    if args.action == "ls":
        files = sorted(os.listdir(d)) if os.path.isdir(d) else []
        return {"dir": d, "entries": files}
    if args.action == "clear":
        removed = 0
        if os.path.isdir(d):
            for f in sorted(os.listdir(d)):
                if f.endswith(".json"):
                    os.unlink(os.path.join(d, f))
                    removed += 1
        return {"dir": d, "removed": removed}
    raise ParseError(f"unknown cache action {args.action!r}", 1, 1)


def build_arg_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--window", type=int, default=8, help="truncation depth (default 8)"
    )
    common.add_argument("--spec", choices=["alpha0", "alpha1"], default="alpha0")
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--verify", action="store_true")
    common.add_argument("--cache-dir", default=None)
    ap = argparse.ArgumentParser(
        prog="spinhom",
        description="categorified spin network calculator",
    )
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("project", parents=[common], help="build and cache a projector")
    p.add_argument("n", type=int)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("check", parents=[common], help="re-run certification")
    p.add_argument("what")
    p.add_argument("n", type=int)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser(
        "homology", parents=[common], help="bigraded homology of a closed query"
    )
    p.add_argument("expr")
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("hom", parents=[common], help="homology of Hom(M, N)")
    p.add_argument("source")
    p.add_argument("target")
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser(
        "euler", parents=[common], help="euler characteristic vs the TL oracle"
    )
    p.add_argument("expr")
    p.set_defaults(func=cmd_euler)

    p = sub.add_parser("rewrite", parents=[common], help="normal form of an expression")
    p.add_argument("expr")
    p.add_argument("--mode", choices=["product", "sum"], default="product")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("cache", parents=[common], help="cache maintenance")
    p.add_argument("action", choices=["ls", "clear"])
    p.set_defaults(func=cmd_cache)
    return ap


EXIT_CODES = [
    (ParseError, 2),
    (AdmissibilityError, 3),
    (ArityError, 3),
    (DivergenceError, 4),
    (ResourceError, 5),
    (IntegrityError, 6),
]


def main(argv: list[str] | None = None) -> int:
    ap = build_arg_parser()
    args = ap.parse_args(argv)
    pj.set_projector_provider(
        lambda n, w: cached_projector(n, w, getattr(args, "cache_dir", None))
    )
    try:
        data = args.func(args)
    except SpinhomError as err:
        for klass, code in EXIT_CODES:
            if isinstance(err, klass):
                print(f"error: {err}", file=sys.stderr)
                return code
        print(f"error: {err}", file=sys.stderr)
        return 1
    _print_report(data, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
