"""``sinefactor`` command line.

Exit codes: 0 success, 1 informational negative outcome (not a sine product,
superlinear growth), 2 computational or input error (JSON on stderr).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__
from .algebra import MP, ExpSum, mp_string
from .errors import NotASineProduct, SineFactorError
from .factorizer import consistency_check, decompose_zero_set, factorize, verify_form
from .forms import SineFactor, SineProductForm
from .generators import SecularSpec, build_sine_product, secular_expsum
from .logderiv import growth_profile, log_derivative_expansions, meyer_verdict, Verdict
from .parser import build_basis, parse_expression
from .quasicrystal import compare_diffraction, fourier_atoms
from .rootfinder import certify_real_rooted

SCHEMA = "sinefactor/1"
EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


def _add_common(p, window=True):
    p.add_argument("expression", nargs="?", help="expression in z, e.g. 'sin(pi*z)^2'")
    p.add_argument("--input", help="JSON file with an exponential sum or a secular spec")
    p.add_argument("--basis", action="append", default=[], metavar="NAME=DECIMAL",
                   help="declare a basis entry (repeatable)")
    p.add_argument("--cutoff", type=float, default=50.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--precision", type=int, default=None, help="mpmath bits for the h-recursion")
    p.add_argument("--eta", type=float, default=1.0)
    if window:
        p.add_argument("--window", type=float, nargs=2, default=(-100.0, 100.0), metavar=("A", "B"))
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sinefactor", description="Sine-product analysis of exponential sums.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in [("parse", "print the exponential sum"),
                       ("hcoeffs", "half-plane coefficients of Q'/Q"),
                       ("meyer", "linear-growth verdict"),
                       ("roots", "certified real zeros"),
                       ("factor", "sine-product factorization"),
                       ("report", "full analysis chain")]:
        _add_common(sub.add_parser(name, help=text))
    f = sub.add_parser("fourier", help="Fourier atoms, optionally compared with the zeros")
    _add_common(f)
    f.add_argument("--compare", type=float, metavar="L", help="compare with zeros on [-L, L]")
    f.add_argument("--top-k", type=int, default=10)

    g = sub.add_parser("generate", help="write a test input as JSON")
    gs = g.add_subparsers(dest="family", required=True)
    sec = gs.add_parser("secular", help="det(I - e^{ixL} U) with a seeded random unitary")
    sec.add_argument("--lengths", nargs="+", required=True, help="decimals or sqrt(N)")
    sec.add_argument("--seed", type=int, default=0)
    sec.add_argument("--out")
    sine = gs.add_parser("sine", help="expanded sine product")
    sine.add_argument("--factor", action="append", default=[], metavar="ALPHA/PI:BETA[:K]",
                      help="e.g. 'sqrt2:0.5' or '1/2:0:2'; ALPHA/PI is a rational times one basis name")
    sine.add_argument("--basis", action="append", default=[], metavar="NAME=DECIMAL")
    sine.add_argument("--C", default="1")
    sine.add_argument("--shift", default="0", help="a/(2 pi) as a rational times one basis name")
    sine.add_argument("--seed", type=int, default=0)
    sine.add_argument("--out")
    return ap


# -- helpers ----------------------------------------------------------------

def _length(text):
    m = re.fullmatch(r"\s*sqrt\((\d+)\)\s*", text)
    return mp_string(MP.sqrt(int(m.group(1)))) if m else mp_string(MP.mpf(text))


def _load(args):
    """``(ExpSum, input description)`` from the expression or ``--input``."""
    if args.input:
        with open(args.input) as fh:
            data = json.load(fh)
        if "unitary" in data:
            spec = SecularSpec.from_dict(data)
            return secular_expsum(spec), {"secular_spec": spec.to_dict()}
        return ExpSum.from_dict(data), {}
    if not args.expression:
        raise SystemExit("an expression or --input is required")
    basis = build_basis(args.basis)
    return parse_expression(args.expression, basis), {"expression": args.expression}


def _envelope(command, args, Q, extra, body):
    doc = {"schema": SCHEMA, "command": command,
           "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    doc.update(extra)
    if Q is not None:
        doc["input"] = Q.to_dict()
    doc["parameters"] = {k: getattr(args, k) for k in ("cutoff", "tol", "precision", "eta", "window")
                         if hasattr(args, k)}
    if isinstance(doc["parameters"].get("window"), tuple):
        doc["parameters"]["window"] = list(doc["parameters"]["window"])
    doc.update(body)
    return doc


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_doc(args, doc, csv_text=None):
    _emit(args, csv_text if args.format == "csv" and csv_text is not None else json.dumps(doc, indent=2))


def _vector(basis, text):
    """``'3/2'`` or ``'1/2*sqrt2'`` or ``'sqrt2'`` to a basis vector."""
    coef, _, name = text.partition("*")
    if not name and re.fullmatch(r"[A-Za-z_]\w*", coef):
        coef, name = "1", coef
    return basis.vector(**{name or "one": Fraction(coef)})


# -- commands ---------------------------------------------------------------

def cmd_parse(args):
    Q, extra = _load(args)
    _emit_doc(args, _envelope("parse", args, Q, extra, {}))
    return EXIT_OK


def cmd_hcoeffs(args):
    Q, extra = _load(args)
    up, lo = log_derivative_expansions(Q, args.cutoff, precision=args.precision)
    doc = _envelope("hcoeffs", args, Q, extra, {"upper": up.to_dict(), "lower": lo.to_dict()})
    rows = ["halfplane,gamma,re,im"] + [f"{e.halfplane.value},{a.value!r},{a.h.real!r},{a.h.imag!r}"
                                        for e in (lo, up) for a in e.atoms]
    _emit_doc(args, doc, "\n".join(rows))
    return EXIT_OK


def _meyer(Q, args):
    up, lo = log_derivative_expansions(Q, args.cutoff, precision=args.precision)
    return meyer_verdict(growth_profile(up, lo))


def cmd_meyer(args):
    Q, extra = _load(args)
    res = _meyer(Q, args)
    _emit_doc(args, _envelope("meyer", args, Q, extra, {"meyer": res.to_dict()}), res.report.to_csv())
    return EXIT_NEGATIVE if res.verdict is Verdict.SUPERLINEAR else EXIT_OK


def cmd_roots(args):
    Q, extra = _load(args)
    rep = certify_real_rooted(Q, tuple(args.window), args.eta)
    doc = _envelope("roots", args, Q, extra, {"certification": rep.to_dict(), "zeros": rep.zeros.to_dict()})
    _emit_doc(args, doc, rep.zeros.to_csv())
    return EXIT_OK


def cmd_fourier(args):
    Q, extra = _load(args)
    if args.compare:
        rep = compare_diffraction(Q, args.compare, args.top_k, args.cutoff, eta=args.eta)
        doc = _envelope("fourier", args, Q, extra, {"diffraction": rep.to_dict()})
        _emit_doc(args, doc, rep.to_csv())
    else:
        m = fourier_atoms(*log_derivative_expansions(Q, args.cutoff, precision=args.precision))
        doc = _envelope("fourier", args, Q, extra, {"measure": m.to_dict()})
        _emit_doc(args, doc, m.plot_data())
    return EXIT_OK


def _factor_body(Q, args):
    form = factorize(Q, args.cutoff, args.tol, precision=args.precision)
    body = {"form": form.to_dict(), "rendered": form.render(),
            "verification": verify_form(Q, form).to_dict()}
    return form, body


def cmd_factor(args):
    Q, extra = _load(args)
    try:
        _, body = _factor_body(Q, args)
    except NotASineProduct as exc:
        _emit_doc(args, _envelope("factor", args, Q, extra, {"outcome": exc.to_dict()}))
        return EXIT_NEGATIVE
    _emit_doc(args, _envelope("factor", args, Q, extra, body))
    return EXIT_OK


def cmd_report(args):
    Q, extra = _load(args)
    body = {}
    res = _meyer(Q, args)
    body["meyer"] = res.to_dict()
    cert = certify_real_rooted(Q, tuple(args.window), args.eta)
    body["certification"] = cert.to_dict()
    body["zeros"] = cert.zeros.to_dict()
    code = EXIT_OK
    if cert.certified:
        L = min(-cert.zeros.window[0], cert.zeros.window[1])
        if L > 0:
            diff = compare_diffraction(Q, L, 10, args.cutoff, eta=args.eta, zeros=cert.zeros)
            body["diffraction"] = diff.to_dict()
    try:
        form, fb = _factor_body(Q, args)
        body["factorization"] = fb
        if cert.certified and cert.zeros.total() >= 20:
            try:
                ps = decompose_zero_set(cert.zeros, allow_exceptional=True)
                body["progressions"] = ps.to_dict()
                body["consistency"] = consistency_check(form, ps).to_dict()
            except SineFactorError as exc:
                body["progressions"] = exc.to_dict()
    except NotASineProduct as exc:
        body["factorization"] = exc.to_dict()
        code = EXIT_NEGATIVE
    if res.verdict is Verdict.SUPERLINEAR:
        code = EXIT_NEGATIVE
    _emit_doc(args, _envelope("report", args, Q, extra, body))
    return code


def cmd_generate(args):
    if args.family == "secular":
        spec = SecularSpec.random([_length(s) for s in args.lengths], args.seed)
        doc = {"schema": SCHEMA, **spec.to_dict()}
    else:
        basis = build_basis(args.basis)
        factors = []
        for item in args.factor:
            parts = item.split(":")
            if len(parts) not in (2, 3):
                raise SystemExit(f"bad factor {item!r}; expected ALPHA/PI:BETA[:K]")
            factors.append(SineFactor(_vector(basis, parts[0]), float(parts[1]),
                                      int(parts[2]) if len(parts) == 3 else 1))
        form = SineProductForm(basis, complex(args.C.replace("i", "j")), 0.0, tuple(factors),
                               _vector(basis, args.shift))
        doc = {"schema": SCHEMA, **build_sine_product(form).to_dict()}
    args.format = "json"
    _emit(args, json.dumps(doc, indent=2))
    return EXIT_OK


COMMANDS = {"parse": cmd_parse, "hcoeffs": cmd_hcoeffs, "meyer": cmd_meyer, "roots": cmd_roots,
            "fourier": cmd_fourier, "factor": cmd_factor, "report": cmd_report, "generate": cmd_generate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SineFactorError as exc:
        sys.stderr.write(json.dumps({"schema": SCHEMA, **exc.to_dict()}) + "\n")
        return EXIT_ERROR
    except (ValueError, OSError, KeyError) as exc:
        sys.stderr.write(json.dumps({"schema": SCHEMA, "error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
