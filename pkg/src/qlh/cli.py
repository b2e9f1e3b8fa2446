"""Command-line entry point: ``qlh <subcommand> [options]``.

Exit status 0 on success, 1 when a check fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import birational as br
from . import verify
from .cohomring import parse_geometry
from .conifold import (
    TransitionData,
    discriminant_arrangement,
    euler_relation,
    nabla_k_restrictions,
    validate_transition,
    yukawa_log_part,
)
from .dmod import apply_operator, pf_operators_bundle
from .errors import ConfigError, QLHError
from .grassmannian import grassmannian_g25_lines_oracle
from .gwfun import (
    SymDivisor,
    blowup_relative_factor,
    determinantal_relative_factor,
    i_function_complete_intersection,
    i_function_tower,
)
from .kontsevich import kontsevich_numbers
from .linalg import fmt
from .pipelines import dubrovin, quintic
from .series import NORMALIZATION


class Failure(Exception):
    """A computation ran but a check did not hold (exit status 1)."""

    def __init__(self, payload: dict):
        super().__init__("check failed")
        self.payload = payload


# ---------------------------------------------------------------------------
# rendering


def jsonable(obj):
    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, dict):
        return {(k if isinstance(k, str) else str(k)): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    return obj


def render_json(payload: dict) -> str:
    return json.dumps(jsonable(payload), sort_keys=True, indent=2) + "\n"


def _flatten(prefix: str, obj, rows: List[Tuple[str, str]]):
    if isinstance(obj, dict):
        for k in sorted(obj, key=str):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, x in enumerate(obj):
            _flatten(f"{prefix}[{i}]", x, rows)
    else:
        rows.append((prefix, json.dumps(obj) if isinstance(obj, list) else str(obj)))


def render_table(payload: dict) -> str:
    rows: List[Tuple[str, str]] = []
    _flatten("", jsonable(payload), rows)
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


def matrix_series_json(mats: Dict[tuple, list], names: Sequence[str]) -> Dict[str, list]:
    out = {}
    for beta in sorted(mats):
        key = "*".join(f"{n}^{e}" for n, e in zip(names, beta) if e) or "1"
        out[key] = [[fmt(x) for x in row] for row in mats[beta]]
    return out


# ---------------------------------------------------------------------------
# configuration


def load_json(path: Optional[str], what: str):
    if not path:
        raise ConfigError(f"--{what} is required")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} file not found: {path}")
    text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if 0 < exc.lineno <= len(text.splitlines()) else ""
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from None


def parse_zwin(text: Optional[str]):
    if text is None:
        return None
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--zwin expects 'lo,hi', got {text!r}") from None
    if lo > hi:
        raise ConfigError("--zwin needs lo <= hi")
    return (lo, hi)


def truncation(args, default: int) -> int:
    n = default if args.truncate is None else args.truncate
    if n < 1:
        raise ConfigError("--truncate must be at least 1")
    return n


def geometry(args):
    ring, twists = parse_geometry(load_json(args.geometry, "geometry"))
    return ring, twists


def int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_ifun(args) -> dict:
    ring, twists = geometry(args)
    n = truncation(args, 4)
    I = i_function_tower(ring, n, parse_zwin(args.zwin))
    if twists:
        I = i_function_complete_intersection(I, twists)
    return {"ring": ring.name, "basis": ring.basis_names, "normalization": NORMALIZATION,
            "truncation": n, "twists": [list(t) for t in twists], "terms": I.to_records()}


def cmd_pf_check(args) -> dict:
    ring, twists = geometry(args)
    if twists:
        raise ConfigError("pf-check applies to untwisted projective-bundle towers")
    n = truncation(args, 4)
    I = i_function_tower(ring, n, parse_zwin(args.zwin))
    rows = []
    for name, op in pf_operators_bundle(ring):
        rest = apply_operator(op, I)
        rows.append({"curve": name, "operator": op.format(ring.gen_names), "annihilates": rest.is_zero(),
                     "residual": rest.to_records()[:5]})
    payload = {"ring": ring.name, "truncation": n, "operators": rows}
    if not all(r["annihilates"] for r in rows):
        raise Failure(payload)
    return payload


def cmd_dubrovin(args) -> dict:
    ring, twists = geometry(args)
    n = truncation(args, 4)
    I = i_function_tower(ring, n, parse_zwin(args.zwin))
    if twists:
        I = i_function_complete_intersection(I, twists)
    r = dubrovin(ring, n, I=I, twists=tuple(twists))
    lat = ring.lattice.names
    payload = {
        "ring": ring.name, "basis": ring.basis_names, "truncation": n,
        "A": {ring.gen_names[a]: matrix_series_json(r.A(a), lat) for a in range(ring.ngens)},
        "flat": r.flat(), "self_adjoint": r.self_adjoint(), "gauge_consistent": r.gauge_consistent(),
    }
    try:
        m = r.mirror()
        payload["mirror_map"] = {
            "unit": {str(list(b)): fmt(v) for b, v in sorted(m.unit_series().items())},
            "divisors": {ring.gen_names[a]: {str(list(b)): fmt(v) for b, v in sorted(m.divisor_series(a).items())}
                         for a in range(ring.ngens)},
        }
    except QLHError as exc:
        payload["mirror_map"] = {"unavailable": str(exc)}
    if not (payload["flat"] and payload["self_adjoint"] and payload["gauge_consistent"]):
        raise Failure(payload)
    return payload


def cmd_quintic(args) -> dict:
    n = truncation(args, 4)
    q = quintic(n)
    y = q.yukawa
    oracle = grassmannian_g25_lines_oracle()
    payload = {
        "truncation": n, "I0": y.I0, "mirror_g": y.mirror,
        "N_d": {str(d): v for d, v in sorted(y.N.items())},
        "n_d": {str(d): v for d, v in sorted(y.n.items())},
        "g25_lines_oracle": oracle, "n1_matches_oracle": y.n[1] == oracle,
    }
    if y.n[1] != oracle:
        raise Failure(payload)
    return payload


def cmd_flop_check(args) -> dict:
    c = br.local_model(args.model)
    cert = br.pf_ideal_isomorphism_check(c, br.pf_operators(c.source), br.pf_operators(c.target),
                                         args.trials, args.seed)
    rep = br.pairing_report(c)
    rep["kernel"] = [[fmt(x) for x in v] for v in rep["kernel"]]
    payload = {"model": args.model, "seed": cert.seed, "trials": cert.trials, "reductions": cert.entries,
               "pairing": rep}
    checks = [cert.passed, rep["pairing_compatible"], rep["transpose_isometry"], rep["kernel_orthogonal"]]
    if args.model == "flop":
        checks.append(rep["isometry"])
    if not all(checks):
        raise Failure(payload)
    return payload


def cmd_flip_matrices(args) -> dict:
    n = truncation(args, 3)
    fc = br.flip_connection(n)
    names = fc.ring.lattice.names
    m1 = br.series_to_entries(fc.A1) == br.load_reference("A1")
    m2 = br.series_to_entries(fc.A2) == br.load_reference("A2")
    payload = {"truncation": n, "frame": br.V_LABELS,
               "A1": matrix_series_json(fc.A1, names), "A2": matrix_series_json(fc.A2, names),
               "A1_matches_reference": m1, "A2_matches_reference": m2}
    if not (m1 and m2):
        raise Failure(payload)
    return payload


def cmd_flip_blockdiag(args) -> dict:
    if args.order < 1:
        raise ConfigError("--order must be at least 1")
    r = br.flip_block_decomposition(args.order)
    bg = r.gauge
    sym = br.symmetry_defects(bg)
    payload = {
        "order": args.order,
        "W": [[fmt(x) for x in row] for row in r.W],
        "matches_reference": r.matches_reference,
        "f": [br.p_str(x) for x in bg.f], "g": [br.p_str(x) for x in bg.g],
        "symmetry_defects": sym,
        "B1_9_9": br.p_str(bg.B[0][-1][-1]), "B2_9_9": br.p_str(bg.B[1][-1][-1]),
    }
    try:
        payload["z0"] = br.decomposition_at_z0(bg, r.W)
    except QLHError as exc:
        payload["z0"] = {"error": str(exc)}
        raise Failure(payload)
    if sym or not r.matches_reference or not all(v for k, v in payload["z0"].items() if isinstance(v, bool)):
        raise Failure(payload)
    return payload


def cmd_blowup_factor(args) -> dict:
    ds = int_list(args.D)
    D = [SymDivisor.named(f"D{i + 1}", d) for i, d in enumerate(ds)]
    E = SymDivisor.zero() if args.no_exceptional else SymDivisor.named("E", args.E)
    f = blowup_relative_factor(D, E)
    return {"r": len(D), "D_dot_beta": ds, "E_dot_beta": E.degree, "factor": str(f), "is_one": f.is_one()}


def cmd_det_factor(args) -> dict:
    ls = int_list(args.L)
    if args.trivial_L:
        if any(ls):
            raise ConfigError("--trivial-L needs every L_i . beta = 0")
        L = [SymDivisor.zero() for _ in ls]
    else:
        L = [SymDivisor.named(f"L{i}", d) for i, d in enumerate(ls)]
    f = determinantal_relative_factor(L, SymDivisor.named("h", args.h))
    return {"n": len(L) - 1, "L_dot_beta": ls, "h_dot_beta": args.h, "factor": str(f), "is_one": f.is_one()}


def cmd_conifold_check(args) -> dict:
    data = load_json(args.data, "data")
    try:
        A = data["A"]
        k = int(data.get("k", len(A)))
        d = TransitionData.from_matrices(A, data.get("B"), k)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed transition data: {exc}") from None
    payload: dict = {"k": d.k, "mu": d.mu, "rho": d.rho}
    try:
        payload["certificate"] = validate_transition(d).as_dict()
        if "chiX" in data and "chiY" in data:
            payload["euler"] = euler_relation(int(data["chiX"]), int(data["chiY"]), d.k)
    except QLHError as exc:
        payload["error"] = {"type": type(exc).__name__, "message": str(exc)}
        raise Failure(payload)
    payload["arrangement"] = discriminant_arrangement(d.A).as_dict()
    yuk = {}
    for p in range(1, d.mu + 1):
        for m in range(p, d.mu + 1):
            for n in range(m, d.mu + 1):
                yuk[f"u_{p}{m}{n}"] = str(yukawa_log_part(d.A, p, m, n))
    payload["yukawa_log_parts"] = yuk
    rep = nabla_k_restrictions(d)
    payload["restrictions"] = rep.as_dict()
    if not (rep.reassembles and rep.trace_A == d.mu and rep.trace_B == d.rho):
        raise Failure(payload)
    return payload


def cmd_oracle(args) -> dict:
    if args.which == "g25-lines":
        return {"oracle": "g25-lines", "c2": args.c2, "value": grassmannian_g25_lines_oracle(args.c2)}
    if args.dmax < 1:
        raise ConfigError("--dmax must be at least 1")
    return {"oracle": "kontsevich", "N": {str(d): v for d, v in kontsevich_numbers(args.dmax).items()}}


def cmd_verify_all(args) -> dict:
    rows = verify.verify_all()
    if args.write_golden:
        target = Path(args.write_golden)
        target.mkdir(parents=True, exist_ok=True)
        for r in rows:
            (target / f"criterion_{r['criterion']}.json").write_text(verify.canonical(r["payload"]) + "\n")
    summary = {str(r["criterion"]): {"passed": r["passed"], "golden_match": r["golden_match"]} for r in rows}
    payload = {"criteria": summary}
    if not args.write_golden and not all(r["passed"] and r["golden_match"] for r in rows):
        raise Failure(payload)
    return payload


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, geometry_flag: bool = False):
    if geometry_flag:
        p.add_argument("--geometry", help="geometry JSON file")
    p.add_argument("--truncate", type=int, help="Novikov degree truncation")
    p.add_argument("--zwin", help="z-exponent window 'lo,hi'")
    p.add_argument("--out", help="write the JSON artifact here")
    p.add_argument("--format", choices=("json", "table"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlh", description="Exact genus-zero quantum cohomology computations.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, geo in (("ifun", cmd_ifun, True), ("pf-check", cmd_pf_check, True),
                          ("dubrovin", cmd_dubrovin, True), ("quintic", cmd_quintic, False),
                          ("flip-matrices", cmd_flip_matrices, False)):
        p = sub.add_parser(name)
        _common(p, geo)
        p.set_defaults(func=fn)

    p = sub.add_parser("flop-check")
    _common(p)
    p.add_argument("--model", choices=("flop", "flip"), default="flop")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=None, help="defaults to QLH_SEED or 0")
    p.set_defaults(func=cmd_flop_check)

    p = sub.add_parser("flip-blockdiag")
    _common(p)
    p.add_argument("--order", type=int, default=4)
    p.set_defaults(func=cmd_flip_blockdiag)

    p = sub.add_parser("blowup-factor")
    _common(p)
    p.add_argument("--D", default="0,0", help="D_i . beta, comma separated")
    p.add_argument("--E", type=int, default=-1, help="E . beta")
    p.add_argument("--no-exceptional", action="store_true", help="take E = 0 (Cartier centre)")
    p.set_defaults(func=cmd_blowup_factor)

    p = sub.add_parser("det-factor")
    _common(p)
    p.add_argument("--L", default="0,0", help="L_i . beta for i = 0..n, comma separated")
    p.add_argument("--h", type=int, default=1, help="h . beta")
    p.add_argument("--trivial-L", action="store_true", help="take every L_i to be the zero class")
    p.set_defaults(func=cmd_det_factor)

    p = sub.add_parser("conifold-check")
    _common(p)
    p.add_argument("--data", help="transition data JSON file")
    p.set_defaults(func=cmd_conifold_check)

    p = sub.add_parser("oracle")
    _common(p)
    p.add_argument("which", choices=("g25-lines", "kontsevich"))
    p.add_argument("--dmax", type=int, default=3)
    p.add_argument("--c2", choices=("sigma11", "sigma2"), default="sigma11")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify-all")
    _common(p)
    p.add_argument("--write-golden", metavar="DIR", help="write fresh golden payloads into DIR")
    p.set_defaults(func=cmd_verify_all)
    return parser


def emit(payload: dict, args, status: str):
    payload = dict(payload, status=status)
    text = render_json(payload)
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    sys.stdout.write(text if args.format == "json" else render_table(payload))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        payload = args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except Failure as exc:
        emit(exc.payload, args, "fail")
        return 1
    except QLHError as exc:
        emit({"error": type(exc).__name__, "message": str(exc)}, args, "fail")
        return 1
    emit(payload, args, "ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
