"""Command line front end.

Every command prints one JSON document (sorted keys) to stdout or ``--out``.
Exit status is 0 on success and 2 on any domain error; a search that runs out
of budget still writes its partial result before exiting with 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .action import (
    DiscreteMeasure, action_from_json, defects, frac_str, generator_graph, invariance_defect,
    invertibility_defect, to_fraction, total_variation, pushforward, weiss_fraction,
)
from .algebra import MonoidSpec, builtin, format_word, monoid_from_json, parse_word
from .cayley import ball_to_json, cayley_ball
from .dynsys import ShiftSystem, build_approximation, is_keps_approximation, nu_prime, nu_true, weak_discrepancy
from .errors import BudgetExceeded, RadiusTooLarge, SoficlabError, ValidationError
from .search import DEFAULT_BUDGET, default_workers, search_exhaustive, search_random


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from None


def load_monoid(spec: str) -> MonoidSpec:
    """A built-in name, or a path to a monoid JSON file."""
    if os.path.isfile(spec):
        return monoid_from_json(_read_json(spec))
    return builtin(spec)


def _emit(obj, out: Optional[str]):
    text = dumps(obj)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------


def cmd_ball(args) -> dict:
    m = load_monoid(args.monoid)
    out = ball_to_json(cayley_ball(m, args.radius))
    out["monoid"] = m.name
    return out


def cmd_check(args) -> dict:
    obj = _read_json(args.action)
    m = load_monoid(args.monoid) if args.monoid else None
    a = action_from_json(obj, m)
    m = a.monoid
    uniform = DiscreteMeasure.uniform(a.n)
    out = {
        "n": a.n,
        "monoid": m.name,
        "K": [format_word(s, m) for s in a.K],
        "defects": defects(a).to_json(),
        "invariance_defect": frac_str(invariance_defect(a, uniform)),
        "invariance_by_element": {
            format_word(s, m): frac_str(total_variation(uniform, pushforward(uniform, a[s]))) for s in a.K
        },
        "invertibility_defect": {format_word(s, m): frac_str(q) for s, q in invertibility_defect(a).items()},
    }
    if args.radius is not None:
        model = cayley_ball(m, args.radius)
        out["radius"] = args.radius
        out["weiss_fraction"] = frac_str(weiss_fraction(generator_graph(a), model, args.radius))
    if args.eps is not None:
        eps = to_fraction(args.eps)
        out["eps"] = frac_str(eps)
        out["is_keps"] = defects(a).eps_overall <= eps
    return out


def cmd_search(args) -> dict:
    m = load_monoid(args.monoid)
    K = [parse_word(s.strip(), m) for s in args.K.split(",")]
    workers = default_workers() if args.workers is None else args.workers
    if args.mode == "random":
        res = search_random(m, K, args.n, args.iterations, args.seed, workers=workers)
    else:
        res = search_exhaustive(m, K, args.n, args.budget, normalized=args.mode == "normalized", workers=workers)
    out = res.to_json()
    if args.eps is not None:
        eps = to_fraction(args.eps)
        out["eps"] = frac_str(eps)
        out["is_keps"] = res.min_eps is not None and res.min_eps <= eps
    return out


def cmd_dynsys_build(args) -> dict:
    system = ShiftSystem(args.branching, args.powers)
    return build_approximation(system, args.r, args.k).to_json()


def cmd_dynsys_compare(args) -> dict:
    if args.level > args.r:
        raise RadiusTooLarge(f"level {args.level} exceeds r = {args.r}")
    powers = max(args.level, 1) if args.powers is None else args.powers
    workers = default_workers() if args.workers is None else args.workers
    system = ShiftSystem(args.branching, powers)
    approx = build_approximation(system, args.r, args.k)
    truth = nu_true(system, args.level, args.label_digits, workers=workers)
    model = nu_prime(approx, args.level, args.label_digits, workers=workers)
    out = {
        "r": args.r,
        "k": args.k,
        "level": args.level,
        "n_powers": powers,
        "branching": args.branching,
        "label_digits": args.level if args.label_digits is None else args.label_digits,
        "nu_true": truth.to_json(),
        "nu_prime": model.to_json(),
        "weak_discrepancy": frac_str(weak_discrepancy(truth, model)),
        "invariance_defect": frac_str(invariance_defect(approx.psi, approx.mu_prime)),
    }
    if args.eps is not None:
        if args.label_digits is not None:
            raise ValidationError("--eps uses the default label length; drop --label-digits")
        _, report = is_keps_approximation(approx, args.eps, args.level, workers=workers, true_measure=truth)
        out["approximation"] = report.to_json()
    return out


# --- parser -----------------------------------------------------------------


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soficlab", description="Soficity toolkit for finitely presented monoids.")
    p.add_argument("--version", action="version", version=f"soficlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, workers=False):
        sp.add_argument("--out", help="write JSON here instead of stdout")
        if workers:
            sp.add_argument("--workers", type=_positive, default=None,
                            help="worker threads (default: $SOFICLAB_WORKERS or 1)")

    b = sub.add_parser("ball", help="left Cayley ball of a monoid")
    b.add_argument("--monoid", required=True, help="built-in name or monoid JSON file")
    b.add_argument("--radius", type=_nonneg, required=True)
    common(b)
    b.set_defaults(func=cmd_ball)

    c = sub.add_parser("check", help="defects of a finite action given as JSON")
    c.add_argument("action", help="action JSON file")
    c.add_argument("--monoid", help="override the monoid named in the file")
    c.add_argument("--radius", type=_nonneg, help="also report the Weiss fraction at this radius")
    c.add_argument("--eps", help="report whether the action is a (K, eps)-action")
    common(c)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("search", help="minimal-defect (K, eps)-action on n points")
    s.add_argument("--monoid", required=True)
    s.add_argument("--K", required=True, help="comma separated normal forms, e.g. e,a,b,ba")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--mode", choices=("exhaustive", "normalized", "random"), default="exhaustive")
    s.add_argument("--eps")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)
    s.add_argument("--iterations", type=_nonneg, default=100)
    common(s, workers=True)
    s.set_defaults(func=cmd_search)

    d = sub.add_parser("dynsys", help="finite approximations of the doubling map")
    dsub = d.add_subparsers(dest="dyn_command", required=True)
    db = dsub.add_parser("build", help="build X', mu' and psi")
    db.add_argument("--r", type=_positive, required=True)
    db.add_argument("--k", type=_positive, required=True)
    db.add_argument("--powers", type=_positive, default=1)
    db.add_argument("--branching", type=int, default=2)
    common(db)
    db.set_defaults(func=cmd_dynsys_build)

    dc = dsub.add_parser("compare", help="pattern measures of X' against the true system")
    dc.add_argument("--r", type=_positive, required=True)
    dc.add_argument("--k", type=_positive, default=1)
    dc.add_argument("--level", type=_nonneg, required=True, help="pattern radius r'")
    dc.add_argument("--powers", type=_positive, default=None, help="default: max(level, 1)")
    dc.add_argument("--branching", type=int, default=2)
    dc.add_argument("--label-digits", type=_nonneg, default=None)
    dc.add_argument("--eps")
    common(dc, workers=True)
    dc.set_defaults(func=cmd_dynsys_compare)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _emit(args.func(args), args.out)
    except BudgetExceeded as exc:
        if exc.partial is not None:
            _emit(exc.partial.to_json(), args.out)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SoficlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
