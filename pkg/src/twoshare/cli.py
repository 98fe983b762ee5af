"""Command-line front end.

Subcommands: encode, decode, attack, validate-scheme, experiment.  Every
subcommand accepts --seed, --mode, --out and --format; flags that a
subcommand has no use for are accepted and ignored so scripts can pass a
uniform set.  Exit codes: 0 success, 1 configuration error, 2 a checked
bound came back violated.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import attack as atk
from . import block, harness, symbol
from .outcome import DecodeOutcome
from .prob import PMF, RandomStream
from .typical import EmptyTypicalSetError, GammaSchedule, build_index
from .prob import CapExceededError
from .symbol import SchemeValidationError


def _schedule_from(text: str) -> GammaSchedule:
    kind, _, arg = text.partition(":")
    if kind == "power":
        return GammaSchedule.power_law(float(arg) if arg else 1.0 / 3.0)
    if kind == "const":
        return GammaSchedule.constant(float(arg))
    raise ValueError(f"schedule must be power[:a] or const:gamma, not {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="random stream seed")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--out", default=None, help="write output to this path")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv",
                   help="experiment report format")
    p.add_argument("--trials", type=int, default=100000,
                   help="Monte Carlo trial count")


def _scheme_flags(p: argparse.ArgumentParser):
    p.add_argument("--scheme", choices=("blockwise", "symbolwise"),
                   required=True)
    p.add_argument("--source", required=True,
                   help="PMF: '0.7,0.3', '[0.5,0.5]', or 'uniform:k'")
    p.add_argument("--n", type=int, required=True, help="blocklength")
    p.add_argument("--gamma", default="power",
                   help="slack schedule, power[:a] or const:gamma")
    p.add_argument("--ell", type=float, default=0.0,
                   help="blockwise correlation level")
    p.add_argument("--m", type=int, default=None,
                   help="symbolwise share alphabet size")


def _build_scheme(args):
    source = PMF.from_text(args.source)
    gamma = _schedule_from(args.gamma).gamma_at(args.n)
    if args.scheme == "blockwise":
        index = build_index(source, args.n, gamma)
        return block.BlockwiseParams(args.ell, index), source
    if args.m is None:
        raise ValueError("symbolwise runs need --m")
    scheme = symbol.modular_scheme(args.m, source.support_size)
    return symbol.make_codec(scheme, source, args.n, gamma), source


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_encode(args) -> int:
    obj, source = _build_scheme(args)
    secret = _int_list(args.secret)
    rng = RandomStream(args.seed)
    if isinstance(obj, block.BlockwiseParams):
        r = obj.draw_randomness(rng)
        x, y = block.encode(obj, secret, r)
        out = {"x": {"l": x.l, "m": x.m}, "y": {"l": y.l, "m": y.m},
               "l_count": obj.l_count, "m_count": obj.m_count}
    else:
        rand = symbol.draw_randomness_n(obj, rng)
        xs, ys = symbol.encode_n(obj, secret, rand)
        out = {"x": list(xs), "y": list(ys)}
    _emit(args, json.dumps(out, sort_keys=True))
    return 0


def _cmd_decode(args) -> int:
    obj, source = _build_scheme(args)
    if isinstance(obj, block.BlockwiseParams):
        xl, xm = _int_list(args.x)
        yl, ym = _int_list(args.y)
        outcome = block.decode(obj, block.BlockShare(xl, xm),
                               block.BlockShare(yl, ym))
    else:
        outcome = symbol.decode_n(obj, _int_list(args.x), _int_list(args.y))
    if outcome.rejected:
        _emit(args, json.dumps({"rejected": True}))
    else:
        _emit(args, json.dumps({"secret": list(outcome.secret)}))
    return 0


def _cmd_attack(args) -> int:
    obj, source = _build_scheme(args)
    side = args.side
    if args.mode == "exact":
        if isinstance(obj, block.BlockwiseParams):
            res = atk.blockwise_attack(obj, side)
        else:
            res = atk.symbolwise_attack(obj, side)
    else:
        if isinstance(obj, block.BlockwiseParams):
            forged = atk.blockwise_attack(obj, side).optimal_forgery
        else:
            forged = atk.symbolwise_attack(obj, side).optimal_forgery
        res = atk.monte_carlo_attack(obj, side, forged, args.trials,
                                     RandomStream(args.seed))
    out = {"side": res.side, "mode": res.mode,
           "success_prob": res.success_prob,
           "optimal_forgery": list(res.optimal_forgery)}
    if res.ci_halfwidth is not None:
        out["ci_halfwidth"] = res.ci_halfwidth
        out["trials"] = res.trials
    _emit(args, json.dumps(out, sort_keys=True))
    return 0


def _cmd_validate(args) -> int:
    source = PMF.from_text(args.source)
    m = args.m if args.m is not None else source.support_size
    builders = {
        "modular": symbol.modular_scheme,
        "identity-leak": symbol.identity_leak_scheme,
        "non-decodable": symbol.nondecodable_scheme,
        "undersized": symbol.undersized_scheme,
    }
    scheme = builders[args.variant](m, source.support_size)
    report = symbol.validate_base(scheme, source)
    out = {"scheme": scheme.name, "passed": report.passed,
           "h_s": report.h_s, "h_s_given_x": report.h_s_given_x,
           "h_s_given_y": report.h_s_given_y,
           "h_s_given_xy": report.h_s_given_xy,
           "correlation_level": report.ell,
           "failures": list(report.failures)}
    _emit(args, json.dumps(out, sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.mode is not None:
        raw["mode"] = args.mode
    if args.trials is not None:
        raw["trials"] = args.trials
    cfg = harness.ExperimentConfig.from_dict(raw)
    report = harness.run_experiment(cfg)
    _emit(args, harness.emit_report(report, args.format))
    return 2 if report.any_violated else 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="twoshare",
        description="Two-share threshold schemes with forgery detection")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="split a secret block into two shares")
    _scheme_flags(p)
    p.add_argument("--secret", required=True, help="comma-separated symbols")
    _common_flags(p)
    p.set_defaults(fn=_cmd_encode)

    p = sub.add_parser("decode", help="combine two shares")
    _scheme_flags(p)
    p.add_argument("--x", required=True, help="share X (blockwise: 'l,m')")
    p.add_argument("--y", required=True, help="share Y (blockwise: 'l,m')")
    _common_flags(p)
    p.set_defaults(fn=_cmd_decode)

    p = sub.add_parser("attack", help="optimal or sampled impersonation attack")
    _scheme_flags(p)
    p.add_argument("--side", choices=("x", "y"), default="x")
    _common_flags(p)
    p.set_defaults(fn=_cmd_attack)

    p = sub.add_parser("validate-scheme",
                       help="check a per-symbol splitter's profile")
    p.add_argument("--source", required=True)
    p.add_argument("--m", type=int, default=None,
                   help="share alphabet size (default |S|)")
    p.add_argument("--variant", default="modular",
                   choices=("modular", "identity-leak", "non-decodable",
                            "undersized"))
    _common_flags(p)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("experiment", help="run a config file, emit a report")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--mode", choices=("exact", "mc"), default=None,
                   help="override the config mode")
    p.add_argument("--trials", type=int, default=None,
                   help="override the config trial count")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(fn=_cmd_experiment)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for violated
        # bound verdicts, so usage problems report as config errors
        return 0 if exc.code in (0, None) else 1
    try:
        return args.fn(args)
    except (harness.ConfigError, SchemeValidationError, EmptyTypicalSetError,
            CapExceededError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
