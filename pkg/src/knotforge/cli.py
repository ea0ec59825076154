"""``knotforge`` command line.

Data goes to stdout (or ``--out``), diagnostics to stderr. Exit status is 0
on success, 1 for invalid input and 2 when a numerical procedure does not
converge.
"""
import argparse
import sys

from . import __version__
from .curves import curve_from_spec, inscribe_equilateral, inscribe_uniform
from .energies import ENERGY_KINDS, energy, ropelength_discrete
from .errors import ConvergenceError, ValidationError
from .experiments import (
    STUDY_ENERGIES,
    convergence_study,
    gamma_recovery,
    minimizer_trend,
    rawdon_bound_check,
)
from .geometry import regular_ngon
from .io import RunManifest, load_polygon, save_polygon, save_report
from .minimize import MINIMIZE_ENERGIES, MinimizeConfig, anneal, descend_fd, replay_move_log
from .reference import reference

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INVALID)


def _int_list(text):
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _common():
    # accepted before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker threads for independent evaluations (default 1)")
    p.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS,
                   help="output format (default json)")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="knotforge", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"knotforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("energy", parents=[common], help="discrete energy of a polygon file")
    p.add_argument("--kind", choices=ENERGY_KINDS, required=True)
    p.add_argument("--s", type=float, help="Menger exponent")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default="-")

    p = sub.add_parser("reference", parents=[common], help="smooth energy of an analytic curve")
    p.add_argument("--curve", default="circle", help="circle, torus:P,Q or ellipse:A,B")
    p.add_argument("--energy", choices=("moebius", "menger", "thickness"), required=True)
    p.add_argument("--s", type=float)
    p.add_argument("--nmax", type=int, help="finest ladder polygon")
    p.add_argument("--closed-form", action="store_true", help="use the closed form where one exists")
    p.add_argument("--out", default="-")

    p = sub.add_parser("minimize", parents=[common], help="anneal a polygon within its knot class")
    p.add_argument("--energy", choices=MINIMIZE_ENERGIES, required=True)
    p.add_argument("--s", type=float)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--iters", type=int, default=MinimizeConfig.iterations)
    p.add_argument("--step", type=float, default=MinimizeConfig.initial_step, help="initial step, fraction of L")
    p.add_argument("--cooling", type=float, default=MinimizeConfig.cooling_factor)
    p.add_argument("--temperature", type=float, default=MinimizeConfig.temperature_initial)
    p.add_argument("--epoch-length", type=int, default=MinimizeConfig.epoch_length)
    p.add_argument("--polish", type=int, default=0, help="finite-difference descent steps after annealing")
    p.add_argument("--verify", action="store_true", help="replay the move log and report crossing violations")
    p.add_argument("--out", default="-")

    p = sub.add_parser("converge", parents=[common], help="discrete energies of inscribed polygons versus n")
    p.add_argument("--curve", default="circle")
    p.add_argument("--energy", choices=STUDY_ENERGIES, required=True)
    p.add_argument("--s", type=float)
    p.add_argument("--n", type=_int_list, default=[32, 64, 128, 256, 512])
    p.add_argument("--out", default="-")

    p = sub.add_parser("study", parents=[common], help="rawdon, gamma or minimizer studies")
    study = p.add_subparsers(dest="study", required=True, parser_class=_Parser)
    q = study.add_parser("rawdon", parents=[common], help="explicit minimum distance energy bound")
    q.add_argument("--curve", default="circle")
    q.add_argument("--n", type=_int_list, default=[32, 64, 128, 256, 512])
    q.add_argument("--out", default="-")
    q = study.add_parser("gamma", parents=[common], help="inscribed polygons as recovery sequences")
    q.add_argument("--curve", default="circle")
    q.add_argument("--energy", choices=("moebius", "menger", "thickness_inv"), required=True)
    q.add_argument("--s", type=float)
    q.add_argument("--n", type=_int_list, default=[16, 32, 64, 128])
    q.add_argument("--out", default="-")
    q = study.add_parser("minimizer", parents=[common], help="annealed energies versus n")
    q.add_argument("--knot", choices=("unknot", "trefoil"), default="unknot")
    q.add_argument("--energy", choices=MINIMIZE_ENERGIES, required=True)
    q.add_argument("--s", type=float)
    q.add_argument("--n", type=_int_list, default=[8, 16, 32])
    q.add_argument("--seeds", type=_int_list, default=[0])
    q.add_argument("--iters", type=int, default=MinimizeConfig.iterations)
    q.add_argument("--verify", action="store_true")
    q.add_argument("--out", default="-")

    p = sub.add_parser("ngon", parents=[common], help="write the regular n-gon")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--text", action="store_true", help="plain 'x y z' format instead of JSON")
    p.add_argument("--out", default="-")

    p = sub.add_parser("inscribe", parents=[common], help="write a polygon inscribed in a curve")
    p.add_argument("--curve", default="circle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--equilateral", action="store_true", help="equal chords instead of equal arcs")
    p.add_argument("--text", action="store_true")
    p.add_argument("--out", default="-")
    return parser


def _emit(args, report, manifest):
    save_report(report, args.out, manifest.finish(), fmt=args.format)
    if hasattr(report, "table") and args.out != "-":
        print(report.table(), file=sys.stderr)


def _energy(args, manifest):
    p = load_polygon(args.input)
    rep = energy(p, args.kind, args.s)
    payload = {**rep.to_dict(), "s": args.s, "n": p.n, "total_length": p.total_length}
    if args.kind == "thickness":
        payload["ropelength"] = ropelength_discrete(p)
    if args.format == "csv":
        raise ValidationError("energy reports are JSON only")
    save_report(payload, args.out, manifest.finish())


def _reference(args, manifest):
    curve = curve_from_spec(args.curve)
    if args.energy == "menger" and args.s is None:
        raise ValidationError("--s is required for the Menger energy")
    ref = reference(curve, args.energy, args.s, args.nmax, closed_form=args.closed_form)
    save_report({**ref.to_dict(), "curve": args.curve, "energy": args.energy, "s": args.s},
                args.out, manifest.finish())


def _minimize(args, manifest):
    p0 = load_polygon(args.input)
    cfg = MinimizeConfig(
        energy=args.energy, s=args.s, iterations=args.iters, initial_step=args.step,
        cooling_factor=args.cooling, temperature_initial=args.temperature, seed=args.seed,
        epoch_length=args.epoch_length,
    )
    manifest.config = cfg.to_dict()
    run = anneal(p0, cfg)
    print(f"accepted {run.accepted}, rejected {run.rejected}, crossing-rejected {run.crossing_rejected}; "
          f"energy {run.initial_energy:.10g} -> {run.final_energy:.10g}", file=sys.stderr)
    for a, b in run.stagnation:
        print(f"stagnation: acceptance below 0.1% in iterations {a}..{b}", file=sys.stderr)
    payload = run.to_dict()
    if args.polish:
        pcfg = MinimizeConfig.from_dict({**cfg.to_dict(), "iterations": args.polish})
        polished = descend_fd(run.final, pcfg)
        payload["polish"] = polished.to_dict()
        print(f"polished energy {polished.final_energy:.10g}", file=sys.stderr)
    if args.verify:
        violations, _ = replay_move_log(p0, run.move_log, cfg)
        payload["replay_violations"] = violations
        print(f"replay: {violations} crossing violations", file=sys.stderr)
    save_report(payload, args.out, manifest.finish())


def _converge(args, manifest):
    curve = curve_from_spec(args.curve)
    st = convergence_study(curve, args.energy, args.n, s=args.s, threads=args.threads)
    _emit(args, st, manifest)


def _study(args, manifest):
    if args.study == "rawdon":
        rep = rawdon_bound_check(curve_from_spec(args.curve), args.n)
    elif args.study == "gamma":
        rep = gamma_recovery(curve_from_spec(args.curve), args.energy, args.n, s=args.s)
    else:
        cfg = MinimizeConfig(energy=args.energy, s=args.s, iterations=args.iters, seed=args.seed)
        manifest.config = cfg.to_dict()
        rep = minimizer_trend(args.knot, args.energy, args.n, args.seeds, cfg, verify_replay=args.verify, s=args.s)
    _emit(args, rep, manifest)


def _ngon(args, manifest):
    save_polygon(regular_ngon(args.n, args.length), args.out, "text" if args.text else "json")


def _inscribe(args, manifest):
    curve = curve_from_spec(args.curve)
    p = inscribe_equilateral(curve, args.n) if args.equilateral else inscribe_uniform(curve, args.n)
    save_polygon(p, args.out, "text" if args.text else "json")


COMMANDS = {
    "energy": _energy,
    "reference": _reference,
    "minimize": _minimize,
    "converge": _converge,
    "study": _study,
    "ngon": _ngon,
    "inscribe": _inscribe,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name, default in (("seed", 0), ("threads", 1), ("format", "json")):
        if not hasattr(args, name):
            setattr(args, name, default)
    inputs = [args.input] if getattr(args, "input", None) else []
    try:
        manifest = RunManifest.create(["knotforge", *argv], vars(args), inputs, args.seed)
        COMMANDS[args.command](args, manifest)
    except ConvergenceError as exc:
        print(f"knotforge: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ValidationError, ValueError) as exc:
        print(f"knotforge: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"knotforge: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
