"""Command-line front end.

Each subcommand writes exactly one CSV table or JSON document to stdout (or
``--output``). Numbers are printed with 9 significant digits. Warnings go to
stderr as ``WARN <code> <message>`` lines.

Exit status: 0 success, 1 domain/configuration error, 2 numerical
non-convergence, 3 validity-window rejection, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import evaporation as evap
from .core import (
    ConfigurationError,
    Constants,
    DomainError,
    ForceLaw,
    NumericalError,
    TransitionSpec,
    ValidityError,
)
from .oracle import QuadratureConfig, integral_p21, transient_bound
from .transition import p21_closed_form
from .wavepacket import PacketParams, eval_exact, eval_semiclassical

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_VALIDITY, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    constants: Constants
    force: ForceLaw
    output_format: str
    output_path: str | None
    seed: int | None

    @classmethod
    def from_args(cls, ns) -> "RunConfig":
        G = getattr(ns, "G", None)
        f = getattr(ns, "f", None)
        if ns.mode == "blackhole":
            if G is None:
                raise ConfigurationError("blackhole mode requires --G")
            if f is not None:
                raise ConfigurationError("blackhole mode fixes f = 1/(4G); --f is not allowed")
        elif G is not None:
            raise ConfigurationError("--G is only valid with --mode blackhole")
        constants = Constants(hbar=ns.hbar, G=G if ns.mode == "blackhole" else None)
        return cls(
            mode=ns.mode,
            constants=constants,
            force=ForceLaw.from_constants(constants, f),
            output_format=ns.format,
            output_path=ns.output,
            seed=ns.seed,
        )


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(format(v, ".9g")) if math.isfinite(v) else None
    return v


def dump_json(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"


def dump_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--config", help="JSON file whose keys are long-flag names")
    p.add_argument("--mode", choices=["unruh", "blackhole"], default="unruh")
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--G", type=float, default=None, help="Newton constant (blackhole mode)")
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--output", default=None, help="output path (default: stdout)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--force-invalid", action="store_true",
                   help="proceed outside the validity window")
    return p


def _add_force(p):
    p.add_argument("--f", type=float, default=None, help="constant force (unruh mode, default 1)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    root = _Parser(prog="backreact", description=__doc__.splitlines()[0])
    sub = root.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prob", parents=[common], help="closed-form transition weight")
    _add_force(p)
    p.add_argument("--a", type=float, default=1.0, help="midpoint acceleration")
    p.add_argument("--da", type=float, default=0.1)
    p.add_argument("--Q", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)

    p = sub.add_parser("oracle", parents=[common], help="numerical double-integral check")
    _add_force(p)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--da", type=float, default=0.05)
    p.add_argument("--Q", type=float, default=1.0)
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--eps-sweep", type=float, nargs="*", default=[1e-3, 5e-4, 2.5e-4])
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--abs-tol", type=float, default=1e-14)
    p.add_argument("--sweep-rtol", type=float, default=1e-3)

    p = sub.add_parser("wavepacket", parents=[common], help="tabulate a detector packet")
    p.add_argument("--m", type=float, default=100.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--kind", choices=["exact", "semiclassical"], default="exact")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--zmin", type=float, default=None)
    p.add_argument("--zmax", type=float, default=None)

    p = sub.add_parser("evaporate", parents=[common], help="evaporation trajectory")
    _add_force(p)
    p.add_argument("--m0", type=float, default=1.0)
    p.add_argument("--Q", type=float, default=1.0)
    p.add_argument("--xmin", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--until", type=float, default=0.99, help="fraction of tau_d")

    p = sub.add_parser("cascade", parents=[common], help="N-quantum emission cascade")
    _add_force(p)
    p.add_argument("--m0", type=float, default=10.0)
    p.add_argument("--Q", type=float, default=0.1)
    p.add_argument("--xmin", type=float, default=0.1)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--summary", default=None, help="also write the JSON summary to this path")

    p = sub.add_parser("validity", parents=[common], help="validity window for a step length")
    _add_force(p)
    p.add_argument("--m", type=float, default=10.0)
    p.add_argument("--Q", type=float, default=0.1)
    p.add_argument("--xmin", type=float, default=0.1)
    p.add_argument("--L", type=float, default=100.0)
    p.add_argument("--mdot", type=float, default=None, help="override the mass-loss rate")

    p = sub.add_parser("sample", parents=[common], help="Planck-weighted frequency draws")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--xmin", type=float, default=0.1)
    p.add_argument("--xmax", type=float, default=20.0)
    p.add_argument("--stream", default="planck")
    return root


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]):
    ns = parser.parse_args(argv)
    if not ns.config:
        return ns
    with open(ns.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[ns.command]
    dests = {a.option_strings[0].lstrip("-"): a.dest for a in sub._actions if a.option_strings}
    defaults = {}
    for key, value in cfg.items():
        if key not in dests or key == "config":
            raise UsageError(f"unknown config key {key!r} for '{ns.command}'")
        defaults[dests[key]] = value
    sub.set_defaults(**defaults)
    # explicit flags still win because they are re-parsed over the new defaults
    return parser.parse_args(argv)


def _cmd_prob(ns, rc: RunConfig):
    spec = TransitionSpec.from_midpoint(ns.a, ns.da, f=rc.force.f, L=ns.L, Q=ns.Q)
    res = p21_closed_form(spec, rc.constants, rc.force.f)
    d = res.as_dict()
    if rc.output_format == "csv":
        return dump_csv(list(d), [list(d.values())])
    return dump_json(d)


def _cmd_oracle(ns, rc: RunConfig):
    spec = TransitionSpec.from_midpoint(ns.a, ns.da, f=rc.force.f, L=ns.L, Q=ns.Q)
    q = QuadratureConfig(eps=ns.eps, rel_tol=ns.rel_tol, abs_tol=ns.abs_tol,
                         eps_sweep=tuple(ns.eps_sweep), sweep_rtol=ns.sweep_rtol)
    report = transient_bound(spec, rc.constants, rc.force.f)
    if report.status == "marginal":
        warnings.warn(f"omega*L = {report.omega_L:.3g}, da*L = {report.da_L:.3g}",
                      evap.ValidityWarning)
    res = integral_p21(spec, rc.constants, rc.force.f, q, override_validity=ns.force_invalid,
                       workers=max(ns.threads, 1))
    closed = p21_closed_form(spec, rc.constants, rc.force.f).p21
    d = res.as_dict()
    d["closed_form"] = closed
    d["rel_deviation"] = (res.value - closed) / closed
    if rc.output_format == "csv":
        return dump_csv(list(d), [list(d.values())])
    return dump_json(d)


def _cmd_wavepacket(ns, rc: RunConfig):
    p = PacketParams(m=ns.m, a=ns.a, b=ns.b, hbar=rc.constants.hbar)
    center, width = p.center(ns.tau), max(p.width(ns.tau), ns.b * math.cosh(ns.a * ns.tau))
    zmin = center - 6 * width if ns.zmin is None else ns.zmin
    zmax = center + 6 * width if ns.zmax is None else ns.zmax
    z = np.linspace(zmin, zmax, ns.points)
    ev = eval_exact if ns.kind == "exact" else eval_semiclassical
    psi = ev(p, z, ns.tau)
    rows = zip(z, psi.real, psi.imag, np.abs(psi) ** 2)
    if rc.output_format == "json":
        return dump_json([dict(zip(("z", "re", "im", "abs2"), r)) for r in rows])
    return dump_csv(["z", "re", "im", "abs2"], rows)


def _evap_params(ns, rc: RunConfig, m0):
    return evap.EvaporationParams(m0=m0, f=rc.force.f, Q=ns.Q, x_min=ns.xmin,
                                  hbar=rc.constants.hbar)


def _cmd_evaporate(ns, rc: RunConfig):
    params = _evap_params(ns, rc, ns.m0)
    tr = evap.trajectory(params, ns.samples, ns.until)
    rows = zip(tr.tau, tr.m, tr.a, tr.temperature())
    if rc.output_format == "json":
        return dump_json({"tau_d": tr.tau_d,
                          "samples": [dict(zip(("tau", "m", "a", "temperature"), r)) for r in rows]})
    return dump_csv(["tau", "m", "a", "temperature"], rows)


def _cmd_cascade(ns, rc: RunConfig):
    params = _evap_params(ns, rc, ns.m0)
    tau_d = evap.decay_time(params)
    until = min(ns.N * ns.L / tau_d, 1 - 1e-12)
    if not until < 1:
        raise DomainError(f"N*L = {ns.N * ns.L!r} reaches tau_d = {tau_d!r}")
    tr = evap.trajectory(params, 2, until)
    specs = evap.discretize(tr, ns.L, ns.N, check_validity=not ns.force_invalid)
    res = evap.cascade_probability(specs, rc.constants, rc.force.f, m0=ns.m0, tau_d=tau_d)
    summary = res.summary()
    if ns.summary:
        with open(ns.summary, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dump_json(summary))
    rows = [(s.r, s.a_mid, s.da, s.dm, s.x, s.P_r) for s in res.steps]
    header = ["r", "a_mid", "da", "dm", "x", "P_r"]
    if rc.output_format == "json":
        return dump_json({"summary": summary, "steps": [dict(zip(header, r)) for r in rows]})
    return dump_csv(header, rows)


def _cmd_validity(ns, rc: RunConfig):
    params = _evap_params(ns, rc, ns.m)
    mdot = ns.mdot if ns.mdot is not None else evap.mass_loss_rate(ns.m, params)
    rep = evap.validity_check(ns.m, mdot, rc.force.f, ns.L, rc.constants)
    d = {"mdot": mdot, **rep.as_dict()}
    if rc.output_format == "csv":
        return dump_csv(list(d), [list(d.values())])
    return dump_json(d)


def _cmd_sample(ns, rc: RunConfig):
    seed = 0 if rc.seed is None else rc.seed
    rng = evap.derive_stream(seed, ns.stream)
    x = evap.sample_planck_frequency(1.0, ns.xmin, ns.xmax, rng, size=ns.n)
    if rc.output_format == "json":
        return dump_json({"seed": seed, "stream": ns.stream, "x": x.tolist()})
    return dump_csv(["i", "x"], enumerate(x))


COMMANDS = {
    "prob": (_cmd_prob, "json"),
    "oracle": (_cmd_oracle, "json"),
    "wavepacket": (_cmd_wavepacket, "csv"),
    "evaporate": (_cmd_evaporate, "csv"),
    "cascade": (_cmd_cascade, "csv"),
    "validity": (_cmd_validity, "json"),
    "sample": (_cmd_sample, "csv"),
}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Execute one subcommand; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = _apply_config(parser, argv)
    except UsageError as exc:
        print(str(exc), file=stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=stderr)
        return EXIT_USAGE

    handler, default_format = COMMANDS[ns.command]
    if ns.format is None:
        ns.format = default_format
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rc = RunConfig.from_args(ns)
            text = handler(ns, rc)
            status = EXIT_OK
        except ValidityError as exc:
            print(f"error: validity window: {exc}", file=stderr)
            text, status = None, EXIT_VALIDITY
        except NumericalError as exc:
            print(f"error: numerical: {exc}", file=stderr)
            text, status = None, EXIT_NUMERIC
        except (DomainError, ConfigurationError) as exc:
            print(f"error: {exc}", file=stderr)
            text, status = None, EXIT_DOMAIN
    for w in caught:
        code = getattr(w.category, "code", w.category.__name__)
        print(f"WARN {code} {w.message}", file=stderr)
    if text is not None:
        if ns.output:
            with open(ns.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            stdout.write(text)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
