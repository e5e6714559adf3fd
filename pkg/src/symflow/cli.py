"""Command line interface.

Exit status: 0 success, 1 module error, 2 malformed config or arguments,
3 acceptance criteria failed.  Errors go to stderr as one JSON object.
Artifacts are assembled in memory and written only once everything succeeded.
"""
import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from . import diagnostics as diag
from . import experiments as ex
from . import fields as F
from . import polyalg as pa
from ._spectral import BlowUpError, CFLError
from .groups import _CATALOG, _CATALOG_2D, group_label, standard_group


class Failure(Exception):
    def __init__(self, status, kind, message):
        super().__init__(message)
        self.status, self.kind = status, kind


def _hash(obj):
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _file_hash(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def _envelope(command, params, result):
    return {"symflow_version": __version__, "config_hash": _hash({"command": command, "params": params}),
            "config": {"command": command, "params": params}, "result": result}


def _csv_header(command, params):
    return f"# symflow_version={__version__}\n# config_hash={_hash({'command': command, 'params': params})}\n"


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise Failure(2, "config", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise Failure(2, "config", f"{path}: invalid JSON: {exc}") from exc


def _load_field(args):
    if getattr(args, "builtin", None):
        try:
            return F.builtin_field(args.builtin, args.n)
        except ValueError as exc:
            raise Failure(2, "config", str(exc)) from exc
    if not args.input:
        raise Failure(2, "config", "need --input or --builtin")
    try:
        return F.PolyGaussianField.from_dict(_read_json(args.input))
    except ValueError as exc:
        raise Failure(2, "config", f"{args.input}: {exc}") from exc


def _emit(outputs, stdout_text=None):
    for path, text in outputs.items():
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    if stdout_text:
        sys.stdout.write(stdout_text)


# -- subcommands -------------------------------------------------------------------

def cmd_groups(args):
    if args.action == "list":
        rows = ["name,dim,order,generators"]
        for dim, table in ((3, _CATALOG), (2, _CATALOG_2D)):
            for name, (gens, order, needs_n) in table.items():
                if needs_n and args.n is None:
                    kinds = " ".join(k if m is None else f"{k}(n)" for k, m in gens(1))
                    size = f"{order(1)}n" if order(1) > 1 else "n"
                    rows.append(f"{name},{dim},{size},{kinds}")
                    continue
                n = args.n if needs_n else None
                kinds = " ".join(k if m is None else f"{k}({m})" for k, m in gens(n))
                rows.append(f"{group_label(name, n, dim)},{dim},{order(n)},{kinds}")
        _emit({}, "\n".join(rows) + "\n")
        return 0
    if not args.name:
        raise Failure(2, "config", "groups show needs a group name")
    try:
        G = standard_group(args.name, args.n, dim=args.dim)
    except ValueError as exc:
        raise Failure(2, "config", str(exc)) from exc
    d = G.dim
    cols = [f"p{i + 1}{j + 1}" for i in range(d) for j in range(d)]
    lines = [_csv_header("groups show", {"name": args.name, "n": args.n, "dim": args.dim}).rstrip("\n"),
             f"# group={G.name}", "index," + ",".join(cols) + ",det"]
    for k, g in enumerate(G.elements):
        vals = ",".join(repr(float(v) + 0.0) for v in g.matrix.ravel())
        lines.append(f"{k},{vals},{g.det_sign}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _emit({args.out: text}, f"{G.name}: order {G.order}\n")
    else:
        _emit({}, text)
    return 0


def cmd_field(args):
    f = _load_field(args)
    if args.action == "show":
        info = {"dim": f.dim, "components": f.n_components, "degree": f.degree, "envelope": f.envelope,
                "field": f.to_dict()}
        _emit({}, json.dumps(info, indent=2, sort_keys=True) + "\n")
        return 0
    if not args.group:
        raise Failure(2, "config", "field check needs --group")
    try:
        G = standard_group(args.group, args.group_n, dim=f.dim)
        defect = F.invariance_defect(f, G, args.mode)
        ok = F.is_invariant(f, G, args.mode, args.tol)
    except ValueError as exc:
        raise Failure(2, "config", str(exc)) from exc
    out = {"group": G.name, "mode": args.mode, "tolerance": args.tol, "defect": defect,
           "relative_defect": defect / (f.coeff_norm() or 1.0), "invariant": ok}
    _emit({}, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0 if ok else 3


def cmd_pm(args):
    f = _load_field(args)
    P = pa.compute_Pm(f, args.m)
    text = json.dumps(P.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        _emit({args.out: text})
    else:
        _emit({}, text)
    return 0


def cmd_divisible(args):
    try:
        P = pa.HomogeneousPolynomial.from_dict(_read_json(args.input))
    except ValueError as exc:
        raise Failure(2, "config", f"{args.input}: {exc}") from exc
    Q, R = pa.divide_by_r2(P)
    out = {"divisible": pa.is_divisible(P), "remainder_ratio": R.norm() / (P.norm() or 1.0),
           "quotient": Q.to_dict() if Q is not None else None}
    _emit({}, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_invariant_space(args):
    try:
        G = standard_group(args.group, args.n)
    except ValueError as exc:
        raise Failure(2, "config", str(exc)) from exc
    basis = pa.invariant_space(G, args.degree)
    div = pa.divisible_subspace(basis)
    res = {"group": G.name, "degree": args.degree, "dimension": len(basis),
           "divisible_dimension": len(div), "basis": [b.to_dict() for b in basis],
           "divisible_basis": [b.to_dict() for b in div]}
    text = json.dumps(_envelope("invariant-space", {"group": args.group, "n": args.n, "degree": args.degree}, res),
                      indent=2, sort_keys=True) + "\n"
    if args.out:
        _emit({args.out: text}, f"{G.name} degree {args.degree}: dimension {len(basis)}, divisible {len(div)}\n")
    else:
        _emit({}, text)
    return 0


def _sim_config(path, kind):
    data = _read_json(path)
    if isinstance(data, dict) and "kind" in data:
        config = ex.ExperimentConfig.from_dict(data)
        if config.kind != kind:
            raise ex.ConfigError(f"expected a {kind} config, got {config.kind}")
        return config
    if not isinstance(data, dict):
        raise ex.ConfigError("config must be an object")
    return ex.ExperimentConfig(kind, data, os.path.splitext(os.path.basename(path))[0])


def cmd_simulate(args, kind):
    config = _sim_config(args.config, kind)
    base = os.path.dirname(os.path.abspath(args.config))
    # validate fully before any stepping
    (ex.sim2d_config if kind == "simulate2d" else ex.sim3d_config)(config.params, base)
    result, arts = ex.run(config, base)
    outputs = {args.out: arts[".csv"]}
    stem = os.path.splitext(args.out)[0]
    if args.report:
        outputs[stem + ".json"] = ex.dump_json(ex.envelope(config, result))
    if args.svg:
        outputs[stem + ".svg"] = arts[".svg"]
    _emit(outputs, f"{config.name}: {len(arts['.csv'].splitlines())} lines, hash {config.hash}\n")
    return 0


def _series(path):
    try:
        return diag.DiagnosticSeries.read_csv(path)
    except OSError as exc:
        raise Failure(2, "config", f"cannot read {path}: {exc.strerror}") from exc


def cmd_report(args):
    series = _series(args.series)
    dim = args.dim or (2 if series.metadata.get("group", "").endswith("(2d)") else 3)
    try:
        pred = pa.predicted_rates(args.group, dim, args.n)
    except ValueError as exc:
        raise Failure(2, "config", str(exc)) from exc
    lo = args.t_min
    res = diag.compare(series, pred, window=(lo, args.t_max))
    params = {"series_sha": _file_hash(args.series), "group": args.group, "n": args.n, "dim": dim,
              "t_min": lo, "t_max": args.t_max}
    text = json.dumps(_envelope("report", params, res), indent=2, sort_keys=True) + "\n"
    _emit({args.out: text}, f"{pred.group}: {'pass' if res['pass'] else 'fail'}\n")
    return 0


def cmd_plot(args):
    series = _series(args.series)
    channels = args.channels.split(",") if args.channels else None
    series.metadata.setdefault("symflow_version", __version__)
    series.metadata["plot_config_hash"] = _hash({"series_sha": _file_hash(args.series), "channels": channels})
    _emit({args.out: diag.plot_svg(series, channels)})
    return 0


# -- accept ----------------------------------------------------------------------------

CRITERIA = (
    (1, "group catalog orders", "group-audit"),
    (2, "invariant-space dimensions", "lemma3-audit"),
    (3, "degree-6 icosahedral space", "lemma3-audit"),
    (4, "exact Gaussian constants", "section5-constants"),
    (5, "moment polynomial facts", "section5-constants"),
    (6, "divisibility counterexamples", "pm-divisibility"),
    (7, "moment cancellation", "moment-cancellation"),
    (8, "2-d heat oracle", "radial-oracle"),
    (9, "2-d D4 decay", "d4-decay"),
    (10, "3-d symmetry preservation", ("td-symmetry", "oh-symmetry", "yh-symmetry")),
    (11, "3-d spatial ordering", "spatial-ordering"),
)


def _criterion_verdict(number, results):
    if number == 2:
        r = results["lemma3-audit"]
        return all(c["pass"] for c in r["cases"] if (c["group"], c["degree"]) != ("Y", 6))
    if number == 3:
        r = results["lemma3-audit"]
        return all(c["pass"] for c in r["cases"] if (c["group"], c["degree"]) == ("Y", 6))
    if number == 4:
        return results["section5-constants"]["pass_integrals"]
    if number == 5:
        return results["section5-constants"]["pass_facts"]
    return None


def load_config_tree(directory):
    """``{name: ExperimentConfig}`` from every ``*.json`` in ``directory`` (sorted)."""
    configs = {}
    for fname in sorted(os.listdir(directory)):
        if not fname.endswith(".json"):
            continue
        path = os.path.join(directory, fname)
        with open(path) as fh:
            text = fh.read()
        try:
            config = ex.ExperimentConfig.from_json(text)
        except ex.ConfigError as exc:
            raise ex.ConfigError(f"{fname}: {exc}") from exc
        configs[os.path.splitext(fname)[0]] = config
    return configs


def write_config_tree(directory, names=None):
    """Write preset configs as ``<name>.json`` files."""
    os.makedirs(directory, exist_ok=True)
    for name in names or ex.PRESETS:
        with open(os.path.join(directory, name + ".json"), "w") as fh:
            fh.write(ex.dump_json(ex.PRESETS[name].to_dict()))


def accept(configs, quick=False, base_dir=None, log=None):
    """Run configs; returns ``(outputs {relative path: text}, summary)``."""
    names = [n for n in configs if not (quick and n in ex.SIMULATION_PRESETS)]
    # validate simulation configs before any expensive run
    for n in names:
        c = configs[n]
        if c.kind == "simulate2d":
            ex.sim2d_config(c.params, base_dir)
        elif c.kind == "simulate3d":
            ex.sim3d_config(c.params, base_dir)
    outputs, results = {}, {}
    for n in names:
        result, arts = ex.run(configs[n], base_dir)
        results[n] = result
        outputs[n + ".json"] = ex.dump_json(ex.envelope(configs[n], result))
        for suffix, text in arts.items():
            outputs[n + suffix] = text
        if log:
            log(f"{n}: {'pass' if result.get('pass') else 'FAIL'}")
    rows = []
    for number, label, needs in CRITERIA:
        needs = needs if isinstance(needs, tuple) else (needs,)
        if not all(k in results for k in needs):
            rows.append({"criterion": number, "label": label, "status": "skipped"})
            continue
        verdict = _criterion_verdict(number, results)
        if verdict is None:
            verdict = all(results[k].get("pass") for k in needs)
        rows.append({"criterion": number, "label": label, "status": "pass" if verdict else "fail"})
    ran = [r for r in rows if r["status"] != "skipped"]
    summary = {"symflow_version": __version__,
               "config_hashes": {n: configs[n].hash for n in names},
               "criteria": rows, "pass": bool(ran) and all(r["status"] == "pass" for r in ran)}
    outputs["summary.json"] = ex.dump_json(summary)
    return outputs, summary


def cmd_accept(args):
    if args.configs:
        try:
            configs = load_config_tree(args.configs)
        except OSError as exc:
            raise Failure(2, "config", f"cannot read {args.configs}: {exc.strerror}") from exc
        base = os.path.abspath(args.configs)
    else:
        configs, base = dict(ex.PRESETS), None
    if args.preset:
        missing = [p for p in args.preset if p not in configs]
        if missing:
            raise Failure(2, "config", f"unknown presets {missing}")
        configs = {p: configs[p] for p in args.preset}
    outputs, summary = accept(configs, args.quick, base, log=lambda s: print(s, file=sys.stderr))
    lines = [f"criterion {r['criterion']:>2} {r['label']}: {r['status']}" for r in summary["criteria"]]
    _emit({os.path.join(args.out, k): v for k, v in sorted(outputs.items())}, "\n".join(lines) + "\n")
    return 0 if summary["pass"] else 3


# -- parser ------------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="symflow", description="Symmetric Navier-Stokes flow toolkit")
    p.add_argument("--version", action="version", version=f"symflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("groups", help="list the group catalog or export a group's elements")
    g.add_argument("action", choices=["list", "show"])
    g.add_argument("name", nargs="?")
    g.add_argument("--n", type=int)
    g.add_argument("--dim", type=int, default=3)
    g.add_argument("--out")

    f = sub.add_parser("field", help="show a field or check its invariance")
    f.add_argument("action", choices=["show", "check"])
    f.add_argument("--input")
    f.add_argument("--builtin")
    f.add_argument("--n", type=int, help="parameter of a builtin field")
    f.add_argument("--group")
    f.add_argument("--group-n", type=int)
    f.add_argument("--mode", choices=["velocity", "pseudo"], default="velocity")
    f.add_argument("--tol", type=float, default=1e-10)

    m = sub.add_parser("pm", help="moment polynomial P_m of a field")
    m.add_argument("--input")
    m.add_argument("--builtin")
    m.add_argument("--n", type=int)
    m.add_argument("--m", type=int, required=True)
    m.add_argument("--out")

    d = sub.add_parser("divisible", help="test divisibility of a polynomial by |xi|^2")
    d.add_argument("--input", required=True)

    s = sub.add_parser("invariant-space", help="invariant homogeneous polynomials of a group")
    s.add_argument("--group", required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--out")

    for name in ("simulate2d", "simulate3d"):
        q = sub.add_parser(name, help=f"run the {name[-2:]} solver")
        q.add_argument("--config", required=True)
        q.add_argument("--out", required=True)
        q.add_argument("--report", action="store_true", help="also write <out>.json")
        q.add_argument("--svg", action="store_true", help="also write <out>.svg")

    r = sub.add_parser("report", help="compare a series with the predicted decay")
    r.add_argument("--series", required=True)
    r.add_argument("--group", required=True)
    r.add_argument("--n", type=int)
    r.add_argument("--dim", type=int, choices=[2, 3])
    r.add_argument("--t-min", type=float, default=5.0)
    r.add_argument("--t-max", type=float)
    r.add_argument("--out", required=True)

    pl = sub.add_parser("plot", help="log-log SVG of a series")
    pl.add_argument("--series", required=True)
    pl.add_argument("--channels")
    pl.add_argument("--out", required=True)

    a = sub.add_parser("accept", help="run the acceptance presets")
    a.add_argument("--configs", help="directory of experiment configs (default: built-in presets)")
    a.add_argument("--out", required=True)
    a.add_argument("--quick", action="store_true", help="skip the simulation presets")
    a.add_argument("--preset", action="append", help="run only this preset (repeatable)")

    w = sub.add_parser("presets", help="write the preset configs to a directory")
    w.add_argument("--out", required=True)
    return p


def _dispatch(args):
    c = args.command
    if c == "groups":
        return cmd_groups(args)
    if c == "field":
        return cmd_field(args)
    if c == "pm":
        return cmd_pm(args)
    if c == "divisible":
        return cmd_divisible(args)
    if c == "invariant-space":
        return cmd_invariant_space(args)
    if c in ("simulate2d", "simulate3d"):
        return cmd_simulate(args, c)
    if c == "report":
        return cmd_report(args)
    if c == "plot":
        return cmd_plot(args)
    if c == "accept":
        return cmd_accept(args)
    write_config_tree(args.out)
    return 0


def _fail(status, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "status": status, "message": message}, sort_keys=True) + "\n")
    return status


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    np.seterr(all="ignore")
    try:
        return _dispatch(args)
    except Failure as exc:
        return _fail(exc.status, exc.kind, str(exc))
    except ex.ConfigError as exc:
        return _fail(2, "config", str(exc))
    except (CFLError, BlowUpError) as exc:
        return _fail(1, type(exc).__name__, str(exc))
    except (ValueError, KeyError, ArithmeticError, OSError, RuntimeError) as exc:
        return _fail(1, "module", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
