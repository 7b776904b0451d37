"""Command-line entry point.

Subcommands: simulate, verify, certify, regimes, maximal-demo.

Exit-code contract: 0 success, 1 verdict/convergence failure (outputs still
written), 2 usage or validation error (the violated predicate is named),
3 numerical blowup. All files are written atomically (temp + rename) and
every artifact embeds the full config echo plus content hashes; ``verify``
refuses runs whose hashes do not match.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .errors import DomainError, LeibensonError, NumericalBlowup, RegimeError
from .field import FieldEvaluator
from .maximal import CapGeometry, maximal_surface_bruteforce, maximal_surface_d3
from .params import classify_regime, derive_constants
from .quad import CertificateReport, certify_uniqueness_bounds, certify_superposition
from .sde import ParticleEnsemble, SDEConfig, simulate
from .stats import DEFAULT_THRESHOLDS, build_report

RUN_SCHEMA = "leibenson-run/1"

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


# ---------------------------------------------------------------------------
# atomic file helpers
# ---------------------------------------------------------------------------

def _write_atomic(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _snapshot_csv(ensemble: ParticleEnsemble) -> str:
    import io

    d = ensemble.d
    header = "t,particle_id," + ",".join(f"x{i+1}" for i in range(d))
    n = ensemble.n
    arr = np.column_stack([np.full(n, ensemble.time), np.arange(n, dtype=float),
                           ensemble.positions])
    buf = io.StringIO()
    np.savetxt(buf, arr, fmt=["%.16e", "%d"] + ["%.16e"] * d, delimiter=",",
               header=header, comments="")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# flag / config-file plumbing
# ---------------------------------------------------------------------------

_SIM_KEYS = {
    "d": int, "p": float, "q": float, "delta": float, "t-final": float,
    "dt": float, "particles": int, "seed": int, "snap-times": str,
    "out": str, "threads": int, "origin-clamp": float,
    "ks-threshold": float, "support-slack": float,
    "support-violation-threshold": float, "moment2-threshold": float,
}


def _read_kv_file(path: str, allowed: set[str]) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in allowed:
                raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val.strip()
    return values


def _parse_snap_times(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise DomainError(f"bad snap-times list {text!r}") from exc


def _gather_simulate_options(args) -> dict:
    opts: dict = {}
    if args.config:
        raw = _read_kv_file(args.config, set(_SIM_KEYS))
        for k, v in raw.items():
            opts[k] = _SIM_KEYS[k](v) if _SIM_KEYS[k] is not str else v
    cli_map = {
        "d": args.d, "p": args.p, "q": args.q, "delta": args.delta,
        "t-final": args.t_final, "dt": args.dt, "particles": args.particles,
        "seed": args.seed, "snap-times": args.snap_times, "out": args.out,
        "threads": args.threads, "origin-clamp": args.origin_clamp,
    }
    for k, v in cli_map.items():
        if v is not None:
            opts[k] = v
    missing = [k for k in ("d", "p", "q", "delta", "t-final", "dt",
                           "particles", "seed", "snap-times", "out") if k not in opts]
    if missing:
        raise DomainError(f"missing required option(s): {', '.join('--' + m for m in missing)}")
    return opts


def _thresholds_from_opts(opts: dict) -> dict:
    thr = dict(DEFAULT_THRESHOLDS)
    mapping = {
        "ks-threshold": "ks_radial",
        "support-slack": "support_slack",
        "support-violation-threshold": "support_violation",
        "moment2-threshold": "moment2_rel_err",
    }
    for key, name in mapping.items():
        if key in opts:
            thr[name] = float(opts[key])
    return thr


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    opts = _gather_simulate_options(args)
    params = derive_constants(opts["d"], opts["p"], opts["q"])
    config = SDEConfig(
        params=params,
        delta=opts["delta"],
        t_final=opts["t-final"],
        dt=opts["dt"],
        n_particles=opts["particles"],
        seed=opts["seed"],
        snap_times=_parse_snap_times(opts["snap-times"])
        if isinstance(opts["snap-times"], str) else tuple(opts["snap-times"]),
        origin_clamp=opts.get("origin-clamp"),
        threads=opts.get("threads"),
    )
    outdir = opts["out"]
    os.makedirs(outdir, exist_ok=True)

    snapshots = simulate(config)

    entries = []
    for idx, snap in enumerate(snapshots):
        name = f"snapshot_{idx:03d}.csv"
        path = os.path.join(outdir, name)
        _write_atomic(path, _snapshot_csv(snap))
        entries.append({"file": name, "t": snap.time, "sha256": _sha256(path)})

    thresholds = _thresholds_from_opts(opts)
    meta = {
        "schema": RUN_SCHEMA,
        "library_version": __version__,
        "config": {
            "d": params.d, "p": params.p, "q": params.q,
            "delta": config.delta, "t_final": config.t_final, "dt": config.dt,
            "particles": config.n_particles, "seed": config.seed,
            "snap_times_requested": list(config.snap_times),
            "snap_times_actual": list(config.actual_snap_times()),
            "threads": config.threads,
            "origin_clamp": config.resolve_origin_clamp() if params.p < 2.0 else None,
            "origin_clamp_active": params.p < 2.0,
        },
        "derived_constants": params.as_dict(),
        "thresholds": thresholds,
        "snapshots": entries,
    }
    _write_atomic(os.path.join(outdir, "metadata.json"),
                  json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(entries)} snapshot(s) to {outdir}")
    return EXIT_OK


def _load_run(rundir: str):
    meta_path = os.path.join(rundir, "metadata.json")
    if not os.path.exists(meta_path):
        raise DomainError(f"no metadata.json in {rundir}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    if meta.get("schema") != RUN_SCHEMA:
        raise DomainError(f"unsupported run schema {meta.get('schema')!r}")
    cfg = meta["config"]
    snapshots = []
    for entry in meta["snapshots"]:
        path = os.path.join(rundir, entry["file"])
        if not os.path.exists(path):
            raise DomainError(f"missing snapshot file {entry['file']}")
        if _sha256(path) != entry["sha256"]:
            raise DomainError(f"content hash mismatch for {entry['file']}; refusing run")
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        if data.ndim == 1:
            data = data[None, :]
        expected_cols = 2 + cfg["d"]
        if data.shape[1] != expected_cols or data.shape[0] != cfg["particles"] \
                or np.isnan(data).any():
            raise DomainError(f"malformed snapshot file {entry['file']}")
        positions = data[:, 2:]
        snapshots.append(ParticleEnsemble(
            time=float(entry["t"]), positions=positions,
            stream_ids=data[:, 1].astype(np.uint64), seed=cfg["seed"]))
    return meta, snapshots


def cmd_verify(args) -> int:
    meta, snapshots = _load_run(args.run)
    cfg = meta["config"]
    params = derive_constants(cfg["d"], cfg["p"], cfg["q"])
    field = FieldEvaluator(params, delta=cfg["delta"])
    thresholds = dict(meta.get("thresholds") or DEFAULT_THRESHOLDS)
    if args.thresholds:
        raw = _read_kv_file(args.thresholds, set(DEFAULT_THRESHOLDS))
        thresholds.update({k: float(v) for k, v in raw.items()})
    report = build_report(meta["config"], snapshots, field,
                          thresholds=thresholds, library_version=__version__)
    out_path = os.path.join(args.run, "report.json")
    _write_atomic(out_path, report.to_json() + "\n")
    _write_atomic(os.path.join(args.run, "report_summary.csv"), report.summary_csv())
    print(f"report written to {out_path}")
    for name, verdict in sorted(report.verdicts.items()):
        status = "PASS" if verdict["pass"] else "FAIL"
        print(f"  {status} {name}: value={verdict['value']:.6g} "
              f"threshold={verdict['threshold']:.6g}")
    return EXIT_OK if report.all_pass else EXIT_VERDICT


def cmd_certify(args) -> int:
    params = derive_constants(args.d, args.p, args.q)
    regime = classify_regime(params)
    sp1 = sp2 = hess = grad = None
    ran_any = False
    if regime.superposition_ok:
        sp1, sp2 = certify_superposition(params, args.T, tol=args.tol)
        ran_any = True
    if regime.strong_solution_ok and args.delta is not None and args.delta > 0:
        hess, grad = certify_uniqueness_bounds(params, args.delta, args.T, tol=args.tol)
        ran_any = True
    if not ran_any:
        raise RegimeError(
            "no certificate applicable: superposition requires p > (1+d)/d; "
            "uniqueness bounds require d >= 2, p > d/(d-1), q > (|p-2|+d)/(d(p-1)) and --delta > 0")
    report = CertificateReport(diffusion_integrability=sp1, drift_integrability=sp2,
                               drift_hessian_bound=hess, diffusion_gradient_bound=grad)
    payload = {
        "library_version": __version__,
        "params": params.as_dict(),
        "regime": regime.as_dict(),
        "T": args.T,
        "delta": args.delta,
        "tol": args.tol,
        "certificates": report.as_dict(),
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        _write_atomic(args.out, text + "\n")
    print(text)
    return EXIT_OK if report.all_finite else EXIT_VERDICT


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise DomainError(f"expected 'lo,hi', got {text!r}") from exc
    if not hi > lo:
        raise DomainError(f"empty range {text!r}")
    return lo, hi


def cmd_regimes(args) -> int:
    plo, phi = _parse_range(args.p_range)
    qlo, qhi = _parse_range(args.q_range)
    if args.steps < 1:
        raise DomainError("steps must be >= 1")
    if plo < 1.0:
        plo = 1.0  # p <= 1 is outside the domain; start the open grid at 1
    lines = [f"# leibenson {__version__} regimes d={args.d} "
             f"p-range={plo},{phi} q-range={qlo},{qhi} steps={args.steps}",
             "d,p,q,barenblatt_ok,superposition_ok,markov_ok,"
             "strong_solution_ok,uniqueness_i_ok,uniqueness_ii_ok"]
    for i in range(1, args.steps + 1):
        p = plo + (phi - plo) * i / args.steps
        for j in range(1, args.steps + 1):
            q = qlo + (qhi - qlo) * j / args.steps
            if q <= 0.0:
                continue
            rep = classify_regime(args.d, p, q)
            flags = ",".join(str(int(v)) for v in rep.as_dict().values())
            lines.append(f"{args.d},{p:.12g},{q:.12g},{flags}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_atomic(args.out, text)
        print(f"wrote regime map to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_maximal_demo(args) -> int:
    geom = CapGeometry(R=args.R, x_norm=args.xnorm)
    formula = maximal_surface_d3(geom)       # raises DomainError on |x| in {0, R}
    brute = maximal_surface_bruteforce(geom, grid_size=args.grid)
    rel = abs(formula - brute) / abs(formula)
    print(f"{'quantity':<28}{'value':>20}")
    print(f"{'closed form':<28}{formula:>20.12e}")
    print(f"{'brute force (grid+golden)':<28}{brute:>20.12e}")
    print(f"{'relative difference':<28}{rel:>20.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leibenson",
        description="simulate and verify the self-similar profile's particle dynamics")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the particle simulation")
    sim.add_argument("--config", help="flat key=value config file mirroring the flags")
    sim.add_argument("--d", type=int)
    sim.add_argument("--p", type=float)
    sim.add_argument("--q", type=float)
    sim.add_argument("--delta", type=float)
    sim.add_argument("--t-final", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--particles", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--snap-times", help="comma-separated snapshot times")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--threads", type=int)
    sim.add_argument("--origin-clamp", type=float)
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="verify a simulation run directory")
    ver.add_argument("--run", required=True)
    ver.add_argument("--thresholds", help="key=value file overriding thresholds")
    ver.set_defaults(func=cmd_verify)

    cert = sub.add_parser("certify", help="compute integrability certificates")
    cert.add_argument("--d", type=int, required=True)
    cert.add_argument("--p", type=float, required=True)
    cert.add_argument("--q", type=float, required=True)
    cert.add_argument("--delta", type=float)
    cert.add_argument("--T", type=float, required=True)
    cert.add_argument("--tol", type=float, default=1e-7)
    cert.add_argument("--out")
    cert.set_defaults(func=cmd_certify)

    reg = sub.add_parser("regimes", help="tabulate theorem predicates over a (p, q) grid")
    reg.add_argument("--d", type=int, required=True)
    reg.add_argument("--p-range", required=True, help="lo,hi")
    reg.add_argument("--q-range", required=True, help="lo,hi")
    reg.add_argument("--steps", type=int, required=True)
    reg.add_argument("--out")
    reg.set_defaults(func=cmd_regimes)

    mx = sub.add_parser("maximal-demo",
                        help="closed-form vs brute-force maximal function (d=3)")
    mx.add_argument("--R", type=float, required=True)
    mx.add_argument("--xnorm", type=float, required=True)
    mx.add_argument("--grid", type=int, default=4096)
    mx.set_defaults(func=cmd_maximal_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except NumericalBlowup as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RegimeError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LeibensonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
