"""Command-line entry point: ``speclab <subcommand> [flags]``.

Every run writes its data (CSV tables, JSON reports) and a ``manifest.json``
into ``--out``.
Exit codes: 0 ok, 2 invalid configuration, 3 numerical fault or failed
audit, 4 marginal audit.

A ``--config`` file holds ``key = value`` lines named like the long flags
(``L = 1000``, ``potential = power_decay``); ``#`` starts a comment.  Flags
given on the command line win over the file, and ``SPECLAB_SEED`` sits
between the two.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import dynamics as dy
from . import oscillatory as osc
from . import scan
from . import spectral as sp
from . import verify
from .experiments import embedded_eigenvalue_experiment
from .potentials import Potential

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_CONFIG, EXIT_FAULT, EXIT_MARGINAL = 0, 2, 3, 4

FAULTS = (ArithmeticError, sp.QuadratureError, sp.IllConditioned,
          scan.GridResolutionError)


class ConfigError(ValueError):
    pass


# flags that take no value in the config file
_SWITCHES = {"--no-mass"}


@dataclass
class RunConfig:
    subcommand: str
    potential: dict
    params: dict
    out: str
    seed: int
    jobs: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunManifest:
    config: dict
    schema_version: str = SCHEMA_VERSION
    versions: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    audits: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    exit_code: int = 0

    def audit(self, name: str, status, detail: str = ""):
        """Record one invariant; ``status`` is a bool or 'marginal'."""
        if any(a["name"] == name for a in self.audits):
            raise RuntimeError(f"audit {name!r} recorded twice")
        if status is True:
            status = "pass"
        elif status is False:
            status = "fail"
        self.audits.append({"name": name, "status": status, "detail": detail})

    def status_code(self) -> int:
        st = {a["status"] for a in self.audits}
        if self.errors or "fail" in st:
            return EXIT_FAULT
        if "marginal" in st:
            return EXIT_MARGINAL
        return EXIT_OK


def _versions() -> dict:
    import numba
    return {"speclab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "numba": numba.__version__}


# -- argument parsing ----------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file mirroring the long flags")
    p.add_argument("--out", default="speclab_out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker threads for independent evaluations")
    g = p.add_argument_group("potential")
    g.add_argument("--potential", default="zero",
                   choices=["zero", "power_decay", "wigner_von_neumann",
                            "sampled_table", "seeded_random_decay"])
    g.add_argument("--B", type=float, default=1.0)
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--c", type=float, default=1.0)
    g.add_argument("--k0", type=float, default=0.25)
    g.add_argument("--phi", type=float, default=0.0)
    g.add_argument("--table", default="", help="comma-separated V(0), V(1), ...")
    g.add_argument("--bound", type=float, default=None)
    g.add_argument("--cutoff", type=int, default=None)


def _energy(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=float, default=None)
    g.add_argument("--E", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="speclab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("trace", help="Pruefer trace n, logR, theta, V")
    _common(p)
    _energy(p)
    p.add_argument("--L", type=int, default=1000)
    p.add_argument("--checkpoint-every", type=int, default=1)

    p = sub.add_parser("density", help="truncated spectral density on an energy grid")
    _common(p)
    p.add_argument("--L", type=int, default=1000)
    p.add_argument("--Emin", type=float, default=-1.0)
    p.add_argument("--Emax", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=101)

    p = sub.add_parser("oracle-compare", help="quadrature mass vs finite-matrix oracle")
    _common(p)
    p.add_argument("--L", type=int, default=200)
    p.add_argument("--N", type=int, default=10 ** 4)
    p.add_argument("--Emin", type=float, default=-1.0)
    p.add_argument("--Emax", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-3)

    p = sub.add_parser("sums", help="weighted oscillatory sums at checkpoints")
    _common(p)
    _energy(p)
    p.add_argument("--kind", choices=["cos4", "cross", "harmonic"], default="cos4")
    p.add_argument("--k2", type=float, default=None)
    p.add_argument("--L", type=int, default=10 ** 5)

    p = sub.add_parser("scan", help="multiscale separated-set scan")
    _common(p)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--C1", type=float, default=None)
    p.add_argument("--kmin", type=float, default=0.1)
    p.add_argument("--kmax", type=float, default=0.4)
    p.add_argument("--grid-resolution", type=int, default=4)
    p.add_argument("--scales", default="1,2,3")
    p.add_argument("--no-mass", action="store_true")

    p = sub.add_parser("dimension", help="local scaling exponent of interval masses")
    _common(p)
    p.add_argument("--L", type=int, default=10 ** 4)
    p.add_argument("--E", type=float, default=0.0)
    p.add_argument("--eps", default="1e-1,3e-2,1e-2,3e-3,1e-3")
    p.add_argument("--method", choices=["quadrature", "oracle"], default="quadrature")

    p = sub.add_parser("embedded", help="Wigner-von Neumann resonance experiment")
    _common(p)
    p.set_defaults(potential="wigner_von_neumann", c=8.0)
    p.add_argument("--L", type=int, default=10 ** 5)

    p = sub.add_parser("verify", help="run the invariant battery")
    _common(p)
    p.add_argument("--suite", choices=sorted(verify.SUITES), default="free")
    return ap


def read_config_file(path) -> list[str]:
    """Turn ``key = value`` lines into long-flag arguments."""
    args = []
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag in _SWITCHES:
            if value.lower() in ("1", "true", "yes"):
                args.append(flag)
        else:
            args += [flag, value]
    return args


def parse(argv) -> argparse.Namespace:
    ap = build_parser()
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    pre.add_argument("--seed")
    known, _ = pre.parse_known_args(argv)
    if known.config and argv:
        # subcommand first, then the file, then the command line (last wins)
        file_args = read_config_file(known.config)
        env = os.environ.get("SPECLAB_SEED")
        if env is not None and known.seed is None:
            file_args += ["--seed", env]
        argv = argv[:1] + file_args + argv[1:]
    elif os.environ.get("SPECLAB_SEED") is not None and known.seed is None and argv:
        argv = argv[:1] + ["--seed", os.environ["SPECLAB_SEED"]] + argv[1:]
    return ap.parse_args(argv)


def potential_spec(ns) -> dict:
    spec = {"potential": ns.potential}
    if ns.potential == "power_decay":
        spec.update(B=ns.B, alpha=ns.alpha)
    elif ns.potential == "wigner_von_neumann":
        spec.update(c=ns.c, k0=ns.k0, phi=ns.phi)
    elif ns.potential == "seeded_random_decay":
        spec.update(B=ns.B, seed=ns.seed)
    elif ns.potential == "sampled_table":
        spec.update(table=ns.table, bound=ns.bound)
    if ns.cutoff is not None:
        spec["cutoff"] = ns.cutoff
    return spec


_SHARED = {"config", "out", "seed", "jobs", "potential", "B", "alpha", "c", "k0",
           "phi", "table", "bound", "cutoff", "subcommand"}


def run_config(ns) -> RunConfig:
    params = {k: v for k, v in vars(ns).items() if k not in _SHARED}
    return RunConfig(ns.subcommand, potential_spec(ns), params, str(ns.out), ns.seed, ns.jobs)


# -- output helpers ------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _energy_point(ns) -> dy.EnergyPoint:
    if ns.k is not None:
        return dy.EnergyPoint.from_k(ns.k)
    if ns.E is not None:
        return dy.EnergyPoint.from_E(ns.E)
    return dy.EnergyPoint.from_k(0.25)


def _chunks(a: np.ndarray, jobs: int):
    return [c for c in np.array_split(a, max(1, jobs)) if c.size]


def _parallel_map(fn, parts, jobs: int):
    if jobs <= 1 or len(parts) <= 1:
        return [fn(x) for x in parts]
    # the compiled kernels release the GIL; results keep input order
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, parts))


# -- subcommands ---------------------------------------------------------

def cmd_trace(ns, p, out: Path, man: RunManifest):
    ep = _energy_point(ns)
    tr = dy.prufer_trace(p, ep, ns.L)
    every = ns.checkpoint_every
    if every < 1:
        raise ConfigError("--checkpoint-every must be >= 1")
    idx = np.unique(np.append(np.arange(0, ns.L + 2, every), ns.L + 1))
    V = np.append(tr.V, p(ns.L + 1))
    write_csv(out / "trace.csv", ["n", "logR", "theta", "V"],
              zip(idx, tr.logR[idx], tr.theta[idx], V[idx]))
    man.outputs.append("trace.csv")
    audited, bad = tr.increment_audit()
    man.audit("angle_increment_bound", bad.size == 0, f"{bad.size} of {audited} steps")
    if ns.L <= 10 ** 6:
        lr, th = dy.matrix_route_states(p, ep, ns.L)
        dev = max(np.max(np.abs(lr - tr.logR)),
                  np.max(np.abs((tr.theta - th + 0.5) % 1.0 - 0.5)))
        man.audit("matrix_route_equivalence", dev < dy.EQUIV_TOL, f"max deviation {dev:.2e}")
    if ns.L >= 2:
        lhs, rhs, r = dy.log_amplitude_identity(p, ep, ns.L)
        b = dy.residual_bound(p, ep, ns.L)
        man.audit("log_amplitude_residual_bound", abs(r) <= b, f"|residual| {abs(r):.3e} <= {b:.3e}")
    man.results.update(E=ep.E, k=ep.k, logR_final=float(tr.logR[-1]))


def cmd_density(ns, p, out: Path, man: RunManifest):
    if ns.grid < 1:
        raise ConfigError("--grid must be >= 1")
    Es = np.linspace(ns.Emin, ns.Emax, ns.grid)
    if np.any(np.abs(Es) >= 2):
        raise ConfigError("energies must lie in (-2, 2)")
    parts = _parallel_map(lambda e: sp.density_values(p, ns.L, e), _chunks(Es, ns.jobs), ns.jobs)
    rho = np.concatenate(parts)
    ks = np.arccos(Es / 2) / np.pi
    write_csv(out / "density.csv", ["E", "k", "density"], zip(Es, ks, rho))
    man.outputs.append("density.csv")
    man.audit("density_positive", bool(np.all(rho > 0)))
    sub = np.unique(np.linspace(0, Es.size - 1, min(Es.size, 16)).astype(int))
    worst = 0.0
    for i in sub:
        ep = dy.EnergyPoint.from_E(Es[i])
        R2 = math.exp(2 * dy.prufer_trace(p, ep, ns.L).logR[ns.L + 1])
        worst = max(worst, abs(math.pi * rho[i] * ep.sin * R2 - 1))
    man.audit("dual_route_identity", worst < 1e-9, f"max error {worst:.2e} on {sub.size} points")


def cmd_oracle(ns, p, out: Path, man: RunManifest):
    from .potentials import cutoff
    pl = cutoff(p, ns.L)
    q = sp.measure_of_interval(pl, ns.L, ns.Emin, ns.Emax)
    o = sp.oracle_spectral_measure(pl, ns.N, ns.Emin, ns.Emax)
    diff = abs(q.mass - o.mass)
    d = {"interval": [ns.Emin, ns.Emax], "quadrature_mass": q.mass, "oracle_mass": o.mass,
         "abs_diff": diff, "quadrature_error": q.error, "oracle_error": o.error}
    (out / "oracle_compare.json").write_text(json.dumps(_jsonable(d), indent=2) + "\n")
    man.outputs.append("oracle_compare.json")
    man.results.update(quadrature=q.mass, oracle=o.mass, difference=diff,
                       eigenvalues_in_window=int(o.details["eigenvalues"].size))
    man.audit("oracle_equivalence", diff < ns.tol, f"|difference| {diff:.3e} (tol {ns.tol:g})")


def cmd_sums(ns, p, out: Path, man: RunManifest):
    ep = _energy_point(ns)
    if ns.kind == "cos4":
        d = osc.weighted_cos4_sum(p, ep, ns.L)
    elif ns.kind == "harmonic":
        d = osc.harmonic_control(ns.L)
    else:
        if ns.k2 is None:
            raise ConfigError("--kind cross needs --k2")
        d, split = osc.cross_sin_sum(p, ep.k, ns.k2, ns.L, return_split=True)
        man.audit("cross_sum_split_identity", abs(d.value - split) < 1e-9 * max(1, abs(split)),
                  f"direct {d.value:.12g} vs split {split:.12g}")
    write_csv(out / "sums.csv", ["L", "value", "running_max", "running_min"],
              zip(d.checkpoints, d.checkpoint_values, d.checkpoint_max, d.checkpoint_min))
    man.outputs.append("sums.csv")
    man.results.update(kind=ns.kind, value=d.value, drift_slope=d.drift_slope,
                       running_max=d.running_max, running_min=d.running_min)
    if ns.kind == "cos4" and ns.L >= 10 ** 4:
        man.audit("cos4_sum_bounded", d.drift_slope < 0.05, f"drift slope {d.drift_slope:.3e}")
        h = osc.harmonic_control(ns.L).drift_slope
        man.audit("harmonic_positive_control", abs(h - 1) < 0.01, f"slope {h:.4f}")


def cmd_scan(ns, p, out: Path, man: RunManifest):
    cfg = scan.ScanConfig(beta=ns.beta, sigma=ns.sigma, N=ns.N, eps=ns.eps, C1=ns.C1,
                          window=(ns.kmin, ns.kmax), grid_resolution=ns.grid_resolution)
    rep = scan.count_bound_experiment(p, cfg, _ints(ns.scales), with_mass=not ns.no_mass)
    d = rep.to_dict()
    (out / "scan.json").write_text(json.dumps(_jsonable(d), indent=2) + "\n")
    man.outputs.append("scan.json")
    man.results.update(counts=rep.counts, cover_counts=rep.cover_counts, warnings=rep.warnings)
    done = [s for s in rep.scales if s.skipped is None]
    count_ok = not any(s.count_flag for s in done)
    man.audit("count_bound", "marginal" if count_ok and rep.marginal else count_ok,
              f"counts {rep.counts} (N = {cfg.N})")
    man.audit("cover_bound", not any(s.cover_flag for s in done),
              f"covers {rep.cover_counts} (8N = {8 * cfg.N})")
    man.audit("amplitude_sum_linkage", all(s.linkage_ok for s in done))
    man.audit("separation_soundness", all(s.separation_ok for s in done))


def cmd_dimension(ns, p, out: Path, man: RunManifest):
    f = scan.local_dimension_diagnostic(p, ns.L, ns.E, _floats(ns.eps), method=ns.method)
    write_csv(out / "dimension.csv", ["eps", "mass", "log_eps", "log_mass"], f.rows())
    man.outputs.append("dimension.csv")
    man.results.update(E=f.E, L=f.L, method=f.method, slope=f.slope, intercept=f.intercept)


def cmd_embedded(ns, p, out: Path, man: RunManifest):
    r = embedded_eigenvalue_experiment(ns.c, ns.k0, ns.phi, ns.L)
    d = r.to_dict()
    (out / "embedded.json").write_text(json.dumps(_jsonable(d), indent=2) + "\n")
    man.outputs.append("embedded.json")
    man.results.update(d)
    flat = all(abs(s) < 0.05 for s in r.off_resonant_slopes)
    man.audit("off_resonant_flat", flat, f"slopes {r.off_resonant_slopes}")


def cmd_verify(ns, p, out: Path, man: RunManifest):
    for name, ok, detail in verify.run_suite(ns.suite):
        man.audit(name, ok, detail)
    man.results["suite"] = ns.suite


COMMANDS = {"trace": cmd_trace, "density": cmd_density, "oracle-compare": cmd_oracle,
            "sums": cmd_sums, "scan": cmd_scan, "dimension": cmd_dimension,
            "embedded": cmd_embedded, "verify": cmd_verify}


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    t0 = time.perf_counter()
    try:
        ns = parse(argv)
    except (ConfigError, OSError) as exc:
        print(f"speclab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        # argparse reports bad flags with status 2 and --help with 0
        return int(exc.code or 0)
    rc = run_config(ns)
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(rc.to_dict(), versions=_versions())
    code = None
    try:
        if ns.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        p = Potential.from_spec(rc.potential)
        COMMANDS[ns.subcommand](ns, p, out, man)
    except ValueError as exc:
        man.errors.append(f"invalid configuration: {exc}")
        code = EXIT_CONFIG
    except FAULTS as exc:
        man.errors.append(f"{type(exc).__name__}: {exc}")
        code = EXIT_FAULT
    man.exit_code = man.status_code() if code is None else code
    man.wall_time_s = time.perf_counter() - t0
    (out / "manifest.json").write_text(json.dumps(_jsonable(asdict(man)), indent=2) + "\n")
    for e in man.errors:
        print(f"speclab: {e}", file=sys.stderr)
    return man.exit_code


def main():
    sys.exit(run())
