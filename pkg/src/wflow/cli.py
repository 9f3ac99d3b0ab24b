"""Batch front door: configs in, CSV/JSON artifacts out.

One JSON config file describes one reproducible run.  Artifacts land in
``<output_root>/<preset>_<hash(config)>/``; identical configs produce
byte-identical files.  ``WFLOW_OUT`` overrides the output root.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diagnostics, refsolve, transport
from .convex import CostSpec, EnergySpec, PotentialSpec, preset_specs
from .density import Domain, GridDensity, density_from_csv, normalize
from .errors import ParameterError, WflowError
from .jko import JkoProblem, SchemeTrajectory, floored_density, run_scheme

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    raw: dict
    cost: CostSpec
    energy: EnergySpec
    potential: PotentialSpec
    domain: Domain
    n: int
    m: int
    h: float
    T: float
    rho0: GridDensity
    floor_delta: float | None
    tol: float
    newton_max_iter: int
    fista_max_iter: int
    force: bool
    label: str

    def problem(self, h: float | None = None) -> JkoProblem:
        return JkoProblem(cost=self.cost, energy=self.energy,
                          potential=self.potential, domain=self.domain,
                          h=self.h if h is None else h, m=self.m,
                          tol=self.tol, newton_max_iter=self.newton_max_iter,
                          fista_max_iter=self.fista_max_iter, force=self.force)

    def initial_density(self) -> GridDensity:
        if self.floor_delta is not None:
            return floored_density(self.rho0, self.floor_delta)
        return self.rho0


def _potential_from_config(spec) -> PotentialSpec:
    if spec is None or spec == "zero":
        return PotentialSpec.zero()
    if isinstance(spec, dict):
        kind = spec.get("kind", "zero")
        if kind == "zero":
            return PotentialSpec.zero()
        if kind == "quadratic":
            return PotentialSpec.quadratic(kappa=float(spec.get("kappa", 1.0)),
                                           center=float(spec.get("center", 0.0)))
        if kind == "tabulated":
            return PotentialSpec.tabulated(spec["x"], spec["v"])
    raise ParameterError(f"unrecognized potential description {spec!r}")


def _profile_values(name: str, params: dict, domain: Domain, n: int) -> np.ndarray:
    xc = domain.centers(n)
    xhat = (xc - domain.a) / domain.length
    if name == "uniform":
        return np.ones(n)
    if name == "cosine":
        amp = float(params.get("amplitude", 0.5))
        freq = float(params.get("frequency", 1.0))
        if not (0.0 <= amp < 1.0):
            raise ParameterError("cosine profile needs amplitude in [0, 1)")
        return 1.0 + amp * np.cos(2.0 * np.pi * freq * xhat)
    if name == "gaussian":
        center = float(params.get("center", 0.5 * (domain.a + domain.b)))
        width = float(params.get("width", 0.2 * domain.length))
        floor = float(params.get("floor", 1e-3))
        return np.exp(-0.5 * ((xc - center) / width) ** 2) + floor
    raise ParameterError(f"unknown initial profile {name!r}")


def _rho0_from_config(spec, domain: Domain, n: int) -> GridDensity:
    if spec is None:
        spec = {"profile": "uniform"}
    if isinstance(spec, str):
        spec = {"profile": spec}
    if "csv" in spec:
        path = Path(spec["csv"])
        if not path.exists():
            raise ParameterError(f"initial density file not found: {path}")
        rho = density_from_csv(path.read_text())
        if rho.n != n or rho.domain != domain:
            raise ParameterError(
                "initial density file does not match the configured grid")
        return rho
    values = _profile_values(spec.get("profile", "uniform"), spec, domain, n)
    return normalize(values, domain)[0]


def load_config(path: str | Path, force: bool = False) -> RunConfig:
    """Parse and validate one run description."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ParameterError("config must be a JSON object")
    preset = raw.get("preset")
    if preset:
        cost, energy = preset_specs(
            preset,
            m=raw.get("exponent_m"),
            p=raw.get("exponent_p"),
            n=raw.get("exponent_n"),
        )
    else:
        terms = raw.get("cost_terms")
        if not terms:
            raise ParameterError("config needs a preset or explicit cost_terms")
        cost = CostSpec(terms=tuple((float(A), float(qi)) for A, qi in terms))
        eterms = []
        for t in raw.get("energy_terms", []):
            if t.get("kind") == "entropy":
                eterms.append(("entropy", float(t.get("coeff", 1.0))))
            elif t.get("kind") == "power":
                eterms.append(("power", float(t.get("coeff", 1.0)),
                               float(t["exponent"])))
            else:
                raise ParameterError(f"unknown energy term {t!r}")
        if not eterms:
            raise ParameterError("explicit configs need energy_terms")
        energy = EnergySpec(terms=tuple(eterms))
    potential = _potential_from_config(raw.get("potential"))
    domain = Domain(a=float(raw.get("domain_a", 0.0)),
                    b=float(raw.get("domain_b", 1.0)))
    n = int(raw.get("n", 256))
    m = int(raw.get("m", n))
    h = float(raw.get("h", 1e-2))
    T = float(raw.get("T", 1.0))
    rho0 = _rho0_from_config(raw.get("rho0"), domain, n)
    floor_delta = raw.get("floor_delta")
    return RunConfig(
        raw=raw, cost=cost, energy=energy, potential=potential, domain=domain,
        n=n, m=m, h=h, T=T, rho0=rho0,
        floor_delta=None if floor_delta is None else float(floor_delta),
        tol=float(raw.get("solver_tol", 1e-9)),
        newton_max_iter=int(raw.get("newton_max_iter", 80)),
        fista_max_iter=int(raw.get("fista_max_iter", 100_000)),
        force=force or bool(raw.get("force", False)),
        label=preset or "custom",
    )


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def output_dir(cfg: RunConfig, root: str | None) -> Path:
    base = os.environ.get("WFLOW_OUT") or root or cfg.raw.get("output_dir") or "out"
    d = Path(base) / f"{cfg.label}_{config_hash(cfg.raw)}"
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# artifact writers (full round-trip decimal precision)
# ---------------------------------------------------------------------------

def trajectory_to_csv(traj: SchemeTrajectory) -> str:
    lines = ["t,x,rho"]
    for t, rho in zip(traj.times, traj.densities):
        for x, v in zip(rho.centers, rho.values):
            lines.append(f"{float(t)!r},{float(x)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"


def diagnostics_to_jsonl(traj: SchemeTrajectory) -> str:
    return "".join(json.dumps(d.as_dict(), sort_keys=True) + "\n"
                   for d in traj.diagnostics)


def _write(path: Path, text: str) -> None:
    path.write_text(text)


def _report_document(cfg: RunConfig, *, assumptions=None, led=None,
                     rate_fits=(), comparisons=()) -> dict:
    """One report shape for every command; unused sections stay empty."""
    return {
        "run_config": cfg.raw,
        "config_hash": config_hash(cfg.raw),
        "assumptions": assumptions,
        "ledger": led.as_dict() if led is not None else None,
        "flags": [f.as_dict() for f in led.flags] if led is not None else [],
        "rate_fits": list(rate_fits),
        "comparisons": list(comparisons),
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(config_path: str, root: str | None = None,
            force: bool = False) -> int:
    try:
        cfg = load_config(config_path, force=force)
        problem = cfg.problem()
    except (WflowError, OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = output_dir(cfg, root)
    _write(out / "config.json",
           json.dumps(cfg.raw, sort_keys=True, indent=2) + "\n")
    try:
        traj = run_scheme(problem, cfg.initial_density(), cfg.T)
    except WflowError as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None:
            _write(out / "trajectory.csv", trajectory_to_csv(partial))
            _write(out / "diagnostics.jsonl", diagnostics_to_jsonl(partial))
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write(out / "trajectory.csv", trajectory_to_csv(traj))
    _write(out / "diagnostics.jsonl", diagnostics_to_jsonl(traj))
    led = diagnostics.ledger(problem, traj)
    report = _report_document(cfg, assumptions=problem.assumptions.as_dict(),
                              led=led)
    _write(out / "report.json", json.dumps(report, sort_keys=True, indent=2) + "\n")
    print(f"artifacts in {out}")
    return EXIT_OK if led.all_pass else EXIT_SOLVER


def _study_member(args) -> tuple[float, float]:
    config_path, h = args
    cfg = load_config(config_path)
    problem = cfg.problem(h=h)
    traj = run_scheme(problem, cfg.initial_density(), cfg.T)
    return h, sum(d.second_moment for d in traj.diagnostics)


def cmd_study(config_path: str, values: list[float], root: str | None = None,
              workers: int = 0) -> int:
    try:
        cfg = load_config(config_path)
        cfg.problem(h=values[0] if values else None)  # validates assumptions
        if len(values) < 4:
            print("study needs at least 4 step sizes", file=sys.stderr)
            return EXIT_CONFIG
    except (WflowError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    jobs = [(config_path, h) for h in values]
    results = []
    failures = []
    if workers > 1:
        try:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                futures = {ex.submit(_study_member, j): j for j in jobs}
                for fut, job in futures.items():
                    try:
                        results.append(fut.result())
                    except WflowError as exc:
                        failures.append({"h": job[1], "error": str(exc)})
        except (OSError, PermissionError):
            results, failures = [], []
            workers = 1
    if workers <= 1 and not results:
        for job in jobs:
            try:
                results.append(_study_member(job))
            except WflowError as exc:
                failures.append({"h": job[1], "error": str(exc)})
    out = output_dir(cfg, root)
    if failures:
        report = _report_document(cfg)
        report["partial"] = True
        report["failures"] = failures
        report["completed"] = [{"h": h, "total": tot}
                               for h, tot in sorted(results)]
        _write(out / "rate.json",
               json.dumps(report, sort_keys=True, indent=2) + "\n")
        print(f"study aborted: {len(failures)} member(s) failed", file=sys.stderr)
        return EXIT_SOLVER
    results.sort(key=lambda r: r[0])
    hs = [r[0] for r in results]
    totals = [r[1] for r in results]
    try:
        fit = diagnostics.fit_rate(hs, totals)
    except WflowError as exc:
        print(f"rate fit invalid: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    expected = min(1.0, cfg.cost.q - 1.0)
    report = _report_document(cfg, rate_fits=[{
        "vary": "h",
        "fit": fit.as_dict(),
        "expected_exponent": expected,
        "passes": fit.slope >= expected - 0.15,
    }])
    report["passes"] = fit.slope >= expected - 0.15
    _write(out / "rate.json", json.dumps(report, sort_keys=True, indent=2) + "\n")
    lines = ["h,total_second_moment"]
    for h, tot in zip(hs, totals):
        lines.append(f"{float(h)!r},{float(tot)!r}")
    _write(out / "rate.csv", "\n".join(lines) + "\n")
    print(f"slope {fit.slope!r} (expected >= {expected - 0.15!r}); artifacts in {out}")
    return EXIT_OK if report["passes"] else EXIT_SOLVER


def cmd_crosscheck(config_path: str, threshold: float = 1e-2,
                   root: str | None = None) -> int:
    try:
        cfg = load_config(config_path)
        problem = cfg.problem()
    except (WflowError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = output_dir(cfg, root)
    try:
        rho0 = cfg.initial_density()
        traj = run_scheme(problem, rho0, cfg.T)
        fd = refsolve.fd_solve(cfg.cost, cfg.energy, cfg.potential, cfg.domain,
                               rho0, cfg.T,
                               refsolve.FdConfig(n=cfg.n, dt=cfg.h))
        table = diagnostics.compare(traj, fd)
    except WflowError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write(out / "trajectory.csv", trajectory_to_csv(traj))
    _write(out / "reference.csv", trajectory_to_csv(fd))
    report = _report_document(cfg, comparisons=[{
        "against": "finite-difference reference",
        "threshold": threshold,
        "table": table.as_dict(),
        "passes": table.l1_final <= threshold,
    }])
    report["passes"] = table.l1_final <= threshold
    _write(out / "comparison.json",
           json.dumps(report, sort_keys=True, indent=2) + "\n")
    lines = ["t,l1_error"]
    for t, err in zip(table.times, table.l1_errors):
        lines.append(f"{float(t)!r},{float(err)!r}")
    _write(out / "comparison.csv", "\n".join(lines) + "\n")
    print(f"final-time L1 gap {table.l1_final!r} vs threshold {threshold!r}")
    return EXIT_OK if report["passes"] else EXIT_SOLVER


def cmd_oracle(k: int, seed: int, q: float = 2.0) -> int:
    if k < 1 or k > transport.ORACLE_LIMIT:
        print(f"oracle needs 1 <= k <= {transport.ORACLE_LIMIT}", file=sys.stderr)
        return EXIT_CONFIG
    rng = np.random.default_rng(seed)
    cost = CostSpec.single_power(q)
    worst = 0.0
    for _ in range(20):
        x = rng.uniform(-1.0, 1.0, size=k)
        y = rng.uniform(-1.0, 1.0, size=k)
        exact, _ = transport.lp_oracle(x, y, cost, h=1.0)
        mono = transport.monotone_atom_cost(x, y, cost, h=1.0)
        worst = max(worst, abs(mono - exact) / max(abs(exact), 1e-300))
    print(f"max relative deviation {worst!r}")
    return EXIT_OK if worst <= 1e-9 else EXIT_SOLVER


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wflow",
        description="variational solver for 1-D degenerate diffusion")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration end to end")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--force", action="store_true",
                       help="run even if assumption checks fail")
    p_run.add_argument("--out", default=None)

    p_study = sub.add_parser("study", help="step-size sweep with a rate fit")
    p_study.add_argument("--config", required=True)
    p_study.add_argument("--vary", choices=["h"], default="h")
    p_study.add_argument("--values", required=True,
                         help="comma-separated step sizes")
    p_study.add_argument("--workers", type=int, default=0)
    p_study.add_argument("--out", default=None)

    p_cross = sub.add_parser("crosscheck",
                             help="variational vs finite-difference run")
    p_cross.add_argument("--config", required=True)
    p_cross.add_argument("--threshold", type=float, default=1e-2)
    p_cross.add_argument("--out", default=None)

    p_oracle = sub.add_parser("oracle",
                              help="monotone matching vs exact assignment")
    p_oracle.add_argument("--k", type=int, required=True)
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--q", type=float, default=2.0)

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, root=args.out, force=args.force)
    if args.command == "study":
        try:
            values = [float(tok) for tok in args.values.split(",") if tok.strip()]
        except ValueError:
            print("could not parse --values", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_study(args.config, values, root=args.out,
                         workers=args.workers)
    if args.command == "crosscheck":
        return cmd_crosscheck(args.config, threshold=args.threshold,
                              root=args.out)
    if args.command == "oracle":
        return cmd_oracle(args.k, args.seed, q=args.q)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
