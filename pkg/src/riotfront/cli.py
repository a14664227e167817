"""Command-line entry point.

Every verb prints a JSON summary on stdout; bulk data (orbits, snapshots,
sweep tables) goes to CSV files under ``--out``.  Floats are written with
17 significant digits so repeated runs can be compared byte for byte.

Exit status: 0 on success, 1 on domain or numerical errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from riotfront import kpp, pde
from riotfront.equilibria import equilibrium_B, solve_ubar
from riotfront.model import PARAM_KEYS, DomainError, ModelParams
from riotfront.ode import IntegrationError
from riotfront.reduced import shoot_heteroclinic
from riotfront.spectra import omega_thresholds, spectrum_at

SNAPSHOT_INDEX = "times.csv"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps(obj: Any) -> str:
    """JSON with every float at 17 significant digits; non-finite floats become null."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cell(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return v


def write_csv(path: Path | None, header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        path.write_text(text)
    return text


def emit(summary: dict, out: Path | None, name: str) -> None:
    text = dumps(summary)
    if out is not None:
        (out / f"{name}.json").write_text(text + "\n")
    print(text)


def complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


# ---------------------------------------------------------------- arguments


def add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model parameters")
    for key in PARAM_KEYS:
        g.add_argument(f"--{key}", type=float, default=None)
    g.add_argument("--config", type=Path, help="JSON file with parameter keys; flags override it")


def params_from(args: argparse.Namespace) -> ModelParams:
    data: dict[str, Any] = {}
    if args.config is not None:
        try:
            data.update(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    for key in PARAM_KEYS:
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    return ModelParams.from_mapping(data)


def out_dir(args: argparse.Namespace) -> Path | None:
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


# ---------------------------------------------------------------- verbs


def cmd_equilibria(args) -> int:
    params = params_from(args)
    eq = equilibrium_B(params)
    emit({"u_bar": eq.u_star, "v_bar": eq.v_star, "residual": eq.residual, **params.to_dict()}, out_dir(args), "equilibria")
    return 0


def cmd_spectrum(args) -> int:
    params = params_from(args)
    spec = spectrum_at(args.at, params)
    try:
        th = omega_thresholds(params)
        w1, w2 = th.omega1, th.omega2
    except DomainError:
        w1 = w2 = math.nan
    summary = {
        "at": args.at,
        "lambda1": complex_pair(spec.lambda1),
        "lambda2": complex_pair(spec.lambda2),
        "class": spec.classification.value,
        "omega1": w1,
        "omega2": w2,
        **params.to_dict(),
    }
    emit(summary, out_dir(args), "spectrum")
    return 0


def cmd_shoot(args) -> int:
    params = params_from(args)
    res = shoot_heteroclinic(params, delta_seed=args.delta_seed, capture_radius=args.capture_radius)
    out = out_dir(args)
    if out is not None:
        rows = zip(res.orbit.xi, res.orbit.states[:, 0], res.orbit.states[:, 1])
        write_csv(out / "orbit.csv", ("xi", "u", "v"), ((float(a), float(b), float(c)) for a, b, c in rows))
    summary = {
        "connected": res.connected,
        "approach": res.approach.value,
        "distance_to_B": res.distance_to_B,
        "crossing": list(res.crossing) if res.crossing else None,
        **params.to_dict(),
    }
    emit(summary, out, "shoot")
    return 0


def region_sample(n: int, seed: int, n_samples: int) -> dict:
    """Seeded random check of the sufficient concavity region."""
    failures = [
        {"gamma": prm.gamma, "beta": prm.beta, "p": prm.p, "max_f2": m}
        for prm, m in kpp.region_sample(n, seed, n_samples)
    ]
    return {"n": n, "seed": seed, "failures": len(failures), "first_failure": failures[0] if failures else None}


def cmd_kpp_check(args) -> int:
    params = params_from(args)
    v = kpp.kpp_check(params, args.n_samples)
    summary = {
        "p_threshold": v.p_threshold,
        "guaranteed": v.guaranteed_by_region,
        "numeric_concave": v.numeric_concave,
        "max_f2": v.max_f2,
        "min_speed": v.min_speed,
        **params.to_dict(),
    }
    if args.sample:
        summary["region_sample"] = region_sample(args.sample, args.seed, args.n_samples)
    emit(summary, out_dir(args), "kpp_check")
    return 0


def _snapshot_setup(args, params: ModelParams):
    if args.fixture:
        fx = pde.front_fixture(args.fixture)
        params, grid, init, every = fx.params, fx.grid, fx.initial, fx.snapshot_every
    else:
        if args.L is None or args.nx is None or args.dtau is None or args.t_end is None:
            raise UsageError("simulate needs --L, --nx, --dtau and --t_end (or --fixture)")
        grid = pde.GridConfig(args.L, args.nx, args.dtau, args.t_end)
        ub = solve_ubar(params)
        init = pde.InitialData(
            A=args.A if args.A is not None else ub,
            k=args.k if args.k is not None else 5.0,
            B=args.B if args.B is not None else 1.0,
            x0=args.x0,
        )
        every = args.snapshot_every
    if args.snapshot_every is not None:
        every = args.snapshot_every
    if args.frame == "lab":
        params = params.replace(c=0.0)
    return params, grid, init, every or 100


def cmd_simulate(args) -> int:
    params, grid, init, every = _snapshot_setup(args, params_from(args))
    run = pde.simulate(params, grid, init, every, scalar=args.mode == "scalar", literal=args.literal, reaction=args.reaction)
    out = out_dir(args)
    x = grid.x
    if out is not None:
        width = max(5, len(str(len(run))))
        for i, s in enumerate(run):
            write_csv(out / f"snap_{i:0{width}d}.csv", ("x", "u", "v"), zip(x.tolist(), s.u.tolist(), s.v.tolist()))
        write_csv(out / SNAPSHOT_INDEX, ("index", "tau"), ((i, float(s.tau)) for i, s in enumerate(run)))
    level = args.level if args.level is not None else 0.5 * solve_ubar(params)
    try:
        fs = pde.measure_front_speed(run, level, x, discard=args.discard)
        speed, resid = fs.speed, fs.fit_residual
    except (pde.NoFrontError, ValueError):
        speed = resid = math.nan
    summary = {
        "front_speed": speed,
        "fit_residual": resid,
        "stationarity_residual_series": pde.residual_series(run).tolist() if len(run) > 1 else [],
        "min_u": run.min_u,
        "min_v": run.min_v,
        "L": grid.L,
        "nx": grid.nx,
        "dtau": grid.dtau,
        "t_end": grid.t_end,
        **params.to_dict(),
    }
    emit(summary, out, "summary")
    return 0


def load_snapshots(folder: Path) -> tuple[np.ndarray, list[pde.FieldState]]:
    index = folder / SNAPSHOT_INDEX
    if not index.exists():
        raise UsageError(f"{index} not found; run simulate with --out first")
    with index.open() as fh:
        times = [float(r["tau"]) for r in csv.DictReader(fh)]
    files = sorted(folder.glob("snap_*.csv"))
    if len(files) != len(times):
        raise UsageError("snapshot files and index disagree")
    states, x = [], None
    for f, t in zip(files, times):
        data = np.loadtxt(f, delimiter=",", skiprows=1, ndmin=2)
        x = data[:, 0]
        states.append(pde.FieldState(data[:, 1], data[:, 2], t))
    return x, states


def cmd_front_speed(args) -> int:
    x, states = load_snapshots(args.snapshots)
    fs = pde.measure_front_speed(states, args.level, x, discard=args.discard)
    emit({"front_speed": fs.speed, "fit_residual": fs.fit_residual, "n_snapshots": len(fs.times)}, out_dir(args), "front_speed")
    return 0


def sweep_omegas(start: float, stop: float, count: int, scale: str) -> np.ndarray:
    if count < 1 or not (start > 0 and stop >= start):
        raise UsageError("sweep needs count >= 1 and 0 < start <= stop")
    if scale == "log":
        return np.logspace(math.log10(start), math.log10(stop), count)
    return np.linspace(start, stop, count)


def _sweep_row(params: ModelParams, omega: float) -> tuple:
    res = shoot_heteroclinic(params.replace(omega=float(omega)))
    cu, cv = res.crossing if res.crossing else (math.nan, math.nan)
    return float(omega), res.connected, res.approach.value, cu, cv


def cmd_sweep(args) -> int:
    params = params_from(args)
    omegas = sweep_omegas(args.start, args.stop, args.count, args.scale)
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        rows = list(pool.map(lambda w: _sweep_row(params, w), omegas))
    out = out_dir(args)
    text = write_csv(out / "sweep.csv" if out else None, ("omega", "connected", "approach", "crossing_u", "crossing_v"), rows)
    if out is None:
        sys.stdout.write(text)
        return 0
    vs = [r[4] for r in rows if math.isfinite(r[4])]
    summary = {
        "all_connected": all(r[1] for r in rows),
        "crossing_monotone": bool(np.all(np.diff(vs) > 0)) if len(vs) > 1 else True,
        "n": len(rows),
        **params.to_dict(),
    }
    emit(summary, out, "sweep")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riotfront", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def verb(name: str, fn, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        add_params(p)
        p.add_argument("--out", type=Path, default=None, help="directory for output files")
        p.set_defaults(fn=fn)
        return p

    verb("equilibria", cmd_equilibria, "excited equilibrium B")
    p = verb("spectrum", cmd_spectrum, "eigenvalues at A or B and the spiral window")
    p.add_argument("--at", choices=("A", "B"), default="B")
    p = verb("shoot", cmd_shoot, "shoot the A-to-B heteroclinic orbit")
    p.add_argument("--delta-seed", type=float, default=1e-6)
    p.add_argument("--capture-radius", type=float, default=1e-3)
    p = verb("kpp-check", cmd_kpp_check, "concavity of the scalar source")
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--sample", type=int, default=0, help="also test this many random points of the region")
    p.add_argument("--seed", type=int, default=0)
    p = verb("simulate", cmd_simulate, "Crank-Nicolson front simulation")
    for name in ("L", "dtau", "t_end", "A", "k", "B", "level"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--snapshot-every", type=int, default=None)
    p.add_argument("--frame", choices=("moving", "lab"), default="moving")
    p.add_argument("--mode", choices=("system", "scalar"), default="system")
    p.add_argument("--literal", action="store_true", help="use the d=1 stencil scaling for any d")
    p.add_argument("--reaction", choices=("euler", "ab2"), default="euler")
    p.add_argument("--fixture", choices=("steep", "fast", "smooth"), default=None)
    p.add_argument("--discard", type=float, default=0.5, help="leading fraction of snapshots ignored by the speed fit")
    p = sub.add_parser("front-speed", help="front speed from saved snapshots")
    p.add_argument("--snapshots", type=Path, required=True)
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--discard", type=float, default=0.0)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(fn=cmd_front_speed)
    p = verb("sweep", cmd_sweep, "heteroclinic shots over a range of omega")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--scale", choices=("linear", "log"), default="log")
    p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ArithmeticError, IntegrationError, pde.NoFrontError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
