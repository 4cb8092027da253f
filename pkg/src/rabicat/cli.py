"""Command-line sweeps with run-directory persistence.

Every subcommand writes ``data.csv`` (comma-separated, '#'-prefixed column
comments, 17 significant digits), ``plot.svg`` and ``manifest.json`` into the
directory given by ``--out``. Parameters come from defaults, then an optional
flat key=value ``--config`` file, then explicit flags, in that order of
precedence.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from multiprocessing import Pool

import numpy as np

from . import __version__, catqec, liouvillian, meanfield, svgplot

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"invalid configuration for '{key}': {message}")


def _float_list(text) -> tuple[float, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _positive(v) -> float:
    v = float(v)
    if not (v > 0 and math.isfinite(v)):
        raise ValueError(f"must be strictly positive, got {v}")
    return v


def _non_negative(v) -> float:
    v = float(v)
    if not (v >= 0 and math.isfinite(v)):
        raise ValueError(f"must be >= 0, got {v}")
    return v


def _positive_int(v) -> int:
    v = int(v)
    if v <= 0:
        raise ValueError(f"must be a positive integer, got {v}")
    return v


def _optional_int(v):
    if v is None or str(v).lower() in ("", "none", "auto"):
        return None
    return _positive_int(v)


def _optional_positive(v):
    if v is None or str(v).lower() in ("", "none", "auto"):
        return None
    return _positive(v)


def _positive_list(v) -> tuple[float, ...]:
    vals = _float_list(v)
    if any(not (x > 0 and math.isfinite(x)) for x in vals):
        raise ValueError(f"all values must be strictly positive, got {vals}")
    return vals


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    parse: callable
    default: object
    help: str = ""


_G_RANGE = [
    ParamSpec("g_min", _non_negative, 0.0, "sweep start coupling"),
    ParamSpec("g_max", _non_negative, 2.0, "sweep end coupling"),
    ParamSpec("g_steps", _positive_int, 201, "number of sweep points"),
]

COMMAND_PARAMS: dict[str, list[ParamSpec]] = {
    "meanfield-sweep": _G_RANGE
    + [
        ParamSpec("h", _non_negative, 1.0, "renormalized decay rate (shorthand)"),
        ParamSpec("h_min", _non_negative, None, "h sweep start"),
        ParamSpec("h_max", _non_negative, None, "h sweep end"),
        ParamSpec("h_steps", _positive_int, 1, "h sweep points"),
    ],
    "portrait": [
        ParamSpec("g", _non_negative, 0.6, "dimensionless coupling"),
        ParamSpec("h", _non_negative, 0.25, "renormalized decay rate"),
        ParamSpec("eta", _optional_positive, None, "finite frequency ratio (default: reduced flow)"),
        ParamSpec("t_max", _positive, 200.0, "integration horizon"),
        ParamSpec("samples", _positive_int, 2000, "output samples per trajectory"),
        ParamSpec("trajectories", _positive_int, 8, "initial points on the unit circle"),
    ],
    "gap-sweep": [
        ParamSpec("g_min", _non_negative, 1.0, "sweep start coupling"),
        ParamSpec("g_max", _non_negative, 2.0, "sweep end coupling"),
        ParamSpec("g_steps", _positive_int, 21, "number of sweep points"),
        ParamSpec("zeta", _positive_list, (10.0, 20.0, 30.0), "decay ratios (comma list)"),
        ParamSpec("fock_dim", _optional_int, None, "Fock truncation (auto by default)"),
    ],
    "photon-sweep": [
        ParamSpec("g_min", _non_negative, 0.0, "sweep start coupling"),
        ParamSpec("g_max", _non_negative, 2.0, "sweep end coupling"),
        ParamSpec("g_steps", _positive_int, 41, "number of sweep points"),
        ParamSpec("zeta", _positive_list, (10.0, 20.0, 30.0), "decay ratios (comma list)"),
        ParamSpec("fock_dim", _optional_int, None, "Fock truncation (auto by default)"),
        ParamSpec("dump_states", _bool, False, "write ee steady-state binaries"),
    ],
    "cat-protocol": [
        ParamSpec("g_err", _non_negative, 0.5, "drifted coupling during the quench"),
        ParamSpec("tau", _non_negative, 1.0, "error-injection time"),
        ParamSpec("t_corr", _non_negative, 1.0, "correction time"),
        ParamSpec("zeta", _positive, 30.0, "decay ratio"),
        ParamSpec("fock_dim", _optional_int, None, "Fock truncation (auto by default)"),
        ParamSpec("ce", complex, complex(1 / math.sqrt(2)), "even-cat coefficient"),
        ParamSpec("co", complex, complex(1 / math.sqrt(2)), "odd-cat coefficient"),
        ParamSpec("asymptotic", _bool, False, "relax until the fidelity plateaus"),
    ],
    "cat-sweep": [
        ParamSpec("g_min", _non_negative, 0.2, "g_err sweep start"),
        ParamSpec("g_max", _non_negative, 2.0, "g_err sweep end"),
        ParamSpec("g_steps", _positive_int, 19, "number of sweep points"),
        ParamSpec("zeta", _positive_list, (30.0,), "decay ratios (comma list)"),
        ParamSpec("tau", _non_negative, 1.0, "error-injection time"),
        ParamSpec("t_corr", _non_negative, 1.0, "correction time"),
        ParamSpec("fock_dim", _optional_int, None, "Fock truncation (auto by default)"),
        ParamSpec("ce", complex, complex(1 / math.sqrt(2)), "even-cat coefficient"),
        ParamSpec("co", complex, complex(1 / math.sqrt(2)), "odd-cat coefficient"),
        ParamSpec("asymptotic", _bool, False, "relax until the fidelity plateaus"),
    ],
}

COMMANDS = tuple(COMMAND_PARAMS)


@dataclass
class RunConfig:
    command: str
    params: dict
    output_dir: str
    parallel: int = 1
    seed: int = 0


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str
    started: str
    finished: str
    files: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "config": self.config,
                "version": self.version,
                "started": self.started,
                "finished": self.finished,
                "files": self.files,
            },
            indent=2,
            default=str,
        )


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}", f"expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def parse_config(
    command: str,
    output_dir: str,
    config_file: str | None = None,
    flags: dict | None = None,
    parallel: int | None = None,
    seed: int = 0,
) -> RunConfig:
    """Merge defaults, config-file values and explicit flags into a RunConfig."""
    if command not in COMMAND_PARAMS:
        raise ConfigError("command", f"unknown command {command!r}")
    specs = {s.name: s for s in COMMAND_PARAMS[command]}
    params = {name: spec.default for name, spec in specs.items()}
    sources = []
    if config_file:
        sources.append(_read_config_file(config_file))
    if flags:
        sources.append({k: v for k, v in flags.items() if v is not None})
    for source in sources:
        for key, value in source.items():
            if key not in specs:
                raise ConfigError(key, f"unknown key for command {command!r}")
            try:
                params[key] = specs[key].parse(value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(key, str(exc)) from exc
    if parallel is None:
        parallel = os.cpu_count() or 1
    if parallel < 1:
        raise ConfigError("parallel", f"must be >= 1, got {parallel}")
    return RunConfig(
        command=command,
        params=params,
        output_dir=output_dir,
        parallel=int(parallel),
        seed=int(seed),
    )


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _write_csv(path, columns, comments, rows) -> None:
    lines = [f"# rabicat {__version__}"]
    lines += [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _map_points(func, tasks, parallel):
    if parallel <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with Pool(processes=min(parallel, len(tasks))) as pool:
        return pool.map(func, tasks)


# -- per-command workers (module level so they pickle for multiprocessing) --


def _mf_point(task):
    g, h = task
    rep = meanfield.stable_order_parameter(meanfield.MeanFieldParams(g=g, h=h))
    e1, e2 = rep.jacobian_eigenvalues
    return (
        g,
        h,
        rep.location.x,
        rep.location.y,
        rep.location.abs_alpha,
        rep.stability,
        e1.real,
        e1.imag,
        e2.real,
        e2.imag,
    )


def _gap_point(task):
    g, zeta, fock_dim = task
    sop = liouvillian.parity_blocks(
        liouvillian.build_effective(
            liouvillian.EffectiveParams(g=g, zeta=zeta, fock_dim=fock_dim)
        )
    )
    res = liouvillian.spectrum(sop)
    return (g, zeta, fock_dim, res.gap, res.degeneracy)


def _photon_point(task):
    g, zeta, fock_dim = task
    sop = liouvillian.parity_blocks(
        liouvillian.build_effective(
            liouvillian.EffectiveParams(g=g, zeta=zeta, fock_dim=fock_dim)
        )
    )
    return (g, zeta, fock_dim, liouvillian.photon_ratio(sop))


def _cat_point(task):
    g_err, zeta, tau, t_corr, fock_dim, ce, co, asymptotic = task
    config = catqec.ProtocolConfig(
        g_err=g_err, tau=tau, t_corr=t_corr, zeta=zeta, fock_dim=fock_dim
    )
    code = catqec.CatQubitCode.for_operating_point(zeta, ce, co)
    result = catqec.run_protocol(config, code=code, asymptotic=asymptotic)
    return catqec.protocol_csv_row(result)


def _run_meanfield_sweep(cfg: RunConfig):
    p = cfg.params
    g_values = np.linspace(p["g_min"], p["g_max"], p["g_steps"])
    if p["h_min"] is not None or p["h_max"] is not None:
        h_lo = p["h_min"] if p["h_min"] is not None else p["h"]
        h_hi = p["h_max"] if p["h_max"] is not None else h_lo
        h_values = np.linspace(h_lo, h_hi, p["h_steps"])
    else:
        h_values = np.array([p["h"]])
    tasks = [(float(g), float(h)) for h in h_values for g in g_values]
    rows = _map_points(_mf_point, tasks, cfg.parallel)
    comments = [
        "columns: g (coupling), h (decay rate), x/y (order parameter), abs_alpha,",
        "stability, jacobian_re1/im1/re2/im2 (eigenvalues at the reported point)",
    ]
    sweep_axis = 0 if len(g_values) > 1 else 1
    series = []
    for h in h_values:
        pts = [r for r in rows if r[1] == h]
        xs = [r[sweep_axis] for r in pts]
        ys = [r[4] for r in pts]
        series.append(svgplot.Series(label=f"h={h:g}", xs=xs, ys=ys))
    svg = svgplot.render_plot(
        series,
        xlabel="g" if sweep_axis == 0 else "h",
        ylabel="|alpha|",
        title="stable order parameter",
    )
    return meanfield.SWEEP_CSV_COLUMNS, comments, rows, svg


def _run_portrait(cfg: RunConfig):
    p = cfg.params
    params = meanfield.MeanFieldParams(
        g=p["g"], h=p["h"], eta=float(p["eta"]) if p["eta"] else None
    )
    columns = ["trajectory", "t", "x", "y"]
    if params.eta is not None:
        columns += ["sp_re", "sp_im", "sz"]
    rows = []
    series = []
    n_traj = p["trajectories"]
    for k in range(n_traj):
        angle = 2.0 * math.pi * k / n_traj
        traj = meanfield.integrate(
            (math.cos(angle), math.sin(angle)),
            params,
            t_max=p["t_max"],
            n_samples=p["samples"],
        )
        for i, t in enumerate(traj.times):
            row = [k, float(t), float(traj.xs[i]), float(traj.ys[i])]
            if params.eta is not None:
                row += [float(traj.sp[i].real), float(traj.sp[i].imag), float(traj.sz[i])]
            rows.append(tuple(row))
        series.append(
            svgplot.Series(label=f"traj {k}", xs=list(traj.xs), ys=list(traj.ys))
        )
    comments = [
        "columns: trajectory (index), t (renormalized time), x/y (order parameter)"
        + (", sp_re/sp_im/sz (spin expectations)" if params.eta is not None else "")
    ]
    svg = svgplot.render_plot(series, xlabel="x", ylabel="y", title="phase portrait")
    return columns, comments, rows, svg


def _run_gap_sweep(cfg: RunConfig):
    p = cfg.params
    g_values = np.linspace(p["g_min"], p["g_max"], p["g_steps"])
    tasks = []
    for zeta in p["zeta"]:
        nfock = p["fock_dim"] or liouvillian.default_fock_dim(max(g_values), zeta)
        tasks += [(float(g), float(zeta), int(nfock)) for g in g_values]
    rows = _map_points(_gap_point, tasks, cfg.parallel)
    comments = [
        "columns: g (coupling), zeta (decay ratio), fock_dim (truncation),",
        "gap (slowest nonsteady decay rate), degeneracy (steady-state count)",
    ]
    series = [
        svgplot.Series(
            label=f"zeta={zeta:g}",
            xs=[r[0] for r in rows if r[1] == zeta],
            ys=[max(r[3], 1e-16) for r in rows if r[1] == zeta],
        )
        for zeta in p["zeta"]
    ]
    svg = svgplot.render_plot(series, xlabel="g", ylabel="gap", title="spectral gap", logy=True)
    return ("g", "zeta", "fock_dim", "gap", "degeneracy"), comments, rows, svg


def _run_photon_sweep(cfg: RunConfig):
    p = cfg.params
    g_values = np.linspace(p["g_min"], p["g_max"], p["g_steps"])
    tasks = []
    for zeta in p["zeta"]:
        nfock = p["fock_dim"] or liouvillian.default_fock_dim(max(g_values), zeta)
        tasks += [(float(g), float(zeta), int(nfock)) for g in g_values]
    rows = _map_points(_photon_point, tasks, cfg.parallel)
    comments = [
        "columns: g (coupling), zeta (decay ratio), fock_dim (truncation),",
        "photon_ratio (steady-state <n>/zeta in the even-even sector)",
    ]
    series = [
        svgplot.Series(
            label=f"zeta={zeta:g}",
            xs=[r[0] for r in rows if r[1] == zeta],
            ys=[r[3] for r in rows if r[1] == zeta],
        )
        for zeta in p["zeta"]
    ]
    svg = svgplot.render_plot(series, xlabel="g", ylabel="<n>/zeta", title="photon number")
    extra_files = {}
    if p["dump_states"]:
        for g, zeta, nfock, _ in rows:
            sop = liouvillian.parity_blocks(
                liouvillian.build_effective(
                    liouvillian.EffectiveParams(g=g, zeta=zeta, fock_dim=nfock)
                )
            )
            rho = liouvillian._steady_state_sector(sop, "ee")
            extra_files[f"steady_ee_g{g:g}_zeta{zeta:g}.bin"] = ("ee", rho)
    return ("g", "zeta", "fock_dim", "photon_ratio"), comments, rows, svg, extra_files


def _run_cat_protocol(cfg: RunConfig):
    p = cfg.params
    task = (
        p["g_err"],
        p["zeta"],
        p["tau"],
        p["t_corr"],
        p["fock_dim"],
        p["ce"],
        p["co"],
        p["asymptotic"],
    )
    rows = [_cat_point(task)]
    comments = ["columns: " + ", ".join(catqec.PROTOCOL_CSV_COLUMNS)]
    svg = svgplot.render_plot(
        [
            svgplot.Series("fidelity_err", [p["g_err"]], [rows[0][10]], scatter=True),
            svgplot.Series("fidelity_corr", [p["g_err"]], [rows[0][11]], scatter=True),
        ],
        xlabel="g_err",
        ylabel="fidelity",
        title="error-correction benchmark",
    )
    return catqec.PROTOCOL_CSV_COLUMNS, comments, rows, svg


def _run_cat_sweep(cfg: RunConfig):
    p = cfg.params
    g_values = np.linspace(p["g_min"], p["g_max"], p["g_steps"])
    tasks = [
        (float(g), float(zeta), p["tau"], p["t_corr"], p["fock_dim"], p["ce"], p["co"], p["asymptotic"])
        for zeta in p["zeta"]
        for g in g_values
    ]
    rows = _map_points(_cat_point, tasks, cfg.parallel)
    comments = ["columns: " + ", ".join(catqec.PROTOCOL_CSV_COLUMNS)]
    series = []
    for zeta in p["zeta"]:
        pts = [r for r in rows if r[4] == zeta]
        series.append(
            svgplot.Series(
                label=f"corr zeta={zeta:g}", xs=[r[1] for r in pts], ys=[r[11] for r in pts]
            )
        )
        series.append(
            svgplot.Series(
                label=f"err zeta={zeta:g}", xs=[r[1] for r in pts], ys=[r[10] for r in pts]
            )
        )
    svg = svgplot.render_plot(
        series, xlabel="g_err", ylabel="fidelity", title="error-correction benchmark"
    )
    return catqec.PROTOCOL_CSV_COLUMNS, comments, rows, svg


_RUNNERS = {
    "meanfield-sweep": _run_meanfield_sweep,
    "portrait": _run_portrait,
    "gap-sweep": _run_gap_sweep,
    "photon-sweep": _run_photon_sweep,
    "cat-protocol": _run_cat_protocol,
    "cat-sweep": _run_cat_sweep,
}


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def run(config: RunConfig) -> RunManifest:
    """Execute a command and persist data.csv, plot.svg and manifest.json."""
    started = datetime.now(timezone.utc).isoformat()
    outcome = _RUNNERS[config.command](config)
    columns, comments, rows, svg = outcome[:4]
    extra_files = outcome[4] if len(outcome) > 4 else {}
    os.makedirs(config.output_dir, exist_ok=True)
    csv_path = os.path.join(config.output_dir, "data.csv")
    svg_path = os.path.join(config.output_dir, "plot.svg")
    _write_csv(csv_path, columns, comments, rows)
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    files = {"data.csv": _sha256(csv_path), "plot.svg": _sha256(svg_path)}
    for name, (label, matrix) in extra_files.items():
        path = os.path.join(config.output_dir, name)
        liouvillian.dump_steady_state(path, matrix, label)
        files[name] = _sha256(path)
    manifest = RunManifest(
        command=config.command,
        config={
            "params": config.params,
            "output_dir": config.output_dir,
            "parallel": config.parallel,
            "seed": config.seed,
        },
        version=__version__,
        started=started,
        finished=datetime.now(timezone.utc).isoformat(),
        files=files,
    )
    with open(os.path.join(config.output_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json() + "\n")
    return manifest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabicat",
        description="Dissipative Rabi-model sweeps and the cat-qubit error-correction benchmark",
    )
    parser.add_argument("--version", action="version", version=f"rabicat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, specs in COMMAND_PARAMS.items():
        p = sub.add_parser(command)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", default=None, help="flat key=value configuration file")
        p.add_argument("--parallel", type=int, default=None, help="worker processes")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized utilities")
        for spec in specs:
            flag = "--" + spec.name.replace("_", "-")
            p.add_argument(flag, dest=spec.name, default=None, help=spec.help)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    flag_values = {
        s.name: getattr(args, s.name) for s in COMMAND_PARAMS[args.command]
    }
    try:
        config = parse_config(
            args.command,
            output_dir=args.out,
            config_file=args.config,
            flags=flag_values,
            parallel=args.parallel,
            seed=args.seed,
        )
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(config)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # numerical/model failures from the compute modules
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {config.output_dir} ({', '.join(sorted(manifest.files))})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
