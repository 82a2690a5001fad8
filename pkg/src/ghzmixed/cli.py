"""Command-line driver: derive, state, simulate, tomo, analyze, reproduce.

Exit codes: 0 success, 2 usage, 3 data format, 4 analysis failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import factory, measurement, nonlocality, pauli, states, tomography

SCHEMA_VERSION = 1

DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "graph": {"preset": "t_shaped", "n": 7},
    "support": [1, 2, 3, 4],
    "max_product_size": 3,
    "noise": {"white_noise_p": 0.625, "dephasing": []},
    "counting": {
        "events_per_setting": 1900,
        "duration_s": 60.0,
        # rate constant chosen so VVVD has this mean on the simulated state
        "vvvd_mean_counts": 120.0,
    },
    "seeds": {"simulate": 2008, "bootstrap": 7},
    "bootstrap": {"replicas": 500, "tomography_replicas": 100},
    "out_dir": "ghz_out",
    "tolerances": {"mle_tol": 1e-10, "mle_max_iter": 5000},
}

# value, sigma of the experimental results being reproduced
REFERENCE_VALUES = {
    "fidelity_rho_psi": (0.68, 0.02),
    "fidelity_ghz_before_dephasing": (0.78, 0.02),
    "witness_D": (-0.24, 0.01),
    "witness_A": (-0.22, 0.01),
    "fraction_XYYX": (0.822, 0.009),
    "fraction_YXYX": (0.798, 0.009),
    "fraction_YYXX": (0.812, 0.009),
    "fraction_XXXX": (0.81, 0.009),
    "expectation_XXXX": (0.626, 0.019),
    "expectation_XYYX": (-0.646, 0.018),
    "expectation_YXYX": (-0.595, 0.018),
    "expectation_YYXX": (-0.628, 0.019),
    "lr_bound_fraction": (0.57, 0.016),
    "S": (2.50, 0.04),
    "significance_counting": (12.0, float("nan")),
    "significance_mermin": (12.0, float("nan")),
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | None, args: argparse.Namespace | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {path}: {exc}", 2) from None
        if user.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise CliError(f"unsupported config schema_version {user.get('schema_version')}", 2)
        cfg = _merge(cfg, user)
    if args is not None:
        if getattr(args, "seed", None) is not None:
            cfg["seeds"]["simulate"] = args.seed
        if getattr(args, "out_dir", None):
            cfg["out_dir"] = args.out_dir
        if getattr(args, "events_per_setting", None) is not None:
            cfg["counting"]["events_per_setting"] = args.events_per_setting
        if getattr(args, "noise_p", None) is not None:
            cfg["noise"]["white_noise_p"] = args.noise_p
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        g = graph_from_config(cfg)
        support = [int(q) for q in cfg["support"]]
        if not support or any(not (1 <= q <= g.n) for q in support):
            raise ValueError(f"support {support} outside the graph")
        factory.NoiseSpec.from_dict(cfg["noise"])
        if cfg["counting"]["events_per_setting"] <= 0:
            raise ValueError("events_per_setting must be positive")
        for key in ("simulate", "bootstrap"):
            int(cfg["seeds"][key])
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"invalid config: {exc}", 2) from None


def graph_from_config(cfg: dict) -> pauli.GraphSpec:
    g = cfg["graph"]
    if "file" in g:
        return pauli.GraphSpec.from_text(Path(g["file"]).read_text())
    preset = g.get("preset")
    if preset == "t_shaped":
        return pauli.t_shaped(int(g["n"]))
    if preset == "linear":
        return pauli.linear(int(g["n"]))
    if "edges" in g:
        return pauli.GraphSpec.from_edges(int(g["n"]), g["edges"])
    raise ValueError(f"unknown graph description {g!r}")


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- stages ----------------------------------------------------------------


def run_derive(cfg: dict, out_dir: Path) -> pauli.ParadoxCertificate:
    g = graph_from_config(cfg)
    cert = pauli.derive_ghz_paradox(g, cfg["support"], int(cfg["max_product_size"]))
    if cert is None:
        raise CliError(
            f"no GHZ paradox on qubits {sorted(cfg['support'])} of this {g.n}-vertex graph "
            f"with products of up to {cfg['max_product_size']} generators",
            4,
        )
    if not pauli.verify_certificate(cert, g) or not nonlocality.paradox_lr_contradiction(cert):
        raise CliError("derived certificate failed verification", 4)
    _write(out_dir, "certificate.json", cert.to_json() + "\n")
    _write(out_dir, "proof.txt", cert.transcript() + "\n")
    return cert


def rate_constant(cfg: dict, rho: np.ndarray) -> float:
    c = cfg["counting"]
    if c.get("rate_constant"):
        return float(c["rate_constant"])
    p = measurement.projector_probability(rho, "VVVD")
    if p <= 0:
        raise CliError("VVVD has zero probability; set counting.rate_constant", 2)
    return float(c["vvvd_mean_counts"]) / (p * float(c["duration_s"]))


def run_simulate(cfg: dict, out_dir: Path):
    noise = factory.NoiseSpec.from_dict(cfg["noise"])
    stages = factory.pipeline_stages(noise)
    rho = stages.final
    seed = int(cfg["seeds"]["simulate"])
    c = cfg["counting"]
    tables = {
        s: measurement.simulate_setting(rho, s, float(c["events_per_setting"]), seed, float(c["duration_s"]))
        for s in nonlocality.WITNESS_SETTINGS
    }
    tset = tomography.simulate_tomography(rho, rate_constant(cfg, rho), float(c["duration_s"]), seed)
    _write(out_dir, "correlation_counts.csv", measurement.write_counts_csv(tables[s] for s in sorted(tables)))
    _write(out_dir, "tomography_counts.csv",
           measurement.write_projector_csv(tset.projectors, tset.counts, tset.duration_s))
    _write(out_dir, "rho_simulated.json", states.dumps_density(rho, {"noise": noise.to_dict()}) + "\n")
    return stages, tables, tset


def run_tomo(tset: tomography.TomographySet, cfg: dict, out_dir: Path) -> dict:
    tol = cfg["tolerances"]
    res = tomography.mle_reconstruct(tset, tol=float(tol["mle_tol"]), max_iter=int(tol["mle_max_iter"]))
    target = factory.rho_psi()
    out = {
        "fidelity_rho_psi": states.fidelity(res.rho, target),
        "witness_D_tomo": tomography.branch_witness(res.rho, "D"),
        "witness_A_tomo": tomography.branch_witness(res.rho, "A"),
        "mle": res.metadata(),
    }
    B = int(cfg["bootstrap"]["tomography_replicas"])
    if B >= 100:
        bseed = int(cfg["seeds"]["bootstrap"])
        out["fidelity_rho_psi_sigma"] = tomography.bootstrap_sigma(
            tset, tomography.fidelity_statistic(target), B, bseed, warm_start=res.rho)
        for br in ("D", "A"):
            out[f"witness_{br}_tomo_sigma"] = tomography.bootstrap_sigma(
                tset, f"witness_{br}", B, bseed, warm_start=res.rho)
    meta = dict(out)
    meta["seed"] = tset.meta.get("seed")
    _write(out_dir, "rho_meas.json", states.dumps_density(res.rho, meta) + "\n")
    return out


def run_analyze(tables: dict, cfg: dict, out_dir: Path) -> nonlocality.NonlocalityReport:
    try:
        report = nonlocality.analyze(tables)
    except ValueError as exc:
        raise CliError(f"analysis failed: {exc}", 3) from None
    if "ZZZX" in tables:
        B = int(cfg["bootstrap"]["replicas"])
        bseed = int(cfg["seeds"]["bootstrap"])
        for br in ("D", "A"):
            fn = lambda t, br=br: nonlocality.witness_from_counts(t, br)  # noqa: E731
            report.witnesses[br] = {
                "value": fn(tables),
                "sigma": nonlocality.bootstrap_tables(tables, fn, B, bseed),
            }
    _write(out_dir, "report.json", report.to_json() + "\n")
    _write(out_dir, "report.csv", report.to_csv())
    _write(out_dir, "outcome_fractions.csv", nonlocality.fraction_table_csv(tables))
    return report


def _fmt(v: float, s: float | None) -> str:
    if s is None or not np.isfinite(s):
        return f"{v:.3f}"
    return f"{v:.3f} +- {s:.3f}"


def summary_rows(stages, tomo: dict, report: nonlocality.NonlocalityReport) -> list[tuple]:
    ghz_fid = float(np.real(np.vdot(factory.ghz4(), stages.noisy @ factory.ghz4())))
    rows = [
        ("fidelity_rho_psi", tomo["fidelity_rho_psi"], tomo.get("fidelity_rho_psi_sigma")),
        ("fidelity_ghz_before_dephasing", ghz_fid, 0.0),
    ]
    for br in ("D", "A"):
        w = report.witnesses.get(br)
        if w:
            rows.append((f"witness_{br}", w["value"], w["sigma"]))
    for s in ("XYYX", "YXYX", "YYXX", "XXXX"):
        f = report.fractions[s]
        rows.append((f"fraction_{s}", f.value, f.sigma))
    for s in nonlocality.MERMIN_SETTINGS:
        v, sg = report.expectations[s]
        rows.append((f"expectation_{s}", v, sg))
    rows += [
        ("lr_bound_fraction", report.lr_bound_fraction, report.lr_bound_sigma),
        ("S", report.S, report.S_sigma),
        ("significance_counting", report.significance_sigma, None),
        ("significance_mermin", report.mermin_significance_sigma, None),
    ]
    return rows


def run_reproduce(cfg: dict, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    _write(out_dir, "config.json", _dump(cfg))
    stage = "derive"
    try:
        run_derive(cfg, out_dir)
        stage = "simulate"
        stages, tables, tset = run_simulate(cfg, out_dir)
        stage = "tomography"
        tomo = run_tomo(tset, cfg, out_dir)
        stage = "analyze"
        report = run_analyze(tables, cfg, out_dir)
    except CliError as exc:
        raise CliError(f"[{stage}] {exc}", exc.code) from None
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise CliError(f"[{stage}] {exc}", 4) from None
    rows = summary_rows(stages, tomo, report)
    text = _summary_text(rows, tomo, report)
    _write(out_dir, "summary.txt", text)
    csv_lines = ["statistic,value,sigma,reference_value,reference_sigma"]
    for name, v, s in rows:
        pv, ps = REFERENCE_VALUES[name]
        csv_lines.append(f"{name},{v!r},{'' if s is None else repr(s)},{pv!r},{'' if not np.isfinite(ps) else repr(ps)}")
    _write(out_dir, "summary.csv", "\n".join(csv_lines) + "\n")
    return {"rows": rows, "report": report, "tomo": tomo, "summary": text}


def _summary_text(rows, tomo, report) -> str:
    lines = [f"{'statistic':<30} {'simulated':>22} {'reference':>22}"]
    for name, v, s in rows:
        pv, ps = REFERENCE_VALUES[name]
        lines.append(f"{name:<30} {_fmt(v, s):>22} {_fmt(pv, ps):>22}")
    for br in ("D", "A"):
        name = f"witness_{br}_tomography"
        v, s = tomo[f"witness_{br}_tomo"], tomo.get(f"witness_{br}_tomo_sigma")
        pv, ps = REFERENCE_VALUES[f"witness_{br}"]
        lines.append(f"{name:<30} {_fmt(v, s):>22} {_fmt(pv, ps):>22}")
    if report.violates:
        lines.append(f"S = {report.S:.3f} > 2: local realism violated")
    else:
        lines.append(f"S = {report.S:.3f} <= 2: no violation")
    return "\n".join(lines) + "\n"


# --- argument parsing ----------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="simulation seed")
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--events-per-setting", type=float, help="expected events per correlation setting")
    p.add_argument("--noise-p", type=float, help="white-noise weight of the ideal state")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="ghzmixed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("derive", parents=[common], help="derive a GHZ paradox certificate")
    d.add_argument("--graph", help="graph file ('n=<int>' then '<u> <v>' lines)")
    d.add_argument("--preset", choices=["t_shaped", "linear"])
    d.add_argument("--n", type=int, help="vertex count for --preset")
    d.add_argument("--support", help="comma-separated qubits, e.g. 1,2,3,4")
    d.add_argument("--max-product-size", type=int)

    s = sub.add_parser("state", parents=[common], help="write a named state as JSON")
    s.add_argument("name", choices=["rho_psi", "rho_phi", "ghz4", "pipeline", "cluster"])
    s.add_argument("--preset", choices=["t_shaped", "linear"])
    s.add_argument("--n", type=int)

    sub.add_parser("simulate", parents=[common], help="simulate correlation and tomography counts")

    t = sub.add_parser("tomo", parents=[common], help="maximum-likelihood reconstruction")
    t.add_argument("counts", help="projector counts CSV")

    a = sub.add_parser("analyze", parents=[common], help="nonlocality analysis of counts")
    a.add_argument("counts", nargs="+", help="counts CSV file(s)")

    sub.add_parser("reproduce", parents=[common], help="run the full reproduction")
    return parser


def _graph_overrides(cfg: dict, args) -> dict:
    if getattr(args, "graph", None):
        cfg["graph"] = {"file": args.graph}
    elif getattr(args, "preset", None):
        if args.n is None:
            raise CliError("--preset needs --n", 2)
        cfg["graph"] = {"preset": args.preset, "n": args.n}
    if getattr(args, "support", None):
        try:
            cfg["support"] = [int(x) for x in args.support.split(",")]
        except ValueError:
            raise CliError(f"bad --support {args.support!r}", 2) from None
    if getattr(args, "max_product_size", None):
        cfg["max_product_size"] = args.max_product_size
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        try:
            cfg = _graph_overrides(cfg, args)
            validate_config(cfg)
        except (OSError, ValueError) as exc:
            raise CliError(f"usage: {exc}", 2) from None
        out_dir = Path(cfg["out_dir"])
        return _dispatch(args, cfg, out_dir)
    except CliError as exc:
        print(f"ghzmixed: {exc}", file=sys.stderr)
        return exc.code


def _dispatch(args, cfg: dict, out_dir: Path) -> int:
    if args.command == "derive":
        cert = run_derive(cfg, out_dir)
        print(cert.transcript())
    elif args.command == "state":
        rho = _named_state(args, cfg)
        _write(out_dir, f"{args.name}.json", states.dumps_density(rho) + "\n")
        print("eigenvalues:", np.array2string(states.eigenvalues(rho)[:4], precision=6), "...")
        print(f"fidelity to rho_psi: {states.fidelity(rho, factory.rho_psi()) if rho.shape == (16, 16) else float('nan'):.6f}")
    elif args.command == "simulate":
        run_simulate(cfg, out_dir)
        print(f"wrote counts to {out_dir}")
    elif args.command == "tomo":
        tset = _read_tomo(args.counts)
        out = run_tomo(tset, cfg, out_dir)
        print(_dump({k: v for k, v in out.items()}), end="")
    elif args.command == "analyze":
        tables = {}
        for path in args.counts:
            try:
                tables.update(measurement.read_counts_csv(Path(path).read_text()))
            except measurement.FormatError as exc:
                raise CliError(f"{path}: {exc}", 3) from None
            except OSError as exc:
                raise CliError(str(exc), 2) from None
        missing = [s for s in nonlocality.MERMIN_SETTINGS if s not in tables]
        if missing:
            raise CliError(f"missing settings: {', '.join(missing)}", 3)
        report = run_analyze(tables, cfg, out_dir)
        print(report.to_json())
    elif args.command == "reproduce":
        res = run_reproduce(cfg, out_dir)
        print(res["summary"], end="")
    return 0


def _named_state(args, cfg: dict) -> np.ndarray:
    if args.name == "rho_psi":
        return factory.rho_psi()
    if args.name == "rho_phi":
        return factory.rho_phi()
    if args.name == "ghz4":
        return states.densify(factory.ghz4())
    if args.name == "pipeline":
        return factory.generation_pipeline(factory.NoiseSpec.from_dict(cfg["noise"]))
    cfg = _graph_overrides(cfg, args)
    return states.densify(factory.cluster_state(graph_from_config(cfg)))


def _read_tomo(path: str) -> tomography.TomographySet:
    try:
        projectors, counts, duration = measurement.read_projector_csv(Path(path).read_text())
        return tomography.TomographySet(projectors, counts, duration)
    except measurement.FormatError as exc:
        raise CliError(f"{path}: {exc}", 3) from None
    except ValueError as exc:
        raise CliError(f"{path}: {exc}", 3) from None
    except OSError as exc:
        raise CliError(str(exc), 2) from None


if __name__ == "__main__":
    sys.exit(main())
