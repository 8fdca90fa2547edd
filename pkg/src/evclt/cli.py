"""Command-line frontend.

Subcommands::

    evclt diagnose       --config cfg.yaml --out DIR
    evclt simulate       --config cfg.yaml --out DIR [--workers N] [--emit-samples]
    evclt lindeberg      --config cfg.yaml --out DIR
    evclt counterexample --config cfg.yaml --out DIR [--workers N]

Exit codes: 0 all requested tests pass, 1 a test failed, 2 usage or config
error. The EVCLT_SEED environment variable overrides the config seed.
Re-running a command with the same config overwrites byte-identical outputs;
the only timestamp lives in manifest.json.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from pathlib import Path

from . import __version__
from .asymptotics import diagnostics_report, lindeberg_sum
from .config import AppConfig, config_hash, load_config
from .design import export_design_csv
from .errors import ConfigError, EvcltError
from .harness import counterexample_run, report_json_bytes, run_experiment


def _write_json(path: Path, payload: dict) -> None:
    path.write_bytes((json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8"))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                ["" if v is None else repr(v) if isinstance(v, float) else v for v in row]
            )


def _write_manifest(out: Path, command: str, config_path: str, config: AppConfig) -> None:
    _write_json(
        out / "manifest.json",
        {
            "command": command,
            "config_path": str(config_path),
            "config_sha256": config_hash(config),
            "tool_version": __version__,
            "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(
                timespec="seconds"
            ),
            "out_dir": str(out),
        },
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_diagnose(args, config: AppConfig) -> int:
    section = config.diagnose
    report = diagnostics_report(
        config.design,
        config.model,
        config.n_grid,
        conditions=section.conditions,
        include_hierarchy=section.hierarchy,
        include_petrov=section.petrov,
        rule=config.trend_rule,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "diagnose", args.config, config)
    _write_json(out / "diagnostics.json", report)

    rows = []
    verdict_lines = []
    for name, path in report["conditions"].items():
        for n, value in zip(path["n_grid"], path["values"]):
            rows.append([name, n, float(value), path["target"], path["verdict"]])
        verdict_lines.append((name, path["verdict"], path["values"][-1]))
    _write_csv(out / "conditions.csv", ["condition", "n", "value", "target", "verdict"], rows)

    if "hierarchy" in report:
        h = report["hierarchy"]
        _write_csv(
            out / "hierarchy.csv",
            ["n", "n_over_root_s", "root_s_over_maxdev_sq", "maxdev_sq_over_s", "flagged"],
            [
                [n, float(a), float(b), float(c), h["flagged"]]
                for n, a, b, c in zip(
                    h["n_grid"], h["n_over_root_s"], h["root_s_over_maxdev_sq"], h["maxdev_sq_over_s"]
                )
            ],
        )
    if "petrov" in report:
        rows = []
        for name in ("petrov-i", "petrov-ii", "petrov-iii"):
            path = report["petrov"][name]
            for n, value in zip(path["n_grid"], path["values"]):
                rows.append([name, n, float(value), path["verdict"]])
            verdict_lines.append((name, path["verdict"], path["values"][-1]))
        _write_csv(out / "petrov.csv", ["condition", "n", "value", "verdict"], rows)
    export_design_csv(config.design, config.n_grid[-1], out / "design.csv")

    print(f"{'condition':<20} {'verdict':<18} final value")
    for name, verdict, value in verdict_lines:
        print(f"{name:<20} {verdict:<18} {value:.6g}")
    return 0


def _cmd_simulate(args, config: AppConfig) -> int:
    experiment = config.experiment()
    report, samples = run_experiment(
        experiment, workers=args.workers, collect_samples=args.emit_samples
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "simulate", args.config, config)
    (out / "report.json").write_bytes(report_json_bytes(report))

    normality_rows = []
    coverage_rows = []
    negligibility_rows = []
    for entry in report["grid"]:
        for stat, res in entry["normality"].items():
            normality_rows.append(
                [
                    entry["n"],
                    stat,
                    float(res["ks_distance"]),
                    float(res["ks_threshold"]),
                    float(res["mean"]),
                    float(res["variance"]),
                    res["pass"],
                ]
            )
        for stat, res in entry.get("coverage", {}).items():
            coverage_rows.append(
                [
                    entry["n"],
                    stat,
                    float(res["nominal"]),
                    float(res["empirical"]),
                    float(res["stderr"]),
                    res["pass"],
                ]
            )
        if "negligibility" in entry:
            neg = entry["negligibility"]
            negligibility_rows.append(
                [
                    entry["n"],
                    float(neg["median_delta_sq"]),
                    float(neg["median_delta_eps"]),
                    float(neg["median_sxx_gap"]),
                ]
            )
    _write_csv(
        out / "normality.csv",
        ["n", "statistic", "ks_distance", "ks_threshold", "mean", "variance", "pass"],
        normality_rows,
    )
    if coverage_rows:
        _write_csv(
            out / "coverage.csv",
            ["n", "statistic", "nominal", "empirical", "stderr", "pass"],
            coverage_rows,
        )
    if negligibility_rows:
        _write_csv(
            out / "negligibility.csv",
            ["n", "median_delta_sq", "median_delta_eps", "median_sxx_gap"],
            negligibility_rows,
        )
    if "counterexample" in report:
        _write_counterexample_csv(out, report["counterexample"])
    if samples is not None:
        samples_dir = out / "samples"
        samples_dir.mkdir(exist_ok=True)
        for stat, by_n in samples.items():
            for n, values in by_n.items():
                _write_csv(samples_dir / f"{stat}_n{n}.csv", ["z"], [[float(v)] for v in values])

    for test, ok in report["tests"].items():
        print(f"{test}: {'pass' if ok else 'FAIL'}")
    print(f"overall: {'pass' if report['pass'] else 'FAIL'}")
    return 0 if report["pass"] else 1


def _cmd_lindeberg(args, config: AppConfig) -> int:
    section = config.lindeberg
    reports = [
        lindeberg_sum(
            config.design,
            n,
            config.model,
            r,
            method=section.method,
            mc_budget=section.mc_budget,
            seed=config.seed,
        )
        for n in config.n_grid
        for r in section.r_grid
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "lindeberg", args.config, config)
    _write_json(out / "lindeberg.json", {"reports": [r.to_dict() for r in reports]})
    _write_csv(
        out / "lindeberg.csv",
        ["n", "r", "sum_value", "method", "stderr"],
        [[r.n, float(r.r), float(r.sum_value), r.method, r.stderr] for r in reports],
    )
    for r in reports:
        extra = f" stderr={r.stderr:.3g}" if r.stderr is not None else ""
        print(f"n={r.n} r={r.r}: sum={r.sum_value:.6g} ({r.method}{extra})")
    return 0


def _write_counterexample_csv(out: Path, entries: list[dict]) -> None:
    _write_csv(
        out / "counterexample.csv",
        [
            "n",
            "mean_beta_hat",
            "var_beta_hat",
            "attenuation_target",
            "ks_distance_z_beta",
            "normality_refuted",
            "pass",
        ],
        [
            [
                e["n"],
                float(e["mean_beta_hat"]),
                float(e["var_beta_hat"]),
                float(e["attenuation_target"]),
                float(e["ks_distance_z_beta"]),
                e["normality_refuted"],
                e["pass"],
            ]
            for e in entries
        ],
    )


def _cmd_counterexample(args, config: AppConfig) -> int:
    entries = counterexample_run(
        config.design,
        config.model,
        config.n_grid,
        config.replicates,
        config.seed,
        defaults=config.harness,
        workers=args.workers,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "counterexample", args.config, config)
    _write_json(out / "counterexample.json", {"entries": entries})
    _write_counterexample_csv(out, entries)
    for e in entries:
        print(
            f"n={e['n']}: mean beta_hat={e['mean_beta_hat']:.4f} "
            f"(target {e['attenuation_target']:.4f}), ks={e['ks_distance_z_beta']:.3f}, "
            f"{'pass' if e['pass'] else 'FAIL'}"
        )
    ok = all(e["pass"] for e in entries)
    print(f"overall: {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "diagnose": _cmd_diagnose,
    "simulate": _cmd_simulate,
    "lindeberg": _cmd_lindeberg,
    "counterexample": _cmd_counterexample,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evclt",
        description="Errors-in-variables LS estimator diagnostics and Monte Carlo verification",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("diagnose", "evaluate asymptotic conditions along the n grid"),
        ("simulate", "run the Monte Carlo normality/coverage/negligibility tests"),
        ("lindeberg", "evaluate the truncated-second-moment sums"),
        ("counterexample", "run the random-regressor attenuation check"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the YAML config file")
        cmd.add_argument("--out", default="evclt-out", help="output directory")
        cmd.add_argument("--workers", type=int, default=1, help="replicate worker threads")
        if name == "simulate":
            cmd.add_argument(
                "--emit-samples",
                action="store_true",
                help="write per-grid-point standardized samples as CSV",
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        seed_env = os.environ.get("EVCLT_SEED")
        if seed_env is not None:
            try:
                config = config.with_seed(int(seed_env))
            except ValueError:
                raise ConfigError(f"EVCLT_SEED must be an integer, got {seed_env!r}") from None
        return _COMMANDS[args.command](args, config)
    except EvcltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
