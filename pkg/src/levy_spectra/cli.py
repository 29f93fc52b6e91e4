"""Command-line campaign driver.

Subcommands map one-to-one onto the engine entry points; this layer only
parses config, loops over boxes, and writes artifacts.  Output files are
a pure function of the resolved config, so reruns (any worker count)
produce byte-identical bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from . import __version__
from .compound import block_sum_estimator, fit_report, fit_weights
from .counting import EnergyWindow
from .engine import (
    BlockScheme,
    EmpiricalPMF,
    ScalingTable,
    default_block_half_side,
    estimate_dos,
    estimate_ids,
    fit_line,
    minami_scan,
    pmf_csv_text,
    pmf_record,
    run_eta_blocks,
    run_xi,
    wegner_scan,
    wilson_interval,
)
from .lattice import LatticeBox, ModelSpec, model_from_config

SEED_ENV_VAR = "LEVY_SPECTRA_SEED"


class ConfigError(ValueError):
    """Invalid or missing configuration; message names the field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NoArtifacts(RuntimeError):
    """Report requested on a directory without campaign outputs."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class CampaignConfig:
    model: ModelSpec
    dim: int
    boxes: tuple[int, ...]
    center: float
    interval: tuple[float, float] | None
    interval_lengths: tuple[float, ...] | None
    realizations: int
    seed: int
    workers: int
    out_dir: str
    formats: str
    grid: tuple[float, float, int] | None = None
    bandwidth: float | None = None
    preset: str | None = None

    def boxes_checked(self) -> list[LatticeBox]:
        out = []
        for half_side in self.boxes:
            box = LatticeBox(self.dim, half_side)
            self.model.validate_box(box)
            out.append(box)
        return out

    def window_for(self, box: LatticeBox) -> EnergyWindow:
        if self.interval is None:
            raise ConfigError("window.interval", "required for this command")
        return EnergyWindow.for_box(self.center, self.interval, box)

    def hash_payload(self) -> dict:
        # everything that determines the numbers; nothing that only
        # affects execution (workers) or placement (outputs)
        payload = {
            "model": self.model.config_dict(),
            "dim": self.dim,
            "boxes": list(self.boxes),
            "window": {"center": self.center},
            "realizations": self.realizations,
            "seed": self.seed,
        }
        if self.interval is not None:
            payload["window"]["interval"] = list(self.interval)
        if self.interval_lengths is not None:
            payload["window"]["interval_lengths"] = list(self.interval_lengths)
        if self.grid is not None:
            payload["window"]["grid"] = list(self.grid)
        if self.bandwidth is not None:
            payload["window"]["bandwidth"] = self.bandwidth
        return payload


PRESETS: dict[str, dict] = {
    # zero-hopping rank-2 diagonal model: counts are always even and the
    # even half follows a Poisson law with rate = interval length
    "example1": {
        "model": {
            "variant": "diagonal", "rank": 2, "hopping": 0.0, "dim": 1,
            "disorder": {"kind": "uniform", "a": 0.0, "b": 1.0},
        },
        "window": {"center": 0.5, "interval": [-0.5, 0.5]},
        "run": {"boxes": [500], "realizations": 20000, "seed": 20240801},
    },
    # internal C^3 fibre: every count is exactly three times the scalar
    # model's count at equal seeds
    "example2": {
        "model": {
            "variant": "matrix_valued", "rank": 3, "hopping": 1.0, "dim": 1,
            "disorder": {"kind": "uniform", "a": 0.0, "b": 6.0},
        },
        "window": {"center": 3.0, "interval": [-0.5, 0.5]},
        "run": {"boxes": [250], "realizations": 20000, "seed": 20240802},
    },
    # scalar baseline whose local statistics approach plain Poisson
    "rank1-poisson": {
        "model": {
            "variant": "rank_one_site", "rank": 1, "hopping": 1.0, "dim": 1,
            "disorder": {"kind": "uniform", "a": 0.0, "b": 5.0},
        },
        "window": {"center": 2.5, "interval": [-0.5, 0.5]},
        "run": {"boxes": [250, 1000], "realizations": 20000, "seed": 20240803},
    },
    # paired-site couplings in one dimension
    "dimer-1d": {
        "model": {
            "variant": "dimer", "rank": 2, "hopping": 1.0, "dim": 1,
            "disorder": {"kind": "uniform", "a": 0.0, "b": 4.0},
        },
        "window": {"center": 2.0, "interval": [-0.5, 0.5]},
        "run": {"boxes": [500], "realizations": 20000, "seed": 20240804},
    },
    # 3x3 tile couplings on a two-dimensional box
    "polymer-2d": {
        "model": {
            "variant": "polymer_block", "rank": 9, "block_side": 3,
            "hopping": 1.0, "dim": 2,
            "disorder": {"kind": "uniform", "a": 0.0, "b": 8.0},
        },
        "window": {"center": 4.0, "interval": [-0.5, 0.5]},
        "run": {"boxes": [13], "realizations": 2000, "seed": 20240805},
    },
    # weak-density variants for excess-probability scaling: the density
    # at the window center is 0.1, keeping all scanned windows in the
    # small-rate regime where the quadratic law is actually visible
    "minami-diag2": {
        "model": {
            "variant": "diagonal", "rank": 2, "hopping": 0.0, "dim": 1,
            "disorder": {"kind": "uniform", "a": 0.0, "b": 10.0},
        },
        "window": {"center": 5.0, "interval_lengths": [0.5, 1.0, 2.0, 4.0]},
        "run": {"boxes": [500], "realizations": 50000, "seed": 20240806},
    },
    "minami-rank1": {
        "model": {
            "variant": "rank_one_site", "rank": 1, "hopping": 1.0, "dim": 1,
            "disorder": {"kind": "uniform", "a": 0.0, "b": 10.0},
        },
        "window": {"center": 5.0, "interval_lengths": [0.5, 1.0, 2.0, 4.0]},
        "run": {"boxes": [500], "realizations": 50000, "seed": 20240807},
    },
    # strong-disorder scalar model at three box sizes whose sides admit
    # exact block tilings near the default block exponent; disorder is
    # wide enough that single-site localization holds inside the
    # smallest blocks, which is what makes the block approximation
    # converge visibly at these sizes
    "blocks-rank1": {
        "model": {
            "variant": "rank_one_site", "rank": 1, "hopping": 1.0, "dim": 1,
            "disorder": {"kind": "uniform", "a": 0.0, "b": 25.0},
        },
        "window": {"center": 12.5, "interval": [-2.0, 2.0]},
        "run": {"boxes": [49, 220, 840], "realizations": 300000, "seed": 20240808},
    },
}


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}", "missing required key")
    return table[key]


def _table(raw: dict, key: str) -> dict:
    value = raw.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(key, "must be a table")
    return value


def config_from_dict(raw: dict, preset: str | None = None) -> CampaignConfig:
    model_tbl = _table(raw, "model")
    window_tbl = _table(raw, "window")
    run_tbl = _table(raw, "run")
    out_tbl = _table(raw, "outputs")

    disorder = _require(model_tbl, "disorder", "model")
    if not isinstance(disorder, dict):
        raise ConfigError("model.disorder", "must be a table")
    kind = _require(disorder, "kind", "model.disorder")
    if kind == "uniform":
        _require(disorder, "a", "model.disorder")
        _require(disorder, "b", "model.disorder")
    elif kind == "piecewise_linear":
        _require(disorder, "knots", "model.disorder")
    else:
        raise ConfigError("model.disorder.kind", f"unknown law {kind!r}")

    model_cfg = {
        "variant": _require(model_tbl, "variant", "model"),
        "rank": model_tbl.get("rank", 1),
        "hopping": model_tbl.get("hopping", 0.0),
        "disorder": disorder,
    }
    if "block_side" in model_tbl:
        model_cfg["block_side"] = model_tbl["block_side"]
    try:
        model = model_from_config(model_cfg)
    except (ValueError, KeyError) as exc:
        raise ConfigError("model", str(exc)) from exc

    dim = int(model_tbl.get("dim", 1))

    interval = window_tbl.get("interval")
    if interval is not None:
        if len(interval) != 2 or not interval[0] <= interval[1]:
            raise ConfigError("window.interval", f"not an ordered pair: {interval}")
        interval = (float(interval[0]), float(interval[1]))
    lengths = window_tbl.get("interval_lengths")
    if lengths is not None:
        if any(l < 0 for l in lengths):
            raise ConfigError("window.interval_lengths", "lengths must be >= 0")
        lengths = tuple(float(l) for l in lengths)

    grid = None
    if "grid" in window_tbl:
        g = window_tbl["grid"]
        if len(g) != 3 or not g[0] < g[1] or int(g[2]) < 2:
            raise ConfigError("window.grid", f"need [min, max, points>=2]: {g}")
        grid = (float(g[0]), float(g[1]), int(g[2]))
    bandwidth = window_tbl.get("bandwidth")
    if bandwidth is not None:
        bandwidth = float(bandwidth)
        if bandwidth <= 0:
            raise ConfigError("window.bandwidth", "must be positive")

    boxes = tuple(int(b) for b in _require(run_tbl, "boxes", "run"))
    if not boxes or any(b < 0 for b in boxes):
        raise ConfigError("run.boxes", f"need nonnegative half-sides: {boxes}")
    realizations = int(run_tbl.get("realizations", 10000))
    if realizations < 1:
        raise ConfigError("run.realizations", "must be positive")
    seed = int(run_tbl.get("seed", 0))
    if not 0 <= seed < 2**64:
        raise ConfigError("run.seed", f"must be in [0, 2^64): {seed}")
    workers = int(run_tbl.get("workers", 0)) or (os.cpu_count() or 1)
    if workers < 1:
        raise ConfigError("run.workers", "must be >= 1 (or 0 for all cores)")

    cfg = CampaignConfig(
        model=model,
        dim=dim,
        boxes=boxes,
        center=float(_require(window_tbl, "center", "window")),
        interval=interval,
        interval_lengths=lengths,
        realizations=realizations,
        seed=seed,
        workers=workers,
        out_dir=str(out_tbl.get("directory", "campaign-out")),
        formats=str(out_tbl.get("formats", "both")),
        grid=grid,
        bandwidth=bandwidth,
        preset=preset,
    )
    if cfg.formats not in ("csv", "json", "both"):
        raise ConfigError("outputs.formats", f"must be csv/json/both: {cfg.formats}")
    # geometry validation up front: invalid configs must fail before work
    try:
        cfg.boxes_checked()
    except ValueError as exc:
        raise ConfigError("run.boxes", str(exc)) from exc
    return cfg


def load_config(args: argparse.Namespace) -> CampaignConfig:
    if args.preset is not None:
        if args.preset not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ConfigError("preset", f"unknown preset {args.preset!r}; known: {known}")
        raw = json.loads(json.dumps(PRESETS[args.preset]))  # deep copy
        cfg = config_from_dict(raw, preset=args.preset)
        if cfg.preset is not None and "directory" not in raw.get("outputs", {}):
            cfg = replace(cfg, out_dir=f"campaign-{args.preset}")
    elif args.config is not None:
        try:
            with open(args.config, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError("config", f"no such file: {args.config}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"TOML parse error: {exc}") from exc
        cfg = config_from_dict(raw)
    else:
        raise ConfigError("config", "one of --config or --preset is required")

    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg = replace(cfg, seed=int(env_seed))
        except ValueError as exc:
            raise ConfigError("run.seed", f"bad {SEED_ENV_VAR}: {env_seed!r}") from exc
    # explicit flags outrank both the file and the environment
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.realizations is not None:
        if args.realizations < 1:
            raise ConfigError("run.realizations", "must be positive")
        cfg = replace(cfg, realizations=args.realizations)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("run.workers", "must be >= 1")
        cfg = replace(cfg, workers=args.workers)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if args.format is not None:
        cfg = replace(cfg, formats=args.format)
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("run.seed", f"must be in [0, 2^64): {cfg.seed}")
    return cfg


# ---------------------------------------------------------------------------
# artifact plumbing


def _fmt_len(x: float) -> str:
    return f"{x:g}"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_manifest(cfg: CampaignConfig, command: str) -> None:
    payload = cfg.hash_payload()
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    manifest = {
        "command": command,
        "config": payload,
        "config_hash": digest,
        "preset": cfg.preset,
        "seed": cfg.seed,
        "version": __version__,
    }
    _write(Path(cfg.out_dir) / "manifest.json", _json_text(manifest))


def _emit_pmf(cfg: CampaignConfig, stem: str, pmf: EmpiricalPMF, window: EnergyWindow) -> None:
    base = Path(cfg.out_dir) / stem
    if cfg.formats in ("csv", "both"):
        _write(base.with_suffix(".csv"), pmf_csv_text(pmf))
    if cfg.formats in ("json", "both"):
        _write(
            base.with_suffix(".json"),
            _json_text(pmf_record(pmf, cfg.model, window, cfg.seed)),
        )


def _emit_table(cfg: CampaignConfig, name: str, table: ScalingTable, extra: dict) -> None:
    base = Path(cfg.out_dir) / name
    if cfg.formats in ("csv", "both"):
        _write(base.with_suffix(".csv"), table.to_csv_text())
    if cfg.formats in ("json", "both"):
        record = table.to_record()
        record.update(extra)
        _write(base.with_suffix(".json"), _json_text(record))


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: CampaignConfig) -> int:
    if cfg.interval is None:
        raise ConfigError("window.interval", "required for simulate")
    length = cfg.interval[1] - cfg.interval[0]
    for box in cfg.boxes_checked():
        window = cfg.window_for(box)
        pmf = run_xi(
            cfg.model, box, window, cfg.realizations, cfg.seed, workers=cfg.workers
        )
        _emit_pmf(cfg, f"xi_{box.half_side}_{_fmt_len(length)}", pmf, window)
        print(
            f"xi L={box.half_side} |I|={_fmt_len(length)}: "
            f"mean={pmf.mean():.4f} dropped={pmf.dropped}"
        )
    _write_manifest(cfg, "simulate")
    return 0


def cmd_blocks(cfg: CampaignConfig) -> int:
    if cfg.interval is None:
        raise ConfigError("window.interval", "required for blocks")
    length = cfg.interval[1] - cfg.interval[0]
    for box in cfg.boxes_checked():
        window = cfg.window_for(box)
        scheme = BlockScheme.tile(box, default_block_half_side(box))
        run = run_eta_blocks(
            cfg.model, box, scheme, window, cfg.realizations, cfg.seed,
            workers=cfg.workers,
        )
        _emit_pmf(cfg, f"zeta_{box.half_side}_{_fmt_len(length)}", run.total, window)
        est = block_sum_estimator(run.per_block, cfg.model.rank)
        stem = Path(cfg.out_dir) / f"blockfit_{box.half_side}_{_fmt_len(length)}.json"
        _write(stem, _json_text({
            "block_half_side": scheme.block_half_side,
            "n_blocks": scheme.n_blocks,
            "weights": list(est.weights.weights),
            "tail_mass": est.tail_mass,
        }))
        print(
            f"zeta L={box.half_side} ell={scheme.block_half_side}: "
            f"mean={run.total.mean():.4f} tail={est.tail_mass:.2e}"
        )
    _write_manifest(cfg, "blocks")
    return 0


def _default_grid(cfg: CampaignConfig) -> tuple[float, float, int]:
    lo, hi = cfg.model.disorder.support()
    pad = 2.0 * cfg.dim * abs(cfg.model.hopping)
    return (lo - pad, hi + pad, 161)


def cmd_dos(cfg: CampaignConfig) -> int:
    gmin, gmax, points = cfg.grid if cfg.grid is not None else _default_grid(cfg)
    grid = [gmin + (gmax - gmin) * i / (points - 1) for i in range(points)]
    spacing = (gmax - gmin) / (points - 1)
    bandwidth = cfg.bandwidth if cfg.bandwidth is not None else 2.0 * spacing
    for box in cfg.boxes_checked():
        curve = estimate_ids(
            cfg.model, box, grid, cfg.realizations, cfg.seed, workers=cfg.workers
        )
        dos = estimate_dos(curve, bandwidth)
        ids_lines = ["energy,ids"] + [f"{e!r},{v!r}" for e, v in curve]
        dos_lines = ["energy,dos"] + [f"{e!r},{v!r}" for e, v in dos]
        base = Path(cfg.out_dir)
        if cfg.formats in ("csv", "both"):
            _write(base / f"ids_{box.half_side}.csv", "\n".join(ids_lines) + "\n")
            _write(base / f"dos_{box.half_side}.csv", "\n".join(dos_lines) + "\n")
        if cfg.formats in ("json", "both"):
            _write(base / f"dos_{box.half_side}.json", _json_text({
                "model": cfg.model.config_dict(),
                "seed": cfg.seed,
                "R": cfg.realizations,
                "bandwidth": bandwidth,
                "ids": [[e, v] for e, v in curve],
                "dos": [[e, v] for e, v in dos],
            }))
        mid = dos[len(dos) // 2][1] if dos else float("nan")
        print(f"dos L={box.half_side}: {len(curve)} grid points, midpoint density {mid:.4f}")
    _write_manifest(cfg, "dos")
    return 0


def _scan(cfg: CampaignConfig, kind: str) -> int:
    defaults = {"wegner": (0.25, 0.5, 1.0, 2.0), "minami": (0.5, 1.0, 2.0, 4.0)}
    lengths = cfg.interval_lengths or defaults[kind]
    boxes = cfg.boxes_checked()
    scan = wegner_scan if kind == "wegner" else minami_scan
    table = scan(
        cfg.model, boxes, lengths, cfg.center, cfg.realizations, cfg.seed,
        workers=cfg.workers,
    )
    for box in boxes:
        rows = [r for r in table.rows if r.half_side == box.half_side]
        sub = ScalingTable(table.statistic, tuple(rows), table.seed)
        extra: dict = {}
        xs = [r.interval_length for r in rows if r.interval_length > 0]
        ys = [r.value for r in rows if r.interval_length > 0]
        if len(xs) >= 2 and kind == "wegner":
            fit = fit_line(xs, ys)
            extra["linear_fit"] = {
                "slope": fit.slope, "intercept": fit.intercept,
                "r_squared": fit.r_squared,
            }
            print(
                f"{kind} L={box.half_side}: slope={fit.slope:.4f} "
                f"r2={fit.r_squared:.5f}"
            )
        elif len(xs) >= 2 and all(y > 0 for y in ys):
            fit = fit_line([math.log(x) for x in xs], [math.log(y) for y in ys])
            extra["loglog_fit"] = {"slope": fit.slope, "r_squared": fit.r_squared}
            extra["wilson_intervals"] = [
                list(wilson_interval(round(r.value * r.realizations), r.realizations))
                for r in rows
            ]
            print(f"{kind} L={box.half_side}: log-log slope={fit.slope:.4f}")
        _emit_table(cfg, f"{kind}_{box.half_side}", sub, extra)
    _write_manifest(cfg, kind)
    return 0


def cmd_wegner(cfg: CampaignConfig) -> int:
    return _scan(cfg, "wegner")


def cmd_minami(cfg: CampaignConfig) -> int:
    return _scan(cfg, "minami")


def _load_pmf_records(out_dir: str) -> list[tuple[str, dict]]:
    found = []
    for path in sorted(Path(out_dir).glob("xi_*.json")):
        with open(path) as fh:
            found.append((path.stem, json.load(fh)))
    return found


def cmd_fit(cfg: CampaignConfig) -> int:
    if cfg.formats == "csv":
        raise ConfigError("outputs.formats", "fit consumes json histograms")
    records = _load_pmf_records(cfg.out_dir)
    if not records:
        cmd_simulate(cfg)
        records = _load_pmf_records(cfg.out_dir)
    for stem, record in records:
        counts = {int(j): c for j, c in record["pmf"].items()}
        pmf = EmpiricalPMF(counts, record["R"], record.get("dropped", 0))
        weights = fit_weights(pmf, int(record["model"]["rank"]))
        report = fit_report(pmf, weights)
        _write(Path(cfg.out_dir) / f"fit_{stem[3:]}.json", _json_text(report))
        print(
            f"fit {stem}: weights={[round(w, 4) for w in weights.weights]} "
            f"cf-distance={report['char_fn_distance']:.4f}"
        )
    _write_manifest(cfg, "fit")
    return 0


def cmd_report(cfg: CampaignConfig) -> int:
    return report_directory(cfg.out_dir)


def report_directory(out_dir: str) -> int:
    out = Path(out_dir)
    sections: list[str] = []

    for stem, record in _load_pmf_records(out_dir):
        counts = {int(j): c for j, c in record["pmf"].items()}
        pmf = EmpiricalPMF(counts, record["R"], record.get("dropped", 0))
        mean, var = pmf.mean(), pmf.variance()
        index = var / mean if mean > 0 else float("nan")
        sections.append(
            f"## {stem}\n\n"
            f"- realizations: {pmf.realizations} (dropped {pmf.dropped})\n"
            f"- mean: {mean:.5f}\n"
            f"- variance: {var:.5f}\n"
            f"- dispersion index: {index:.4f}\n"
        )

    for path in sorted(out.glob("wegner_*.json")) + sorted(out.glob("minami_*.json")):
        with open(path) as fh:
            rec = json.load(fh)
        lines = [f"## {path.stem}", ""]
        for row in rec["rows"]:
            lines.append(
                f"- |I|={row['interval_length']:g}: value={row['value']:.6g} "
                f"(stderr {row['std_error']:.2g})"
            )
        if "linear_fit" in rec:
            f = rec["linear_fit"]
            ok = f["r_squared"] >= 0.99
            lines.append(
                f"- linear fit: slope={f['slope']:.4f}, R2={f['r_squared']:.5f} "
                f"[{'PASS' if ok else 'FAIL'}: R2 >= 0.99]"
            )
        if "loglog_fit" in rec:
            f = rec["loglog_fit"]
            ok = abs(f["slope"] - 2.0) <= 0.3
            lines.append(
                f"- log-log fit: slope={f['slope']:.4f} "
                f"[{'PASS' if ok else 'FAIL'}: slope = 2 +/- 0.3]"
            )
        sections.append("\n".join(lines) + "\n")

    for path in sorted(out.glob("fit_*.json")) + sorted(out.glob("blockfit_*.json")):
        with open(path) as fh:
            rec = json.load(fh)
        lines = [f"## {path.stem}", "", f"- weights: {rec['weights']}"]
        if rec.get("char_fn_distance") is not None:
            d = rec["char_fn_distance"]
            lines.append(
                f"- characteristic-function distance: {d:.4f} "
                f"[{'PASS' if d <= 0.05 else 'FAIL'}: <= 0.05]"
            )
        if "tail_mass" in rec:
            lines.append(f"- block tail mass: {rec['tail_mass']:.3e}")
        sections.append("\n".join(lines) + "\n")

    if not sections:
        raise NoArtifacts(f"no campaign artifacts in {out_dir}")
    text = "# Campaign report\n\n" + "\n".join(sections)
    _write(out / "report.md", text)
    print(text)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "blocks": cmd_blocks,
    "dos": cmd_dos,
    "wegner": cmd_wegner,
    "minami": cmd_minami,
    "fit": cmd_fit,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-spectra",
        description="Eigenvalue-count statistics of random lattice operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "empirical law of the window count per box"),
        ("blocks", "block-restricted counts, their sum, and the block-sum weights"),
        ("dos", "integrated counting function and its density"),
        ("wegner", "mean count vs window length (linear scaling)"),
        ("minami", "excess-count probability vs window length (quadratic scaling)"),
        ("fit", "compound Poisson weights for simulated histograms"),
        ("report", "summarize all artifacts in the output directory"),
    ]:
        p = sub.add_parser(name, help=help_text)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", help="TOML campaign config")
        src.add_argument("--preset", help=f"named preset ({', '.join(sorted(PRESETS))})")
        p.add_argument("--out", help="output directory (default from config)")
        p.add_argument("--seed", type=int, help="campaign seed override")
        p.add_argument("--realizations", type=int, help="realization count override")
        p.add_argument("--workers", type=int, help="worker thread count")
        p.add_argument("--format", choices=["csv", "json", "both"], help="artifact formats")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # report needs only a directory to read, not a full campaign config
        if args.command == "report" and args.config is None and args.preset is None:
            if args.out is None:
                raise ConfigError(
                    "out", "--out (or a config naming outputs.directory) is required"
                )
            return report_directory(args.out)
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NoArtifacts as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
