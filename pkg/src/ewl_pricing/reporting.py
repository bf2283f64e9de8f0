"""CSV output, run manifest and chart rendering from CSV files."""

from __future__ import annotations

import csv
import json
import subprocess
from pathlib import Path
from typing import Any

from .charts import Panel, Series, render_svg
from .experiments import SweepResult
from .market_simulator import EpisodeResult

MANIFEST = "manifest.json"


class RenderError(RuntimeError):
    pass


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=10,
            cwd=Path(__file__).resolve().parent,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def result_tables(result: SweepResult | EpisodeResult) -> dict[str, tuple[list[str], list[list]]]:
    if isinstance(result, EpisodeResult):
        return {"episode": result.trace_table()}
    return result.tables


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_results(
    result: SweepResult | EpisodeResult,
    out_dir: str | Path,
    config: dict[str, Any] | None = None,
    wall_time: float | None = None,
) -> list[Path]:
    """Write one CSV per result table plus ``manifest.json``; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    tables = result_tables(result)
    for name, (header, rows) in tables.items():
        path = out / f"{name}.csv"
        write_csv(path, header, rows)
        written.append(path)
    manifest = {
        "config": config or {},
        "seed": (config or {}).get("seed"),
        "git_describe": git_describe(),
        "wall_time_s": wall_time,
        "outputs": [p.name for p in written],
    }
    mpath = out / MANIFEST
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(mpath)
    return written


def read_manifest(directory: str | Path) -> dict[str, Any]:
    path = Path(directory) / MANIFEST
    if not path.is_file():
        raise RenderError(f"{path}: manifest not found")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise RenderError(f"{path}: {exc}") from exc


def _read_table(path: Path, required: list[str]) -> list[dict[str, str]]:
    if not path.is_file():
        raise RenderError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise RenderError(f"{path}: missing columns {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise RenderError(f"{path}: no data rows")
    return rows


def _floats(path: Path, rows, col: str) -> list[float]:
    try:
        return [float(r[col]) for r in rows]
    except (TypeError, ValueError) as exc:
        raise RenderError(f"{path}: bad value in column {col!r}: {exc}") from None


def _render_eta(path: Path) -> str:
    rows = _read_table(path, ["eta", "norm_rev", "norm_rev_ci99", "mse", "mse_ci99"])
    eta = _floats(path, rows, "eta")
    rev, rev_ci = _floats(path, rows, "norm_rev"), _floats(path, rows, "norm_rev_ci99")
    mse, mse_ci = _floats(path, rows, "mse"), _floats(path, rows, "mse_ci99")
    panels = [
        Panel("Normalized revenue", "eta", "normalized revenue",
              [Series("unified", eta, rev, rev_ci)]),
        Panel("Estimation error", "eta", "MSE of phi",
              [Series("unified", eta, mse, mse_ci)]),
    ]
    if 0.0 in eta:
        k = eta.index(0.0)
        xs = [min(eta), max(eta)]
        panels[0].series.append(Series("greedy (eta=0)", xs, [rev[k]] * 2, dashed=True))
        panels[1].series.append(Series("greedy (eta=0)", xs, [mse[k]] * 2, dashed=True))
    return render_svg("Trade-off sweep (99% CI bands)", panels)


def _render_grid(path: Path) -> str:
    rows = _read_table(path, ["frat5", "method", "norm_rev", "norm_rev_ci99", "mse", "mse_ci99"])
    methods: dict[str, list[dict[str, str]]] = {}
    for r in rows:
        methods.setdefault(r["method"], []).append(r)
    rev_panel = Panel("Normalized revenue", "true frat5", "normalized revenue")
    mse_panel = Panel("Estimation error", "true frat5", "MSE of phi")
    for m, rs in methods.items():
        x = _floats(path, rs, "frat5")
        rev_panel.series.append(Series(m, x, _floats(path, rs, "norm_rev"), _floats(path, rs, "norm_rev_ci99")))
        mse_panel.series.append(Series(m, x, _floats(path, rs, "mse"), _floats(path, rs, "mse_ci99")))
    return render_svg("Greedy vs unified across true frat5 (99% CI bands)", [rev_panel, mse_panel])


def _render_detailed(path: Path) -> str:
    rows = _read_table(path, ["method", "fare_or_frat5bin", "share"])
    panels = []
    for prefix, title, xlabel in (("fare:", "Offered fares", "fare"),
                                  ("frat5:", "Estimated frat5", "frat5 bin (lower edge)")):
        cats: list[str] = []
        groups: dict[str, list[float]] = {}
        for r in rows:
            key = r["fare_or_frat5bin"]
            if not key.startswith(prefix):
                continue
            label = key[len(prefix):]
            if label not in cats:
                cats.append(label)
            try:
                groups.setdefault(r["method"], []).append(float(r["share"]))
            except ValueError as exc:
                raise RenderError(f"{path}: bad share value: {exc}") from None
        if cats:
            panels.append(Panel(title, xlabel, "share", categories=cats, groups=groups))
    if not panels:
        raise RenderError(f"{path}: no recognised histogram rows")
    return render_svg(f"Detailed view {path.stem}", panels)


def _render_episode(path: Path) -> str:
    rows = _read_table(path, ["step", "fare_index", "revenue", "expected_revenue", "phi_hat"])
    first = [r for r in rows if r["fare_index"] == "0"]
    step = _floats(path, first, "step")
    panels = [
        Panel("Revenue per sell date", "step", "revenue",
              [Series("realised", step, _floats(path, first, "revenue")),
               Series("expected", step, _floats(path, first, "expected_revenue"))]),
        Panel("Estimated phi", "step", "phi_hat",
              [Series("phi_hat", step, _floats(path, first, "phi_hat"))]),
    ]
    return render_svg("Episode trace", panels)


def _renderer(name: str):
    if name == "eta_sweep.csv":
        return _render_eta
    if name == "frat5_grid.csv":
        return _render_grid
    if name.startswith("detailed_") and name.endswith(".csv"):
        return _render_detailed
    if name == "episode.csv":
        return _render_episode
    return None


def render_charts(directory: str | Path) -> list[Path]:
    """Render an SVG next to every CSV listed in the directory's manifest."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    outputs = [o for o in manifest.get("outputs", []) if _renderer(o)]
    if not outputs:
        raise RenderError(f"{directory}: manifest lists no renderable CSV files")
    written = []
    for name in outputs:
        path = directory / name
        svg = _renderer(name)(path)
        target = path.with_suffix(".svg")
        target.write_text(svg)
        written.append(target)
    return written

