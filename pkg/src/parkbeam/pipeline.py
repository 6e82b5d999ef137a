"""Pipeline configuration and per-stage orchestration.

Each stage reads the prior stage's CSV artifacts from the output
directory, writes its own, and drops a manifest naming the config hash
that produced them. Stages are idempotent and byte-stable across reruns.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from . import __version__, coverage, ingest, metrics, stats, tags, traffic
from .cluster import build_features, select_k, spectral_cluster
from .coverage import SelectionThresholds

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

INPUT_KEYS = (
    "sites",
    "zones",
    "traffic",
    "catalog",
    "calendar",
    "eligibility",
    "socio",
    "tags",
    "ground_truth",
)


class PipelineError(Exception):
    """Validation-level failure; maps to exit code 2."""


@dataclass
class PipelineConfig:
    base_dir: Path
    inputs: dict[str, Path | None]
    stopwords: list[Path]
    output_dir: Path
    origin: tuple[float, float] | None
    bbox: tuple[float, float, float, float] | None
    thresholds: SelectionThresholds
    min_users: int = 10
    k: int | None = None
    k_range: tuple[int, int] = (2, 8)
    seed: int = 0
    threads: int = 1
    irrelevant_tags: list[str] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_toml(cls, path, overrides: dict | None = None) -> "PipelineConfig":
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError:
            raise PipelineError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise PipelineError(f"invalid TOML in {path}: {exc}")
        return cls.from_dict(doc, path.parent, overrides)

    @classmethod
    def from_dict(cls, doc: dict, base_dir, overrides: dict | None = None) -> "PipelineConfig":
        base_dir = Path(base_dir)
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        paths_sec = dict(doc.get("paths", {}))
        study = dict(doc.get("study", {}))
        selection = dict(doc.get("selection", {}))
        traffic_sec = dict(doc.get("traffic", {}))
        cluster_sec = dict(doc.get("cluster", {}))
        tags_sec = dict(doc.get("tags", {}))
        run_sec = dict(doc.get("run", {}))

        inputs: dict[str, Path | None] = {}
        for key in INPUT_KEYS:
            value = paths_sec.get(key)
            inputs[key] = (base_dir / value) if value else None
        stopwords = [base_dir / p for p in paths_sec.get("stopwords", [])]
        output_dir = base_dir / overrides.get("output_dir", paths_sec.get("output_dir", "out"))

        origin = None
        if "origin_lon" in study and "origin_lat" in study:
            origin = (float(study["origin_lon"]), float(study["origin_lat"]))
        bbox = tuple(float(v) for v in study["bbox"]) if "bbox" in study else None
        if bbox is not None and len(bbox) != 4:
            raise PipelineError("study.bbox must be [min_x, min_y, max_x, max_y]")

        try:
            thresholds = SelectionThresholds(
                alpha=float(overrides.get("alpha", selection.get("alpha", 0.1))),
                beta=float(overrides.get("beta", selection.get("beta", 0.8))),
                gamma=float(overrides.get("gamma", selection.get("gamma", 0.4))),
            )
        except ValueError as exc:
            raise PipelineError(str(exc))

        k_range = cluster_sec.get("k_range", [2, 8])
        if len(k_range) != 2 or k_range[0] < 2 or k_range[1] < k_range[0]:
            raise PipelineError("cluster.k_range must be [lo, hi] with 2 <= lo <= hi")

        cfg = cls(
            base_dir=base_dir,
            inputs=inputs,
            stopwords=stopwords,
            output_dir=output_dir,
            origin=origin,
            bbox=bbox,
            thresholds=thresholds,
            min_users=int(overrides.get("min_users", traffic_sec.get("min_users", 10))),
            k=overrides.get("k", cluster_sec.get("k")),
            k_range=(int(k_range[0]), int(k_range[1])),
            seed=int(overrides.get("seed", cluster_sec.get("seed", 0))),
            threads=int(overrides.get("threads", run_sec.get("threads", 1))),
            irrelevant_tags=[str(t) for t in tags_sec.get("irrelevant", [])],
        )
        cfg.raw = cfg._canonical(doc, overrides)
        return cfg

    def _canonical(self, doc: dict, overrides: dict) -> dict:
        # Hash only content-determining configuration: where artifacts land
        # and how many workers run must not change their provenance.
        doc = json.loads(json.dumps(doc))
        doc.get("paths", {}).pop("output_dir", None)
        doc.get("run", {}).pop("threads", None)
        kept = {k: str(v) for k, v in sorted(overrides.items()) if k not in ("output_dir", "threads")}
        return {"doc": doc, "overrides": kept}

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def header_line(self) -> str:
        return f"# parkbeam config_hash={self.config_hash()} seed={self.seed}"

    def require(self, *keys: str) -> dict[str, Path]:
        found = {}
        for key in keys:
            path = self.inputs.get(key)
            if path is None:
                raise PipelineError(f"config is missing paths.{key}")
            if not path.exists():
                raise PipelineError(f"input file does not exist: {path} (paths.{key})")
            found[key] = path
        return found

    def artifact(self, name: str) -> Path:
        return self.output_dir / name

    def require_artifact(self, name: str, produced_by: str) -> Path:
        path = self.artifact(name)
        if not path.exists():
            raise PipelineError(
                f"missing upstream artifact {name}; run 'parkbeam {produced_by}' first"
            )
        return path

    def stopword_paths(self) -> list[Path]:
        if self.stopwords:
            return self.stopwords
        pkg = resources.files("parkbeam") / "data"
        return [Path(str(pkg / "stopwords_en.txt")), Path(str(pkg / "stopwords_fr.txt"))]


def read_artifact(path) -> pd.DataFrame:
    text, _ = ingest._read_text_skip_comments(path)
    return pd.read_csv(io.StringIO(text), keep_default_na=False, float_precision="round_trip")


def write_manifest(cfg: PipelineConfig, command: str, inputs: Sequence[str], outputs: Sequence[str]):
    manifest = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "versions": {
            "parkbeam": __version__,
            "python": ".".join(map(str, sys.version_info[:3])),
            "numpy": np.__version__,
            "pandas": pd.__version__,
        },
        "inputs": sorted(Path(p).name for p in inputs),
        "outputs": sorted(Path(p).name for p in outputs),
    }
    path = cfg.artifact(f"manifest_{command}.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_geometry(cfg: PipelineConfig):
    paths = cfg.require("sites", "zones")
    origin = cfg.origin or ingest.infer_origin(paths["zones"])
    sites = ingest.load_sites(paths["sites"], origin)
    zones = ingest.load_zones(paths["zones"], origin)
    if cfg.bbox is not None:
        x0, y0, x1, y1 = cfg.bbox
    else:
        xs = [s.point.x for s in sites]
        ys = [s.point.y for s in sites]
        margin = 0.15 * max(max(xs) - min(xs), max(ys) - min(ys), 1.0)
        x0, y0, x1, y1 = min(xs) - margin, min(ys) - margin, max(xs) + margin, max(ys) + margin
    bbox_poly = ingest.SimplePolygon.from_points([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    return origin, sites, zones, bbox_poly


def cmd_select(cfg: PipelineConfig) -> list[coverage.CoverageReport]:
    """Stage 1: sector geometry, three-step selection, weight table."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _origin, sites, zones, bbox_poly = _load_geometry(cfg)
    polys = coverage.antenna_polygons(sites, bbox_poly, by_sector=True)
    reports = coverage.run_selection(
        {z.zone_id: z.polygon for z in zones}, polys, cfg.thresholds, threads=cfg.threads
    )
    header = cfg.header_line()
    coverage.write_coverage_report(cfg.artifact("coverage_report.csv"), reports, header)
    coverage.write_selection_weights(cfg.artifact("selection_weights.csv"), reports, header)
    write_manifest(
        cfg,
        "select",
        [cfg.inputs["sites"], cfg.inputs["zones"]],
        [cfg.artifact("coverage_report.csv"), cfg.artifact("selection_weights.csv")],
    )
    n_selected = sum(r.verdict == coverage.VERDICT_SELECTED for r in reports)
    log.info("select: %d/%d zones selected", n_selected, len(reports))
    return reports


def _load_traffic_filtered(cfg: PipelineConfig) -> tuple[pd.DataFrame, traffic.LocalCalendar]:
    paths = cfg.require("traffic", "calendar")
    calendar = ingest.load_calendar(paths["calendar"])
    table = ingest.load_traffic(paths["traffic"])
    eligibility = None
    if cfg.inputs.get("eligibility") and cfg.inputs["eligibility"].exists():
        eligibility = ingest.load_eligibility(cfg.inputs["eligibility"])
    frame = ingest.apply_eligibility(table, eligibility, cfg.min_users, calendar)
    return frame, calendar


def cmd_convert(cfg: PipelineConfig) -> pd.DataFrame:
    """Stage 2: antenna series to zone series, daily volumes, ratios."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    weights_path = cfg.require_artifact("selection_weights.csv", "select")
    weights = read_artifact(weights_path)
    weights["antenna_id"] = weights["antenna_id"].astype(str)
    weights["zone_id"] = weights["zone_id"].astype(str)
    frame, calendar = _load_traffic_filtered(cfg)
    converted = traffic.convert_frame(frame, weights[["zone_id", "antenna_id", "i_pv"]])
    header = cfg.header_line()
    traffic.write_zone_traffic(cfg.artifact("zone_traffic.csv"), converted, header)

    daily_by_zone = {}
    ratios: dict[str, float] = {}
    totals: dict[str, float] = {}
    for zone_id, sub in converted.groupby("zone_id", sort=True):
        zone_id = str(zone_id)
        daily_by_zone[zone_id] = traffic.daily_volumes(sub, calendar)
        totals[zone_id] = float(sub["bytes"].sum())
        complete = traffic.complete_daily_volumes(sub, calendar)
        try:
            ratios[zone_id] = traffic.wd_we_ratio(complete)
        except ValueError:
            log.warning("zone %s: cannot compute wd/we ratio (missing day class)", zone_id)
    traffic.write_zone_daily(cfg.artifact("zone_daily.csv"), daily_by_zone, header)

    scores = traffic.traffic_score(totals) if len(totals) >= 2 else {z: 0.5 for z in totals}
    with open(cfg.artifact("zone_summary.csv"), "w", newline="") as fh:
        fh.write(header + "\n")
        fh.write("zone_id,total_bytes,wd_we_ratio,traffic_score\n")
        for zone_id in sorted(totals):
            ratio = format(ratios[zone_id], ".6g") if zone_id in ratios else ""
            fh.write(
                f"{zone_id},{format(totals[zone_id], '.6g')},{ratio},{format(scores[zone_id], '.6g')}\n"
            )
    write_manifest(
        cfg,
        "convert",
        [cfg.inputs["traffic"], cfg.inputs["calendar"], weights_path],
        [cfg.artifact(n) for n in ("zone_traffic.csv", "zone_daily.csv", "zone_summary.csv")],
    )
    return converted


def _network_matrices(cfg: PipelineConfig, frame: pd.DataFrame, calendar, catalog):
    """Full-network antenna matrices per window: the RCA reference frame."""
    apps = list(catalog)
    net = frame.rename(columns={"antenna_id": "unit_id"}).copy()
    net["bytes"] = net["downlink"].astype(np.float64) + net["uplink"].astype(np.float64)
    out = {}
    for window in metrics.WINDOWS:
        out[window] = metrics.windowed_matrix(
            net[["unit_id", "timestamp", "app_id", "bytes"]], window, calendar, apps=apps
        )
    return out


def cmd_rsca(cfg: PipelineConfig) -> list[dict]:
    """Stage 3: RCA/RSCA for zones, the rest-of-city aggregate, and city antennas."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    weights_path = cfg.require_artifact("selection_weights.csv", "select")
    zone_traffic_path = cfg.require_artifact("zone_traffic.csv", "convert")
    catalog = ingest.load_catalog(cfg.require("catalog")["catalog"])
    frame, calendar = _load_traffic_filtered(cfg)
    weights = read_artifact(weights_path)
    selected_antennas = set(weights["antenna_id"].astype(str))

    zone_frame = read_artifact(zone_traffic_path).rename(columns={"zone_id": "unit_id"})
    zone_frame["unit_id"] = zone_frame["unit_id"].astype(str)

    network = _network_matrices(cfg, frame, calendar, catalog)
    apps = list(catalog)
    app_cat = {a: e.category for a, e in catalog.items()}

    rows: list[dict] = []
    for window in metrics.WINDOWS:
        net_matrix = network[window]
        app_share = net_matrix.app_shares()
        cat_matrix_net = metrics.category_matrix(net_matrix, app_cat)
        cat_share = cat_matrix_net.app_shares()

        city_units = [u for u in net_matrix.units if u not in selected_antennas]
        city_idx = [net_matrix.units.index(u) for u in city_units]
        city_row = net_matrix.volumes[city_idx].sum(axis=0)

        try:
            zone_matrix = metrics.windowed_matrix(zone_frame, window, calendar, apps=apps)
        except ValueError as exc:
            raise PipelineError(f"window {window!r}: {exc}")
        units = zone_matrix.units + ["city"] + [f"antenna:{u}" for u in city_units]
        volumes = np.vstack([zone_matrix.volumes, city_row, net_matrix.volumes[city_idx]])
        unit_matrix = metrics.UnitAppMatrix(units, apps, volumes)

        for scope, matrix, share in (
            ("app", unit_matrix, app_share),
            ("category", metrics.category_matrix(unit_matrix, app_cat), cat_share),
        ):
            result = metrics.rsca(matrix, app_share=share)
            n_floor = int((result.rca == 0).sum())
            if n_floor:
                log.info("%s/%s: %d zero-traffic cells mapped to RSCA -1", window, scope, n_floor)
            for i, unit in enumerate(result.units):
                for j, name in enumerate(result.apps):
                    rows.append(
                        {
                            "unit_id": unit,
                            "scope": scope,
                            "name": name,
                            "rca": float(result.rca[i, j]),
                            "rsca": float(result.rsca[i, j]),
                            "window": window,
                        }
                    )
    metrics.write_rsca(cfg.artifact("rsca.csv"), rows, cfg.header_line())
    write_manifest(
        cfg,
        "rsca",
        [cfg.inputs["traffic"], cfg.inputs["catalog"], weights_path, zone_traffic_path],
        [cfg.artifact("rsca.csv")],
    )
    return rows


def _zone_rsca_table(rsca_frame: pd.DataFrame, scope: str, window: str) -> dict[str, dict[str, float]]:
    sub = rsca_frame[
        (rsca_frame["scope"] == scope)
        & (rsca_frame["window"] == window)
        & (~rsca_frame["unit_id"].astype(str).str.startswith("antenna:"))
        & (rsca_frame["unit_id"] != "city")
    ]
    out: dict[str, dict[str, float]] = {}
    for unit, name, value in zip(sub["unit_id"].astype(str), sub["name"].astype(str), sub["rsca"]):
        out.setdefault(unit, {})[name] = float(value)
    return out


def _city_antenna_rsca(rsca_frame: pd.DataFrame, scope: str, window: str) -> dict[str, dict[str, float]]:
    sub = rsca_frame[
        (rsca_frame["scope"] == scope)
        & (rsca_frame["window"] == window)
        & (rsca_frame["unit_id"].astype(str).str.startswith("antenna:"))
    ]
    out: dict[str, dict[str, float]] = {}
    for unit, name, value in zip(sub["unit_id"].astype(str), sub["name"].astype(str), sub["rsca"]):
        out.setdefault(name, {})[unit] = float(value)
    return out


def cmd_cluster(cfg: PipelineConfig):
    """Stage 4: feature build, silhouette-driven k selection, labels."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    rsca_path = cfg.require_artifact("rsca.csv", "rsca")
    summary_path = cfg.require_artifact("zone_summary.csv", "convert")
    rsca_frame = read_artifact(rsca_path)
    summary = read_artifact(summary_path)

    zone_rsca = _zone_rsca_table(rsca_frame, "app", "all")
    apps = sorted({str(n) for n in rsca_frame[rsca_frame["scope"] == "app"]["name"]})
    ratios = {
        str(z): float(r)
        for z, r in zip(summary["zone_id"], summary["wd_we_ratio"])
        if str(r) != ""
    }
    features = build_features(zone_rsca, ratios, apps)

    header = cfg.header_line()
    if cfg.k is not None:
        best_k = int(cfg.k)
        table = []
    else:
        best_k, table = select_k(features, range(cfg.k_range[0], cfg.k_range[1] + 1), cfg.seed)
    result = spectral_cluster(features, best_k, cfg.seed)

    with open(cfg.artifact("clusters.csv"), "w", newline="") as fh:
        fh.write(header + "\n")
        fh.write("zone_id,label,k,silhouette\n")
        for zone_id, label in zip(features.zone_ids, result.labels):
            fh.write(f"{zone_id},{int(label)},{result.k},{format(result.silhouette, '.6g')}\n")
    with open(cfg.artifact("silhouette_by_k.csv"), "w", newline="") as fh:
        fh.write(header + "\n")
        fh.write("k,silhouette,inertia\n")
        for row in table:
            fh.write(
                f"{row['k']},{format(row['silhouette'], '.6g')},{format(row['inertia'], '.6g')}\n"
            )
    write_manifest(
        cfg,
        "cluster",
        [rsca_path, summary_path],
        [cfg.artifact("clusters.csv"), cfg.artifact("silhouette_by_k.csv")],
    )
    return result


def cmd_stats(cfg: PipelineConfig) -> list[dict]:
    """Stage 5: park-vs-city test battery and socioeconomic correlations."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    rsca_path = cfg.require_artifact("rsca.csv", "rsca")
    clusters_path = cfg.require_artifact("clusters.csv", "cluster")
    summary_path = cfg.require_artifact("zone_summary.csv", "convert")
    socio_path = cfg.require("socio")["socio"]

    rsca_frame = read_artifact(rsca_path)
    labels_frame = read_artifact(clusters_path)
    labels = {str(z): int(l) for z, l in zip(labels_frame["zone_id"], labels_frame["label"])}
    summary = read_artifact(summary_path)
    ratios = {
        str(z): float(r)
        for z, r in zip(summary["zone_id"], summary["wd_we_ratio"])
        if str(r) != ""
    }
    socio = ingest.load_socio(socio_path)
    if cfg.inputs.get("zones") and cfg.inputs["zones"].exists():
        origin = cfg.origin or ingest.infer_origin(cfg.inputs["zones"])
        zones = ingest.load_zones(cfg.inputs["zones"], origin)
        ingest.fill_distances(socio, {z.zone_id: z.polygon for z in zones})

    zone_cat = _zone_rsca_table(rsca_frame, "category", "all")
    city_cat = _city_antenna_rsca(rsca_frame, "category", "all")
    categories = sorted({c for row in zone_cat.values() for c in row})

    rows: list[dict] = []

    def add_test(scope: str, group: str, category: str, x: list[float], y: list[float]):
        if len(x) < 2 or len(y) < 2:
            log.warning("%s/%s/%s: too few observations for a t-test", scope, group, category)
            return
        report = stats.gated_ttest(x, y)
        rows.append(
            {
                "scope": scope,
                "group": group,
                "category": category,
                "n_x": len(x),
                "n_y": len(y),
                "levene_p": format(report.gate["levene_p"], ".6g"),
                "test": report.test_name,
                "statistic": format(report.statistic, ".6g"),
                "p": format(report.p_value, ".6g"),
                "stars": stats.significance_stars(report.p_value),
            }
        )

    zone_ids = sorted(zone_cat)
    for category in categories:
        park_sample = [zone_cat[z][category] for z in zone_ids if category in zone_cat[z]]
        city_sample = [v for _, v in sorted(city_cat.get(category, {}).items())]
        add_test("parks-vs-city", "all", category, park_sample, city_sample)

    by_label: dict[int, list[str]] = {}
    for z in zone_ids:
        if z in labels:
            by_label.setdefault(labels[z], []).append(z)
    for label in sorted(by_label):
        for category in categories:
            sample = [zone_cat[z][category] for z in by_label[label] if category in zone_cat[z]]
            city_sample = [v for _, v in sorted(city_cat.get(category, {}).items())]
            add_test("cluster-vs-city", f"cluster-{label}", category, sample, city_sample)

    indicators = {
        "median_income": lambda r: r.median_income,
        "gini": lambda r: r.gini,
        "dist_center": lambda r: r.dist_center,
    }

    def add_corr(group: str, category: str, pairs: list[tuple[float, float]]):
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        if len(pairs) < 3 or len(set(xs)) == 1 or len(set(ys)) == 1:
            log.warning("correlation %s/%s skipped: n=%d", group, category, len(pairs))
            return
        rho, p = stats.pearson(xs, ys)
        rows.append(
            {
                "scope": "correlation",
                "group": group,
                "category": category,
                "n_x": len(pairs),
                "n_y": len(pairs),
                "levene_p": "",
                "test": "pearson",
                "statistic": format(rho, ".6g"),
                "p": format(p, ".6g"),
                "stars": stats.significance_stars(p),
            }
        )

    for ind_name, getter in indicators.items():
        pairs = [
            (ratios[z], getter(socio[z]))
            for z in zone_ids
            if z in ratios and z in socio and getter(socio[z]) is not None
        ]
        add_corr(f"all:{ind_name}", "wd_we_ratio", pairs)
        for label in sorted(by_label):
            for category in categories:
                pairs = [
                    (zone_cat[z][category], getter(socio[z]))
                    for z in by_label[label]
                    if category in zone_cat[z] and z in socio and getter(socio[z]) is not None
                ]
                add_corr(f"cluster-{label}:{ind_name}", category, pairs)

    stats.write_stats_report(cfg.artifact("stats_report.csv"), rows, cfg.header_line())
    write_manifest(
        cfg,
        "stats",
        [rsca_path, clusters_path, summary_path, socio_path],
        [cfg.artifact("stats_report.csv")],
    )
    return rows


def cmd_tags(cfg: PipelineConfig):
    """Stage 6: tag cleaning, importance table, per-cluster profiles."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    clusters_path = cfg.require_artifact("clusters.csv", "cluster")
    tags_path = cfg.require("tags")["tags"]
    counts = ingest.load_tags(tags_path)
    labels_frame = read_artifact(clusters_path)
    labels = {str(z): int(l) for z, l in zip(labels_frame["zone_id"], labels_frame["label"])}

    table = tags.TagTable.from_counts(counts)
    unlabeled = [z for z in table.zones() if z not in labels]
    if unlabeled:
        log.warning("dropping %d unlabeled zones from tag analysis: %s", len(unlabeled), unlabeled[:5])
        table = tags.TagTable(
            {k: c for k, c in table.counts.items() if k[0] in labels}
        )
    stopwords = tags.load_stopwords(cfg.stopword_paths())
    cleaned = tags.clean_tags(table, stopwords, cfg.irrelevant_tags)
    header = cfg.header_line()
    tags.write_tag_importance(cfg.artifact("tag_importance.csv"), cleaned, header)
    profiles = tags.cluster_tag_profile(cleaned, labels)
    tags.write_cluster_tags(cfg.artifact("cluster_tags.csv"), profiles, header)
    write_manifest(
        cfg,
        "tags",
        [tags_path, clusters_path],
        [cfg.artifact("tag_importance.csv"), cfg.artifact("cluster_tags.csv")],
    )
    return profiles


def cmd_recovery(cfg: PipelineConfig):
    """Score pipeline output against planted ground truth when present."""
    from . import synth

    gt_path = cfg.inputs.get("ground_truth")
    if gt_path is None or not gt_path.exists():
        return None
    ground_truth = synth.load_ground_truth(gt_path)
    cov = read_artifact(cfg.require_artifact("coverage_report.csv", "select"))
    reports = [
        coverage.CoverageReport(zone_id=str(z), verdict=str(v))
        for z, v in zip(cov["zone_id"], cov["verdict"])
    ]
    labels_frame = read_artifact(cfg.require_artifact("clusters.csv", "cluster"))
    labels = {str(z): int(l) for z, l in zip(labels_frame["zone_id"], labels_frame["label"])}
    summary = read_artifact(cfg.require_artifact("zone_summary.csv", "convert"))
    ratios = {
        str(z): float(r)
        for z, r in zip(summary["zone_id"], summary["wd_we_ratio"])
        if str(r) != ""
    }
    report = synth.evaluate_recovery(reports, ground_truth, labels, ratios)
    payload = {
        "config_hash": cfg.config_hash(),
        "verdicts_exact": report.verdicts_exact,
        "verdict_confusion": {f"{p}->{r}": c for (p, r), c in sorted(report.verdict_confusion.items())},
        "ari": report.ari,
        "ratio_max_rel_err": report.ratio_max_rel_err,
        "ratio_mean_rel_err": report.ratio_mean_rel_err,
        "n_zones": report.n_zones,
    }
    with open(cfg.artifact("recovery.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def cmd_pipeline(cfg: PipelineConfig):
    """Run all stages in sequence (identical artifacts to running each)."""
    cmd_select(cfg)
    cmd_convert(cfg)
    cmd_rsca(cfg)
    cmd_cluster(cfg)
    if cfg.inputs.get("socio") and cfg.inputs["socio"].exists():
        cmd_stats(cfg)
    if cfg.inputs.get("tags") and cfg.inputs["tags"].exists():
        cmd_tags(cfg)
    return cmd_recovery(cfg)
