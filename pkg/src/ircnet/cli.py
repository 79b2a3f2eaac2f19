"""Batch pipeline commands: ingest, backbone, estimate, gof, export.

Every command takes a key=value config file; selected flags override file
values. Outputs embed the config hash and master seed so reruns with the
same configuration are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import backbone as bb
from . import fileio, gof, ingest
from .estimate import (EstimationError, EstimationResult,
                       estimate as run_estimation, p_value, stars)
from .config import ConfigError, RunConfig
from .effects import EffectError, ModelSpec
from .panel import BinaryNetSeries, CovariateSet, PanelError
from .simulate import SimulationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

VALIDATION_ERRORS = (ConfigError, PanelError, EffectError, ingest.IngestError,
                     bb.BackboneError, fileio.FileFormatError, gof.GofError,
                     FileNotFoundError)
RUNTIME_ERRORS = (EstimationError, SimulationError, np.linalg.LinAlgError)


def _slug(domain: str) -> str:
    return "".join(c for c in domain if c.isalnum()) or "all"


def _outdir(cfg):
    out = cfg.get("outdir", "out")
    os.makedirs(out, exist_ok=True)
    return out


def _write_table(path, header, rows, meta):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for k, v in sorted(meta.items()):
            fh.write(f"# {k}={v}\n")
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)


def _load_covariates(cfg, actors, years) -> CovariateSet:
    covs = CovariateSet()
    for name, path, transform in cfg.covariate_files("actor_covariates"):
        covs.add(fileio.read_actor_covariate(path, name, actors, years,
                                             transform=transform))
    for name, path, transform in cfg.covariate_files("dyad_covariates"):
        covs.add(fileio.read_dyad_matrix(path, name, actors, transform=transform))
    return covs


def cmd_ingest(cfg: RunConfig) -> int:
    actors = fileio.read_actor_set(cfg.get("actors", required=True))
    records = fileio.read_records(cfg.get("records", required=True))
    dictionary = fileio.read_dictionary(cfg.get("dictionary", required=True))
    years = cfg.years or sorted({r.year for r in records})
    domains = [d.strip() for d in cfg.get("domain", "unclassified").split(",")]
    out = _outdir(cfg)
    meta = cfg.meta()
    for domain in domains:
        series = ingest.aggregate_series(records, dictionary, actors, years,
                                         domain)
        slug = _slug(domain)
        fileio.write_weighted_edgelist(series, os.path.join(out, f"weighted_{slug}.csv"),
                                       meta=meta)
        rows = [(r.year, r.nodes, r.edges, f"{r.density:.3f}", r.isolates)
                for r in ingest.describe(series)]
        _write_table(os.path.join(out, f"describe_{slug}.csv"),
                     ["year", "nodes", "edges", "density", "isolates"], rows, meta)
        print(f"{domain}: {sum(r[2] for r in rows)} weighted edges over "
              f"{len(years)} years -> weighted_{slug}.csv")
    return EXIT_OK


def cmd_backbone(cfg: RunConfig) -> int:
    actors = fileio.read_actor_set(cfg.get("actors", required=True))
    alpha = cfg.get_float("alpha", 0.05)
    out = _outdir(cfg)
    meta = dict(cfg.meta(), alpha=alpha)
    domain = cfg.get("domain", "unclassified")
    slug = _slug(domain)
    weighted_path = cfg.get("weighted", os.path.join(out, f"weighted_{slug}.csv"))
    series = fileio.read_weighted_edgelist(weighted_path, actors, cfg.years)
    nets, rows = [], []
    scores_by_year = {}
    for wnet in series:
        scores = bb.disparity_scores(wnet)
        net, report = bb.extract_backbone(wnet, alpha, scores)
        scores_by_year[wnet.year] = scores
        nets.append(net)
        from .panel import isolate_count
        rows.append((wnet.year, report.positive_edges, report.retained_edges,
                     f"{report.trimming_fraction:.4f}",
                     f"{isolate_count(net) / actors.n:.4f}"))
    bseries = BinaryNetSeries(tuple(nets))
    fileio.write_binary_edgelist(bseries, os.path.join(out, f"backbone_{slug}.csv"),
                                 meta=meta)
    if cfg.get("alpha_column", "false").lower() in ("true", "1", "yes"):
        fileio.write_weighted_edgelist(series,
                                       os.path.join(out, f"scored_{slug}.csv"),
                                       meta=meta, scores_by_year=scores_by_year)
    _write_table(os.path.join(out, f"trimming_{slug}.csv"),
                 ["year", "positive_edges", "retained_edges",
                  "trimming_fraction", "isolate_share"], rows, meta)
    print(f"backbone at alpha={alpha}: wrote backbone_{slug}.csv")
    return EXIT_OK


def _load_panel_and_model(cfg):
    actors = fileio.read_actor_set(cfg.get("actors", required=True))
    out = _outdir(cfg)
    slug = _slug(cfg.get("domain", "unclassified"))
    panel_path = cfg.get("panel", os.path.join(out, f"backbone_{slug}.csv"))
    panel = fileio.read_binary_edgelist(panel_path, actors, cfg.years)
    years = panel.years
    covs = _load_covariates(cfg, actors, years)
    effects = cfg.effects
    for eff in effects:
        if eff.covariate:
            pool = covs.actor if eff.kind != "dyadX" else covs.dyad
            if eff.covariate not in pool:
                raise ConfigError(f"effect {eff.label}: covariate "
                                  f"{eff.covariate!r} not configured")
            if eff.kind != "dyadX":
                cov = covs.actor[eff.covariate]
                if cov.values.shape[0] != actors.n:
                    raise ConfigError(f"covariate {eff.covariate!r} has "
                                      f"{cov.values.shape[0]} actors, expected {actors.n}")
    model = ModelSpec(effects, model_type=cfg.get("model_type", "forcing"))
    return actors, panel, covs, model, out, slug


def _p_rows(result):
    """Like estimate.p_values, but degenerate SEs yield a blank p column."""
    rows = []
    for label, b, se in zip(result.effect_labels, result.beta, result.beta_se):
        if se > 0:
            p = p_value(b, se)
            rows.append((label, float(b), float(se), p, stars(p)))
        else:
            rows.append((label, float(b), float(se), float("nan"), ""))
    return rows


def _report_lines(result):
    lines = ["Parameter                        Estimate", "-" * 48]
    for label, b, se, p, star in _p_rows(result):
        lines.append(f"{label:<32} {b:.4f}{star}")
        lines.append(f"{'':<32} ({se:.4f})")
    lines.append("-" * 48)
    lines.append(f"{'Convergence Ratio':<32} {result.conv_ratio:.4f}")
    lines.append(f"{'Iteration Steps':<32} {result.iterations}")
    return lines


def cmd_estimate(cfg: RunConfig) -> int:
    actors, panel, covs, model, out, slug = _load_panel_and_model(cfg)
    options = cfg.estimation_options()
    result = run_estimation(panel, model, covs, options)
    meta = cfg.meta()
    fileio.write_result_json(result, os.path.join(out, f"result_{slug}.json"),
                             meta=meta)
    fileio.write_draws(result, os.path.join(out, f"draws_stats_{slug}.npy"),
                       os.path.join(out, f"draws_finals_{slug}.npy"))
    rows = [(label, f"{b:.4f}", f"{se:.4f}",
             f"{p:.6f}" if np.isfinite(p) else "", star)
            for label, b, se, p, star in _p_rows(result)]
    _write_table(os.path.join(out, f"estimates_{slug}.csv"),
                 ["parameter", "estimate", "se", "p", "stars"], rows, meta)
    report = "\n".join(f"# {k}={v}" for k, v in sorted(meta.items()))
    report += "\n" + "\n".join(_report_lines(result)) + "\n"
    with open(os.path.join(out, f"report_{slug}.txt"), "w", encoding="utf-8") as fh:
        fh.write(report)
    print("\n".join(_report_lines(result)))
    return EXIT_OK


def cmd_gof(cfg: RunConfig) -> int:
    actors, panel, covs, model, out, slug = _load_panel_and_model(cfg)
    stats_path = os.path.join(out, f"draws_stats_{slug}.npy")
    finals_path = os.path.join(out, f"draws_finals_{slug}.npy")
    if not (os.path.exists(stats_path) and os.path.exists(finals_path)):
        raise gof.GofError(
            "no retained draws found; rerun the estimate command (draw "
            f"retention writes {os.path.basename(finals_path)})")
    with open(os.path.join(out, f"result_{slug}.json"), encoding="utf-8") as fh:
        stored = json.load(fh)
    stats, finals = fileio.read_draws(stats_path, finals_path, actors)
    result = EstimationResult(
        theta=np.array(stored["theta"]), se=np.array(stored["se"]),
        rate_labels=stored["rate_labels"], effect_labels=stored["effect_labels"],
        derivative=np.array(stored["derivative"]),
        covariance=np.array(stored["covariance"]),
        tratios=np.array(stored["tratios"]), conv_ratio=stored["conv_ratio"],
        iterations=stored["iterations"], seed=stored["seed"],
        draws_stats=stats, draws_final_networks=finals,
        targets=np.array(stored["targets"]))
    meta = cfg.meta()
    final_wave = panel.wave(panel.n_waves - 1)
    for kind in gof.AUX_KINDS:
        aux = gof.gof_test(result, final_wave, kind)
        rows = [(lbl, f"{o:.10g}", f"{a:.10g}", f"{b:.10g}", f"{c:.10g}")
                for lbl, o, a, b, c in zip(aux.labels, aux.observed, aux.q05,
                                           aux.q50, aux.q95)]
        path = os.path.join(out, f"gof_{kind}_{slug}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for k, v in sorted(meta.items()):
                fh.write(f"# {k}={v}\n")
            fh.write(f"# p_value={aux.p:.6f}\n")
            wr = csv.writer(fh)
            wr.writerow(["dimension", "observed", "q05", "q50", "q95"])
            wr.writerows(rows)
        print(f"{kind}: p = {aux.p:.4f} -> {os.path.basename(path)}")
    return EXIT_OK


def cmd_export(cfg: RunConfig) -> int:
    actors = fileio.read_actor_set(cfg.get("actors", required=True))
    out = _outdir(cfg)
    slug = _slug(cfg.get("domain", "unclassified"))
    panel_path = cfg.get("panel", os.path.join(out, f"backbone_{slug}.csv"))
    panel = fileio.read_binary_edgelist(panel_path, actors, cfg.years)
    covs = _load_covariates(cfg, actors, panel.years)
    meta = cfg.meta()
    for m, net in enumerate(panel):
        attrs = {}
        for name, cov in sorted(covs.actor.items()):
            attrs[name] = cov.filled(min(m, cov.n_periods - 1))
        path = os.path.join(out, f"wave_{slug}_{net.year}.graphml")
        fileio.export_graphml(net, path, node_attrs=attrs, meta=meta)
    print(f"exported {panel.n_waves} GraphML waves to {out}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "backbone": cmd_backbone,
    "estimate": cmd_estimate,
    "gof": cmd_gof,
    "export": cmd_export,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ircnet",
        description="Longitudinal co-authorship network pipeline: weighted "
                    "networks, disparity-filter backbones, actor-oriented "
                    "model estimation, goodness of fit.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("config", help="key=value configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--outdir", default=None)
        p.add_argument("--domain", default=None)
        p.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in
                 ("seed", "alpha", "outdir", "domain", "threads")}
    try:
        cfg = RunConfig.load(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RUNTIME_ERRORS as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
