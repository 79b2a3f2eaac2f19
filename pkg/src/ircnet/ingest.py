"""Publication-record ingestion: country disambiguation, pair expansion,
and yearly aggregation into weighted co-authorship networks.

Each article with authors from k distinct countries contributes one count
to every one of the C(k, 2) unordered country pairs; counts stack across
articles within a (year, domain) cell.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .panel import (ActorSet, BinaryNetwork, NetSeries, PanelError,
                    WeightedNetwork, density, degree_sequence, edge_count,
                    isolate_count)

OUT_OF_SET = "__OUT_OF_SET__"

DOMAINS = ("S&T", "SocSci", "A&H", "unclassified")


class IngestError(ValueError):
    pass


class UnmatchedCountryError(IngestError):
    def __init__(self, raw: str):
        super().__init__(f"no dictionary entry for country name {raw!r}")
        self.raw = raw


@dataclass(frozen=True)
class ArticleRecord:
    id: str
    year: int
    domains: tuple
    affiliations: tuple

    def __post_init__(self):
        if not self.affiliations:
            raise IngestError(f"record {self.id}: affiliations must be non-empty")
        object.__setattr__(self, "domains", tuple(self.domains))
        object.__setattr__(self, "affiliations", tuple(self.affiliations))

    @classmethod
    def from_json(cls, line: str):
        obj = json.loads(line)
        domains = obj.get("domain", "unclassified")
        if isinstance(domains, str):
            domains = [domains]
        return cls(id=str(obj["id"]), year=int(obj["year"]),
                   domains=tuple(domains),
                   affiliations=tuple(obj["affiliations"]))


@dataclass(frozen=True)
class DisambiguationDictionary:
    """Raw country-name strings to ISO3 codes, with an unmatched policy."""

    mapping: dict
    policy: str = "drop"

    def __post_init__(self):
        if self.policy not in ("drop", "error"):
            raise IngestError(f"unknown unmatched policy {self.policy!r}")
        object.__setattr__(self, "mapping", dict(self.mapping))


def disambiguate(raw: str, dictionary: DisambiguationDictionary) -> str:
    """Map a raw country name to ISO3, or to the out-of-set marker."""
    code = dictionary.mapping.get(raw)
    if code is None:
        if dictionary.policy == "error":
            raise UnmatchedCountryError(raw)
        return OUT_OF_SET
    return code


def expand_pairs(record: ArticleRecord, dictionary: DisambiguationDictionary,
                 actors: ActorSet = None) -> set:
    """Unordered pairs of distinct in-set country codes on one article."""
    codes = set()
    for raw in record.affiliations:
        code = disambiguate(raw, dictionary)
        if code == OUT_OF_SET:
            continue
        if actors is not None and code not in actors:
            continue
        codes.add(code)
    return {tuple(sorted(pair)) for pair in itertools.combinations(sorted(codes), 2)}


@dataclass
class AggregationReport:
    records_seen: int = 0
    records_used: int = 0
    skipped_year: int = 0
    skipped_domain: int = 0


def aggregate(records, dictionary: DisambiguationDictionary, actors: ActorSet,
              year: int, domain: str = None,
              report: AggregationReport = None) -> WeightedNetwork:
    """Sum pair counts over records matching (year, domain)."""
    n = actors.n
    w = np.zeros((n, n), dtype=np.int64)
    report = report if report is not None else AggregationReport()
    for rec in records:
        report.records_seen += 1
        if rec.year != year:
            report.skipped_year += 1
            continue
        if domain is not None and domain not in rec.domains:
            report.skipped_domain += 1
            continue
        report.records_used += 1
        for a, b in expand_pairs(rec, dictionary, actors):
            i, j = actors.index(a), actors.index(b)
            w[i, j] += 1
            w[j, i] += 1
    return WeightedNetwork(actors, year, w)


def aggregate_series(records, dictionary, actors, years, domain=None):
    """One WeightedNetwork per year over a fixed record list."""
    records = list(records)
    from .panel import WeightedNetSeries
    nets = [aggregate(records, dictionary, actors, year, domain)
            for year in years]
    return WeightedNetSeries(tuple(nets))


@dataclass
class DescribeRow:
    year: int
    nodes: int
    edges: int
    density: float
    isolates: int


def describe(series: NetSeries) -> list:
    """Per-wave descriptive rows: year, nodes, edges, density, isolates."""
    rows = []
    for net in series:
        if isinstance(net, WeightedNetwork):
            x = (net.w > 0).astype(np.int8)
            net = BinaryNetwork(net.actors, net.year, x)
        rows.append(DescribeRow(year=net.year, nodes=net.actors.n,
                                edges=edge_count(net), density=density(net),
                                isolates=isolate_count(net)))
    return rows
