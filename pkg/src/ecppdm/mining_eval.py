"""Association-rule mining on original vs perturbed data.

Numeric attributes are discretized with equal-width bins fitted on the
ORIGINAL dataset and reused verbatim for the perturbed one; rules are mined
with Apriori and compared structurally (antecedent, consequent) to compute
a recovery percentage.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .errors import EmptyTransactions, NoBaselineRules, UnfittedItemizer
from .etl import Dataset


@dataclass(frozen=True)
class Itemizer:
    """Equal-width binning of numeric attributes; categoricals pass through."""

    bins: int
    edges: tuple[tuple[str, float, float], ...]  # (attr, min, max) fitted

    @classmethod
    def fit(cls, data: Dataset, bins: int = 4) -> "Itemizer":
        edges = []
        for i, attr in enumerate(data.schema.confidential_attrs):
            values = [r.confidential[i] for r in data.rows if r.confidential[i] is not None]
            if not values:
                raise UnfittedItemizer(f"no values to fit bins for {attr.name!r}")
            edges.append((attr.name, min(values), max(values)))
        return cls(bins, tuple(edges))

    def bin_index(self, attr_idx: int, value: float) -> int:
        _, lo, hi = self.edges[attr_idx]
        if hi == lo:
            return 0
        # half-open bins [e_i, e_{i+1}); out-of-range values clamp
        i = int((value - lo) / (hi - lo) * self.bins)
        return max(0, min(self.bins - 1, i))


def itemize(data: Dataset, itemizer: Itemizer) -> list[frozenset[str]]:
    if len(itemizer.edges) != len(data.schema.confidential_attrs):
        raise UnfittedItemizer("itemizer was fitted for a different schema")
    transactions = []
    cat_names = data.schema.categorical_attrs
    for row in data.rows:
        items = set()
        for i, value in enumerate(row.confidential):
            if value is None:
                continue
            name = itemizer.edges[i][0]
            items.add(f"{name}=b{itemizer.bin_index(i, value)}")
        for name, value in zip(cat_names, row.categorical):
            items.add(f"{name}={value}")
        transactions.append(frozenset(items))
    return transactions


@dataclass(frozen=True)
class AssociationRule:
    antecedent: frozenset[str]
    consequent: frozenset[str]
    support: float
    confidence: float

    @property
    def structure(self) -> tuple[frozenset[str], frozenset[str]]:
        return (self.antecedent, self.consequent)


def frequent_itemsets(
    transactions: list[frozenset[str]], minsup: float
) -> dict[frozenset[str], float]:
    """Levelwise Apriori with tid-set intersection for support counting."""
    if not transactions:
        raise EmptyTransactions("no transactions to mine")
    n = len(transactions)
    tidsets: dict[str, set[int]] = {}
    for tid, t in enumerate(transactions):
        for item in t:
            tidsets.setdefault(item, set()).add(tid)

    frequent: dict[frozenset[str], float] = {}
    level: dict[frozenset[str], set[int]] = {}
    for item, tids in tidsets.items():
        if len(tids) / n >= minsup:
            key = frozenset([item])
            frequent[key] = len(tids) / n
            level[key] = tids

    k = 1
    while level:
        keys = sorted(level, key=lambda s: sorted(s))
        next_level: dict[frozenset[str], set[int]] = {}
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                candidate = keys[i] | keys[j]
                if len(candidate) != k + 1 or candidate in next_level:
                    continue
                # prune: every k-subset must already be frequent
                if any(candidate - {item} not in level for item in candidate):
                    continue
                tids = level[keys[i]] & level[keys[j]]
                if len(tids) / n >= minsup:
                    next_level[candidate] = tids
        for itemset, tids in next_level.items():
            frequent[itemset] = len(tids) / n
        level = next_level
        k += 1
    return frequent


def apriori(
    transactions: list[frozenset[str]], minsup: float, minconf: float
) -> set[AssociationRule]:
    """All rules A -> B with support >= minsup and confidence >= minconf."""
    frequent = frequent_itemsets(transactions, minsup)
    rules: set[AssociationRule] = set()
    for itemset, sup in frequent.items():
        if len(itemset) < 2:
            continue
        items = sorted(itemset)
        for r in range(1, len(items)):
            for ant in combinations(items, r):
                antecedent = frozenset(ant)
                conf = sup / frequent[antecedent]
                if conf >= minconf:
                    rules.add(AssociationRule(antecedent, itemset - antecedent, sup, conf))
    return rules


def accuracy(orig: set[AssociationRule], pert: set[AssociationRule]) -> float:
    """Percentage of original rules recovered structurally from the perturbed set."""
    if not orig:
        raise NoBaselineRules("no rules mined from the baseline dataset")
    orig_keys = {r.structure for r in orig}
    pert_keys = {r.structure for r in pert}
    return 100.0 * len(orig_keys & pert_keys) / len(orig_keys)


def planted_accuracy(
    planted: list[tuple[frozenset[str], frozenset[str]]], mined: set[AssociationRule]
) -> float:
    """Percentage of planted rules present in the mined set."""
    if not planted:
        raise NoBaselineRules("no planted rules to score against")
    mined_keys = {r.structure for r in mined}
    hits = sum(1 for rule in planted if rule in mined_keys)
    return 100.0 * hits / len(planted)


@dataclass(frozen=True)
class MiningParams:
    minsup: float = 0.2
    minconf: float = 0.6
    bins: int = 4

    def __post_init__(self):
        if not (0 < self.minsup <= 1 and 0 < self.minconf <= 1):
            raise ValueError("minsup and minconf must be in (0, 1]")


@dataclass
class ReportRow:
    record_count: int
    original_rule_count: int
    perturbed_rule_count: int
    recovery_percent: float
    original_accuracy: float | None = None
    perturbed_accuracy: float | None = None


@dataclass
class AccuracyReport:
    rows: list[ReportRow]
    parameters: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["record_count,original_rules,perturbed_rules,recovery_percent,"
                 "original_accuracy,perturbed_accuracy"]
        for r in self.rows:
            oa = f"{r.original_accuracy:.2f}" if r.original_accuracy is not None else ""
            pa = f"{r.perturbed_accuracy:.2f}" if r.perturbed_accuracy is not None else ""
            lines.append(
                f"{r.record_count},{r.original_rule_count},{r.perturbed_rule_count},"
                f"{r.recovery_percent:.2f},{oa},{pa}"
            )
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        header = (
            f"{'records':>8}  {'orig rules':>10}  {'pert rules':>10}  "
            f"{'recovery %':>10}  {'orig acc %':>10}  {'pert acc %':>10}"
        )
        lines = [header, "-" * len(header)]
        for r in self.rows:
            oa = f"{r.original_accuracy:10.2f}" if r.original_accuracy is not None else " " * 10
            pa = f"{r.perturbed_accuracy:10.2f}" if r.perturbed_accuracy is not None else " " * 10
            lines.append(
                f"{r.record_count:>8}  {r.original_rule_count:>10}  "
                f"{r.perturbed_rule_count:>10}  {r.recovery_percent:10.2f}  {oa}  {pa}"
            )
        params = ", ".join(f"{k}={v}" for k, v in self.parameters.items())
        lines.append(f"parameters: {params}")
        return "\n".join(lines) + "\n"


DEFAULT_RECORD_SCHEDULE = (200, 400, 600, 800)


def evaluate_pair(
    original: Dataset,
    perturbed: Dataset,
    params: MiningParams,
    planted: list[tuple[frozenset[str], frozenset[str]]] | None = None,
) -> ReportRow:
    """Mine both datasets with bins fitted on the original and compare."""
    itemizer = Itemizer.fit(original, params.bins)
    rules_orig = apriori(itemize(original, itemizer), params.minsup, params.minconf)
    rules_pert = apriori(itemize(perturbed, itemizer), params.minsup, params.minconf)
    row = ReportRow(
        record_count=len(original),
        original_rule_count=len(rules_orig),
        perturbed_rule_count=len(rules_pert),
        recovery_percent=accuracy(rules_orig, rules_pert),
    )
    if planted:
        row.original_accuracy = planted_accuracy(planted, rules_orig)
        row.perturbed_accuracy = planted_accuracy(planted, rules_pert)
    return row


def run_experiment(
    original: Dataset,
    perturbed: Dataset,
    params: MiningParams,
    schedule: tuple[int, ...] = DEFAULT_RECORD_SCHEDULE,
    planted: list[tuple[frozenset[str], frozenset[str]]] | None = None,
    parameters: dict | None = None,
) -> AccuracyReport:
    """Mine prefixes of the datasets at each scheduled record count."""
    from .etl import Dataset as _D  # local alias to slice immutably

    rows = []
    for count in schedule:
        n = min(count, len(original))
        orig_slice = _D(original.schema, original.rows[:n], original.provenance)
        pert_slice = _D(perturbed.schema, perturbed.rows[:n], perturbed.provenance)
        rows.append(evaluate_pair(orig_slice, pert_slice, params, planted))
    return AccuracyReport(rows, dict(parameters or {}))
