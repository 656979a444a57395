"""Decentralization analytics over multi-input/multi-output transaction
ledgers: balance reconstruction, top-N rankings, ranking stability,
concentration indices, and transaction-graph centrality dispersion."""

__version__ = "0.1.0"

from .balances import (
    BalanceSnapshot,
    Ranking,
    compute_rankings,
    compute_snapshots,
    proportion,
    proportion_diff_series,
    top_n,
)
from .errors import (
    BalanceError,
    ConvergenceError,
    LedgerError,
    ParseError,
    StoreError,
)
from .ledger import (
    COINBASE,
    AddressTable,
    Edge,
    Ledger,
    Transaction,
    expand_edges,
    parse_ledger,
)
from .lorenz import CumulativeCurve, cumulative_curve, d_static, d_static_series
from .market import (
    EntityClustering,
    HHISeries,
    classify,
    cluster,
    d_hhi,
    hhi,
    hhi_series,
    label_propagation,
)
from .stability import (
    DistributionSummary,
    StabilitySeries,
    retention,
    spearman,
    stability_series,
    summarize,
)
from .store import SnapshotStore, load_ledger, save_ledger
from .synth import SynthConfig, generate
from .txgraph import (
    MetricVector,
    TransactionGraph,
    build_day_graph,
    degree_centrality,
    dispersion,
    dispersion_series,
    pagerank,
)

__all__ = [
    "__version__",
    "AddressTable", "BalanceError", "BalanceSnapshot", "COINBASE",
    "ConvergenceError", "CumulativeCurve", "DistributionSummary", "Edge",
    "EntityClustering", "HHISeries", "Ledger", "LedgerError", "MetricVector",
    "ParseError", "Ranking", "SnapshotStore", "StabilitySeries", "StoreError",
    "SynthConfig", "Transaction", "TransactionGraph", "build_day_graph",
    "classify", "cluster", "compute_rankings", "compute_snapshots",
    "cumulative_curve", "d_hhi", "d_static", "d_static_series",
    "degree_centrality", "dispersion", "dispersion_series", "expand_edges",
    "generate", "hhi", "hhi_series", "label_propagation", "load_ledger",
    "pagerank", "parse_ledger", "proportion", "proportion_diff_series",
    "retention", "save_ledger", "spearman", "stability_series", "summarize",
    "top_n",
]
