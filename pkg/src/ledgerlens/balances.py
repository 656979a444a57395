"""End-of-day balance reconstruction, top-N rankings, and supply proportions.

Balances are exact int64 base units.  A day's transactions are applied as a
net batch (only end-of-day state is defined), debiting inputs and crediting
outputs; fees are the input/output difference and belong to no address.
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BalanceError
from .ledger import AddressTable, Ledger

TOP_N_DEFAULT = 2000


@dataclass
class BalanceSnapshot:
    """Per-address balances at one day boundary.

    `balances` is indexed by interned address id and owned by the snapshot
    (callers may keep or mutate it).  `total_supply` is the cumulative minted
    amount through this day; the invariant ``balances.sum() + fees_to_date ==
    total_supply`` holds for every snapshot of a valid ledger.
    """

    day: int
    balances: np.ndarray
    total_supply: int
    fees_to_date: int
    addresses: AddressTable

    def balance_of(self, addr: str) -> int:
        if addr not in self.addresses:
            return 0
        return int(self.balances[self.addresses.id_of(addr)])

    def as_dict(self) -> dict[str, int]:
        """Funded addresses only, as an address -> balance map."""
        ids = np.flatnonzero(self.balances > 0)
        names = self.addresses.names
        return {names[i]: int(self.balances[i]) for i in ids}

    @property
    def funded_count(self) -> int:
        return int((self.balances > 0).sum())


@dataclass(eq=False)
class Ranking:
    """Top-N addresses by balance for one day, largest first.

    Ties are broken by ascending address string so rankings are reproducible
    regardless of ingestion order.  Zero balances never appear.
    """

    day: int
    n: int
    ids: np.ndarray
    balances: np.ndarray
    addresses: AddressTable | None = None
    _members: frozenset = field(default=None, repr=False)
    _tie_ranks: np.ndarray = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.ids)

    def entries(self) -> list[tuple[str, int]]:
        names = self.addresses.names
        return [(names[i], int(b)) for i, b in zip(self.ids, self.balances)]

    def members(self) -> frozenset:
        if self._members is None:
            self._members = frozenset(int(i) for i in self.ids)
        return self._members

    def tie_ranks(self) -> np.ndarray:
        """1-based positions with tied balances averaged (fractional ranks)."""
        if self._tie_ranks is None:
            m = len(self.balances)
            ranks = np.arange(1, m + 1, dtype=np.float64)
            if m:
                # Runs of equal balances share the mean of their positions.
                boundaries = np.flatnonzero(np.diff(self.balances) != 0) + 1
                starts = np.concatenate(([0], boundaries))
                stops = np.concatenate((boundaries, [m]))
                for s, e in zip(starts, stops):
                    if e - s > 1:
                        ranks[s:e] = 0.5 * (s + 1 + e)
            self._tie_ranks = ranks
        return self._tie_ranks

    def rank_by_id(self) -> dict[int, float]:
        ranks = self.tie_ranks()
        return {int(i): float(r) for i, r in zip(self.ids, ranks)}

    def truncated(self, n: int) -> "Ranking":
        if n >= len(self.ids):
            return self
        return Ranking(self.day, n, self.ids[:n], self.balances[:n], self.addresses)


def _apply_day(ledger: Ledger, day: int, balances: np.ndarray) -> None:
    """Apply one day's transactions to `balances` in place (net of the day)."""
    start, stop = ledger.day_range(day)
    i0, i1 = ledger.in_ptr[start], ledger.in_ptr[stop]
    o0, o1 = ledger.out_ptr[start], ledger.out_ptr[stop]
    in_ids = ledger.in_addr[i0:i1]
    np.subtract.at(balances, in_ids, ledger.in_val[i0:i1])
    np.add.at(balances, ledger.out_addr[o0:o1], ledger.out_val[o0:o1])
    if len(in_ids) and balances[in_ids].min() < 0:
        _raise_negative(ledger, day, balances)


def _raise_negative(ledger: Ledger, day: int, balances: np.ndarray) -> None:
    bad = {int(i) for i in np.flatnonzero(balances < 0)}
    start, stop = ledger.day_range(day)
    for t in range(start, stop):
        for j in range(ledger.in_ptr[t], ledger.in_ptr[t + 1]):
            if int(ledger.in_addr[j]) in bad:
                addr = ledger.addresses.names[ledger.in_addr[j]]
                raise BalanceError(ledger.txids[t], day, addr)
    raise BalanceError(ledger.txids[start], day, "<unknown>")


def compute_snapshots(ledger: Ledger) -> Iterator[BalanceSnapshot]:
    """Yield one BalanceSnapshot per day, day 0 through the last day.

    Snapshots are produced incrementally; each day applies only that day's
    transactions to the previous day's state.  A debit that would leave an
    address negative at a day boundary raises BalanceError naming the txid.
    """
    balances = np.zeros(len(ledger.addresses), dtype=np.int64)
    for day in range(ledger.n_days):
        _apply_day(ledger, day, balances)
        yield BalanceSnapshot(
            day=day,
            balances=balances.copy(),
            total_supply=ledger.supply_at(day),
            fees_to_date=ledger.fees_through(day),
            addresses=ledger.addresses,
        )


def rank_balances(
    balances: np.ndarray, n: int, addresses: AddressTable | None, day: int
) -> Ranking:
    """Build the top-n ranking of a balance vector.

    Order is descending balance, then ascending address string.  Only funded
    (positive) balances participate.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    funded = np.flatnonzero(balances > 0)
    vals = balances[funded]
    if len(funded) > n:
        # Partition on balance, then resolve the boundary tie group by
        # address string so the cut is deterministic.
        part = np.argpartition(vals, len(vals) - n)[len(vals) - n:]
        threshold = vals[part].min()
        above = funded[vals > threshold]
        need = n - len(above)
        if need > 0:
            tied = funded[vals == threshold]
            if addresses is not None:
                names = addresses.names
                tied = sorted(tied, key=lambda i: names[i])
            else:
                tied = sorted(tied)
            chosen = np.concatenate((above, np.asarray(tied[:need], dtype=np.int64)))
        else:
            chosen = above
    else:
        chosen = funded
    chosen_vals = balances[chosen]
    if addresses is not None:
        names = addresses.names
        order = sorted(range(len(chosen)), key=lambda j: (-chosen_vals[j], names[chosen[j]]))
    else:
        order = sorted(range(len(chosen)), key=lambda j: (-chosen_vals[j], chosen[j]))
    order = np.asarray(order, dtype=np.int64)
    return Ranking(day, n, chosen[order], chosen_vals[order], addresses)


def top_n(snapshot: BalanceSnapshot, n: int) -> Ranking:
    """The n largest balances of a snapshot, descending."""
    return rank_balances(snapshot.balances, n, snapshot.addresses, snapshot.day)


def compute_rankings(ledger: Ledger, n: int = TOP_N_DEFAULT) -> list[Ranking]:
    """Daily top-n rankings for the whole ledger (one streaming pass)."""
    balances = np.zeros(len(ledger.addresses), dtype=np.int64)
    out = []
    for day in range(ledger.n_days):
        _apply_day(ledger, day, balances)
        out.append(rank_balances(balances, n, ledger.addresses, day))
    return out


def proportion(snapshot: BalanceSnapshot, n: int) -> float:
    """Share of total minted supply held by the top-n addresses."""
    if snapshot.total_supply <= 0:
        raise ValueError(f"day {snapshot.day} has no minted supply")
    ranking = top_n(snapshot, n)
    return float(int(ranking.balances.sum())) / float(snapshot.total_supply)


def proportion_from_ranking(ranking: Ranking, supply: int, n: int | None = None) -> float:
    if supply <= 0:
        raise ValueError("no minted supply")
    bal = ranking.balances if n is None else ranking.balances[:n]
    return float(int(bal.sum())) / float(supply)


def proportion_series(
    rankings: Sequence[Ranking], supplies: Sequence[int], tops: Sequence[int]
) -> np.ndarray:
    """Matrix of top-n proportions: one row per day, one column per n."""
    out = np.zeros((len(rankings), len(tops)))
    for d, (r, c) in enumerate(zip(rankings, supplies)):
        if c <= 0:
            out[d, :] = np.nan
            continue
        csum = np.cumsum(r.balances, dtype=np.float64)
        total = float(c)
        for j, n in enumerate(tops):
            take = min(n, len(csum))
            out[d, j] = csum[take - 1] / total if take else 0.0
    return out


def proportion_diff_series(
    snapshots: Iterable[BalanceSnapshot], step: int = 100, max_n: int = 2000
) -> tuple[list[int], list[int], np.ndarray]:
    """Per-day differences proportion(x+step) - proportion(x) for x in
    {0, step, ..., max_n-step}.

    Returns (days, xs, matrix) with one matrix row per day.  The x=0 column
    equals the plain top-step proportion.
    """
    if step < 1 or max_n < step or max_n % step:
        raise ValueError("step must be >= 1 and divide max_n")
    xs = list(range(0, max_n, step))
    days: list[int] = []
    rows: list[np.ndarray] = []
    for snap in snapshots:
        ranking = top_n(snap, max_n)
        csum = np.zeros(len(xs) + 1)
        full = np.cumsum(ranking.balances, dtype=np.float64)
        for j in range(1, len(xs) + 1):
            take = min(j * step, len(full))
            csum[j] = full[take - 1] if take else 0.0
        total = float(snap.total_supply)
        days.append(snap.day)
        rows.append(np.diff(csum) / total)
    matrix = np.vstack(rows) if rows else np.zeros((0, len(xs)))
    return days, xs, matrix
