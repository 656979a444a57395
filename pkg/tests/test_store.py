import json

import pytest

from ledgerlens import (
    SnapshotStore,
    StoreError,
    SynthConfig,
    compute_snapshots,
    generate,
    load_ledger,
    save_ledger,
)
from ledgerlens.store import load_meta
from conftest import make_ledger


@pytest.fixture
def ledger():
    return generate(SynthConfig(seed=9, days=10, txs_per_day=40, pool=30, growth=1.0))


class TestLedgerStore:
    def test_roundtrip(self, ledger, tmp_path):
        store = str(tmp_path / "store")
        meta = save_ledger(ledger, store)
        loaded = load_ledger(store)
        assert loaded.canonical_bytes() == ledger.canonical_bytes()
        assert loaded.n_days == ledger.n_days
        assert meta["transactions"] == len(ledger)

    def test_missing_store(self, tmp_path):
        with pytest.raises(StoreError, match="no store"):
            load_ledger(str(tmp_path / "nowhere"))

    def test_version_check(self, ledger, tmp_path):
        store = str(tmp_path / "store")
        save_ledger(ledger, store)
        meta = load_meta(store)
        meta["store_version"] = 999
        with open(tmp_path / "store" / "meta.json", "w") as fp:
            json.dump(meta, fp)
        with pytest.raises(StoreError, match="version"):
            load_ledger(store)

    def test_corruption_detected(self, ledger, tmp_path):
        store = str(tmp_path / "store")
        save_ledger(ledger, store)
        meta = load_meta(store)
        meta["content_hash"] = "0" * 16
        with open(tmp_path / "store" / "meta.json", "w") as fp:
            json.dump(meta, fp)
        with pytest.raises(StoreError, match="corrupt"):
            load_ledger(store)

    def test_empty_ledger_roundtrip(self, tmp_path):
        empty = make_ledger([])
        store = str(tmp_path / "store")
        save_ledger(empty, store)
        loaded = load_ledger(store)
        assert len(loaded) == 0 and loaded.n_days == 0


class TestSnapshotStore:
    @pytest.mark.parametrize("interval", [1, 3, 32])
    def test_reconstruction_matches_direct(self, ledger, interval):
        snaps = SnapshotStore.build(ledger, interval=interval)
        for snap in compute_snapshots(ledger):
            rebuilt = snaps.balances_at(snap.day)
            assert (rebuilt == snap.balances).all()

    def test_snapshot_at_carries_supply_and_fees(self, ledger):
        snaps = SnapshotStore.build(ledger)
        direct = list(compute_snapshots(ledger))[-1]
        snap = snaps.snapshot_at(direct.day, ledger.addresses)
        assert snap.total_supply == direct.total_supply
        assert snap.fees_to_date == direct.fees_to_date

    def test_save_load(self, ledger, tmp_path):
        store = str(tmp_path / "store")
        save_ledger(ledger, store)
        snaps = SnapshotStore.build(ledger, interval=4)
        snaps.save(store)
        loaded = SnapshotStore.load(store)
        for day in range(ledger.n_days):
            assert (loaded.balances_at(day) == snaps.balances_at(day)).all()

    def test_range_check(self, ledger):
        snaps = SnapshotStore.build(ledger)
        with pytest.raises(ValueError):
            snaps.balances_at(ledger.n_days)

    def test_checkpoint_spacing(self, ledger):
        snaps = SnapshotStore.build(ledger, interval=4)
        assert sorted(snaps.checkpoints) == [0, 4, 8]
