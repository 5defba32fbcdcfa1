//! Per-player, per-round, per-purpose sample accounting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purpose {
    /// Draws from the weighted mixture used to train the round classifier.
    Learn,
    /// Draws from a player's own distribution used to screen a classifier.
    Test,
}

/// One ledger cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub player: usize,
    pub round: usize,
    pub purpose: Purpose,
    pub count: u64,
}

/// Exact count of every drawn example. Mixture draws are charged to the
/// player whose distribution produced the example.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleLedger {
    cells: BTreeMap<(usize, usize, Purpose), u64>,
}

impl SampleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, player: usize, round: usize, purpose: Purpose, count: u64) {
        if count > 0 {
            *self.cells.entry((player, round, purpose)).or_insert(0) += count;
        }
    }

    pub fn get(&self, player: usize, round: usize, purpose: Purpose) -> u64 {
        self.cells
            .get(&(player, round, purpose))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn player_total(&self, player: usize) -> u64 {
        self.sum_where(|p, _, _| p == player)
    }

    pub fn round_total(&self, round: usize) -> u64 {
        self.sum_where(|_, r, _| r == round)
    }

    pub fn purpose_total(&self, purpose: Purpose) -> u64 {
        self.sum_where(|_, _, q| q == purpose)
    }

    fn sum_where(&self, keep: impl Fn(usize, usize, Purpose) -> bool) -> u64 {
        self.cells
            .iter()
            .filter(|(&(p, r, q), _)| keep(p, r, q))
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = LedgerEntry> + '_ {
        self.cells
            .iter()
            .map(|(&(player, round, purpose), &count)| LedgerEntry {
                player,
                round,
                purpose,
                count,
            })
    }
}

impl Serialize for SampleLedger {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.entries())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_are_sums_of_cells() {
        let mut l = SampleLedger::new();
        l.record(0, 1, Purpose::Learn, 10);
        l.record(1, 1, Purpose::Learn, 5);
        l.record(0, 1, Purpose::Test, 7);
        l.record(0, 2, Purpose::Learn, 3);
        l.record(0, 1, Purpose::Learn, 2);
        l.record(3, 3, Purpose::Test, 0);
        assert_eq!(l.total(), 27);
        assert_eq!(l.get(0, 1, Purpose::Learn), 12);
        assert_eq!(l.player_total(0), 22);
        assert_eq!(l.round_total(1), 24);
        assert_eq!(l.purpose_total(Purpose::Test), 7);
        assert_eq!(l.entries().count(), 4);
        assert_eq!(l.entries().map(|e| e.count).sum::<u64>(), l.total());
    }

    #[test]
    fn serializes_as_entry_list() {
        let mut l = SampleLedger::new();
        l.record(2, 1, Purpose::Test, 4);
        assert_eq!(
            serde_json::to_string(&l).unwrap(),
            r#"[{"player":2,"round":1,"purpose":"test","count":4}]"#
        );
    }
}
