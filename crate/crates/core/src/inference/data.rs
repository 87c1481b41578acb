use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Grouped count data: observed frequency per count value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    cells: Vec<(u64, u64)>,
    total_n: u64,
}

impl FrequencyTable {
    /// Builds a table from `(count, frequency)` pairs in any order.
    ///
    /// Duplicate counts are merged by summation. At least two cells must
    /// carry nonzero frequency.
    pub fn new<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut merged = BTreeMap::new();
        for (count, freq) in pairs {
            let slot = merged.entry(count).or_insert(0u64);
            *slot = slot
                .checked_add(freq)
                .ok_or_else(|| Error::InvalidData(format!("frequency overflow at count {count}")))?;
        }
        let cells: Vec<(u64, u64)> = merged.into_iter().collect();
        let nonzero = cells.iter().filter(|c| c.1 > 0).count();
        if nonzero < 2 {
            return Err(Error::InvalidData(format!(
                "need at least two cells with nonzero frequency, got {nonzero}"
            )));
        }
        let total_n = cells.iter().map(|c| c.1).sum();
        Ok(Self { cells, total_n })
    }

    /// Table with frequencies for the counts `0, 1, 2, …`.
    pub fn from_frequencies(freqs: &[u64]) -> Result<Self> {
        Self::new(freqs.iter().enumerate().map(|(x, &f)| (x as u64, f)))
    }

    /// Tabulates raw observations.
    pub fn from_observations(obs: &[u64]) -> Result<Self> {
        Self::new(obs.iter().map(|&x| (x, 1)))
    }

    /// `(count, frequency)` pairs with strictly increasing counts.
    pub fn cells(&self) -> &[(u64, u64)] {
        &self.cells
    }

    pub fn total_n(&self) -> u64 {
        self.total_n
    }

    pub fn max_count(&self) -> u64 {
        self.cells.last().map_or(0, |c| c.0)
    }

    pub fn mean(&self) -> f64 {
        self.count_sum() as f64 / self.total_n as f64
    }

    /// `Σ x·f_x`, exact.
    pub fn count_sum(&self) -> u128 {
        self.cells.iter().map(|&(x, f)| x as u128 * f as u128).sum()
    }

    /// Sample variance with divisor `n - 1`.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self
            .cells
            .iter()
            .map(|&(x, f)| f as f64 * (x as f64 - mean).powi(2))
            .sum();
        ss / (self.total_n as f64 - 1.0).max(1.0)
    }
}
