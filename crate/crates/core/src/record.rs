//! Per-iteration metric rows shared by the solver and the baselines.

use alloc::vec::Vec;

/// One outer iteration (or one baseline round) of metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub k: usize,
    /// Communication rounds so far.
    pub comms: u64,
    /// Subgradient calls per node so far.
    pub subgrads: u64,
    /// Model time `tau_com * comms + tau_sub * subgrads`.
    pub model_time: f64,
    /// `p(x_o^k) - p(x*)` when the reference value is known.
    pub primal_gap: Option<f64>,
    /// Consensus violation `|P x_a^k|`.
    pub consensus: f64,
    /// Margin of the zero-probe duality-gap certificate (bound minus gap);
    /// only meaningful for the primal-dual solver.
    pub cert_margin: Option<f64>,
}

/// Full time series of a run plus raw counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<IterationRow>,
    /// Gossip-matrix applications, counted individually (two per
    /// communication round for the primal-dual solver).
    pub w_applications: u64,
}

impl RunRecord {
    pub fn push(&mut self, row: IterationRow) {
        if let Some(last) = self.rows.last() {
            debug_assert!(row.comms >= last.comms && row.subgrads >= last.subgrads);
        }
        self.rows.push(row);
    }

    pub fn final_row(&self) -> Option<&IterationRow> {
        self.rows.last()
    }

    pub fn total_comms(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.comms)
    }

    pub fn total_subgrads(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.subgrads)
    }
}

/// Model-time bookkeeping constants.
#[derive(Debug, Clone, Copy)]
pub struct TimeModel {
    pub tau_com: f64,
    pub tau_sub: f64,
}

impl Default for TimeModel {
    fn default() -> Self {
        TimeModel {
            tau_com: 1.0,
            tau_sub: 1.0,
        }
    }
}

impl TimeModel {
    pub fn elapsed(&self, comms: u64, subgrads: u64) -> f64 {
        self.tau_com * comms as f64 + self.tau_sub * subgrads as f64
    }
}
