//! Coordinate-span automaton for the hard chain instance.
//!
//! In the black-box model every node's memory stays inside a coordinate
//! span `K_j = span(e_1, ..., e_j)`; local subgradient steps and gossip
//! exchanges can only grow the index `j` in a constrained way. Simulating
//! the most favorable algorithm (unbounded local steps between rounds)
//! yields a certified lower bound on the number of communication rounds
//! needed before any node can see the last coordinate.

use alloc::string::String;
use alloc::vec::Vec;

use crate::hard_instance::{partition_class, PartitionClass};
use crate::network::rotating_center;

#[derive(Debug, Clone, PartialEq)]
pub enum SpanError {
    InvalidParameter(String),
    /// The simulation ran past its iteration cap without reaching the last
    /// coordinate.
    NoProgress { rounds: usize },
}

impl core::fmt::Display for SpanError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SpanError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            SpanError::NoProgress { rounds } => {
                write!(f, "automaton stalled after {rounds} rounds")
            }
        }
    }
}

/// Largest span index reachable from `j` by a single local subgradient step
/// at a node of the given partition class.
///
/// The odd chain terms live on the first class and can only extend an odd
/// span; the even terms live on the second class and can only extend an even
/// span; third-class nodes have a zero objective and learn nothing locally.
pub fn subgradient_transition(class: PartitionClass, j: usize) -> usize {
    match class {
        PartitionClass::V1 => {
            if j == 0 {
                1
            } else if j % 2 == 1 {
                j + 1
            } else {
                j
            }
        }
        PartitionClass::V2 => {
            if j >= 2 && j % 2 == 0 {
                j + 1
            } else {
                j
            }
        }
        PartitionClass::V3 => j,
    }
}

/// Per-node span indices for an `n`-node, `d`-dimensional chain instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanState {
    n: usize,
    d: usize,
    /// Communication rounds completed so far.
    pub rounds: usize,
    /// Span index per node, `j[i] <= d`.
    pub j: Vec<usize>,
}

impl SpanState {
    pub fn new(n: usize, d: usize) -> Result<Self, SpanError> {
        if n < 3 || n % 3 != 0 {
            return Err(SpanError::InvalidParameter(
                "n must be a positive multiple of 3".into(),
            ));
        }
        if d < 3 || d % 2 == 0 {
            return Err(SpanError::InvalidParameter("d must be odd and >= 3".into()));
        }
        let mut state = SpanState {
            n,
            d,
            rounds: 0,
            j: alloc::vec![0; n],
        };
        // Unbounded local computation is free before the first round.
        state.local_closure();
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Applies local subgradient transitions at every node until no index
    /// moves, capped at `d`.
    pub fn local_closure(&mut self) {
        for i in 1..=self.n {
            let class = partition_class(self.n, i);
            let idx = &mut self.j[i - 1];
            loop {
                let next = subgradient_transition(class, *idx).min(self.d);
                if next == *idx {
                    break;
                }
                *idx = next;
            }
        }
    }

    /// One gossip exchange over the rotating star, followed by local
    /// closure. The center collects the maximum span; every leaf learns the
    /// center's span from before the exchange.
    pub fn communication_round(&mut self) {
        self.rounds += 1;
        let center = rotating_center(self.n, self.rounds).expect("validated n");
        let center_before = self.j[center - 1];
        let max_all = *self.j.iter().max().expect("non-empty");
        for i in 1..=self.n {
            if i == center {
                self.j[i - 1] = max_all;
            } else if center_before > self.j[i - 1] {
                self.j[i - 1] = center_before;
            }
        }
        self.local_closure();
    }

    pub fn max_index(&self) -> usize {
        *self.j.iter().max().expect("non-empty")
    }

    /// Upper bound on node `i`'s span index after `self.rounds` rounds:
    /// with `p = floor(3k/n)` and `q = k mod (n/3)`, first-class nodes and
    /// already-visited centers are capped at `2p+2`, everything else at
    /// `2p+1`.
    pub fn envelope_bound(&self, i: usize) -> usize {
        let k = self.rounds;
        let p = 3 * k / self.n;
        let q = k % (self.n / 3);
        let visited_center = i > 2 * self.n / 3 && i <= 2 * self.n / 3 + q + 1;
        match partition_class(self.n, i) {
            PartitionClass::V1 => 2 * p + 2,
            PartitionClass::V2 => 2 * p + 1,
            PartitionClass::V3 => {
                if visited_center {
                    2 * p + 2
                } else {
                    2 * p + 1
                }
            }
        }
    }

    /// Whether every node currently sits inside its envelope bound.
    pub fn envelope_holds(&self) -> bool {
        (1..=self.n).all(|i| self.j[i - 1] <= self.envelope_bound(i))
    }
}

/// Result of the greedy lower-bound simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachReport {
    /// First communication round at which some node's span reaches `d`.
    pub rounds: usize,
    /// Certified floor `n(d-1)/6` the simulation must not beat.
    pub floor: usize,
    /// Whether the envelope bound held at every round along the way.
    pub envelope_ok: bool,
}

impl ReachReport {
    pub fn certifies_lower_bound(&self) -> bool {
        self.rounds >= self.floor
    }
}

/// Simulates the strongest permitted algorithm (free local steps between
/// rounds) and reports when the last coordinate first becomes reachable.
pub fn rounds_to_reach_last_coordinate(n: usize, d: usize) -> Result<ReachReport, SpanError> {
    let mut state = SpanState::new(n, d)?;
    let floor = n * (d - 1) / 6;
    let mut envelope_ok = state.envelope_holds();
    let cap = 10 * n * d + 100;
    while state.max_index() < d {
        if state.rounds >= cap {
            return Err(SpanError::NoProgress {
                rounds: state.rounds,
            });
        }
        state.communication_round();
        envelope_ok &= state.envelope_holds();
    }
    Ok(ReachReport {
        rounds: state.rounds,
        floor,
        envelope_ok,
    })
}
