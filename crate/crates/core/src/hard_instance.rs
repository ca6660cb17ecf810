//! Adversarial problem generators with analytic solutions: piecewise-linear
//! chained objectives split across the rotating-star network, and the
//! Huber-smoothed variant for the convex case.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::NodeStack;
use crate::network::{NetworkError, TimeVaryingNetwork};
use crate::problem::{ProblemInstance, SharedOracle, SubgradientOracle};

#[derive(Debug, Clone, PartialEq)]
pub enum HardInstanceError {
    PreconditionViolated(String),
    Network(NetworkError),
}

impl core::fmt::Display for HardInstanceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HardInstanceError::PreconditionViolated(msg) => {
                write!(f, "precondition violated: {msg}")
            }
            HardInstanceError::Network(e) => write!(f, "network error: {e}"),
        }
    }
}

impl From<NetworkError> for HardInstanceError {
    fn from(e: NetworkError) -> Self {
        HardInstanceError::Network(e)
    }
}

/// Node partition class in the hard construction: the first third carries the
/// odd chain links, the second third the even links, the last third nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionClass {
    V1,
    V2,
    V3,
}

/// Partition class of 1-indexed node `i` for `n` divisible by 3.
pub fn partition_class(n: usize, i: usize) -> PartitionClass {
    debug_assert!(n % 3 == 0 && i >= 1 && i <= n);
    if i <= n / 3 {
        PartitionClass::V1
    } else if i <= 2 * n / 3 {
        PartitionClass::V2
    } else {
        PartitionClass::V3
    }
}

/// `h_j(x) = |x_{j+1} - x_j|` for `1 <= j <= d-1` (1-indexed coordinates).
pub fn chain_link(j: usize, x: &[f64]) -> f64 {
    (x[j] - x[j - 1]).abs()
}

/// Canonical subgradient of `h_j`: `e_{j+1} - e_j`, `0`, or `e_j - e_{j+1}`
/// by the three-way comparison of `x_{j+1}` vs `x_j`; exact ties return `0`.
pub fn subgrad_h(j: usize, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    add_subgrad_h(j, x, 1.0, &mut g);
    g
}

fn add_subgrad_h(j: usize, x: &[f64], scale: f64, out: &mut [f64]) {
    debug_assert!(j >= 1 && j < x.len() + 1);
    let hi = x[j];
    let lo = x[j - 1];
    if hi > lo {
        out[j] += scale;
        out[j - 1] -= scale;
    } else if hi < lo {
        out[j] -= scale;
        out[j - 1] += scale;
    }
}

/// Coordinate-wise Huber sum with width `delta`.
pub fn huber(delta: f64, x: &[f64]) -> f64 {
    debug_assert!(delta > 0.0);
    let mut s = 0.0;
    for &t in x {
        let a = t.abs();
        s += if a <= delta {
            0.5 * t * t
        } else {
            delta * a - 0.5 * delta * delta
        };
    }
    s
}

/// Gradient of [`huber`]: per-coordinate clip of `t` to `[-delta, delta]`.
pub fn huber_grad(delta: f64, x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&t| t.clamp(-delta, delta))
        .collect()
}

/// One node's objective in the hard construction. `linear_weight` carries
/// the `-a<x, e_1>` term of the first partition class; `huber_weight` is
/// zero in the strongly convex variant.
struct HardOracle {
    class: PartitionClass,
    a: f64,
    d: usize,
    huber_weight: f64,
    huber_delta: f64,
}

impl HardOracle {
    fn chain_start(&self) -> Option<usize> {
        match self.class {
            PartitionClass::V1 => Some(1),
            PartitionClass::V2 => Some(2),
            PartitionClass::V3 => None,
        }
    }
}

impl SubgradientOracle for HardOracle {
    fn value(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        if let Some(start) = self.chain_start() {
            let mut j = start;
            while j <= self.d - 1 {
                v += self.a * chain_link(j, x);
                j += 2;
            }
        }
        if self.class == PartitionClass::V1 {
            v -= self.a * x[0];
        }
        if self.huber_weight != 0.0 {
            v += self.huber_weight * huber(self.huber_delta, x);
        }
        v
    }

    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = 0.0;
        }
        if let Some(start) = self.chain_start() {
            let mut j = start;
            while j <= self.d - 1 {
                add_subgrad_h(j, x, self.a, out);
                j += 2;
            }
        }
        if self.class == PartitionClass::V1 {
            out[0] -= self.a;
        }
        if self.huber_weight != 0.0 {
            for (o, &t) in out.iter_mut().zip(x) {
                *o += self.huber_weight * t.clamp(-self.huber_delta, self.huber_delta);
            }
        }
    }
}

/// Stationarity-certifying subgradient stack at the analytic solution. Every
/// chain kink is an exact tie there, so the subdifferential allows any
/// selection `u_j (e_{j+1} - e_j)` with `|u_j| <= 1`; the choice
/// `u_j = -(d-j)/d` telescopes against the first class' linear term so that
/// the per-node selections sum to `-(n a / (3d)) * ones`, exactly cancelling
/// the regularizer's gradient `n r x*` (or the Huber gradients in the convex
/// variant).
fn dual_certificate_stack(n: usize, d: usize, a: f64, huber_term: f64) -> NodeStack {
    let mut stack = NodeStack::zeros(n, d);
    let u = |j: usize| -((d - j) as f64) / d as f64;
    for i in 1..=n {
        let row = stack.row_mut(i - 1);
        let start = match partition_class(n, i) {
            PartitionClass::V1 => {
                row[0] -= a;
                Some(1)
            }
            PartitionClass::V2 => Some(2),
            PartitionClass::V3 => None,
        };
        if let Some(start) = start {
            let mut j = start;
            while j <= d - 1 {
                row[j] += a * u(j);
                row[j - 1] -= a * u(j);
                j += 2;
            }
        }
        for v in row.iter_mut() {
            *v += huber_term;
        }
    }
    stack
}

/// Strongly convex hard instance parameters, derived from `(M, r, eps, chi)`.
#[derive(Debug, Clone, Copy)]
pub struct HardParams {
    pub n: usize,
    pub d: usize,
    pub a: f64,
    /// Optimality-gap floor on the subspace missing the last coordinate.
    pub gap_floor: f64,
}

fn node_count(chi: f64) -> Result<usize, HardInstanceError> {
    if !(chi >= 3.0) {
        return Err(HardInstanceError::PreconditionViolated(
            "chi >= 3 required by the rotating-star construction".into(),
        ));
    }
    Ok(3 * libm::floor(chi / 3.0) as usize)
}

fn odd_dimension(ratio: f64) -> Result<usize, HardInstanceError> {
    let floor = libm::floor(ratio);
    if floor < 2.0 {
        return Err(HardInstanceError::PreconditionViolated(
            "target accuracy too loose: dimension rule yields d < 3".into(),
        ));
    }
    Ok(2 * floor as usize - 1)
}

/// Builds the strongly convex hard instance and its rotating-star network.
///
/// Requires `chi >= 3` and `eps <= M^2 / (576 r)`. The dimension is
/// `d = 2*floor(M / (12 sqrt(r*eps))) - 1`, the slope `a = M / (2 sqrt(d))`,
/// and the analytic solution is `x* = a/(3rd) * ones` with value
/// `p(x*) = -a^2/(18rd)`.
pub fn build_sc(
    m_lip: f64,
    r: f64,
    eps: f64,
    chi: f64,
) -> Result<(ProblemInstance, TimeVaryingNetwork, HardParams), HardInstanceError> {
    if !(m_lip > 0.0 && r > 0.0 && eps > 0.0) {
        return Err(HardInstanceError::PreconditionViolated(
            "need M > 0, r > 0, eps > 0".into(),
        ));
    }
    if eps > m_lip * m_lip / (576.0 * r) {
        return Err(HardInstanceError::PreconditionViolated(
            "eps <= M^2/(576 r) required".into(),
        ));
    }
    let n = node_count(chi)?;
    let d = odd_dimension(m_lip / (12.0 * libm::sqrt(r * eps)))?;
    let a = m_lip / (2.0 * libm::sqrt(d as f64));

    let oracles: Vec<SharedOracle> = (1..=n)
        .map(|i| {
            Arc::new(HardOracle {
                class: partition_class(n, i),
                a,
                d,
                huber_weight: 0.0,
                huber_delta: 1.0,
            }) as SharedOracle
        })
        .collect();

    let coord = a / (3.0 * r * d as f64);
    let solution = vec![coord; d];
    let value = -a * a / (18.0 * r * d as f64);
    let radius = coord * libm::sqrt(d as f64);

    let instance = ProblemInstance::new(oracles, r, m_lip, radius, d)
        .map_err(|e| HardInstanceError::PreconditionViolated(alloc::format!("{e}")))?
        .with_known_solution(solution, Some(value))
        .with_dual_certificate(dual_certificate_stack(n, d, a, 0.0));
    let network = TimeVaryingNetwork::rotating_star(n)?;
    let params = HardParams {
        n,
        d,
        a,
        gap_floor: a * a / (18.0 * r * d as f64),
    };
    Ok((instance, network, params))
}

/// Convex-case parameters: the Huber weight `c` and width `delta` on top of
/// the shared chain construction.
#[derive(Debug, Clone, Copy)]
pub struct HardParamsCvx {
    pub n: usize,
    pub d: usize,
    pub a: f64,
    pub c: f64,
    pub delta: f64,
    pub gap_floor: f64,
}

/// Builds the convex (`r = 0`) hard instance with the Huber term added to
/// every node, and its rotating-star network.
///
/// Requires `chi >= 3` and `eps <= M*R/72`. Uses `d = 2*floor(MR/(36 eps))-1`,
/// `a = M/(3 sqrt(d))`, `c = M/(9Rd)`, `delta = a/(3cd)`; the solution is
/// `x* = delta * ones` with `|x*| = R` and value `-a^2/(18cd)`.
pub fn build_cvx(
    m_lip: f64,
    radius: f64,
    eps: f64,
    chi: f64,
) -> Result<(ProblemInstance, TimeVaryingNetwork, HardParamsCvx), HardInstanceError> {
    if !(m_lip > 0.0 && radius > 0.0 && eps > 0.0) {
        return Err(HardInstanceError::PreconditionViolated(
            "need M > 0, R > 0, eps > 0".into(),
        ));
    }
    if eps > m_lip * radius / 72.0 {
        return Err(HardInstanceError::PreconditionViolated(
            "eps <= M*R/72 required".into(),
        ));
    }
    let n = node_count(chi)?;
    let d = odd_dimension(m_lip * radius / (36.0 * eps))?;
    let a = m_lip / (3.0 * libm::sqrt(d as f64));
    let c = m_lip / (9.0 * radius * d as f64);
    let delta = a / (3.0 * c * d as f64);

    let oracles: Vec<SharedOracle> = (1..=n)
        .map(|i| {
            Arc::new(HardOracle {
                class: partition_class(n, i),
                a,
                d,
                huber_weight: c,
                huber_delta: delta,
            }) as SharedOracle
        })
        .collect();

    let solution = vec![delta; d];
    let value = -a * a / (18.0 * c * d as f64);

    let instance = ProblemInstance::new(oracles, 0.0, m_lip, radius, d)
        .map_err(|e| HardInstanceError::PreconditionViolated(alloc::format!("{e}")))?
        .with_known_solution(solution, Some(value))
        .with_dual_certificate(dual_certificate_stack(n, d, a, c * delta));
    let network = TimeVaryingNetwork::rotating_star(n)?;
    let params = HardParamsCvx {
        n,
        d,
        a,
        c,
        delta,
        gap_floor: a * a / (18.0 * c * d as f64),
    };
    Ok((instance, network, params))
}
