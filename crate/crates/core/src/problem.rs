//! Objective functions, subgradient oracles, and assumption checkers.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, NodeStack};

/// A deterministic subgradient selection for one local objective.
///
/// Implementations must satisfy the oracle inequality
/// `f(x') >= f(x) + <g(x), x' - x>` for every pair of points, and return
/// subgradients bounded in norm by the declared Lipschitz constant.
pub trait SubgradientOracle: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Writes the selected subgradient at `x` into `out`.
    fn subgradient(&self, x: &[f64], out: &mut [f64]);

    fn subgradient_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.subgradient(x, &mut g);
        g
    }
}

pub type SharedOracle = Arc<dyn SubgradientOracle>;

/// Oracle built from a pair of closures.
pub struct FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub value_fn: V,
    pub subgrad_fn: G,
}

impl<V, G> SubgradientOracle for FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value_fn)(x)
    }

    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        (self.subgrad_fn)(x, out)
    }
}

/// `f(x) = |x - shift|` in one dimension, canonical subgradient 0 at the kink.
pub struct AbsOracle {
    pub shift: f64,
}

impl SubgradientOracle for AbsOracle {
    fn value(&self, x: &[f64]) -> f64 {
        (x[0] - self.shift).abs()
    }

    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        let t = x[0] - self.shift;
        out[0] = if t > 0.0 {
            1.0
        } else if t < 0.0 {
            -1.0
        } else {
            0.0
        };
    }
}

/// The constant-zero objective with zero oracle.
pub struct ZeroOracle;

impl SubgradientOracle for ZeroOracle {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn subgradient(&self, _x: &[f64], out: &mut [f64]) {
        for v in out {
            *v = 0.0;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemError {
    DimensionMismatch { expected: usize, got: usize },
    InvalidParameter(String),
}

impl core::fmt::Display for ProblemError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ProblemError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            ProblemError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

/// A finite-sum problem `min (1/n) sum f_i(x) + (r/2)|x|^2` with its
/// subgradient oracles and declared constants.
#[derive(Clone)]
pub struct ProblemInstance {
    pub oracles: Vec<SharedOracle>,
    /// Regularization parameter, `>= 0`.
    pub r: f64,
    /// Lipschitz constant of every `f_i`.
    pub lipschitz: f64,
    /// Bound on the solution norm.
    pub radius: f64,
    pub d: usize,
    /// Analytic solution, when available, with its objective value.
    pub known_solution: Option<KnownSolution>,
}

#[derive(Clone, Debug)]
pub struct KnownSolution {
    pub point: Vec<f64>,
    pub value: Option<f64>,
    /// Per-node subgradients `delta_i` in `∂f_i(point)` certifying
    /// stationarity: `sum_i delta_i + n r point = 0`. The oracles' canonical
    /// tie-breaking selections generally do not satisfy this, so instances
    /// with analytic solutions carry the certifying selections explicitly.
    pub dual_certificate: Option<NodeStack>,
}

impl ProblemInstance {
    pub fn new(
        oracles: Vec<SharedOracle>,
        r: f64,
        lipschitz: f64,
        radius: f64,
        d: usize,
    ) -> Result<Self, ProblemError> {
        if oracles.is_empty() {
            return Err(ProblemError::InvalidParameter("n must be >= 1".into()));
        }
        if d == 0 {
            return Err(ProblemError::InvalidParameter("d must be >= 1".into()));
        }
        if !(lipschitz > 0.0) {
            return Err(ProblemError::InvalidParameter("M must be > 0".into()));
        }
        if !(radius > 0.0) {
            return Err(ProblemError::InvalidParameter("R must be > 0".into()));
        }
        if !(r >= 0.0) {
            return Err(ProblemError::InvalidParameter("r must be >= 0".into()));
        }
        Ok(ProblemInstance {
            oracles,
            r,
            lipschitz,
            radius,
            d,
            known_solution: None,
        })
    }

    pub fn with_known_solution(mut self, point: Vec<f64>, value: Option<f64>) -> Self {
        self.known_solution = Some(KnownSolution {
            point,
            value,
            dual_certificate: None,
        });
        self
    }

    /// Attaches the stationarity-certifying subgradient stack to an already
    /// recorded solution.
    pub fn with_dual_certificate(mut self, certificate: NodeStack) -> Self {
        let sol = self
            .known_solution
            .as_mut()
            .expect("set a known solution before its certificate");
        sol.dual_certificate = Some(certificate);
        self
    }

    pub fn n(&self) -> usize {
        self.oracles.len()
    }

    /// `p(x) = (1/n) sum f_i(x) + (r/2)|x|^2`.
    pub fn eval_p(&self, x: &[f64]) -> Result<f64, ProblemError> {
        if x.len() != self.d {
            return Err(ProblemError::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let mut sum = 0.0;
        for oracle in &self.oracles {
            sum += oracle.value(x);
        }
        Ok(sum / self.n() as f64 + 0.5 * self.r * linalg::norm_sq(x))
    }

    /// `F(x) = sum f_i(x_i) + (r_x/2)|x|^2`, the stacked objective with the
    /// split regularizer supplied by the caller.
    pub fn eval_f_stacked(&self, x: &NodeStack, r_x: f64) -> Result<f64, ProblemError> {
        if x.d() != self.d {
            return Err(ProblemError::DimensionMismatch {
                expected: self.d,
                got: x.d(),
            });
        }
        if x.n() != self.n() {
            return Err(ProblemError::DimensionMismatch {
                expected: self.n(),
                got: x.n(),
            });
        }
        let mut sum = 0.0;
        for (i, oracle) in self.oracles.iter().enumerate() {
            sum += oracle.value(x.row(i));
        }
        Ok(sum + 0.5 * r_x * x.norm_sq())
    }

    /// Stacked oracle subgradients at `x`, one row per node.
    pub fn stacked_subgradient(&self, x: &NodeStack) -> NodeStack {
        let mut g = NodeStack::zeros(x.n(), x.d());
        for (i, oracle) in self.oracles.iter().enumerate() {
            oracle.subgradient(x.row(i), g.row_mut(i));
        }
        g
    }

    /// Mean oracle value `(1/n) sum f_i(x)` without the regularizer.
    pub fn eval_f_bar(&self, x: &[f64]) -> Result<f64, ProblemError> {
        if x.len() != self.d {
            return Err(ProblemError::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let mut sum = 0.0;
        for oracle in &self.oracles {
            sum += oracle.value(x);
        }
        Ok(sum / self.n() as f64)
    }

    /// Same instance with the regularization parameter replaced.
    pub fn with_regularization(&self, r: f64) -> ProblemInstance {
        let mut inst = self.clone();
        inst.r = r;
        inst.known_solution = None;
        inst
    }
}

/// Outcome of a sampled assumption check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    /// Worst margin seen; non-negative means every sampled pair passed.
    pub worst_margin: f64,
    /// The pair that produced the worst margin, if any violation occurred.
    pub violation: Option<(Vec<f64>, Vec<f64>)>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks the oracle inequality `f(x') - f(x) - <g(x), x'-x> >= -tol` on the
/// given sample pairs.
pub fn check_oracle_validity(
    oracle: &dyn SubgradientOracle,
    sample_pairs: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
) -> CheckReport {
    let mut worst = f64::INFINITY;
    let mut violation = None;
    for (x, x_prime) in sample_pairs {
        let g = oracle.subgradient_vec(x);
        let mut inner = 0.0;
        for j in 0..x.len() {
            inner += g[j] * (x_prime[j] - x[j]);
        }
        let margin = oracle.value(x_prime) - oracle.value(x) - inner;
        if margin < worst {
            worst = margin;
            if margin < -tol {
                violation = Some((x.clone(), x_prime.clone()));
            }
        }
    }
    CheckReport {
        worst_margin: worst,
        violation,
    }
}

/// Checks `|f(x) - f(x')| <= M|x - x'| + tol` and `|g(x)| <= M + tol` on the
/// given sample pairs.
pub fn check_lipschitz(
    oracle: &dyn SubgradientOracle,
    lipschitz: f64,
    sample_pairs: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
) -> CheckReport {
    let mut worst = f64::INFINITY;
    let mut violation = None;
    for (x, x_prime) in sample_pairs {
        let mut diff_sq = 0.0;
        for j in 0..x.len() {
            let t = x[j] - x_prime[j];
            diff_sq += t * t;
        }
        let value_margin =
            lipschitz * libm::sqrt(diff_sq) - (oracle.value(x) - oracle.value(x_prime)).abs();
        let grad_margin = lipschitz - linalg::norm(&oracle.subgradient_vec(x));
        let margin = if value_margin < grad_margin {
            value_margin
        } else {
            grad_margin
        };
        if margin < worst {
            worst = margin;
            if margin < -tol {
                violation = Some((x.clone(), x_prime.clone()));
            }
        }
    }
    CheckReport {
        worst_margin: worst,
        violation,
    }
}

/// Convenience: `n` copies of `f(x) = |x - shift_i|` in one dimension.
pub fn abs_instance(shifts: &[f64], r: f64, radius: f64) -> ProblemInstance {
    let oracles: Vec<SharedOracle> = shifts
        .iter()
        .map(|&s| Arc::new(AbsOracle { shift: s }) as SharedOracle)
        .collect();
    ProblemInstance::new(oracles, r, 1.0, radius, 1)
        .unwrap_or_else(|e| panic!("{}", format!("abs_instance: {e}")))
}
