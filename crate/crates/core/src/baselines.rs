//! Reference methods: centralized subgradient descent (also used as a
//! ground-truth solution oracle for custom instances) and the decentralized
//! subgradient method with gossip mixing.

use alloc::vec::Vec;

use crate::linalg::NodeStack;
use crate::network::{self, TimeVaryingNetwork};
use crate::problem::{ProblemError, ProblemInstance};
use crate::record::{IterationRow, RunRecord, TimeModel};

/// Step-size rule for the subgradient baselines.
#[derive(Debug, Clone, Copy)]
pub enum StepRule {
    /// `eta_t = c / sqrt(t + 1)`.
    InvSqrt { c: f64 },
    Constant(f64),
}

impl StepRule {
    pub fn eta(&self, t: usize) -> f64 {
        match *self {
            StepRule::InvSqrt { c } => c / libm::sqrt(t as f64 + 1.0),
            StepRule::Constant(c) => c,
        }
    }

    /// Standard non-smooth tuning `c = R/M` from the instance constants.
    pub fn default_for(instance: &ProblemInstance) -> StepRule {
        StepRule::InvSqrt {
            c: instance.radius / instance.lipschitz,
        }
    }
}

/// Result of a centralized run: the best-value iterate and the value of
/// every visited iterate in order.
pub struct CentralizedResult {
    pub x_best: Vec<f64>,
    pub best_value: f64,
    pub values: Vec<f64>,
}

/// Plain subgradient descent on `p(x) = mean_i f_i(x) + (r/2)|x|^2`,
/// returning the best iterate seen. With a large budget this serves as a
/// numerical solution oracle for low-dimensional instances.
pub fn centralized_subgradient(
    instance: &ProblemInstance,
    steps: usize,
    rule: StepRule,
    x0: Option<&[f64]>,
) -> Result<CentralizedResult, ProblemError> {
    let d = instance.d;
    let n = instance.n() as f64;
    let mut x: Vec<f64> = match x0 {
        Some(v) => {
            if v.len() != d {
                return Err(ProblemError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            v.to_vec()
        }
        None => alloc::vec![0.0; d],
    };
    let mut values = Vec::with_capacity(steps + 1);
    let mut best_value = instance.eval_p(&x)?;
    let mut x_best = x.clone();
    values.push(best_value);

    let mut g = alloc::vec![0.0; d];
    let mut g_i = alloc::vec![0.0; d];
    for t in 0..steps {
        g.iter_mut().for_each(|v| *v = 0.0);
        for oracle in &instance.oracles {
            oracle.subgradient(&x, &mut g_i);
            for (acc, &v) in g.iter_mut().zip(&g_i) {
                *acc += v;
            }
        }
        let eta = rule.eta(t);
        for (xi, &gi) in x.iter_mut().zip(&g) {
            *xi -= eta * (gi / n + instance.r * *xi);
        }
        let value = instance.eval_p(&x)?;
        values.push(value);
        if value < best_value {
            best_value = value;
            x_best = x.clone();
        }
    }
    Ok(CentralizedResult {
        x_best,
        best_value,
        values,
    })
}

/// Result of a decentralized run.
pub struct DSubgdResult {
    pub x_out: Vec<f64>,
    pub record: RunRecord,
}

/// Decentralized subgradient method: per round, gossip mixing
/// `x <- (I - W_k) x` followed by a local subgradient step at each node.
/// The mixing step preserves the node-average of the stack exactly.
pub fn d_subgd(
    instance: &ProblemInstance,
    net: &TimeVaryingNetwork,
    rounds: usize,
    rule: StepRule,
    time_model: TimeModel,
) -> Result<DSubgdResult, ProblemError> {
    let n = instance.n();
    let d = instance.d;
    let reference = instance
        .known_solution
        .as_ref()
        .and_then(|s| s.value);
    let mut x = NodeStack::zeros(n, d);
    let mut record = RunRecord::default();

    for t in 0..rounds {
        let w = net.gossip(t);
        let wx = w.apply_to_stack(&x);
        let mean_before = x.node_mean();
        x.axpy(-1.0, &wx);
        record.w_applications += 1;
        let mean_after = x.node_mean();
        debug_assert!(
            mean_before
                .iter()
                .zip(&mean_after)
                .all(|(a, b)| (a - b).abs() <= 1e-12),
            "mixing changed the node-average"
        );

        let eta = rule.eta(t);
        let mut g = alloc::vec![0.0; d];
        for (i, oracle) in instance.oracles.iter().enumerate() {
            let xi = x.row_mut(i);
            oracle.subgradient(xi, &mut g);
            for (v, &gi) in xi.iter_mut().zip(&g) {
                *v -= eta * (gi + instance.r * *v);
            }
        }

        let comms = (t + 1) as u64;
        let subgrads = (t + 1) as u64;
        let primal_gap = match reference {
            Some(p_star) => Some(instance.eval_p(&x.node_mean())? - p_star),
            None => None,
        };
        record.push(IterationRow {
            k: t + 1,
            comms,
            subgrads,
            model_time: time_model.elapsed(comms, subgrads),
            primal_gap,
            consensus: network::project_consensus_complement(&x).norm(),
            cert_margin: None,
        });
    }

    Ok(DSubgdResult {
        x_out: x.node_mean(),
        record,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::abs_instance;

    #[test]
    fn abs_value_converges() {
        // f = |x|, r = 0, start at 1, c = 1: best value drifts to ~0.
        let inst = abs_instance(&[0.0], 0.0, 1.0);
        let out =
            centralized_subgradient(&inst, 10_000, StepRule::InvSqrt { c: 1.0 }, Some(&[1.0]))
                .unwrap();
        assert!(out.x_best[0].abs() <= 2e-2, "x_best = {}", out.x_best[0]);
        assert!(out.best_value <= 2e-2);
    }

    #[test]
    fn zero_function_never_moves() {
        let inst = crate::problem::ProblemInstance::new(
            alloc::vec![alloc::sync::Arc::new(crate::problem::ZeroOracle) as _],
            0.0,
            1.0,
            1.0,
            2,
        )
        .unwrap();
        let out =
            centralized_subgradient(&inst, 50, StepRule::InvSqrt { c: 1.0 }, Some(&[0.3, -0.8]))
                .unwrap();
        assert_eq!(out.x_best, alloc::vec![0.3, -0.8]);
        assert!(out.values.iter().all(|&v| v == out.values[0]));
    }

    #[test]
    fn hard_instance_value_matches_analytic() {
        let (inst, _, params) = crate::hard_instance::build_sc(1.0, 0.5, 1.0 / 1296.0, 3.0).unwrap();
        let rule = StepRule::default_for(&inst);
        let out = centralized_subgradient(&inst, 200_000, rule, None).unwrap();
        let p_star = -params.gap_floor;
        assert!(
            (out.best_value - p_star).abs() <= 1e-3,
            "best {} vs {}",
            out.best_value,
            p_star
        );
    }

    #[test]
    fn single_node_dsubgd_matches_centralized() {
        // With n = 1 the gossip matrix is zero, so mixing is the identity
        // and each round is exactly one centralized subgradient step.
        let inst = abs_instance(&[0.7], 0.2, 1.0);
        let net = TimeVaryingNetwork::singleton();
        let rule = StepRule::InvSqrt { c: 0.5 };
        let dec = d_subgd(&inst, &net, 500, rule, TimeModel::default()).unwrap();
        let cen = centralized_subgradient(&inst, 500, rule, None).unwrap();
        let last = *cen.values.last().unwrap();
        let dec_value = inst.eval_p(&dec.x_out).unwrap();
        assert!((dec_value - last).abs() <= 1e-12);
    }

    #[test]
    fn zero_objective_mixing_contracts_consensus() {
        // With zero objectives only the mixing acts; the consensus residual
        // must contract by at least sqrt(1 - 1/chi) per round.
        let n = 6;
        let oracles: alloc::vec::Vec<crate::problem::SharedOracle> = (0..n)
            .map(|_| alloc::sync::Arc::new(crate::problem::ZeroOracle) as _)
            .collect();
        let inst = crate::problem::ProblemInstance::new(oracles, 0.0, 1.0, 1.0, 2).unwrap();
        let net = TimeVaryingNetwork::rotating_star(n).unwrap();
        let mut x = NodeStack::zeros(n, 2);
        for i in 0..n {
            x.row_mut(i)[0] = i as f64;
            x.row_mut(i)[1] = (i * i) as f64;
        }
        let factor = libm::sqrt(1.0 - 1.0 / net.chi());
        for t in 0..20 {
            let before = network::project_consensus_complement(&x).norm();
            let wx = net.gossip(t).apply_to_stack(&x);
            x.axpy(-1.0, &wx);
            for (i, oracle) in inst.oracles.iter().enumerate() {
                let mut g = [0.0; 2];
                oracle.subgradient(x.row(i), &mut g);
                assert_eq!(g, [0.0; 2]);
            }
            let after = network::project_consensus_complement(&x).norm();
            assert!(after <= factor * before + 1e-12);
        }
    }

    #[test]
    fn mixing_preserves_average_on_rotating_star() {
        let inst = abs_instance(&[0.1, -0.4, 0.9], 0.3, 1.0);
        let net = TimeVaryingNetwork::rotating_star(3).unwrap();
        let out = d_subgd(&inst, &net, 200, StepRule::default_for(&inst), TimeModel::default())
            .unwrap();
        assert_eq!(out.record.rows.len(), 200);
        assert_eq!(out.record.total_comms(), 200);
    }
}
