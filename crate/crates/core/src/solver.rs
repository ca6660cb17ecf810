//! The optimal primal-dual method with error feedback and an inner
//! subgradient loop, its parameter schedules, budget rules, the convex-case
//! reduction, and the duality-gap certificate.

use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::NodeStack;
use crate::network::{self, NetworkError, TimeVaryingNetwork};
use crate::problem::{ProblemError, ProblemInstance};
use crate::record::{IterationRow, RunRecord, TimeModel};

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    InvalidParameter(String),
    /// An iterate stopped being finite at the given outer iteration.
    NonFinite { k: usize },
    Problem(ProblemError),
    Network(NetworkError),
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            SolverError::NonFinite { k } => write!(f, "non-finite iterate at iteration {k}"),
            SolverError::Problem(e) => write!(f, "{e}"),
            SolverError::Network(e) => write!(f, "{e}"),
        }
    }
}

impl From<ProblemError> for SolverError {
    fn from(e: ProblemError) -> Self {
        SolverError::Problem(e)
    }
}

impl From<NetworkError> for SolverError {
    fn from(e: NetworkError) -> Self {
        SolverError::Network(e)
    }
}

/// Step-size and averaging schedule. The base constants split the
/// regularizer as `r_x + 1/r_yz = r`; the per-iteration values follow the
/// `alpha_k = 3/(k+3)` ramp.
#[derive(Debug, Clone, Copy)]
pub struct Schedule {
    pub r: f64,
    pub chi: f64,
    /// Outer iteration count `K`.
    pub outer: usize,
    /// Inner loop length `T`.
    pub inner: usize,
    pub r_x: f64,
    pub r_yz: f64,
    pub tau_x: f64,
    pub eta_y: f64,
    pub eta_z: f64,
}

impl Schedule {
    /// `alpha_k = 3/(k+3)`, defined up to `k = K` (the error-feedback update
    /// at the last iteration reads one step ahead).
    pub fn alpha(&self, k: usize) -> f64 {
        3.0 / (k as f64 + 3.0)
    }

    pub fn gamma(&self, k: usize) -> f64 {
        (k as f64 + 2.0) / (k as f64 + 3.0)
    }

    pub fn beta(&self, _k: usize) -> f64 {
        self.r_x
    }

    pub fn tau_x_k(&self, k: usize) -> f64 {
        self.tau_x / self.alpha(k)
    }

    pub fn eta_x_k(&self, k: usize) -> f64 {
        1.0 / (self.tau_x_k(k) * self.inner as f64)
    }

    pub fn eta_y_k(&self, k: usize) -> f64 {
        self.eta_y / self.alpha(k)
    }

    pub fn eta_z_k(&self, k: usize) -> f64 {
        self.eta_z / self.alpha(k)
    }

    pub fn sigma(&self, k: usize) -> f64 {
        let t = self.tau_x_k(k);
        t / (2.0 * t + self.beta(k))
    }

    pub fn theta_z(&self, _k: usize) -> f64 {
        1.0 / (2.0 * self.r_yz)
    }

    /// Averaging weight `lambda_k` for `k` in `1..=K`.
    pub fn lambda(&self, k: usize) -> f64 {
        debug_assert!(k >= 1 && k <= self.outer);
        let inv = |k: usize| 1.0 / self.alpha(k);
        if k == self.outer {
            inv(k - 1) * inv(k - 1)
        } else {
            inv(k - 1) * inv(k - 1) + inv(k) - inv(k) * inv(k)
        }
    }
}

/// Builds the schedule for the strongly convex case (`r > 0`).
pub fn make_schedule(r: f64, chi: f64, outer: usize, inner: usize) -> Result<Schedule, SolverError> {
    if !(r > 0.0) {
        return Err(SolverError::InvalidParameter(
            "r must be > 0 (use solve_convex for r = 0)".into(),
        ));
    }
    if !(chi >= 1.0) {
        return Err(SolverError::InvalidParameter("chi must be >= 1".into()));
    }
    if outer == 0 || inner == 0 {
        return Err(SolverError::InvalidParameter("K and T must be >= 1".into()));
    }
    let r_x = 2.0 * r / 3.0;
    let r_yz = 3.0 / r;
    Ok(Schedule {
        r,
        chi,
        outer,
        inner,
        r_x,
        r_yz,
        tau_x: 0.5 * r_x,
        eta_y: 1.0 / (4.0 * r_yz),
        eta_z: 1.0 / (10.0 * r_yz * chi * chi),
    })
}

/// Communication and subgradient budgets sufficient for precision `eps` in
/// the strongly convex case: `K = ceil(chi*M*sqrt(636/(r*eps)))` and
/// `T = ceil(216*M^2/(r*eps*K))`.
pub fn choose_budget(
    instance: &ProblemInstance,
    chi: f64,
    eps: f64,
) -> Result<(usize, usize), SolverError> {
    if !(eps > 0.0) {
        return Err(SolverError::InvalidParameter("eps must be > 0".into()));
    }
    if !(instance.r > 0.0) {
        return Err(SolverError::InvalidParameter("choose_budget needs r > 0".into()));
    }
    let m = instance.lipschitz;
    let re = instance.r * eps;
    let k = libm::ceil(chi * m * libm::sqrt(636.0 / re)) as usize;
    let k = k.max(1);
    let t = libm::ceil(216.0 * m * m / (re * k as f64)) as usize;
    Ok((k, t.max(1)))
}

/// All per-iteration vectors of the outer loop plus counters.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub k: usize,
    pub x: NodeStack,
    pub x_prev: NodeStack,
    pub x_tilde: NodeStack,
    pub y: NodeStack,
    pub z: NodeStack,
    pub m: NodeStack,
    pub x_bar: NodeStack,
    pub y_bar: NodeStack,
    pub z_bar: NodeStack,
    pub accum_x: NodeStack,
    pub accum_y: NodeStack,
    pub accum_z: NodeStack,
    pub accum_lambda: f64,
    pub comms: u64,
    pub subgrads_per_node: u64,
    pub w_applications: u64,
    /// Largest relative residual of the closed-form inner update seen so far.
    pub max_inner_residual: f64,
}

impl SolverState {
    fn zero(n: usize, d: usize) -> Self {
        // All iterates start at zero; the auxiliary sequences are seeded from
        // the start point so that every combination at k = 0 is well-defined.
        let z = NodeStack::zeros(n, d);
        SolverState {
            k: 0,
            x: z.clone(),
            x_prev: z.clone(),
            x_tilde: z.clone(),
            y: z.clone(),
            z: z.clone(),
            m: z.clone(),
            x_bar: z.clone(),
            y_bar: z.clone(),
            z_bar: z.clone(),
            accum_x: z.clone(),
            accum_y: z.clone(),
            accum_z: z,
            accum_lambda: 0.0,
            comms: 0,
            subgrads_per_node: 0,
            w_applications: 0,
            max_inner_residual: 0.0,
        }
    }

    /// Weighted-average triple `(x_a, y_a, z_a)` over the iterations so far.
    pub fn averages(&self) -> (NodeStack, NodeStack, NodeStack) {
        let scale = 1.0 / self.accum_lambda;
        let mut x = self.accum_x.clone();
        let mut y = self.accum_y.clone();
        let mut z = self.accum_z.clone();
        x.scale(scale);
        y.scale(scale);
        z.scale(scale);
        (x, y, z)
    }

    /// Node-mean of the averaged primal iterate.
    pub fn output(&self) -> Vec<f64> {
        let (x_a, _, _) = self.averages();
        x_a.node_mean()
    }
}

/// Closed-form inner subgradient loop: starting from `x_k`, performs `inner`
/// implicit proximal-subgradient steps against the fresh dual iterate
/// `y_next`. Returns the last iterate, the running average, and the largest
/// relative residual of the implicit update equation.
pub fn inner_loop(
    instance: &ProblemInstance,
    x_k: &NodeStack,
    y_next: &NodeStack,
    eta_x: f64,
    beta: f64,
    tau_x_k: f64,
    inner: usize,
) -> (NodeStack, NodeStack, f64) {
    let denom = 1.0 + eta_x * (beta + tau_x_k);
    let mut x_cur = x_k.clone();
    let mut x_avg = NodeStack::zeros(x_k.n(), x_k.d());
    let mut max_residual = 0.0f64;
    for _ in 0..inner {
        let g = instance.stacked_subgradient(&x_cur);
        let mut x_next = x_cur.clone();
        x_next.axpy(-eta_x, &g);
        x_next.axpy(eta_x, y_next);
        x_next.axpy(eta_x * tau_x_k, x_k);
        x_next.scale(1.0 / denom);

        // Residual of the implicit equation the closed form solves:
        // x_next + eta*(g + beta*x_next - y + tau*(x_next - x_k)) - x_cur = 0
        let mut res = x_next.clone();
        res.axpy(eta_x, &g);
        res.axpy(eta_x * beta, &x_next);
        res.axpy(-eta_x, y_next);
        res.axpy(eta_x * tau_x_k, &x_next);
        res.axpy(-eta_x * tau_x_k, x_k);
        res.axpy(-1.0, &x_cur);
        let scale = 1.0f64.max(x_cur.norm() + x_next.norm());
        let rel = res.norm() / scale;
        if rel > max_residual {
            max_residual = rel;
        }

        x_avg.axpy(1.0, &x_next);
        x_cur = x_next;
    }
    x_avg.scale(1.0 / inner as f64);
    (x_cur, x_avg, max_residual)
}

/// Optional extras for a run: model-time constants and a reference optimal
/// value for gap reporting.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunSettings {
    pub time_model: TimeModel,
    pub reference_value: Option<f64>,
}

impl RunSettings {
    fn default_with_reference(instance: &ProblemInstance) -> Self {
        RunSettings {
            time_model: TimeModel::default(),
            reference_value: instance
                .known_solution
                .as_ref()
                .and_then(|s| s.value),
        }
    }
}

/// Step-wise driver for the outer loop, so callers can record metrics or
/// inspect invariants at every iteration.
pub struct Solver<'a> {
    pub instance: &'a ProblemInstance,
    pub network: &'a TimeVaryingNetwork,
    pub schedule: Schedule,
    pub settings: RunSettings,
    pub state: SolverState,
    pub record: RunRecord,
}

impl<'a> Solver<'a> {
    pub fn new(
        instance: &'a ProblemInstance,
        network: &'a TimeVaryingNetwork,
        schedule: Schedule,
        settings: RunSettings,
    ) -> Result<Self, SolverError> {
        if network.n() != instance.n() {
            return Err(SolverError::InvalidParameter(
                "network size does not match instance".into(),
            ));
        }
        Ok(Solver {
            instance,
            network,
            schedule,
            settings,
            state: SolverState::zero(instance.n(), instance.d),
            record: RunRecord::default(),
        })
    }

    pub fn done(&self) -> bool {
        self.state.k >= self.schedule.outer
    }

    /// One outer iteration: dual extrapolation, a single gossip exchange,
    /// error-feedback update, the inner subgradient loop, and averaging.
    pub fn step(&mut self) -> Result<(), SolverError> {
        let sched = &self.schedule;
        let st = &mut self.state;
        let k = st.k;
        debug_assert!(k < sched.outer);

        let alpha = sched.alpha(k);
        let gamma = sched.gamma(k);

        // Dual combinations and the shared gradient of G.
        let uy = NodeStack::lin_comb(alpha, &st.y, 1.0 - alpha, &st.y_bar);
        let uz = NodeStack::lin_comb(alpha, &st.z, 1.0 - alpha, &st.z_bar);
        // g_y^k = g_z^k = r_yz * (uy + uz)
        let g = NodeStack::lin_comb(sched.r_yz, &uy, sched.r_yz, &uz);

        // One communication round carries both gossip products: the pair
        // (g_z, g_z + m) is exchanged under the same W_k.
        let w = self.network.gossip(k);
        let gz_tilde = w.apply_to_stack(&g);
        let mut g_plus_m = g.clone();
        g_plus_m.axpy(1.0, &st.m);
        let gz_hat = w.apply_to_stack(&g_plus_m);
        st.comms += 1;
        st.w_applications += 2;

        // Momentum term first; the y-update consumes it.
        let mut x_hat = st.x.clone();
        x_hat.axpy(gamma, &st.x_tilde);
        x_hat.axpy(-gamma, &st.x_prev);

        let mut y_next = st.y.clone();
        y_next.axpy(-sched.eta_y_k(k), &g);
        y_next.axpy(-sched.eta_y_k(k), &x_hat);

        let mut z_next = st.z.clone();
        z_next.axpy(-sched.eta_z_k(k), &gz_hat);

        let mut y_bar_next = uy.clone();
        y_bar_next.axpy(alpha, &y_next);
        y_bar_next.axpy(-alpha, &st.y);

        let mut z_bar_next = uz;
        z_bar_next.axpy(-sched.theta_z(k), &gz_tilde);

        // m^{k+1} = (eta_z^k / eta_z^{k+1}) (m^k + g_z^k - g_hat_z^k)
        let ratio = sched.eta_z_k(k) / sched.eta_z_k(k + 1);
        let mut m_next = st.m.clone();
        m_next.axpy(1.0, &g);
        m_next.axpy(-1.0, &gz_hat);
        m_next.scale(ratio);

        let (x_last, x_tilde_next, residual) = inner_loop(
            self.instance,
            &st.x,
            &y_next,
            sched.eta_x_k(k),
            sched.beta(k),
            sched.tau_x_k(k),
            sched.inner,
        );
        st.subgrads_per_node += sched.inner as u64;
        if residual > st.max_inner_residual {
            st.max_inner_residual = residual;
        }

        let sigma = sched.sigma(k);
        let x_next = NodeStack::lin_comb(sigma, &x_last, 1.0 - sigma, &x_tilde_next);

        let mut x_bar_next = st.x_bar.clone();
        x_bar_next.scale(1.0 - alpha);
        x_bar_next.axpy(alpha, &x_tilde_next);

        if !(x_next.is_finite() && y_next.is_finite() && z_next.is_finite() && m_next.is_finite()) {
            return Err(SolverError::NonFinite { k });
        }

        st.x_prev = core::mem::replace(&mut st.x, x_next);
        st.x_tilde = x_tilde_next;
        st.y = y_next;
        st.z = z_next;
        st.m = m_next;
        st.x_bar = x_bar_next;
        st.y_bar = y_bar_next;
        st.z_bar = z_bar_next;

        let lambda = sched.lambda(k + 1);
        st.accum_x.axpy(lambda, &st.x_bar);
        st.accum_y.axpy(lambda, &st.y_bar);
        st.accum_z.axpy(lambda, &st.z_bar);
        st.accum_lambda += lambda;
        st.k = k + 1;

        self.push_record_row()?;
        Ok(())
    }

    fn push_record_row(&mut self) -> Result<(), SolverError> {
        let st = &self.state;
        let (x_a, y_a, z_a) = st.averages();
        let x_o = x_a.node_mean();
        let primal_gap = match self.settings.reference_value {
            Some(p_star) => Some(self.instance.eval_p(&x_o)? - p_star),
            None => None,
        };
        let consensus = network::project_consensus_complement(&x_a).norm();
        // Informational zero-probe certificate margin at the current horizon.
        let gap0 = self.zero_probe_gap(&x_a, &y_a, &z_a)?;
        let bound0 = certificate_bound(
            self.instance,
            &self.schedule,
            st.k,
            &NodeStack::zeros(x_a.n(), x_a.d()),
            &NodeStack::zeros(x_a.n(), x_a.d()),
            &NodeStack::zeros(x_a.n(), x_a.d()),
        );
        let row = IterationRow {
            k: st.k,
            comms: st.comms,
            subgrads: st.subgrads_per_node,
            model_time: self
                .settings
                .time_model
                .elapsed(st.comms, st.subgrads_per_node),
            primal_gap,
            consensus,
            cert_margin: Some(bound0 - gap0),
        };
        self.record.push(row);
        self.record.w_applications = st.w_applications;
        Ok(())
    }

    fn zero_probe_gap(
        &self,
        x_a: &NodeStack,
        y_a: &NodeStack,
        z_a: &NodeStack,
    ) -> Result<f64, SolverError> {
        let zero = NodeStack::zeros(x_a.n(), x_a.d());
        let lhs = eval_q(self.instance, &self.schedule, x_a, &zero, &zero)?;
        let rhs = eval_q(self.instance, &self.schedule, &zero, y_a, z_a)?;
        Ok(lhs - rhs)
    }
}

/// `Q(x,y,z) = F(x) - <y,x> - (r_yz/2)|y+z|^2` with the schedule's split
/// regularizers.
pub fn eval_q(
    instance: &ProblemInstance,
    schedule: &Schedule,
    x: &NodeStack,
    y: &NodeStack,
    z: &NodeStack,
) -> Result<f64, SolverError> {
    let f = instance.eval_f_stacked(x, schedule.r_x)?;
    let yz = NodeStack::lin_comb(1.0, y, 1.0, z);
    Ok(f - y.dot(x) - 0.5 * schedule.r_yz * yz.norm_sq())
}

/// Result of a full run.
pub struct SolveOutcome {
    pub x_out: Vec<f64>,
    pub record: RunRecord,
    pub averages: (NodeStack, NodeStack, NodeStack),
    pub schedule: Schedule,
    pub max_inner_residual: f64,
}

/// Runs the full primal-dual method for `K` outer iterations with inner
/// length `T` on a strongly convex instance.
pub fn solve_strongly_convex(
    instance: &ProblemInstance,
    network: &TimeVaryingNetwork,
    outer: usize,
    inner: usize,
    settings: Option<RunSettings>,
) -> Result<SolveOutcome, SolverError> {
    let settings = settings.unwrap_or_else(|| RunSettings::default_with_reference(instance));
    let schedule = make_schedule(instance.r, network.chi(), outer, inner)?;
    let mut solver = Solver::new(instance, network, schedule, settings)?;
    while !solver.done() {
        solver.step()?;
    }
    Ok(SolveOutcome {
        x_out: solver.state.output(),
        record: solver.record,
        averages: solver.state.averages(),
        schedule,
        max_inner_residual: solver.state.max_inner_residual,
    })
}

/// Convex-case reduction: regularizes with `r = eps/R^2`, solves the
/// strongly convex problem to precision `eps/2`, and returns its output,
/// which is `eps`-optimal for the unregularized objective.
pub fn solve_convex(
    instance: &ProblemInstance,
    network: &TimeVaryingNetwork,
    eps: f64,
    settings: Option<RunSettings>,
) -> Result<SolveOutcome, SolverError> {
    if !(eps > 0.0) {
        return Err(SolverError::InvalidParameter("eps must be > 0".into()));
    }
    if instance.r != 0.0 {
        return Err(SolverError::InvalidParameter(
            "solve_convex expects r = 0".into(),
        ));
    }
    let r = eps / (instance.radius * instance.radius);
    let regularized = instance.with_regularization(r);
    let (outer, inner) = choose_budget(&regularized, network.chi(), eps / 2.0)?;
    solve_strongly_convex(&regularized, network, outer, inner, settings)
}

/// Right-hand side of the duality-gap certificate for a probe `(x,y,z)`:
/// `(2/K^2)(r|x|^2 + (18/r)|y|^2 + (45 chi^2/r)|z|^2) + 72 n M^2/(r K T)`.
pub fn certificate_bound(
    instance: &ProblemInstance,
    schedule: &Schedule,
    outer: usize,
    x: &NodeStack,
    y: &NodeStack,
    z: &NodeStack,
) -> f64 {
    let r = schedule.r;
    let chi = schedule.chi;
    let m = instance.lipschitz;
    let n = instance.n() as f64;
    let kk = outer as f64;
    2.0 / (kk * kk)
        * (r * x.norm_sq() + 18.0 / r * y.norm_sq() + 45.0 * chi * chi / r * z.norm_sq())
        + 72.0 * n * m * m / (r * kk * schedule.inner as f64)
}

/// One probe evaluation of the certificate.
#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub gap: f64,
    pub bound: f64,
}

impl ProbeResult {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound
    }
}

/// Checks the duality-gap certificate on each probe. Probe `z` components
/// are projected onto the consensus complement first.
pub fn duality_gap_certificate(
    instance: &ProblemInstance,
    schedule: &Schedule,
    averages: &(NodeStack, NodeStack, NodeStack),
    probes: &[(NodeStack, NodeStack, NodeStack)],
) -> Result<Vec<ProbeResult>, SolverError> {
    let (x_a, y_a, z_a) = averages;
    let mut results = Vec::with_capacity(probes.len());
    for (px, py, pz) in probes {
        let pz = network::project_consensus_complement(pz);
        let lhs = eval_q(instance, schedule, x_a, py, &pz)?;
        let rhs = eval_q(instance, schedule, px, y_a, z_a)?;
        let bound = certificate_bound(instance, schedule, schedule.outer, px, py, &pz);
        results.push(ProbeResult {
            gap: lhs - rhs,
            bound,
        });
    }
    Ok(results)
}

/// The saddle probe built from a known solution: `w* = (x*,...,x*)`,
/// `y* = Delta* + r_x w*`, `z* = -r w* - Delta*` with `Delta*` the stacked
/// subgradients at `x*` — the solution's stationarity certificate when one
/// is recorded (the oracles' own tie-breaking selections usually do not
/// certify stationarity, which would shift the probe off the saddle), else
/// the oracle selections.
pub fn saddle_probe(
    instance: &ProblemInstance,
    schedule: &Schedule,
) -> Option<(NodeStack, NodeStack, NodeStack)> {
    let sol = instance.known_solution.as_ref()?;
    let n = instance.n();
    let w_star = NodeStack::consensus(n, &sol.point);
    let delta = match &sol.dual_certificate {
        Some(cert) => cert.clone(),
        None => instance.stacked_subgradient(&w_star),
    };
    let mut y_star = delta.clone();
    y_star.axpy(schedule.r_x, &w_star);
    let mut z_star = delta;
    z_star.scale(-1.0);
    z_star.axpy(-schedule.r, &w_star);
    Some((w_star, y_star, z_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::abs_instance;

    #[test]
    fn schedule_base_constants() {
        // r=3, chi=2 -> r_x=2, r_yz=1, tau_x=1, eta_y=0.25, eta_z=0.025,
        // theta_z=0.5, beta=2
        let s = make_schedule(3.0, 2.0, 10, 5).unwrap();
        assert_eq!(s.r_x, 2.0);
        assert_eq!(s.r_yz, 1.0);
        assert_eq!(s.tau_x, 1.0);
        assert_eq!(s.eta_y, 0.25);
        assert_eq!(s.eta_z, 0.025);
        assert_eq!(s.theta_z(0), 0.5);
        assert_eq!(s.beta(0), 2.0);
        // alpha_0 = 1, gamma_0 = 2/3
        assert_eq!(s.alpha(0), 1.0);
        assert!((s.gamma(0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_lambda_small_k() {
        // K=2: lambda_2 = (4/3)^2 = 16/9; lambda_1 = 1 + 4/3 - 16/9 = 5/9
        let s = make_schedule(1.0, 1.0, 2, 1).unwrap();
        assert!((s.lambda(2) - 16.0 / 9.0).abs() < 1e-15);
        assert!((s.lambda(1) - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_lambda_nonnegative() {
        let s = make_schedule(0.3, 6.0, 500, 7).unwrap();
        for k in 1..=500 {
            assert!(s.lambda(k) >= 0.0, "lambda_{k} < 0");
        }
    }

    #[test]
    fn make_schedule_rejects_zero_r() {
        assert!(make_schedule(0.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn budget_arithmetic() {
        // M=1, r=1, chi=1, eps=1 -> K = ceil(sqrt(636)) = 26, T = ceil(216/26) = 9
        let inst = abs_instance(&[0.0], 1.0, 1.0);
        let (k, t) = choose_budget(&inst, 1.0, 1.0).unwrap();
        assert_eq!(k, 26);
        assert_eq!(t, 9);
        // K*T >= 216 M^2/(r eps) by construction
        assert!(k * t >= 216);
        // halving eps multiplies K by sqrt(2) up to rounding
        let (k2, _) = choose_budget(&inst, 1.0, 0.5).unwrap();
        assert!((k2 as f64 / k as f64 - core::f64::consts::SQRT_2).abs() < 0.1);
    }

    #[test]
    fn inner_loop_fixed_point_at_origin() {
        // T=1, zero oracle, y = 0, x^k = 0 -> stays at 0
        let inst = crate::problem::ProblemInstance::new(
            alloc::vec![alloc::sync::Arc::new(crate::problem::ZeroOracle) as _],
            1.0,
            1.0,
            1.0,
            1,
        )
        .unwrap();
        let zero = NodeStack::zeros(1, 1);
        let (last, avg, res) = inner_loop(&inst, &zero, &zero, 1.0, 1.0, 1.0, 1);
        assert_eq!(last.row(0), &[0.0]);
        assert_eq!(avg.row(0), &[0.0]);
        assert!(res <= 1e-12);
    }

    #[test]
    fn inner_loop_scalar_step() {
        // d=1, n=1, f(x) = x so g = 1 everywhere; eta=1, beta=1, tau=1,
        // x^k = 0, y = 0 -> x^{k,1} = -1/3
        let inst = crate::problem::ProblemInstance::new(
            alloc::vec![alloc::sync::Arc::new(crate::problem::FnOracle {
                value_fn: |x: &[f64]| x[0],
                subgrad_fn: |_: &[f64], out: &mut [f64]| out[0] = 1.0,
            }) as _],
            1.0,
            1.0,
            1.0,
            1,
        )
        .unwrap();
        let zero = NodeStack::zeros(1, 1);
        let (last, _, res) = inner_loop(&inst, &zero, &zero, 1.0, 1.0, 1.0, 1);
        assert!((last.row(0)[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!(res <= 1e-12);
    }

    #[test]
    fn first_iteration_from_zero_keeps_duals_zero() {
        // With zero input, lines 4-6 produce zero dual gradients, so z^1 = 0
        // and m^1 = 0.
        let inst = abs_instance(&[1.0, -1.0, 0.0], 1.0, 1.0);
        let net = TimeVaryingNetwork::rotating_star(3).unwrap();
        let sched = make_schedule(1.0, net.chi(), 4, 2).unwrap();
        let mut solver = Solver::new(&inst, &net, sched, RunSettings::default()).unwrap();
        solver.step().unwrap();
        assert!(solver.state.z.norm() == 0.0);
        assert!(solver.state.m.norm() == 0.0);
        assert!(solver.state.y.norm() == 0.0);
        // The inner loop does move the primal iterate off the origin.
        assert!(solver.state.x.norm() > 0.0);
    }

    #[test]
    fn single_node_scalar_problem_converges() {
        // n=1, f = |.|, r=1: minimizer of |x| + x^2/2 is 0.
        let inst = abs_instance(&[0.0], 1.0, 1.0);
        let net = TimeVaryingNetwork::singleton();
        let out = solve_strongly_convex(&inst, &net, 200, 50, None).unwrap();
        assert!(out.x_out[0].abs() <= 1e-2, "x_o = {}", out.x_out[0]);
        assert_eq!(out.record.total_comms(), 200);
        assert_eq!(out.record.total_subgrads(), 200 * 50);
    }

    #[test]
    fn schedule_error_feedback_ratio() {
        // eta_z^k / eta_z^{k+1} = alpha_{k+1}/alpha_k = (k+3)/(k+4)
        let s = make_schedule(0.7, 5.0, 100, 3).unwrap();
        for k in 0..100 {
            let ratio = s.eta_z_k(k) / s.eta_z_k(k + 1);
            let expected = (k as f64 + 3.0) / (k as f64 + 4.0);
            assert!((ratio - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn convex_reduction_regularizes_with_eps_over_r_squared() {
        // eps = 0.1, R = 2 -> internal r = 0.025
        let inst = abs_instance(&[0.3], 0.0, 2.0);
        let net = TimeVaryingNetwork::singleton();
        let out = solve_convex(&inst, &net, 0.1, None).unwrap();
        assert_eq!(out.schedule.r, 0.025);
    }

    #[test]
    fn convex_reduction_on_asymmetric_instance() {
        // Shifted abs objectives so the iterates actually move: f_bar has
        // minimum 0.6 at x = 0. The regularized run must land within eps.
        let inst = abs_instance(&[0.9, -0.9, 0.0], 0.0, 1.0);
        let net = TimeVaryingNetwork::rotating_star(3).unwrap();
        let out = solve_convex(&inst, &net, 0.3, None).unwrap();
        let f_bar = inst.eval_f_bar(&out.x_out).unwrap();
        assert!(f_bar - 0.6 <= 0.3, "f_bar = {f_bar}");
        assert!(out.x_out[0].abs() > 0.0 || f_bar == 0.6);
    }

    #[test]
    fn deterministic_reruns() {
        let inst = abs_instance(&[0.4, -0.7, 1.1], 0.5, 2.0);
        let net = TimeVaryingNetwork::rotating_star(3).unwrap();
        let a = solve_strongly_convex(&inst, &net, 30, 4, None).unwrap();
        let b = solve_strongly_convex(&inst, &net, 30, 4, None).unwrap();
        assert_eq!(a.x_out, b.x_out);
        assert_eq!(a.record, b.record);
    }
}
