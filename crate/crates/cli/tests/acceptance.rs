//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`). Tolerances are pinned here;
//! loosening them is not an option.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tvopt::commands::fit_loglog_slope;
use tvopt_core::baselines::{d_subgd, StepRule};
use tvopt_core::hard_instance::build_sc;
use tvopt_core::linalg::NodeStack;
use tvopt_core::network::{certify_chi, project_consensus_complement, TimeVaryingNetwork};
use tvopt_core::problem::{abs_instance, check_lipschitz, check_oracle_validity};
use tvopt_core::record::TimeModel;
use tvopt_core::solver::{
    choose_budget, duality_gap_certificate, make_schedule, saddle_probe, solve_convex,
    solve_strongly_convex, RunSettings, Solver,
};
use tvopt_core::span_oracle::{rounds_to_reach_last_coordinate, SpanState};

fn verdict(name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {name} failed: {detail}");
}

/// Two nodes, f_i(x) = |x - c_i| in one dimension, r = 1: the saddle value
/// of Q over (x, y, z in the consensus complement) equals n times the
/// minimum of p. The y-maximization is a concave quadratic, done in closed
/// form; the z-maximization over the grid box is linear per coordinate, so
/// its max sits at a box corner; x runs over the full 1e-3 grid.
#[test]
fn saddle_equivalence() {
    let (c1, c2) = (-1.0, 2.0);
    let r = 1.0;
    let r_yz = 3.0 / r; // with r_x = 2r/3 the split satisfies r_x + 1/r_yz = r
    let z_box = 3.0;
    let step = 1e-3;
    let lo = -3.0;
    let steps = (6.0 / step) as usize; // 6000 -> 6001 grid points per axis

    // max_y Q = sum_i f_i(x_i) + (r/2)|x|^2 + <z, x>, so what remains is
    // min over the x grid of that expression with <z, x> maximized over
    // z = (s, -s), |s| <= 3: the corner value 3*|x1 - x2|.
    let mut min_q = f64::INFINITY;
    for i in 0..=steps {
        let x1 = lo + i as f64 * step;
        let f1 = (x1 - c1).abs();
        for j in 0..=steps {
            let x2 = lo + j as f64 * step;
            let q = f1
                + (x2 - c2).abs()
                + 0.5 * r * (x1 * x1 + x2 * x2)
                + z_box * (x1 - x2).abs();
            if q < min_q {
                min_q = q;
            }
        }
    }
    let _ = r_yz; // the closed-form y-max already folded 1/(2 r_yz) into r/2

    // n * min p analytically: both nodes at t in [c1, c2] give
    // |t-c1| + |t-c2| = c2 - c1, plus t^2 minimized at t = 0.
    let analytic = (c2 - c1) + 0.0;
    let pass = (min_q - analytic).abs() <= 5e-3;
    verdict(
        "saddle-equivalence",
        pass,
        &format!("grid min {min_q:.6} vs analytic {analytic:.6}"),
    );
}

#[test]
fn network_certification() {
    let mut pass = true;
    let mut detail = String::new();
    for n in [3usize, 6, 12] {
        let net = TimeVaryingNetwork::rotating_star(n).unwrap();
        let certified = certify_chi(&net, n, 4).unwrap();
        pass &= (certified - n as f64).abs() <= 1e-8;
        detail.push_str(&format!("n={n}: chi={certified:.10}; "));
        for k in 0..n {
            let w = net.gossip(k);
            let ones = vec![1.0; n];
            let mut out = vec![0.0; n];
            w.mul_vec(&ones, &mut out);
            pass &= out.iter().all(|v| v.abs() <= 1e-12);
            w.mul_vec_transpose(&ones, &mut out);
            pass &= out.iter().all(|v| v.abs() <= 1e-12);
        }
    }
    verdict("network-certification", pass, detail.trim_end_matches("; "));
}

fn criterion3_run() -> (
    tvopt_core::problem::ProblemInstance,
    TimeVaryingNetwork,
    tvopt_core::solver::SolveOutcome,
) {
    let (inst, net, _) = build_sc(1.0, 0.1, 1e-2, 6.0).unwrap();
    let (k, t) = choose_budget(&inst, net.chi(), 1e-2).unwrap();
    assert_eq!((k, t), (4785, 46), "budget rule drifted");
    let out = solve_strongly_convex(&inst, &net, k, t, None).unwrap();
    (inst, net, out)
}

#[test]
fn solver_reaches_analytic_accuracy() {
    let (inst, _, out) = criterion3_run();
    let p_star = inst.known_solution.as_ref().unwrap().value.unwrap();
    let gap = inst.eval_p(&out.x_out).unwrap() - p_star;
    let pass = gap <= 1e-2 && gap >= -1e-12;
    verdict(
        "solver-analytic-instance",
        pass,
        &format!("final primal gap {gap:.3e} (target 1e-2)"),
    );
}

#[test]
fn duality_gap_certificate_holds() {
    let (inst, _, out) = criterion3_run();
    let n = inst.n();
    let d = inst.d;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut probes = Vec::new();
    for _ in 0..20 {
        let mut sample = || {
            let mut s = NodeStack::zeros(n, d);
            for v in s.as_mut_slice() {
                *v = rng.gen_range(-1.0..1.0);
            }
            s
        };
        let (x, y, z) = (sample(), sample(), sample());
        probes.push((x, y, z));
    }
    probes.push((
        NodeStack::zeros(n, d),
        NodeStack::zeros(n, d),
        NodeStack::zeros(n, d),
    ));
    probes.push(saddle_probe(&inst, &out.schedule).unwrap());
    let results = duality_gap_certificate(&inst, &out.schedule, &out.averages, &probes).unwrap();
    let violations = results.iter().filter(|r| !r.holds()).count();
    let worst = results
        .iter()
        .map(|r| r.gap - r.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        "duality-gap-certificate",
        violations == 0,
        &format!(
            "{} probes, {violations} violations, worst gap-bound {worst:.3e}",
            results.len()
        ),
    );
}

/// Rate slopes measured on the saddle-probe duality gap, the quantity the
/// convergence bound controls: ~K^-2 with communications varied at large
/// fixed T, ~T^-1 with subgradient steps varied at large fixed K. (The
/// primal gap saturates at the problem scale for small K and would flatten
/// the fit.)
#[test]
fn rate_slopes() {
    let (inst, net, _) = build_sc(1.0, 0.1, 1e-2, 6.0).unwrap();
    let probe_gap = |k: usize, t: usize| -> f64 {
        let out = solve_strongly_convex(&inst, &net, k, t, None).unwrap();
        let probe = saddle_probe(&inst, &out.schedule).unwrap();
        duality_gap_certificate(&inst, &out.schedule, &out.averages, &[probe]).unwrap()[0].gap
    };
    let k_points: Vec<(f64, f64)> = [50usize, 100, 200, 400]
        .iter()
        .map(|&k| (k as f64, probe_gap(k, 2000)))
        .collect();
    let k_slope = fit_loglog_slope(&k_points);
    let t_points: Vec<(f64, f64)> = [10usize, 40, 160]
        .iter()
        .map(|&t| (t as f64, probe_gap(2000, t)))
        .collect();
    let t_slope = fit_loglog_slope(&t_points);
    let pass = (-2.4..=-1.6).contains(&k_slope) && (-1.3..=-0.7).contains(&t_slope);
    verdict(
        "rate-slopes",
        pass,
        &format!("K-slope {k_slope:.3} (band [-2.4,-1.6]), T-slope {t_slope:.3} (band [-1.3,-0.7])"),
    );
}

#[test]
fn communication_lower_bound_witness() {
    let mut pass = true;
    let mut detail = String::new();
    for (n, d) in [(3usize, 3usize), (6, 5), (9, 7), (12, 9)] {
        // Re-simulate step by step so the envelope and the last-coordinate
        // check are both verified at every round.
        let mut state = SpanState::new(n, d).unwrap();
        let floor = n * (d - 1) / 6;
        pass &= state.envelope_holds();
        while state.max_index() < d {
            state.communication_round();
            pass &= state.envelope_holds();
            if state.rounds < floor {
                pass &= state.max_index() < d;
            }
        }
        pass &= state.rounds >= floor;
        let report = rounds_to_reach_last_coordinate(n, d).unwrap();
        pass &= report.rounds == state.rounds && report.envelope_ok;
        detail.push_str(&format!("({n},{d}): {} >= {floor}; ", state.rounds));
    }
    verdict(
        "communication-lower-bound",
        pass,
        detail.trim_end_matches("; "),
    );
}

#[test]
fn baseline_dominance() {
    let (inst, net, out) = criterion3_run();
    let p_star = inst.known_solution.as_ref().unwrap().value.unwrap();
    let optimal_gap = inst.eval_p(&out.x_out).unwrap() - p_star;
    let comm_budget = out.record.total_comms() as usize;
    let base = d_subgd(
        &inst,
        &net,
        comm_budget,
        StepRule::default_for(&inst),
        TimeModel::default(),
    )
    .unwrap();
    let baseline_gap = inst.eval_p(&base.x_out).unwrap() - p_star;
    let ratio = baseline_gap / optimal_gap;
    verdict(
        "baseline-dominance",
        ratio >= 3.0,
        &format!("gap ratio {ratio:.1} at {comm_budget} comms (need >= 3)"),
    );
}

#[test]
fn convex_reduction() {
    // f_i(x) = |x| on three nodes, R = 1: the regularized run at target 0.05
    // must leave the unregularized objective within 0.05 of its minimum 0.
    let inst = abs_instance(&[0.0, 0.0, 0.0], 0.0, 1.0);
    let net = TimeVaryingNetwork::rotating_star(3).unwrap();
    let out = solve_convex(&inst, &net, 0.05, None).unwrap();
    let f_bar = inst.eval_f_bar(&out.x_out).unwrap();
    verdict(
        "convex-reduction",
        f_bar <= 0.05,
        &format!("f_bar(x_o) = {f_bar:.4e} (target 0.05)"),
    );
}

#[test]
fn structural_invariants() {
    let mut pass = true;
    let mut worst = String::from("ok");
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = *[1usize, 3, 6].iter().nth(rng.gen_range(0..3)).unwrap();
        let shifts: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let r = rng.gen_range(0.1..2.0);
        let inst = abs_instance(&shifts, r, 3.0);
        let net = if n == 1 {
            TimeVaryingNetwork::singleton()
        } else {
            TimeVaryingNetwork::rotating_star(n).unwrap()
        };
        let outer = rng.gen_range(10..40);
        let inner = rng.gen_range(2..8);

        // Oracle validity and Lipschitz bound on random point pairs.
        for oracle in &inst.oracles {
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..30)
                .map(|_| {
                    (
                        vec![rng.gen_range(-4.0..4.0)],
                        vec![rng.gen_range(-4.0..4.0)],
                    )
                })
                .collect();
            let validity = check_oracle_validity(oracle.as_ref(), &pairs, 1e-9);
            let lipschitz = check_lipschitz(oracle.as_ref(), inst.lipschitz, &pairs, 1e-9);
            if !validity.passed() || !lipschitz.passed() {
                pass = false;
                worst = format!("seed {seed}: oracle checks failed");
            }
        }

        // Schedule weights stay nonnegative.
        let schedule = make_schedule(r, net.chi(), outer, inner).unwrap();
        if (1..=outer).any(|k| schedule.lambda(k) < 0.0) {
            pass = false;
            worst = format!("seed {seed}: negative averaging weight");
        }

        // Gossip matrices commute with the consensus-complement projection.
        for k in 0..outer {
            let w = net.gossip(k);
            let mut probe = NodeStack::zeros(n, 1);
            for v in probe.as_mut_slice() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let wp = w.apply_to_stack(&project_consensus_complement(&probe));
            let pw = project_consensus_complement(&w.apply_to_stack(&probe));
            let diff = NodeStack::lin_comb(1.0, &wp, -1.0, &pw).norm();
            if diff > 1e-10 {
                pass = false;
                worst = format!("seed {seed}: projector/gossip commutation {diff:.1e}");
            }
        }

        // Dual slack iterates stay in the consensus complement throughout,
        // and the closed-form inner step satisfies its implicit equation.
        let mut solver = Solver::new(&inst, &net, schedule, RunSettings::default()).unwrap();
        while !solver.done() {
            solver.step().unwrap();
            let z = &solver.state.z;
            let off = NodeStack::lin_comb(1.0, z, -1.0, &project_consensus_complement(z)).norm();
            if off > 1e-12 {
                pass = false;
                worst = format!("seed {seed}: z left the complement by {off:.1e}");
            }
        }
        if solver.state.max_inner_residual > 1e-12 {
            pass = false;
            worst = format!(
                "seed {seed}: inner residual {:.1e}",
                solver.state.max_inner_residual
            );
        }
    }
    verdict("structural-invariants", pass, &worst);
}
