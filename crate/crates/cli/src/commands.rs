//! Experiment drivers behind the CLI subcommands. Everything here is a
//! plain function so integration tests can call the same paths the binary
//! uses.

use std::fmt;
use std::path::PathBuf;

use tvopt_core::baselines::{centralized_subgradient, d_subgd, StepRule};
use tvopt_core::hard_instance::{build_cvx, build_sc, HardInstanceError};
use tvopt_core::network::{certify_chi, NetworkError, TimeVaryingNetwork};
use tvopt_core::problem::{abs_instance, ProblemError, ProblemInstance};
use tvopt_core::record::{IterationRow, RunRecord, TimeModel};
use tvopt_core::solver::{
    choose_budget, solve_convex, solve_strongly_convex, RunSettings, SolveOutcome, SolverError,
};
use tvopt_core::span_oracle::{rounds_to_reach_last_coordinate, ReachReport, SpanError};

use crate::config::{Config, ConfigError};
use crate::csvio;

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Solver(SolverError),
    Problem(ProblemError),
    Network(NetworkError),
    Instance(HardInstanceError),
    Span(SpanError),
    Io(String),
    Other(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Solver(e) => write!(f, "{e}"),
            HarnessError::Problem(e) => write!(f, "{e}"),
            HarnessError::Network(e) => write!(f, "{e}"),
            HarnessError::Instance(e) => write!(f, "{e}"),
            HarnessError::Span(e) => write!(f, "{e}"),
            HarnessError::Io(msg) => write!(f, "io error: {msg}"),
            HarnessError::Other(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

macro_rules! from_err {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for HarnessError {
            fn from(e: $ty) -> Self {
                HarnessError::$variant(e)
            }
        }
    };
}
from_err!(Config, ConfigError);
from_err!(Solver, SolverError);
from_err!(Problem, ProblemError);
from_err!(Network, NetworkError);
from_err!(Instance, HardInstanceError);
from_err!(Span, SpanError);

/// Instance plus network resolved from a config.
pub struct Setup {
    pub instance: ProblemInstance,
    pub network: TimeVaryingNetwork,
}

/// Builds the problem instance and the network named by `instance=` and
/// `topology=`. The hard instances come with their own rotating star; a
/// `topology` key overrides it.
pub fn build_setup(cfg: &Config) -> Result<Setup, HarnessError> {
    let name = cfg.require("instance")?.to_string();
    let m_lip = cfg.get_f64("M")?.unwrap_or(1.0);
    let (instance, default_net) = match name.as_str() {
        "hard_sc" => {
            let r = cfg.require_f64("r")?;
            let eps = cfg.require_f64("eps")?;
            let chi = cfg.require_f64("chi")?;
            let (inst, net, _) = build_sc(m_lip, r, eps, chi)?;
            (inst, Some(net))
        }
        "hard_cvx" => {
            let radius = cfg.require_f64("R")?;
            let eps = cfg.require_f64("eps")?;
            let chi = cfg.require_f64("chi")?;
            let (inst, net, _) = build_cvx(m_lip, radius, eps, chi)?;
            (inst, Some(net))
        }
        "abs" => {
            let n = cfg.get_usize("n")?.unwrap_or(1);
            let r = cfg.get_f64("r")?.unwrap_or(0.0);
            let radius = cfg.get_f64("R")?.unwrap_or(1.0);
            let inst = abs_instance(&vec![0.0; n], r, radius)
                .with_known_solution(vec![0.0], Some(0.0));
            (inst, None)
        }
        other => {
            return Err(HarnessError::Other(format!(
                "unknown instance `{other}` (expected hard_sc, hard_cvx, or abs)"
            )))
        }
    };
    let n = instance.n();
    let network = match cfg.get("topology") {
        None => match default_net {
            Some(net) => net,
            None => default_topology(n)?,
        },
        Some("rotating_star") => TimeVaryingNetwork::rotating_star(n)?,
        Some("ring") => TimeVaryingNetwork::ring(n)?,
        Some("singleton") => {
            if n != 1 {
                return Err(HarnessError::Other("singleton topology needs n=1".into()));
            }
            TimeVaryingNetwork::singleton()
        }
        Some("erdos_renyi") => {
            let seed = cfg.get_u64("seed")?.unwrap_or(42);
            TimeVaryingNetwork::erdos_renyi(n, 500, seed, 64)?
        }
        Some(other) => {
            return Err(HarnessError::Other(format!("unknown topology `{other}`")))
        }
    };
    Ok(Setup { instance, network })
}

fn default_topology(n: usize) -> Result<TimeVaryingNetwork, HarnessError> {
    if n == 1 {
        Ok(TimeVaryingNetwork::singleton())
    } else if n % 3 == 0 {
        Ok(TimeVaryingNetwork::rotating_star(n)?)
    } else {
        Ok(TimeVaryingNetwork::ring(n)?)
    }
}

pub struct RunOutput {
    pub record: RunRecord,
    pub x_out: Vec<f64>,
    pub final_primal_gap: Option<f64>,
    pub csv: String,
    pub summary: String,
    /// `(K, T)` when the primal-dual method ran.
    pub budget: Option<(usize, usize)>,
}

/// Runs the method selected by `method=` and renders its CSV. Writes the
/// file when `out=` is set.
pub fn run(cfg: &Config) -> Result<RunOutput, HarnessError> {
    let setup = build_setup(cfg)?;
    let method = cfg.get_or("method", "optimal");
    let time_model = TimeModel {
        tau_com: cfg.get_f64("tau_com")?.unwrap_or(1.0),
        tau_sub: cfg.get_f64("tau_sub")?.unwrap_or(1.0),
    };
    let seed = cfg.get_u64("seed")?.unwrap_or(42);
    let reference = setup
        .instance
        .known_solution
        .as_ref()
        .and_then(|s| s.value);
    let settings = RunSettings {
        time_model,
        reference_value: reference,
    };

    let (record, x_out, budget) = match method.as_str() {
        "optimal" => {
            let out = run_optimal(cfg, &setup, settings)?;
            let budget = (out.schedule.outer, out.schedule.inner);
            (out.record, out.x_out, Some(budget))
        }
        "dsubgd" => {
            let rounds = match cfg.get_usize("K")? {
                Some(k) => k,
                None => default_budget(cfg, &setup)?.0,
            };
            let rule = StepRule::default_for(&setup.instance);
            let out = d_subgd(&setup.instance, &setup.network, rounds, rule, time_model)?;
            (out.record, out.x_out, None)
        }
        "centralized" => {
            let steps = cfg.get_usize("K")?.unwrap_or(10_000);
            let rule = StepRule::default_for(&setup.instance);
            let out = centralized_subgradient(&setup.instance, steps, rule, None)?;
            let mut record = RunRecord::default();
            for (t, &value) in out.values.iter().enumerate().skip(1) {
                record.push(IterationRow {
                    k: t,
                    comms: 0,
                    subgrads: t as u64,
                    model_time: time_model.elapsed(0, t as u64),
                    primal_gap: reference.map(|p| value - p),
                    consensus: 0.0,
                    cert_margin: None,
                });
            }
            (record, out.x_best, None)
        }
        other => return Err(HarnessError::Other(format!("unknown method `{other}`"))),
    };

    let final_primal_gap = record.final_row().and_then(|r| r.primal_gap);
    let csv = csvio::write_record(&record, Some(seed));
    if let Some(path) = cfg.get("out") {
        std::fs::write(path, &csv).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let summary = format!(
        "method={method} n={n} comms={comms} subgrads={subgrads} final_primal_gap={gap}",
        n = setup.instance.n(),
        comms = record.total_comms(),
        subgrads = record.total_subgrads(),
        gap = final_primal_gap
            .map(|g| g.to_string())
            .unwrap_or_else(|| "n/a".into()),
    );
    Ok(RunOutput {
        record,
        x_out,
        final_primal_gap,
        csv,
        summary,
        budget,
    })
}

fn default_budget(cfg: &Config, setup: &Setup) -> Result<(usize, usize), HarnessError> {
    let eps = cfg.require_f64("eps")?;
    if setup.instance.r > 0.0 {
        Ok(choose_budget(&setup.instance, setup.network.chi(), eps)?)
    } else {
        let reg = setup
            .instance
            .with_regularization(eps / (setup.instance.radius * setup.instance.radius));
        Ok(choose_budget(&reg, setup.network.chi(), eps / 2.0)?)
    }
}

fn run_optimal(
    cfg: &Config,
    setup: &Setup,
    settings: RunSettings,
) -> Result<SolveOutcome, HarnessError> {
    if setup.instance.r > 0.0 {
        let (k, t) = match (cfg.get_usize("K")?, cfg.get_usize("T")?) {
            (Some(k), Some(t)) => (k, t),
            (k_opt, t_opt) => {
                let (k_def, t_def) = default_budget(cfg, setup)?;
                (k_opt.unwrap_or(k_def), t_opt.unwrap_or(t_def))
            }
        };
        Ok(solve_strongly_convex(
            &setup.instance,
            &setup.network,
            k,
            t,
            Some(settings),
        )?)
    } else {
        let eps = cfg.require_f64("eps")?;
        Ok(solve_convex(
            &setup.instance,
            &setup.network,
            eps,
            Some(settings),
        )?)
    }
}

pub struct SweepEntry {
    pub value: String,
    pub run: RunOutput,
}

pub struct SweepOutput {
    pub entries: Vec<SweepEntry>,
    pub summary_csv: String,
}

/// Repeats `run` across `values` of the config key `vary`, writing one CSV
/// per value (next to `out=`, suffixed with the value) plus a summary CSV of
/// final gaps.
pub fn sweep(cfg: &Config, vary: &str, values: &[String]) -> Result<SweepOutput, HarnessError> {
    let out_base = cfg.get("out").map(PathBuf::from);
    let mut entries = Vec::new();
    let mut summary_csv = format!("{vary},final_primal_gap\n");
    for value in values {
        let mut one = cfg.clone();
        one.set(vary, value)?;
        if let Some(base) = &out_base {
            let stem = base
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("sweep");
            let per_run = base.with_file_name(format!("{stem}_{vary}{value}.csv"));
            one.set("out", per_run.to_str().expect("utf-8 path"))?;
        }
        let out = run(&one)?;
        let gap = out
            .final_primal_gap
            .map(|g| g.to_string())
            .unwrap_or_default();
        summary_csv.push_str(&format!("{value},{gap}\n"));
        entries.push(SweepEntry {
            value: value.clone(),
            run: out,
        });
    }
    if let Some(base) = &out_base {
        std::fs::write(base, &summary_csv).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    Ok(SweepOutput {
        entries,
        summary_csv,
    })
}

pub struct LowerBoundOutput {
    pub report: ReachReport,
    pub line: String,
    pub pass: bool,
}

/// Runs the span automaton and formats the certified round count against
/// the theoretical floor `n(d-1)/6`.
pub fn lower_bound(n: usize, d: usize) -> Result<LowerBoundOutput, HarnessError> {
    let report = rounds_to_reach_last_coordinate(n, d)?;
    let pass = report.certifies_lower_bound() && report.envelope_ok;
    let line = format!(
        "n={n} d={d} rounds={} rounds>={} {}",
        report.rounds,
        report.floor,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(LowerBoundOutput { report, line, pass })
}

pub struct CertifyOutput {
    pub certified: f64,
    pub declared: f64,
    pub line: String,
    pub pass: bool,
}

/// Re-certifies a network's condition number over `rounds` gossip rounds.
pub fn certify_network(cfg: &Config, rounds: usize) -> Result<CertifyOutput, HarnessError> {
    let n = cfg.get_usize("n")?.ok_or(ConfigError::MissingKey("n"))?;
    let topology = cfg.get_or("topology", "rotating_star");
    let network = match topology.as_str() {
        "rotating_star" => TimeVaryingNetwork::rotating_star(n)?,
        "ring" => TimeVaryingNetwork::ring(n)?,
        "singleton" => TimeVaryingNetwork::singleton(),
        "erdos_renyi" => {
            let seed = cfg.get_u64("seed")?.unwrap_or(42);
            TimeVaryingNetwork::erdos_renyi(n, 500, seed, rounds.max(1))?
        }
        other => return Err(HarnessError::Other(format!("unknown topology `{other}`"))),
    };
    let declared = network.chi();
    match certify_chi(&network, rounds, 4) {
        Ok(certified) => Ok(CertifyOutput {
            certified,
            declared,
            line: format!(
                "topology={topology} n={n} declared_chi={declared} certified_chi={certified} PASS"
            ),
            pass: true,
        }),
        Err(NetworkError::CertificationFailure {
            round,
            certified,
            declared,
        }) => Ok(CertifyOutput {
            certified,
            declared,
            line: format!(
                "topology={topology} n={n} declared_chi={declared} certified_chi={certified} round={round} FAIL"
            ),
            pass: false,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Least-squares slope of `ln(y)` against `ln(x)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
