//! Monte-Carlo sweeps.
//!
//! A sweep varies one parameter over a list of values and, for each trial,
//! runs every requested scheme at every value. Trials draw from
//! independent ChaCha8 streams (`seed`, stream = trial index), and all
//! values of one trial share the same draw: user distances and a channel
//! sized for the largest user and antenna counts, of which each point uses
//! the leading rows and columns. Curves are therefore compared on common
//! random numbers, and results do not depend on scheduling.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wpcn_core::numerics::CMatrix;
use wpcn_core::planner::{solve, solve_optimal_with, PsiGrid, Scheme};
use wpcn_core::system_model::{sample_channel, SystemConfig, SystemInstance, UserSpec};
use wpcn_core::Error;

use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweptParameter {
    #[serde(rename = "p_req")]
    PowerReq,
    #[serde(rename = "rate_req")]
    RateReq,
    #[serde(rename = "num_users")]
    NumUsers,
    #[serde(rename = "num_antennas")]
    NumAntennas,
}

/// Sweep definition, read from TOML.
///
/// ```toml
/// parameter = "p_req"        # p_req | rate_req | num_users | num_antennas
/// values = [0.0, 2e-5, 4e-5]
/// trials = 100
/// schemes = ["optimal", "mrt", "sdr"]
/// seed = 1
/// distance_range_m = [3.0, 10.0]   # optional: random distances per trial
///
/// [base]                     # a scenario; its channel must be omitted
/// system = { num_antennas = 5 }
/// users = [{ distance_m = 3.0 }, { distance_m = 5.0 }]
/// ```
///
/// For `num_users` the base users are repeated cyclically as needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    pub trials: u64,
    pub schemes: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub distance_range_m: Option<[f64; 2]>,
    pub base: Scenario,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(self.trials >= 1, "trials must be at least 1");
        ensure!(!self.values.is_empty(), "values must not be empty");
        ensure!(self.values.iter().all(|v| v.is_finite()), "values must be finite");
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        ensure!(increasing || decreasing, "values must be strictly ordered");
        if matches!(self.parameter, SweptParameter::NumUsers | SweptParameter::NumAntennas) {
            ensure!(self.values.iter().all(|v| *v >= 1.0 && v.fract() == 0.0), "counts must be positive integers");
        } else {
            ensure!(self.values.iter().all(|v| *v >= 0.0), "requirements must be non-negative");
        }
        ensure!(!self.base.users.is_empty(), "base scenario needs at least one user");
        ensure!(self.base.channel.is_none(), "sweeps draw their own channels; remove [base.channel]");
        if let Some([lo, hi]) = self.distance_range_m {
            ensure!(lo > 0.0 && lo < hi && hi.is_finite(), "distance_range_m must be 0 < lo < hi");
        }
        for &v in &self.values {
            let (k, nt) = self.dims_at(v);
            if k > nt {
                bail!("value {v} gives {k} users on {nt} antennas");
            }
        }
        self.schemes()?;
        Ok(())
    }

    pub fn schemes(&self) -> anyhow::Result<Vec<Scheme>> {
        ensure!(!self.schemes.is_empty(), "schemes must not be empty");
        self.schemes.iter().map(|s| s.parse::<Scheme>().with_context(|| format!("scheme {s:?}"))).collect()
    }

    fn dims_at(&self, value: f64) -> (usize, usize) {
        let k = self.base.users.len();
        let nt = self.base.system.num_antennas;
        match self.parameter {
            SweptParameter::NumUsers => (value as usize, nt),
            SweptParameter::NumAntennas => (k, value as usize),
            _ => (k, nt),
        }
    }

    fn max_dims(&self) -> (usize, usize) {
        self.values.iter().map(|&v| self.dims_at(v)).fold((0, 0), |(a, b), (k, n)| (a.max(k), b.max(n)))
    }
}

/// One instance per sweep value for trial `trial`.
pub fn trial_instances(spec: &SweepSpec, trial: u64) -> anyhow::Result<Vec<SystemInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial);
    let (kmax, ntmax) = spec.max_dims();
    let base_users = spec.base.user_specs()?;
    let mut users: Vec<UserSpec> = base_users.iter().cycle().take(kmax).cloned().collect();
    if let Some([lo, hi]) = spec.distance_range_m {
        for u in &mut users {
            u.distance_m = rng.random_range(lo..hi);
        }
    }
    let full_config = SystemConfig { num_users: kmax, num_antennas: ntmax, ..spec.base.config(spec.seed) };
    let full = sample_channel(&full_config, &users, &mut rng);

    spec.values
        .iter()
        .map(|&value| {
            let (k, nt) = spec.dims_at(value);
            let mut point_users = users[..k].to_vec();
            for u in &mut point_users {
                match spec.parameter {
                    SweptParameter::PowerReq => u.power_req_w = value,
                    SweptParameter::RateReq => u.rate_req = value,
                    _ => {}
                }
            }
            let h = CMatrix::from_fn(k, nt, |i, j| full[(i, j)]);
            let config = SystemConfig { num_users: k, num_antennas: nt, ..full_config.clone() };
            SystemInstance::new(config, point_users, h).with_context(|| format!("instance at value {value}"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Feasible { cost: f64, wall_s: f64 },
    Infeasible { wall_s: f64 },
    Failed { message: String, wall_s: f64 },
}

impl Outcome {
    fn wall_s(&self) -> f64 {
        match self {
            Outcome::Feasible { wall_s, .. } | Outcome::Infeasible { wall_s } | Outcome::Failed { wall_s, .. } => {
                *wall_s
            }
        }
    }
}

/// Runs every scheme at every value of one trial. Indexed
/// `[value][scheme]`.
pub fn run_trial(spec: &SweepSpec, schemes: &[Scheme], trial: u64) -> Vec<Vec<Outcome>> {
    let instances = match trial_instances(spec, trial) {
        Ok(v) => v,
        Err(e) => {
            let failed = Outcome::Failed { message: format!("{e:#}"), wall_s: 0.0 };
            return vec![vec![failed; schemes.len()]; spec.values.len()];
        }
    };
    // the ψ grid depends only on the channel, which is shared by all points
    // with the same dimensions
    let mut grids: HashMap<(usize, usize), PsiGrid> = HashMap::new();
    instances
        .iter()
        .map(|inst| {
            schemes
                .iter()
                .map(|&scheme| {
                    let start = Instant::now();
                    let result = if scheme == Scheme::Optimal {
                        let key = (inst.num_users(), inst.num_antennas());
                        let grid = match grids.entry(key) {
                            Entry::Occupied(e) => Ok(&*e.into_mut()),
                            Entry::Vacant(v) => PsiGrid::new(inst).map(|g| &*v.insert(g)),
                        };
                        grid.and_then(|g| solve_optimal_with(inst, g))
                    } else {
                        solve(inst, scheme)
                    };
                    let wall_s = start.elapsed().as_secs_f64();
                    match result {
                        Ok(plan) => Outcome::Feasible { cost: plan.cost_dl, wall_s },
                        Err(Error::Infeasible) => Outcome::Infeasible { wall_s },
                        Err(e) => Outcome::Failed { message: e.to_string(), wall_s },
                    }
                })
                .collect()
        })
        .collect()
}

/// One CSV line: a (value, scheme) pair averaged over the trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub swept_value: f64,
    pub scheme: String,
    /// Mean over feasible trials; NaN if there are none.
    pub mean_p_dl_w: f64,
    pub feasible_frac: f64,
    pub mean_wall_s: f64,
    pub seed: u64,
    /// `ok`, or the first solver error and how many trials hit one.
    pub status: String,
}

pub const CSV_COLUMNS: [&str; 7] =
    ["swept_value", "scheme", "mean_p_dl_w", "feasible_frac", "mean_wall_s", "seed", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    /// Record wall times. Without them the output is byte-for-byte
    /// reproducible.
    pub timing: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { timing: true }
    }
}

pub fn run_sweep(spec: &SweepSpec, opts: SweepOptions) -> anyhow::Result<Vec<SweepRow>> {
    spec.validate()?;
    let schemes = spec.schemes()?;
    let per_trial: Vec<Vec<Vec<Outcome>>> =
        (0..spec.trials).into_par_iter().map(|t| run_trial(spec, &schemes, t)).collect();

    let trials = spec.trials as f64;
    let mut rows = Vec::with_capacity(spec.values.len() * schemes.len());
    for (p, &value) in spec.values.iter().enumerate() {
        for (s, scheme) in schemes.iter().enumerate() {
            let outcomes = per_trial.iter().map(|t| &t[p][s]);
            let (mut sum, mut feasible, mut wall, mut failures) = (0.0, 0usize, 0.0, 0usize);
            let mut first_error = None;
            for o in outcomes {
                wall += o.wall_s();
                match o {
                    Outcome::Feasible { cost, .. } => {
                        sum += cost;
                        feasible += 1;
                    }
                    Outcome::Infeasible { .. } => {}
                    Outcome::Failed { message, .. } => {
                        failures += 1;
                        first_error.get_or_insert_with(|| message.clone());
                    }
                }
            }
            let status = match first_error {
                None => "ok".to_string(),
                Some(m) => format!("error in {failures} trials: {m}"),
            };
            rows.push(SweepRow {
                swept_value: value,
                scheme: scheme.to_string(),
                mean_p_dl_w: if feasible > 0 { sum / feasible as f64 } else { f64::NAN },
                feasible_frac: feasible as f64 / trials,
                mean_wall_s: if opts.timing { wall / trials } else { 0.0 },
                seed: spec.seed,
                status,
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with a header, flushing after each row.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for row in rows {
        w.serialize(row)?;
        w.flush()?;
    }
    Ok(())
}
