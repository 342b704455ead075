//! Scenario files.
//!
//! A scenario is a TOML document with a `[system]` table and one
//! `[[users]]` table per user. Every field has a default, so an empty
//! `[[users]]` entry is a user at 3 m with no requirements and the
//! reference rectifier. An explicit channel may be given as `[channel]`
//! with `re` and `im` arrays of rows; otherwise one is drawn from the seed.
//!
//! ```toml
//! seed = 7
//!
//! [system]
//! num_antennas = 4
//! noise_dbm = -120.0
//!
//! [[users]]
//! distance_m = 3.0
//! rate_req = 1.0
//! power_req_w = 2e-5
//!
//! [[users]]
//! distance_m = 5.0
//! eh_model = { kind = "linear", efficiency = 0.91, sat_input_w = 4e-4 }
//! ```

use std::path::Path;

use anyhow::{bail, ensure, Context};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wpcn_core::eh_model::{EhModel, LinearSaturatedEhModel, RectifierEhModel};
use wpcn_core::numerics::CMatrix;
use wpcn_core::system_model::{dbm_to_watts, SystemConfig, SystemInstance, UserSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub num_antennas: usize,
    pub carrier_freq_hz: f64,
    pub frame_length_s: f64,
    pub noise_dbm: f64,
    pub grid_mu: usize,
    pub grid_tau: usize,
    pub mrt_step: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let c = SystemConfig::default();
        Self {
            num_antennas: 4,
            carrier_freq_hz: c.carrier_freq_hz,
            frame_length_s: c.frame_length_s,
            noise_dbm: -120.0,
            grid_mu: c.grid_mu,
            grid_tau: c.grid_tau,
            mrt_step: c.mrt_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EhModelSpec {
    Rectifier { mu: f64, nu: f64, lambda_w: f64, sat_input_w: f64 },
    Linear { efficiency: f64, sat_input_w: f64 },
}

impl Default for EhModelSpec {
    fn default() -> Self {
        let r = RectifierEhModel::reference();
        Self::Rectifier { mu: r.mu(), nu: r.nu(), lambda_w: r.lambda_scale(), sat_input_w: 0.4e-3 }
    }
}

impl EhModelSpec {
    pub fn build(&self) -> anyhow::Result<EhModel> {
        Ok(match *self {
            Self::Rectifier { mu, nu, lambda_w, sat_input_w } => {
                RectifierEhModel::new(mu, nu, lambda_w, sat_input_w)?.into()
            }
            Self::Linear { efficiency, sat_input_w } => LinearSaturatedEhModel::new(efficiency, sat_input_w)?.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserSection {
    pub distance_m: f64,
    pub rate_req: f64,
    pub power_req_w: f64,
    pub initial_energy_j: f64,
    pub eh_model: EhModelSpec,
}

impl Default for UserSection {
    fn default() -> Self {
        let u = UserSpec::default();
        Self {
            distance_m: u.distance_m,
            rate_req: u.rate_req,
            power_req_w: u.power_req_w,
            initial_energy_j: u.initial_energy_j,
            eh_model: EhModelSpec::default(),
        }
    }
}

impl UserSection {
    pub fn build(&self) -> anyhow::Result<UserSpec> {
        Ok(UserSpec {
            distance_m: self.distance_m,
            rate_req: self.rate_req,
            power_req_w: self.power_req_w,
            initial_energy_j: self.initial_energy_j,
            eh_model: self.eh_model.build()?,
        })
    }
}

/// Channel rows as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ChannelSection {
    pub fn from_matrix(h: &CMatrix) -> Self {
        let part = |f: fn(&Complex64) -> f64| (0..h.rows()).map(|i| h.row(i).iter().map(f).collect()).collect();
        Self { re: part(|z| z.re), im: part(|z| z.im) }
    }

    pub fn to_matrix(&self) -> anyhow::Result<CMatrix> {
        let rows = self.re.len();
        ensure!(rows > 0 && self.im.len() == rows, "channel re and im need the same non-zero row count");
        let cols = self.re[0].len();
        let mut data = Vec::with_capacity(rows * cols);
        for (re, im) in self.re.iter().zip(&self.im) {
            ensure!(re.len() == cols && im.len() == cols, "channel rows must all have the same length");
            data.extend(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)));
        }
        Ok(CMatrix::from_row_major(rows, cols, data))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Seed for the channel draw; the command line may override it.
    pub seed: u64,
    pub system: SystemSection,
    pub users: Vec<UserSection>,
    pub channel: Option<ChannelSection>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let scenario: Self = toml::from_str(text)?;
        ensure!(!scenario.users.is_empty(), "scenario needs at least one [[users]] entry");
        Ok(scenario)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn config(&self, seed: u64) -> SystemConfig {
        let s = &self.system;
        SystemConfig {
            num_users: self.users.len(),
            num_antennas: s.num_antennas,
            carrier_freq_hz: s.carrier_freq_hz,
            frame_length_s: s.frame_length_s,
            noise_variance_w: dbm_to_watts(s.noise_dbm),
            grid_mu: s.grid_mu,
            grid_tau: s.grid_tau,
            mrt_step: s.mrt_step,
            rng_seed: seed,
        }
    }

    pub fn user_specs(&self) -> anyhow::Result<Vec<UserSpec>> {
        self.users.iter().map(UserSection::build).collect()
    }

    /// The instance for `seed`: the explicit channel if there is one,
    /// otherwise a Rayleigh draw from a ChaCha8 stream seeded with `seed`.
    pub fn instance(&self, seed: u64) -> anyhow::Result<SystemInstance> {
        let config = self.config(seed);
        let users = self.user_specs()?;
        let instance = match &self.channel {
            Some(ch) => {
                let h = ch.to_matrix()?;
                if h.rows() != users.len() || h.cols() != config.num_antennas {
                    bail!("channel is {}x{}, expected {}x{}", h.rows(), h.cols(), users.len(), config.num_antennas);
                }
                SystemInstance::new(config, users, h)?
            }
            None => SystemInstance::sample(config, users, &mut ChaCha8Rng::seed_from_u64(seed))?,
        };
        Ok(instance)
    }
}
