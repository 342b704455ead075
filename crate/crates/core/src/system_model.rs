//! Scenario description: configuration, users, channels and the per-user
//! requirement functions.
//!
//! The BS has `N_t` antennas and serves `K` single-antenna users. Row `k` of
//! the `K × N_t` channel matrix `H` is the downlink channel `h_k`; by
//! reciprocity the uplink composite channel is `H_u = H^H`. Uplink data is
//! detected with a zero-forcing equalizer, so user `k` sees noise variance
//! `σ̃_k² = σ²·[(H H^H)⁻¹]_kk`.
//!
//! A frame of length `T_f` is split into a downlink energy phase of fraction
//! `τ̄` and an uplink phase of fraction `1 − τ̄`.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::eh_model::EhModel;
use crate::numerics::{hermitian_eig, CMatrix};
use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative smallest-singular-value threshold below which a channel counts
/// as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Global system parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_users: usize,
    pub num_antennas: usize,
    /// Carrier frequency `f_c` in Hz.
    pub carrier_freq_hz: f64,
    /// Frame length `T_f` in s.
    pub frame_length_s: f64,
    /// Uplink receiver noise variance `σ²` in W.
    pub noise_variance_w: f64,
    /// Levels per user in the harvest grid (`L_μ`).
    pub grid_mu: usize,
    /// Points in the `τ̄` grid (`L_τ`).
    pub grid_tau: usize,
    /// Step of the `τ̄` scan used by the closed-form schemes (`ε_τ`).
    pub mrt_step: f64,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_users: 1,
            num_antennas: 1,
            carrier_freq_hz: 868e6,
            frame_length_s: 1.0,
            noise_variance_w: dbm_to_watts(-120.0),
            grid_mu: 10,
            grid_tau: 100,
            mrt_step: 1e-2,
            rng_seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn new(num_users: usize, num_antennas: usize) -> Self {
        Self { num_users, num_antennas, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.num_users == 0 || self.num_antennas < self.num_users {
            return Err(Error::InvalidInput("need 1 <= num_users <= num_antennas"));
        }
        if !(positive(self.carrier_freq_hz) && positive(self.frame_length_s) && positive(self.noise_variance_w)) {
            return Err(Error::InvalidInput("carrier, frame length and noise must be positive"));
        }
        if self.grid_mu < 2 || self.grid_tau < 2 {
            return Err(Error::InvalidInput("grid sizes must be at least 2"));
        }
        if !(self.mrt_step > 0.0 && self.mrt_step <= 1.0) {
            return Err(Error::InvalidInput("mrt_step must lie in (0, 1]"));
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Per-user requirements and harvesting circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSpec {
    pub distance_m: f64,
    /// Required uplink rate `R^req` in bits per channel use.
    pub rate_req: f64,
    /// Required average power for the device itself, `p^req` in W.
    pub power_req_w: f64,
    /// Battery energy at the start of the frame, `q` in J.
    pub initial_energy_j: f64,
    pub eh_model: EhModel,
}

impl Default for UserSpec {
    fn default() -> Self {
        Self { distance_m: 3.0, rate_req: 0.0, power_req_w: 0.0, initial_energy_j: 0.0, eh_model: EhModel::default() }
    }
}

impl UserSpec {
    pub fn at_distance(distance_m: f64) -> Self {
        Self { distance_m, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m.is_finite() && self.distance_m > 0.0) {
            return Err(Error::InvalidInput("user distance must be positive"));
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(nonneg(self.rate_req) && nonneg(self.power_req_w) && nonneg(self.initial_energy_j)) {
            return Err(Error::InvalidInput("user requirements must be non-negative"));
        }
        Ok(())
    }
}

/// Free-space path-loss gain `(c / (4π d f_c))²`.
pub fn path_loss_gain(distance_m: f64, carrier_freq_hz: f64) -> f64 {
    let r = SPEED_OF_LIGHT / (4.0 * core::f64::consts::PI * distance_m * carrier_freq_hz);
    r * r
}

/// Draws an i.i.d. Rayleigh channel; entry `(k, j)` is circularly symmetric
/// complex Gaussian with variance `path_loss_gain(d_k, f_c)`.
pub fn sample_channel<R: Rng + ?Sized>(config: &SystemConfig, users: &[UserSpec], rng: &mut R) -> CMatrix {
    let nt = config.num_antennas;
    let mut data = Vec::with_capacity(users.len() * nt);
    for user in users {
        let sd = (0.5 * path_loss_gain(user.distance_m, config.carrier_freq_hz)).sqrt();
        for _ in 0..nt {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            data.push(Complex64::new(sd * re, sd * im));
        }
    }
    CMatrix::from_row_major(users.len(), nt, data)
}

/// Zero-forcing equalizer `F = (H_u^H H_u)⁻¹ H_u^H` for `H_u = H^H`.
///
/// Fails with [`Error::RankDeficientChannel`] when the smallest singular
/// value of `H` is below `RANK_TOL` times the largest.
pub fn zf_equalizer(h: &CMatrix) -> Result<CMatrix> {
    let gram = h.gram();
    let eig = hermitian_eig(&gram)?;
    let top = eig.values[0];
    let bottom = *eig.values.last().expect("non-empty spectrum");
    if !(top > 0.0) || bottom <= RANK_TOL * RANK_TOL * top {
        return Err(Error::RankDeficientChannel);
    }
    let inv = eig.reconstruct_with(|v| 1.0 / v);
    let f = inv.matmul(h);
    let residual = f.matmul(&h.adjoint()).sub(&CMatrix::identity(h.rows())).frobenius_norm();
    if residual > 1e-9 {
        return Err(Error::RankDeficientChannel);
    }
    Ok(f)
}

/// Post-equalization noise variances `σ̃_k² = ‖f_k‖²·σ²`.
pub fn zf_noise_variances(h: &CMatrix, noise_variance: f64) -> Result<Vec<f64>> {
    let f = zf_equalizer(h)?;
    Ok((0..f.rows()).map(|k| f.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>() * noise_variance).collect())
}

/// Uplink rate `(1 − τ̄)·log2(1 + p/σ̃²)`.
pub fn achievable_rate(tau_bar: f64, uplink_power: f64, zf_noise: f64) -> f64 {
    let share = 1.0 - tau_bar;
    if share <= 0.0 || uplink_power <= 0.0 {
        return 0.0;
    }
    share * (uplink_power / zf_noise).ln_1p() / core::f64::consts::LN_2
}

/// A fully specified scenario: configuration, users and one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemInstance {
    config: SystemConfig,
    users: Vec<UserSpec>,
    channel: CMatrix,
    zf_noise: Vec<f64>,
}

impl SystemInstance {
    /// Builds an instance from an explicit channel. `config.num_users` and
    /// `config.num_antennas` must match the channel shape.
    pub fn new(config: SystemConfig, users: Vec<UserSpec>, channel: CMatrix) -> Result<Self> {
        config.validate()?;
        for u in &users {
            u.validate()?;
        }
        if users.len() != config.num_users
            || channel.rows() != config.num_users
            || channel.cols() != config.num_antennas
        {
            return Err(Error::InvalidInput("channel shape does not match the configuration"));
        }
        if channel.as_slice().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidInput("channel has non-finite entries"));
        }
        let zf_noise = zf_noise_variances(&channel, config.noise_variance_w)?;
        Ok(Self { config, users, channel, zf_noise })
    }

    /// Builds an instance with a freshly sampled Rayleigh channel.
    pub fn sample<R: Rng + ?Sized>(config: SystemConfig, users: Vec<UserSpec>, rng: &mut R) -> Result<Self> {
        let channel = sample_channel(&config, &users, rng);
        Self::new(config, users, channel)
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn users(&self) -> &[UserSpec] {
        &self.users
    }

    pub fn user(&self, k: usize) -> &UserSpec {
        &self.users[k]
    }

    pub fn channel(&self) -> &CMatrix {
        &self.channel
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.channel.cols()
    }

    pub fn zf_noise(&self) -> &[f64] {
        &self.zf_noise
    }

    /// `‖h_k‖²`.
    pub fn channel_gain(&self, k: usize) -> f64 {
        self.channel.row(k).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Minimum uplink power meeting the rate requirement,
    /// `ξ^u_k(τ̄) = σ̃_k²·(2^{R_k/(1−τ̄)} − 1)`. Infinite when `τ̄ = 1` and
    /// the rate requirement is positive.
    pub fn min_uplink_power(&self, k: usize, tau_bar: f64) -> f64 {
        let rate = self.users[k].rate_req;
        if rate == 0.0 {
            return 0.0;
        }
        let share = 1.0 - tau_bar;
        if share <= 0.0 {
            return f64::INFINITY;
        }
        self.zf_noise[k] * (rate / share * core::f64::consts::LN_2).exp_m1()
    }

    /// Net power user `k` must harvest over the downlink phase,
    /// `ξ^d_k(τ̄) = (1 − τ̄)·ξ^u_k(τ̄) + p^req_k − q_k/T_f`. May be negative.
    pub fn required_harvest(&self, k: usize, tau_bar: f64) -> f64 {
        let u = &self.users[k];
        let uplink = self.min_uplink_power(k, tau_bar);
        let uplink_energy = match uplink {
            0.0 => 0.0,
            f64::INFINITY => f64::INFINITY,
            _ => (1.0 - tau_bar) * uplink,
        };
        uplink_energy + u.power_req_w - u.initial_energy_j / self.config.frame_length_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn orthogonal_instance() -> SystemInstance {
        let config = SystemConfig { noise_variance_w: 2.0, ..SystemConfig::new(2, 3) };
        let h = CMatrix::from_row_major(
            2,
            3,
            alloc::vec![c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 2.0), c(0.0, 0.0)],
        );
        let users = alloc::vec![UserSpec::default(); 2];
        SystemInstance::new(config, users, h).unwrap()
    }

    #[test]
    fn path_loss_identity_and_inverse_square() {
        let fc = 868e6;
        let d = SPEED_OF_LIGHT / (4.0 * core::f64::consts::PI * fc);
        assert!((path_loss_gain(d, fc) - 1.0).abs() < 1e-14);
        let g = path_loss_gain(3.0, fc);
        assert!((path_loss_gain(6.0, fc) - g / 4.0).abs() < 1e-20);
        // hand evaluation of (c / (4π·3·868e6))²
        assert!((g - 8.393_434_738_744e-5).abs() < 1e-16, "{g}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let config = SystemConfig::new(2, 4);
        let users = alloc::vec![UserSpec::default(); 2];
        let a = sample_channel(&config, &users, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_channel(&config, &users, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn zf_noise_single_user() {
        let h = CMatrix::from_row_major(1, 2, alloc::vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let n = zf_noise_variances(&h, 3.0).unwrap();
        assert!((n[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn zf_noise_orthogonal_rows() {
        let inst = orthogonal_instance();
        assert!((inst.zf_noise()[0] - 1.0).abs() < 1e-12);
        assert!((inst.zf_noise()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_rejected() {
        let h = CMatrix::from_row_major(2, 2, alloc::vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(zf_noise_variances(&h, 1.0), Err(Error::RankDeficientChannel));
    }

    #[test]
    fn uplink_power_examples() {
        let mut inst = orthogonal_instance();
        assert_eq!(inst.min_uplink_power(0, 0.3), 0.0);
        inst.users[0].rate_req = 1.0;
        assert!((inst.min_uplink_power(0, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(inst.min_uplink_power(0, 1.0), f64::INFINITY);
        let mut prev = 0.0;
        for i in 0..99 {
            let v = inst.min_uplink_power(0, i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn required_harvest_formula() {
        let mut inst = orthogonal_instance();
        assert_eq!(inst.required_harvest(0, 0.5), 0.0);
        inst.users[1].rate_req = 2.0;
        inst.users[1].power_req_w = 0.25;
        let tau = 0.2;
        let expect = 0.8 * 0.5 * (2f64.powf(2.0 / 0.8) - 1.0) + 0.25;
        assert!((inst.required_harvest(1, tau) - expect).abs() < 1e-12);
        assert_eq!(inst.required_harvest(1, 1.0), f64::INFINITY);
        inst.users[1].initial_energy_j = 1e3;
        assert!(inst.required_harvest(1, tau) < 0.0);
    }

    #[test]
    fn rate_inverse_pair() {
        assert_eq!(achievable_rate(0.3, 0.0, 1.0), 0.0);
        assert_eq!(achievable_rate(1.0, 5.0, 1.0), 0.0);
        let mut inst = orthogonal_instance();
        inst.users[1].rate_req = 3.0;
        for tau in [0.0, 0.1, 0.5, 0.9] {
            let p = inst.min_uplink_power(1, tau);
            let r = achievable_rate(tau, p, inst.zf_noise()[1]);
            assert!((r - 3.0).abs() < 1e-12, "{tau} {r}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::new(3, 2).validate().is_err());
        assert!(SystemConfig { grid_mu: 1, ..SystemConfig::new(1, 1) }.validate().is_err());
        assert!(SystemConfig::default().validate().is_ok());
        assert!((SystemConfig::default().noise_variance_w - 1e-15).abs() < 1e-27);
    }
}
