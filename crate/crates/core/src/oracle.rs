//! Independent checks on solver output.
//!
//! - [`brute_force_psi`] searches beam directions exhaustively, giving an
//!   upper bound on `ψ` that does not depend on the dual machinery.
//! - [`verify_plan`] recomputes rates and harvested energy from the raw
//!   plan vectors.
//! - [`certify_duality`] measures the primal-dual gap and complementary
//!   slackness of a solved pair.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;

use crate::eh_model::Harvester;
use crate::numerics::{hermitian_eig, CMatrix};
use crate::planner::EnergySignalPlan;
use crate::psi_solver::{BeamVector, DualSolution};
use crate::system_model::{achievable_rate, SystemInstance, RANK_TOL};
use crate::{Error, Result};

/// Brute force is exponential in the user count; larger problems are
/// refused.
pub const BRUTE_FORCE_MAX_USERS: usize = 3;
pub const BRUTE_FORCE_MIN_RESOLUTION: usize = 50;

/// Upper bound on `ψ(ρ)` by direct search over beam directions.
///
/// A minimizer lies in the row space of `H`, so it is enough to search
/// `x = H^H c`. Writing `z = G c` with `G = H H^H`, the power is
/// `z^H G⁻¹ z` and the constraints read `|z_k|² ≥ ρ_k`; for a fixed
/// direction of `z` the smallest feasible scale is found in closed form.
/// Directions are parametrized by `K − 1` amplitude angles and `K − 1`
/// relative phases, sampled on a grid of `resolution` points per dimension
/// and refined by compass search from the best grid point.
pub fn brute_force_psi(h: &CMatrix, rho: &[f64], resolution: usize) -> Result<f64> {
    let k = h.rows();
    if k == 0 || k > BRUTE_FORCE_MAX_USERS {
        return Err(Error::InvalidInput("brute force supports one to three users"));
    }
    if resolution < BRUTE_FORCE_MIN_RESOLUTION {
        return Err(Error::InvalidInput("brute force needs at least 50 points per dimension"));
    }
    if rho.len() != k || rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidInput("targets must be finite, non-negative, one per user"));
    }
    let rho_max = rho.iter().copied().fold(0.0, f64::max);
    if rho_max == 0.0 {
        return Ok(0.0);
    }

    let gram = h.gram();
    let scale = (0..k).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
    let eig = hermitian_eig(&gram.scale(1.0 / scale))?;
    let top = eig.values[0];
    if !(eig.values[k - 1] > RANK_TOL * top) {
        return Err(Error::RankDeficientChannel);
    }
    let g_inv = eig.reconstruct_with(|l| 1.0 / l);
    let rho_n: Vec<f64> = rho.iter().map(|r| r / rho_max).collect();
    let search = DirectionSearch { g_inv, rho: rho_n, k };

    let dims = 2 * (k - 1);
    let mut best_params = vec![0.0; dims];
    let mut best = search.power(&best_params);
    let mut idx = vec![0usize; dims];
    let mut params = vec![0.0; dims];
    let steps: Vec<f64> = (0..dims).map(|d| if d < k - 1 { FRAC_PI_2 } else { TAU } / resolution as f64).collect();
    loop {
        for d in 0..dims {
            // amplitude angles sit mid-cell so no amplitude is exactly zero
            let offset = if d < k - 1 { 0.5 } else { 0.0 };
            params[d] = (idx[d] as f64 + offset) * steps[d];
        }
        let p = search.power(&params);
        if p < best {
            best = p;
            best_params.copy_from_slice(&params);
        }
        if !advance(&mut idx, resolution) {
            break;
        }
    }
    if !best.is_finite() {
        return Err(Error::ResolutionTooCoarse);
    }

    let mut step = steps;
    for _ in 0..20_000 {
        if step.iter().all(|&s| s < 1e-12) {
            break;
        }
        let mut improved = false;
        for d in 0..dims {
            for sign in [1.0, -1.0] {
                let mut trial = best_params.clone();
                trial[d] += sign * step[d];
                let p = search.power(&trial);
                if p < best {
                    best = p;
                    best_params = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    Ok(best * rho_max / scale)
}

/// Odometer increment over `[0, base)^n`; false once it wraps around.
fn advance(idx: &mut [usize], base: usize) -> bool {
    for digit in idx.iter_mut() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

struct DirectionSearch {
    g_inv: CMatrix,
    rho: Vec<f64>,
    k: usize,
}

impl DirectionSearch {
    fn direction(&self, params: &[f64]) -> Vec<Complex64> {
        let k = self.k;
        let (angles, phases) = params.split_at(k - 1);
        let mut z = Vec::with_capacity(k);
        let mut rest = 1.0;
        for i in 0..k {
            let amp = match angles.get(i) {
                Some(a) => {
                    let v = rest * a.cos();
                    rest *= a.sin();
                    v
                }
                None => rest,
            };
            let phase = if i == 0 { 0.0 } else { phases[i - 1] };
            z.push(Complex64::from_polar(amp, phase));
        }
        z
    }

    /// Smallest power over beams whose `z` points along `params`.
    fn power(&self, params: &[f64]) -> f64 {
        let z = self.direction(params);
        let mut s2: f64 = 0.0;
        for (zk, &r) in z.iter().zip(&self.rho) {
            if r > 0.0 {
                let a = zk.norm_sqr();
                if a == 0.0 {
                    return f64::INFINITY;
                }
                s2 = s2.max(r / a);
            }
        }
        let gz = self.g_inv.mul_vec(&z);
        let q: f64 = z.iter().zip(&gz).map(|(a, b)| (a.conj() * b).re).sum();
        s2 * q
    }
}

/// Acceptable violations in [`verify_plan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerances {
    /// bits per channel use
    pub rate: f64,
    /// J
    pub energy_j: f64,
    pub duration: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self { rate: 1e-9, energy_j: 1e-12, duration: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// Achieved minus required rate, per user.
    pub rate_margins: Vec<f64>,
    /// Harvested plus stored energy minus energy spent, per user, in J.
    pub energy_margins_j: Vec<f64>,
    /// `Σ τ_n − τ̄`.
    pub duration_residual: f64,
    /// Smallest slot duration; negative durations fail the check.
    pub min_duration: f64,
    pub pass: bool,
    /// Largest amount by which any check is missed, in that check's units.
    pub worst_violation: f64,
}

impl VerificationReport {
    /// Users whose rate or energy check fails.
    pub fn failing_users(&self, tol: &VerifyTolerances) -> Vec<usize> {
        (0..self.rate_margins.len())
            .filter(|&k| self.rate_margins[k] < -tol.rate || self.energy_margins_j[k] < -tol.energy_j)
            .collect()
    }
}

/// Checks a plan against the rate, energy and time constraints, using
/// only the channel, the user specs and the plan's own vectors.
pub fn verify_plan(instance: &SystemInstance, plan: &EnergySignalPlan, tol: &VerifyTolerances) -> VerificationReport {
    let h = instance.channel();
    let t_f = instance.config().frame_length_s;
    let tau_bar = plan.tau_bar;
    let k = instance.num_users();
    let received: Vec<Vec<f64>> = plan.slots.iter().map(|s| s.beam.received_powers(h)).collect();

    let mut rate_margins = Vec::with_capacity(k);
    let mut energy_margins_j = Vec::with_capacity(k);
    for u in 0..k {
        let user = instance.user(u);
        let p_up = plan.uplink_powers.get(u).copied().unwrap_or(f64::NAN);
        let rate = achievable_rate(tau_bar, p_up, instance.zf_noise()[u]);
        rate_margins.push(rate - user.rate_req);

        let harvested: f64 =
            plan.slots.iter().zip(&received).map(|(s, r)| s.duration * user.eh_model.harvest(r[u])).sum();
        let stored = user.initial_energy_j + t_f * harvested;
        let spent = ((1.0 - tau_bar) * p_up + user.power_req_w) * t_f;
        energy_margins_j.push(stored - spent);
    }

    let total: f64 = plan.slots.iter().map(|s| s.duration).sum();
    let duration_residual = total - tau_bar;
    let min_duration = plan.slots.iter().map(|s| s.duration).fold(f64::INFINITY, f64::min);

    let mut worst: f64 = 0.0;
    for m in &rate_margins {
        worst = worst.max(-m);
    }
    for m in &energy_margins_j {
        worst = worst.max(-m);
    }
    worst = worst.max(duration_residual.abs());
    if plan.slots.iter().any(|s| s.duration < 0.0) {
        worst = worst.max(-min_duration);
    }
    let tau_ok = (0.0..=1.0).contains(&tau_bar);

    let pass = tau_ok
        && rate_margins.iter().all(|m| *m >= -tol.rate)
        && energy_margins_j.iter().all(|m| *m >= -tol.energy_j)
        && duration_residual.abs() <= tol.duration
        && plan.slots.iter().all(|s| s.duration >= 0.0);
    VerificationReport {
        rate_margins,
        energy_margins_j,
        duration_residual,
        min_duration,
        pass,
        worst_violation: if worst.is_nan() { f64::INFINITY } else { worst },
    }
}

/// Gap and slackness of a primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityCertificate {
    /// `|‖w‖² − ρᵀλ| / max(ρᵀλ, ε)`.
    pub gap: f64,
    /// Largest `(|h_k w|² − ρ_k)/ρ_k` over users with active multipliers.
    pub worst_slackness: f64,
    pub slackness_holds: bool,
}

/// Multipliers below this fraction of the largest count as inactive.
pub const ACTIVE_MULTIPLIER: f64 = 1e-6;
pub const SLACKNESS_TOL: f64 = 1e-6;

/// Certifies `beam` against `dual` for targets `rho`. Primal feasibility is
/// not checked here; see [`BeamVector::received_powers`].
pub fn certify_duality(h: &CMatrix, rho: &[f64], dual: &DualSolution, beam: &BeamVector) -> DualityCertificate {
    let bound: f64 = rho.iter().zip(&dual.lambda).map(|(r, l)| r * l).sum();
    let gap = (beam.power - bound).abs() / bound.max(f64::MIN_POSITIVE);
    let gap = if beam.power == 0.0 && bound == 0.0 { 0.0 } else { gap };

    let lmax = dual.lambda.iter().copied().fold(0.0, f64::max);
    let received = beam.received_powers(h);
    let mut worst: f64 = f64::NEG_INFINITY;
    for (k, (&l, &r)) in dual.lambda.iter().zip(rho).enumerate() {
        if l > ACTIVE_MULTIPLIER * lmax && r > 0.0 {
            worst = worst.max((received[k] - r) / r);
        }
    }
    DualityCertificate { gap, worst_slackness: worst.max(0.0), slackness_holds: !(worst > SLACKNESS_TOL) }
}
