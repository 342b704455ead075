//! Schemes built from weighted sums of per-user MRT beams.
//!
//! At a given `τ̄`, user `k` must spend `t_k = max(0, ξ^d_k(τ̄) / φ_k(A_k²))`
//! of the frame at saturation. Sorting users by `t_k` gives a staircase:
//! slot `n` serves every user whose need is not yet met, and lasts until the
//! next user is done. A final slot with a zero beam fills the rest of `τ̄`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::eh_model::Harvester;
use crate::psi_solver::{received_power, BeamVector};
use crate::system_model::SystemInstance;
use crate::{Error, Result};

use super::{min_power_beam, EnergySignalPlan, Scheme, Slot};

/// The `τ̄` values visited by the closed-form schemes: `0, ε, 2ε, …` up to
/// `1 − ε`.
pub(crate) fn tau_scan(step: f64) -> impl Iterator<Item = f64> {
    let count = ((1.0 - step) / step + 1e-9).floor().max(0.0) as usize;
    (0..=count).map(move |i| i as f64 * step)
}

/// Users in order of increasing saturation time, with those times.
struct Staircase {
    order: Vec<usize>,
    times: Vec<f64>,
}

fn staircase(instance: &SystemInstance, tau_bar: f64) -> Option<Staircase> {
    let k = instance.num_users();
    let mut t = Vec::with_capacity(k);
    for u in 0..k {
        let need = instance.required_harvest(u, tau_bar);
        let v = (need / instance.user(u).eh_model.saturation_output()).max(0.0);
        if !v.is_finite() || v > tau_bar {
            return None;
        }
        t.push(v);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let times = order.iter().map(|&u| t[u]).collect();
    Some(Staircase { order, times })
}

/// Slot beams `w_n = Σ_{i ≥ n} A_{k_i} h_{k_i}^H / ‖h_{k_i}‖²` for the
/// staircase order.
fn weighted_mrt_beams(instance: &SystemInstance, order: &[usize]) -> Vec<Vec<Complex64>> {
    let nt = instance.num_antennas();
    let mut beams = vec![Vec::new(); order.len()];
    let mut acc = vec![Complex64::new(0.0, 0.0); nt];
    for (n, &u) in order.iter().enumerate().rev() {
        let scale = instance.user(u).eh_model.sat_input().sqrt() / instance.channel_gain(u);
        for (a, h) in acc.iter_mut().zip(instance.channel().row(u)) {
            *a += h.conj() * scale;
        }
        beams[n] = acc.clone();
    }
    beams
}

fn staircase_slots(instance: &SystemInstance, tau_bar: f64, rescale: bool) -> Option<Vec<Slot>> {
    let stairs = staircase(instance, tau_bar)?;
    let beams = weighted_mrt_beams(instance, &stairs.order);
    let mut slots = Vec::with_capacity(beams.len() + 1);
    let mut prev = 0.0;
    for (n, w) in beams.into_iter().enumerate() {
        let duration = stairs.times[n] - prev;
        prev = stairs.times[n];
        let mut beam = BeamVector::new(w);
        if rescale {
            let omega = stairs.order[n..]
                .iter()
                .map(|&u| {
                    let amp = instance.user(u).eh_model.sat_input().sqrt();
                    amp / received_power(instance.channel(), u, &beam.w).sqrt()
                })
                .fold(0.0, f64::max);
            if !omega.is_finite() {
                return None;
            }
            beam = beam.scaled(omega);
        }
        slots.push(Slot { duration, beam });
    }
    slots.push(Slot { duration: tau_bar - prev, beam: BeamVector::zero(instance.num_antennas()) });
    Some(slots)
}

fn best_over_tau(instance: &SystemInstance, rescale: bool, scheme: Scheme) -> Result<EnergySignalPlan> {
    let mut best: Option<EnergySignalPlan> = None;
    for tau in tau_scan(instance.config().mrt_step) {
        let Some(slots) = staircase_slots(instance, tau, rescale) else { continue };
        let plan = EnergySignalPlan::new(instance, tau, slots, scheme);
        if best.as_ref().is_none_or(|b| plan.cost_dl < b.cost_dl) {
            best = Some(plan);
        }
    }
    best.ok_or(Error::Infeasible)
}

/// Weighted-MRT staircase, optimal when the channel rows are orthogonal.
/// On other channels the plan may not meet every requirement.
pub fn solve_massive_miso(instance: &SystemInstance) -> Result<EnergySignalPlan> {
    best_over_tau(instance, false, Scheme::MassiveMiso)
}

/// Weighted-MRT staircase with each slot scaled by
/// `ω_n = max_{k pending} A_k / |h_k w_n|`, so every pending user saturates.
pub fn solve_mrt_suboptimal(instance: &SystemInstance) -> Result<EnergySignalPlan> {
    best_over_tau(instance, true, Scheme::Mrt)
}

/// Keeps the MRT scheme's `τ̄` and durations and replaces each beam by the
/// minimum-power beam delivering the same harvested powers.
pub fn solve_sdr_suboptimal(instance: &SystemInstance) -> Result<EnergySignalPlan> {
    let mrt = solve_mrt_suboptimal(instance)?;
    let h = instance.channel();
    let mut slots = Vec::with_capacity(mrt.slots.len());
    for slot in mrt.slots {
        if slot.beam.is_zero() {
            slots.push(slot);
            continue;
        }
        let mut targets = Vec::with_capacity(instance.num_users());
        for (u, p) in slot.beam.received_powers(h).into_iter().enumerate() {
            let model = &instance.user(u).eh_model;
            targets.push(model.inverse_harvested_power(model.harvest(p))?);
        }
        let beam = sdr_beam(instance, &targets, &slot.beam)?;
        slots.push(Slot { duration: slot.duration, beam });
    }
    Ok(EnergySignalPlan::new(instance, mrt.tau_bar, slots, Scheme::Sdr))
}

/// Minimum-power beam for `targets`, never worse than `fallback`.
fn sdr_beam(instance: &SystemInstance, targets: &[f64], fallback: &BeamVector) -> Result<BeamVector> {
    let beam = match min_power_beam(instance.channel(), targets) {
        Ok(beam) => beam,
        Err(Error::DegenerateEigenspace | Error::OptimalityCheckFailed(_) | Error::PsiNotConverged { .. }) => {
            return Ok(fallback.clone())
        }
        Err(e) => return Err(e),
    };
    Ok(if beam.power <= fallback.power { beam } else { fallback.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::CMatrix;
    use crate::system_model::{SystemConfig, UserSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn orthogonal(users: Vec<UserSpec>) -> SystemInstance {
        let k = users.len();
        let gains = [3e-3, 2e-3, 1.5e-3];
        let h = CMatrix::from_fn(k, k + 1, |i, j| if i == j { c(gains[i], gains[i] * 0.5) } else { c(0.0, 0.0) });
        SystemInstance::new(SystemConfig::new(k, k + 1), users, h).unwrap()
    }

    #[test]
    fn scan_points() {
        let v: Vec<f64> = tau_scan(0.01).collect();
        assert_eq!(v.len(), 100);
        assert!((v[99] - 0.99).abs() < 1e-12);
        assert_eq!(tau_scan(1.0).count(), 1);
    }

    #[test]
    fn orthogonal_closed_form() {
        let users = vec![
            UserSpec { power_req_w: 2e-5, ..UserSpec::default() },
            UserSpec { power_req_w: 6e-5, ..UserSpec::default() },
            UserSpec { power_req_w: 4e-5, ..UserSpec::default() },
        ];
        let inst = orthogonal(users);
        let massive = solve_massive_miso(&inst).unwrap();
        let mrt = solve_mrt_suboptimal(&inst).unwrap();
        let sdr = solve_sdr_suboptimal(&inst).unwrap();
        let closed: f64 = (0..3)
            .map(|k| {
                let m = &inst.user(k).eh_model;
                inst.required_harvest(k, massive.tau_bar) * m.sat_input()
                    / (m.saturation_output() * inst.channel_gain(k))
            })
            .sum();
        for cost in [massive.cost_dl, mrt.cost_dl, sdr.cost_dl] {
            assert!((cost - closed).abs() <= 1e-9 * closed, "{cost} vs {closed}");
        }
        assert_eq!(massive.tau_bar, mrt.tau_bar);
        for (a, b) in massive.slots.iter().zip(&mrt.slots) {
            assert!((a.beam.power - b.beam.power).abs() <= 1e-12 * a.beam.power.max(1e-300));
        }
    }

    #[test]
    fn user_without_need_gets_no_dedicated_time() {
        let users = vec![
            UserSpec { power_req_w: 0.0, ..UserSpec::default() },
            UserSpec { power_req_w: 5e-5, ..UserSpec::default() },
        ];
        let inst = orthogonal(users);
        let plan = solve_massive_miso(&inst).unwrap();
        // user 0 sorts first with t = 0, so its exclusive slot vanishes
        assert_eq!(plan.slots.len(), 2);
        let powers = plan.slots[0].beam.received_powers(inst.channel());
        assert!(powers[0] < 1e-30);
    }

    #[test]
    fn infeasible_when_saturation_is_not_enough() {
        let inst = orthogonal(vec![UserSpec { power_req_w: 1.0, ..UserSpec::default() }; 2]);
        assert_eq!(solve_mrt_suboptimal(&inst), Err(Error::Infeasible));
    }

    #[test]
    fn sdr_never_costs_more_than_mrt() {
        let h = CMatrix::from_row_major(
            2,
            3,
            vec![c(3e-3, 0.0), c(1e-3, 1e-3), c(0.0, 0.0), c(1e-3, 0.0), c(2e-3, -1e-3), c(1e-3, 0.0)],
        );
        let users = vec![
            UserSpec { power_req_w: 3e-5, ..UserSpec::default() },
            UserSpec { power_req_w: 5e-5, ..UserSpec::default() },
        ];
        let inst = SystemInstance::new(SystemConfig::new(2, 3), users, h).unwrap();
        let mrt = solve_mrt_suboptimal(&inst).unwrap();
        let sdr = solve_sdr_suboptimal(&inst).unwrap();
        assert!(sdr.cost_dl <= mrt.cost_dl * (1.0 + 1e-8));
        assert!(sdr.cost_dl < mrt.cost_dl);
    }
}
