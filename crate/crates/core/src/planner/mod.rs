//! End-to-end energy signal design schemes.
//!
//! Every scheme returns an [`EnergySignalPlan`]: the downlink fraction `τ̄`,
//! a list of slots (normalized duration and transmit vector) whose
//! durations add up to `τ̄`, and the uplink powers `p_k^u = ξ^u_k(τ̄)`.
//!
//! - [`solve_single_user`]: closed form for one user.
//! - [`solve_optimal`]: grid search over harvest targets with an LP per `τ̄`.
//! - [`solve_massive_miso`]: weighted MRT sums, optimal for orthogonal
//!   channels.
//! - [`solve_mrt_suboptimal`]: the same construction, rescaled so every
//!   pending user saturates.
//! - [`solve_sdr_suboptimal`]: MRT slots re-solved as minimum-power
//!   problems.

mod closed_form;
mod grid;
mod single_user;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use closed_form::{solve_massive_miso, solve_mrt_suboptimal, solve_sdr_suboptimal};
pub use grid::{
    allocate_resources_grid, allocate_resources_grid_with, plan_from_allocation, solve_optimal, solve_optimal_with,
    PsiGrid,
};
pub use single_user::{single_user_margin, solve_single_user};

use crate::numerics::CMatrix;
use crate::psi_solver::{compute_psi, local_rank_one_beam, min_trace_beamforming, BeamVector, PsiOptions};
use crate::system_model::SystemInstance;
use crate::{Error, Result};

/// Instantaneous harvested powers `μ_k` (W), one per user, for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestTarget {
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    SingleUser,
    Optimal,
    MassiveMiso,
    Mrt,
    Sdr,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::SingleUser, Scheme::Optimal, Scheme::MassiveMiso, Scheme::Mrt, Scheme::Sdr];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::SingleUser => "single",
            Scheme::Optimal => "optimal",
            Scheme::MassiveMiso => "massive",
            Scheme::Mrt => "mrt",
            Scheme::Sdr => "sdr",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL.into_iter().find(|scheme| scheme.as_str() == s).ok_or(Error::InvalidInput("unknown scheme"))
    }
}

/// One downlink slot: a normalized duration and the vector sent during it.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub duration: f64,
    pub beam: BeamVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySignalPlan {
    pub tau_bar: f64,
    pub slots: Vec<Slot>,
    pub uplink_powers: Vec<f64>,
    /// Average downlink transmit power `Σ τ_n ‖w_n‖²` in W.
    pub cost_dl: f64,
    pub scheme: Scheme,
}

impl EnergySignalPlan {
    /// Assembles a plan, dropping zero-length slots and computing the cost.
    pub fn new(instance: &SystemInstance, tau_bar: f64, slots: Vec<Slot>, scheme: Scheme) -> Self {
        let slots: Vec<Slot> = slots.into_iter().filter(|s| s.duration > 0.0).collect();
        let uplink_powers = (0..instance.num_users()).map(|k| instance.min_uplink_power(k, tau_bar)).collect();
        let mut plan = Self { tau_bar, slots, uplink_powers, cost_dl: 0.0, scheme };
        plan.cost_dl = plan_cost(&plan);
        plan
    }

    /// The plan that never transmits in the downlink.
    pub fn empty(instance: &SystemInstance, scheme: Scheme) -> Self {
        Self::new(instance, 0.0, Vec::new(), scheme)
    }
}

/// Average downlink transmit power `Σ_n τ_n ‖w_n‖²`.
pub fn plan_cost(plan: &EnergySignalPlan) -> f64 {
    plan.slots.iter().fold(0.0, |acc, s| acc + s.duration * s.beam.power)
}

/// Output of the grid allocator: the chosen `τ̄`, the harvest targets kept
/// in the solution with their durations, and `ψ` at each target.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub tau_bar: f64,
    pub targets: Vec<HarvestTarget>,
    pub durations: Vec<f64>,
    pub psi: Vec<f64>,
    /// Grid index of every kept target.
    pub grid_indices: Vec<usize>,
    /// Nonzero durations in the LP solution before any trimming.
    pub lp_support: usize,
    /// LP objective `Σ ψ_j τ_j` at the chosen `τ̄`.
    pub cost: f64,
}

/// Minimum-power beam meeting `targets`.
///
/// With four or more users the optimal covariance may have rank two, in
/// which case no beam reaches `ψ`; the best locally refined rank-one beam
/// is returned instead.
pub(crate) fn min_power_beam(h: &CMatrix, targets: &[f64]) -> Result<BeamVector> {
    match min_trace_beamforming(h, targets) {
        Err(Error::DegenerateEigenspace | Error::OptimalityCheckFailed(_)) => {
            let (_, dual) = compute_psi(h, targets, &PsiOptions::default())?;
            local_rank_one_beam(h, &dual, targets)
        }
        other => other,
    }
}

/// Runs the named scheme with its default settings.
pub fn solve(instance: &SystemInstance, scheme: Scheme) -> Result<EnergySignalPlan> {
    match scheme {
        Scheme::SingleUser => solve_single_user(instance),
        Scheme::Optimal => solve_optimal(instance),
        Scheme::MassiveMiso => solve_massive_miso(instance),
        Scheme::Mrt => solve_mrt_suboptimal(instance),
        Scheme::Sdr => solve_sdr_suboptimal(instance),
    }
}
