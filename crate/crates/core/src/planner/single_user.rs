use alloc::vec;

use crate::eh_model::Harvester;
use crate::numerics::{find_min_root, maximize_unimodal};
use crate::psi_solver::BeamVector;
use crate::system_model::SystemInstance;
use crate::{Error, Result};

use super::{EnergySignalPlan, Scheme, Slot};

const ROOT_TOL: f64 = 1e-15;

/// `f_SU(τ̄) = τ̄·φ(A²) − ξ^d(τ̄)` for user 0: the surplus when the user is
/// held at saturation for the whole downlink phase.
pub fn single_user_margin(instance: &SystemInstance, tau_bar: f64) -> f64 {
    let sat = instance.user(0).eh_model.saturation_output();
    tau_bar * sat - instance.required_harvest(0, tau_bar)
}

/// Optimal design for one user: MRT driven exactly into saturation for the
/// shortest feasible downlink phase.
pub fn solve_single_user(instance: &SystemInstance) -> Result<EnergySignalPlan> {
    if instance.num_users() != 1 {
        return Err(Error::InvalidInput("single-user scheme needs exactly one user"));
    }
    let f = |t: f64| single_user_margin(instance, t);
    if f(0.0) >= 0.0 {
        return Ok(EnergySignalPlan::empty(instance, Scheme::SingleUser));
    }
    let upper = 1.0 - f64::EPSILON;
    let tau = match find_min_root(f, 0.0, upper, ROOT_TOL) {
        Ok(t) => t,
        Err(Error::NoRoot) => {
            // f is concave, so a positive region too narrow for the scan
            // still contains the maximiser.
            let (peak, value) = maximize_unimodal(f, 0.0, upper, 1e-12);
            if value < 0.0 {
                return Err(Error::Infeasible);
            }
            find_min_root(f, 0.0, peak, ROOT_TOL)?
        }
        Err(e) => return Err(e),
    };

    let h = instance.channel().row(0);
    let gain = instance.channel_gain(0);
    let amp = instance.user(0).eh_model.sat_input().sqrt();
    let beam = BeamVector::new(h.iter().map(|z| z.conj() * (amp / gain)).collect());
    Ok(EnergySignalPlan::new(instance, tau, vec![Slot { duration: tau, beam }], Scheme::SingleUser))
}
