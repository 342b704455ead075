//! JSON form of an [`EnergySignalPlan`] and the checks run on a loaded one.

use std::path::Path;

use anyhow::{ensure, Context};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use wpcn_core::oracle::{certify_duality, verify_plan, DualityCertificate, VerificationReport, VerifyTolerances};
use wpcn_core::planner::{EnergySignalPlan, Scheme, Slot};
use wpcn_core::psi_solver::{compute_psi, BeamVector, PsiOptions};
use wpcn_core::system_model::SystemInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotRecord {
    pub duration: f64,
    pub beam_re: Vec<f64>,
    pub beam_im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRecord {
    pub scheme: String,
    /// Seed of the channel draw the plan was computed for.
    pub seed: u64,
    pub tau_bar: f64,
    pub cost_dl_w: f64,
    pub uplink_powers_w: Vec<f64>,
    pub slots: Vec<SlotRecord>,
}

impl PlanRecord {
    pub fn from_plan(plan: &EnergySignalPlan, seed: u64) -> Self {
        Self {
            scheme: plan.scheme.to_string(),
            seed,
            tau_bar: plan.tau_bar,
            cost_dl_w: plan.cost_dl,
            uplink_powers_w: plan.uplink_powers.clone(),
            slots: plan
                .slots
                .iter()
                .map(|s| SlotRecord {
                    duration: s.duration,
                    beam_re: s.beam.w.iter().map(|z| z.re).collect(),
                    beam_im: s.beam.w.iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds the plan. The cost is recomputed from the vectors rather
    /// than taken from the file.
    pub fn to_plan(&self) -> anyhow::Result<EnergySignalPlan> {
        let scheme: Scheme = self.scheme.parse()?;
        let mut slots = Vec::with_capacity(self.slots.len());
        for (n, s) in self.slots.iter().enumerate() {
            ensure!(s.beam_re.len() == s.beam_im.len(), "slot {n}: beam_re and beam_im differ in length");
            let w = s.beam_re.iter().zip(&s.beam_im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            slots.push(Slot { duration: s.duration, beam: BeamVector::new(w) });
        }
        let mut plan = EnergySignalPlan {
            tau_bar: self.tau_bar,
            slots,
            uplink_powers: self.uplink_powers_w.clone(),
            cost_dl: 0.0,
            scheme,
        };
        plan.cost_dl = wpcn_core::planner::plan_cost(&plan);
        Ok(plan)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Duality gap above which a slot beam is reported as not optimal.
pub const CERTIFICATE_GAP: f64 = 1e-6;

/// Outcome of checking a plan against its scenario.
#[derive(Debug, Clone)]
pub struct PlanCheck {
    pub report: VerificationReport,
    /// One entry per slot with a nonzero beam, for schemes whose beams are
    /// minimum-power solutions. Empty otherwise.
    pub certificates: Vec<(usize, DualityCertificate)>,
    pub pass: bool,
}

/// Runs the feasibility verifier and, for the schemes that claim
/// minimum-power beams, a duality certificate per slot.
///
/// With four or more users a minimum-power covariance need not have rank
/// one, so certificates are only requested for up to three users.
pub fn check_plan(
    instance: &SystemInstance,
    plan: &EnergySignalPlan,
    tol: &VerifyTolerances,
) -> anyhow::Result<PlanCheck> {
    let report = verify_plan(instance, plan, tol);
    let claims_optimal_beams = matches!(plan.scheme, Scheme::SingleUser | Scheme::Optimal | Scheme::Sdr);
    let mut certificates = Vec::new();
    if claims_optimal_beams && instance.num_users() <= 3 {
        let h = instance.channel();
        for (n, slot) in plan.slots.iter().enumerate() {
            ensure!(slot.beam.w.len() == instance.num_antennas(), "slot {n}: beam length differs from antenna count");
            if slot.beam.is_zero() {
                continue;
            }
            let rho = slot.beam.received_powers(h);
            let (_, dual) = compute_psi(h, &rho, &PsiOptions::default())?;
            certificates.push((n, certify_duality(h, &rho, &dual, &slot.beam)));
        }
    }
    let pass = report.pass && certificates.iter().all(|(_, c)| c.gap <= CERTIFICATE_GAP && c.slackness_holds);
    Ok(PlanCheck { report, certificates, pass })
}
