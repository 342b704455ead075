//! Grid search over harvest targets.
//!
//! Each user's harvested power is quantized to `L_μ` levels
//! `i·φ_k(A_k²)/(L_μ − 1)`, giving `L_μ^K` joint targets indexed by the
//! base-`L_μ` digits of `j` (digit `k` is user `k`'s level). `ψ` is
//! evaluated once per target. For each `τ̄` on an `L_τ` grid an LP then
//! splits `τ̄` among the targets at minimum cost.

use alloc::vec;
use alloc::vec::Vec;

use crate::eh_model::Harvester;
use crate::numerics::{solve_lp, LpProblem, Relation};
use crate::psi_solver::{compute_psi, BeamVector, PsiOptions};
use crate::system_model::SystemInstance;
use crate::{Error, Result};

use super::{min_power_beam, AllocationResult, EnergySignalPlan, HarvestTarget, Scheme, Slot};

/// Grids above this many points are rejected.
const MAX_POINTS: usize = 1 << 22;

/// `ψ` on every joint harvest target of the grid.
///
/// Depends only on the channel, the EH models and `L_μ`, so one grid can
/// serve any number of requirement settings on the same channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiGrid {
    levels: usize,
    /// `mu_levels[k][i]`: harvested power of user `k` at level `i`.
    mu_levels: Vec<Vec<f64>>,
    /// Received power producing `mu_levels[k][i]`.
    rho_levels: Vec<Vec<f64>>,
    psi: Vec<f64>,
}

impl PsiGrid {
    pub fn new(instance: &SystemInstance) -> Result<Self> {
        let levels = instance.config().grid_mu;
        let k = instance.num_users();
        if levels < 2 {
            return Err(Error::InvalidInput("harvest grid needs at least two levels"));
        }
        let points = u32::try_from(k)
            .ok()
            .and_then(|k| levels.checked_pow(k))
            .filter(|&n| n <= MAX_POINTS)
            .ok_or(Error::InvalidInput("harvest grid too large"))?;

        let mut mu_levels = Vec::with_capacity(k);
        let mut rho_levels = Vec::with_capacity(k);
        for u in 0..k {
            let model = &instance.user(u).eh_model;
            let sat = model.saturation_output();
            let mu: Vec<f64> = (0..levels).map(|i| i as f64 * sat / (levels - 1) as f64).collect();
            let rho = mu.iter().map(|&m| model.inverse_harvested_power(m)).collect::<Result<Vec<_>>>()?;
            mu_levels.push(mu);
            rho_levels.push(rho);
        }

        let mut grid = Self { levels, mu_levels, rho_levels, psi: Vec::new() };
        let opts = PsiOptions::default();
        let mut psi = Vec::with_capacity(points);
        for j in 0..points {
            let rho = grid.rho(j);
            let value = if rho.iter().all(|&r| r == 0.0) {
                0.0
            } else {
                match compute_psi(instance.channel(), &rho, &opts) {
                    Ok((v, _)) => v,
                    Err(Error::PsiNotConverged { upper, .. }) => upper,
                    Err(e) => return Err(e),
                }
            };
            psi.push(value);
        }
        grid.psi = psi;
        Ok(grid)
    }

    /// Levels per user, `L_μ`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn num_users(&self) -> usize {
        self.mu_levels.len()
    }

    /// Number of joint targets, `L_μ^K`.
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Level of user `k` at grid index `j`.
    pub fn digit(&self, j: usize, k: usize) -> usize {
        j / self.levels.pow(k as u32) % self.levels
    }

    pub fn mu(&self, j: usize) -> Vec<f64> {
        (0..self.num_users()).map(|k| self.mu_levels[k][self.digit(j, k)]).collect()
    }

    pub fn rho(&self, j: usize) -> Vec<f64> {
        (0..self.num_users()).map(|k| self.rho_levels[k][self.digit(j, k)]).collect()
    }

    pub fn psi(&self, j: usize) -> f64 {
        self.psi[j]
    }

    pub fn psi_values(&self) -> &[f64] {
        &self.psi
    }
}

/// Grid allocator with a freshly built [`PsiGrid`].
pub fn allocate_resources_grid(instance: &SystemInstance) -> Result<AllocationResult> {
    allocate_resources_grid_with(instance, &PsiGrid::new(instance)?)
}

/// Grid allocator reusing `grid`, which must have been built for the same
/// channel and EH models.
pub fn allocate_resources_grid_with(instance: &SystemInstance, grid: &PsiGrid) -> Result<AllocationResult> {
    let k = instance.num_users();
    if grid.num_users() != k {
        return Err(Error::InvalidInput("harvest grid built for another user count"));
    }
    let denom = (grid.levels - 1) as f64;
    // user rows in units of the saturation output
    let rows: Vec<Vec<f64>> =
        (0..k).map(|u| (0..grid.len()).map(|j| grid.digit(j, u) as f64 / denom).collect()).collect();

    let steps = instance.config().grid_tau;
    let mut best: Option<AllocationResult> = None;
    for p in 0..steps {
        let tau_bar = p as f64 / (steps - 1) as f64;
        let Some(need) = normalized_needs(instance, tau_bar) else { continue };
        let Some(result) = allocate_at(grid, &rows, &need, tau_bar)? else { continue };
        if best.as_ref().is_none_or(|b| result.cost < b.cost) {
            best = Some(result);
        }
    }
    best.ok_or(Error::Infeasible)
}

/// `max(0, ξ^d_k(τ̄)) / φ_k(A_k²)`, or `None` when some user cannot be
/// served within `τ̄` even at saturation.
fn normalized_needs(instance: &SystemInstance, tau_bar: f64) -> Option<Vec<f64>> {
    let mut need = Vec::with_capacity(instance.num_users());
    for u in 0..instance.num_users() {
        let v = instance.required_harvest(u, tau_bar).max(0.0) / instance.user(u).eh_model.saturation_output();
        if !v.is_finite() || v > tau_bar {
            return None;
        }
        need.push(v);
    }
    Some(need)
}

fn allocate_at(grid: &PsiGrid, rows: &[Vec<f64>], need: &[f64], tau_bar: f64) -> Result<Option<AllocationResult>> {
    let all: Vec<usize> = (0..grid.len()).collect();
    let Some(x) = solve_split(grid, rows, need, tau_bar, &all)? else { return Ok(None) };
    let floor = 1e-12 * tau_bar;
    let mut support: Vec<usize> = (0..x.len()).filter(|&j| x[j] > floor).collect();
    let lp_support = support.len();
    let mut durations: Vec<f64> = support.iter().map(|&j| x[j]).collect();

    let limit = grid.num_users() + 1;
    if support.len() > limit {
        let mut by_size: Vec<usize> = (0..support.len()).collect();
        by_size.sort_by(|&a, &b| durations[b].total_cmp(&durations[a]));
        let mut kept: Vec<usize> = by_size[..limit].iter().map(|&i| support[i]).collect();
        kept.sort_unstable();
        if let Some(y) = solve_split(grid, rows, need, tau_bar, &kept)? {
            durations = y;
            support = kept;
        }
    }

    let cost = support.iter().zip(&durations).fold(0.0, |acc, (&j, &t)| acc + grid.psi(j) * t);
    Ok(Some(AllocationResult {
        tau_bar,
        targets: support.iter().map(|&j| HarvestTarget { mu: grid.mu(j) }).collect(),
        durations,
        psi: support.iter().map(|&j| grid.psi(j)).collect(),
        grid_indices: support,
        lp_support,
        cost,
    }))
}

/// `min Σ ψ_j τ_j` over the columns in `cols`, subject to meeting `need`
/// and `Σ τ_j = τ̄`. Returns durations indexed like `cols`.
fn solve_split(
    grid: &PsiGrid,
    rows: &[Vec<f64>],
    need: &[f64],
    tau_bar: f64,
    cols: &[usize],
) -> Result<Option<Vec<f64>>> {
    let mut lp = LpProblem::minimize(cols.iter().map(|&j| grid.psi(j)).collect());
    for (row, &n) in rows.iter().zip(need) {
        if n > 0.0 {
            lp.add_constraint(cols.iter().map(|&j| row[j]).collect(), Relation::Ge, n);
        }
    }
    lp.add_constraint(vec![1.0; cols.len()], Relation::Eq, tau_bar);
    let sol = solve_lp(&lp)?;
    Ok(sol.is_optimal().then_some(sol.x))
}

/// Optimal scheme with a freshly built [`PsiGrid`].
pub fn solve_optimal(instance: &SystemInstance) -> Result<EnergySignalPlan> {
    solve_optimal_with(instance, &PsiGrid::new(instance)?)
}

/// Grid allocation followed by one minimum-power beam per kept target.
pub fn solve_optimal_with(instance: &SystemInstance, grid: &PsiGrid) -> Result<EnergySignalPlan> {
    plan_from_allocation(instance, grid, &allocate_resources_grid_with(instance, grid)?)
}

/// Turns an allocation computed on `grid` into a plan.
pub fn plan_from_allocation(
    instance: &SystemInstance,
    grid: &PsiGrid,
    alloc: &AllocationResult,
) -> Result<EnergySignalPlan> {
    let mut slots = Vec::with_capacity(alloc.grid_indices.len());
    for (&j, &duration) in alloc.grid_indices.iter().zip(&alloc.durations) {
        let rho = grid.rho(j);
        let beam = if rho.iter().all(|&r| r == 0.0) {
            BeamVector::zero(instance.num_antennas())
        } else {
            min_power_beam(instance.channel(), &rho)?
        };
        slots.push(Slot { duration, beam });
    }
    Ok(EnergySignalPlan::new(instance, alloc.tau_bar, slots, Scheme::Optimal))
}
