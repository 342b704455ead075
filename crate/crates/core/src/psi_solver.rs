//! Minimum instantaneous transmit power for a vector of received-power
//! targets, and the beamformer achieving it.
//!
//! For channel rows `h_k` and targets `ρ_k ≥ 0`,
//!
//! ```text
//! ψ(ρ) = min ‖x‖²  s.t.  |h_k x|² ≥ ρ_k  for all k
//! ```
//!
//! The semidefinite relaxation of this problem is tight, and its dual is the
//! `K`-dimensional problem
//!
//! ```text
//! max ρᵀλ  s.t.  λ ⪰ 0,  λ_max(B Λ B) ≤ 1,   B = (H H^H)^{1/2}, Λ = diag(λ)
//! ```
//!
//! `B Λ B` shares its nonzero spectrum with `Λ^{1/2} G Λ^{1/2}` where
//! `G = H H^H`, so every eigenproblem here is `K × K` no matter how many
//! antennas there are. The dual is solved by a cutting-plane method: each
//! top eigenvector `u` of `B Λ B` yields the valid linear cut
//! `Σ_k λ_k |(B u)_k|² ≤ 1`, and an LP master over the cuts gives an upper
//! bound while the rescaled iterate `λ / λ_max` gives a lower bound. Query
//! points are stabilized by averaging the master solution with the best
//! feasible point found so far.
//!
//! The optimal beamformer is `c·v`, with `v` the dominant eigenvector of
//! `Δ = H^H Λ H` at the dual optimum.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::numerics::{dot, solve_real};
use crate::numerics::{hermitian_eig, solve_lp, CMatrix, LpProblem, Relation};
use crate::system_model::RANK_TOL;
use crate::{Error, Result};

/// Stopping rule for [`compute_psi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiOptions {
    /// Relative gap between the certified bounds at which to stop.
    pub tol: f64,
    /// Maximum number of cuts, seeds included.
    pub max_cuts: usize,
}

impl Default for PsiOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_cuts: 500 }
    }
}

/// A feasible dual point with its certificate data.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Multipliers in the units of the caller's channel (1/gain).
    pub lambda: Vec<f64>,
    /// `ρᵀλ`, a certified lower bound on `ψ(ρ)`.
    pub objective: f64,
    /// Best LP-master value, a certified upper bound on `ψ(ρ)`.
    pub upper_bound: f64,
    /// Cut coefficient rows `a` with `a·λ ≤ 1`, in caller units.
    pub cuts: Vec<Vec<f64>>,
    /// `(upper_bound − objective) / upper_bound`.
    pub gap_certificate: f64,
}

/// A transmit vector `w` with its power `‖w‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    pub w: Vec<Complex64>,
    pub power: f64,
}

impl BeamVector {
    pub fn new(w: Vec<Complex64>) -> Self {
        let power = w.iter().map(|z| z.norm_sqr()).sum();
        Self { w, power }
    }

    pub fn zero(num_antennas: usize) -> Self {
        Self { w: vec![Complex64::new(0.0, 0.0); num_antennas], power: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.power == 0.0
    }

    /// Scales the vector by a real factor.
    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.w.iter().map(|z| z * s).collect())
    }

    /// Received powers `|h_k w|²` for every row of `h`.
    pub fn received_powers(&self, h: &CMatrix) -> Vec<f64> {
        (0..h.rows()).map(|k| dot(h.row(k), &self.w).norm_sqr()).collect()
    }
}

/// Gram matrix normalized so its largest diagonal entry is 1, with the
/// scale it was divided by. Rank deficiency is rejected here.
struct NormalizedGram {
    g: CMatrix,
    scale: f64,
}

impl NormalizedGram {
    fn new(h: &CMatrix) -> Result<Self> {
        if h.rows() == 0 || h.cols() < h.rows() {
            return Err(Error::RankDeficientChannel);
        }
        let raw = h.gram();
        let scale = (0..raw.rows()).map(|k| raw[(k, k)].re).fold(0.0, f64::max);
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::RankDeficientChannel);
        }
        let g = raw.scale(1.0 / scale);
        let eig = hermitian_eig(&g)?;
        let bottom = eig.values[eig.values.len() - 1];
        if bottom <= RANK_TOL * RANK_TOL * eig.values[0] {
            return Err(Error::RankDeficientChannel);
        }
        Ok(Self { g, scale })
    }

    fn dim(&self) -> usize {
        self.g.rows()
    }

    /// `Λ^{1/2} G Λ^{1/2}`.
    fn weighted(&self, lambda: &[f64]) -> CMatrix {
        let k = self.dim();
        let s: Vec<f64> = lambda.iter().map(|l| l.max(0.0).sqrt()).collect();
        CMatrix::from_fn(k, k, |i, j| self.g[(i, j)] * (s[i] * s[j]))
    }

    /// Top eigenvalue of `Λ^{1/2} G Λ^{1/2}` and the cut it induces.
    fn separate(&self, lambda: &[f64]) -> Result<(f64, Vec<f64>)> {
        let eig = hermitian_eig(&self.weighted(lambda))?;
        let delta = eig.values[0];
        if !(delta > 0.0) {
            return Err(Error::InvalidInput("dual point has no positive weight"));
        }
        let y = eig.vector(0);
        let sy: Vec<Complex64> = y.iter().zip(lambda).map(|(yi, l)| yi * l.max(0.0).sqrt()).collect();
        let gy = self.g.mul_vec(&sy);
        Ok((delta, gy.iter().map(|z| z.norm_sqr() / delta).collect()))
    }
}

fn master(rho: &[f64], cuts: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let mut lp = LpProblem::minimize(rho.iter().map(|r| -r).collect());
    for cut in cuts {
        lp.add_constraint(cut.clone(), Relation::Le, 1.0);
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Err(Error::Convergence { what: "cutting-plane master", iterations: cuts.len() });
    }
    let value = rho.iter().zip(&sol.x).map(|(r, l)| r * l).sum();
    Ok((sol.x, value))
}

fn validate_rho(h: &CMatrix, rho: &[f64]) -> Result<()> {
    if rho.len() != h.rows() {
        return Err(Error::InvalidInput("target vector length differs from user count"));
    }
    if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidInput("targets must be finite and non-negative"));
    }
    Ok(())
}

/// Solves the dual of the minimum-power problem for targets `rho`.
///
/// Returns `ψ(ρ)` (the certified lower bound `ρᵀλ`, within `opts.tol` of the
/// optimum) and the dual point. Once the cutting-plane bounds are within
/// `POLISH_TRIGGER`, a local refinement of the rank-one primal is attempted;
/// it yields both a primal upper bound and an exact multiplier vector, which
/// is accepted only after its own feasibility check.
pub fn compute_psi(h: &CMatrix, rho: &[f64], opts: &PsiOptions) -> Result<(f64, DualSolution)> {
    validate_rho(h, rho)?;
    let gram = NormalizedGram::new(h)?;
    let k = gram.dim();
    let rho_max = rho.iter().copied().fold(0.0, f64::max);
    if rho_max == 0.0 {
        let dual = DualSolution {
            lambda: vec![0.0; k],
            objective: 0.0,
            upper_bound: 0.0,
            cuts: Vec::new(),
            gap_certificate: 0.0,
        };
        return Ok((0.0, dual));
    }
    let rho_n: Vec<f64> = rho.iter().map(|r| r / rho_max).collect();
    let unscale = rho_max / gram.scale;

    // Cuts generated at the coordinate points λ = e_j / G_jj; they bound
    // every coordinate, so the first master is finite.
    let mut cuts: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let gjj = gram.g[(j, j)].re;
            (0..k).map(|i| gram.g[(i, j)].norm_sqr() / gjj).collect()
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut upper = f64::INFINITY;
    let mut next_polish = POLISH_TRIGGER;
    let offer = |best: &mut Option<(f64, Vec<f64>)>, point: &[f64], delta: f64| {
        let s = 1.0 / delta.max(1.0);
        let value: f64 = rho_n.iter().zip(point).map(|(r, l)| r * l * s).sum();
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            *best = Some((value, point.iter().map(|l| l * s).collect()));
        }
    };

    loop {
        let (outer, value) = master(&rho_n, &cuts)?;
        upper = upper.min(value);
        let mut lower = best.as_ref().map_or(0.0, |b| b.0);
        if upper - lower <= next_polish * upper {
            if let Some((_, centre)) = &best {
                if let Some(p) = polish_from_dual(&gram, &rho_n, centre) {
                    upper = upper.min(p.power);
                    let (delta, _) = gram.separate(&p.lambda)?;
                    offer(&mut best, &p.lambda, delta);
                    lower = best.as_ref().map_or(0.0, |b| b.0);
                }
            }
            next_polish = (upper - lower) / upper * 1e-2;
        }
        if upper - lower <= opts.tol * upper {
            break;
        }
        if cuts.len() >= opts.max_cuts {
            return Err(Error::PsiNotConverged { lower: lower * unscale, upper: upper * unscale, cuts: cuts.len() });
        }
        let query: Vec<f64> = match &best {
            Some((_, centre)) => outer.iter().zip(centre).map(|(o, c)| 0.5 * (o + c)).collect(),
            None => outer.clone(),
        };
        let (delta, cut) = gram.separate(&query)?;
        offer(&mut best, &query, delta);
        let violation: f64 = cut.iter().zip(&outer).map(|(a, l)| a * l).sum();
        if violation > 1.0 + 1e-12 {
            cuts.push(cut);
        } else {
            // The stabilized cut does not separate the master point; fall
            // back to a plain Kelley cut there.
            let (delta, cut) = gram.separate(&outer)?;
            offer(&mut best, &outer, delta);
            cuts.push(cut);
        }
    }

    let (value_n, lambda_n) = best.expect("loop exits with a feasible point");
    let lambda: Vec<f64> = lambda_n.iter().map(|l| l / gram.scale).collect();
    let objective = value_n * unscale;
    let cuts = cuts.into_iter().map(|c| c.into_iter().map(|a| a * gram.scale).collect()).collect();
    let dual = DualSolution {
        lambda,
        objective,
        upper_bound: upper.max(value_n) * unscale,
        cuts,
        gap_certificate: ((upper - value_n) / upper).max(0.0),
    };
    Ok((objective, dual))
}

/// Relative bound gap at which the first primal refinement is tried.
const POLISH_TRIGGER: f64 = 1e-3;

/// Solves the LP master over an explicit set of cuts (caller units) and
/// returns its maximizer as a dual point. The result is an outer
/// approximation: its objective bounds `ψ` from above and the point need not
/// be dual feasible.
pub fn master_solution(h: &CMatrix, rho: &[f64], cuts: &[Vec<f64>]) -> Result<DualSolution> {
    validate_rho(h, rho)?;
    let (lambda, objective) = master(rho, cuts)?;
    Ok(DualSolution { lambda, objective, upper_bound: objective, cuts: cuts.to_vec(), gap_certificate: 0.0 })
}

/// Eigenvalues (descending) of `Λ^{1/2} G Λ^{1/2}`, which are the nonzero
/// eigenvalues of both `B Λ B` and `Δ = H^H Λ H`.
pub fn dual_spectrum(h: &CMatrix, lambda: &[f64]) -> Result<Vec<f64>> {
    if lambda.len() != h.rows() {
        return Err(Error::InvalidInput("multiplier length differs from user count"));
    }
    let g = h.gram();
    let s: Vec<f64> = lambda.iter().map(|l| l.max(0.0).sqrt()).collect();
    let m = CMatrix::from_fn(g.rows(), g.rows(), |i, j| g[(i, j)] * (s[i] * s[j]));
    Ok(hermitian_eig(&m)?.values)
}

/// A stationary rank-one point in received-amplitude coordinates
/// `z = H w`, with `w = H^H c`.
struct Polished {
    /// Coefficients `c` (zero outside the active set).
    c: Vec<Complex64>,
    /// `z^H G⁻¹ z = c^H G c`.
    power: f64,
    /// Multipliers `Re(conj(z_k) c_k) / |z_k|²` on the active set.
    lambda: Vec<f64>,
}

/// Starts the refinement from the dominant direction at a dual point.
fn polish_from_dual(gram: &NormalizedGram, rho: &[f64], lambda: &[f64]) -> Option<Polished> {
    let eig = hermitian_eig(&gram.weighted(lambda)).ok()?;
    let y = eig.vector(0);
    let sy: Vec<Complex64> = y.iter().zip(lambda).map(|(yi, l)| yi * l.max(0.0).sqrt()).collect();
    let z0 = gram.g.mul_vec(&sy);
    let lmax = lambda.iter().copied().fold(0.0, f64::max);
    let support: Vec<usize> = (0..rho.len()).filter(|&k| rho[k] > 0.0 && lambda[k] > 1e-3 * lmax).collect();
    polish(&gram.g, rho, &z0, support)
}

/// Local refinement of `min z^H G⁻¹ z` s.t. `|z_k|² ≥ ρ_k` with a small
/// active-set loop. On the active set `S` the moduli are fixed at `√ρ_k`
/// and the phases are optimized by damped Newton; the remaining amplitudes
/// are eliminated exactly, which leaves the objective `z_S^H (G_SS)⁻¹ z_S`.
fn polish(g: &CMatrix, rho: &[f64], z0: &[Complex64], mut support: Vec<usize>) -> Option<Polished> {
    let k = rho.len();
    let mut phases: Vec<f64> = z0.iter().map(|z| if z.norm_sqr() > 0.0 { z.arg() } else { 0.0 }).collect();
    for _ in 0..2 * k + 2 {
        if support.is_empty() {
            return None;
        }
        let m = support.len();
        let gs = CMatrix::from_fn(m, m, |i, j| g[(support[i], support[j])]);
        let p = hermitian_eig(&gs).ok()?;
        if !(p.values[m - 1] > 0.0) {
            return None;
        }
        let p = p.reconstruct_with(|v| 1.0 / v);
        let amp: Vec<f64> = support.iter().map(|&i| rho[i].sqrt()).collect();
        let mut theta: Vec<f64> = support.iter().map(|&i| phases[i]).collect();
        newton_phases(&p, &amp, &mut theta);
        for (i, &s) in support.iter().enumerate() {
            phases[s] = theta[i];
        }

        let zs: Vec<Complex64> = amp.iter().zip(&theta).map(|(a, t)| Complex64::from_polar(*a, *t)).collect();
        let cs = p.mul_vec(&zs);
        let mut c = vec![Complex64::new(0.0, 0.0); k];
        for (i, &s) in support.iter().enumerate() {
            c[s] = cs[i];
        }
        let z = g.mul_vec(&c);
        let mut lambda = vec![0.0; k];
        let mut most_negative: Option<(usize, f64)> = None;
        for &s in &support {
            let l = (z[s].conj() * c[s]).re / rho[s];
            lambda[s] = l;
            if l < 0.0 && most_negative.is_none_or(|(_, v)| l < v) {
                most_negative = Some((s, l));
            }
        }
        if let Some((s, _)) = most_negative {
            support.retain(|&i| i != s);
            continue;
        }
        let mut worst: Option<(usize, f64)> = None;
        for i in (0..k).filter(|i| !support.contains(i)) {
            let short = rho[i] - z[i].norm_sqr();
            if short > 1e-12 * rho[i] && worst.is_none_or(|(_, v)| short / rho[i] > v) {
                worst = Some((i, short / rho[i]));
            }
        }
        if let Some((i, _)) = worst {
            phases[i] = z[i].arg();
            support.push(i);
            support.sort_unstable();
            continue;
        }
        let power = z.iter().zip(&c).map(|(zi, ci)| (zi.conj() * ci).re).sum();
        return Some(Polished { c, power, lambda });
    }
    None
}

/// Minimizes `f(θ) = z^H P z` with `z_i = a_i e^{iθ_i}` over all phases but
/// the first.
fn newton_phases(p: &CMatrix, amp: &[f64], theta: &mut [f64]) {
    let m = amp.len();
    if m < 2 {
        return;
    }
    let eval = |theta: &[f64]| -> (f64, Vec<Complex64>, Vec<Complex64>) {
        let z: Vec<Complex64> = amp.iter().zip(theta).map(|(a, t)| Complex64::from_polar(*a, *t)).collect();
        let pz = p.mul_vec(&z);
        let f = z.iter().zip(&pz).map(|(zi, pi)| (zi.conj() * pi).re).sum();
        (f, z, pz)
    };
    let (mut f, mut z, mut pz) = eval(theta);
    for _ in 0..60 {
        let n = m - 1;
        let grad: Vec<f64> = (1..m).map(|i| 2.0 * (z[i].conj() * pz[i]).im).collect();
        let gnorm = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        if gnorm <= 1e-15 * f {
            break;
        }
        let mut hess = vec![0.0; n * n];
        for i in 1..m {
            for j in 1..m {
                hess[(i - 1) * n + (j - 1)] = if i == j {
                    2.0 * (p[(i, i)].re * amp[i] * amp[i] - (z[i].conj() * pz[i]).re)
                } else {
                    2.0 * (z[i].conj() * p[(i, j)] * z[j]).re
                };
            }
        }
        let mut shift = 0.0;
        let mut improved = false;
        for _ in 0..40 {
            let mut a = hess.clone();
            for i in 0..n {
                a[i * n + i] += shift;
            }
            let step = solve_real(a, grad.iter().map(|g| -g).collect());
            if let Some(step) = step {
                let trial: Vec<f64> =
                    theta.iter().enumerate().map(|(i, t)| if i == 0 { *t } else { t + step[i - 1] }).collect();
                let (ft, zt, pzt) = eval(&trial);
                if ft <= f {
                    theta.copy_from_slice(&trial);
                    let done = f - ft <= 1e-16 * f;
                    (f, z, pz) = (ft, zt, pzt);
                    improved = !done;
                    break;
                }
            }
            shift = if shift == 0.0 { 1e-6 * f.max(1e-300) } else { shift * 10.0 };
        }
        if !improved {
            break;
        }
    }
}

const DEGENERACY_TOL: f64 = 1e-8;

/// Recovers the rank-one minimizer from a converged dual point.
///
/// The beam is the dominant eigenvector of `Δ` scaled to meet every target.
/// If that direction misses the dual bound, or the dominant eigenvalue is
/// not simple (exactly orthogonal channels, for instance), the phase
/// refinement used by [`compute_psi`] is run from it and its result is
/// accepted under the same checks.
pub fn recover_beamformer(h: &CMatrix, dual: &DualSolution, rho: &[f64]) -> Result<BeamVector> {
    validate_rho(h, rho)?;
    if rho.iter().all(|&r| r == 0.0) {
        return Ok(BeamVector::zero(h.cols()));
    }
    if dual.lambda.len() != h.rows() {
        return Err(Error::InvalidInput("multiplier length differs from user count"));
    }
    let gram = NormalizedGram::new(h)?;
    let lambda_n: Vec<f64> = dual.lambda.iter().map(|l| l * gram.scale).collect();
    let eig = hermitian_eig(&gram.weighted(&lambda_n))?;
    let top = eig.values[0];
    if !(top > 0.0) || (top - 1.0).abs() > 1e-6 {
        return Err(Error::OptimalityCheckFailed("dual point is not on the boundary"));
    }
    let simple = eig.values.len() == 1 || eig.values[1] < top * (1.0 - DEGENERACY_TOL);
    let y = eig.vector(0);
    let coeffs: Vec<Complex64> = y.iter().zip(&lambda_n).map(|(yi, l)| yi * l.max(0.0).sqrt()).collect();
    if simple {
        let beam = scale_to_targets(h, &combine_rows(h, &coeffs), rho)?;
        if check_power(&beam, dual.objective).is_ok() {
            return Ok(beam);
        }
    }

    let rho_max = rho.iter().copied().fold(0.0, f64::max);
    let rho_n: Vec<f64> = rho.iter().map(|r| r / rho_max).collect();
    let z0 = if simple { gram.g.mul_vec(&coeffs) } else { vec![Complex64::new(1.0, 0.0); h.rows()] };
    let lmax = lambda_n.iter().copied().fold(0.0, f64::max);
    let support: Vec<usize> = (0..h.rows()).filter(|&k| rho[k] > 0.0 && lambda_n[k] > 1e-6 * lmax).collect();
    let candidate = polish(&gram.g, &rho_n, &z0, support)
        .and_then(|p| scale_to_targets(h, &combine_rows(h, &p.c), rho).ok())
        .filter(|beam| check_power(beam, dual.objective).is_ok());
    let near_double = eig.values.len() > 1 && eig.values[1] >= top * (1.0 - RANK_ONE_TOL);
    match candidate {
        Some(beam) => Ok(beam),
        None if near_double || !simple => Err(Error::DegenerateEigenspace),
        None => Err(Error::OptimalityCheckFailed("beam power exceeds the dual bound")),
    }
}

/// Eigenvalues of `Δ` at or above `1 − RANK_ONE_TOL` count as dominant.
pub const RANK_ONE_TOL: f64 = 1e-6;

/// Best rank-one beam reachable by local phase refinement from the dominant
/// direction of `dual`, scaled to meet every target.
///
/// Unlike [`recover_beamformer`] the result is not checked against the dual
/// bound. It is the fallback when the optimal covariance has rank above one,
/// which can happen once four or more users are served.
pub fn local_rank_one_beam(h: &CMatrix, dual: &DualSolution, rho: &[f64]) -> Result<BeamVector> {
    validate_rho(h, rho)?;
    if rho.iter().all(|&r| r == 0.0) {
        return Ok(BeamVector::zero(h.cols()));
    }
    let gram = NormalizedGram::new(h)?;
    let lambda_n: Vec<f64> = dual.lambda.iter().map(|l| l * gram.scale).collect();
    let rho_max = rho.iter().copied().fold(0.0, f64::max);
    let rho_n: Vec<f64> = rho.iter().map(|r| r / rho_max).collect();
    let polished = polish_from_dual(&gram, &rho_n, &lambda_n).ok_or(Error::DegenerateEigenspace)?;
    scale_to_targets(h, &combine_rows(h, &polished.c), rho)
}

/// `H^H c = Σ_k c_k h_k^H`.
fn combine_rows(h: &CMatrix, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut w = vec![Complex64::new(0.0, 0.0); h.cols()];
    for (k, c) in coeffs.iter().enumerate() {
        for (wj, hkj) in w.iter_mut().zip(h.row(k)) {
            *wj += c * hkj.conj();
        }
    }
    w
}

/// Scales direction `v` by the smallest factor meeting every target.
fn scale_to_targets(h: &CMatrix, v: &[Complex64], rho: &[f64]) -> Result<BeamVector> {
    let mut c2: f64 = 0.0;
    for (k, &r) in rho.iter().enumerate() {
        if r > 0.0 {
            let gain = dot(h.row(k), v).norm_sqr();
            if !(gain > 0.0) {
                return Err(Error::OptimalityCheckFailed("dominant direction misses a served user"));
            }
            c2 = c2.max(r / gain);
        }
    }
    Ok(BeamVector::new(v.iter().map(|z| z * c2.sqrt()).collect()))
}

fn check_power(beam: &BeamVector, dual_objective: f64) -> Result<()> {
    if beam.power <= dual_objective * (1.0 + 1e-6) {
        Ok(())
    } else {
        Err(Error::OptimalityCheckFailed("beam power exceeds the dual bound"))
    }
}

/// Rank-one minimizer of `min tr(W)` s.t. `h_k W h_k^H ≥ b_k`.
///
/// If the dominant eigenspace is degenerate, the targets are perturbed by
/// the factors `1 + 1e-9·k` and the problem is solved once more.
pub fn min_trace_beamforming(h: &CMatrix, b: &[f64]) -> Result<BeamVector> {
    min_trace_beamforming_with(h, b, &PsiOptions::default())
}

pub fn min_trace_beamforming_with(h: &CMatrix, b: &[f64], opts: &PsiOptions) -> Result<BeamVector> {
    let (_, dual) = compute_psi(h, b, opts)?;
    match recover_beamformer(h, &dual, b) {
        Err(Error::DegenerateEigenspace) => {
            let perturbed: Vec<f64> = b.iter().enumerate().map(|(k, v)| v * (1.0 + 1e-9 * (k + 1) as f64)).collect();
            let (_, dual) = compute_psi(h, &perturbed, opts)?;
            recover_beamformer(h, &dual, &perturbed)
        }
        other => other,
    }
}

/// `|h_k w|²` for one row.
pub fn received_power(h: &CMatrix, k: usize, w: &[Complex64]) -> f64 {
    dot(h.row(k), w).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_h(rng: &mut ChaCha8Rng, k: usize, nt: usize) -> CMatrix {
        CMatrix::from_fn(k, nt, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn single_user_is_mrt() {
        let h = CMatrix::from_row_major(1, 3, vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)]);
        let (psi, dual) = compute_psi(&h, &[0.7], &PsiOptions::default()).unwrap();
        assert!((psi - 0.7 / 7.0).abs() < 1e-12);
        let beam = recover_beamformer(&h, &dual, &[0.7]).unwrap();
        assert!((beam.power - 0.1).abs() < 1e-12);
        assert!((beam.received_powers(&h)[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_rows_sum() {
        let h = CMatrix::from_row_major(
            2,
            3,
            vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)],
        );
        let rho = [1.0, 3.0];
        let (psi, _) = compute_psi(&h, &rho, &PsiOptions::default()).unwrap();
        assert!((psi - (0.25 + 3.0)).abs() < 1e-8 * psi);
        let beam = min_trace_beamforming(&h, &rho).unwrap();
        let got = beam.received_powers(&h);
        assert!(got[0] >= 1.0 * (1.0 - 1e-8) && got[1] >= 3.0 * (1.0 - 1e-8));
        assert!((beam.power - 3.25).abs() < 1e-6 * 3.25);
    }

    #[test]
    fn zero_targets() {
        let h = CMatrix::identity(2);
        let (psi, _) = compute_psi(&h, &[0.0, 0.0], &PsiOptions::default()).unwrap();
        assert_eq!(psi, 0.0);
        assert!(min_trace_beamforming(&h, &[0.0, 0.0]).unwrap().is_zero());
    }

    #[test]
    fn random_instances_zero_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..60 {
            let k = 1 + trial % 3;
            let h = random_h(&mut rng, k, k + 2);
            let rho: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
            let (psi, dual) = compute_psi(&h, &rho, &PsiOptions::default()).unwrap();
            assert!(dual.gap_certificate <= 1e-8);
            assert!(dual_spectrum(&h, &dual.lambda).unwrap()[0] <= 1.0 + 1e-8);
            let beam = recover_beamformer(&h, &dual, &rho).unwrap();
            assert!(((beam.power - psi) / psi).abs() <= 1e-6, "trial {trial}");
            for (g, r) in beam.received_powers(&h).iter().zip(&rho) {
                assert!(*g >= r * (1.0 - 1e-8));
            }
        }
    }

    #[test]
    fn four_users_may_need_rank_two() {
        // With four users the optimal covariance can have rank two; that
        // must surface as a degenerate eigenspace, never as a wrong beam.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut degenerate = 0;
        for _ in 0..30 {
            let h = random_h(&mut rng, 4, 6);
            let rho: Vec<f64> = (0..4).map(|_| rng.random::<f64>() + 0.01).collect();
            let (psi, dual) = compute_psi(&h, &rho, &PsiOptions::default()).unwrap();
            match recover_beamformer(&h, &dual, &rho) {
                Ok(beam) => assert!(beam.power <= psi * (1.0 + 1e-6)),
                Err(Error::DegenerateEigenspace) => {
                    degenerate += 1;
                    assert!(dual_spectrum(&h, &dual.lambda).unwrap()[1] > 1.0 - 1e-6);
                    let beam = local_rank_one_beam(&h, &dual, &rho).unwrap();
                    assert!(beam.power > psi);
                    for (g, r) in beam.received_powers(&h).iter().zip(&rho) {
                        assert!(*g >= r * (1.0 - 1e-12));
                    }
                }
                Err(e) => panic!("{e:?}"),
            }
        }
        assert!(degenerate > 0);
    }

    #[test]
    fn scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_h(&mut rng, 3, 4);
        let rho = [0.3, 0.5, 0.2];
        let (a, _) = compute_psi(&h, &rho, &PsiOptions::default()).unwrap();
        let small = h.scale(1e-3);
        let (b, _) = compute_psi(&small, &rho.map(|r| r * 1e-9), &PsiOptions::default()).unwrap();
        assert!((a * 1e-3 - b).abs() < 1e-7 * b);
    }

    #[test]
    fn rank_deficient_channel() {
        let h = CMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(compute_psi(&h, &[1.0, 1.0], &PsiOptions::default()).unwrap_err(), Error::RankDeficientChannel);
    }

    #[test]
    fn cut_cap_reports_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_h(&mut rng, 3, 3);
        let opts = PsiOptions { tol: 1e-8, max_cuts: 4 };
        match compute_psi(&h, &[1.0, 1.0, 1.0], &opts) {
            Err(Error::PsiNotConverged { lower, upper, .. }) => assert!(lower <= upper),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_dual_rejected() {
        // G = diag(1, 1, 0.5): at λ = (1, 1, 1) the top eigenvalue of Δ is
        // double, and an objective of 0.1 rules out every candidate.
        let h = CMatrix::from_real_diagonal(&[1.0, 1.0, 0.5f64.sqrt()]);
        let dual = DualSolution {
            lambda: vec![1.0, 1.0, 1.0],
            objective: 0.1,
            upper_bound: 0.1,
            cuts: Vec::new(),
            gap_certificate: 0.0,
        };
        assert_eq!(recover_beamformer(&h, &dual, &[1.0, 1.0, 1.0]), Err(Error::DegenerateEigenspace));
    }
}
