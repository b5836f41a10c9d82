//! Splitting of boundary data into constituents governed by S₀⁺ and S₀⁻.
//!
//! With Δ = S₀⁻ − S₀⁺ the splitting matrix is
//! `P = [[Δ⁻¹S₀⁻, −Δ⁻¹], [−Δ⁻¹S₀⁺, Δ⁻¹]]`, `P⁻¹ = [[I, I], [S₀⁺, S₀⁻]]`, and
//! `(v₊, v₋) = P(v, hD_s v)`. For P⁻¹ to diagonalize the first-order system the
//! lower block must be a right solvent of M, which is the transpose of the left
//! factor S₀⁻ because M is symmetric. v₊ is the constituent that decays with
//! depth and is labeled incoming.

use std::io::Write;

use nalgebra::DMatrix;

use crate::bridge::elliptic::{elliptic_dn_solve, triple_at, EllipticOptions};
use crate::bridge::{fit_log_slope, LaplaceProbe};
use crate::error::{Error, Result};
use crate::linalg::{self, complexify, CMat3, CVec3, C64, I};
use crate::medium::{BoundaryChart, StratifiedProfile};
use crate::symbol::{self, Factorization, SymbolTriple};

/// P·P⁻¹ = I is checked to this tolerance, scaled by cond(Δ).
pub const INVERSE_TOL: f64 = 1e-12;
pub const MAX_CONDITION: f64 = 1e12;
/// Relative tolerance for the conjugate-transpose relation at real τ.
pub const STAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SplitState {
    pub p: DMatrix<C64>,
    pub p_inv: DMatrix<C64>,
    pub s_plus: CMat3,
    /// Lower right solvent used in the second block column of P⁻¹.
    pub s_minus: CMat3,
    pub condition: f64,
    pub inverse_defect: f64,
    /// `‖(P⁻¹)^* − P^{−⋆}‖` relative, built from the left factor; only for real τ.
    pub star_defect: Option<f64>,
    pub v_plus: Vec<CVec3>,
    pub v_minus: Vec<CVec3>,
}

fn blocks(m11: &CMat3, m12: &CMat3, m21: &CMat3, m22: &CMat3) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(6, 6);
    for i in 0..3 {
        for j in 0..3 {
            out[(i, j)] = m11[(i, j)];
            out[(i, j + 3)] = m12[(i, j)];
            out[(i + 3, j)] = m21[(i, j)];
            out[(i + 3, j + 3)] = m22[(i, j)];
        }
    }
    out
}

fn condition(m: &CMat3) -> f64 {
    let sv = m.singular_values();
    let lo = sv.min();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / lo
    }
}

/// P from the block formula with Δ = s_minus − s_plus.
fn assemble_p(s_plus: &CMat3, s_minus: &CMat3) -> Result<(DMatrix<C64>, f64)> {
    let delta = s_minus - s_plus;
    let cond = condition(&delta);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(format!("S0- - S0+ has condition number {cond:e}")));
    }
    let di = linalg::inverse(&delta)?;
    Ok((blocks(&(di * s_minus), &(-di), &(-di * s_plus), &di), cond))
}

/// `Δ⁻¹ diag(1, −1) P^{−⋆} [[0, −1], [1, 0]]` with `P^{−⋆} = [[I, S₀⁻], [I, S₀⁺]]`.
fn p_from_star(s_plus: &CMat3, s_minus: &CMat3) -> Result<DMatrix<C64>> {
    let id = CMat3::identity();
    let z = CMat3::zeros();
    let di = linalg::inverse(&(s_minus - s_plus))?;
    let star = blocks(&id, s_minus, &id, s_plus);
    let sign = blocks(&id, &z, &z, &(-id));
    let rot = blocks(&z, &(-id), &id, &z);
    Ok(blocks(&di, &z, &z, &di) * sign * star * rot)
}

fn rel(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Splitting matrices for a certified factorization at one cotangent point.
pub fn splitting_matrices(fact: &Factorization, triple: &SymbolTriple) -> Result<SplitState> {
    let s_plus = fact.s0_plus;
    let s_minus = fact.s0_minus.transpose();
    let (p, cond) = assemble_p(&s_plus, &s_minus)?;
    let p_inv = blocks(&CMat3::identity(), &CMat3::identity(), &s_plus, &s_minus);
    let inverse_defect = (&p * &p_inv - DMatrix::<C64>::identity(6, 6)).norm();
    if inverse_defect > INVERSE_TOL * cond.max(1.0) {
        return Err(Error::IllConditioned(format!("P P^-1 differs from I by {inverse_defect:e}")));
    }

    // Left-factor form: the star expression must reproduce P, and for real τ̂
    // the left factor is S₀⁺^* so that P^{−⋆} = P^{−*}.
    let (p_left, _) = assemble_p(&s_plus, &fact.s0_minus)?;
    let alt = p_from_star(&s_plus, &fact.s0_minus)?;
    let alt_defect = rel(&alt, &p_left);
    if alt_defect > INVERSE_TOL * cond.max(1.0) {
        return Err(Error::IllConditioned(format!("star form of P differs by {alt_defect:e}")));
    }
    let star_defect = if triple.tau_hat.im == 0.0 {
        let id = CMat3::identity();
        let star = blocks(&id, &fact.s0_minus, &id, &s_plus);
        let p_left_inv = blocks(&id, &id, &s_plus, &fact.s0_minus);
        let d = rel(&p_left_inv.adjoint(), &star);
        if d > STAR_TOL {
            return Err(Error::IllConditioned(format!("P^-star differs from P^-* by {d:e} at real tau")));
        }
        Some(d)
    } else {
        None
    };

    Ok(SplitState { p, p_inv, s_plus, s_minus, condition: cond, inverse_defect, star_defect, v_plus: Vec::new(), v_minus: Vec::new() })
}

/// `[[0, I], [−D⁻¹C₀, −D⁻¹B]]`, the first-order form of the principal symbol.
pub fn first_order_matrix(triple: &SymbolTriple) -> DMatrix<C64> {
    let di = complexify(&triple.d_inv());
    blocks(&CMat3::zeros(), &CMat3::identity(), &(-di * triple.c0()), &(-di * complexify(&triple.b())))
}

/// Relative defect of `P A P⁻¹ = diag(S₀⁺, S₀⁻)`.
pub fn diagonalization_defect(state: &SplitState, triple: &SymbolTriple) -> f64 {
    let target = blocks(&state.s_plus, &CMat3::zeros(), &CMat3::zeros(), &state.s_minus);
    rel(&(&state.p * first_order_matrix(triple) * &state.p_inv), &target)
}

/// Smallest |Im ζ| over the six roots of det M, relative to the largest |ζ|.
pub fn real_axis_gap(triple: &SymbolTriple) -> Result<f64> {
    let roots = symbol::pencil_roots(triple)?;
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    Ok(roots.iter().map(|z| z.im.abs()).fold(f64::INFINITY, f64::min) / scale)
}

/// `(v₊, v₋) = P(v, hD_s v)`.
pub fn split_vector(state: &SplitState, v: &CVec3, h_ds_v: &CVec3) -> (CVec3, CVec3) {
    let x = nalgebra::DVector::from_iterator(6, v.iter().chain(h_ds_v.iter()).copied());
    let y = &state.p * x;
    (CVec3::new(y[0], y[1], y[2]), CVec3::new(y[3], y[4], y[5]))
}

/// hD_s v recovered from `Λ^τ v` through `Λ^τ = −i(D hD_s + Rᵀ)`.
pub fn normal_derivative_from_dn(triple: &SymbolTriple, v: &CVec3, dn_value: &CVec3) -> CVec3 {
    let di = complexify(&triple.d_inv());
    di * (dn_value * I) - di * complexify(&triple.r.transpose()) * v
}

/// Splits boundary data given its DN image.
pub fn split_boundary_field(state: &SplitState, v: &CVec3, dn_value: &CVec3, triple: &SymbolTriple) -> (CVec3, CVec3) {
    split_vector(state, v, &normal_derivative_from_dn(triple, v, dn_value))
}

impl SplitState {
    /// Splits a sequence of boundary samples, storing the constituents.
    pub fn apply(&mut self, v: &[CVec3], dn: &[CVec3], triple: &SymbolTriple) -> Result<()> {
        if v.len() != dn.len() {
            return Err(Error::InvalidInput(format!("{} field samples but {} DN samples", v.len(), dn.len())));
        }
        let (plus, minus): (Vec<_>, Vec<_>) = v.iter().zip(dn).map(|(a, b)| split_boundary_field(self, a, b, triple)).unzip();
        self.v_plus = plus;
        self.v_minus = minus;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub depths: Vec<f64>,
    pub norm_plus: Vec<f64>,
    pub norm_minus: Vec<f64>,
    /// −d log‖v₊‖/ds from a log-linear fit; `None` for a zero field.
    pub fitted_rate: Option<f64>,
    /// min Im eig S₀⁺ / h at the boundary.
    pub expected_rate: f64,
    pub relative_error: Option<f64>,
    pub decaying: bool,
}

impl DecayReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["depth", "norm_plus", "norm_minus", "fitted_rate", "expected_rate"])?;
        let fitted = self.fitted_rate.map(|r| r.to_string()).unwrap_or_default();
        for i in 0..self.depths.len() {
            out.write_record([
                self.depths[i].to_string(),
                self.norm_plus[i].to_string(),
                self.norm_minus[i].to_string(),
                fitted.clone(),
                self.expected_rate.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Decay length ℓ = h / min Im eig S₀⁺ at the boundary.
pub fn decay_length(profile: &StratifiedProfile, eta: [f64; 2], probe: &LaplaceProbe) -> Result<f64> {
    let (jet, _) = triple_at(profile, 0.0, eta, probe.tau_hat())?;
    let (_, fact) = symbol::factorize(&jet, &BoundaryChart::flat(), eta, probe.tau_hat())?;
    let im = fact.eigenvalues_plus.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    Ok(probe.h() / im)
}

/// Solves the elliptic problem with boundary value ψ, splits the solution at
/// the given depths (in units of the decay length) with the factorization at
/// each depth, and fits the decay rate of ‖v₊‖.
pub fn decay_check(
    profile: &StratifiedProfile,
    eta: [f64; 2],
    probe: &LaplaceProbe,
    psi: CVec3,
    depth_samples: &[f64],
) -> Result<DecayReport> {
    if depth_samples.len() < 2 || depth_samples.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidInput("decay check needs at least two positive depth samples".into()));
    }
    let h = probe.h();
    let tau_hat = probe.tau_hat();
    let ell = decay_length(profile, eta, probe)?;
    let expected_rate = 1.0 / ell;
    let depths: Vec<f64> = depth_samples.iter().map(|d| d * ell).collect();

    if psi.norm() == 0.0 {
        let zeros = vec![0.0; depths.len()];
        return Ok(DecayReport {
            depths,
            norm_plus: zeros.clone(),
            norm_minus: zeros,
            fitted_rate: None,
            expected_rate,
            relative_error: None,
            decaying: true,
        });
    }

    let deepest = depth_samples.iter().fold(0.0, |a: f64, b| a.max(*b));
    let opts = EllipticOptions { depth_factor: deepest.max(EllipticOptions::default().depth_factor) + 6.0, ..Default::default() };
    let sol = elliptic_dn_solve(profile, eta, probe.tau, psi, &opts)?;
    let mut norm_plus = Vec::with_capacity(depths.len());
    let mut norm_minus = Vec::with_capacity(depths.len());
    for &s in &depths {
        let (v, dv) = sol.at(s)?;
        let (jet, triple) = triple_at(profile, s, eta, tau_hat)?;
        let (_, fact) = symbol::factorize(&jet, &BoundaryChart::flat(), eta, tau_hat)?;
        let state = splitting_matrices(&fact, &triple)?;
        let (vp, vm) = split_vector(&state, &v, &(dv * C64::new(0.0, -h)));
        norm_plus.push(vp.norm());
        norm_minus.push(vm.norm());
    }
    let (slope, _) = fit_log_slope(&depths, &norm_plus);
    let rate = -slope;
    let decaying = norm_plus.windows(2).all(|w| w[1] < w[0]);
    Ok(DecayReport {
        depths,
        norm_plus,
        norm_minus,
        fitted_rate: Some(rate),
        expected_rate,
        relative_error: Some((rate - expected_rate).abs() / expected_rate),
        decaying,
    })
}
