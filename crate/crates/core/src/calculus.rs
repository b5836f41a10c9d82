//! DN-map symbol hierarchy on a stratified flat chart.
//!
//! With `D_s = −i∂_s` the depth-reduced operator is exactly
//! `D(hD_s)² + (R + Rᵀ + hF₀)hD_s + hF₁ + Q + ρτ̂²G` with `F₀ = D_sD` and
//! `F₁ = D_sRᵀ`, so the decaying solutions obey `hD_s v = S v` and the
//! boundary traction is `Λ^h = −i(DS + Rᵀ)`. Expanding `S = S₀ + hS₋₁ + …`
//! gives the principal symbol `λ₀ = −i(DS₀ + Rᵀ)` and `λ₋₁ = −iDS₋₁`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, complexify, CMat3, C64, I};
use crate::medium::{BoundaryChart, CotangentPoint, ElasticTensor, MediumJet, StratifiedProfile};
use crate::symbol::{self, contract, Factorization, SymbolTriple};

/// Relative gap below which the Sylvester spectra count as overlapping.
pub const SYLVESTER_GAP_TOL: f64 = 1e-10;

/// λ₀ on a grid of tangential frequencies, optionally with λ₋₁.
#[derive(Debug, Clone, PartialEq)]
pub struct DNSymbol {
    pub points: Vec<[f64; 2]>,
    pub lambda0: Vec<CMat3>,
    /// `lower_terms[p][j-1]` is λ₋ⱼ at point `p`.
    pub lower_terms: Vec<Vec<CMat3>>,
    pub h: f64,
}

pub fn principal_dn_symbol(fact: &Factorization, triple: &SymbolTriple) -> CMat3 {
    -(complexify(&triple.d) * fact.s0_plus + complexify(&triple.r.transpose())) * I
}

/// Depth-derivative data at one cotangent point.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerOrderData {
    pub f0: CMat3,
    pub f1: CMat3,
    pub s_minus1: CMat3,
    /// ∂_s S₀.
    pub s0_prime: CMat3,
    /// D_s λ₀.
    pub d_lambda0: CMat3,
    /// λ₋₁ = −iDS₋₁.
    pub lambda_minus1: CMat3,
}

/// Symbol matrices and their depth derivatives at depth `s`.
struct DepthData {
    triple: SymbolTriple,
    fact: Factorization,
    d1: nalgebra::Matrix3<f64>,
    r1: nalgebra::Matrix3<f64>,
    c0_1: CMat3,
}

fn depth_data(jet: &MediumJet, eta: [f64; 2], tau_hat: C64) -> Result<DepthData> {
    if jet.order() < 1 {
        return Err(Error::DerivativeOrder { requested: 1, available: 0 });
    }
    let chart = BoundaryChart::flat();
    let (triple, fact) = symbol::factorize(&jet.values_only(), &chart, eta, tau_hat)?;
    let (dl, dm, dr) = jet.derivative(1)?;
    let (d1, r1, q1) = contract(&ElasticTensor::isotropic(dl, dm), eta);
    let c0_1 = complexify(&q1) + complexify(&triple.g) * (tau_hat * tau_hat * dr);
    Ok(DepthData { triple, fact, d1, r1, c0_1 })
}

pub fn sub_principal_terms(profile: &StratifiedProfile, pt: &CotangentPoint, tau_hat: C64) -> Result<LowerOrderData> {
    let jet = profile.evaluate(pt.s, 1)?;
    lower_order_from_jet(&jet, pt.eta_prime, tau_hat)
}

/// [`sub_principal_terms`] for a jet carrying first derivatives.
pub fn lower_order_from_jet(jet: &MediumJet, eta: [f64; 2], tau_hat: C64) -> Result<LowerOrderData> {
    let dd = depth_data(jet, eta, tau_hat)?;
    let t = &dd.triple;
    let d = complexify(&t.d);
    let dinv = complexify(&t.d_inv());
    let d1 = complexify(&dd.d1);
    let s0 = dd.fact.s0_plus;

    let f0 = -d1 * I;
    let f1 = -complexify(&dd.r1.transpose()) * I;

    // differentiate S₀² + D⁻¹BS₀ + D⁻¹C₀ = 0
    let b = complexify(&t.b());
    let b1 = complexify(&(dd.r1 + dd.r1.transpose()));
    let dinv1 = -dinv * d1 * dinv;
    let rhs = -((dinv1 * b + dinv * b1) * s0 + dinv1 * t.c0() + dinv * dd.c0_1);
    let s0_prime = solve_symbol_sylvester(&s0, t, &rhs)?;

    let s0_ds = -s0_prime * I;
    let y = -(s0_ds + dinv * f0 * s0 + dinv * f1);
    let s_minus1 = solve_symbol_sylvester(&s0, t, &y)?;
    let d_lambda0 = -(d1 * s0 + d * s0_prime + complexify(&dd.r1.transpose()));
    Ok(LowerOrderData { f0, f1, s_minus1, s0_prime, d_lambda0, lambda_minus1: -d * s_minus1 * I })
}

/// The operator `X ↦ AX + XS₀` with `A = −D⁻¹(Q + ρτ̂²G)S₀⁻¹`.
pub fn sylvester_operator(s0: &CMat3, triple: &SymbolTriple, x: &CMat3) -> Result<CMat3> {
    Ok(coefficient_a(s0, triple)? * x + x * s0)
}

fn coefficient_a(s0: &CMat3, triple: &SymbolTriple) -> Result<CMat3> {
    Ok(-complexify(&triple.d_inv()) * triple.c0() * linalg::inverse(s0)?)
}

/// Solves `−D⁻¹(Q + ρτ̂²G)S₀⁻¹X + XS₀ = Y`.
pub fn solve_symbol_sylvester(s0: &CMat3, triple: &SymbolTriple, y: &CMat3) -> Result<CMat3> {
    let a = coefficient_a(s0, triple)?;
    let scale = 1.0 + s0.norm();
    for (name, m) in [("S0", s0), ("A", &a)] {
        if let Some(z) = linalg::eigenvalues3(m)?.iter().find(|z| z.im <= 0.0) {
            return Err(Error::SpectrumCertificate(format!("spectrum of {name} leaves the upper half-plane ({z}, scale {scale:.3})")));
        }
    }
    linalg::solve_sylvester(&a, s0, y, SYLVESTER_GAP_TOL)
}

/// X = W(Y) solving `(Q + ρτ̂²G)S₀⁻¹D⁻¹X − XS₀ = Y`.
pub fn w_map(triple: &SymbolTriple, fact: &Factorization, y: &CMat3) -> Result<CMat3> {
    let dinv = complexify(&triple.d_inv());
    let z = solve_symbol_sylvester(&fact.s0_plus, triple, &(-dinv * y))?;
    Ok(complexify(&triple.d) * z)
}

pub fn w_map_inverse(triple: &SymbolTriple, fact: &Factorization, x: &CMat3) -> Result<CMat3> {
    let s0 = fact.s0_plus;
    Ok(triple.c0() * linalg::inverse(&s0)? * complexify(&triple.d_inv()) * x - x * s0)
}

/// λ₀ and λ₋₁ of a stratified profile at depth `s` on a frequency grid.
pub fn dn_symbol(profile: &StratifiedProfile, points: &[[f64; 2]], s: f64, tau_hat: C64, h: f64) -> Result<DNSymbol> {
    let res: Result<Vec<(CMat3, CMat3)>> = points
        .par_iter()
        .map(|&eta| {
            let lo = sub_principal_terms(profile, &CotangentPoint::new(eta, s), tau_hat)?;
            let jet = profile.evaluate(s, 0)?;
            let (t, f) = symbol::factorize(&jet, &BoundaryChart::flat(), eta, tau_hat)?;
            Ok((principal_dn_symbol(&f, &t), lo.lambda_minus1))
        })
        .collect();
    let res = res?;
    Ok(DNSymbol {
        points: points.to_vec(),
        lambda0: res.iter().map(|r| r.0).collect(),
        lower_terms: res.iter().map(|r| vec![r.1]).collect(),
        h,
    })
}

/// Coefficients of `hD_sΛ̂ + J₁Λ̂ + Λ̂K₁ + Λ̂² + F₂ = 0` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiCoefficients {
    pub j1: CMat3,
    pub k1: CMat3,
    pub f2: CMat3,
}

pub fn riccati_coefficients(jet: &MediumJet, eta: [f64; 2], tau_hat: C64, h: f64) -> Result<RiccatiCoefficients> {
    let dd = depth_data(jet, eta, tau_hat)?;
    let t = &dd.triple;
    let hc = C64::new(h, 0.0);
    let dinv = complexify(&t.d_inv());
    let d1 = complexify(&dd.d1);
    let rt = complexify(&t.r.transpose());
    let f0 = -d1 * I;
    let f1 = -complexify(&dd.r1.transpose()) * I;
    let k = dinv * rt;
    let k_prime = -dinv * d1 * dinv * rt + dinv * complexify(&dd.r1.transpose());
    let ds_k = -k_prime * I;
    let j1 = dinv * (complexify(&t.r) + f0 * hc);
    let f2 = -ds_k * hc - dinv * (complexify(&t.b()) + f0 * hc) * k + dinv * (f1 * hc + t.c0()) + k * k;
    Ok(RiccatiCoefficients { j1, k1: -k, f2 })
}

/// D_sΛ̂ = −(J₁Λ̂ + Λ̂K₁ + Λ̂² + F₂)/h.
pub fn riccati_rhs_at(lambda_hat: &CMat3, c: &RiccatiCoefficients, h: f64) -> CMat3 {
    -(c.j1 * lambda_hat + lambda_hat * c.k1 + lambda_hat * lambda_hat + c.f2) / C64::new(h, 0.0)
}

/// Modified DN map Λ̂ = iD⁻¹Λ^h on a frequency grid at depth `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiState {
    pub s: f64,
    pub h: f64,
    pub tau_hat: C64,
    pub points: Vec<[f64; 2]>,
    pub lambda_hat: Vec<CMat3>,
    pub coefficients: Vec<RiccatiCoefficients>,
}

impl RiccatiState {
    /// State from DN matrices `Λ^h` given per point.
    pub fn from_dn(profile: &StratifiedProfile, points: &[[f64; 2]], dn: &[CMat3], s: f64, h: f64, tau_hat: C64) -> Result<Self> {
        if dn.len() != points.len() {
            return Err(Error::InvalidInput("one DN matrix per grid point is required".into()));
        }
        let jet = profile.evaluate(s, 1)?;
        let mut lambda_hat = Vec::with_capacity(points.len());
        let mut coefficients = Vec::with_capacity(points.len());
        for (&eta, l) in points.iter().zip(dn) {
            let t = symbol::assemble_triple(&jet.values_only(), &BoundaryChart::flat(), &CotangentPoint::new(eta, s), tau_hat)?;
            lambda_hat.push(complexify(&t.d_inv()) * l * I);
            coefficients.push(riccati_coefficients(&jet, eta, tau_hat, h)?);
        }
        Ok(Self { s, h, tau_hat, points: points.to_vec(), lambda_hat, coefficients })
    }

    /// State initialised with the principal symbol λ₀.
    pub fn principal(profile: &StratifiedProfile, points: &[[f64; 2]], s: f64, h: f64, tau_hat: C64) -> Result<Self> {
        let jet = profile.evaluate(s, 0)?;
        let dn: Result<Vec<CMat3>> = points
            .iter()
            .map(|&eta| {
                let (t, f) = symbol::factorize(&jet, &BoundaryChart::flat(), eta, tau_hat)?;
                Ok(principal_dn_symbol(&f, &t))
            })
            .collect();
        Self::from_dn(profile, points, &dn?, s, h, tau_hat)
    }

    /// Λ^h = −iDΛ̂ at each point.
    pub fn dn_map(&self, profile: &StratifiedProfile) -> Result<Vec<CMat3>> {
        let jet = profile.evaluate(self.s, 0)?;
        self.points
            .iter()
            .zip(&self.lambda_hat)
            .map(|(&eta, lh)| {
                let t = symbol::assemble_triple(&jet, &BoundaryChart::flat(), &CotangentPoint::new(eta, self.s), self.tau_hat)?;
                Ok(-complexify(&t.d) * lh * I)
            })
            .collect()
    }
}

pub fn riccati_rhs(state: &RiccatiState) -> Vec<CMat3> {
    state.lambda_hat.iter().zip(&state.coefficients).map(|(l, c)| riccati_rhs_at(l, c, state.h)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerStripOptions {
    /// Points with |η′| above this are left unpropagated.
    pub eta_max: f64,
    /// Hermitian defect tolerated before the certificate is flagged.
    pub hermitian_tol: f64,
}

impl Default for LayerStripOptions {
    fn default() -> Self {
        Self { eta_max: f64::INFINITY, hermitian_tol: 1e-6 }
    }
}

/// One row of the per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub s: f64,
    pub point: usize,
    pub lambda_hat: CMat3,
    pub rhs_norm: f64,
    pub hermitian_defect: f64,
    pub min_hermitian_eig: f64,
    /// False when a real-τ state lost Hermitian positivity.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerStripRun {
    pub state: RiccatiState,
    pub log: Vec<StepRecord>,
    pub flagged: usize,
}

/// Forward Euler in depth: `Λ̂ ← Λ̂ + ds·i·D_sΛ̂`.
///
/// The continuation is ill-posed; loss of the positivity certificate is
/// recorded, not treated as an error.
pub fn layer_strip(
    initial: &RiccatiState,
    profile: &StratifiedProfile,
    ds: f64,
    n_steps: usize,
    opts: &LayerStripOptions,
) -> Result<LayerStripRun> {
    let (lo, hi) = profile.range();
    let s_end = initial.s + ds * n_steps as f64;
    if !(lo..=hi + 1e-12 * hi.abs().max(1.0)).contains(&s_end) || ds < 0.0 {
        return Err(Error::OutOfRange { depth: s_end, lo, hi });
    }
    let mut state = initial.clone();
    let active: Vec<bool> = state.points.iter().map(|p| p[0].hypot(p[1]) <= opts.eta_max).collect();
    let real_tau = state.tau_hat.im == 0.0;
    let mut log = Vec::with_capacity(n_steps * state.points.len());
    let mut flagged = 0;
    for step in 0..n_steps {
        let rhs = riccati_rhs(&state);
        let s_next = (initial.s + ds * (step + 1) as f64).min(hi);
        let jet = profile.evaluate(s_next, 1)?;
        let updated: Result<Vec<(CMat3, RiccatiCoefficients)>> = state
            .points
            .par_iter()
            .enumerate()
            .map(|(p, &eta)| {
                let lh = if active[p] { state.lambda_hat[p] + rhs[p] * (I * ds) } else { state.lambda_hat[p] };
                Ok((lh, riccati_coefficients(&jet, eta, state.tau_hat, state.h)?))
            })
            .collect();
        let updated = updated?;
        state.s = s_next;
        state.lambda_hat = updated.iter().map(|u| u.0).collect();
        state.coefficients = updated.into_iter().map(|u| u.1).collect();
        let dn = state.dn_map(profile)?;
        for (p, l) in dn.iter().enumerate() {
            let defect = linalg::hermitian_defect(l);
            let min_eig = linalg::hermitian_part_min_eig(l);
            let certified = !real_tau || (defect <= opts.hermitian_tol && min_eig > 0.0);
            if !certified {
                flagged += 1;
            }
            log.push(StepRecord {
                step: step + 1,
                s: state.s,
                point: p,
                lambda_hat: state.lambda_hat[p],
                rhs_norm: rhs[p].norm(),
                hermitian_defect: defect,
                min_hermitian_eig: min_eig,
                certified,
            });
        }
    }
    Ok(LayerStripRun { state, log, flagged })
}
