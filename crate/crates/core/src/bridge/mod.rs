//! Forward modelling for stratified media and the bridge between the
//! time-domain DN map and the elliptic semiclassical one.
//!
//! For data `χ(t)ψe^{iy′·η′/h}` with χ = t², the finite-time Laplace transform of
//! the boundary traction, scaled by `h` and divided by `∫₀ᵀχe^{−τt}dt`, agrees
//! with the elliptic map `Λ^hψ` up to `O(e^{−κ Re τ T})`.

pub mod column;
pub mod elliptic;
pub mod laplace;

use crate::calculus::DNSymbol;
use crate::error::{Error, Result};
use crate::linalg::{CMat3, CVec3, C64};
use crate::medium::StratifiedProfile;

pub use column::{time_domain_solve, Column, Sponge, TimeTrace};
pub use elliptic::{elliptic_dn_matrix, elliptic_dn_solve, EllipticOptions, EllipticSolution};
pub use laplace::{finite_laplace_transform, window_multiplier, Quadrature};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceProbe {
    pub tau: C64,
    /// Horizon T.
    pub t_horizon: f64,
    /// Decay fraction κ ∈ (0, 1) used for error budgets.
    pub kappa: f64,
}

impl LaplaceProbe {
    pub fn new(tau: C64, t_horizon: f64) -> Result<Self> {
        if !(tau.re > 0.0) || !(t_horizon > 0.0) {
            return Err(Error::InvalidInput("need Re tau > 0 and T > 0".into()));
        }
        Ok(Self { tau, t_horizon, kappa: 0.5 })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.tau.norm()
    }

    pub fn tau_hat(&self) -> C64 {
        self.tau * self.h()
    }
}

/// Λ^h for each probe at one frequency, fitted as λ₀ + hλ₋₁ (+ h²λ₋₂).
///
/// One probe gives λ₀ ≈ Λ^h; two give the exact linear fit; more are fitted in
/// least squares with degree ≤ 2 and the residual checked against `fit_tol`.
pub fn extract_dn_symbol(
    profile: &StratifiedProfile,
    eta: [f64; 2],
    probes: &[LaplaceProbe],
    opts: &EllipticOptions,
    fit_tol: f64,
) -> Result<DNSymbol> {
    if probes.is_empty() {
        return Err(Error::InvalidInput("no probes".into()));
    }
    let th = probes[0].tau_hat();
    if probes.iter().any(|p| (p.tau_hat() - th).norm() > 1e-12) {
        return Err(Error::InvalidInput("probes must share the direction of tau".into()));
    }
    let maps: Vec<CMat3> = probes.iter().map(|p| elliptic_dn_matrix(profile, eta, p.tau, opts)).collect::<Result<_>>()?;
    let hs: Vec<f64> = probes.iter().map(LaplaceProbe::h).collect();
    let (lambda0, lower) = fit_in_h(&hs, &maps, fit_tol)?;
    Ok(DNSymbol { points: vec![eta], lambda0: vec![lambda0], lower_terms: vec![lower], h: hs[0] })
}

/// Polynomial fit `Σ hʲ cⱼ` of degree min(n − 1, 2), entrywise.
pub fn fit_in_h(hs: &[f64], maps: &[CMat3], fit_tol: f64) -> Result<(CMat3, Vec<CMat3>)> {
    let n = hs.len();
    if n == 1 {
        return Ok((maps[0], vec![]));
    }
    let deg = (n - 1).min(2);
    let v = nalgebra::DMatrix::<f64>::from_fn(n, deg + 1, |i, j| hs[i].powi(j as i32));
    let svd = v.clone().svd(true, true);
    let mut coef = vec![CMat3::zeros(); deg + 1];
    let mut resid: f64 = 0.0;
    let scale = maps.iter().map(|m| m.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for r in 0..3 {
        for c in 0..3 {
            for part in 0..2 {
                let y = nalgebra::DVector::<f64>::from_fn(n, |i, _| if part == 0 { maps[i][(r, c)].re } else { maps[i][(r, c)].im });
                let x = svd.solve(&y, 1e-14).map_err(|e| Error::IllConditioned(e.to_string()))?;
                resid = resid.max((&v * &x - &y).amax());
                for j in 0..=deg {
                    if part == 0 {
                        coef[j][(r, c)].re = x[j];
                    } else {
                        coef[j][(r, c)].im = x[j];
                    }
                }
            }
        }
    }
    if n > deg + 1 && resid > fit_tol * scale {
        return Err(Error::Extrapolation { residual: resid / scale, tol: fit_tol });
    }
    let lambda0 = coef.remove(0);
    Ok((lambda0, coef))
}

/// Column and time stepping for the time-domain side of the bridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeConfig {
    pub length: f64,
    pub cells: usize,
    pub cfl: f64,
    pub sponge: Option<Sponge>,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self { length: 4.0, cells: 400, cfl: 0.8, sponge: None }
    }
}

/// Time-domain run for the plane wave `χψe^{iy′·η′/h}` up to the probe horizon.
pub fn run_time_domain(
    profile: &StratifiedProfile,
    eta: [f64; 2],
    psi: CVec3,
    probe: &LaplaceProbe,
    cfg: &BridgeConfig,
) -> Result<(Column, TimeTrace)> {
    let h = probe.h();
    let k = [eta[0] / h, eta[1] / h];
    let column = Column::new(profile, k, cfg.length, cfg.cells, cfg.sponge)?;
    let steps = (probe.t_horizon / column.stable_dt(cfg.cfl)).ceil() as usize;
    let dt = probe.t_horizon / steps as f64;
    let trace = time_domain_solve(&column, psi, &laplace::chi, dt, steps, &[])?;
    Ok((column, trace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeReport {
    /// ‖h𝓛_T(traction)/W − Λψ‖ / ‖Λψ‖ against the discrete elliptic map of
    /// the same column (rectangle rule, discrete window, effective τ).
    pub residual: f64,
    /// Same ratio with Simpson, the closed-form window and the continuous
    /// elliptic map; includes the O(dx², dt²) discretization gap.
    pub continuous_gap: f64,
    pub transformed: CVec3,
    pub reference: CVec3,
}

/// Compares the transformed time-domain traction with the elliptic DN map.
///
/// The residual is measured against the elliptic problem of the same finite
/// difference column, with `τ_e² = (z⁻¹ − 2 + z)/dt²` and `z = e^{−τdt}`, so
/// only the finite-horizon term `O(e^{−τT})` remains.
pub fn bridge_check(
    profile: &StratifiedProfile,
    eta: [f64; 2],
    psi: CVec3,
    probe: &LaplaceProbe,
    cfg: &BridgeConfig,
) -> Result<BridgeReport> {
    let (column, trace) = run_time_domain(profile, eta, psi, probe, cfg)?;
    let h = probe.h();
    let dt = trace.dt;
    let tau = probe.tau;
    let n = trace.traction.len();
    let z = (-tau * dt).exp();
    let tau_e2 = (C64::new(1.0, 0.0) / z - 2.0 + z) / (dt * dt);
    let tau_d = (C64::new(1.0, 0.0) / z - z) / (2.0 * dt);

    let rect = laplace::transform_vec3(&trace.traction, dt, tau, Quadrature::Rectangle)?;
    let wd = laplace::discrete_window(tau, dt, n)?;
    let transformed = rect * C64::new(h, 0.0) / wd;
    let reference = column.discrete_dn(tau_e2, tau_d, psi)? * C64::new(h, 0.0);

    let simpson = laplace::transform_vec3(&trace.traction, dt, tau, Quadrature::Simpson)?;
    let w = window_multiplier(tau, (n - 1) as f64 * dt)?;
    let continuous = simpson * C64::new(h, 0.0) / w;
    let exact = elliptic_dn_matrix(profile, eta, tau, &EllipticOptions::default())? * psi;

    let ratio = |a: CVec3, b: CVec3| {
        let d = (a - b).norm();
        if d == 0.0 {
            0.0
        } else {
            d / b.norm()
        }
    };
    Ok(BridgeReport { residual: ratio(transformed, reference), continuous_gap: ratio(continuous, exact), transformed, reference })
}

/// DN matrix recovered from time-domain runs for ψ = e₁, e₂, e₃
/// (Simpson rule and closed-form window).
pub fn time_domain_dn_matrix(profile: &StratifiedProfile, eta: [f64; 2], probe: &LaplaceProbe, cfg: &BridgeConfig) -> Result<CMat3> {
    let h = probe.h();
    let mut m = CMat3::zeros();
    for j in 0..3 {
        let mut psi = CVec3::zeros();
        psi[j] = C64::new(1.0, 0.0);
        let (_, trace) = run_time_domain(profile, eta, psi, probe, cfg)?;
        let n = trace.traction.len();
        let tr = laplace::transform_vec3(&trace.traction, trace.dt, probe.tau, Quadrature::Simpson)?;
        let w = window_multiplier(probe.tau, (n - 1) as f64 * trace.dt)?;
        m.set_column(j, &(tr * C64::new(h, 0.0) / w));
    }
    Ok(m)
}

/// Least-squares slope and intercept of `log r` against `x`; returns
/// `(slope, exp(intercept))`.
pub fn fit_log_slope(x: &[f64], r: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let ly: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, (my - slope * mx).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::principal_dn_symbol;
    use crate::medium::BoundaryChart;
    use crate::symbol;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn constant_extraction() {
        let p = StratifiedProfile::constant(2.0, 1.0, 1.0, 1.0).unwrap();
        let probes: Vec<LaplaceProbe> = [50.0, 100.0].iter().map(|&t| LaplaceProbe::new(c(t), 6.0).unwrap()).collect();
        let sym = extract_dn_symbol(&p, [1.0, 0.0], &probes, &EllipticOptions::default(), 1e-6).unwrap();
        let (t, f) = symbol::factorize(&p.node_jet(0), &BoundaryChart::flat(), [1.0, 0.0], c(1.0)).unwrap();
        let l0 = principal_dn_symbol(&f, &t);
        assert!((sym.lambda0[0] - l0).norm() < 1e-8);
        assert!(sym.lower_terms[0][0].norm() < 1e-5);
        let single = extract_dn_symbol(&p, [1.0, 0.0], &probes[..1], &EllipticOptions::default(), 1e-6).unwrap();
        assert!((single.lambda0[0] - l0).norm() < 1e-8);
    }

    #[test]
    fn linear_fit_and_residual_check() {
        let a = CMat3::identity();
        let b = CMat3::identity() * c(2.0);
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let maps: Vec<CMat3> = hs.iter().map(|&h| a + b * c(h)).collect();
        let (l0, lower) = fit_in_h(&hs, &maps, 1e-10).unwrap();
        assert!((l0 - a).norm() < 1e-12 && (lower[0] - b).norm() < 1e-10);
        let noisy: Vec<CMat3> =
            hs.iter().enumerate().map(|(i, &h)| a + b * c(h) + CMat3::identity() * c(if i % 2 == 0 { 1e-3 } else { -1e-3 })).collect();
        assert!(matches!(fit_in_h(&hs, &noisy, 1e-8), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn zero_data_bridge() {
        let p = StratifiedProfile::constant(2.0, 1.0, 1.0, 1.0).unwrap();
        let probe = LaplaceProbe::new(c(4.0), 2.0).unwrap();
        let cfg = BridgeConfig { length: 2.0, cells: 100, ..Default::default() };
        let r = bridge_check(&p, [1.0, 0.0], CVec3::zeros(), &probe, &cfg).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn slope_fit() {
        let x = [1.0, 2.0, 3.0];
        let r: Vec<f64> = x.iter().map(|t: &f64| 3.0 * (-2.0 * t).exp()).collect();
        let (s, a) = fit_log_slope(&x, &r);
        assert!((s + 2.0).abs() < 1e-12 && (a - 3.0).abs() < 1e-10);
    }
}
