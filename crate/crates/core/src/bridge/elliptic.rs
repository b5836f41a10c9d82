//! Depth two-point problem for plane-wave data:
//! `−h²(Dv′)′ − ih(Rv′ + (Rᵀv)′) + (Q + ρτ̂²)v = 0`, `v(0) = ψ`, decaying.
//!
//! Depth increases inward while the outward normal points up, so the
//! transformed DN map is `Λ^hψ = −hDv′(0) − iRᵀψ`. Chebyshev collocation on
//! `[0, L]` with the exact constant-tail closure `hv′(L) = iS₀(L)v(L)`; the
//! medium is continued as a constant below the profile range.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{complexify, CMat3, CVec3, C64, I};
use crate::medium::{BoundaryChart, MediumJet, StratifiedProfile};
use crate::symbol::{self, SymbolTriple};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticOptions {
    /// Truncation depth in units of the slowest decay length h/Im ζ_min.
    pub depth_factor: f64,
    /// Accepted size of the trailing Chebyshev coefficients, relative.
    pub tail_tol: f64,
    /// Fixed collocation degree; chosen adaptively when `None`.
    pub degree: Option<usize>,
    pub max_degree: usize,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        Self { depth_factor: 18.0, tail_tol: 1e-10, degree: None, max_degree: 400 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution {
    pub depth_grid: Vec<f64>,
    pub v: Vec<CVec3>,
    /// ∂_s v at the nodes.
    pub dv: Vec<CVec3>,
    pub traction_at_boundary: CVec3,
    pub length: f64,
}

impl EllipticSolution {
    /// v and ∂_s v at depth `s` by barycentric interpolation.
    pub fn at(&self, s: f64) -> Result<(CVec3, CVec3)> {
        if !(0.0..=self.length).contains(&s) {
            return Err(Error::OutOfRange { depth: s, lo: 0.0, hi: self.length });
        }
        let n = self.depth_grid.len() - 1;
        let mut num_v = CVec3::zeros();
        let mut num_d = CVec3::zeros();
        let mut den = 0.0;
        for j in 0..=n {
            let diff = s - self.depth_grid[j];
            if diff == 0.0 {
                return Ok((self.v[j], self.dv[j]));
            }
            let w = if j == 0 || j == n { 0.5 } else { 1.0 } * if j % 2 == 0 { 1.0 } else { -1.0 } / diff;
            num_v += self.v[j] * C64::new(w, 0.0);
            num_d += self.dv[j] * C64::new(w, 0.0);
            den += w;
        }
        Ok((num_v / C64::new(den, 0.0), num_d / C64::new(den, 0.0)))
    }
}

/// Symbol matrices at depth `s` with the constant-tail continuation.
pub(crate) fn triple_at(profile: &StratifiedProfile, s: f64, eta: [f64; 2], tau_hat: C64) -> Result<(MediumJet, SymbolTriple)> {
    let jet = profile.evaluate_clamped(s, 0)?;
    let t = symbol::assemble_triple(&jet, &BoundaryChart::flat(), &crate::medium::CotangentPoint::new(eta, s), tau_hat)?;
    Ok((jet, t))
}

fn chebyshev(n: usize, length: f64) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 } * if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
        let row: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row;
    }
    // s = L(1 − x)/2
    let s = x.iter().map(|xi| 0.5 * length * (1.0 - xi)).collect();
    (s, d * (-2.0 / length))
}

/// Largest relative magnitude among the last three Chebyshev coefficients.
fn chebyshev_tail(values: &[C64]) -> f64 {
    let n = values.len() - 1;
    let coef = |k: usize| -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += v * (w * (std::f64::consts::PI * (j * k) as f64 / n as f64).cos());
        }
        acc.norm() * 2.0 / n as f64 * if k == 0 || k == n { 0.5 } else { 1.0 }
    };
    let all: Vec<f64> = (0..=n).map(coef).collect();
    let top = all.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    all[n - 2..].iter().copied().fold(0.0, f64::max) / top
}

/// Slowest decay and fastest variation, min Im ζ and max |ζ| of S₀⁺, over the
/// top and bottom of the column.
fn spectral_scales(profile: &StratifiedProfile, eta: [f64; 2], tau_hat: C64, depths: &[f64]) -> Result<(f64, f64)> {
    let mut im_min = f64::INFINITY;
    let mut abs_max: f64 = 0.0;
    for &s in depths {
        let jet = profile.evaluate_clamped(s, 0)?;
        let (_, f) = symbol::factorize(&jet, &BoundaryChart::flat(), eta, tau_hat)?;
        for z in f.eigenvalues_plus {
            im_min = im_min.min(z.im);
            abs_max = abs_max.max(z.norm());
        }
    }
    Ok((im_min, abs_max))
}

struct Discretization {
    s: Vec<f64>,
    dm: DMatrix<f64>,
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    length: f64,
    triples: Vec<SymbolTriple>,
    h: f64,
}

fn discretize(profile: &StratifiedProfile, eta: [f64; 2], h: f64, tau_hat: C64, n: usize, length: f64) -> Result<Discretization> {
    let (s, dm) = chebyshev(n, length);
    let m = 3 * (n + 1);
    let triples: Vec<SymbolTriple> = s.iter().map(|&si| triple_at(profile, si, eta, tau_hat).map(|t| t.1)).collect::<Result<_>>()?;
    let mut a = DMatrix::<C64>::zeros(m, m);
    let hc = C64::new(h, 0.0);
    // E = diag(D_l)·Dm, then A = −h²Dm·E − ih(R·Dm + Dm·Rᵀ) + C₀
    let mut e = vec![CMat3::zeros(); (n + 1) * (n + 1)];
    for l in 0..=n {
        let d = complexify(&triples[l].d);
        for mm in 0..=n {
            e[l * (n + 1) + mm] = d * C64::from(dm[(l, mm)]);
        }
    }
    for j in 1..n {
        let rj = complexify(&triples[j].r);
        for mm in 0..=n {
            let mut blk = CMat3::zeros();
            for l in 0..=n {
                if dm[(j, l)] != 0.0 {
                    blk += e[l * (n + 1) + mm] * C64::from(dm[(j, l)]);
                }
            }
            blk *= -hc * hc;
            blk -= (rj + complexify(&triples[mm].r.transpose())) * (I * hc * dm[(j, mm)]);
            if mm == j {
                blk += triples[j].c0();
            }
            a.view_mut((3 * j, 3 * mm), (3, 3)).copy_from(&blk);
        }
    }
    for c in 0..3 {
        a[(c, c)] = C64::new(1.0, 0.0);
    }
    let (_, f_end) = symbol::factorize(&profile.evaluate_clamped(length, 0)?, &BoundaryChart::flat(), eta, tau_hat)?;
    for mm in 0..=n {
        let mut blk = CMat3::identity() * C64::new(h * dm[(n, mm)], 0.0);
        if mm == n {
            blk -= f_end.s0_plus * I;
        }
        a.view_mut((3 * n, 3 * mm), (3, 3)).copy_from(&blk);
    }
    let lu = a.lu();
    Ok(Discretization { s, dm, lu, length, triples, h })
}

impl Discretization {
    fn solve(&self, psis: &[CVec3]) -> Result<Vec<EllipticSolution>> {
        let n = self.s.len() - 1;
        let mut rhs = DMatrix::<C64>::zeros(3 * (n + 1), psis.len());
        for (k, p) in psis.iter().enumerate() {
            for c in 0..3 {
                rhs[(c, k)] = p[c];
            }
        }
        let x = self.lu.solve(&rhs).ok_or_else(|| Error::IllConditioned("singular collocation matrix".into()))?;
        let mut out = Vec::with_capacity(psis.len());
        for k in 0..psis.len() {
            let v: Vec<CVec3> = (0..=n).map(|j| CVec3::new(x[(3 * j, k)], x[(3 * j + 1, k)], x[(3 * j + 2, k)])).collect();
            let dv: Vec<CVec3> =
                (0..=n).map(|j| (0..=n).fold(CVec3::zeros(), |acc, m| acc + v[m] * C64::new(self.dm[(j, m)], 0.0))).collect();
            let t0 = &self.triples[0];
            let traction = -(complexify(&t0.d) * dv[0]) * C64::new(self.h, 0.0) - complexify(&t0.r.transpose()) * v[0] * I;
            out.push(EllipticSolution { depth_grid: self.s.clone(), v, dv, traction_at_boundary: traction, length: self.length });
        }
        Ok(out)
    }
}

/// Solves for each boundary vector with a shared factorization, refining
/// the degree until the Chebyshev tail is below tolerance.
pub fn elliptic_solve_many(
    profile: &StratifiedProfile,
    eta: [f64; 2],
    tau: C64,
    psis: &[CVec3],
    opts: &EllipticOptions,
) -> Result<Vec<EllipticSolution>> {
    if !(tau.re > 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau} must have positive real part")));
    }
    let h = 1.0 / tau.norm();
    let tau_hat = tau * h;
    let (im0, _) = spectral_scales(profile, eta, tau_hat, &[0.0])?;
    let length = opts.depth_factor * h / im0;
    let (_, abs_max) = spectral_scales(profile, eta, tau_hat, &[0.0, length])?;
    let mut n = opts.degree.unwrap_or_else(|| (30.0 + 1.5 * length * abs_max / h).ceil() as usize);
    loop {
        let disc = discretize(profile, eta, h, tau_hat, n, length)?;
        let sols = disc.solve(psis)?;
        let tail = sols
            .iter()
            .flat_map(|s| (0..3).map(move |c| chebyshev_tail(&s.v.iter().map(|v| v[c]).collect::<Vec<_>>())))
            .fold(0.0, f64::max);
        if tail <= opts.tail_tol {
            return Ok(sols);
        }
        if opts.degree.is_some() || n >= opts.max_degree {
            return Err(Error::Refinement(format!("Chebyshev tail {tail:e} at degree {n} exceeds {:e}", opts.tail_tol)));
        }
        n = (n * 3 / 2).min(opts.max_degree);
    }
}

pub fn elliptic_dn_solve(
    profile: &StratifiedProfile,
    eta: [f64; 2],
    tau: C64,
    psi: CVec3,
    opts: &EllipticOptions,
) -> Result<EllipticSolution> {
    Ok(elliptic_solve_many(profile, eta, tau, &[psi], opts)?.remove(0))
}

/// The 3×3 matrix of Λ^h at the boundary.
pub fn elliptic_dn_matrix(profile: &StratifiedProfile, eta: [f64; 2], tau: C64, opts: &EllipticOptions) -> Result<CMat3> {
    let basis: [CVec3; 3] = std::array::from_fn(|j| CVec3::from_fn(|i, _| C64::from(if i == j { 1.0 } else { 0.0 })));
    let sols = elliptic_solve_many(profile, eta, tau, &basis, opts)?;
    Ok(CMat3::from_fn(|i, j| sols[j].traction_at_boundary[i]))
}

/// Profile shifted up by `s0` (for DN maps of the subdomain below depth s0).
pub fn shifted_profile(profile: &StratifiedProfile, s0: f64) -> Result<StratifiedProfile> {
    let grid = profile.depth_grid();
    let keep: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] > s0).collect();
    let mut depth = vec![0.0];
    let top = profile.evaluate(s0, 0)?;
    let (mut l, mut m, mut r) = (vec![top.lambda], vec![top.mu], vec![top.rho]);
    for i in keep {
        let j = profile.node_jet(i);
        if grid[i] - s0 < 1e-12 {
            continue;
        }
        depth.push(grid[i] - s0);
        l.push(j.lambda);
        m.push(j.mu);
        r.push(j.rho);
    }
    if depth.len() < profile.order() + 1 {
        let last = *depth.last().unwrap();
        let jet = profile.node_jet(grid.len() - 1);
        while depth.len() < profile.order() + 1 {
            depth.push(depth.last().unwrap() + last.max(1.0));
            l.push(jet.lambda);
            m.push(jet.mu);
            r.push(jet.rho);
        }
    }
    StratifiedProfile::new(depth, l, m, r, profile.order())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::principal_dn_symbol;

    fn c(x: f64, y: f64) -> C64 {
        C64::new(x, y)
    }

    #[test]
    fn constant_medium_is_exact() {
        let p = StratifiedProfile::constant(2.0, 1.0, 1.0, 1.0).unwrap();
        for (eta, tau) in [([1.0, 0.0], c(20.0, 0.0)), ([0.3, -0.7], c(8.0, 5.0)), ([0.0, 0.0], c(4.0, 0.0))] {
            let h = 1.0 / tau.norm();
            let (t, f) = symbol::factorize(&p.node_jet(0), &BoundaryChart::flat(), eta, tau * h).unwrap();
            let l0 = principal_dn_symbol(&f, &t);
            let dn = elliptic_dn_matrix(&p, eta, tau, &EllipticOptions::default()).unwrap();
            assert!((dn - l0).norm() <= 1e-8 * l0.norm(), "{}", (dn - l0).norm());
        }
    }

    #[test]
    fn matches_matrix_exponential() {
        let p = StratifiedProfile::constant(2.0, 1.0, 1.0, 1.0).unwrap();
        let tau = c(10.0, 0.0);
        let eta = [1.0, 0.0];
        let psi = CVec3::new(c(1.0, 0.0), c(0.0, 0.5), c(-0.3, 0.2));
        let sol = elliptic_dn_solve(&p, eta, tau, psi, &EllipticOptions::default()).unwrap();
        let (_, f) = symbol::factorize(&p.node_jet(0), &BoundaryChart::flat(), eta, c(1.0, 0.0)).unwrap();
        for s in [0.0, 0.05, 0.2, 0.7 * sol.length] {
            let exact = (f.s0_plus * (I * (s * 10.0))).exp() * psi;
            let (v, _) = sol.at(s).unwrap();
            assert!((v - exact).norm() <= 1e-8 * psi.norm());
        }
        let deep = sol.v.last().unwrap().norm();
        assert!(deep <= psi.norm());
        let zero = elliptic_dn_solve(&p, eta, tau, CVec3::zeros(), &EllipticOptions::default()).unwrap();
        assert!(zero.v.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn refinement_error_when_degree_is_fixed_too_low() {
        let p = StratifiedProfile::constant(2.0, 1.0, 1.0, 1.0).unwrap();
        let opts = EllipticOptions { degree: Some(6), ..Default::default() };
        assert!(matches!(elliptic_dn_matrix(&p, [1.0, 0.0], c(10.0, 0.0), &opts), Err(Error::Refinement(_))));
    }

    #[test]
    fn shifted_profile_values() {
        let p = StratifiedProfile::from_fn(1.0, 11, 1, |s| (2.0, 1.0 + s, 1.0)).unwrap();
        let q = shifted_profile(&p, 0.25).unwrap();
        assert!((q.evaluate(0.0, 0).unwrap().mu - 1.25).abs() < 1e-14);
        assert!((q.evaluate(0.5, 1).unwrap().d_mu[0] - 1.0).abs() < 1e-12);
    }
}
