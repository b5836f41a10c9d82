//! Boundary values of λ, μ, ρ and their depth derivatives from principal
//! symbol entries probed at |ξ′| = c₀⁻¹ and √2·c₀⁻¹.
//!
//! Forward relations in the frame where ξ′ lies on the first axis (real τ):
//! `e₂₂(k) = √(k²μ² + ρμ)`, `e₁₁ = aμ`, `e₃₃ = c(λ + 2μ)`, hence
//! `μ² = c₀²(e₂₂(√2k)² − e₂₂(k)²)`, `ρμ = e₂₂(k)² − k²μ²` and
//! `(λ + 2μ)·Z = ρμe₃₃²` with `Z = e₁₁²(μk² + ρ) − k²μe₃₃²`. Derivatives follow
//! by Leibniz differentiation of these three products, whose leading
//! coefficients (2μ, μ, Z) do not depend on the order.

use crate::calculus::{self, principal_dn_symbol};
use crate::error::{Error, Result};
use crate::linalg::{CMat3, C64, I};
use crate::medium::{BoundaryChart, MediumJet};
use crate::symbol::{self, Factorization, SymbolTriple};

pub const DEFAULT_C0: f64 = 1.0;

/// Symbol entries at the two probe frequencies and their depth derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub c0: f64,
    /// e₂₂ at |ξ′| = c₀⁻¹ and at √2·c₀⁻¹.
    pub entries_22: [f64; 2],
    pub entry_11: f64,
    pub entry_33: f64,
    /// `derivative_entries[k-1]` holds the k-th depth derivatives of
    /// `[e₂₂(c₀⁻¹), e₂₂(√2c₀⁻¹), e₁₁, e₃₃]`.
    pub derivative_entries: Vec<[f64; 4]>,
}

impl ProbeSet {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.entries_22;
        if !(self.c0 > 0.0) {
            return Err(Error::InvalidProbe(format!("c0 = {} must be positive", self.c0)));
        }
        if !(a > 0.0 && b > a) {
            return Err(Error::InvalidProbe(format!("entries_22 = ({a}, {b}) must be positive and increasing")));
        }
        if !(self.entry_11 > 0.0 && self.entry_33 > 0.0) {
            return Err(Error::InvalidProbe("diagonal entries must be positive".into()));
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        1.0 / self.c0
    }

    /// Value (k = 0) or k-th derivative of the four probed quantities.
    fn series(&self, n: usize) -> Result<[Vec<f64>; 4]> {
        if n > self.derivative_entries.len() {
            return Err(Error::DerivativeOrder { requested: n, available: self.derivative_entries.len() });
        }
        let mut out: [Vec<f64>; 4] = Default::default();
        let base = [self.entries_22[0], self.entries_22[1], self.entry_11, self.entry_33];
        for (q, v) in out.iter_mut().enumerate() {
            v.push(base[q]);
            v.extend(self.derivative_entries[..n].iter().map(|d| d[q]));
        }
        Ok(out)
    }
}

pub fn recover_mu_rho(probe: &ProbeSet) -> Result<(f64, f64)> {
    probe.validate()?;
    let [e1, e2] = probe.entries_22;
    let rad = e2 * e2 - e1 * e1;
    let mu = probe.c0 * rad.sqrt();
    let k = probe.k();
    let rho = (e1 * e1 - k * k * mu * mu) / mu;
    if !(rho > 0.0) {
        return Err(Error::InvalidProbe(format!("recovered rho = {rho} is not positive")));
    }
    Ok((mu, rho))
}

pub fn recover_lambda(probe: &ProbeSet, mu: f64, rho: f64) -> Result<f64> {
    probe.validate()?;
    let k2 = probe.k().powi(2);
    let r = (probe.entry_11 / probe.entry_33).powi(2);
    let denom = r * (mu * k2 + rho) / mu - k2;
    if !(denom > 0.0) {
        return Err(Error::InvalidProbe(format!("ratio {r} admits no positive lambda + 2 mu")));
    }
    Ok(rho / denom - 2.0 * mu)
}

/// λ, μ, ρ from the probe values alone.
pub fn recover_jet(probe: &ProbeSet) -> Result<MediumJet> {
    let (mu, rho) = recover_mu_rho(probe)?;
    let lambda = recover_lambda(probe, mu, rho)?;
    MediumJet::new(lambda, mu, rho).map_err(|e| Error::InvalidProbe(e.to_string()))
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// n-th derivative of a·b from derivative sequences.
fn leibniz(a: &[f64], b: &[f64], n: usize) -> f64 {
    (0..=n).map(|j| binom(n, j) * a[j] * b[n - j]).sum()
}

/// Derivative sequence of a product up to order `n`.
fn product(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..=n).map(|m| leibniz(a, b, m)).collect()
}

/// Order-`n` derivatives given `jet` carrying orders 1..n−1.
fn recover_order(probe: &ProbeSet, jet: &MediumJet, n: usize) -> Result<(f64, f64, f64)> {
    if jet.order() + 1 < n {
        return Err(Error::DerivativeOrder { requested: n - 1, available: jet.order() });
    }
    let [e2k, e2s, e11, e33] = probe.series(n)?;
    let k2 = probe.k().powi(2);
    let c02 = probe.c0 * probe.c0;
    let mut mu: Vec<f64> = std::iter::once(jet.mu).chain(jet.d_mu[..n - 1].iter().copied()).collect();
    let mut rho: Vec<f64> = std::iter::once(jet.rho).chain(jet.d_rho[..n - 1].iter().copied()).collect();
    let mut p: Vec<f64> = std::iter::once(jet.p_modulus()).chain((0..n - 1).map(|j| jet.d_lambda[j] + 2.0 * jet.d_mu[j])).collect();
    mu.push(0.0);
    rho.push(0.0);
    p.push(0.0);

    // (μ²)⁽ⁿ⁾ = c₀²A⁽ⁿ⁾
    let a_n = leibniz(&e2s, &e2s, n) - leibniz(&e2k, &e2k, n);
    let mu_n = (c02 * a_n - leibniz(&mu, &mu, n)) / (2.0 * mu[0]);
    mu[n] = mu_n;

    // (ρμ)⁽ⁿ⁾ = (e₂₂²)⁽ⁿ⁾ − k²(μ²)⁽ⁿ⁾
    let rm_n = leibniz(&e2k, &e2k, n) - k2 * leibniz(&mu, &mu, n);
    let rho_n = (rm_n - leibniz(&mu, &rho, n)) / mu[0];
    rho[n] = rho_n;

    // (λ + 2μ)·Z = ρμe₃₃²
    let e11sq = product(&e11, &e11, n);
    let e33sq = product(&e33, &e33, n);
    let shear: Vec<f64> = (0..=n).map(|j| k2 * mu[j] + rho[j]).collect();
    let k2mu: Vec<f64> = mu.iter().map(|m| k2 * m).collect();
    let z: Vec<f64> = product(&e11sq, &shear, n).iter().zip(product(&k2mu, &e33sq, n)).map(|(a, b)| a - b).collect();
    let rhs = product(&product(&rho, &mu, n), &e33sq, n);
    if !(z[0] > 0.0) {
        return Err(Error::InvalidProbe("degenerate lambda equation".into()));
    }
    let p_n = (rhs[n] - leibniz(&z, &p, n)) / z[0];
    Ok((p_n - 2.0 * mu_n, mu_n, rho_n))
}

/// First depth derivatives (∂λ, ∂μ, ∂ρ) given the recovered values in `jet0`.
pub fn recover_first_derivatives(probe: &ProbeSet, jet0: &MediumJet) -> Result<(f64, f64, f64)> {
    recover_order(probe, &jet0.values_only(), 1)
}

/// k-th derivatives given `jets` carrying orders 1..k−1.
pub fn recover_higher_derivatives(probe: &ProbeSet, jets: &MediumJet, k: usize) -> Result<(f64, f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidInput("derivative order must be at least 1".into()));
    }
    recover_order(probe, jets, k)
}

/// Values and all derivatives the probe set supports, up to `order`.
pub fn recover_all(probe: &ProbeSet, order: usize) -> Result<MediumJet> {
    let mut jet = recover_jet(probe)?;
    for n in 1..=order {
        let (l, m, r) = recover_order(probe, &jet, n)?;
        jet.d_lambda.push(l);
        jet.d_mu.push(m);
        jet.d_rho.push(r);
    }
    Ok(jet)
}

/// Least-squares fit of e₂₂² = k²μ² + ρμ over many probe frequencies.
///
/// A robustness variant over more than the two prescribed frequencies.
pub fn recover_mu_rho_lsq(ks: &[f64], entries_22: &[f64]) -> Result<(f64, f64)> {
    if ks.len() != entries_22.len() || ks.len() < 2 {
        return Err(Error::InvalidProbe("need at least two matching probe frequencies".into()));
    }
    let x: Vec<f64> = ks.iter().map(|k| k * k).collect();
    let y: Vec<f64> = entries_22.iter().map(|e| e * e).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidProbe("probe frequencies must differ".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::InvalidProbe("nonpositive mu^2 slope".into()));
    }
    let mu = slope.sqrt();
    let rho = (my - slope * mx) / mu;
    if !(rho > 0.0) {
        return Err(Error::InvalidProbe(format!("recovered rho = {rho} is not positive")));
    }
    Ok((mu, rho))
}

/// Probe entries read off principal-symbol matrices taken with ξ′ on the
/// first axis.
pub fn probes_from_symbols(c0: f64, at_k: &CMat3, at_sqrt2k: &CMat3) -> ProbeSet {
    ProbeSet {
        c0,
        entries_22: [at_k[(1, 1)].re, at_sqrt2k[(1, 1)].re],
        entry_11: at_k[(0, 0)].re,
        entry_33: at_k[(2, 2)].re,
        derivative_entries: vec![],
    }
}

/// λ₀ at ξ′ = (k, 0) from the closed-form factorization.
pub fn closed_form_lambda0(jet: &MediumJet, k: f64) -> Result<CMat3> {
    let (t, f) = symbol::factorize(&jet.values_only(), &BoundaryChart::flat(), [k, 0.0], C64::new(1.0, 0.0))?;
    Ok(principal_dn_symbol(&f, &t))
}

/// Value-only probes from the closed-form symbol.
pub fn closed_form_probes(jet: &MediumJet, c0: f64) -> Result<ProbeSet> {
    let k = 1.0 / c0;
    Ok(probes_from_symbols(c0, &closed_form_lambda0(jet, k)?, &closed_form_lambda0(jet, 2f64.sqrt() * k)?))
}

/// ∂_sλ₀ from the sub-principal term: `∂_s = iD_s` and `D_sλ₀ = W⁻¹(λ₋₁)`.
pub fn depth_derivative_of_lambda0(triple: &SymbolTriple, fact: &Factorization, lambda_minus1: &CMat3) -> Result<CMat3> {
    Ok(calculus::w_map_inverse(triple, fact, lambda_minus1)? * I)
}

/// First-derivative probes recovered from λ₋₁ of a jet with first derivatives.
pub fn first_derivative_probes_from_lower(jet: &MediumJet, c0: f64) -> Result<ProbeSet> {
    let k = 1.0 / c0;
    let mut probe = closed_form_probes(jet, c0)?;
    let mut d = [0.0; 4];
    for (idx, kk) in [k, 2f64.sqrt() * k].into_iter().enumerate() {
        let (t, f) = symbol::factorize(&jet.values_only(), &BoundaryChart::flat(), [kk, 0.0], C64::new(1.0, 0.0))?;
        let lo = calculus::lower_order_from_jet(jet, [kk, 0.0], C64::new(1.0, 0.0))?;
        let dl0 = depth_derivative_of_lambda0(&t, &f, &lo.lambda_minus1)?;
        if idx == 0 {
            d[0] = dl0[(1, 1)].re;
            d[2] = dl0[(0, 0)].re;
            d[3] = dl0[(2, 2)].re;
        } else {
            d[1] = dl0[(1, 1)].re;
        }
    }
    probe.derivative_entries = vec![d];
    Ok(probe)
}

/// Truncated Taylor series in depth, used to differentiate the closed-form
/// probe entries exactly.
pub mod taylor {
    /// Coefficients `c[j]` of `Σ c[j] t^j`.
    #[derive(Debug, Clone, PartialEq)]
    pub struct Series(pub Vec<f64>);

    impl Series {
        pub fn constant(x: f64, n: usize) -> Self {
            let mut v = vec![0.0; n + 1];
            v[0] = x;
            Self(v)
        }

        /// From derivatives `[f, f′, f″, …]`.
        pub fn from_derivatives(d: &[f64]) -> Self {
            let mut fact = 1.0;
            Self(
                d.iter()
                    .enumerate()
                    .map(|(j, x)| {
                        if j > 0 {
                            fact *= j as f64;
                        }
                        x / fact
                    })
                    .collect(),
            )
        }

        pub fn derivatives(&self) -> Vec<f64> {
            let mut fact = 1.0;
            self.0
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    c * fact
                })
                .collect()
        }

        fn n(&self) -> usize {
            self.0.len()
        }

        pub fn add(&self, o: &Self) -> Self {
            Self(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
        }

        pub fn sub(&self, o: &Self) -> Self {
            Self(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
        }

        pub fn scale(&self, s: f64) -> Self {
            Self(self.0.iter().map(|a| a * s).collect())
        }

        pub fn add_scalar(&self, s: f64) -> Self {
            let mut v = self.0.clone();
            v[0] += s;
            Self(v)
        }

        pub fn mul(&self, o: &Self) -> Self {
            let n = self.n();
            Self((0..n).map(|k| (0..=k).map(|j| self.0[j] * o.0[k - j]).sum()).collect())
        }

        pub fn div(&self, o: &Self) -> Self {
            let n = self.n();
            let mut q = vec![0.0; n];
            for k in 0..n {
                let s: f64 = (0..k).map(|j| q[j] * o.0[k - j]).sum();
                q[k] = (self.0[k] - s) / o.0[0];
            }
            Self(q)
        }

        pub fn sqrt(&self) -> Self {
            let n = self.n();
            let mut r = vec![0.0; n];
            r[0] = self.0[0].sqrt();
            for k in 1..n {
                let s: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
                r[k] = (self.0[k] - s) / (2.0 * r[0]);
            }
            Self(r)
        }
    }
}

/// Probes with exact depth derivatives from Taylor series of λ, μ, ρ
/// (all with the same length, order + 1), for real τ.
pub fn analytic_probes(lambda: &taylor::Series, mu: &taylor::Series, rho: &taylor::Series, c0: f64) -> Result<ProbeSet> {
    use taylor::Series;
    let order = lambda.0.len() - 1;
    if mu.0.len() != order + 1 || rho.0.len() != order + 1 {
        return Err(Error::InvalidInput("series lengths differ".into()));
    }
    MediumJet::new(lambda.0[0], mu.0[0], rho.0[0])?;
    let k = 1.0 / c0;
    let lp = lambda.add(&mu.scale(2.0));
    let e22 = |kk: f64| mu.mul(mu).scale(kk * kk).add(&rho.mul(mu)).sqrt();
    let shear = mu.scale(k * k).add(rho);
    let gamma = lp.scale(k * k).add(rho).mul(&lp).div(&mu.mul(&shear)).sqrt();
    let opg = gamma.add_scalar(1.0);
    let lm = lambda.add(mu);
    let c = opg.mul(&opg).mul(&shear).div(&lp).sub(&lm.mul(&lm).scale(k * k).div(&mu.mul(&lp))).sqrt().div(&opg);
    let e11 = gamma.mul(&c).mul(mu);
    let e33 = c.mul(&lp);
    let seqs: Vec<Vec<f64>> = [e22(k), e22(2f64.sqrt() * k), e11, e33].iter().map(Series::derivatives).collect();
    Ok(ProbeSet {
        c0,
        entries_22: [seqs[0][0], seqs[1][0]],
        entry_11: seqs[2][0],
        entry_33: seqs[3][0],
        derivative_entries: (1..=order).map(|j| [seqs[0][j], seqs[1][j], seqs[2][j], seqs[3][j]]).collect(),
    })
}

/// Fourth-order central difference of order `k` ∈ {1, 2, 3} with step `step`.
pub fn central_difference(f: impl Fn(f64) -> Result<f64>, x: f64, k: usize, step: f64) -> Result<f64> {
    let (offsets, weights, scale): (Vec<f64>, Vec<f64>, f64) = match k {
        1 => (vec![-2.0, -1.0, 1.0, 2.0], vec![1.0, -8.0, 8.0, -1.0], 12.0 * step),
        2 => (vec![-2.0, -1.0, 0.0, 1.0, 2.0], vec![-1.0, 16.0, -30.0, 16.0, -1.0], 12.0 * step * step),
        3 => (vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0], vec![1.0, -8.0, 13.0, -13.0, 8.0, -1.0], 8.0 * step.powi(3)),
        _ => return Err(Error::DerivativeOrder { requested: k, available: 3 }),
    };
    let mut acc = 0.0;
    for (o, w) in offsets.iter().zip(&weights) {
        acc += w * f(x + o * step)?;
    }
    Ok(acc / scale)
}

/// Default step for an order-`k` fourth-order difference of data with
/// relative accuracy `eps`, balancing truncation h⁴ against noise eps/hᵏ.
pub fn default_step(k: usize, eps: f64) -> f64 {
    eps.powf(1.0 / (k as f64 + 4.0))
}

/// Probes with derivatives by central differences of a symbol source
/// `f(s) -> [e₂₂(c₀⁻¹), e₂₂(√2c₀⁻¹), e₁₁, e₃₃]`.
pub fn finite_difference_probes(f: impl Fn(f64) -> Result<[f64; 4]>, s: f64, c0: f64, order: usize, eps: f64) -> Result<ProbeSet> {
    let base = f(s)?;
    let mut derivative_entries = Vec::with_capacity(order);
    for k in 1..=order {
        let step = default_step(k, eps);
        let mut d = [0.0; 4];
        for (q, v) in d.iter_mut().enumerate() {
            *v = central_difference(|x| f(x).map(|e| e[q]), s, k, step)?;
        }
        derivative_entries.push(d);
    }
    Ok(ProbeSet { c0, entries_22: [base[0], base[1]], entry_11: base[2], entry_33: base[3], derivative_entries })
}

/// Probe quadruple of the closed-form symbol of `jet`.
pub fn closed_form_entries(jet: &MediumJet, c0: f64) -> Result<[f64; 4]> {
    let p = closed_form_probes(jet, c0)?;
    Ok([p.entries_22[0], p.entries_22[1], p.entry_11, p.entry_33])
}

/// Relative errors of recovered (λ, μ, ρ); λ is measured against λ + 2μ since
/// λ itself may vanish.
pub fn relative_errors(truth: &MediumJet, got: &MediumJet) -> [f64; 3] {
    [(got.lambda - truth.lambda).abs() / truth.p_modulus(), (got.mu - truth.mu).abs() / truth.mu, (got.rho - truth.rho).abs() / truth.rho]
}

#[cfg(test)]
mod tests {
    use super::taylor::Series;
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn probe22(a: f64, b: f64, c0: f64) -> ProbeSet {
        ProbeSet { c0, entries_22: [a, b], entry_11: 1.0, entry_33: 1.0, derivative_entries: vec![] }
    }

    #[test]
    fn mu_rho_examples() {
        let (m, r) = recover_mu_rho(&probe22(2f64.sqrt(), 3f64.sqrt(), 1.0)).unwrap();
        assert_relative_eq!(m, 1.0, epsilon = 1e-14);
        assert_relative_eq!(r, 1.0, epsilon = 1e-14);
        let (m, r) = recover_mu_rho(&probe22(6f64.sqrt(), 10f64.sqrt(), 1.0)).unwrap();
        assert_relative_eq!(m, 2.0, epsilon = 1e-14);
        assert_relative_eq!(r, 1.0, epsilon = 1e-14);
        let (m, r) = recover_mu_rho(&probe22(1.25f64.sqrt(), 1.5f64.sqrt(), 2.0)).unwrap();
        assert_relative_eq!(m, 1.0, epsilon = 1e-14);
        assert_relative_eq!(r, 1.0, epsilon = 1e-14);
        assert!(recover_mu_rho(&probe22(2.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn lambda_examples() {
        let mut p = probe22(2f64.sqrt(), 3f64.sqrt(), 1.0);
        p.entry_11 = (5f64 / 8.0).sqrt();
        assert_relative_eq!(recover_lambda(&p, 1.0, 1.0).unwrap(), 2.0, epsilon = 1e-13);
        p.entry_11 = (3f64 / 4.0).sqrt();
        assert_relative_eq!(recover_lambda(&p, 1.0, 1.0).unwrap(), 0.0, epsilon = 1e-13);
        p.entry_11 = 0.5;
        assert!(recover_lambda(&p, 1.0, 1.0).is_err());
        let jet = MediumJet::new(2.0, 1.0, 1.0).unwrap();
        let p = closed_form_probes(&jet, 1.0).unwrap();
        assert_relative_eq!((p.entry_11 / p.entry_33).powi(2), 5.0 / 8.0, epsilon = 1e-13);
        assert_relative_eq!(recover_jet(&p).unwrap().lambda, 2.0, epsilon = 1e-12);
    }

    fn poly(c: &[f64], n: usize) -> Series {
        let mut v = c.to_vec();
        v.resize(n + 1, 0.0);
        Series(v)
    }

    #[test]
    fn first_derivative_examples() {
        let jet = MediumJet::new(2.0, 1.0, 1.0).unwrap();
        let p = closed_form_probes(&jet, 1.0).unwrap();
        let with_zero = ProbeSet { derivative_entries: vec![[0.0; 4]], ..p };
        assert_eq!(recover_first_derivatives(&with_zero, &jet).unwrap(), (0.0, 0.0, 0.0));

        let p = analytic_probes(&poly(&[2.0], 1), &poly(&[1.0, 1.0], 1), &poly(&[1.0], 1), 1.0).unwrap();
        let d = p.derivative_entries[0];
        assert_relative_eq!(2.0 * p.entries_22[1] * d[1] - 2.0 * p.entries_22[0] * d[0], 2.0, epsilon = 1e-13);
        let (dl, dm, dr) = recover_first_derivatives(&p, &jet).unwrap();
        assert_relative_eq!(dm, 1.0, epsilon = 1e-12);
        assert!(dl.abs() < 1e-12 && dr.abs() < 1e-12);

        let p = analytic_probes(&poly(&[2.0], 1), &poly(&[1.0], 1), &poly(&[1.0, 2.0], 1), 1.0).unwrap();
        let (dl, dm, dr) = recover_first_derivatives(&p, &jet).unwrap();
        assert_relative_eq!(dr, 2.0, epsilon = 1e-12);
        assert!(dm.abs() < 1e-12 && dl.abs() < 1e-12);
    }

    #[test]
    fn second_derivative_example() {
        let p = analytic_probes(&poly(&[2.0], 2), &poly(&[1.0, 0.0, 1.0], 2), &poly(&[1.0], 2), 1.0).unwrap();
        let jet = recover_all(&p, 1).unwrap();
        let (_, dm2, _) = recover_higher_derivatives(&p, &jet, 2).unwrap();
        assert_relative_eq!(dm2, 2.0, epsilon = 1e-12);
        let c = analytic_probes(&poly(&[2.0], 2), &poly(&[1.0], 2), &poly(&[1.0], 2), 1.0).unwrap();
        let jet = recover_all(&c, 2).unwrap();
        assert!(jet.d_lambda.iter().chain(&jet.d_mu).chain(&jet.d_rho).all(|x| x.abs() < 1e-13));
        assert!(recover_higher_derivatives(&p, &MediumJet::new(2.0, 1.0, 1.0).unwrap(), 2).is_err());
    }

    #[test]
    fn normal_derivative_chain() {
        let jet = MediumJet::with_derivatives(1.5, 1.2, 0.8, vec![0.4], vec![-0.3], vec![0.25]).unwrap();
        let p = first_derivative_probes_from_lower(&jet, 1.0).unwrap();
        let (dl, dm, dr) = recover_first_derivatives(&p, &jet).unwrap();
        assert_relative_eq!(dl, 0.4, epsilon = 1e-9);
        assert_relative_eq!(dm, -0.3, epsilon = 1e-9);
        assert_relative_eq!(dr, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn cubic_profile_with_finite_differences() {
        let l = [1.0, 0.3, -0.2, 0.1];
        let m = [1.5, -0.4, 0.2, 0.3];
        let r = [2.0, 0.5, 0.1, -0.2];
        let ev = |c: &[f64; 4], s: f64| c[0] + s * (c[1] + s * (c[2] + s * c[3]));
        let src = |s: f64| closed_form_entries(&MediumJet::new(ev(&l, s), ev(&m, s), ev(&r, s))?, 1.0);
        let p = finite_difference_probes(src, 0.0, 1.0, 3, 1e-15).unwrap();
        let jet = recover_all(&p, 3).unwrap();
        let fact = [1.0, 1.0, 2.0, 6.0];
        for k in 1..=3 {
            let (a, b, c) = jet.derivative(k).unwrap();
            assert!((a - fact[k] * l[k]).abs() <= 1e-4 * (l[0] + 2.0 * m[0]));
            assert!((b - fact[k] * m[k]).abs() <= 1e-4 * m[0]);
            assert!((c - fact[k] * r[k]).abs() <= 1e-4 * r[0]);
        }
    }

    #[test]
    fn central_difference_orders() {
        let f = |x: f64| Ok(x.powi(4) + 2.0 * x.powi(3) - x);
        assert_relative_eq!(central_difference(f, 0.3, 1, 1e-2).unwrap(), 4.0 * 0.027 + 6.0 * 0.09 - 1.0, epsilon = 1e-9);
        assert_relative_eq!(central_difference(f, 0.3, 2, 1e-2).unwrap(), 12.0 * 0.09 + 12.0 * 0.3, epsilon = 1e-7);
        assert_relative_eq!(central_difference(f, 0.3, 3, 1e-2).unwrap(), 24.0 * 0.3 + 12.0, epsilon = 1e-6);
        assert!(central_difference(f, 0.3, 4, 1e-2).is_err());
    }

    #[test]
    fn least_squares_variant() {
        let jet = MediumJet::new(0.7, 1.3, 2.1).unwrap();
        let ks = [0.5, 1.0, 1.5, 2.0];
        let e: Vec<f64> = ks.iter().map(|&k| closed_form_lambda0(&jet, k).unwrap()[(1, 1)].re).collect();
        let (m, r) = recover_mu_rho_lsq(&ks, &e).unwrap();
        assert_relative_eq!(m, 1.3, epsilon = 1e-12);
        assert_relative_eq!(r, 2.1, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn round_trip(seed in 0u64..u64::MAX, c0_idx in 0usize..3) {
            let c0 = [0.5, 1.0, 2.0][c0_idx];
            let s = &symbol::random_sweep(seed, 1, 0)[0];
            let got = recover_jet(&closed_form_probes(&s.jet, c0).unwrap()).unwrap();
            let err = relative_errors(&s.jet, &got);
            prop_assert!(err.iter().all(|&e| e <= 1e-10), "{:?} {:?}", err, s.jet);
        }

        #[test]
        fn cubic_round_trip(seed in 0u64..u64::MAX) {
            let base = &symbol::random_sweep(seed, 1, 0)[0].jet;
            let mut rng = seed;
            let mut next = || {
                rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((rng >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            };
            let l = Series(vec![base.lambda, next(), next(), next()]);
            let m = Series(vec![base.mu, next(), next(), next()]);
            let r = Series(vec![base.rho, next(), next(), next()]);
            let p = analytic_probes(&l, &m, &r, 1.0).unwrap();
            let jet = recover_all(&p, 3).unwrap();
            for k in 1..=3 {
                let (a, b, c) = jet.derivative(k).unwrap();
                let fact = [1.0, 1.0, 2.0, 6.0][k];
                let scale = base.p_modulus().max(1.0);
                prop_assert!((a - fact * l.0[k]).abs() <= 1e-6 * scale);
                prop_assert!((b - fact * m.0[k]).abs() <= 1e-6 * base.mu.max(1.0));
                prop_assert!((c - fact * r.0[k]).abs() <= 1e-6 * base.rho.max(1.0));
            }
        }
    }
}
