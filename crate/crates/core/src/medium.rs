//! Isotropic media, depth profiles and boundary charts.

use std::io::Read;
use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Lamé parameters, density and their depth derivatives at one boundary point.
///
/// `d_lambda[k-1]` holds the k-th depth derivative of λ, and likewise for μ, ρ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumJet {
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
    pub d_lambda: Vec<f64>,
    pub d_mu: Vec<f64>,
    pub d_rho: Vec<f64>,
}

impl MediumJet {
    pub fn new(lambda: f64, mu: f64, rho: f64) -> Result<Self> {
        Self::with_derivatives(lambda, mu, rho, vec![], vec![], vec![])
    }

    pub fn with_derivatives(lambda: f64, mu: f64, rho: f64, d_lambda: Vec<f64>, d_mu: Vec<f64>, d_rho: Vec<f64>) -> Result<Self> {
        let jet = Self { lambda, mu, rho, d_lambda, d_mu, d_rho };
        jet.validate()?;
        Ok(jet)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.lambda, self.mu, self.rho];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMedium("non-finite parameter".into()));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidMedium(format!("mu = {} must be positive", self.mu)));
        }
        if self.lambda + 2.0 * self.mu <= 0.0 {
            return Err(Error::InvalidMedium(format!("lambda + 2 mu = {} must be positive", self.lambda + 2.0 * self.mu)));
        }
        if self.rho <= 0.0 {
            return Err(Error::InvalidMedium(format!("rho = {} must be positive", self.rho)));
        }
        let k = self.d_lambda.len();
        if self.d_mu.len() != k || self.d_rho.len() != k {
            return Err(Error::InvalidMedium("derivative arrays differ in length".into()));
        }
        Ok(())
    }

    /// Highest derivative order carried.
    pub fn order(&self) -> usize {
        self.d_lambda.len()
    }

    /// P-wave modulus λ + 2μ.
    pub fn p_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    /// k-th depth derivative of (λ, μ, ρ); k = 0 returns the values.
    pub fn derivative(&self, k: usize) -> Result<(f64, f64, f64)> {
        if k == 0 {
            return Ok((self.lambda, self.mu, self.rho));
        }
        if k > self.order() {
            return Err(Error::DerivativeOrder { requested: k, available: self.order() });
        }
        Ok((self.d_lambda[k - 1], self.d_mu[k - 1], self.d_rho[k - 1]))
    }

    /// The same point with all derivatives dropped.
    pub fn values_only(&self) -> Self {
        Self { d_lambda: vec![], d_mu: vec![], d_rho: vec![], ..self.clone() }
    }
}

/// Fourth-order tensor `C[i][j][k][l]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticTensor(pub [[[[f64; 3]; 3]; 3]; 3]);

impl ElasticTensor {
    /// λδᵢⱼδₖₗ + μ(δᵢₖδⱼₗ + δᵢₗδⱼₖ) without positivity checks, so it can also
    /// carry derivatives of the moduli.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut c = [[[[0.0; 3]; 3]; 3]; 3];
        for (i, ci) in c.iter_mut().enumerate() {
            for (j, cij) in ci.iter_mut().enumerate() {
                for (k, cijk) in cij.iter_mut().enumerate() {
                    for (l, v) in cijk.iter_mut().enumerate() {
                        *v = lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                    }
                }
            }
        }
        Self(c)
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j][k][l]
    }

    /// Largest violation of the minor and major symmetries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let c = self.get(i, j, k, l);
                        worst = worst
                            .max((c - self.get(j, i, k, l)).abs())
                            .max((c - self.get(i, j, l, k)).abs())
                            .max((c - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Acoustic tensor Σⱼₗ Cᵢⱼₖₗ ξⱼ ξₗ.
    pub fn acoustic(&self, xi: [f64; 3]) -> Matrix3<f64> {
        Matrix3::from_fn(|i, k| {
            let mut s = 0.0;
            for j in 0..3 {
                for l in 0..3 {
                    s += self.get(i, j, k, l) * xi[j] * xi[l];
                }
            }
            s
        })
    }
}

pub fn build_elasticity_tensor(jet: &MediumJet) -> Result<ElasticTensor> {
    jet.validate()?;
    Ok(ElasticTensor::isotropic(jet.lambda, jet.mu))
}

/// Boundary normal chart with a constant Jacobian.
///
/// The third row and column must be `e₃` so that depth stays the third
/// coordinate; the flat chart is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryChart {
    pub jacobian: Matrix3<f64>,
    pub metric: Matrix3<f64>,
}

impl BoundaryChart {
    pub fn flat() -> Self {
        Self { jacobian: Matrix3::identity(), metric: Matrix3::identity() }
    }

    pub fn constant(jacobian: Matrix3<f64>) -> Result<Self> {
        let j = jacobian;
        let off = j[(0, 2)].abs() + j[(1, 2)].abs() + j[(2, 0)].abs() + j[(2, 1)].abs();
        if off > 1e-14 || (j[(2, 2)] - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidInput("chart is not boundary normal".into()));
        }
        if j.determinant().abs() < 1e-12 {
            return Err(Error::InvalidInput("singular chart Jacobian".into()));
        }
        Ok(Self { jacobian: j, metric: j * j.transpose() })
    }

    pub fn is_flat(&self) -> bool {
        self.jacobian == Matrix3::identity()
    }

    /// Cartesian tangential frequency for the chart covector `η′`.
    pub fn cartesian_frequency(&self, eta_prime: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        [j[(0, 0)] * eta_prime[0] + j[(1, 0)] * eta_prime[1], j[(0, 1)] * eta_prime[0] + j[(1, 1)] * eta_prime[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CotangentPoint {
    pub y_prime: [f64; 2],
    pub eta_prime: [f64; 2],
    pub eta3: Option<C64>,
    pub s: f64,
}

impl CotangentPoint {
    pub fn new(eta_prime: [f64; 2], s: f64) -> Self {
        Self { y_prime: [0.0; 2], eta_prime, eta3: None, s }
    }

    pub fn eta_norm(&self) -> f64 {
        self.eta_prime[0].hypot(self.eta_prime[1])
    }
}

/// Depth-dependent medium sampled on a grid and interpolated by piecewise
/// polynomials of a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedProfile {
    depth: Vec<f64>,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    rho: Vec<f64>,
    order: usize,
}

#[derive(Debug, Deserialize)]
struct ProfileRecord {
    depth: f64,
    lambda: f64,
    mu: f64,
    rho: f64,
}

impl StratifiedProfile {
    pub fn new(depth: Vec<f64>, lambda: Vec<f64>, mu: Vec<f64>, rho: Vec<f64>, order: usize) -> Result<Self> {
        let n = depth.len();
        if n == 0 {
            return Err(Error::InvalidProfile("empty depth grid".into()));
        }
        if lambda.len() != n || mu.len() != n || rho.len() != n {
            return Err(Error::InvalidProfile("column lengths differ".into()));
        }
        if order == 0 {
            return Err(Error::InvalidProfile("interpolation order must be at least 1".into()));
        }
        if n < order + 1 && n > 1 {
            return Err(Error::InvalidProfile(format!("order {order} needs at least {} nodes, got {n}", order + 1)));
        }
        if depth.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("depth grid is not strictly increasing".into()));
        }
        for i in 0..n {
            MediumJet::new(lambda[i], mu[i], rho[i]).map_err(|e| Error::InvalidProfile(format!("node {i}: {e}")))?;
        }
        Ok(Self { depth, lambda, mu, rho, order })
    }

    /// Homogeneous medium on `[0, depth]`.
    pub fn constant(lambda: f64, mu: f64, rho: f64, depth: f64) -> Result<Self> {
        Self::new(vec![0.0, depth], vec![lambda; 2], vec![mu; 2], vec![rho; 2], 1)
    }

    /// Samples `f(s) -> (λ, μ, ρ)` on `nodes` equispaced points of `[0, depth]`.
    pub fn from_fn(depth: f64, nodes: usize, order: usize, f: impl Fn(f64) -> (f64, f64, f64)) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidProfile("need at least two nodes".into()));
        }
        let grid: Vec<f64> = (0..nodes).map(|i| depth * i as f64 / (nodes - 1) as f64).collect();
        let (mut l, mut m, mut r) = (vec![], vec![], vec![]);
        for &s in &grid {
            let (a, b, c) = f(s);
            l.push(a);
            m.push(b);
            r.push(c);
        }
        Self::new(grid, l, m, r, order)
    }

    /// Parses records with the header `depth,lambda,mu,rho`.
    pub fn from_csv_reader<R: Read>(reader: R, order: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let (mut d, mut l, mut m, mut r) = (vec![], vec![], vec![], vec![]);
        for rec in rdr.deserialize() {
            let rec: ProfileRecord = rec?;
            d.push(rec.depth);
            l.push(rec.lambda);
            m.push(rec.mu);
            r.push(rec.rho);
        }
        Self::new(d, l, m, r, order)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, order: usize) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?, order)
    }

    pub fn depth_grid(&self) -> &[f64] {
        &self.depth
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn range(&self) -> (f64, f64) {
        (self.depth[0], *self.depth.last().unwrap())
    }

    pub fn node_jet(&self, i: usize) -> MediumJet {
        MediumJet { lambda: self.lambda[i], mu: self.mu[i], rho: self.rho[i], d_lambda: vec![], d_mu: vec![], d_rho: vec![] }
    }

    pub fn is_constant(&self) -> bool {
        let same = |v: &[f64]| v.iter().all(|x| *x == v[0]);
        same(&self.lambda) && same(&self.mu) && same(&self.rho)
    }

    /// Jet at depth `s` carrying derivatives up to order `k`.
    pub fn evaluate(&self, s: f64, k: usize) -> Result<MediumJet> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&s) {
            return Err(Error::OutOfRange { depth: s, lo, hi });
        }
        if k > self.order {
            return Err(Error::DerivativeOrder { requested: k, available: self.order });
        }
        let n = self.depth.len();
        if n == 1 {
            let z = vec![0.0; k];
            return Ok(MediumJet { d_lambda: z.clone(), d_mu: z.clone(), d_rho: z, ..self.node_jet(0) });
        }
        if let Ok(i) = self.depth.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            if k == 0 {
                return Ok(self.node_jet(i));
            }
        }
        let p = self.order;
        let cell = self.depth.partition_point(|&x| x <= s).saturating_sub(1).min(n - 2);
        let start = (cell as isize - (p as isize - 1) / 2).clamp(0, (n - 1 - p) as isize) as usize;
        let xs = &self.depth[start..=start + p];
        let taylor = |ys: &[f64]| taylor_coefficients(xs, &ys[start..=start + p], s);
        let (tl, tm, tr) = (taylor(&self.lambda), taylor(&self.mu), taylor(&self.rho));
        let mut fact = 1.0;
        let (mut dl, mut dm, mut dr) = (vec![], vec![], vec![]);
        for j in 1..=k {
            fact *= j as f64;
            dl.push(fact * tl[j]);
            dm.push(fact * tm[j]);
            dr.push(fact * tr[j]);
        }
        let jet = MediumJet { lambda: tl[0], mu: tm[0], rho: tr[0], d_lambda: dl, d_mu: dm, d_rho: dr };
        jet.validate().map_err(|e| Error::InvalidProfile(format!("interpolant at s = {s}: {e}")))?;
        Ok(jet)
    }

    /// Like [`evaluate`](Self::evaluate) but continues the medium as a
    /// constant half-space below the last node (and above the first).
    pub fn evaluate_clamped(&self, s: f64, k: usize) -> Result<MediumJet> {
        let (lo, hi) = self.range();
        if s < lo || s > hi {
            let node = if s < lo { 0 } else { self.depth.len() - 1 };
            let z = vec![0.0; k.min(self.order)];
            if k > self.order {
                return Err(Error::DerivativeOrder { requested: k, available: self.order });
            }
            return Ok(MediumJet { d_lambda: z.clone(), d_mu: z.clone(), d_rho: z, ..self.node_jet(node) });
        }
        self.evaluate(s, k)
    }
}

pub fn evaluate_profile(profile: &StratifiedProfile, s: f64) -> Result<MediumJet> {
    profile.evaluate(s, profile.order())
}

/// Taylor coefficients about `s` of the interpolating polynomial through
/// `(xs, ys)`.
fn taylor_coefficients(xs: &[f64], ys: &[f64], s: f64) -> Vec<f64> {
    let n = xs.len();
    let mut c = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    // Horner in the shifted variable t = x − s
    let mut q = vec![c[n - 1]];
    for j in (0..n - 1).rev() {
        let d = s - xs[j];
        let mut next = vec![0.0; q.len() + 1];
        for (k, &qk) in q.iter().enumerate() {
            next[k] += d * qk;
            next[k + 1] += qk;
        }
        next[0] += c[j];
        q = next;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn tensor_entries() {
        let c = build_elasticity_tensor(&MediumJet::new(0.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.get(0, 1, 0, 1), 1.0);
        assert_eq!(c.get(0, 0, 1, 1), 0.0);
        assert_eq!(c.get(0, 0, 0, 0), 2.0);
        let c = build_elasticity_tensor(&MediumJet::new(2.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(c.get(0, 0, 0, 0), 4.0);
        assert_eq!(c.get(0, 0, 1, 1), 2.0);
        assert_eq!(c.get(0, 1, 0, 1), 1.0);
        assert_eq!(c.symmetry_defect(), 0.0);
    }

    #[test]
    fn rejects_bad_jets() {
        assert!(MediumJet::new(1.0, 0.0, 1.0).is_err());
        assert!(MediumJet::new(-2.5, 1.0, 1.0).is_err());
        assert!(MediumJet::new(1.0, 1.0, -1.0).is_err());
        assert!(MediumJet::with_derivatives(1.0, 1.0, 1.0, vec![0.0], vec![], vec![]).is_err());
    }

    #[test]
    fn constant_profile() {
        let p = StratifiedProfile::constant(2.0, 1.0, 3.0, 1.0).unwrap();
        let j = p.evaluate(0.37, 1).unwrap();
        assert_eq!((j.lambda, j.mu, j.rho), (2.0, 1.0, 3.0));
        assert_eq!(j.d_mu, vec![0.0]);
    }

    #[test]
    fn linear_profile() {
        let p = StratifiedProfile::from_fn(1.0, 11, 1, |s| (2.0, 1.0 + s, 1.0)).unwrap();
        let j = p.evaluate(0.5, 1).unwrap();
        assert_relative_eq!(j.mu, 1.5, epsilon = 1e-14);
        assert_relative_eq!(j.d_mu[0], 1.0, epsilon = 1e-12);
        assert!(matches!(p.evaluate(0.5, 2), Err(Error::DerivativeOrder { .. })));
        assert!(matches!(p.evaluate(1.5, 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn node_reproduction() {
        let p = StratifiedProfile::from_fn(2.0, 9, 3, |s| (1.0 + s.sin(), 2.0 + s * s, 1.0 + 0.1 * s)).unwrap();
        let s2 = p.depth_grid()[2];
        let j = p.evaluate(s2, 0).unwrap();
        assert_eq!(j, p.node_jet(2));
    }

    #[test]
    fn cubic_is_reproduced_with_derivatives() {
        let f = |s: f64| 1.0 + 0.5 * s - 0.3 * s * s + 0.2 * s * s * s;
        let p = StratifiedProfile::from_fn(1.0, 7, 3, |s| (0.5, f(s), 1.0)).unwrap();
        let j = p.evaluate(0.41, 3).unwrap();
        assert_relative_eq!(j.mu, f(0.41), epsilon = 1e-13);
        assert_relative_eq!(j.d_mu[0], 0.5 - 0.6 * 0.41 + 0.6 * 0.41 * 0.41, epsilon = 1e-11);
        assert_relative_eq!(j.d_mu[1], -0.6 + 1.2 * 0.41, epsilon = 1e-10);
        assert_relative_eq!(j.d_mu[2], 1.2, epsilon = 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let text = "depth,lambda,mu,rho\n0,2,1,1\n0.5,2,1.5,1\n1,2,2,1\n";
        let p = StratifiedProfile::from_csv_reader(text.as_bytes(), 1).unwrap();
        assert_eq!(p.depth_grid(), &[0.0, 0.5, 1.0]);
        let bad = "depth,lambda,mu,rho\n0,2,1,1\n0,2,1,1\n";
        assert!(StratifiedProfile::from_csv_reader(bad.as_bytes(), 1).is_err());
        assert!(StratifiedProfile::from_csv_reader("depth,lambda,mu,rho\n".as_bytes(), 1).is_err());
    }

    #[test]
    fn charts() {
        let flat = BoundaryChart::flat();
        assert_eq!(flat.metric, Matrix3::identity());
        let j = Matrix3::new(1.0, 0.3, 0.0, -0.2, 0.9, 0.0, 0.0, 0.0, 1.0);
        let c = BoundaryChart::constant(j).unwrap();
        assert!((c.metric - j * j.transpose()).norm() <= 1e-14);
        assert!(BoundaryChart::constant(Matrix3::new(1.0, 0.0, 0.1, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn strong_ellipticity(mu in 0.1f64..5.0, frac in 0.01f64..1.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            let lambda = -2.0 * mu + frac * 6.0;
            let n = (x * x + y * y + z * z).sqrt();
            prop_assume!(n > 1e-3);
            let c = build_elasticity_tensor(&MediumJet::new(lambda, mu, 1.0).unwrap()).unwrap();
            prop_assert_eq!(c.symmetry_defect(), 0.0);
            let a = c.acoustic([x / n, y / n, z / n]);
            let ev = a.symmetric_eigenvalues();
            prop_assert!(ev.iter().all(|&l| l > 0.0));
        }

        #[test]
        fn interpolated_jets_stay_valid(s in 0.0f64..1.0) {
            let p = StratifiedProfile::from_fn(1.0, 6, 2, |s| (1.0 - s, 1.0 + s * s, 2.0 - s)).unwrap();
            let j = p.evaluate(s, 2).unwrap();
            prop_assert!(j.validate().is_ok());
            prop_assert!((j.mu - (1.0 + s * s)).abs() < 1e-12);
        }
    }
}
