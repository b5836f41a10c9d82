//! Finite-time Laplace transform `∫₀ᵀ u(t)e^{−τt}dt` of sampled traces.

use crate::error::{Error, Result};
use crate::linalg::{CVec3, C64};

/// Largest admissible `(|Im τ| + |τ|)·dt` for the Simpson rule.
pub const SIMPSON_RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Composite Simpson (3/8 rule on the last panel for odd interval counts).
    Simpson,
    /// `dt·Σ_{n<N} uₙ e^{−τ tₙ}`, the transform consistent with leapfrog
    /// time stepping.
    Rectangle,
}

/// Boundary time profile χ(t) = t².
pub fn chi(t: f64) -> f64 {
    t * t
}

fn check_tau(tau: C64) -> Result<()> {
    if !(tau.re > 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau} must have positive real part")));
    }
    Ok(())
}

fn weights(n: usize, rule: Quadrature) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match rule {
        Quadrature::Rectangle => w.iter_mut().for_each(|x| *x = 1.0),
        Quadrature::Simpson => {
            let intervals = n.saturating_sub(1);
            let (simpson, tail) = if intervals % 2 == 1 && intervals >= 3 { (intervals - 3, 3) } else { (intervals, 0) };
            for p in (0..simpson).step_by(2) {
                w[p] += 1.0 / 3.0;
                w[p + 1] += 4.0 / 3.0;
                w[p + 2] += 1.0 / 3.0;
            }
            if tail == 3 {
                let o = simpson;
                for (j, c) in [3.0, 9.0, 9.0, 3.0].iter().enumerate() {
                    w[o + j] += c / 8.0;
                }
            }
            if intervals == 1 {
                w[0] = 0.5;
                w[1] = 0.5;
            }
        }
    }
    w
}

/// Samples `u(n·dt)`, n = 0..N−1, transformed at τ.
pub fn finite_laplace_transform(samples: &[C64], dt: f64, tau: C64, rule: Quadrature) -> Result<C64> {
    check_tau(tau)?;
    if rule == Quadrature::Simpson && (tau.im.abs() + tau.norm()) * dt > SIMPSON_RESOLUTION {
        return Err(Error::CoarseQuadrature(format!(
            "(|Im tau| + |tau|) dt = {:.3} exceeds {SIMPSON_RESOLUTION}",
            (tau.im.abs() + tau.norm()) * dt
        )));
    }
    let w = weights(samples.len(), rule);
    let z = (-tau * dt).exp();
    let mut zn = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for (u, wn) in samples.iter().zip(w) {
        acc += u * zn * wn;
        zn *= z;
    }
    Ok(acc * dt)
}

pub fn transform_vec3(samples: &[CVec3], dt: f64, tau: C64, rule: Quadrature) -> Result<CVec3> {
    let mut out = CVec3::zeros();
    for c in 0..3 {
        let comp: Vec<C64> = samples.iter().map(|v| v[c]).collect();
        out[c] = finite_laplace_transform(&comp, dt, tau, rule)?;
    }
    Ok(out)
}

/// `∫₀ᵀ t²e^{−τt}dt = (2 − e^{−τT}(τ²T² + 2τT + 2))/τ³`.
pub fn window_multiplier(tau: C64, t_horizon: f64) -> Result<C64> {
    check_tau(tau)?;
    let tt = tau * t_horizon;
    let w = (C64::new(2.0, 0.0) - (-tt).exp() * (tt * tt + tt * 2.0 + 2.0)) / (tau * tau * tau);
    if w.norm() == 0.0 {
        return Err(Error::IllConditioned("window multiplier vanishes".into()));
    }
    Ok(w)
}

/// The window as seen by the rectangle rule on `n` samples.
pub fn discrete_window(tau: C64, dt: f64, n: usize) -> Result<C64> {
    let samples: Vec<C64> = (0..n).map(|k| C64::new(chi(k as f64 * dt), 0.0)).collect();
    finite_laplace_transform(&samples, dt, tau, Quadrature::Rectangle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn t2(dt: f64, t: f64) -> Vec<C64> {
        let n = (t / dt).round() as usize + 1;
        (0..n).map(|k| C64::new(chi(k as f64 * dt), 0.0)).collect()
    }

    #[test]
    fn window_values() {
        let w = window_multiplier(C64::new(1.0, 0.0), 20.0).unwrap();
        assert!((w.re - 2.0).abs() < 1e-6);
        assert_relative_eq!(w.re, 2.0 - (-20f64).exp() * 442.0, epsilon = 1e-14);
        let tau = C64::new(3.0, 2.0);
        let w = window_multiplier(tau, 60.0).unwrap();
        assert!((w - 2.0 / (tau * tau * tau)).norm() < 1e-14);
    }

    #[test]
    fn simpson_matches_closed_form() {
        for (tau, t) in [(C64::new(1.0, 0.0), 5.0), (C64::new(2.0, 3.0), 4.0), (C64::new(1.0, 0.0), 4.999)] {
            let dt = 1e-3;
            let s = t2(dt, t);
            let got = finite_laplace_transform(&s, dt, tau, Quadrature::Simpson).unwrap();
            let tt = (s.len() - 1) as f64 * dt;
            assert!((got - window_multiplier(tau, tt).unwrap()).norm() < 1e-10);
        }
        let zero = vec![C64::new(0.0, 0.0); 11];
        assert_eq!(finite_laplace_transform(&zero, 0.01, C64::new(1.0, 0.0), Quadrature::Simpson).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn coarse_and_invalid() {
        let s = t2(0.1, 1.0);
        assert!(matches!(finite_laplace_transform(&s, 0.1, C64::new(2.0, 0.0), Quadrature::Simpson), Err(Error::CoarseQuadrature(_))));
        assert!(finite_laplace_transform(&s, 0.1, C64::new(0.0, 1.0), Quadrature::Rectangle).is_err());
    }

    #[test]
    fn discrete_window_approaches_closed_form() {
        let tau = C64::new(4.0, 0.0);
        let dt = 1e-4;
        let w = discrete_window(tau, dt, 60001).unwrap();
        assert!((w - window_multiplier(tau, 6.0).unwrap()).norm() < 1e-4 * w.norm());
    }
}
