//! Small dense complex linear algebra used by the symbol calculus.
//!
//! Everything here works on 3×3 matrices (the symbol blocks) or on the 6×6
//! companion linearization, so clarity wins over blocking or BLAS calls.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat3 = Matrix3<C64>;
pub type CVec3 = Vector3<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn complexify(m: &Matrix3<f64>) -> CMat3 {
    m.map(|x| C64::new(x, 0.0))
}

/// Principal square root on ℂ∖(−∞,0], i.e. with positive real part.
///
/// Radicands on the cut are numerical faults for the symbol formulas and are
/// reported instead of silently picking a side.
pub fn principal_sqrt(name: &'static str, z: C64) -> Result<C64> {
    let scale = z.norm();
    if scale == 0.0 || (z.re <= 0.0 && z.im.abs() <= 1e-14 * scale) {
        return Err(Error::BranchCut { name, value: z });
    }
    Ok(z.sqrt())
}

pub fn inverse(m: &CMat3) -> Result<CMat3> {
    m.try_inverse().ok_or_else(|| Error::IllConditioned("singular 3x3 matrix".into()))
}

/// Complex Schur form `m = z t zᴴ` with `t` upper triangular.
pub fn schur(m: DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let s = m.try_schur(f64::EPSILON, 100_000).ok_or_else(|| Error::IllConditioned("Schur iteration did not converge".into()))?;
    Ok(s.unpack())
}

pub fn eigenvalues3(m: &CMat3) -> Result<[C64; 3]> {
    let dm = DMatrix::from_iterator(3, 3, m.iter().copied());
    let (_, t) = schur(dm)?;
    Ok([t[(0, 0)], t[(1, 1)], t[(2, 2)]])
}

/// Symmetric square root and inverse square root of an SPD matrix.
pub fn spd_sqrt(d: &Matrix3<f64>) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let eig = SymmetricEigen::new(*d);
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::InvalidMedium("matrix is not positive definite".into()));
    }
    let v = eig.eigenvectors;
    let sq = Matrix3::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let isq = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok((v * sq * v.transpose(), v * isq * v.transpose()))
}

/// Schur form with the eigenvalues satisfying `select` moved to the leading
/// diagonal positions.
#[derive(Debug, Clone)]
pub struct OrderedSchur {
    pub z: DMatrix<C64>,
    pub t: DMatrix<C64>,
    /// Number of selected eigenvalues (they occupy `t[(0,0)]..t[(k-1,k-1)]`).
    pub selected: usize,
}

impl OrderedSchur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }
}

pub fn ordered_schur(m: DMatrix<C64>, select: impl Fn(C64) -> bool) -> Result<OrderedSchur> {
    let n = m.nrows();
    let (mut z, mut t) = schur(m)?;
    let mut target = 0;
    for j in 0..n {
        if !select(t[(j, j)]) {
            continue;
        }
        // bubble the selected eigenvalue from position j up to `target`
        let mut k = j;
        while k > target {
            swap_adjacent(&mut z, &mut t, k - 1);
            k -= 1;
        }
        target += 1;
    }
    Ok(OrderedSchur { z, t, selected: target })
}

/// Exchange the diagonal entries `k` and `k+1` of an upper triangular `t` by a
/// unitary similarity, accumulating it into `z`.
fn swap_adjacent(z: &mut DMatrix<C64>, t: &mut DMatrix<C64>, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let x0 = t[(k, k + 1)];
    let x1 = b - a;
    let nrm = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let (x0, x1) = (x0 / nrm, x1 / nrm);
    // q = [[x0, -conj(x1)], [x1, conj(x0)]]; first column is the eigenvector for b
    let q = [[x0, -x1.conj()], [x1, x0.conj()]];
    for c in 0..n {
        let (u, v) = (t[(k, c)], t[(k + 1, c)]);
        t[(k, c)] = q[0][0].conj() * u + q[1][0].conj() * v;
        t[(k + 1, c)] = q[0][1].conj() * u + q[1][1].conj() * v;
    }
    for r in 0..n {
        let (u, v) = (t[(r, k)], t[(r, k + 1)]);
        t[(r, k)] = u * q[0][0] + v * q[1][0];
        t[(r, k + 1)] = u * q[0][1] + v * q[1][1];
        let (u, v) = (z[(r, k)], z[(r, k + 1)]);
        z[(r, k)] = u * q[0][0] + v * q[1][0];
        z[(r, k + 1)] = u * q[0][1] + v * q[1][1];
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
    t[(k, k)] = b;
    t[(k + 1, k + 1)] = a;
}

/// Solves `a x + x b = y` by the complex Bartels–Stewart method.
///
/// Fails when some `α + β` (α ∈ σ(a), β ∈ σ(b)) is within `gap_tol`
/// (relative to the matrix scale) of zero.
pub fn solve_sylvester(a: &CMat3, b: &CMat3, y: &CMat3, gap_tol: f64) -> Result<CMat3> {
    let to_d = |m: &CMat3| DMatrix::from_iterator(3, 3, m.iter().copied());
    let (u, ta) = schur(to_d(a))?;
    let (v, tb) = schur(to_d(b))?;

    let scale = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    let mut gap = f64::INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            gap = gap.min((ta[(i, i)] + tb[(j, j)]).norm());
        }
    }
    if gap <= gap_tol * scale {
        return Err(Error::SpectraOverlap { gap });
    }

    let f = u.adjoint() * to_d(y) * &v;
    let mut zm = DMatrix::<C64>::zeros(3, 3);
    for j in 0..3 {
        let mut rhs: Vec<C64> = (0..3).map(|i| f[(i, j)]).collect();
        for k in 0..j {
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= tb[(k, j)] * zm[(i, k)];
            }
        }
        // (ta + tb[j,j]) z_j = rhs, upper triangular
        for i in (0..3).rev() {
            let mut acc = rhs[i];
            for c in i + 1..3 {
                acc -= ta[(i, c)] * zm[(c, j)];
            }
            zm[(i, j)] = acc / (ta[(i, i)] + tb[(j, j)]);
        }
    }
    let x = &u * zm * v.adjoint();
    Ok(CMat3::from_fn(|i, j| x[(i, j)]))
}

pub fn hermitian_defect(m: &CMat3) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(f64::MIN_POSITIVE)
}

/// Smallest eigenvalue of the Hermitian part (m + mᴴ)/2.
pub fn hermitian_part_min_eig(m: &CMat3) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kron_solve(a: &CMat3, b: &CMat3, y: &CMat3) -> CMat3 {
        // vec(AX + XB) = (I⊗A + Bᵀ⊗I) vec(X), column-major vec
        let mut k = DMatrix::<C64>::zeros(9, 9);
        for j in 0..3 {
            for i in 0..3 {
                let row = i + 3 * j;
                for p in 0..3 {
                    k[(row, p + 3 * j)] += a[(i, p)];
                    k[(row, i + 3 * p)] += b[(p, j)];
                }
            }
        }
        let rhs = DMatrix::from_iterator(9, 1, y.iter().copied());
        let x = k.lu().solve(&rhs).unwrap();
        CMat3::from_iterator(x.iter().copied())
    }

    fn sample(seed: u64) -> CMat3 {
        let mut s = seed;
        CMat3::from_fn(|_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            C64::new(a, b)
        })
    }

    #[test]
    fn sqrt_branch() {
        let r = principal_sqrt("z", C64::new(-1.0, 1e-3)).unwrap();
        assert!(r.re > 0.0);
        assert!(principal_sqrt("z", C64::new(-2.0, 0.0)).is_err());
        assert!(principal_sqrt("z", C64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn ordered_schur_selects_upper_half_plane() {
        let m = DMatrix::from_fn(6, 6, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0));
        let os = ordered_schur(m.clone(), |z| z.im > 0.0).unwrap();
        let ev = os.eigenvalues();
        for (i, e) in ev.iter().enumerate() {
            assert_eq!(e.im > 0.0, i < os.selected);
        }
        let back = &os.z * &os.t * os.z.adjoint();
        assert!((back - m).norm() < 1e-12);
        for i in 0..6 {
            for j in 0..i {
                assert_eq!(os.t[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn sylvester_matches_kronecker() {
        let s0 = CMat3::from_diagonal(&CVec3::new(I, I, 2.0 * I));
        for seed in 0..20 {
            let a = s0 + sample(seed) * C64::new(0.2, 0.0);
            let y = sample(seed + 100);
            let x = solve_sylvester(&a, &s0, &y, 1e-10).unwrap();
            let x_ref = kron_solve(&a, &s0, &y);
            assert!((x - x_ref).norm() < 1e-12 * x_ref.norm().max(1.0));
        }
    }

    #[test]
    fn sylvester_detects_overlap() {
        let a = CMat3::from_diagonal(&CVec3::new(I, I, I));
        let b = -a;
        assert!(matches!(solve_sylvester(&a, &b, &CMat3::identity(), 1e-10), Err(Error::SpectraOverlap { .. })));
    }
}
