//! Dense linear-algebra substrate.
//!
//! Everything is stored as a [`Mat`] (a `nalgebra::DMatrix<f64>`); vectors are
//! single-column matrices. The geometry of every projection is carried by a
//! [`Weight`], which caches `B`, `B^{1/2}`, `B^{-1}` and `B^{-1/2}`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{dims, Error, Result};

pub type Mat = DMatrix<f64>;

/// Relative eigenvalue threshold below which a weight matrix is rejected.
const WEIGHT_EIG_FLOOR: f64 = 1e-12;

/// Deterministic random stream keyed by a 64-bit seed.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits.
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Symmetric positive definite geometry matrix with cached factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    b: Mat,
    b_half: Mat,
    b_inv: Mat,
    b_inv_half: Mat,
    identity: bool,
}

impl Weight {
    pub fn identity(n: usize) -> Self {
        let id = Mat::identity(n, n);
        Self {
            b: id.clone(),
            b_half: id.clone(),
            b_inv: id.clone(),
            b_inv_half: id,
            identity: true,
        }
    }

    pub fn new(b: Mat) -> Result<Self> {
        if !b.is_square() {
            return Err(dims(
                "weight",
                "square matrix",
                format!("{}x{}", b.nrows(), b.ncols()),
            ));
        }
        let scale = max_abs(&b).max(f64::MIN_POSITIVE);
        if !is_symmetric(&b, 1e-12 * scale) {
            return Err(Error::NotSymmetric);
        }
        let (vals, vecs) = sym_eigen(&symmetrize(&b));
        let lmax = vals[vals.len() - 1];
        let lmin = vals[0];
        if !(lmax > 0.0) || lmin <= WEIGHT_EIG_FLOOR * lmax {
            return Err(Error::NotSpd(format!(
                "eigenvalues in [{lmin:e}, {lmax:e}]"
            )));
        }
        let n = b.nrows();
        let identity = b == Mat::identity(n, n);
        let f = |g: &dyn Fn(f64) -> f64| spectral_apply(&vals, &vecs, g);
        Ok(Self {
            b_half: f(&|l| l.sqrt()),
            b_inv: f(&|l| 1.0 / l),
            b_inv_half: f(&|l| 1.0 / l.sqrt()),
            b,
            identity,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }
    pub fn b(&self) -> &Mat {
        &self.b
    }
    pub fn half(&self) -> &Mat {
        &self.b_half
    }
    pub fn inv(&self) -> &Mat {
        &self.b_inv
    }
    pub fn inv_half(&self) -> &Mat {
        &self.b_inv_half
    }
    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `B^{-1} m`, skipping the product when `B = I`.
    pub fn apply_inv(&self, m: &Mat) -> Mat {
        if self.identity {
            m.clone()
        } else {
            &self.b_inv * m
        }
    }

    pub fn apply(&self, m: &Mat) -> Mat {
        if self.identity {
            m.clone()
        } else {
            &self.b * m
        }
    }
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn is_symmetric(m: &Mat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending order.
pub fn sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = Mat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn spectral_apply(vals: &[f64], vecs: &Mat, f: &dyn Fn(f64) -> f64) -> Mat {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let fl = f(l);
        for i in 0..n {
            scaled[(i, j)] *= fl;
        }
    }
    symmetrize(&(scaled * vecs.transpose()))
}

/// Symmetric PSD square root. Eigenvalues within `1e-12·λmax` of zero are
/// clamped; anything more negative is an error.
pub fn sym_sqrt(m: &Mat) -> Result<Mat> {
    if is_diagonal(m) {
        let d = m.diagonal();
        if d.iter().any(|&v| v < 0.0) {
            return Err(Error::NotSpd("negative diagonal entry".into()));
        }
        return Ok(Mat::from_diagonal(&d.map(f64::sqrt)));
    }
    let (vals, vecs) = sym_eigen(&symmetrize(m));
    let lmax = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if vals[0] < -WEIGHT_EIG_FLOOR * lmax {
        return Err(Error::NotSpd(format!("eigenvalue {:e}", vals[0])));
    }
    Ok(spectral_apply(&vals, &vecs, &|l| l.max(0.0).sqrt()))
}

/// Inverse symmetric square root of an SPD matrix.
pub fn sym_inv_sqrt(m: &Mat) -> Result<Mat> {
    let (vals, vecs) = sym_eigen(&symmetrize(m));
    let lmax = vals[vals.len() - 1];
    if !(lmax > 0.0) || vals[0] <= WEIGHT_EIG_FLOOR * lmax {
        return Err(Error::NotSpd(format!("eigenvalue {:e}", vals[0])));
    }
    Ok(spectral_apply(&vals, &vecs, &|l| 1.0 / l.sqrt()))
}

fn is_diagonal(m: &Mat) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

fn svd_cutoff(m: &Mat, sigma_max: f64) -> f64 {
    m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max * 10.0
}

/// Thin singular value decomposition `M = U·diag(s)·Vᵀ`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub vt: Mat,
}

/// SVD with a reconstruction check. nalgebra's bidiagonal SVD occasionally
/// returns inconsistent factors on rank-deficient input (a few in a thousand
/// random low-rank matrices); when `‖UΣVᵀ − M‖` is off we fall back to the
/// symmetric eigendecomposition of `[[0, M], [Mᵀ, 0]]`, whose eigenpairs are
/// `±σ` with vectors `[u; ±v]/√2`. In the fallback, vectors belonging to
/// zero singular values are not meaningful.
pub fn svd(m: &Mat) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    let scale = m.norm();
    if k == 0 || scale == 0.0 {
        return Svd {
            u: Mat::identity(r, k),
            s: vec![0.0; k],
            vt: Mat::identity(k, c),
        };
    }
    let raw = m.clone().svd(true, true);
    let (u, vt) = (raw.u.expect("u requested"), raw.v_t.expect("v_t requested"));
    let tol = 64.0 * r.max(c) as f64 * f64::EPSILON * scale;
    let recon = &u * Mat::from_diagonal(&raw.singular_values) * &vt;
    if (recon - m).amax() <= tol {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| raw.singular_values[b].total_cmp(&raw.singular_values[a]));
        return Svd {
            u: Mat::from_fn(r, k, |i, j| u[(i, order[j])]),
            s: order.iter().map(|&j| raw.singular_values[j]).collect(),
            vt: Mat::from_fn(k, c, |i, j| vt[(order[i], j)]),
        };
    }
    svd_by_eigen(m)
}

fn svd_by_eigen(m: &Mat) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    let mut aug = Mat::zeros(r + c, r + c);
    aug.view_mut((0, r), (r, c)).copy_from(m);
    aug.view_mut((r, 0), (c, r)).copy_from(&m.transpose());
    let (vals, vecs) = sym_eigen(&aug);
    let mut u = Mat::zeros(r, k);
    let mut vt = Mat::zeros(k, c);
    let mut s = Vec::with_capacity(k);
    for j in 0..k {
        let col = r + c - 1 - j;
        s.push(vals[col].max(0.0));
        let top = vecs.view((0, col), (r, 1));
        let bot = vecs.view((r, col), (c, 1));
        let (nt, nb) = (top.norm(), bot.norm());
        if nt > 0.0 {
            u.set_column(j, &(top / nt).column(0));
        }
        if nb > 0.0 {
            vt.set_row(j, &(bot.transpose() / nb).row(0));
        }
    }
    Svd { u, s, vt }
}

/// Moore-Penrose pseudoinverse by SVD. Singular values at or below
/// `max(rows, cols)·ε·σmax·10` are treated as zero.
pub fn pseudoinverse(m: &Mat) -> Mat {
    let (r, c) = m.shape();
    if m.iter().all(|&v| v == 0.0) {
        return Mat::zeros(c, r);
    }
    let d = svd(m);
    let cut = svd_cutoff(m, d.s[0]);
    let mut out = Mat::zeros(c, r);
    for (k, &s) in d.s.iter().enumerate() {
        if s > cut {
            out += (d.vt.row(k).transpose() / s) * d.u.column(k).transpose();
        }
    }
    out
}

/// Numerical rank with the same cutoff as [`pseudoinverse`].
pub fn rank(m: &Mat) -> usize {
    if m.iter().all(|&v| v == 0.0) {
        return 0;
    }
    let s = svd(m).s;
    let cut = svd_cutoff(m, s[0]);
    s.iter().filter(|&&v| v > cut).count()
}

/// Minimum-norm solution `M† d` of a consistent system.
pub fn least_norm_solve(m: &Mat, d: &Mat) -> Result<Mat> {
    if m.nrows() != d.nrows() {
        return Err(dims("least_norm_solve", m.nrows(), d.nrows()));
    }
    let x = pseudoinverse(m) * d;
    let dn = d.norm();
    let res = (m * &x - d).norm();
    let tol = 1e-8 * (dn + m.norm() * x.norm()).max(f64::MIN_POSITIVE);
    if res > tol {
        return Err(Error::InconsistentSystem(if dn > 0.0 {
            res / dn
        } else {
            res
        }));
    }
    Ok(x)
}

/// Orthogonal projector `U_r U_rᵀ` onto the range of `w`, with the
/// [`pseudoinverse`] cutoff.
fn range_projector(w: &Mat) -> Mat {
    let r = w.nrows();
    if w.iter().all(|&v| v == 0.0) {
        return Mat::zeros(r, r);
    }
    let d = svd(w);
    let cut = svd_cutoff(w, d.s[0]);
    let keep = d.s.iter().take_while(|&&s| s > cut).count();
    let u = d.u.columns(0, keep);
    symmetrize(&(u * u.transpose()))
}

/// `Π = W(WᵀW)†Wᵀ` for `W = B^{-1/2}Mᵀ`. Working with `W` instead of the Gram
/// matrix `M B^{-1} Mᵀ` avoids squaring the condition number of `M`.
fn weighted_range_projector(m: &Mat, b: &Weight) -> Mat {
    if b.is_identity() {
        range_projector(&m.transpose())
    } else {
        range_projector(&(b.inv_half() * m.transpose()))
    }
}

/// `Z_M = Mᵀ(M B^{-1} Mᵀ)† M`, computed as `B^{1/2} Π B^{1/2}`.
pub fn z_matrix(m: &Mat, b: &Weight) -> Mat {
    let pi = weighted_range_projector(m, b);
    if b.is_identity() {
        pi
    } else {
        symmetrize(&(b.half() * pi * b.half()))
    }
}

/// B-orthogonal projections `(P, Q)` onto `Range(B^{-1}Mᵀ)` and `Null(M)`.
pub fn b_projection_pair(m: &Mat, b: &Weight) -> Result<(Mat, Mat)> {
    if m.ncols() != b.dim() {
        return Err(dims("b_projection_pair", b.dim(), m.ncols()));
    }
    let pi = weighted_range_projector(m, b);
    let p = if b.is_identity() {
        pi
    } else {
        b.inv_half() * pi * b.half()
    };
    let q = Mat::identity(b.dim(), b.dim()) - &p;
    Ok((p, q))
}

/// `√(xᵀBx)` for a vector `x`.
pub fn weighted_norm(x: &Mat, b: &Weight) -> Result<f64> {
    if x.ncols() != 1 || x.nrows() != b.dim() {
        return Err(dims(
            "weighted_norm",
            format!("{}x1", b.dim()),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    Ok((x.transpose() * b.apply(x))[(0, 0)].max(0.0).sqrt())
}

/// `‖B^{1/2} X B^{1/2}‖_F`.
pub fn weighted_frob(x: &Mat, b: &Weight) -> Result<f64> {
    let n = b.dim();
    if x.shape() != (n, n) {
        return Err(dims(
            "weighted_frob",
            format!("{n}x{n}"),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    if b.is_identity() {
        return Ok(x.norm());
    }
    Ok((b.half() * x * b.half()).norm())
}

/// Gaussian matrix with i.i.d. `N(0, cov)` columns (standard normal entries if
/// `cov` is `None`).
pub fn gaussian_mat(
    rng: &mut SeededRng,
    rows: usize,
    cols: usize,
    cov: Option<&Mat>,
) -> Result<Mat> {
    let z = Mat::from_fn(rows, cols, |_, _| rng.normal());
    let Some(cov) = cov else { return Ok(z) };
    if cov.shape() != (rows, rows) {
        return Err(dims(
            "gaussian_mat covariance",
            format!("{rows}x{rows}"),
            format!("{}x{}", cov.nrows(), cov.ncols()),
        ));
    }
    let root = covariance_root(cov)?;
    Ok(root * z)
}

/// Symmetric square root of a covariance matrix, validated.
pub fn covariance_root(cov: &Mat) -> Result<Mat> {
    let scale = max_abs(cov);
    if !is_symmetric(cov, 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::BadCovariance("not symmetric".into()));
    }
    sym_sqrt(cov).map_err(|e| Error::BadCovariance(e.to_string()))
}

/// Solve `G λ = r` for a symmetric positive definite `G` by Cholesky. Returns
/// `None` when `G` is numerically singular.
pub fn spd_solve(g: &Mat, rhs: &Mat) -> Option<Mat> {
    let chol = Cholesky::new(symmetrize(g))?;
    let dmax = g.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let l = chol.l_dirty();
    let floor = 1e-13 * dmax;
    if (0..g.nrows()).any(|i| l[(i, i)] * l[(i, i)] <= floor) {
        return None;
    }
    Some(chol.solve(rhs))
}

pub fn spd_inverse(g: &Mat) -> Option<Mat> {
    spd_solve(g, &Mat::identity(g.nrows(), g.nrows()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(m: &Mat) -> f64 {
    sym_eigenvalues(m)[0]
}

/// Smallest eigenvalue exceeding `n·ε·λmax` (zero if none does).
pub fn lambda_min_positive(m: &Mat) -> f64 {
    let vals = sym_eigenvalues(m);
    let lmax = vals[vals.len() - 1];
    let cut = m.nrows() as f64 * f64::EPSILON * lmax.abs();
    vals.into_iter().find(|&l| l > cut).unwrap_or(0.0)
}

/// Unit coordinate vector `e_i` of length `n`.
pub fn unit(n: usize, i: usize) -> Mat {
    let mut e = Mat::zeros(n, 1);
    e[(i, 0)] = 1.0;
    e
}

/// Column submatrix `I_{:,cols}` of the `n×n` identity.
pub fn identity_columns(n: usize, cols: &[usize]) -> Mat {
    let mut s = Mat::zeros(n, cols.len());
    for (k, &c) in cols.iter().enumerate() {
        s[(c, k)] = 1.0;
    }
    s
}

pub fn trace(m: &Mat) -> f64 {
    m.trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rand_mat(rng: &mut SeededRng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.normal())
    }

    fn assert_penrose(m: &Mat, p: &Mat, tol: f64) {
        let s = m.amax().max(1.0);
        assert!((m * p * m - m).amax() <= tol * s);
        assert!((p * m * p - p).amax() <= tol * p.amax().max(1.0));
        let (mp, pm) = (m * p, p * m);
        assert!((&mp - mp.transpose()).amax() <= tol);
        assert!((&pm - pm.transpose()).amax() <= tol);
    }

    #[test]
    fn eigen_svd_fallback_reconstructs() {
        let mut rng = SeededRng::new(31);
        for _ in 0..200 {
            let (r, c) = (1 + rng.index(9), 1 + rng.index(9));
            let k = 1 + rng.index(r.min(c));
            let m = rand_mat(&mut rng, r, k) * rand_mat(&mut rng, k, c);
            let d = svd_by_eigen(&m);
            let recon =
                &d.u * Mat::from_diagonal(&nalgebra::DVector::from_vec(d.s.clone())) * &d.vt;
            assert!((recon - &m).amax() <= 1e-10 * m.amax().max(1.0));
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn pinv_penrose_on_low_rank_grams() {
        // Rank-deficient Gram matrices are where the bidiagonal SVD misbehaves.
        let mut rng = SeededRng::new(32);
        for _ in 0..3000 {
            let (r, c) = (1 + rng.index(10), 1 + rng.index(10));
            let k = 1 + rng.index(r.min(c));
            let m = rand_mat(&mut rng, r, k) * rand_mat(&mut rng, k, c);
            let g = symmetrize(&(&m * m.transpose()));
            for x in [&m, &g] {
                let p = pseudoinverse(x);
                assert_penrose(x, &p, 1e-8);
                assert_eq!(rank(x), k);
            }
        }
    }

    #[test]
    fn pinv_trivial_cases() {
        assert_eq!(pseudoinverse(&Mat::identity(3, 3)), Mat::identity(3, 3));
        assert_relative_eq!(
            pseudoinverse(&Mat::from_element(1, 1, 2.0))[(0, 0)],
            0.5,
            epsilon = 1e-15
        );
        let p = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(pseudoinverse(&p), p, epsilon = 1e-15);
        assert_eq!(pseudoinverse(&Mat::zeros(2, 3)), Mat::zeros(3, 2));
    }

    #[test]
    fn pinv_tall_rank_two() {
        let mut rng = SeededRng::new(3);
        let m = rand_mat(&mut rng, 4, 2);
        let p = pseudoinverse(&m);
        assert!((&m * &p * &m - &m).norm() <= 1e-8 * m.norm());
        // Full column rank: M†M = I.
        assert_relative_eq!(&p * &m, Mat::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn least_norm_examples() {
        let x = least_norm_solve(
            &Mat::identity(2, 2),
            &Mat::from_column_slice(2, 1, &[1.0, 2.0]),
        )
        .unwrap();
        assert_relative_eq!(
            x,
            Mat::from_column_slice(2, 1, &[1.0, 2.0]),
            epsilon = 1e-15
        );
        let x = least_norm_solve(
            &Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            &Mat::from_element(1, 1, 2.0),
        )
        .unwrap();
        assert_relative_eq!(
            x,
            Mat::from_column_slice(2, 1, &[1.0, 1.0]),
            epsilon = 1e-14
        );
        let m = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let x = least_norm_solve(&m, &Mat::from_column_slice(2, 1, &[3.0, 0.0])).unwrap();
        assert_relative_eq!(
            x,
            Mat::from_column_slice(2, 1, &[3.0, 0.0]),
            epsilon = 1e-15
        );
        let err = least_norm_solve(&m, &Mat::from_column_slice(2, 1, &[3.0, 1.0]));
        assert!(matches!(err, Err(Error::InconsistentSystem(_))));
    }

    #[test]
    fn projection_examples() {
        let (p, q) = b_projection_pair(&Mat::identity(3, 3), &Weight::identity(3)).unwrap();
        assert_relative_eq!(p, Mat::identity(3, 3), epsilon = 1e-14);
        assert_relative_eq!(q, Mat::zeros(3, 3), epsilon = 1e-14);
        let e1t = unit(4, 0).transpose();
        let (p, _) = b_projection_pair(&e1t, &Weight::identity(4)).unwrap();
        assert_relative_eq!(p, unit(4, 0) * unit(4, 0).transpose(), epsilon = 1e-14);
        assert!(b_projection_pair(&e1t, &Weight::identity(3)).is_err());
    }

    #[test]
    fn projection_diag_weight() {
        let mut rng = SeededRng::new(11);
        let m = rand_mat(&mut rng, 2, 4);
        let b = Weight::new(Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 2.0, 3.0, 4.0,
        ])))
        .unwrap();
        let (p, _) = b_projection_pair(&m, &b).unwrap();
        assert!((&p * &p - &p).norm() < 1e-10);
        assert_relative_eq!(p.trace(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn projection_of_ill_conditioned_full_rank_is_identity() {
        // cond(M) = 1e6, so a Gram-matrix pseudoinverse would lose ~12 digits.
        let mut rng = SeededRng::new(3);
        let (q1, _) = rand_mat(&mut rng, 5, 5).qr().unpack();
        let (q2, _) = rand_mat(&mut rng, 5, 5).qr().unpack();
        let s = nalgebra::DVector::from_vec(vec![1.0, 1e-1, 1e-3, 1e-5, 1e-6]);
        let m = q1 * Mat::from_diagonal(&s) * q2.transpose();
        let (p, _) = b_projection_pair(&m, &Weight::identity(5)).unwrap();
        assert_relative_eq!(p, Mat::identity(5, 5), epsilon = 1e-12);
        let z = z_matrix(&m, &Weight::identity(5));
        assert_relative_eq!(z, Mat::identity(5, 5), epsilon = 1e-12);
    }

    #[test]
    fn weighted_norm_examples() {
        assert_relative_eq!(
            weighted_norm(&unit(3, 0), &Weight::identity(3)).unwrap(),
            1.0
        );
        let b = Weight::new(Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_relative_eq!(
            weighted_norm(&Mat::from_element(2, 1, 1.0), &b).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        let b = Weight::new(Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0])).unwrap();
        assert_relative_eq!(
            weighted_frob(&Mat::identity(2, 2), &b).unwrap(),
            13f64.sqrt(),
            epsilon = 1e-14
        );
        assert!(weighted_norm(&unit(2, 0), &Weight::identity(3)).is_err());
    }

    #[test]
    fn weight_rejects_bad_matrices() {
        let asym = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert_eq!(Weight::new(asym), Err(Error::NotSymmetric));
        let singular = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(Weight::new(singular), Err(Error::NotSpd(_))));
    }

    #[test]
    fn weight_factors_consistent() {
        let mut rng = SeededRng::new(5);
        let g = rand_mat(&mut rng, 5, 5);
        let w = Weight::new(g.transpose() * &g + Mat::identity(5, 5)).unwrap();
        let id = Mat::identity(5, 5);
        assert!((w.half() * w.inv_half() - &id).norm() < 1e-10);
        assert!((w.half() * w.half() - w.b()).norm() < 1e-10 * w.b().norm());
        assert!((w.inv() * w.b() - &id).norm() < 1e-10);
    }

    #[test]
    fn gaussian_determinism_and_degenerate_cov() {
        let a = gaussian_mat(&mut SeededRng::new(7), 3, 1, None).unwrap();
        let b = gaussian_mat(&mut SeededRng::new(7), 3, 1, None).unwrap();
        assert_eq!(a, b);
        let cov = Mat::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let z = gaussian_mat(&mut SeededRng::new(1), 2, 50, Some(&cov)).unwrap();
        assert!(z.row(1).iter().all(|&v| v == 0.0));
        let bad = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            gaussian_mat(&mut SeededRng::new(1), 2, 1, Some(&bad)),
            Err(Error::BadCovariance(_))
        ));
    }

    #[test]
    fn gaussian_identity_cov_monte_carlo() {
        let n = 100_000;
        let z = gaussian_mat(&mut SeededRng::new(42), 3, n, Some(&Mat::identity(3, 3))).unwrap();
        let cov = &z * z.transpose() / n as f64;
        assert!((cov - Mat::identity(3, 3)).amax() < 0.02);
    }

    #[test]
    fn positive_lambda_min_skips_kernel() {
        let m = Mat::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(lambda_min_positive(&m), 2.0, epsilon = 1e-12);
        assert!(lambda_min(&m).abs() < 1e-12);
    }

    #[test]
    fn spd_solve_detects_singular() {
        let s = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(spd_solve(&s, &Mat::identity(2, 2)).is_none());
        let g = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let x = spd_solve(&g, &Mat::from_column_slice(2, 1, &[3.0, 3.0])).unwrap();
        assert_relative_eq!(
            x,
            Mat::from_column_slice(2, 1, &[1.0, 1.0]),
            epsilon = 1e-14
        );
    }
}
