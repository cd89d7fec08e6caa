//! Sketch-and-project iteration for consistent linear systems `Ax = b`.
//!
//! Every method is the same update: project the current iterate, in the
//! `B`-norm, onto the solution set of a random sketch `SᵀAx = Sᵀb`. The named
//! constructors of [`make_method`] pick `(B, S)` pairs that reproduce the
//! classical algorithms (randomized Kaczmarz, coordinate descent, Gaussian
//! pursuit, ...) and tag the problem so that [`step_sketch`] can run the cheap
//! closed form of each one. The closed forms agree with [`step`] to rounding.

use crate::error::{dims, Error, Result};
use crate::linalg::{
    least_norm_solve, pseudoinverse, rank, spd_solve, symmetrize, weighted_norm, Mat, SeededRng,
    Weight,
};
use crate::report::{ConvergenceReport, Recorder, Status};
use crate::sampling::{
    contiguous_partition, default_block_size, is_complete_discrete, Sampling, Sketch,
};

/// Named specialisations with a dedicated closed-form step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// `B = I`, `S = e_i`.
    Rk,
    /// `B = A` (SPD), `S = e_i`.
    CdPd,
    /// `B = AᵀA`, `S = A e_i`.
    CdLs,
    /// `B = I`, `S = I_{:C}`.
    BlockRk,
    /// `B = A` (SPD), `S = I_{:C}`.
    RandomizedNewton,
    /// `B = I`, `S ~ N(0, I_m)`.
    GaussianKaczmarz,
    /// `B = AᵀA`, `S = Aη`, `η ~ N(0, I_n)`.
    GaussLs,
    /// `B = A` (SPD), `S ~ N(0, I_n)`.
    GaussPd,
    /// `B = A` (SPD), `S` an `n×q` Gaussian matrix.
    BlockGaussPd,
    Generic,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "rk" => Method::Rk,
            "cd_pd" | "cdpd" => Method::CdPd,
            "cd_ls" | "cdls" => Method::CdLs,
            "block_rk" | "blockrk" => Method::BlockRk,
            "randomized_newton" | "newton" | "block_cd_pd" => Method::RandomizedNewton,
            "gaussian_kaczmarz" | "gk" => Method::GaussianKaczmarz,
            "gauss_ls" | "gaussls" => Method::GaussLs,
            "gauss_pd" | "gausspd" => Method::GaussPd,
            "block_gauss_pd" | "blockgausspd" => Method::BlockGaussPd,
            "generic" => Method::Generic,
            other => return Err(Error::BadParams(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Probabilities {
    #[default]
    Convenient,
    Uniform,
}

#[derive(Debug, Clone, Default)]
pub struct MethodOptions {
    pub block_size: Option<usize>,
    pub probabilities: Probabilities,
    pub x0: Option<Mat>,
}

#[derive(Debug, Clone)]
pub struct SolveProblem {
    pub a: Mat,
    pub rhs: Mat,
    pub b: Weight,
    pub sampling: Sampling,
    pub x0: Mat,
    /// Target used for the error column. Defaults to the `B`-projection of
    /// `x0` onto the solution set, which is where the iterates converge.
    pub known_solution: Option<Mat>,
    pub method: Method,
    complete: bool,
}

impl SolveProblem {
    pub fn new(a: Mat, rhs: Mat, b: Weight, sampling: Sampling, x0: Option<Mat>) -> Result<Self> {
        let (m, n) = a.shape();
        if rhs.shape() != (m, 1) {
            return Err(dims(
                "rhs",
                format!("{m}x1"),
                format!("{}x{}", rhs.nrows(), rhs.ncols()),
            ));
        }
        if b.dim() != n {
            return Err(dims("weight", n, b.dim()));
        }
        if let Some(r) = sampling.rows() {
            if r != m {
                return Err(dims("sketch rows", m, r));
            }
        }
        let x0 = x0.unwrap_or_else(|| Mat::zeros(n, 1));
        if x0.shape() != (n, 1) {
            return Err(dims(
                "x0",
                format!("{n}x1"),
                format!("{}x{}", x0.nrows(), x0.ncols()),
            ));
        }
        let particular = least_norm_solve(&a, &rhs)?;
        let complete = sampling.is_discrete() && is_complete_discrete(&sampling, &a)?;
        let target = if rank(&a) == n {
            particular
        } else {
            limit_point(&a, &rhs, &b, &x0)
        };
        Ok(Self {
            a,
            rhs,
            b,
            sampling,
            x0,
            known_solution: Some(target),
            method: Method::Generic,
            complete,
        })
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_known_solution(mut self, x: Option<Mat>) -> Self {
        self.known_solution = x;
        self
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }
}

/// `x0 − B^{-1}Aᵀ(AB^{-1}Aᵀ)†(Ax0 − b)`: the `B`-projection of `x0` onto
/// `{x : Ax = b}`, written as `x* + t` with `t` the null-space component.
fn limit_point(a: &Mat, rhs: &Mat, b: &Weight, x0: &Mat) -> Mat {
    let binv_at = b.apply_inv(&a.transpose());
    let x_star = &binv_at * pseudoinverse(&symmetrize(&(a * &binv_at))) * rhs;
    let t = crate::sda::project_nullspace(a, b, x0).expect("dimensions checked by caller");
    x_star + t
}

pub(crate) fn solve_sketched(gram: &Mat, r: &Mat, prefer_inverse: bool) -> Mat {
    if prefer_inverse {
        if let Some(x) = spd_solve(gram, r) {
            return x;
        }
    }
    pseudoinverse(&symmetrize(gram)) * r
}

/// Generic update `x − B^{-1}AᵀS(SᵀAB^{-1}AᵀS)†Sᵀ(Ax − b)`.
pub fn step(p: &SolveProblem, x: &Mat, s: &Mat) -> Result<Mat> {
    if s.nrows() != p.a.nrows() {
        return Err(dims("step sketch rows", p.a.nrows(), s.nrows()));
    }
    if x.shape() != (p.a.ncols(), 1) {
        return Err(dims(
            "step iterate",
            format!("{}x1", p.a.ncols()),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    let ats = p.a.transpose() * s;
    let w = p.b.apply_inv(&ats);
    let gram = ats.transpose() * &w;
    let r = s.transpose() * (&p.a * x - &p.rhs);
    Ok(x - w * solve_sketched(&gram, &r, p.complete))
}

/// One update from a compact sketch, using the method's closed form.
pub fn step_sketch(p: &SolveProblem, x: &Mat, sk: &Sketch) -> Result<Mat> {
    let a = &p.a;
    match (p.method, sk) {
        (Method::Rk, Sketch::Coord(i)) => {
            let row = a.rows(*i, 1);
            let nrm = row.norm_squared();
            if nrm == 0.0 {
                return Ok(x.clone());
            }
            let r = (row * x)[(0, 0)] - p.rhs[(*i, 0)];
            Ok(x - row.transpose() * (r / nrm))
        }
        (Method::CdPd, Sketch::Coord(i)) => {
            let r = a.row(*i).dot(&x.column(0).transpose()) - p.rhs[(*i, 0)];
            let mut out = x.clone();
            out[(*i, 0)] -= r / a[(*i, *i)];
            Ok(out)
        }
        (Method::CdLs, Sketch::Coord(i)) => {
            let col = a.column(*i);
            let nrm = col.norm_squared();
            let res = a * x - &p.rhs;
            let mut out = x.clone();
            if nrm > 0.0 {
                out[(*i, 0)] -= col.dot(&res.column(0)) / nrm;
            }
            Ok(out)
        }
        (Method::BlockRk, Sketch::Block(c)) => {
            let rows = a.select_rows(c);
            let r = &rows * x - p.rhs.select_rows(c);
            let gram = &rows * rows.transpose();
            Ok(x - rows.transpose() * solve_sketched(&gram, &r, p.complete))
        }
        (Method::RandomizedNewton, Sketch::Block(c)) => {
            let r = a.select_rows(c) * x - p.rhs.select_rows(c);
            let acc = a.select_rows(c).select_columns(c);
            let lam = solve_sketched(&acc, &r, true);
            let mut out = x.clone();
            for (k, &j) in c.iter().enumerate() {
                out[(j, 0)] -= lam[(k, 0)];
            }
            Ok(out)
        }
        (Method::GaussianKaczmarz, Sketch::Dense(eta)) => {
            let at_eta = a.transpose() * eta;
            let nrm = at_eta.norm_squared();
            if nrm == 0.0 {
                return Ok(x.clone());
            }
            let r = (eta.transpose() * (a * x - &p.rhs))[(0, 0)];
            Ok(x - at_eta * (r / nrm))
        }
        (Method::GaussLs, Sketch::Dense(eta)) => Ok(x - eta * gauss_ls_alpha(a, &p.rhs, x, eta)),
        (Method::GaussPd, Sketch::Dense(eta)) => {
            let a_eta = a * eta;
            let den = (eta.transpose() * &a_eta)[(0, 0)];
            let r = (eta.transpose() * (a * x - &p.rhs))[(0, 0)];
            Ok(x - eta * (r / den))
        }
        (Method::BlockGaussPd, Sketch::Dense(s)) => {
            let sas = s.transpose() * a * s;
            let r = s.transpose() * (a * x - &p.rhs);
            Ok(x - s * solve_sketched(&sas, &r, true))
        }
        _ => {
            let s = p.sampling.materialize(sk, None)?;
            step(p, x, &s)
        }
    }
}

/// Exact line-search step length of Gauss-LS along `η` for `‖Ax − b‖²`.
pub fn gauss_ls_alpha(a: &Mat, rhs: &Mat, x: &Mat, eta: &Mat) -> f64 {
    let a_eta = a * eta;
    let den = a_eta.norm_squared();
    if den == 0.0 {
        return 0.0;
    }
    (a_eta.transpose() * (a * x - rhs))[(0, 0)] / den
}

/// Dense upper-bound flop count of one update with a `q`-column sketch.
pub fn step_flops(m: usize, n: usize, q: usize, weighted: bool) -> f64 {
    let (m, n, q) = (m as f64, n as f64, q as f64);
    m * n * q + if weighted { n * n * q } else { 0.0 } + q * q * q
}

fn sketch_width(sk: &Sketch) -> usize {
    match sk {
        Sketch::Coord(_) => 1,
        Sketch::Block(c) => c.len(),
        Sketch::Dense(m) => m.ncols(),
    }
}

/// Iterate until `‖Ax − b‖/‖b‖ ≤ tol` (absolute residual when `b = 0`),
/// `max_iters` is reached, or progress stalls.
pub fn solve(
    p: &SolveProblem,
    rng: &mut SeededRng,
    tol: f64,
    max_iters: usize,
) -> Result<(Mat, ConvergenceReport)> {
    if max_iters == 0 {
        return Err(Error::BadParams("max_iters must be at least 1".into()));
    }
    let (m, n) = p.a.shape();
    let scale = match p.rhs.norm() {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let error = |x: &Mat| {
        p.known_solution
            .as_ref()
            .and_then(|xs| weighted_norm(&(x - xs), &p.b).ok())
    };
    let mut rec = Recorder::new(10 * m);
    let mut x = p.x0.clone();
    let res0 = (&p.a * &x - &p.rhs).norm();
    rec.push(0, res0, error(&x));
    if res0 / scale <= tol {
        return Ok((x, rec.finish(Status::Converged)));
    }
    let weighted = !p.b.is_identity();
    for k in 1..=max_iters {
        let sk = p.sampling.draw(rng, None)?;
        x = step_sketch(p, &x, &sk).map_err(|e| Error::AtIteration {
            iter: k,
            source: Box::new(e),
        })?;
        rec.add_flops(step_flops(m, n, sketch_width(&sk), weighted));
        let res = (&p.a * &x - &p.rhs).norm();
        rec.push(k, res, error(&x));
        if res / scale <= tol {
            return Ok((x, rec.finish(Status::Converged)));
        }
        if rec.stalled() {
            return Ok((x, rec.finish(Status::Stalled)));
        }
    }
    Ok((x, rec.finish(Status::MaxIters)))
}

fn require_square(a: &Mat) -> Result<()> {
    if !a.is_square() {
        return Err(dims(
            "method requires a square matrix",
            format!("{0}x{0}", a.nrows()),
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    Ok(())
}

fn spd_weight(a: &Mat) -> Result<Weight> {
    require_square(a)?;
    Weight::new(a.clone())
}

fn gram_weight(a: &Mat) -> Result<Weight> {
    if rank(a) < a.ncols() {
        return Err(Error::RankDeficient);
    }
    Weight::new(symmetrize(&(a.transpose() * a)))
}

fn block_probs(weights: Vec<f64>, choice: Probabilities) -> Vec<f64> {
    let r = weights.len();
    match choice {
        Probabilities::Uniform => vec![1.0 / r as f64; r],
        Probabilities::Convenient => {
            let s: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / s).collect()
        }
    }
}

/// Build a named method. Convenient probabilities are the default.
pub fn make_method(name: Method, a: &Mat, rhs: &Mat, opts: &MethodOptions) -> Result<SolveProblem> {
    let (m, n) = a.shape();
    let uniform = opts.probabilities == Probabilities::Uniform;
    let (b, sampling) = match name {
        Method::Rk => {
            let b = Weight::identity(n);
            let s = if uniform {
                Sampling::coordinate_uniform(m)
            } else {
                Sampling::coordinate_convenient(a, &b)?
            };
            (b, s)
        }
        Method::CdPd => {
            let b = spd_weight(a)?;
            let s = if uniform {
                Sampling::coordinate_uniform(n)
            } else {
                Sampling::coordinate_weighted(a.diagonal().as_slice())?
            };
            (b, s)
        }
        Method::CdLs => {
            let b = gram_weight(a)?;
            let inner = if uniform {
                Sampling::coordinate_uniform(n)
            } else {
                Sampling::coordinate_weighted(
                    &(0..n)
                        .map(|j| a.column(j).norm_squared())
                        .collect::<Vec<_>>(),
                )?
            };
            (b, Sampling::transformed(inner, a.clone())?)
        }
        Method::BlockRk => {
            let q = opts.block_size.unwrap_or_else(|| default_block_size(m));
            let blocks = contiguous_partition(m, q)?;
            let w = blocks
                .iter()
                .map(|c| a.select_rows(c).norm_squared())
                .collect();
            let probs = block_probs(w, opts.probabilities);
            (
                Weight::identity(n),
                Sampling::block_partition(m, blocks, &probs)?,
            )
        }
        Method::RandomizedNewton => {
            let b = spd_weight(a)?;
            let q = opts.block_size.unwrap_or_else(|| default_block_size(n));
            let blocks = contiguous_partition(n, q)?;
            let w = blocks
                .iter()
                .map(|c| c.iter().map(|&i| a[(i, i)]).sum())
                .collect();
            let probs = block_probs(w, opts.probabilities);
            (b, Sampling::block_partition(n, blocks, &probs)?)
        }
        Method::GaussianKaczmarz => (Weight::identity(n), Sampling::gaussian_standard(m)),
        Method::GaussLs => (
            gram_weight(a)?,
            Sampling::transformed(Sampling::gaussian_standard(n), a.clone())?,
        ),
        Method::GaussPd => (spd_weight(a)?, Sampling::gaussian_standard(n)),
        Method::BlockGaussPd => {
            let q = opts.block_size.unwrap_or_else(|| default_block_size(n));
            (
                spd_weight(a)?,
                Sampling::GaussianColumns { dim: n, cols: q },
            )
        }
        Method::Generic => {
            return Err(Error::BadParams(
                "generic problems are built with SolveProblem::new".into(),
            ))
        }
    };
    Ok(SolveProblem::new(a.clone(), rhs.clone(), b, sampling, opts.x0.clone())?.with_method(name))
}

/// Iterations sufficient for `ρ^k ≤ ε`: `⌈ln(1/ε)/(1 − ρ)⌉`.
pub fn iteration_complexity(rho: f64, eps: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::RhoOutOfRange(rho));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadParams(format!("eps {eps} outside (0, 1)")));
    }
    let v = (1.0 / eps).ln() / (1.0 - rho);
    // Shave rounding noise so that exact integers are not bumped up by one.
    Ok(((v * (1.0 - 1e-12)).ceil() as usize).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unit;
    use approx::assert_relative_eq;

    fn rand_mat(rng: &mut SeededRng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.normal())
    }

    fn spd(rng: &mut SeededRng, n: usize) -> Mat {
        let g = rand_mat(rng, n, n);
        g.transpose() * g + Mat::identity(n, n)
    }

    #[test]
    fn invertible_sketch_solves_in_one_step() {
        let mut rng = SeededRng::new(1);
        let a = rand_mat(&mut rng, 4, 4);
        let xs = rand_mat(&mut rng, 4, 1);
        let p = SolveProblem::new(
            a.clone(),
            &a * &xs,
            Weight::identity(4),
            Sampling::full(4),
            None,
        )
        .unwrap();
        let x1 = step(&p, &Mat::zeros(4, 1), &rand_mat(&mut rng, 4, 4)).unwrap();
        assert!((x1 - xs).norm() < 1e-10);
    }

    #[test]
    fn solution_is_fixed_point() {
        let mut rng = SeededRng::new(2);
        let a = rand_mat(&mut rng, 5, 3);
        let xs = rand_mat(&mut rng, 3, 1);
        let p = SolveProblem::new(
            a.clone(),
            &a * &xs,
            Weight::identity(3),
            Sampling::coordinate_uniform(5),
            None,
        )
        .unwrap();
        let out = step(&p, &xs, &unit(5, 2)).unwrap();
        assert!((out - &xs).norm() < 1e-14);
    }

    #[test]
    fn rk_hand_projection_2x2() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, -1.0]);
        let rhs = Mat::from_column_slice(2, 1, &[5.0, 1.0]);
        let p = make_method(Method::Rk, &a, &rhs, &MethodOptions::default()).unwrap();
        let x = Mat::from_column_slice(2, 1, &[0.0, 0.0]);
        // Hyperplane x1 + 2 x2 = 5: the nearest point to the origin is (1, 2).
        let out = step_sketch(&p, &x, &Sketch::Coord(0)).unwrap();
        assert_relative_eq!(
            out,
            Mat::from_column_slice(2, 1, &[1.0, 2.0]),
            epsilon = 1e-15
        );
        assert_relative_eq!(out, step(&p, &x, &unit(2, 0)).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn cd_pd_diag_example() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let rhs = Mat::from_column_slice(2, 1, &[1.0, 4.0]);
        let p = make_method(Method::CdPd, &a, &rhs, &MethodOptions::default()).unwrap();
        let x = Mat::from_column_slice(2, 1, &[0.5, 0.5]);
        let out = step_sketch(&p, &x, &Sketch::Coord(1)).unwrap();
        // Residual of row 2 is 2·0.5 − 4 = −3, divided by A_22 = 2.
        assert_relative_eq!(
            out,
            Mat::from_column_slice(2, 1, &[0.5, 2.0]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn closed_forms_match_generic() {
        let mut rng = SeededRng::new(3);
        let tall = rand_mat(&mut rng, 7, 4);
        let sq = spd(&mut rng, 6);
        let cases: Vec<(Method, &Mat)> = vec![
            (Method::Rk, &tall),
            (Method::CdPd, &sq),
            (Method::CdLs, &tall),
            (Method::BlockRk, &tall),
            (Method::RandomizedNewton, &sq),
            (Method::GaussianKaczmarz, &tall),
            (Method::GaussLs, &tall),
            (Method::GaussPd, &sq),
            (Method::BlockGaussPd, &sq),
        ];
        for (method, a) in cases {
            let xs = rand_mat(&mut rng, a.ncols(), 1);
            let opts = MethodOptions {
                block_size: Some(2),
                ..Default::default()
            };
            let p = make_method(method, a, &(a * &xs), &opts).unwrap();
            let x = rand_mat(&mut rng, a.ncols(), 1);
            for _ in 0..5 {
                let sk = p.sampling.draw(&mut rng, None).unwrap();
                let fast = step_sketch(&p, &x, &sk).unwrap();
                let slow = step(&p, &x, &p.sampling.materialize(&sk, None).unwrap()).unwrap();
                assert!(
                    (&fast - &slow).norm() <= 1e-10 * (1.0 + slow.norm()),
                    "{method:?}"
                );
            }
        }
    }

    #[test]
    fn gauss_ls_exact_line_search() {
        let mut rng = SeededRng::new(4);
        let a = rand_mat(&mut rng, 6, 3);
        let rhs = &a * rand_mat(&mut rng, 3, 1);
        let x = rand_mat(&mut rng, 3, 1);
        let eta = rand_mat(&mut rng, 3, 1);
        let alpha = gauss_ls_alpha(&a, &rhs, &x, &eta);
        let xn = &x - &eta * alpha;
        let deriv = ((&a * &eta).transpose() * (&a * xn - &rhs))[(0, 0)];
        assert!(deriv.abs() < 1e-10);
    }

    #[test]
    fn randomized_newton_full_block_is_newton() {
        let mut rng = SeededRng::new(5);
        let a = spd(&mut rng, 5);
        let xs = rand_mat(&mut rng, 5, 1);
        let opts = MethodOptions {
            block_size: Some(5),
            ..Default::default()
        };
        let p = make_method(Method::RandomizedNewton, &a, &(&a * &xs), &opts).unwrap();
        let (x, rep) = solve(&p, &mut rng, 1e-12, 5).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert_eq!(rep.iterations(), 1);
        assert!((x - xs).norm() < 1e-10);
    }

    #[test]
    fn identity_system_converges_by_coordinates() {
        let n = 4;
        let rhs = Mat::from_column_slice(n, 1, &[1.0, -2.0, 3.0, 0.5]);
        let p = SolveProblem::new(
            Mat::identity(n, n),
            rhs.clone(),
            Weight::identity(n),
            Sampling::coordinate_uniform(n),
            None,
        )
        .unwrap()
        .with_method(Method::Rk);
        let (x, rep) = solve(&p, &mut SeededRng::new(6), 1e-14, 1000).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert!((x - rhs).norm() < 1e-14);
        for w in rep.records.windows(2) {
            assert!(w[1].iter > w[0].iter);
        }
    }

    #[test]
    fn full_sampling_converges_at_iteration_one() {
        let mut rng = SeededRng::new(7);
        let a = rand_mat(&mut rng, 3, 3);
        let p = SolveProblem::new(
            a.clone(),
            &a * rand_mat(&mut rng, 3, 1),
            Weight::identity(3),
            Sampling::full(3),
            None,
        )
        .unwrap();
        let (_, rep) = solve(&p, &mut rng, 1e-10, 10).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert_eq!(rep.iterations(), 1);
    }

    #[test]
    fn inconsistent_system_rejected() {
        let a = Mat::from_row_slice(2, 1, &[1.0, 1.0]);
        let rhs = Mat::from_column_slice(2, 1, &[1.0, 2.0]);
        let err = SolveProblem::new(
            a,
            rhs,
            Weight::identity(1),
            Sampling::coordinate_uniform(2),
            None,
        );
        assert!(matches!(err, Err(Error::InconsistentSystem(_))));
    }

    #[test]
    fn cd_pd_requires_spd() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let rhs = Mat::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(
            make_method(Method::CdPd, &a, &rhs, &MethodOptions::default()),
            Err(Error::NotSpd(_))
        ));
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(iteration_complexity(0.0, 0.5).unwrap(), 1);
        for n in [3usize, 10, 37, 300] {
            assert_eq!(
                iteration_complexity(1.0 - 1.0 / n as f64, (-1.0f64).exp()).unwrap(),
                n
            );
        }
        assert_eq!(iteration_complexity(0.5, 0.01).unwrap(), 10);
        assert_eq!(
            iteration_complexity(1.0, 0.1),
            Err(Error::RhoOutOfRange(1.0))
        );
    }

    #[test]
    fn method_names_parse() {
        assert_eq!(Method::parse("rk").unwrap(), Method::Rk);
        assert_eq!(Method::parse("cd-pd").unwrap(), Method::CdPd);
        assert_eq!(Method::parse("cdpd").unwrap(), Method::CdPd);
        assert!(Method::parse("lsqr").is_err());
    }
}
