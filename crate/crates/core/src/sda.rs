//! Stochastic dual ascent (SDA) for the `B`-norm projection of `c` onto
//! `{x : Ax = b}`.
//!
//! The dual iterates `y` perform randomized ascent on
//! `D(y) = (b − Ac)ᵀy − ½‖Aᵀy‖²_{B^{-1}}`; their primal images
//! `x(y) = c + B^{-1}Aᵀy` are exactly the sketch-and-project iterates.

use crate::error::{dims, Error, Result};
use crate::linalg::{
    least_norm_solve, pseudoinverse, rank, sym_eigenvalues, symmetrize, weighted_norm, z_matrix,
    Mat, SeededRng, Weight,
};
use crate::linsolve::{step_flops, SolveProblem};
use crate::report::{ConvergenceReport, Recorder, Status};
use crate::sampling::{is_complete_discrete, rate_certificate, RateKind, Sampling};

/// Iterations between duality-gap evaluations.
pub const GAP_EVERY: usize = 10;

#[derive(Debug, Clone)]
pub struct ProjectionProblem {
    pub a: Mat,
    pub rhs: Mat,
    pub b: Weight,
    pub c: Mat,
    pub sampling: Sampling,
    complete: bool,
}

impl ProjectionProblem {
    pub fn new(a: Mat, rhs: Mat, b: Weight, c: Mat, sampling: Sampling) -> Result<Self> {
        let (m, n) = a.shape();
        if rhs.shape() != (m, 1) || c.shape() != (n, 1) || b.dim() != n {
            return Err(dims(
                "projection problem",
                format!("rhs {m}x1, c {n}x1, B {n}x{n}"),
                format!(
                    "rhs {}x{}, c {}x{}, B {}",
                    rhs.nrows(),
                    rhs.ncols(),
                    c.nrows(),
                    c.ncols(),
                    b.dim()
                ),
            ));
        }
        if let Some(r) = sampling.rows() {
            if r != m {
                return Err(dims("sketch rows", m, r));
            }
        }
        least_norm_solve(&a, &rhs)?;
        let complete = sampling.is_discrete() && is_complete_discrete(&sampling, &a)?;
        Ok(Self {
            a,
            rhs,
            b,
            c,
            sampling,
            complete,
        })
    }

    /// The equivalent primal sketch-and-project problem.
    pub fn as_solve_problem(&self, x0: Option<Mat>) -> Result<SolveProblem> {
        SolveProblem::new(
            self.a.clone(),
            self.rhs.clone(),
            self.b.clone(),
            self.sampling.clone(),
            x0.or(Some(self.c.clone())),
        )
    }

    /// `c + B^{-1}Aᵀy`.
    pub fn primal_image(&self, y: &Mat) -> Mat {
        &self.c + self.b.apply_inv(&(self.a.transpose() * y))
    }

    /// Least-norm dual optimum `(AB^{-1}Aᵀ)†(b − Ac)`.
    pub fn dual_optimum(&self) -> Result<Mat> {
        least_norm_solve(&self.gram(), &(&self.rhs - &self.a * &self.c))
    }

    /// Primal optimum `x* = x(y*)`.
    pub fn primal_optimum(&self) -> Result<Mat> {
        Ok(self.primal_image(&self.dual_optimum()?))
    }

    fn gram(&self) -> Mat {
        symmetrize(&(&self.a * self.b.apply_inv(&self.a.transpose())))
    }
}

/// Dual iterate together with its primal image. `shift` is zero for the
/// canonical dual process; it carries the component `x0 − c − B^{-1}Aᵀy0`
/// when the primal process is started from an arbitrary `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub y: Mat,
    pub primal_image: Mat,
    pub shift: Mat,
}

impl DualState {
    pub fn new(p: &ProjectionProblem, y: Mat) -> Result<Self> {
        if y.shape() != (p.a.nrows(), 1) {
            return Err(dims(
                "dual iterate",
                format!("{}x1", p.a.nrows()),
                format!("{}x{}", y.nrows(), y.ncols()),
            ));
        }
        let primal_image = p.primal_image(&y);
        Ok(Self {
            y,
            primal_image,
            shift: Mat::zeros(p.a.ncols(), 1),
        })
    }

    /// Start the primal process at an arbitrary `x0` with `y = 0`.
    pub fn from_primal(p: &ProjectionProblem, x0: Mat) -> Result<Self> {
        if x0.shape() != (p.a.ncols(), 1) {
            return Err(dims(
                "primal start",
                format!("{}x1", p.a.ncols()),
                format!("{}x{}", x0.nrows(), x0.ncols()),
            ));
        }
        let shift = &x0 - &p.c;
        Ok(Self {
            y: Mat::zeros(p.a.nrows(), 1),
            primal_image: x0,
            shift,
        })
    }

    /// Distance between the stored primal image and the one recomputed from `y`.
    pub fn consistency_error(&self, p: &ProjectionProblem) -> f64 {
        (p.primal_image(&self.y) + &self.shift - &self.primal_image).norm()
    }
}

/// One SDA step with realised sketch `S`:
/// `y' = y + S(SᵀAB^{-1}AᵀS)†Sᵀ(b − A x(y))`.
pub fn sda_step(p: &ProjectionProblem, st: &DualState, s: &Mat) -> Result<DualState> {
    let (m, n) = p.a.shape();
    if s.nrows() != m || st.y.nrows() != m || st.primal_image.nrows() != n {
        return Err(dims("sda_step", m, s.nrows()));
    }
    let x = &st.primal_image;
    let ats = p.a.transpose() * s;
    let w = p.b.apply_inv(&ats);
    let gram = ats.transpose() * &w;
    let r = s.transpose() * (&p.a * x - &p.rhs);
    // Same arithmetic as the primal sketch-and-project step.
    let lam = crate::linsolve::solve_sketched(&gram, &r, p.complete);
    Ok(DualState {
        y: &st.y - s * &lam,
        primal_image: x - w * lam,
        shift: st.shift.clone(),
    })
}

/// `D(y) = (b − Ac)ᵀy − ½‖Aᵀy‖²_{B^{-1}}`.
pub fn dual_value(p: &ProjectionProblem, y: &Mat) -> f64 {
    let aty = p.a.transpose() * y;
    let lin = ((&p.rhs - &p.a * &p.c).transpose() * y)[(0, 0)];
    lin - 0.5 * (aty.transpose() * p.b.apply_inv(&aty))[(0, 0)]
}

/// `P(x) = ½‖x − c‖²_B`.
pub fn primal_value(p: &ProjectionProblem, x: &Mat) -> f64 {
    let d = x - &p.c;
    0.5 * (d.transpose() * p.b.apply(&d))[(0, 0)]
}

/// Closed-form gap `−∇D(y)ᵀy = (AB^{-1}Aᵀy + Ac − b)ᵀy`.
pub fn duality_gap(p: &ProjectionProblem, st: &DualState) -> f64 {
    let grad = &p.rhs - &p.a * &p.c - &p.a * p.b.apply_inv(&(p.a.transpose() * &st.y));
    -(grad.transpose() * &st.y)[(0, 0)]
}

/// Gap evaluated as `P(x(y)) − D(y)`.
pub fn duality_gap_direct(p: &ProjectionProblem, st: &DualState) -> f64 {
    primal_value(p, &p.primal_image(&st.y)) - dual_value(p, &st.y)
}

/// Both sides of `D(y*) − D(y) = ½‖x(y*) − x(y)‖²_B`.
pub fn suboptimality_identity_check(p: &ProjectionProblem, y: &Mat) -> Result<(f64, f64)> {
    let ys = p.dual_optimum()?;
    let lhs = dual_value(p, &ys) - dual_value(p, y);
    let d = p.primal_image(&ys) - p.primal_image(y);
    let rhs = 0.5 * (d.transpose() * p.b.apply(&d))[(0, 0)];
    Ok((lhs, rhs))
}

/// `H = E[S(SᵀAB^{-1}AᵀS)†Sᵀ]` is nonsingular iff `[S_1S_1ᵀA, …, S_rS_rᵀA]`
/// has full row rank.
pub fn check_h_nonsingular(s: &Sampling, a: &Mat, _b: &Weight) -> Result<bool> {
    let outs = s.outcomes()?;
    let (m, n) = a.shape();
    let mut cat = Mat::zeros(m, n * outs.len());
    for (k, (si, _)) in outs.iter().enumerate() {
        if si.nrows() != m {
            return Err(dims("check_h_nonsingular", m, si.nrows()));
        }
        cat.columns_mut(k * n, n)
            .copy_from(&(si * (si.transpose() * a)));
    }
    Ok(rank(&cat) == m)
}

/// `B`-orthogonal projection `(I − B^{-1}Z_A)v` of `v` onto `Null(A)`.
pub fn project_nullspace(a: &Mat, b: &Weight, v: &Mat) -> Result<Mat> {
    if v.shape() != (a.ncols(), 1) || b.dim() != a.ncols() {
        return Err(dims(
            "project_nullspace",
            format!("{}x1", a.ncols()),
            format!("{}x{}", v.nrows(), v.ncols()),
        ));
    }
    Ok(v - b.apply_inv(&(z_matrix(a, b) * v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdaTrack {
    DualSubopt,
    PrimalSubopt,
    Gap,
    /// Residual bound `ρ^{k/2}‖A‖_B‖x⁰ − x* − t‖_B + ‖At‖_B` (square systems only).
    Residual,
}

/// Run SDA from `start` (default `y = 0`) until the relative residual drops
/// below `tol`. Error is measured against `x* + t`.
pub fn sda_solve(
    p: &ProjectionProblem,
    rng: &mut SeededRng,
    tol: f64,
    max_iters: usize,
    track: &[SdaTrack],
    start: Option<DualState>,
) -> Result<(DualState, ConvergenceReport)> {
    if max_iters == 0 {
        return Err(Error::BadParams("max_iters must be at least 1".into()));
    }
    let (m, n) = p.a.shape();
    let mut st = match start {
        Some(s) => s,
        None => DualState::new(p, Mat::zeros(m, 1))?,
    };
    let x_star = p.primal_optimum()?;
    let t = project_nullspace(
        &p.a,
        &p.b,
        &(&st.primal_image - &p.c - p.b.apply_inv(&(p.a.transpose() * &st.y))),
    )?;
    let target = &x_star + &t;
    let ys = p.dual_optimum()?;
    let d_opt = dual_value(p, &ys);
    let p_opt = primal_value(p, &x_star);

    let residual_bound =
        if track.contains(&SdaTrack::Residual) && m == n && p.sampling.is_discrete() {
            let rho = rate_certificate(&p.sampling, &p.a, &p.b, RateKind::Sda)?.rho;
            let op = p.b.half() * &p.a * p.b.inv_half();
            let a_norm = sym_eigenvalues(&(op.transpose() * &op))
                .last()
                .copied()
                .unwrap_or(0.0)
                .max(0.0)
                .sqrt();
            let e0 = weighted_norm(&(&st.primal_image - &target), &p.b)?;
            let at = weighted_norm(&(&p.a * &t), &p.b)?;
            Some((rho, a_norm * e0, at))
        } else {
            None
        };

    let scale = match p.rhs.norm() {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let weighted = !p.b.is_identity();
    let mut rec = Recorder::new(10 * m);
    let record = |rec: &mut Recorder, k: usize, st: &DualState| -> f64 {
        let res = (&p.a * &st.primal_image - &p.rhs).norm();
        rec.push(
            k,
            res,
            weighted_norm(&(&st.primal_image - &target), &p.b).ok(),
        );
        for tr in track {
            match tr {
                SdaTrack::DualSubopt => rec.track("dual_subopt", k, d_opt - dual_value(p, &st.y)),
                SdaTrack::PrimalSubopt => rec.track(
                    "primal_subopt",
                    k,
                    primal_value(p, &st.primal_image) - p_opt,
                ),
                SdaTrack::Gap if k % GAP_EVERY == 0 => rec.track("gap", k, duality_gap(p, st)),
                SdaTrack::Residual => {
                    if let Some((rho, c0, c1)) = residual_bound {
                        rec.track("residual_bound", k, rho.powf(k as f64 / 2.0) * c0 + c1);
                    }
                }
                _ => {}
            }
        }
        res
    };

    let res0 = record(&mut rec, 0, &st);
    if res0 / scale <= tol {
        return Ok((st, rec.finish(Status::Converged)));
    }
    for k in 1..=max_iters {
        let s = p.sampling.sample(rng, None)?;
        st = sda_step(p, &st, &s).map_err(|e| Error::AtIteration {
            iter: k,
            source: Box::new(e),
        })?;
        rec.add_flops(step_flops(m, n, s.ncols(), weighted));
        let res = record(&mut rec, k, &st);
        if res / scale <= tol {
            return Ok((st, rec.finish(Status::Converged)));
        }
        if rec.stalled() {
            return Ok((st, rec.finish(Status::Stalled)));
        }
    }
    Ok((st, rec.finish(Status::MaxIters)))
}

/// Dense pseudoinverse of the dual Hessian `AB^{-1}Aᵀ` (test oracle helper).
pub fn dual_hessian_pinv(p: &ProjectionProblem) -> Mat {
    pseudoinverse(&p.gram())
}
