//! Randomized iterative matrix inversion.
//!
//! Three sketch-and-project variants drive `X` towards `A^{-1}`: the row
//! variant projects onto `{X : SᵀAX = Sᵀ}`, the column variant onto
//! `{X : XAS = S}`, and the symmetric variant onto the row set intersected
//! with symmetric matrices. With particular `(B, S)` choices they reduce to
//! classical quasi-Newton updates, collected here as named closed forms.
//!
//! AdaRBFGS keeps the BFGS iterate factored as `X = LLᵀ` and sketches with
//! columns of `L`. Newton-Schulz and minimal residual are deterministic
//! baselines.

use crate::error::{dims, Error, Result};
use crate::linalg::{
    identity_columns, is_symmetric, max_abs, rank, sym_inv_sqrt, symmetrize, unit, Mat, SeededRng,
    Weight,
};
use crate::linsolve::solve_sketched;
use crate::report::{ConvergenceReport, Recorder, Status};
use crate::sampling::{default_block_size, ColumnPolicy, Sampling, Sketch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    RowSketch,
    ColSketch,
    Symmetric,
}

#[derive(Debug, Clone)]
pub struct InvProblem {
    pub a: Mat,
    pub b: Weight,
    pub sampling: Sampling,
    pub x0: Mat,
    pub variant: Variant,
    x0_given: bool,
}

fn sym_tol(m: &Mat) -> f64 {
    1e-12 * max_abs(m).max(1.0)
}

fn require_square(op: &str, a: &Mat) -> Result<usize> {
    if !a.is_square() {
        return Err(dims(
            op,
            "square matrix",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    Ok(a.nrows())
}

impl InvProblem {
    /// `x0` defaults to the identity.
    pub fn new(
        a: Mat,
        b: Weight,
        sampling: Sampling,
        x0: Option<Mat>,
        variant: Variant,
    ) -> Result<Self> {
        let n = require_square("InvProblem", &a)?;
        if b.dim() != n {
            return Err(dims("InvProblem weight", n, b.dim()));
        }
        if let Some(rows) = sampling.rows() {
            if rows != n {
                return Err(dims("InvProblem sampling rows", n, rows));
            }
        }
        let x0_given = x0.is_some();
        let x0 = x0.unwrap_or_else(|| Mat::identity(n, n));
        if x0.shape() != (n, n) {
            return Err(dims(
                "InvProblem x0",
                format!("{n}x{n}"),
                format!("{}x{}", x0.nrows(), x0.ncols()),
            ));
        }
        if variant == Variant::Symmetric
            && (!is_symmetric(&a, sym_tol(&a)) || !is_symmetric(&x0, sym_tol(&x0)))
        {
            return Err(Error::NotSymmetric);
        }
        Ok(Self {
            a,
            b,
            sampling,
            x0,
            variant,
            x0_given,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

fn check_step(a: &Mat, x: &Mat, s: &Mat) -> Result<usize> {
    let n = require_square("inversion step", a)?;
    if x.shape() != (n, n) {
        return Err(dims(
            "inversion iterate",
            format!("{n}x{n}"),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    if s.nrows() != n {
        return Err(dims("inversion sketch rows", n, s.nrows()));
    }
    Ok(n)
}

/// `X + B^{-1}AᵀS(SᵀAB^{-1}AᵀS)^{-1}Sᵀ(I − AX)` with an explicit `B^{-1}`.
fn row_update(a: &Mat, b_inv: Option<&Mat>, x: &Mat, s: &Mat, force_pinv: bool) -> Result<Mat> {
    let n = check_step(a, x, s)?;
    let ats = a.transpose() * s;
    let w = match b_inv {
        Some(bi) => bi * &ats,
        None => ats.clone(),
    };
    let gram = ats.transpose() * &w;
    let r = s.transpose() * (Mat::identity(n, n) - a * x);
    Ok(x + w * solve_sketched(&gram, &r, !force_pinv))
}

/// `X + (I − XA)S(SᵀAᵀB^{-1}AS)^{-1}SᵀAᵀB^{-1}`.
fn col_update(a: &Mat, b_inv: Option<&Mat>, x: &Mat, s: &Mat) -> Result<Mat> {
    let n = check_step(a, x, s)?;
    let as_ = a * s;
    let w = match b_inv {
        Some(bi) => bi * &as_,
        None => as_.clone(),
    };
    let gram = as_.transpose() * &w;
    let r = w.transpose();
    Ok(x + (Mat::identity(n, n) - x * a) * s * solve_sketched(&gram, &r, true))
}

/// `X − MΘ − (MΘ)ᵀ + Θᵀ(AXA − A)Θ` with `Θ = ΛAB^{-1}`, `M = XA − I`,
/// `Λ = S(SᵀAB^{-1}AS)^{-1}Sᵀ`.
fn sym_update(a: &Mat, b_inv: Option<&Mat>, x: &Mat, s: &Mat) -> Result<Mat> {
    let n = check_step(a, x, s)?;
    let as_ = a * s;
    let w = match b_inv {
        Some(bi) => bi * &as_,
        None => as_.clone(),
    };
    let gram = as_.transpose() * &w;
    // Θ = S G^{-1} (B^{-1}AS)ᵀ
    let theta = s * solve_sketched(&gram, &w.transpose(), true);
    let mt = (x * a - Mat::identity(n, n)) * &theta;
    let mid = a * x * a - a;
    let out = x - &mt - mt.transpose() + theta.transpose() * mid * &theta;
    Ok(symmetrize(&out))
}

fn weight_inv(b: &Weight) -> Option<&Mat> {
    (!b.is_identity()).then(|| b.inv())
}

/// Row-variant update; afterwards `SᵀAX' = Sᵀ`.
pub fn row_step(p: &InvProblem, x: &Mat, s: &Mat) -> Result<Mat> {
    row_update(&p.a, weight_inv(&p.b), x, s, false)
}

/// Column-variant update; afterwards `X'AS = S`.
pub fn col_step(p: &InvProblem, x: &Mat, s: &Mat) -> Result<Mat> {
    col_update(&p.a, weight_inv(&p.b), x, s)
}

/// Symmetric-variant update; the result is symmetric and `SᵀAX' = Sᵀ`.
pub fn sym_step(p: &InvProblem, x: &Mat, s: &Mat) -> Result<Mat> {
    if !is_symmetric(x, sym_tol(x)) || !is_symmetric(&p.a, sym_tol(&p.a)) {
        return Err(Error::NotSymmetric);
    }
    sym_update(&p.a, weight_inv(&p.b), x, s)
}

pub fn variant_step(p: &InvProblem, x: &Mat, s: &Mat) -> Result<Mat> {
    match p.variant {
        Variant::RowSketch => row_step(p, x, s),
        Variant::ColSketch => col_step(p, x, s),
        Variant::Symmetric => sym_step(p, x, s),
    }
}

/// Quasi-Newton updates that are special cases of the three variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedUpdate {
    /// Row variant, `B = I`, `S = e_i`.
    SimultaneousKaczmarz,
    /// Column variant, `B = I`.
    BadBroyden,
    /// Symmetric variant, `B = I`.
    Psb,
    /// Column variant on `A^{-1}` with `S = Ae_i`; the iterate estimates `A`.
    GoodBroyden,
    /// Symmetric variant on `A^{-1}` with `B = A^{-1}`, `S ↦ AS`; the iterate estimates `A`.
    Dfp,
    /// Symmetric variant, `B = A`.
    Bfgs,
    /// Row variant with `B^{-1} = A^{-1} − X`, pseudoinverse always.
    Sr1,
    /// Row variant with `B = AᵀA`, `S = AV`.
    ColumnUpdate,
}

impl NamedUpdate {
    pub const ALL: [NamedUpdate; 8] = [
        NamedUpdate::SimultaneousKaczmarz,
        NamedUpdate::BadBroyden,
        NamedUpdate::Psb,
        NamedUpdate::GoodBroyden,
        NamedUpdate::Dfp,
        NamedUpdate::Bfgs,
        NamedUpdate::Sr1,
        NamedUpdate::ColumnUpdate,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "simultaneous_kaczmarz" | "sk" => NamedUpdate::SimultaneousKaczmarz,
            "bad_broyden" => NamedUpdate::BadBroyden,
            "psb" => NamedUpdate::Psb,
            "good_broyden" => NamedUpdate::GoodBroyden,
            "dfp" => NamedUpdate::Dfp,
            "bfgs" => NamedUpdate::Bfgs,
            "sr1" => NamedUpdate::Sr1,
            "column_update" => NamedUpdate::ColumnUpdate,
            other => return Err(Error::BadParams(format!("unknown update '{other}'"))),
        })
    }
}

fn coord(sk: &Sketch, n: usize) -> Result<usize> {
    match sk {
        Sketch::Coord(i) if *i < n => Ok(*i),
        _ => Err(Error::BadSelection(
            "update needs a single coordinate index".into(),
        )),
    }
}

fn require_symmetric(m: &Mat) -> Result<()> {
    if is_symmetric(m, sym_tol(m)) {
        Ok(())
    } else {
        Err(Error::NotSymmetric)
    }
}

fn require_spd(a: &Mat) -> Result<()> {
    require_symmetric(a)?;
    if a.clone().cholesky().is_none() {
        return Err(Error::NotSpd("Cholesky factorisation failed".into()));
    }
    Ok(())
}

/// `X + A_{i:}ᵀ(e_iᵀ − A_{i:}X)/‖A_{i:}‖²`.
pub fn simultaneous_kaczmarz(a: &Mat, x: &Mat, i: usize) -> Result<Mat> {
    let n = check_step(a, x, &unit(a.nrows(), 0))?;
    if i >= n {
        return Err(Error::BadSelection(format!("row {i}")));
    }
    let row = a.row(i).into_owned();
    let nrm = row.norm_squared();
    if nrm == 0.0 {
        return Err(Error::SingularSketch(i));
    }
    let resid = unit(n, i).transpose() - &row * x;
    Ok(x + row.transpose() * resid / nrm)
}

/// `X + (S − XAS)γᵀ/‖γ‖²` with `γ = AS` for a single column `s`.
pub fn bad_broyden(a: &Mat, x: &Mat, s: &Mat) -> Result<Mat> {
    check_step(a, x, s)?;
    let gamma = a * s;
    let g2 = gamma.norm_squared();
    if g2 == 0.0 || s.ncols() != 1 {
        return Err(Error::RankDeficientSketch);
    }
    Ok(x + (s - x * &gamma) * gamma.transpose() / g2)
}

/// `X − (XAS − S)ΛSᵀA + ASΛ(SᵀAX − Sᵀ)(ASΛSᵀA − I)`, `Λ = (SᵀA²S)^{-1}`.
pub fn psb(a: &Mat, x: &Mat, s: &Mat) -> Result<Mat> {
    let n = check_step(a, x, s)?;
    require_symmetric(a)?;
    require_symmetric(x)?;
    let as_ = a * s;
    let lam = spd_inv(&(as_.transpose() * &as_))?;
    let i = Mat::identity(n, n);
    let out = x - (x * &as_ - s) * &lam * as_.transpose()
        + &as_ * &lam * (as_.transpose() * x - s.transpose()) * (&as_ * &lam * as_.transpose() - i);
    Ok(symmetrize(&out))
}

/// Estimate of `A`: `X + (A − X)e_ie_iᵀ`.
pub fn good_broyden(a: &Mat, x: &Mat, i: usize) -> Result<Mat> {
    let n = check_step(a, x, &unit(a.nrows(), 0))?;
    if i >= n {
        return Err(Error::BadSelection(format!("column {i}")));
    }
    let mut out = x.clone();
    out.set_column(i, &a.column(i));
    Ok(out)
}

/// Inverse of the good-Broyden iterate by Woodbury:
/// `X^{-1} − (X^{-1}A − I)e_ie_iᵀX^{-1}/(e_iᵀX^{-1}Ae_i)`.
pub fn good_broyden_inverse(a: &Mat, x_inv: &Mat, i: usize) -> Result<Mat> {
    let n = check_step(a, x_inv, &unit(a.nrows(), 0))?;
    if i >= n {
        return Err(Error::BadSelection(format!("column {i}")));
    }
    let u = x_inv * a.column(i) - unit(n, i);
    let den = u[(i, 0)] + 1.0;
    if den.abs() <= f64::EPSILON * max_abs(x_inv) * max_abs(a) {
        return Err(Error::SingularSketch(i));
    }
    Ok(x_inv - u * x_inv.row(i) / den)
}

/// Estimate of `A`: `ASΛSᵀA + (I − ASΛSᵀ)X(I − SΛSᵀA)`, `Λ = (SᵀAS)^{-1}`.
pub fn dfp(a: &Mat, x: &Mat, s: &Mat) -> Result<Mat> {
    let n = check_step(a, x, s)?;
    require_spd(a)?;
    let as_ = a * s;
    let lam = spd_inv(&(s.transpose() * &as_))?;
    let p = Mat::identity(n, n) - &as_ * &lam * s.transpose();
    Ok(symmetrize(
        &(&as_ * &lam * as_.transpose() + &p * x * p.transpose()),
    ))
}

/// `SΛSᵀ + (I − SΛSᵀA)X(I − ASΛSᵀ)`, `Λ = (SᵀAS)^{-1}`.
pub fn bfgs(a: &Mat, x: &Mat, s: &Mat) -> Result<Mat> {
    let n = check_step(a, x, s)?;
    require_spd(a)?;
    let lam = spd_inv(&(s.transpose() * a * s))?;
    let p = Mat::identity(n, n) - s * &lam * s.transpose() * a;
    Ok(symmetrize(
        &(s * &lam * s.transpose() + &p * x * p.transpose()),
    ))
}

/// `X + (I − AX)ᵀS(Sᵀ(A − AXA)S)†Sᵀ(I − AX)`.
pub fn sr1(a: &Mat, x: &Mat, s: &Mat) -> Result<Mat> {
    let n = check_step(a, x, s)?;
    require_symmetric(a)?;
    require_symmetric(x)?;
    let r = Mat::identity(n, n) - a * x;
    let mid = s.transpose() * (a - a * x * a) * s;
    let str_ = s.transpose() * &r;
    Ok(symmetrize(
        &(x + str_.transpose() * crate::linalg::pseudoinverse(&symmetrize(&mid)) * &str_),
    ))
}

/// `X + V(VᵀAᵀAV)^{-1}Vᵀ(Aᵀ − AᵀAX)`.
pub fn column_update(a: &Mat, x: &Mat, v: &Mat) -> Result<Mat> {
    check_step(a, x, v)?;
    let av = a * v;
    let gram = av.transpose() * &av;
    let r = av.transpose() - av.transpose() * a * x;
    Ok(x + v * solve_sketched(&gram, &r, true))
}

fn spd_inv(g: &Mat) -> Result<Mat> {
    crate::linalg::spd_inverse(g).ok_or(Error::RankDeficientSketch)
}

/// Apply a named update. Kaczmarz and good Broyden take `Sketch::Coord`;
/// the others accept any sketch, materialised against the identity.
pub fn named_update(kind: NamedUpdate, a: &Mat, x: &Mat, sketch: &Sketch) -> Result<Mat> {
    let n = a.nrows();
    let s = || sketch.to_mat(n);
    match kind {
        NamedUpdate::SimultaneousKaczmarz => simultaneous_kaczmarz(a, x, coord(sketch, n)?),
        NamedUpdate::GoodBroyden => good_broyden(a, x, coord(sketch, n)?),
        NamedUpdate::BadBroyden => bad_broyden(a, x, &s()),
        NamedUpdate::Psb => psb(a, x, &s()),
        NamedUpdate::Dfp => dfp(a, x, &s()),
        NamedUpdate::Bfgs => bfgs(a, x, &s()),
        NamedUpdate::Sr1 => sr1(a, x, &s()),
        NamedUpdate::ColumnUpdate => column_update(a, x, &s()),
    }
}

/// The same update computed through the generic row/column/symmetric step
/// it is derived from. Needs `A^{-1}` for the updates that estimate `A` or
/// whose weight involves the inverse.
pub fn named_update_generic(kind: NamedUpdate, a: &Mat, x: &Mat, sketch: &Sketch) -> Result<Mat> {
    let n = a.nrows();
    let s = sketch.to_mat(n);
    let inverse = || {
        a.clone()
            .try_inverse()
            .ok_or_else(|| Error::NotSpd("matrix is singular".into()))
    };
    match kind {
        NamedUpdate::SimultaneousKaczmarz => {
            row_update(a, None, x, &unit(n, coord(sketch, n)?), false)
        }
        NamedUpdate::BadBroyden => col_update(a, None, x, &s),
        NamedUpdate::Psb => sym_update(a, None, x, &s),
        NamedUpdate::GoodBroyden => {
            let i = coord(sketch, n)?;
            col_update(&inverse()?, None, x, &a.columns(i, 1).into_owned())
        }
        NamedUpdate::Dfp => {
            let ainv = inverse()?;
            sym_update(&ainv, Some(a), x, &(a * s))
        }
        NamedUpdate::Bfgs => sym_update(a, Some(&inverse()?), x, &s),
        NamedUpdate::Sr1 => {
            let b_inv = inverse()? - x;
            row_update(a, Some(&b_inv), x, &s, true).map(|m| symmetrize(&m))
        }
        NamedUpdate::ColumnUpdate => {
            let ata = a.transpose() * a;
            let ata_inv = ata.try_inverse().ok_or(Error::RankDeficient)?;
            row_update(a, Some(&ata_inv), x, &(a * s), false)
        }
    }
}

/// `X = LLᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredIterate {
    pub l: Mat,
}

impl FactoredIterate {
    pub fn identity(n: usize) -> Self {
        Self {
            l: Mat::identity(n, n),
        }
    }

    pub fn x(&self) -> Mat {
        &self.l * self.l.transpose()
    }
}

/// Factored BFGS step `L' = L + SR((S̃ᵀS̃)^{-1/2}S̃ᵀ − RSᵀAL)` with `S = LS̃`
/// and `R = (SᵀAS)^{-1/2}`; `L'L'ᵀ` equals [`bfgs`] applied to `LLᵀ` and `S`.
pub fn adarbfgs_step(a: &Mat, f: &FactoredIterate, s_tilde: &Mat) -> Result<FactoredIterate> {
    let n = check_step(a, &f.l, s_tilde)?;
    if s_tilde.ncols() == 0 || s_tilde.ncols() > n || rank(s_tilde) < s_tilde.ncols() {
        return Err(Error::RankDeficientSketch);
    }
    let s = &f.l * s_tilde;
    let as_ = a * &s;
    let r = sym_inv_sqrt(&(s.transpose() * &as_))?;
    let u =
        sym_inv_sqrt(&(s_tilde.transpose() * s_tilde)).map_err(|_| Error::RankDeficientSketch)?;
    let sal = as_.transpose() * &f.l;
    let bracket = u * s_tilde.transpose() - &r * sal;
    Ok(FactoredIterate {
        l: &f.l + s * r * bracket,
    })
}

/// Probabilities `∝ Tr(S̃_iᵀLᵀALS̃_i)` over column blocks, under which one
/// AdaRBFGS step contracts by `1 − λmin(AX)/Tr(AX)` in expectation.
pub fn adaptive_block_probabilities(
    a: &Mat,
    f: &FactoredIterate,
    blocks: &[Vec<usize>],
) -> Result<Vec<f64>> {
    let al = a * &f.l;
    let diag: Vec<f64> = (0..f.l.ncols())
        .map(|j| f.l.column(j).dot(&al.column(j)))
        .collect();
    let w: Vec<f64> = blocks
        .iter()
        .map(|b| b.iter().map(|&j| diag[j]).sum())
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTrace);
    }
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// `2X − XAX`.
pub fn newton_schulz_step(a: &Mat, x: &Mat) -> Mat {
    x * 2.0 - x * a * x
}

/// `X + αXR` with `R = I − AX` and `α = Tr(RᵀAXR)/Tr((AXR)ᵀAXR)`; unchanged
/// if the denominator is at most `1e-300`.
pub fn mr_step(a: &Mat, x: &Mat) -> Mat {
    let n = a.nrows();
    let r = Mat::identity(n, n) - a * x;
    let xr = x * &r;
    let axr = a * &xr;
    let den = axr.norm_squared();
    if den <= 1e-300 {
        return x.clone();
    }
    let alpha = r.dot(&axr) / den;
    x + xr * alpha
}

/// Largest singular value of `A` by power iteration on `AᵀA`.
pub fn spectral_norm_estimate(a: &Mat, iters: usize, rel_tol: f64) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut v = Mat::from_element(n, 1, 1.0 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..iters {
        let w = a.transpose() * (a * &v);
        let nrm = w.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        v = w / nrm;
        let done = (nrm - est).abs() <= rel_tol * nrm;
        est = nrm;
        if done {
            break;
        }
    }
    est.sqrt()
}

/// `0.99·Aᵀ/‖A‖₂²`, so that `ρ(I − X₀A) < 1`.
pub fn newton_schulz_x0(a: &Mat) -> Mat {
    let s = spectral_norm_estimate(a, 50, 1e-6);
    a.transpose() * (0.99 / (s * s))
}

/// `(Tr A / Tr(AAᵀ))·I`.
pub fn mr_x0(a: &Mat) -> Mat {
    let n = a.nrows();
    Mat::identity(n, n) * (a.trace() / a.norm_squared())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    NewtonSchulz,
    MinimalResidual,
    /// `S̃` Gaussian with `q` columns.
    AdaRbfgsGauss,
    /// `S̃` a uniformly chosen block of `q` contiguous coordinates.
    AdaRbfgsCols,
}

/// Dense flop counts per iteration.
/// Row/column: `3n²q + q³`, symmetric `6n²q + q³`, plus `n²q` when `B ≠ I`;
/// AdaRBFGS `4n²q + q³`; Newton-Schulz `2n³`; minimal residual `3n³`.
fn iteration_flops(
    n: usize,
    q: usize,
    kind: Option<Baseline>,
    variant: Variant,
    weighted: bool,
) -> f64 {
    let (n, q) = (n as f64, q as f64);
    match kind {
        Some(Baseline::NewtonSchulz) => 2.0 * n * n * n,
        Some(Baseline::MinimalResidual) => 3.0 * n * n * n,
        Some(Baseline::AdaRbfgsGauss | Baseline::AdaRbfgsCols) => 4.0 * n * n * q + q * q * q,
        None => {
            let c = if variant == Variant::Symmetric {
                6.0
            } else {
                3.0
            };
            (c + if weighted { 1.0 } else { 0.0 }) * n * n * q + q * q * q
        }
    }
}

fn residual(a: &Mat, x: &Mat) -> f64 {
    let n = a.nrows();
    (Mat::identity(n, n) - a * x).norm()
}

/// Iterate until `‖I − AX‖_F/‖I − AX₀‖_F ≤ tol`. With a baseline the
/// problem's sampling and variant are ignored; AdaRBFGS uses `q = ⌈√n⌉`.
pub fn invert(
    p: &InvProblem,
    rng: &mut SeededRng,
    tol: f64,
    max_iters: usize,
    baseline: Option<Baseline>,
) -> Result<(Mat, ConvergenceReport)> {
    if max_iters == 0 {
        return Err(Error::BadParams("max_iters must be at least 1".into()));
    }
    let n = p.n();
    let q = default_block_size(n);
    let ada = matches!(
        baseline,
        Some(Baseline::AdaRbfgsGauss | Baseline::AdaRbfgsCols)
    );
    if ada {
        require_spd(&p.a)?;
    }
    let x0 = match baseline {
        Some(Baseline::NewtonSchulz) if !p.x0_given => newton_schulz_x0(&p.a),
        Some(Baseline::MinimalResidual) if !p.x0_given => mr_x0(&p.a),
        _ => p.x0.clone(),
    };
    let mut factor = if ada {
        let l = x0
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotSpd("x0 must be SPD for AdaRBFGS".into()))?
            .unpack();
        Some(FactoredIterate { l })
    } else {
        None
    };
    let ada_sampling = match baseline {
        Some(Baseline::AdaRbfgsGauss) => Some(Sampling::GaussianColumns { dim: n, cols: q }),
        Some(Baseline::AdaRbfgsCols) => Some(Sampling::AdaptiveColumns {
            block_size: q,
            policy: ColumnPolicy::Contiguous,
        }),
        _ => None,
    };

    let mut rec = Recorder::new(10 * n);
    let mut x = x0;
    let res0 = residual(&p.a, &x);
    rec.push(0, if res0 > 0.0 { 1.0 } else { 0.0 }, None);
    if res0 == 0.0 {
        return Ok((x, rec.finish(Status::Converged)));
    }
    let weighted = !p.b.is_identity();
    for k in 1..=max_iters {
        let at = |e: Error| Error::AtIteration {
            iter: k,
            source: Box::new(e),
        };
        let width;
        match baseline {
            Some(Baseline::NewtonSchulz) => {
                x = newton_schulz_step(&p.a, &x);
                width = n;
            }
            Some(Baseline::MinimalResidual) => {
                x = mr_step(&p.a, &x);
                width = n;
            }
            Some(_) => {
                let f = factor.as_mut().expect("factor initialised for AdaRBFGS");
                let sampling = ada_sampling
                    .as_ref()
                    .expect("sampling initialised for AdaRBFGS");
                let s_tilde = match sampling.draw(rng, Some(&f.l)).map_err(at)? {
                    Sketch::Block(idx) => identity_columns(n, &idx),
                    other => other.to_mat(n),
                };
                width = s_tilde.ncols();
                *f = adarbfgs_step(&p.a, f, &s_tilde).map_err(at)?;
                x = f.x();
            }
            None => {
                let s = p.sampling.sample(rng, None).map_err(at)?;
                width = s.ncols();
                x = variant_step(p, &x, &s).map_err(at)?;
            }
        }
        rec.add_flops(iteration_flops(n, width, baseline, p.variant, weighted));
        let rel = residual(&p.a, &x) / res0;
        rec.push(k, rel, None);
        if rel <= tol {
            return Ok((x, rec.finish(Status::Converged)));
        }
        if !rel.is_finite() || rec.stalled() {
            return Ok((x, rec.finish(Status::Stalled)));
        }
    }
    Ok((x, rec.finish(Status::MaxIters)))
}
