//! Sketch distributions, samplers and convergence-rate certificates.
//!
//! A [`Sampling`] describes the law of the random sketch `S`. Drawing returns
//! a lightweight [`Sketch`] (a coordinate index, an index block, or a dense
//! matrix) so that specialised solvers can avoid forming `S` explicitly;
//! [`Sampling::materialize`] turns it into the dense matrix used by the
//! generic updates.

use std::f64::consts::PI;

use crate::error::{dims, Error, Result};
use crate::linalg::{
    covariance_root, identity_columns, lambda_min, lambda_min_positive, pseudoinverse, rank,
    spd_inverse, sym_sqrt, symmetrize, unit, Mat, SeededRng, Weight,
};

/// Probabilities below this value are dropped and the rest renormalised.
pub const PROB_FLOOR: f64 = 1e-15;

/// Discrete distribution over outcome indices, sampled by inverse CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    support: Vec<usize>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl Categorical {
    /// Build from non-negative weights (need not be normalised). Entries whose
    /// normalised value is below [`PROB_FLOOR`] are removed from the support.
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::BadProbabilities("empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::BadProbabilities(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::BadProbabilities("weights sum to zero".into()));
        }
        let support: Vec<usize> = (0..weights.len())
            .filter(|&i| weights[i] / total >= PROB_FLOOR)
            .collect();
        let kept: f64 = support.iter().map(|&i| weights[i]).sum();
        let probs: Vec<f64> = support.iter().map(|&i| weights[i] / kept).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().expect("non-empty support") = 1.0;
        Ok(Self {
            support,
            probs,
            cdf,
        })
    }

    /// Like [`Categorical::new`] but insists the input already sums to one.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadProbabilities(format!(
                "sum is {total}, expected 1"
            )));
        }
        if probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::BadProbabilities(
                "each probability must be positive".into(),
            ));
        }
        Self::new(probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(&vec![1.0; n])
    }

    /// One uniform draw, mapped through the inverse CDF to an original index.
    pub fn draw(&self, rng: &mut SeededRng) -> usize {
        let u = rng.uniform();
        let k = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        self.support[k]
    }

    /// `(original index, probability)` pairs of the support.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Probability of an original index (zero when outside the support).
    pub fn prob(&self, i: usize) -> f64 {
        self.support
            .iter()
            .position(|&s| s == i)
            .map_or(0.0, |k| self.probs[k])
    }
}

/// How AdaRBFGS picks columns of the current factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnPolicy {
    /// Partition `0..n` into contiguous blocks of the block size; pick one uniformly.
    #[default]
    Contiguous,
    /// Pick `q` distinct coordinates uniformly at random.
    RandomSubset,
}

/// Realised sketch in compact form.
#[derive(Debug, Clone, PartialEq)]
pub enum Sketch {
    Coord(usize),
    Block(Vec<usize>),
    Dense(Mat),
}

impl Sketch {
    pub fn to_mat(&self, rows: usize) -> Mat {
        match self {
            Sketch::Coord(i) => unit(rows, *i),
            Sketch::Block(idx) => identity_columns(rows, idx),
            Sketch::Dense(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    DiscreteExplicit {
        outcomes: Vec<Mat>,
        dist: Categorical,
    },
    CoordinateUniform(usize),
    CoordinateConvenient {
        dim: usize,
        dist: Categorical,
    },
    BlockPartition {
        dim: usize,
        blocks: Vec<Vec<usize>>,
        dist: Categorical,
    },
    /// `S ~ N(0, cov)`, a single column. `root` caches `cov^{1/2}`.
    Gaussian {
        cov: Mat,
        root: Mat,
    },
    GaussianColumns {
        dim: usize,
        cols: usize,
    },
    /// Columns of the factor passed as context (AdaRBFGS).
    AdaptiveColumns {
        block_size: usize,
        policy: ColumnPolicy,
    },
    /// `S = left · S_inner`.
    Transformed {
        inner: Box<Sampling>,
        left: Mat,
    },
}

impl Sampling {
    pub fn discrete(outcomes: Vec<Mat>, probs: &[f64]) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != probs.len() {
            return Err(Error::BadProbabilities(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        let m = outcomes[0].nrows();
        if let Some(o) = outcomes.iter().find(|o| o.nrows() != m) {
            return Err(dims("discrete sampling outcome rows", m, o.nrows()));
        }
        let dist = Categorical::from_probs(probs)?;
        Ok(Sampling::DiscreteExplicit { outcomes, dist })
    }

    /// Deterministic sketch `S = I_m`.
    pub fn full(m: usize) -> Self {
        Sampling::DiscreteExplicit {
            outcomes: vec![Mat::identity(m, m)],
            dist: Categorical::uniform(1).unwrap(),
        }
    }

    pub fn coordinate_uniform(m: usize) -> Self {
        Sampling::CoordinateUniform(m)
    }

    /// Coordinate sampling with probabilities `∝ (A B^{-1} Aᵀ)_{ii}`.
    pub fn coordinate_convenient(a: &Mat, b: &Weight) -> Result<Self> {
        if a.ncols() != b.dim() {
            return Err(dims("coordinate_convenient", b.dim(), a.ncols()));
        }
        let binv_at = b.apply_inv(&a.transpose());
        let w: Vec<f64> = (0..a.nrows())
            .map(|i| a.row(i).dot(&binv_at.column(i).transpose()))
            .collect();
        if w.iter().all(|&v| v <= 0.0) {
            return Err(Error::ZeroTrace);
        }
        Ok(Sampling::CoordinateConvenient {
            dim: a.nrows(),
            dist: Categorical::new(&w)?,
        })
    }

    /// Coordinate sampling with explicit (non-negative) weights.
    pub fn coordinate_weighted(weights: &[f64]) -> Result<Self> {
        Ok(Sampling::CoordinateConvenient {
            dim: weights.len(),
            dist: Categorical::new(weights)?,
        })
    }

    pub fn block_partition(dim: usize, blocks: Vec<Vec<usize>>, probs: &[f64]) -> Result<Self> {
        let mut seen = vec![false; dim];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::BadParams("empty block".into()));
            }
            for &i in block {
                if i >= dim || seen[i] {
                    return Err(Error::BadParams(format!(
                        "index {i} out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        if blocks.len() != probs.len() {
            return Err(Error::BadProbabilities(
                "one probability per block required".into(),
            ));
        }
        Ok(Sampling::BlockPartition {
            dim,
            blocks,
            dist: Categorical::from_probs(probs)?,
        })
    }

    /// Contiguous blocks of size `q` (last one possibly shorter), uniform.
    pub fn contiguous_blocks(dim: usize, q: usize) -> Result<Self> {
        let blocks = contiguous_partition(dim, q)?;
        let r = blocks.len();
        Sampling::block_partition(dim, blocks, &vec![1.0 / r as f64; r])
    }

    pub fn gaussian(cov: Mat) -> Result<Self> {
        let root = covariance_root(&cov)?;
        Ok(Sampling::Gaussian { cov, root })
    }

    pub fn gaussian_standard(dim: usize) -> Self {
        Sampling::GaussianColumns { dim, cols: 1 }
    }

    pub fn transformed(inner: Sampling, left: Mat) -> Result<Self> {
        if let Some(r) = inner.rows() {
            if left.ncols() != r {
                return Err(dims("transformed sampling", r, left.ncols()));
            }
        }
        Ok(Sampling::Transformed {
            inner: Box::new(inner),
            left,
        })
    }

    /// Row count of the realised `S`, when it does not depend on context.
    pub fn rows(&self) -> Option<usize> {
        match self {
            Sampling::DiscreteExplicit { outcomes, .. } => Some(outcomes[0].nrows()),
            Sampling::CoordinateUniform(m) => Some(*m),
            Sampling::CoordinateConvenient { dim, .. } | Sampling::BlockPartition { dim, .. } => {
                Some(*dim)
            }
            Sampling::Gaussian { cov, .. } => Some(cov.nrows()),
            Sampling::GaussianColumns { dim, .. } => Some(*dim),
            Sampling::AdaptiveColumns { .. } => None,
            Sampling::Transformed { left, .. } => Some(left.nrows()),
        }
    }

    pub fn is_discrete(&self) -> bool {
        match self {
            Sampling::DiscreteExplicit { .. }
            | Sampling::CoordinateUniform(_)
            | Sampling::CoordinateConvenient { .. }
            | Sampling::BlockPartition { .. } => true,
            Sampling::Transformed { inner, .. } => inner.is_discrete(),
            _ => false,
        }
    }

    /// Draw the compact (untransformed) sketch.
    pub fn draw(&self, rng: &mut SeededRng, context: Option<&Mat>) -> Result<Sketch> {
        Ok(match self {
            Sampling::DiscreteExplicit { outcomes, dist } => {
                Sketch::Dense(outcomes[dist.draw(rng)].clone())
            }
            Sampling::CoordinateUniform(m) => Sketch::Coord(rng.index(*m)),
            Sampling::CoordinateConvenient { dist, .. } => Sketch::Coord(dist.draw(rng)),
            Sampling::BlockPartition { blocks, dist, .. } => {
                Sketch::Block(blocks[dist.draw(rng)].clone())
            }
            Sampling::Gaussian { root, .. } => {
                let z = Mat::from_fn(root.nrows(), 1, |_, _| rng.normal());
                Sketch::Dense(root * z)
            }
            Sampling::GaussianColumns { dim, cols } => {
                Sketch::Dense(Mat::from_fn(*dim, *cols, |_, _| rng.normal()))
            }
            Sampling::AdaptiveColumns { block_size, policy } => {
                let n = context.ok_or(Error::MissingContext)?.ncols();
                let q = (*block_size).clamp(1, n);
                match policy {
                    ColumnPolicy::Contiguous => {
                        let nblocks = n.div_ceil(q);
                        let k = rng.index(nblocks);
                        Sketch::Block((k * q..((k + 1) * q).min(n)).collect())
                    }
                    ColumnPolicy::RandomSubset => {
                        let mut idx: Vec<usize> = (0..n).collect();
                        for i in 0..q {
                            let j = i + rng.index(n - i);
                            idx.swap(i, j);
                        }
                        idx.truncate(q);
                        idx.sort_unstable();
                        Sketch::Block(idx)
                    }
                }
            }
            Sampling::Transformed { inner, .. } => inner.draw(rng, context)?,
        })
    }

    /// Dense `S` for a sketch drawn from this sampling.
    pub fn materialize(&self, sketch: &Sketch, context: Option<&Mat>) -> Result<Mat> {
        match self {
            Sampling::Transformed { inner, left } => Ok(left * inner.materialize(sketch, context)?),
            Sampling::AdaptiveColumns { .. } => {
                let l = context.ok_or(Error::MissingContext)?;
                Ok(match sketch {
                    Sketch::Coord(i) => l.columns(*i, 1).into_owned(),
                    Sketch::Block(idx) => l.select_columns(idx),
                    Sketch::Dense(m) => l * m,
                })
            }
            _ => Ok(sketch.to_mat(self.rows().expect("context-free sampling"))),
        }
    }

    /// Draw and materialise in one go.
    pub fn sample(&self, rng: &mut SeededRng, context: Option<&Mat>) -> Result<Mat> {
        let sk = self.draw(rng, context)?;
        self.materialize(&sk, context)
    }

    /// Enumerate `(S_i, p_i)` for discrete samplings.
    pub fn outcomes(&self) -> Result<Vec<(Mat, f64)>> {
        match self {
            Sampling::DiscreteExplicit { outcomes, dist } => {
                Ok(dist.iter().map(|(i, p)| (outcomes[i].clone(), p)).collect())
            }
            Sampling::CoordinateUniform(m) => {
                Ok((0..*m).map(|i| (unit(*m, i), 1.0 / *m as f64)).collect())
            }
            Sampling::CoordinateConvenient { dim, dist } => {
                Ok(dist.iter().map(|(i, p)| (unit(*dim, i), p)).collect())
            }
            Sampling::BlockPartition { dim, blocks, dist } => Ok(dist
                .iter()
                .map(|(i, p)| (identity_columns(*dim, &blocks[i]), p))
                .collect()),
            Sampling::Transformed { inner, left } => Ok(inner
                .outcomes()?
                .into_iter()
                .map(|(s, p)| (left * s, p))
                .collect()),
            _ => Err(Error::NotDiscrete),
        }
    }
}

/// Contiguous partition of `0..dim` into blocks of size `q`.
pub fn contiguous_partition(dim: usize, q: usize) -> Result<Vec<Vec<usize>>> {
    if q == 0 || dim == 0 {
        return Err(Error::BadParams(
            "block size and dimension must be positive".into(),
        ));
    }
    Ok((0..dim)
        .step_by(q)
        .map(|s| (s..(s + q).min(dim)).collect())
        .collect())
}

/// Default block size `⌈√n⌉`.
pub fn default_block_size(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

pub fn sample(s: &Sampling, rng: &mut SeededRng, context: Option<&Mat>) -> Result<Mat> {
    s.sample(rng, context)
}

/// Each `S_iᵀA` has full row rank and `Aᵀ[S_1 … S_r]` has full row rank.
pub fn is_complete_discrete(s: &Sampling, a: &Mat) -> Result<bool> {
    let outs = s.outcomes()?;
    if outs[0].0.nrows() != a.nrows() {
        return Err(dims("is_complete_discrete", a.nrows(), outs[0].0.nrows()));
    }
    let mut blocks = Vec::with_capacity(outs.len());
    for (si, _) in &outs {
        let sa = si.transpose() * a;
        if rank(&sa) < si.ncols() {
            return Ok(false);
        }
        blocks.push(a.transpose() * si);
    }
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut cat = Mat::zeros(a.ncols(), total);
    let mut off = 0;
    for blk in &blocks {
        cat.columns_mut(off, blk.ncols()).copy_from(blk);
        off += blk.ncols();
    }
    Ok(rank(&cat) == a.ncols())
}

/// `E[Z] = Σ p_i AᵀS_i (S_iᵀAB^{-1}AᵀS_i)^{-1} S_iᵀA`.
pub fn expected_z(s: &Sampling, a: &Mat, b: &Weight) -> Result<Mat> {
    if a.ncols() != b.dim() {
        return Err(dims("expected_z", b.dim(), a.ncols()));
    }
    let n = a.ncols();
    let mut ez = Mat::zeros(n, n);
    for (i, (si, p)) in s.outcomes()?.into_iter().enumerate() {
        if si.nrows() != a.nrows() {
            return Err(dims("expected_z outcome rows", a.nrows(), si.nrows()));
        }
        let ats = a.transpose() * &si;
        let gram = ats.transpose() * b.apply_inv(&ats);
        let ginv = spd_inverse(&gram).ok_or(Error::SingularSketch(i))?;
        ez += (&ats * ginv * ats.transpose()) * p;
    }
    Ok(symmetrize(&ez))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Linsolve,
    Inversion,
    Sda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCertificate {
    pub rho: f64,
    pub lower_bound: f64,
    /// `B^{-1/2} E[Z] B^{-1/2}`.
    pub expected_projection: Mat,
    pub kind: RateKind,
}

impl RateCertificate {
    /// Envelope value `ρ^k`.
    pub fn envelope(&self, k: usize) -> f64 {
        self.rho.powi(k as i32)
    }
}

pub fn rate_certificate(
    s: &Sampling,
    a: &Mat,
    b: &Weight,
    kind: RateKind,
) -> Result<RateCertificate> {
    let ez = expected_z(s, a, b)?;
    let w = if b.is_identity() {
        ez
    } else {
        symmetrize(&(b.inv_half() * ez * b.inv_half()))
    };
    let lam = match kind {
        RateKind::Sda => lambda_min_positive(&w),
        RateKind::Linsolve | RateKind::Inversion => lambda_min(&w),
    };
    let rho = (1.0 - lam).clamp(0.0, 1.0);
    let rank_a = rank(a).max(1);
    let mut expected_d = 0.0;
    for (si, p) in s.outcomes()? {
        expected_d += p * rank(&(si.transpose() * a)) as f64;
    }
    let lower_bound = (1.0 - expected_d / rank_a as f64).max(0.0);
    Ok(RateCertificate {
        rho,
        lower_bound,
        expected_projection: w,
        kind,
    })
}

/// `p_i = Tr(S_iᵀAB^{-1}AᵀS_i) / ‖B^{-1/2}Aᵀ[S_1 … S_r]‖²_F`.
pub fn convenient_probabilities(outcomes: &[Mat], a: &Mat, b: &Weight) -> Result<Vec<f64>> {
    if outcomes.is_empty() {
        return Err(Error::BadParams("no outcomes".into()));
    }
    let mut traces = Vec::with_capacity(outcomes.len());
    for si in outcomes {
        if si.nrows() != a.nrows() {
            return Err(dims("convenient_probabilities", a.nrows(), si.nrows()));
        }
        let ats = a.transpose() * si;
        traces.push((ats.transpose() * b.apply_inv(&ats)).trace());
    }
    let total: f64 = traces.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTrace);
    }
    Ok(traces.into_iter().map(|t| t / total).collect())
}

/// `Ω = B^{-1/2} Aᵀ Σ A B^{-1/2}` for Gaussian sketches `S ~ N(0, Σ)`.
pub fn gaussian_omega(cov: &Mat, a: &Mat, b: &Weight) -> Result<Mat> {
    if cov.shape() != (a.nrows(), a.nrows()) || a.ncols() != b.dim() {
        return Err(dims(
            "gaussian_omega",
            format!("{0}x{0} covariance", a.nrows()),
            format!("{}x{}", cov.nrows(), cov.ncols()),
        ));
    }
    let m = b.inv_half() * a.transpose();
    Ok(symmetrize(&(&m * cov * m.transpose())))
}

/// `(1 − 1/n, 1 − (2/π)λmin(Ω)/Tr(Ω))`.
pub fn rate_bound_gaussian(cov: &Mat, a: &Mat, b: &Weight) -> Result<(f64, f64)> {
    if rank(a) < a.ncols() {
        return Err(Error::RankDeficient);
    }
    let omega = gaussian_omega(cov, a, b)?;
    let n = a.ncols() as f64;
    Ok((
        1.0 - 1.0 / n,
        1.0 - (2.0 / PI) * lambda_min(&omega) / omega.trace(),
    ))
}

/// Exact `E[ξξᵀ/ξᵀξ]` for `ξ ~ N(0, Ω)` in two dimensions: `Ω^{1/2}/Tr(Ω^{1/2})`.
pub fn exact_gaussian_projection_2d(omega: &Mat) -> Result<Mat> {
    if omega.shape() != (2, 2) {
        return Err(dims(
            "exact_gaussian_projection_2d",
            "2x2",
            format!("{}x{}", omega.nrows(), omega.ncols()),
        ));
    }
    Weight::new(omega.clone())?;
    let root = sym_sqrt(omega)?;
    let t = root.trace();
    Ok(root / t)
}

/// Minimiser of `Σ a_i/p_i` over the simplex: `p_i = √a_i / Σ√a_j`.
pub fn fracsum_optimal(a: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() || a.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::BadParams("entries must be positive".into()));
    }
    let s: f64 = a.iter().map(|v| v.sqrt()).sum();
    Ok(a.iter().map(|v| v.sqrt() / s).collect())
}

/// Probabilities minimising the trace upper bound
/// `1 − 1/Tr(B^{1/2} E[Z]^{-1} B^{1/2})` for inversion.
///
/// `a_inv_proxy` stands in for `A^{-1}` (pass the current iterate when the
/// inverse is unknown). With `S̄_i` the column blocks of `[S_1 … S_r]^{-T}`,
/// `p_i ∝ ‖B^{1/2}·proxy·S̄_i S_iᵀ A B^{-1/2}‖_F`.
pub fn optimized_inversion_probabilities(
    outcomes: &[Mat],
    a: &Mat,
    b: &Weight,
    a_inv_proxy: &Mat,
) -> Result<Vec<f64>> {
    let n = a.nrows();
    if !a.is_square() || a_inv_proxy.shape() != (n, n) || b.dim() != n {
        return Err(dims(
            "optimized_inversion_probabilities",
            format!("{n}x{n}"),
            format!("{}x{}", a_inv_proxy.nrows(), a_inv_proxy.ncols()),
        ));
    }
    let total: usize = outcomes.iter().map(|s| s.ncols()).sum();
    if outcomes.iter().any(|s| s.nrows() != n) || total != n {
        return Err(Error::SingularConcatenation);
    }
    let mut cat = Mat::zeros(n, n);
    let mut off = 0;
    for s in outcomes {
        cat.columns_mut(off, s.ncols()).copy_from(s);
        off += s.ncols();
    }
    let inv = cat.try_inverse().ok_or(Error::SingularConcatenation)?;
    if rank(&inv) < n {
        return Err(Error::SingularConcatenation);
    }
    let s_bar = inv.transpose();
    let left = b.half() * a_inv_proxy;
    let right = a * b.inv_half();
    let mut off = 0;
    let mut w = Vec::with_capacity(outcomes.len());
    for s in outcomes {
        let q = s.ncols();
        let blk = s_bar.columns(off, q);
        off += q;
        w.push((&left * blk * (s.transpose() * &right)).norm());
    }
    let sum: f64 = w.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::ZeroTrace);
    }
    Ok(w.into_iter().map(|v| v / sum).collect())
}

/// Dense `E[Z]` estimate by averaging realised `Z` over `draws` samples.
pub fn monte_carlo_z(
    s: &Sampling,
    a: &Mat,
    b: &Weight,
    rng: &mut SeededRng,
    draws: usize,
) -> Result<(Mat, Mat)> {
    let n = a.ncols();
    let mut mean = Mat::zeros(n, n);
    let mut sq = Mat::zeros(n, n);
    for _ in 0..draws {
        let si = s.sample(rng, None)?;
        let ats = a.transpose() * &si;
        let gram = ats.transpose() * b.apply_inv(&ats);
        let z = &ats * pseudoinverse(&gram) * ats.transpose();
        sq += z.component_mul(&z);
        mean += z;
    }
    let k = draws as f64;
    mean /= k;
    sq /= k;
    let var = sq - mean.component_mul(&mean);
    Ok((mean, var.map(|v| (v.max(0.0) / k).sqrt())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rand_mat(rng: &mut SeededRng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.normal())
    }

    #[test]
    fn coordinate_sample_is_unit_vector() {
        let mut rng = SeededRng::new(1);
        let s = Sampling::coordinate_uniform(3)
            .sample(&mut rng, None)
            .unwrap();
        assert_eq!(s.shape(), (3, 1));
        assert_eq!(s.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(s.sum(), 1.0);
    }

    #[test]
    fn block_partition_sample() {
        let s = Sampling::block_partition(3, vec![vec![0, 1], vec![2]], &[0.5, 0.5]).unwrap();
        let mut rng = SeededRng::new(2);
        for _ in 0..20 {
            let m = s.sample(&mut rng, None).unwrap();
            assert!(m == identity_columns(3, &[0, 1]) || m == identity_columns(3, &[2]));
        }
    }

    #[test]
    fn full_sampling_always_identity() {
        let s = Sampling::full(4);
        let mut rng = SeededRng::new(3);
        for _ in 0..5 {
            assert_eq!(s.sample(&mut rng, None).unwrap(), Mat::identity(4, 4));
        }
    }

    #[test]
    fn probability_validation() {
        assert!(Sampling::discrete(vec![unit(2, 0), unit(2, 1)], &[0.5, 0.6]).is_err());
        assert!(Sampling::discrete(vec![unit(2, 0), unit(3, 1)], &[0.5, 0.5]).is_err());
        let c = Categorical::new(&[1.0, 1e-20, 1.0]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.prob(1), 0.0);
    }

    #[test]
    fn inverse_cdf_frequencies() {
        let c = Categorical::new(&[0.2, 0.3, 0.5]).unwrap();
        let mut rng = SeededRng::new(9);
        let mut counts = [0usize; 3];
        for _ in 0..100_000 {
            counts[c.draw(&mut rng)] += 1;
        }
        for (k, p) in [0.2, 0.3, 0.5].iter().enumerate() {
            assert!((counts[k] as f64 / 1e5 - p).abs() < 0.01);
        }
    }

    #[test]
    fn adaptive_needs_context() {
        let s = Sampling::AdaptiveColumns {
            block_size: 2,
            policy: ColumnPolicy::Contiguous,
        };
        assert_eq!(
            s.sample(&mut SeededRng::new(1), None),
            Err(Error::MissingContext)
        );
        let l = Mat::from_fn(5, 5, |i, j| (i * 5 + j) as f64);
        let m = s.sample(&mut SeededRng::new(1), Some(&l)).unwrap();
        assert!(m.ncols() <= 2 && m.nrows() == 5);
    }

    #[test]
    fn completeness_examples() {
        let mut rng = SeededRng::new(4);
        let a = rand_mat(&mut rng, 4, 3);
        assert!(is_complete_discrete(&Sampling::coordinate_uniform(4), &a).unwrap());
        let s = Sampling::discrete(vec![unit(2, 0), unit(2, 0)], &[0.5, 0.5]).unwrap();
        assert!(!is_complete_discrete(&s, &Mat::identity(2, 2)).unwrap());
        let mut z = a.clone();
        z.row_mut(2).fill(0.0);
        assert!(!is_complete_discrete(&Sampling::coordinate_uniform(4), &z).unwrap());
        assert_eq!(
            is_complete_discrete(&Sampling::gaussian_standard(4), &a),
            Err(Error::NotDiscrete)
        );
    }

    #[test]
    fn expected_z_examples() {
        let ez = expected_z(
            &Sampling::coordinate_uniform(2),
            &Mat::identity(2, 2),
            &Weight::identity(2),
        )
        .unwrap();
        assert_relative_eq!(ez, Mat::identity(2, 2) * 0.5, epsilon = 1e-15);

        let mut rng = SeededRng::new(5);
        let a = rand_mat(&mut rng, 3, 3);
        let g = rand_mat(&mut rng, 3, 3);
        let b = Weight::new(g.transpose() * g + Mat::identity(3, 3)).unwrap();
        let ez = expected_z(&Sampling::full(3), &a, &b).unwrap();
        assert!((ez - b.b()).norm() < 1e-9 * b.b().norm());
    }

    #[test]
    fn expected_z_rk_is_normalized_gram() {
        let mut rng = SeededRng::new(6);
        let a = rand_mat(&mut rng, 5, 3);
        let b = Weight::identity(3);
        let s = Sampling::coordinate_convenient(&a, &b).unwrap();
        let ez = expected_z(&s, &a, &b).unwrap();
        let want = a.transpose() * &a / a.norm_squared();
        assert!((ez - want).norm() < 1e-13);
    }

    #[test]
    fn singular_sketch_reports_index() {
        let s = Sampling::discrete(vec![unit(2, 0), unit(2, 1)], &[0.5, 0.5]).unwrap();
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            expected_z(&s, &a, &Weight::identity(2)),
            Err(Error::SingularSketch(1))
        );
    }

    #[test]
    fn certificate_identity_matches_lower_bound() {
        let n = 4;
        let c = rate_certificate(
            &Sampling::coordinate_uniform(n),
            &Mat::identity(n, n),
            &Weight::identity(n),
            RateKind::Linsolve,
        )
        .unwrap();
        assert_relative_eq!(c.rho, 1.0 - 1.0 / n as f64, epsilon = 1e-14);
        assert_relative_eq!(c.lower_bound, c.rho, epsilon = 1e-14);
    }

    #[test]
    fn certificate_rank_one_converges_in_one_step() {
        let u = Mat::from_column_slice(3, 1, &[1.0, 2.0, -1.0]);
        let v = Mat::from_column_slice(2, 1, &[0.5, 3.0]);
        let a = &u * v.transpose();
        let b = Weight::identity(2);
        let s = Sampling::coordinate_convenient(&a, &b).unwrap();
        let c = rate_certificate(&s, &a, &b, RateKind::Sda).unwrap();
        assert!(c.rho.abs() < 1e-12);
    }

    #[test]
    fn certificate_cd_pd() {
        let mut rng = SeededRng::new(8);
        let g = rand_mat(&mut rng, 4, 4);
        let a = g.transpose() * g + Mat::identity(4, 4);
        let b = Weight::new(a.clone()).unwrap();
        let s = Sampling::coordinate_convenient(&a, &b).unwrap();
        let p: Vec<f64> = (0..4).map(|i| a[(i, i)] / a.trace()).collect();
        for (i, pi) in p.iter().enumerate() {
            match &s {
                Sampling::CoordinateConvenient { dist, .. } => {
                    assert_relative_eq!(dist.prob(i), *pi, epsilon = 1e-14)
                }
                _ => unreachable!(),
            }
        }
        let c = rate_certificate(&s, &a, &b, RateKind::Linsolve).unwrap();
        assert_relative_eq!(c.rho, 1.0 - lambda_min(&a) / a.trace(), epsilon = 1e-10);
    }

    #[test]
    fn convenient_probability_examples() {
        let mut rng = SeededRng::new(10);
        let a = rand_mat(&mut rng, 4, 3);
        let outs: Vec<Mat> = (0..4).map(|i| unit(4, i)).collect();
        let p = convenient_probabilities(&outs, &a, &Weight::identity(3)).unwrap();
        for (i, pi) in p.iter().enumerate() {
            assert_relative_eq!(
                *pi,
                a.row(i).norm_squared() / a.norm_squared(),
                epsilon = 1e-14
            );
        }
        let units: Vec<Mat> = (0..3).map(|i| unit(3, i)).collect();
        let p =
            convenient_probabilities(&units, &Mat::identity(3, 3), &Weight::identity(3)).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let zero = Mat::zeros(4, 3);
        assert_eq!(
            convenient_probabilities(&outs, &zero, &Weight::identity(3)),
            Err(Error::ZeroTrace)
        );
    }

    #[test]
    fn gaussian_bounds_identity() {
        let id = Mat::identity(2, 2);
        let (lo, hi) = rate_bound_gaussian(&id, &id, &Weight::identity(2)).unwrap();
        assert_relative_eq!(lo, 0.5);
        assert_relative_eq!(hi, 1.0 - 1.0 / PI, epsilon = 1e-14);
        let a = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            rate_bound_gaussian(&id, &a, &Weight::identity(2)),
            Err(Error::RankDeficient)
        );
    }

    #[test]
    fn exact_2d_isotropic() {
        let om = Mat::identity(2, 2) * 7.3;
        assert_relative_eq!(
            exact_gaussian_projection_2d(&om).unwrap(),
            Mat::identity(2, 2) * 0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn exact_2d_diagonal_matches_hand_integral() {
        // Diagonal Ω = diag(σx², σy²) gives σx/(σx+σy) on the first diagonal entry.
        let om = Mat::from_row_slice(2, 2, &[9.0, 0.0, 0.0, 1.0]);
        let e = exact_gaussian_projection_2d(&om).unwrap();
        assert_relative_eq!(e[(0, 0)], 0.75, epsilon = 1e-14);
        assert_relative_eq!(e[(1, 1)], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn optimized_probabilities_coordinate_case() {
        let mut rng = SeededRng::new(12);
        let a = rand_mat(&mut rng, 4, 4);
        let x = rand_mat(&mut rng, 4, 4);
        let outs: Vec<Mat> = (0..4).map(|i| unit(4, i)).collect();
        let p = optimized_inversion_probabilities(&outs, &a, &Weight::identity(4), &x).unwrap();
        let w: Vec<f64> = (0..4)
            .map(|i| x.column(i).norm() * a.row(i).norm())
            .collect();
        let s: f64 = w.iter().sum();
        for i in 0..4 {
            assert_relative_eq!(p[i], w[i] / s, epsilon = 1e-13);
        }
        let p = optimized_inversion_probabilities(
            &outs,
            &Mat::identity(4, 4),
            &Weight::identity(4),
            &Mat::identity(4, 4),
        )
        .unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let bad = vec![unit(4, 0), unit(4, 0), unit(4, 1), unit(4, 2)];
        assert_eq!(
            optimized_inversion_probabilities(&bad, &a, &Weight::identity(4), &x),
            Err(Error::SingularConcatenation)
        );
    }

    #[test]
    fn optimized_probabilities_minimise_trace_bound_with_weight() {
        let mut rng = SeededRng::new(13);
        let a = rand_mat(&mut rng, 3, 3) + Mat::identity(3, 3) * 2.0;
        let g = rand_mat(&mut rng, 3, 3);
        let b = Weight::new(g.transpose() * &g + Mat::identity(3, 3)).unwrap();
        let a_inv = a.clone().try_inverse().unwrap();
        let outs: Vec<Mat> = (0..3).map(|i| unit(3, i)).collect();
        let objective = |p: &[f64]| {
            let s = Sampling::discrete(outs.clone(), p).unwrap();
            let ez = expected_z(&s, &a, &b).unwrap();
            (b.half() * ez.try_inverse().unwrap() * b.half()).trace()
        };
        let steps = 300;
        let mut best = (f64::INFINITY, vec![]);
        for i in 1..steps {
            for j in 1..steps - i {
                let q = vec![i as f64, j as f64, (steps - i - j) as f64]
                    .into_iter()
                    .map(|v| v / steps as f64)
                    .collect::<Vec<_>>();
                let v = objective(&q);
                if v < best.0 {
                    best = (v, q);
                }
            }
        }
        let p = optimized_inversion_probabilities(&outs, &a, &b, &a_inv).unwrap();
        for (bk, pk) in best.1.iter().zip(&p) {
            assert!(
                (bk - pk).abs() <= 2.0 / steps as f64,
                "grid {:?} vs formula {:?}",
                best.1,
                p
            );
        }
        assert!(objective(&p) <= best.0 + 1e-12);
        // The weights with the B exponents swapped are not optimal here.
        let swapped: Vec<f64> = (0..3)
            .map(|i| (b.inv_half() * &a_inv * unit(3, i) * a.row(i) * b.half()).norm())
            .collect();
        let total: f64 = swapped.iter().sum();
        let swapped: Vec<f64> = swapped.into_iter().map(|v| v / total).collect();
        assert!(objective(&swapped) > objective(&p) + 1e-6);
    }

    #[test]
    fn fracsum_matches_grid_search() {
        let a = [0.7, 2.0, 5.0];
        let p = fracsum_optimal(&a).unwrap();
        let f = |q: [f64; 3]| a.iter().zip(q.iter()).map(|(x, y)| x / y).sum::<f64>();
        let steps = 400;
        let mut best = (f64::INFINITY, [0.0; 3]);
        for i in 1..steps {
            for j in 1..steps - i {
                let q = [
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    (steps - i - j) as f64 / steps as f64,
                ];
                let v = f(q);
                if v < best.0 {
                    best = (v, q);
                }
            }
        }
        for (b, pk) in best.1.iter().zip(&p) {
            assert!((b - pk).abs() <= 2.0 / steps as f64);
        }
        assert!(f([p[0], p[1], p[2]]) <= best.0 + 1e-12);
    }
}
