//! Seeded synthetic test matrices and their compact spec strings.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::io::read_matrix_market;
use crate::linalg::{svd, symmetrize, Mat, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    MatrixMarketFile(PathBuf),
    /// i.i.d. `U[0, 1]` entries.
    RandUniform {
        m: usize,
        n: usize,
    },
    /// About `density·m·n` nonzeros, singular values spread from 1 to `rc`.
    SprandLike {
        m: usize,
        n: usize,
        density: f64,
        rc: f64,
    },
    /// `ĀᵀĀ` with `Ā` uniform.
    SpdRandom(usize),
    /// Rank-`rank` truncated SVD of a uniform matrix.
    RankDeficient {
        m: usize,
        n: usize,
        rank: usize,
    },
    Hilbert(usize),
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParams(msg.into())
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("bad {what} '{s}'")))
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| bad(format!("expected MxN, got '{s}'")))?;
    Ok((parse_num(m, "row count")?, parse_num(n, "column count")?))
}

impl MatrixSource {
    /// Parse a generator spec: `rand:MxN`, `sprand:MxN:DENSITY:RC`, `spd:N`,
    /// `rank-deficient:MxN:RANK`, `hilbert:N` or `file:PATH`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| bad(format!("generator spec '{spec}' lacks ':'")))?;
        let parts: Vec<&str> = rest.split(':').collect();
        let want = |k: usize| {
            if parts.len() == k {
                Ok(())
            } else {
                Err(bad(format!("'{kind}' takes {k} fields")))
            }
        };
        let src = match kind {
            "file" => return Ok(MatrixSource::MatrixMarketFile(PathBuf::from(rest))),
            "rand" => {
                want(1)?;
                let (m, n) = parse_shape(parts[0])?;
                MatrixSource::RandUniform { m, n }
            }
            "sprand" | "sprandn" => {
                want(3)?;
                let (m, n) = parse_shape(parts[0])?;
                MatrixSource::SprandLike {
                    m,
                    n,
                    density: parse_num(parts[1], "density")?,
                    rc: parse_num(parts[2], "rc")?,
                }
            }
            "spd" => {
                want(1)?;
                MatrixSource::SpdRandom(parse_num(parts[0], "size")?)
            }
            "rank-deficient" | "rankdef" => {
                want(2)?;
                let (m, n) = parse_shape(parts[0])?;
                MatrixSource::RankDeficient {
                    m,
                    n,
                    rank: parse_num(parts[1], "rank")?,
                }
            }
            "hilbert" => {
                want(1)?;
                MatrixSource::Hilbert(parse_num(parts[0], "size")?)
            }
            other => return Err(bad(format!("unknown generator '{other}'"))),
        };
        src.validate()?;
        Ok(src)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: &[usize]| {
            if v.iter().all(|&d| d > 0) {
                Ok(())
            } else {
                Err(bad("dimensions must be positive"))
            }
        };
        match *self {
            MatrixSource::MatrixMarketFile(_) => Ok(()),
            MatrixSource::RandUniform { m, n } => positive(&[m, n]),
            MatrixSource::SprandLike { m, n, density, rc } => {
                positive(&[m, n])?;
                if !(density > 0.0 && density <= 1.0) {
                    return Err(bad("density must lie in (0, 1]"));
                }
                if !(rc > 0.0 && rc <= 1.0) {
                    return Err(bad("rc must lie in (0, 1]"));
                }
                Ok(())
            }
            MatrixSource::SpdRandom(n) | MatrixSource::Hilbert(n) => positive(&[n]),
            MatrixSource::RankDeficient { m, n, rank } => {
                positive(&[m, n, rank])?;
                if rank > m.min(n) {
                    return Err(bad("rank exceeds min(m, n)"));
                }
                Ok(())
            }
        }
    }
}

fn rand_uniform(rng: &mut SeededRng, m: usize, n: usize) -> Mat {
    Mat::from_fn(m, n, |_, _| rng.uniform())
}

/// Build the matrix; deterministic for a given generator state.
pub fn generate(src: &MatrixSource, rng: &mut SeededRng) -> Result<Mat> {
    src.validate()?;
    Ok(match *src {
        MatrixSource::MatrixMarketFile(ref path) => read_matrix_market(path)?,
        MatrixSource::RandUniform { m, n } => rand_uniform(rng, m, n),
        MatrixSource::SprandLike { m, n, density, rc } => sprand_like(rng, m, n, density, rc),
        MatrixSource::SpdRandom(n) => {
            let abar = rand_uniform(rng, n, n);
            symmetrize(&(abar.transpose() * &abar))
        }
        MatrixSource::RankDeficient { m, n, rank } => {
            let d = svd(&rand_uniform(rng, m, n));
            let mut a = Mat::zeros(m, n);
            for k in 0..rank {
                a += d.u.column(k) * d.vt.row(k) * d.s[k];
            }
            a
        }
        MatrixSource::Hilbert(n) => Mat::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64),
    })
}

/// Diagonal of geometrically spaced singular values from 1 down to `rc`,
/// mixed by random Givens rotations on rows and columns until the fill
/// reaches `density`. Rotations keep the singular values exact.
fn sprand_like(rng: &mut SeededRng, m: usize, n: usize, density: f64, rc: f64) -> Mat {
    let k = m.min(n);
    let mut a = Mat::zeros(m, n);
    for i in 0..k {
        let t = if k == 1 {
            0.0
        } else {
            i as f64 / (k - 1) as f64
        };
        a[(i, i)] = rc.powf(t);
    }
    let target = (density * (m * n) as f64).ceil() as usize;
    let mut nnz = k;
    let max_rotations = 4 * (m + n) * k.max(1);
    let nz = |x: f64| usize::from(x != 0.0);
    for _ in 0..max_rotations {
        if nnz >= target {
            break;
        }
        let theta = rng.uniform() * std::f64::consts::TAU;
        let (c, s) = (theta.cos(), theta.sin());
        if rng.uniform() < 0.5 && m > 1 {
            let (p, q) = distinct_pair(rng, m);
            for j in 0..n {
                let (x, y) = (a[(p, j)], a[(q, j)]);
                a[(p, j)] = c * x - s * y;
                a[(q, j)] = s * x + c * y;
                nnz = nnz + nz(a[(p, j)]) + nz(a[(q, j)]) - nz(x) - nz(y);
            }
        } else if n > 1 {
            let (p, q) = distinct_pair(rng, n);
            for i in 0..m {
                let (x, y) = (a[(i, p)], a[(i, q)]);
                a[(i, p)] = c * x - s * y;
                a[(i, q)] = s * x + c * y;
                nnz = nnz + nz(a[(i, p)]) + nz(a[(i, q)]) - nz(x) - nz(y);
            }
        }
    }
    a
}

fn distinct_pair(rng: &mut SeededRng, n: usize) -> (usize, usize) {
    let p = rng.index(n);
    let q = (p + 1 + rng.index(n - 1)) % n;
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{lambda_min, rank};
    use approx::assert_relative_eq;

    #[test]
    fn hilbert_entries() {
        let h = generate(&MatrixSource::Hilbert(4), &mut SeededRng::new(0)).unwrap();
        assert_eq!(h[(0, 0)], 1.0);
        assert_eq!(h[(1, 2)], 0.25);
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn spd_random_is_spd() {
        let a = generate(&MatrixSource::SpdRandom(5), &mut SeededRng::new(1)).unwrap();
        assert_eq!(a, a.transpose());
        assert!(lambda_min(&a) > 0.0);
    }

    #[test]
    fn rank_deficient_has_requested_rank() {
        let a = generate(
            &MatrixSource::RankDeficient {
                m: 30,
                n: 20,
                rank: 7,
            },
            &mut SeededRng::new(2),
        )
        .unwrap();
        let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        assert!(sv[6] > 1e-6 * sv[0]);
        assert!(sv[7] < 1e-12 * sv[0]);
        assert_eq!(rank(&a), 7);
    }

    #[test]
    fn sprand_like_has_condition_and_fill() {
        let a = generate(
            &MatrixSource::SprandLike {
                m: 40,
                n: 20,
                density: 0.3,
                rc: 0.01,
            },
            &mut SeededRng::new(3),
        )
        .unwrap();
        let sv = a.singular_values();
        assert_relative_eq!(sv.max(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(sv.min(), 0.01, epsilon = 1e-12);
        let fill = a.iter().filter(|v| **v != 0.0).count() as f64 / 800.0;
        assert!(fill >= 0.3);
    }

    #[test]
    fn deterministic_under_seed() {
        let src = MatrixSource::RandUniform { m: 4, n: 3 };
        assert_eq!(
            generate(&src, &mut SeededRng::new(9)).unwrap(),
            generate(&src, &mut SeededRng::new(9)).unwrap()
        );
    }

    #[test]
    fn spec_strings() {
        assert_eq!(
            MatrixSource::parse("rank-deficient:300x300:40").unwrap(),
            MatrixSource::RankDeficient {
                m: 300,
                n: 300,
                rank: 40
            }
        );
        assert_eq!(
            MatrixSource::parse("spd:200").unwrap(),
            MatrixSource::SpdRandom(200)
        );
        assert_eq!(
            MatrixSource::parse("rand:10x5").unwrap(),
            MatrixSource::RandUniform { m: 10, n: 5 }
        );
        assert!(MatrixSource::parse("rank-deficient:3x3:4").is_err());
        assert!(MatrixSource::parse("sprand:3x3:0:0.1").is_err());
        assert!(MatrixSource::parse("bogus:3").is_err());
    }
}
