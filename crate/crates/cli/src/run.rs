//! Experiment execution and CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sketchproj::generate::{generate, MatrixSource};
use sketchproj::gossip::{self, Graph, Model};
use sketchproj::io::read_matrix_market;
use sketchproj::linalg::{rank, symmetrize};
use sketchproj::linsolve::{
    self, iteration_complexity, make_method, Method, MethodOptions, Probabilities, SolveProblem,
};
use sketchproj::matinv::{self, Baseline, InvProblem, Variant};
use sketchproj::sampling::{
    contiguous_partition, convenient_probabilities, rate_bound_gaussian, rate_certificate, Sampling,
};
use sketchproj::sda::{self, ProjectionProblem, SdaTrack};
use sketchproj::{ConvergenceReport, Mat, RateKind, SeededRng, Status, Weight};

use crate::config::{BWeight, CommandKind, ExperimentConfig, Input};
use crate::CliError;

pub const CSV_HEADER: &str = "iter,residual,error,flops,elapsed_s";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<ConvergenceReport>,
    /// Rate certificate value behind the aggregate envelope, if any.
    pub rho: Option<f64>,
    /// Human-readable summary printed to stdout.
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// 0 when every repetition converged, 2 otherwise.
pub fn exit_code(outcome: &RunOutcome) -> i32 {
    if outcome
        .reports
        .iter()
        .all(|r| r.status == Status::Converged)
    {
        0
    } else {
        2
    }
}

fn load_matrix(input: &Input, rng: &mut SeededRng) -> Result<Mat, CliError> {
    Ok(match input {
        Input::File(p) => read_matrix_market(p)?,
        Input::Gen(spec) => generate(&MatrixSource::parse(spec)?, rng)?,
    })
}

fn weight_for(choice: BWeight, a: &Mat) -> Result<Weight, CliError> {
    Ok(match choice {
        BWeight::Identity => Weight::identity(a.ncols()),
        BWeight::A => {
            if !a.is_square() {
                return Err(CliError::Usage("--b-weight a needs a square matrix".into()));
            }
            Weight::new(symmetrize(a))?
        }
        BWeight::Ata => Weight::new(symmetrize(&(a.transpose() * a)))?,
    })
}

/// Contiguous row blocks of size `q` with convenient or uniform probabilities.
fn block_sampling(
    a: &Mat,
    b: &Weight,
    q: usize,
    probs: Probabilities,
) -> Result<Sampling, CliError> {
    let m = a.nrows();
    if q == 1 {
        return Ok(match probs {
            Probabilities::Uniform => Sampling::coordinate_uniform(m),
            Probabilities::Convenient => Sampling::coordinate_convenient(a, b)?,
        });
    }
    let blocks = contiguous_partition(m, q)?;
    let p = match probs {
        Probabilities::Uniform => vec![1.0 / blocks.len() as f64; blocks.len()],
        Probabilities::Convenient => {
            let outs: Vec<Mat> = blocks
                .iter()
                .map(|blk| sketchproj::linalg::identity_columns(m, blk))
                .collect();
            convenient_probabilities(&outs, a, b)?
        }
    };
    Ok(Sampling::block_partition(m, blocks, &p)?)
}

fn solve_problem(cfg: &ExperimentConfig, a: &Mat, rhs: &Mat) -> Result<SolveProblem, CliError> {
    if cfg.method == "generic" {
        let b = weight_for(cfg.b_weight.unwrap_or(BWeight::Identity), a)?;
        let s = block_sampling(a, &b, cfg.block_size.unwrap_or(1), cfg.probabilities)?;
        return Ok(SolveProblem::new(a.clone(), rhs.clone(), b, s, None)?);
    }
    if cfg.b_weight.is_some() {
        return Err(CliError::Usage(
            "--b-weight applies only to --method generic; named methods fix B".into(),
        ));
    }
    let opts = MethodOptions {
        block_size: cfg.block_size,
        probabilities: cfg.probabilities,
        x0: None,
    };
    Ok(make_method(Method::parse(&cfg.method)?, a, rhs, &opts)?)
}

fn rate_kind_for(a: &Mat) -> RateKind {
    if rank(a) < a.ncols() {
        RateKind::Sda
    } else {
        RateKind::Linsolve
    }
}

/// Run `body(rep, rng)` for every repetition, concurrently, with generator
/// seeds `seed + rep`.
fn run_reps<T: Send>(
    cfg: &ExperimentConfig,
    body: impl Fn(usize, &mut SeededRng) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(cfg.reps);
    let mut results: Vec<Option<Result<T, CliError>>> = (0..cfg.reps).map(|_| None).collect();
    std::thread::scope(|scope| {
        let body = &body;
        for (w, chunk) in results.chunks_mut(cfg.reps.div_ceil(workers)).enumerate() {
            let start = w * cfg.reps.div_ceil(workers);
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let rep = start + k;
                    let mut rng = SeededRng::new(cfg.seed.wrapping_add(rep as u64));
                    *slot = Some(body(rep, &mut rng));
                }
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("every repetition runs"))
        .collect()
}

fn parse_tracks(names: &[String]) -> Result<Vec<SdaTrack>, CliError> {
    let mut out = Vec::new();
    for n in names {
        match n.as_str() {
            "residual" | "error" => {}
            "gap" => out.push(SdaTrack::Gap),
            "dual" => out.push(SdaTrack::DualSubopt),
            "primal" => out.push(SdaTrack::PrimalSubopt),
            "residual-bound" => out.push(SdaTrack::Residual),
            other => return Err(CliError::Usage(format!("unknown --track '{other}'"))),
        }
    }
    Ok(out)
}

fn invert_setup(
    cfg: &ExperimentConfig,
    a: &Mat,
) -> Result<(InvProblem, Option<Baseline>, Option<f64>), CliError> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(CliError::Usage("invert needs a square matrix".into()));
    }
    let baseline = match cfg.method.as_str() {
        "newton-schulz" | "ns" => Some(Baseline::NewtonSchulz),
        "mr" => Some(Baseline::MinimalResidual),
        "adarbfgs-gauss" => Some(Baseline::AdaRbfgsGauss),
        "adarbfgs-cols" => Some(Baseline::AdaRbfgsCols),
        _ => None,
    };
    if let Some(bl) = baseline {
        let p = InvProblem::new(
            a.clone(),
            Weight::identity(n),
            Sampling::full(n),
            None,
            Variant::RowSketch,
        )?;
        return Ok((p, Some(bl), None));
    }
    let (variant, default_b) = match cfg.method.as_str() {
        "row" => (Variant::RowSketch, BWeight::Identity),
        "col" => (Variant::ColSketch, BWeight::Identity),
        "sym" => (Variant::Symmetric, BWeight::Identity),
        "bfgs" => (Variant::Symmetric, BWeight::A),
        other => return Err(CliError::Usage(format!("unknown invert method '{other}'"))),
    };
    let b = weight_for(cfg.b_weight.unwrap_or(default_b), a)?;
    // The column variant sketches XA = I, i.e. the row variant on Aᵀ.
    let sketched = if variant == Variant::ColSketch {
        a.transpose()
    } else {
        a.clone()
    };
    let s = block_sampling(
        &sketched,
        &b,
        cfg.block_size.unwrap_or(1),
        cfg.probabilities,
    )?;
    let rho = rate_certificate(&s, &sketched, &b, RateKind::Inversion)
        .ok()
        .map(|c| c.rho);
    Ok((InvProblem::new(a.clone(), b, s, None, variant)?, None, rho))
}

fn load_graph(input: &Input, rng: &mut SeededRng) -> Result<Graph, CliError> {
    match input {
        Input::File(p) => Ok(gossip::parse_edge_list(&std::fs::read_to_string(p)?)?),
        Input::Gen(spec) => {
            let parts: Vec<&str> = spec.split(':').collect();
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bad graph size '{s}'")))
            };
            match parts.as_slice() {
                ["complete", n] => {
                    let n = num(n)?;
                    let values = (0..n).map(|_| rng.normal()).collect();
                    Ok(Graph::complete(n, values)?)
                }
                ["graph", n, p] => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| CliError::Usage(format!("bad edge probability '{p}'")))?;
                    Ok(Graph::random_connected(num(n)?, p, rng)?)
                }
                _ => Err(CliError::Usage(format!(
                    "gossip --gen expects complete:N or graph:N:P, got '{spec}'"
                ))),
            }
        }
    }
}

fn gossip_model(name: &str) -> Result<Model, CliError> {
    match name {
        "model1" | "equal" | "edge" => Ok(Model::EqualNeighbors),
        "model2" | "average" | "node" => Ok(Model::AverageNeighbors),
        other => Err(CliError::Usage(format!("unknown gossip model '{other}'"))),
    }
}

fn rate_text(cfg: &ExperimentConfig, a: &Mat) -> Result<String, CliError> {
    let mut out = String::new();
    let rhs = Mat::zeros(a.nrows(), 1);
    let p = solve_problem(cfg, a, &rhs)?;
    if p.sampling.is_discrete() {
        let cert = rate_certificate(&p.sampling, &p.a, &p.b, rate_kind_for(a))?;
        writeln!(out, "rho = {:.12e}", cert.rho).unwrap();
        writeln!(out, "lower_bound = {:.12e}", cert.lower_bound).unwrap();
        match iteration_complexity(cert.rho, 1e-4) {
            Ok(k) => writeln!(out, "iterations_for_1e-4 = {k}").unwrap(),
            Err(_) => writeln!(out, "iterations_for_1e-4 = unbounded").unwrap(),
        }
    } else {
        let cov = Mat::identity(a.nrows(), a.nrows());
        let (lower, upper) = rate_bound_gaussian(&cov, &p.a, &p.b)?;
        writeln!(out, "rho_lower = {lower:.12e}").unwrap();
        writeln!(out, "rho_upper = {upper:.12e}").unwrap();
        if let Ok(k) = iteration_complexity(upper, 1e-4) {
            writeln!(out, "iterations_for_1e-4 <= {k}").unwrap();
        }
    }
    Ok(out)
}

/// Execute one experiment. CSVs are written when `cfg.out` is set.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let mut setup_rng = SeededRng::new(cfg.seed);
    let (reports, rho): (Vec<ConvergenceReport>, Option<f64>) = match cfg.command {
        CommandKind::Rate => {
            let a = load_matrix(&cfg.input, &mut setup_rng)?;
            let summary = rate_text(cfg, &a)?;
            return Ok(RunOutcome {
                reports: Vec::new(),
                rho: None,
                summary,
                files: Vec::new(),
            });
        }
        CommandKind::Solve => {
            let a = load_matrix(&cfg.input, &mut setup_rng)?;
            let x_star = Mat::from_fn(a.ncols(), 1, |_, _| setup_rng.uniform());
            let p = solve_problem(cfg, &a, &(&a * x_star))?;
            let rho = if p.sampling.is_discrete() {
                Some(rate_certificate(&p.sampling, &p.a, &p.b, rate_kind_for(&a))?.rho)
            } else {
                None
            };
            let reps = run_reps(cfg, |_, rng| {
                Ok(linsolve::solve(&p, rng, cfg.tol, cfg.max_iters)?.1)
            })?;
            (reps, rho)
        }
        CommandKind::Project => {
            let a = load_matrix(&cfg.input, &mut setup_rng)?;
            let x_star = Mat::from_fn(a.ncols(), 1, |_, _| setup_rng.uniform());
            let c = Mat::from_fn(a.ncols(), 1, |_, _| setup_rng.normal());
            let sp = solve_problem(cfg, &a, &(&a * x_star))?;
            let p = ProjectionProblem::new(sp.a, sp.rhs, sp.b, c, sp.sampling)?;
            let tracks = parse_tracks(&cfg.track)?;
            let rho = if p.sampling.is_discrete() {
                Some(rate_certificate(&p.sampling, &p.a, &p.b, RateKind::Sda)?.rho)
            } else {
                None
            };
            let reps = run_reps(cfg, |_, rng| {
                Ok(sda::sda_solve(&p, rng, cfg.tol, cfg.max_iters, &tracks, None)?.1)
            })?;
            (reps, rho)
        }
        CommandKind::Invert => {
            let a = load_matrix(&cfg.input, &mut setup_rng)?;
            let (p, baseline, rho) = invert_setup(cfg, &a)?;
            let reps = run_reps(cfg, |_, rng| {
                Ok(matinv::invert(&p, rng, cfg.tol, cfg.max_iters, baseline)?.1)
            })?;
            (reps, rho)
        }
        CommandKind::Gossip => {
            let g = load_graph(&cfg.input, &mut setup_rng)?;
            let model = gossip_model(&cfg.method)?;
            let rho = gossip::gossip_rate(&g, model)?;
            let reps = run_reps(cfg, |_, rng| {
                Ok(gossip::run_consensus(&g, model, rng, cfg.tol, cfg.max_iters)?.report)
            })?;
            (reps, Some(rho))
        }
    };

    let mut summary = String::new();
    if let Some(r) = rho {
        writeln!(summary, "rho = {r:.12e}").unwrap();
    }
    for (k, rep) in reports.iter().enumerate() {
        let last = rep.last();
        let first = rep.records[0].residual;
        let rel = if first > 0.0 {
            last.residual / first
        } else {
            0.0
        };
        writeln!(
            summary,
            "rep {k}: {:?} after {} iterations, residual {:e} (relative {rel:e})",
            rep.status, last.iter, last.residual
        )
        .unwrap();
    }
    let files = match &cfg.out {
        Some(path) => write_outputs(path, &reports, rho)?,
        None => Vec::new(),
    };
    Ok(RunOutcome {
        reports,
        rho,
        summary,
        files,
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// Per-repetition CSV text.
pub fn report_csv(rep: &ConvergenceReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &rep.records {
        let err = r.error.map(|e| format!("{e:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{:e},{},{},{:.6}",
            r.iter, r.residual, err, r.flops, r.elapsed_s
        )
        .unwrap();
    }
    out
}

fn tracks_csv(rep: &ConvergenceReport) -> String {
    let mut out = String::from("track,iter,value\n");
    for t in &rep.tracks {
        for (k, v) in &t.points {
            writeln!(out, "{},{k},{v:e}", t.name).unwrap();
        }
    }
    out
}

/// Per-iteration means across repetitions plus the `ρ^k` envelope.
/// `mean_rel_sq_error` averages `(e_k/e_0)²`, the quantity the envelope bounds.
pub fn aggregate_csv(reports: &[ConvergenceReport], rho: Option<f64>) -> String {
    let mut out = String::from("iter,reps,mean_residual,mean_error,mean_rel_sq_error,envelope\n");
    let longest = reports.iter().map(|r| r.records.len()).max().unwrap_or(0);
    for k in 0..longest {
        let rows: Vec<_> = reports
            .iter()
            .filter_map(|r| r.records.get(k).map(|rec| (rec, &r.records[0])))
            .collect();
        let cnt = rows.len() as f64;
        let iter = rows[0].0.iter;
        let mean_res = rows.iter().map(|(r, _)| r.residual).sum::<f64>() / cnt;
        let errs: Option<Vec<(f64, f64)>> = rows
            .iter()
            .map(|(r, r0)| Some((r.error?, r0.error?)))
            .collect();
        let (mean_err, rel) = match errs {
            Some(e) => {
                let me = e.iter().map(|(x, _)| x).sum::<f64>() / cnt;
                let rel: Vec<f64> = e
                    .iter()
                    .filter(|(_, e0)| *e0 > 0.0)
                    .map(|(x, e0)| (x / e0).powi(2))
                    .collect();
                let rel = if rel.is_empty() {
                    String::new()
                } else {
                    format!("{:e}", rel.iter().sum::<f64>() / rel.len() as f64)
                };
                (format!("{me:e}"), rel)
            }
            None => (String::new(), String::new()),
        };
        let env = rho
            .map(|r| format!("{:e}", r.powi(iter as i32)))
            .unwrap_or_default();
        writeln!(
            out,
            "{iter},{},{mean_res:e},{mean_err},{rel},{env}",
            rows.len()
        )
        .unwrap();
    }
    out
}

fn write_outputs(
    path: &Path,
    reports: &[ConvergenceReport],
    rho: Option<f64>,
) -> Result<Vec<PathBuf>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut files = Vec::new();
    for (k, rep) in reports.iter().enumerate() {
        let f = sibling(path, &format!("rep{k}"));
        std::fs::write(&f, report_csv(rep))?;
        files.push(f);
        if !rep.tracks.is_empty() {
            let t = sibling(path, &format!("rep{k}.tracks"));
            std::fs::write(&t, tracks_csv(rep))?;
            files.push(t);
        }
    }
    let agg = sibling(path, "aggregate");
    std::fs::write(&agg, aggregate_csv(reports, rho))?;
    files.push(agg);
    Ok(files)
}
