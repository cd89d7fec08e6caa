//! Randomized gossip averaging as stochastic dual ascent on a graph.
//!
//! Model 1 enforces `x_i = x_j` on every edge (the edge-incidence system,
//! whose Gram matrix is the Laplacian); a step averages the two endpoints.
//! Model 2 enforces "each node equals the mean of its neighbours"; a step
//! mixes a node with its neighbourhood. Both preserve the sum of values.

use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::linalg::{lambda_min_positive, Mat, SeededRng, Weight};
use crate::report::{ConvergenceReport, Recorder, Status};
use crate::sampling::{rate_certificate, Categorical, RateKind, Sampling};

/// Iterates beyond this many are stored only every [`TRACE_STRIDE`] steps.
pub const TRACE_FULL_LIMIT: usize = 100_000;
pub const TRACE_STRIDE: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    values: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// `edges` use 0-based node indices.
    pub fn new(n: usize, edges: Vec<(usize, usize)>, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParams("graph needs at least one node".into()));
        }
        if values.len() != n {
            return Err(Error::BadParams(format!(
                "{} values for {n} nodes",
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &edges {
            if i >= n || j >= n {
                return Err(Error::BadParams(format!("edge ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::BadParams(format!("self loop at node {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::BadParams(format!("duplicate edge ({i}, {j})")));
            }
            adj[i].push(j);
            adj[j].push(i);
        }
        Ok(Self {
            n,
            edges,
            values,
            adj,
        })
    }

    pub fn complete(n: usize, values: Vec<f64>) -> Result<Self> {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, edges, values)
    }

    /// Random connected graph: a random spanning tree plus each remaining
    /// pair with probability `extra_p`.
    pub fn random_connected(n: usize, extra_p: f64, rng: &mut SeededRng) -> Result<Self> {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.index(i + 1));
        }
        let mut present = HashSet::new();
        let mut edges = Vec::new();
        for k in 1..n {
            let (u, v) = (order[k], order[rng.index(k)]);
            present.insert((u.min(v), u.max(v)));
            edges.push((u, v));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !present.contains(&(i, j)) && rng.uniform() < extra_p {
                    edges.push((i, j));
                }
            }
        }
        let values = (0..n).map(|_| rng.normal()).collect();
        Self::new(n, edges, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }
    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    pub fn laplacian(&self) -> Mat {
        let mut l = Mat::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
        }
        l
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n as f64
    }

    fn require_connected(&self) -> Result<()> {
        if self.n < 2 || !self.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(())
    }
}

/// Parse the edge-list format: a header `n m`, then `m` lines `i j`
/// (1-based), then `n` node values. Blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let eof = |what: &str| Error::Parse {
        line: text.lines().count() + 1,
        msg: format!("unexpected end of input, expected {what}"),
    };
    let (ln, header) = lines.next().ok_or_else(|| eof("header"))?;
    let nums = parse_ints(ln, header, 2)?;
    let (n, m) = (nums[0], nums[1]);
    if n == 0 {
        return Err(Error::Parse {
            line: ln,
            msg: "node count must be positive".into(),
        });
    }
    let mut edges = Vec::with_capacity(m.min(1 << 20));
    for _ in 0..m {
        let (ln, l) = lines.next().ok_or_else(|| eof("edge"))?;
        let ij = parse_ints(ln, l, 2)?;
        if ij[0] == 0 || ij[1] == 0 || ij[0] > n || ij[1] > n {
            return Err(Error::Parse {
                line: ln,
                msg: format!("node index out of range 1..={n}"),
            });
        }
        edges.push((ij[0] - 1, ij[1] - 1));
    }
    let mut values = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let (ln, l) = lines.next().ok_or_else(|| eof("node value"))?;
        let v: f64 = l.parse().map_err(|_| Error::Parse {
            line: ln,
            msg: format!("bad value '{l}'"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: ln,
                msg: "value must be finite".into(),
            });
        }
        values.push(v);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            msg: "trailing content".into(),
        });
    }
    Graph::new(n, edges, values).map_err(|e| Error::Parse {
        line: ln,
        msg: e.to_string(),
    })
}

fn parse_ints(line: usize, text: &str, count: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != count {
        return Err(Error::Parse {
            line,
            msg: format!("expected {count} integers"),
        });
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad integer '{p}'"),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Model 1: one constraint `x_i = x_j` per edge.
    EqualNeighbors,
    /// Model 2: one constraint per node, `x_i` equals its neighbours' mean.
    AverageNeighbors,
}

pub fn build_constraints(g: &Graph, model: Model) -> Result<Mat> {
    g.require_connected()?;
    Ok(match model {
        Model::EqualNeighbors => {
            let mut a = Mat::zeros(g.edges.len(), g.n);
            for (e, &(i, j)) in g.edges.iter().enumerate() {
                a[(e, i)] = 1.0;
                a[(e, j)] = -1.0;
            }
            a
        }
        Model::AverageNeighbors => {
            let mut a = Mat::zeros(g.n, g.n);
            for i in 0..g.n {
                a[(i, i)] = 1.0;
                let d = g.degree(i) as f64;
                for &j in g.neighbors(i) {
                    a[(i, j)] = -1.0 / d;
                }
            }
            a
        }
    })
}

/// Sketch distribution over constraint rows: uniform edges for Model 1,
/// row-norm (convenient) probabilities `∝ 1 + 1/d_i` for Model 2.
pub fn model_sampling(g: &Graph, model: Model) -> Result<Sampling> {
    g.require_connected()?;
    match model {
        Model::EqualNeighbors => Ok(Sampling::coordinate_uniform(g.edges.len())),
        Model::AverageNeighbors => {
            let w: Vec<f64> = (0..g.n).map(|i| 1.0 + 1.0 / g.degree(i) as f64).collect();
            Sampling::coordinate_weighted(&w)
        }
    }
}

/// One gossip update for the selected edge (Model 1) or node (Model 2).
pub fn gossip_step(g: &Graph, model: Model, x: &[f64], selected: usize) -> Result<Vec<f64>> {
    Ok(gossip_step_dual(g, model, x, selected)?.0)
}

/// Gossip update together with the increment of the selected dual weight.
fn gossip_step_dual(
    g: &Graph,
    model: Model,
    x: &[f64],
    selected: usize,
) -> Result<(Vec<f64>, f64)> {
    if x.len() != g.n {
        return Err(Error::BadSelection(format!(
            "state has {} entries, graph has {} nodes",
            x.len(),
            g.n
        )));
    }
    let mut out = x.to_vec();
    match model {
        Model::EqualNeighbors => {
            let &(i, j) = g
                .edges
                .get(selected)
                .ok_or_else(|| Error::BadSelection(format!("edge {selected}")))?;
            let avg = 0.5 * (x[i] + x[j]);
            out[i] = avg;
            out[j] = avg;
            Ok((out, -(x[i] - x[j]) / 2.0))
        }
        Model::AverageNeighbors => {
            if selected >= g.n {
                return Err(Error::BadSelection(format!("node {selected}")));
            }
            let nb = g.neighbors(selected);
            if nb.is_empty() {
                return Err(Error::BadSelection(format!("node {selected} is isolated")));
            }
            let d = nb.len() as f64;
            let nsum: f64 = nb.iter().map(|&j| x[j]).sum();
            let excess = x[selected] - nsum / d;
            out[selected] = (x[selected] + nsum) / (d + 1.0);
            for &j in nb {
                out[j] = x[j] + excess / (d + 1.0);
            }
            Ok((out, -excess / (1.0 + 1.0 / d)))
        }
    }
}

/// Theoretical rate. Model 1: `1 − λ⁺min(L)/(2m)`; Model 2:
/// `1 − λ⁺min(AᵀA)/‖A‖²_F`.
pub fn gossip_rate(g: &Graph, model: Model) -> Result<f64> {
    g.require_connected()?;
    match model {
        Model::EqualNeighbors => {
            Ok(1.0 - lambda_min_positive(&g.laplacian()) / (2.0 * g.edges.len() as f64))
        }
        Model::AverageNeighbors => {
            let a = build_constraints(g, model)?;
            Ok(1.0 - lambda_min_positive(&(a.transpose() * &a)) / a.norm_squared())
        }
    }
}

/// Rate from the general SDA certificate on the induced constraint system.
pub fn gossip_rate_certificate(g: &Graph, model: Model) -> Result<f64> {
    let a = build_constraints(g, model)?;
    let s = model_sampling(g, model)?;
    Ok(rate_certificate(&s, &a, &Weight::identity(g.n), RateKind::Sda)?.rho)
}

#[derive(Debug, Clone)]
pub struct ConsensusRun {
    pub model: Model,
    /// `(iteration, node values)`; every iterate up to [`TRACE_FULL_LIMIT`],
    /// then every [`TRACE_STRIDE`]-th plus the last.
    pub trace: Vec<(usize, Vec<f64>)>,
    pub report: ConvergenceReport,
    /// Dual weights, one per constraint row; `x = c + Aᵀy` throughout.
    pub dual: Vec<f64>,
    pub values: Vec<f64>,
}

/// Run gossip from `x⁰ = c` until `‖x − mean·1‖₂ ≤ tol`.
pub fn run_consensus(
    g: &Graph,
    model: Model,
    rng: &mut SeededRng,
    tol: f64,
    max_iters: usize,
) -> Result<ConsensusRun> {
    let sampling = model_sampling(g, model)?;
    let rows = match model {
        Model::EqualNeighbors => g.edges.len(),
        Model::AverageNeighbors => g.n,
    };
    let dist = match &sampling {
        Sampling::CoordinateUniform(m) => Categorical::uniform(*m)?,
        Sampling::CoordinateConvenient { dist, .. } => dist.clone(),
        _ => unreachable!("gossip samplings are coordinate samplings"),
    };
    let mean = g.mean();
    let dist_to_mean = |x: &[f64]| {
        x.iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            .sqrt()
    };
    let mut x = g.values.clone();
    let mut dual = vec![0.0; rows];
    let mut rec = Recorder::new(usize::MAX);
    let mut trace = vec![(0, x.clone())];
    rec.push(0, dist_to_mean(&x), None);
    let mut status = Status::MaxIters;
    let mut last = 0;
    if dist_to_mean(&x) <= tol {
        status = Status::Converged;
    } else {
        for k in 1..=max_iters {
            let sel = dist.draw(rng);
            let (next, dy) = gossip_step_dual(g, model, &x, sel)?;
            x = next;
            dual[sel] += dy;
            rec.add_flops(match model {
                Model::EqualNeighbors => 3.0,
                Model::AverageNeighbors => 3.0 * (g.degree(sel) as f64 + 1.0),
            });
            let res = dist_to_mean(&x);
            rec.push(k, res, None);
            last = k;
            if k <= TRACE_FULL_LIMIT || k % TRACE_STRIDE == 0 {
                trace.push((k, x.clone()));
            }
            if res <= tol {
                status = Status::Converged;
                break;
            }
        }
        if trace.last().map(|t| t.0) != Some(last) {
            trace.push((last, x.clone()));
        }
    }
    Ok(ConsensusRun {
        model,
        trace,
        report: rec.finish(status),
        dual,
        values: x,
    })
}
