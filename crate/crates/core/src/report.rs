//! Per-iteration convergence traces shared by every iterative method.

use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub iter: usize,
    pub residual: f64,
    pub error: Option<f64>,
    pub flops: f64,
    pub elapsed_s: f64,
}

/// Named auxiliary series (duality gap, suboptimalities, ...), sampled at
/// arbitrary iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub name: String,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub records: Vec<Record>,
    pub tracks: Vec<Track>,
    pub status: Status,
}

impl ConvergenceReport {
    pub fn last(&self) -> &Record {
        self.records
            .last()
            .expect("report always holds the initial record")
    }

    pub fn iterations(&self) -> usize {
        self.last().iter
    }

    pub fn track(&self, name: &str) -> Option<&Track> {
        self.tracks.iter().find(|t| t.name == name)
    }
}

/// Incremental builder used inside solver loops.
#[derive(Debug)]
pub(crate) struct Recorder {
    start: Instant,
    records: Vec<Record>,
    tracks: Vec<Track>,
    flops: f64,
    best: f64,
    since_best: usize,
    stall_window: usize,
}

impl Recorder {
    pub fn new(stall_window: usize) -> Self {
        Self {
            start: Instant::now(),
            records: Vec::new(),
            tracks: Vec::new(),
            flops: 0.0,
            best: f64::INFINITY,
            since_best: 0,
            stall_window: stall_window.max(1),
        }
    }

    pub fn add_flops(&mut self, f: f64) {
        self.flops += f;
    }

    pub fn push(&mut self, iter: usize, residual: f64, error: Option<f64>) {
        if residual < self.best * (1.0 - 1e-14) {
            self.best = residual;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        self.records.push(Record {
            iter,
            residual,
            error,
            flops: self.flops,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        });
    }

    pub fn stalled(&self) -> bool {
        self.since_best >= self.stall_window
    }

    pub fn track(&mut self, name: &str, iter: usize, value: f64) {
        match self.tracks.iter_mut().find(|t| t.name == name) {
            Some(t) => t.points.push((iter, value)),
            None => self.tracks.push(Track {
                name: name.to_string(),
                points: vec![(iter, value)],
            }),
        }
    }

    pub fn finish(self, status: Status) -> ConvergenceReport {
        ConvergenceReport {
            records: self.records,
            tracks: self.tracks,
            status,
        }
    }
}
