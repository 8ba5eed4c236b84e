//! Random-restart sampling of configuration spaces, traces and preimage counts.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::par_map;
use super::solver::{restart_balls, SolveError, SolveOptions, System};
use crate::gadgets::{FunctionalLinkage, GadgetError};
use crate::geom::{sample_ball, Point};
use crate::linkage::{Linkage, Realization, VertexId};

/// Produces a starting point for restart `i` (positions for any subset of vertices).
pub type StartFn = dyn Fn(&mut ChaCha8Rng) -> Realization + Send + Sync;

#[derive(Debug, Clone)]
pub struct Samples {
    pub configs: Vec<Realization>,
    pub attempts: usize,
    /// Set when fewer than the requested count were found.
    pub shortfall: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("vertex {0} is not connected to any fixed or pinned vertex; its position is translation invariant")]
    Unanchored(VertexId),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Restart state shared by sampling and preimage counting.
pub(crate) struct Restarter {
    pub sys: System,
    balls: Vec<(Point, f64)>,
    dim: usize,
}

impl Restarter {
    pub fn new(l: &Linkage, pins: &BTreeMap<VertexId, Point>) -> Result<Self, SampleError> {
        let sys = System::new(l, pins)?;
        let all = restart_balls(l, pins);
        let mut balls = Vec::with_capacity(sys.free_vertices().len());
        for &v in sys.free_vertices() {
            balls.push(all.get(&v).cloned().ok_or(SampleError::Unanchored(v))?);
        }
        Ok(Self { sys, balls, dim: l.dim() })
    }

    fn random_start(&self, rng: &mut ChaCha8Rng, hint: Option<&Realization>) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.sys.unknowns());
        for (i, &v) in self.sys.free_vertices().iter().enumerate() {
            match hint.and_then(|h| h.get(v)) {
                Some(p) if p.len() == self.dim => x.extend(p.iter()),
                _ => {
                    let (c, r) = &self.balls[i];
                    x.extend(sample_ball(rng, c, *r).iter());
                }
            }
        }
        x
    }

    pub fn attempt(&self, seed: u64, i: u64, opts: &SolveOptions, start: Option<&StartFn>) -> Option<Realization> {
        let mut rng = rng_for(seed, i);
        let hint = start.map(|f| f(&mut rng));
        let x0 = self.random_start(&mut rng, hint.as_ref());
        let (x, viol, _) = self.sys.descend(x0, opts);
        (viol <= opts.tol).then(|| self.sys.unpack(&x))
    }
}

fn check_anchored(l: &Linkage, pins: &BTreeMap<VertexId, Point>) -> Result<(), SampleError> {
    if l.fixed().is_empty() && pins.is_empty() {
        if let Some(v) = l.vertices().next() {
            return Err(SampleError::Unanchored(v));
        }
    }
    Ok(())
}

/// Up to `count` realizations of `l` from seeded random restarts.
pub fn sample_configs(l: &Linkage, count: usize, seed: u64) -> Result<Samples, SampleError> {
    sample_configs_with(l, &BTreeMap::new(), count, seed, &SolveOptions::default(), None)
}

/// [`sample_configs`] with pins, solver options and an optional start generator.
pub fn sample_configs_with(
    l: &Linkage,
    pins: &BTreeMap<VertexId, Point>,
    count: usize,
    seed: u64,
    opts: &SolveOptions,
    start: Option<&StartFn>,
) -> Result<Samples, SampleError> {
    check_anchored(l, pins)?;
    let rs = Restarter::new(l, pins)?;
    let budget = (count * 10).max(20);
    let batch = (count.max(1) * 2).min(budget);
    let mut configs = Vec::with_capacity(count);
    let mut attempts = 0;
    while configs.len() < count && attempts < budget {
        let hi = (attempts + batch).min(budget);
        let got = par_map(attempts..hi, |i| rs.attempt(seed, i as u64, opts, start));
        for phi in got.into_iter().flatten() {
            if configs.len() < count {
                configs.push(phi);
            }
        }
        attempts = hi;
    }
    let shortfall = (configs.len() < count)
        .then(|| format!("found {} of {} realizations in {} restarts", configs.len(), count, attempts));
    Ok(Samples { configs, attempts, shortfall })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub outputs: Vec<Vec<Vec<f64>>>,
    /// Largest distance between consecutive output tuples.
    pub max_jump: f64,
    /// Whether every jump stayed within the caller's bound.
    pub continuous: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("path point {index} is outside the restricted domain")]
    OutOfDomain { index: usize },
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

/// Outputs of `f` along `path` on a fixed sheet.
pub fn trace(f: &FunctionalLinkage, path: &[Vec<Point>], sheet: u64, jump_bound: f64) -> Result<Trace, TraceError> {
    if let Some(index) = path.iter().position(|x| !f.in_domain(x)) {
        return Err(TraceError::OutOfDomain { index });
    }
    let mut outputs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(path.len());
    let mut max_jump: f64 = 0.0;
    for x in path {
        let phi = f.forward(x, sheet)?;
        let y: Vec<Vec<f64>> = f.outputs.iter().map(|&v| phi.get(v).expect("placed").as_slice().to_vec()).collect();
        if let Some(prev) = outputs.last() {
            let jump = prev
                .iter()
                .flatten()
                .zip(y.iter().flatten())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            max_jump = max_jump.max(jump);
        }
        outputs.push(y);
    }
    Ok(Trace { outputs, max_jump, continuous: max_jump <= jump_bound })
}

/// Default clustering distance for [`count_preimages`].
pub const CLUSTER_TOL: f64 = 1e-4;

/// Distinct realizations over the parameter tuple `x`, found from `restarts` random starts.
pub fn count_preimages(f: &FunctionalLinkage, x: &[Point], restarts: usize, cluster_tol: f64, seed: u64) -> Result<usize, SampleError> {
    Ok(preimages(f, x, restarts, cluster_tol, seed)?.len())
}

/// Cluster representatives behind [`count_preimages`], sorted lexicographically.
pub fn preimages(
    f: &FunctionalLinkage,
    x: &[Point],
    restarts: usize,
    cluster_tol: f64,
    seed: u64,
) -> Result<Vec<Realization>, SampleError> {
    let pins: BTreeMap<VertexId, Point> = f.parameter_vertices().iter().cloned().zip(x.iter().cloned()).collect();
    let rs = Restarter::new(&f.linkage, &pins)?;
    let opts = SolveOptions { tol: 1e-10, max_iter: 400, ..SolveOptions::default() };
    let found = par_map(0..restarts, |i| rs.attempt(seed, i as u64, &opts, None));
    let mut reps: Vec<(Vec<f64>, Realization)> = Vec::new();
    for phi in found.into_iter().flatten() {
        if !reps.iter().any(|(_, r)| r.max_deviation(&phi) < cluster_tol) {
            reps.push((rs.sys.pack(&phi), phi));
        }
    }
    reps.sort_by(|a, b| a.0.iter().zip(&b.0).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(reps.into_iter().map(|(_, r)| r).collect())
}
