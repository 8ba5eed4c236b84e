//! Verification suites for functional linkages and for motion invariance.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::par_map;
use super::sampling::{rng_for, sample_configs_with, SampleError};
use super::solver::SolveOptions;
use crate::gadgets::FunctionalLinkage;
use crate::geom::{EuclideanMotion, Point};
use crate::linkage::Linkage;

/// Above this many sheet bits, sheets are sampled instead of enumerated.
pub const ENUMERATE_BITS: u32 = 10;
/// Sheets drawn per point when not enumerating.
pub const SHEET_SAMPLES: usize = 16;
const MAX_FAILURES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// Sample index (domain point or motion trial).
    pub index: usize,
    pub input: Vec<Vec<f64>>,
    pub sheet: Option<u64>,
    pub residual: f64,
    pub error: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub sheets_checked: usize,
    pub max_output_error: f64,
    pub max_residual: f64,
    pub failures: Vec<Failure>,
    pub pass: bool,
}

impl VerifyReport {
    fn finish(samples: usize, sheets_checked: usize, rows: Vec<Failure>, tol: f64) -> Self {
        let max_output_error = rows.iter().map(|r| r.error).fold(0.0, f64::max);
        let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
        let failures: Vec<Failure> = rows
            .into_iter()
            .filter(|r| r.note.is_some() || !(r.error < tol && r.residual < tol))
            .take(MAX_FAILURES)
            .collect();
        let pass = failures.is_empty() && max_output_error < tol && max_residual < tol;
        Self { samples, sheets_checked, max_output_error, max_residual, failures, pass }
    }
}

fn to_rows(x: &[Point]) -> Vec<Vec<f64>> {
    x.iter().map(|p| p.as_slice().to_vec()).collect()
}

/// Sheets to check at one point: all of them, or a seeded sample.
fn sheet_list<R: Rng>(bits: u32, rng: &mut R) -> Vec<u64> {
    if bits <= ENUMERATE_BITS {
        (0..1u64 << bits).collect()
    } else {
        let mut v = vec![0];
        for _ in 1..SHEET_SAMPLES {
            let s: u64 = if bits >= 64 { rng.gen() } else { rng.gen_range(0..1u64 << bits) };
            v.push(s);
        }
        v
    }
}

/// Forward-solve `f` at `samples` random domain points on every sheet and
/// compare outputs against `oracle`.
pub fn verify_functional(
    f: &FunctionalLinkage,
    oracle: &(dyn Fn(&[Point]) -> Vec<Point> + Sync),
    samples: usize,
    tol: f64,
    seed: u64,
) -> VerifyReport {
    let rows = par_map(0..samples, |i| {
        let mut rng = rng_for(seed, i as u64);
        let Some(x) = f.sample_domain(&mut rng) else {
            return vec![Failure {
                index: i,
                input: Vec::new(),
                sheet: None,
                residual: f64::INFINITY,
                error: f64::INFINITY,
                note: Some("domain could not be sampled".into()),
            }];
        };
        let want = oracle(&x);
        let sheets = sheet_list(f.sheet_bits(), &mut rng);
        sheets
            .into_iter()
            .map(|s| match f.forward(&x, s) {
                Ok(phi) => {
                    let residual = f.linkage.max_residual(&phi).unwrap_or(f64::INFINITY);
                    let error = match phi.restrict(&f.outputs) {
                        Ok(y) if y.len() == want.len() => y.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
                        _ => f64::INFINITY,
                    };
                    Failure { index: i, input: to_rows(&x), sheet: Some(s), residual, error, note: None }
                }
                Err(e) => Failure {
                    index: i,
                    input: to_rows(&x),
                    sheet: Some(s),
                    residual: f64::INFINITY,
                    error: f64::INFINITY,
                    note: Some(e.to_string()),
                },
            })
            .collect::<Vec<_>>()
    });
    let checked = rows.iter().map(Vec::len).sum();
    VerifyReport::finish(samples, checked, rows.into_iter().flatten().collect(), tol)
}

/// Affine span of the fixed anchors: a base point and orthonormal directions.
pub fn anchor_span(l: &Linkage) -> Option<(Point, Vec<Point>)> {
    let pts: Vec<&Point> = l.fixed().values().collect();
    let base = (*pts.first()?).clone();
    let diffs: Vec<Point> = pts[1..].iter().map(|p| *p - &base).collect();
    Some((base, crate::geom::orthonormal_basis(&diffs, l.dim())))
}

/// Check that motions fixing every anchor carry realizations to realizations.
///
/// Without anchors, one vertex is pinned at the origin for sampling only and
/// the motions range over all of Euc(n).
pub fn verify_invariance(l: &Linkage, trials: usize, tol: f64, seed: u64) -> Result<VerifyReport, SampleError> {
    let n = l.dim();
    let mut pins = BTreeMap::new();
    if l.fixed().is_empty() {
        if let Some(v) = l.vertices().next() {
            pins.insert(v, Point::zeros(n));
        }
    }
    let want = trials.clamp(1, 10);
    let opts = SolveOptions { tol: 1e-11, ..SolveOptions::default() };
    let sampled = sample_configs_with(l, &pins, want, seed, &opts, None)?;
    if sampled.configs.is_empty() {
        let note = sampled.shortfall.unwrap_or_else(|| "no realizations found".into());
        return Ok(VerifyReport::finish(
            0,
            0,
            vec![Failure { index: 0, input: Vec::new(), sheet: None, residual: f64::INFINITY, error: f64::INFINITY, note: Some(note) }],
            tol,
        ));
    }
    let span = anchor_span(l);
    let scale = l.extent().max(1.0);
    let motions: Vec<EuclideanMotion> = (0..trials)
        .map(|i| {
            let mut rng = rng_for(seed ^ 0x6d6f74, i as u64);
            match &span {
                None => EuclideanMotion::random(&mut rng, n, scale),
                Some((b, dirs)) => EuclideanMotion::random_fixing(&mut rng, b, dirs),
            }
        })
        .collect();
    let rows = par_map(0..trials, |i| {
        let phi = &sampled.configs[i % sampled.configs.len()];
        let before = l.max_residual(phi).unwrap_or(f64::INFINITY);
        match phi.apply_motion(&motions[i]).and_then(|m| l.max_residual(&m)) {
            Ok(after) => Failure {
                index: i,
                input: vec![motions[i].translation.as_slice().to_vec()],
                sheet: None,
                residual: after,
                error: (after - before).abs(),
                note: None,
            },
            Err(e) => Failure {
                index: i,
                input: Vec::new(),
                sheet: None,
                residual: f64::INFINITY,
                error: f64::INFINITY,
                note: Some(e.to_string()),
            },
        }
    });
    Ok(VerifyReport::finish(trials, trials, rows, tol))
}
