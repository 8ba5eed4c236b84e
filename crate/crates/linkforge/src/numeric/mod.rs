//! Constraint solving, configuration sampling and verification.

pub mod reduce;
pub mod sampling;
pub mod solver;
pub mod verify;

pub use sampling::{count_preimages, preimages, sample_configs, sample_configs_with, trace, SampleError, Samples, StartFn, Trace, TraceError, CLUSTER_TOL};
pub use solver::{residual_jacobian, restart_balls, solve_realization, SolveError, SolveOptions, System};
pub use verify::{anchor_span, verify_functional, verify_invariance, Failure, VerifyReport};

/// Map `f` over `range` on all cores; results come back in index order.
pub(crate) fn par_map<T: Send>(range: std::ops::Range<usize>, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let len = range.len();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(len.max(1));
    if threads <= 1 || len < 2 {
        return range.map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let start = range.start;
    let mut slots: Vec<Option<T>> = (0..len).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= len {
                            break;
                        }
                        out.push((i, f(start + i)));
                    }
                    out
                })
            })
            .collect();
        for h in handles {
            for (i, v) in h.join().expect("worker panicked") {
                slots[i] = Some(v);
            }
        }
    });
    slots.into_iter().map(|v| v.expect("every index ran")).collect()
}
