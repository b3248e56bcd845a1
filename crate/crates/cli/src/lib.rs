//! Experiment configuration, presets and the run dispatcher behind the
//! `driftlab` binary. The binary is a thin argument parser; everything it
//! does goes through [`config::ExperimentConfig`] and [`runner::execute`],
//! so runs are scriptable and testable in-process.

pub mod config;
pub mod manifest;
pub mod presets;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, Format, Mode};
pub use manifest::RunManifest;
pub use runner::{execute, RunError};

/// Evaluate `f` over `0..n` on up to `jobs` worker threads. Results are
/// returned in index order, so output content never depends on the number
/// of workers or their scheduling.
pub fn parallel_map<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.max(1).min(n.max(1));
    if jobs <= 1 {
        return (0..n).map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut gathered: Vec<(usize, T)> = Vec::with_capacity(n);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                let next = &next;
                let f = &f;
                scope.spawn(move || {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= n {
                            break;
                        }
                        local.push((i, f(i)));
                    }
                    local
                })
            })
            .collect();
        for h in handles {
            gathered.extend(h.join().expect("worker thread panicked"));
        }
    });
    gathered.sort_by_key(|(i, _)| *i);
    gathered.into_iter().map(|(_, v)| v).collect()
}

#[cfg(test)]
mod tests {
    use super::parallel_map;

    #[test]
    fn parallel_map_preserves_order() {
        for jobs in [1, 2, 4, 9] {
            let out = parallel_map(100, jobs, |i| i * i);
            assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn parallel_map_handles_empty() {
        let out: Vec<usize> = parallel_map(0, 4, |i| i);
        assert!(out.is_empty());
    }
}
