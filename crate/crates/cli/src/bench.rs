//! Solve time as a function of dimension.

use std::path::PathBuf;
use std::time::Instant;

use log::info;
use spice::estimators::{sample_covariance, spice_from_covariance};
use spice::rng::derive_seed;
use spice::simulation::{build_model, sample_mvn, ModelSpec};

use crate::config::FitSettings;
use crate::io::write_rows;
use crate::UsageError;

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub p_list: Vec<usize>,
    pub n: usize,
    pub lambda: f64,
    /// Each size is solved this many times and the fastest run is kept.
    pub repeats: usize,
    pub fit: FitSettings,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub p: usize,
    pub seconds: f64,
    pub outer_iters: usize,
}

/// Times the fit on AR(4) data at each `p` and writes `timing.csv`.
pub fn run_bench(args: &BenchArgs) -> anyhow::Result<Vec<Timing>> {
    if args.p_list.is_empty() || args.p_list.iter().any(|&p| p < 2) {
        return Err(UsageError("p list must be non-empty with every p >= 2".into()).into());
    }
    if args.repeats == 0 {
        return Err(UsageError("repeats must be at least 1".into()).into());
    }
    let pen = args.fit.penalty(args.lambda)?;
    let mut timings = Vec::new();
    for &p in &args.p_list {
        let truth = build_model(&ModelSpec::omega2(p))?;
        let x = sample_mvn(&truth, args.n, derive_seed(args.seed, p as u64))?;
        let s = sample_covariance(&x)?;
        let mut best = f64::INFINITY;
        let mut outer_iters = 0;
        for _ in 0..args.repeats {
            let start = Instant::now();
            let r = spice_from_covariance(&s, args.fit.mode, &pen, &args.fit.solver)?;
            best = best.min(start.elapsed().as_secs_f64());
            outer_iters = r.outer_iters;
        }
        info!("p={p}: {best:.4} s, {outer_iters} outer iterations");
        timings.push(Timing {
            p,
            seconds: best,
            outer_iters,
        });
    }
    std::fs::create_dir_all(&args.out)?;
    let rows: Vec<Vec<String>> = timings
        .iter()
        .map(|t| vec![t.p.to_string(), t.seconds.to_string(), t.outer_iters.to_string()])
        .collect();
    write_rows(&args.out.join("timing.csv"), &["p", "seconds", "outer_iters"], &rows)?;
    Ok(timings)
}
