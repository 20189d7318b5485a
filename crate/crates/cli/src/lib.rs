//! Verification-suite runner: configuration, suites and reports.

// `!(x > 0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod suites;

use std::collections::BTreeMap;
use std::time::Instant;

use config::{Config, Suite};
use report::{Fingerprint, Report};

/// Runs the suites in order and assembles the report.
pub fn run(suites: &[Suite], cfg: &Config, fast: bool) -> Report {
    let cfg = if fast { cfg.fast() } else { cfg.clone() };
    let mut checks = Vec::new();
    let mut seconds = BTreeMap::new();
    for &s in suites {
        let t = Instant::now();
        checks.extend(suites::run_suite(s, &cfg));
        seconds.insert(s.name().to_string(), t.elapsed().as_secs_f64());
    }
    let fingerprint = Fingerprint {
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        seed: cfg.seed,
        fast,
        suites: suites.iter().map(|s| s.name().to_string()).collect(),
        seconds,
    };
    Report::new(fingerprint, checks)
}
