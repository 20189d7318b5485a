use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geomcert::geodesy::{self, PolarOptions};
use geomcert::kleinian::{self, ExponentMethod};
use geomcert::tensorcore::ModelMetric;
use geomcert_cli::config::{Config, EstimateConfig, Format, Suite};
use geomcert_cli::report::fmt_float;
use geomcert_cli::suites::build_group;
use serde_json::json;

#[derive(Parser)]
#[command(name = "geomcert", version, about = "Numerical certificates for curvature identities")]
struct Cli {
    /// Worker threads; defaults to GEOMCERT_THREADS or the core count.
    #[arg(long, global = true, env = "GEOMCERT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite or `all` and write a report.
    Verify {
        /// Suite name or `all`.
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Fewer sample points, no S⁶ integral.
        #[arg(long)]
        fast: bool,
        /// Report file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Critical-exponent and limit-set tools.
    Kleinian {
        #[command(subcommand)]
        command: KleinianCommand,
    },
    /// Volume-expansion tables.
    Expansion {
        #[command(subcommand)]
        command: ExpansionCommand,
    },
}

#[derive(Subcommand)]
enum KleinianCommand {
    /// Estimate the critical exponent and box dimension of a group.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Write the limit-set sample as CSV.
        #[arg(long)]
        limit_csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExpansionCommand {
    /// Ball volume against the curvature expansion, one CSV row per radius.
    Table {
        /// Model metric, e.g. `sphere_polar(4,1)`.
        #[arg(long)]
        metric: String,
        /// Comma-separated radii.
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        /// Comma-separated base point; defaults to the domain midpoint.
        #[arg(long, value_delimiter = ',')]
        point: Option<Vec<f64>>,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn open_out(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn verify(suite: &str, config: Option<PathBuf>, fast: bool, out: Option<PathBuf>, format: Option<Format>) -> ExitCode {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        match suite.parse() {
            Ok(s) => vec![s],
            Err(e) => return fail(2, e),
        }
    };
    let cfg = match config {
        Some(p) => match Config::load(&p) {
            Ok(c) => c,
            Err(e) => return fail(2, e),
        },
        None => Config::default(),
    };
    let report = geomcert_cli::run(&suites, &cfg, fast);
    let format = format.or(cfg.format).unwrap_or_default();
    let out = out.or(cfg.output.clone());
    let written = open_out(out.as_ref()).and_then(|mut w| {
        report.write(format, &mut w)?;
        w.flush()
    });
    if let Err(e) = written {
        return fail(2, e);
    }
    for s in &report.summaries {
        eprintln!("{}: {}/{} passed", s.suite, s.passed, s.checks);
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {} computed {} expected {}", c.id, fmt_float(c.computed), fmt_float(c.expected));
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn estimate(config: PathBuf, limit_csv: Option<PathBuf>) -> ExitCode {
    let cfg = match EstimateConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(2, e),
    };
    let run = || -> Result<serde_json::Value, String> {
        let spec = build_group(&cfg.group).map_err(|e| e.to_string())?;
        let mut out = serde_json::Map::new();
        for (key, m) in [("growth", ExponentMethod::GrowthFit), ("knee", ExponentMethod::SeriesKnee)] {
            let v = match kleinian::critical_exponent_estimate(&spec, m) {
                Ok(e) => json!({"delta": e.delta, "uncertainty": e.uncertainty, "orbit_size": e.orbit_size}),
                Err(e) => json!({"error": e.to_string()}),
            };
            out.insert(key.into(), v);
        }
        if cfg.limit_points > 0 {
            let ls = kleinian::limit_set_sample(&spec, cfg.limit_word_length, cfg.limit_points, cfg.group.seed)
                .map_err(|e| e.to_string())?;
            let scales = kleinian::scale_ladder(cfg.box_first, cfg.box_ratio, cfg.box_scales);
            let bd = kleinian::box_dimension(&ls.points, &scales).map_err(|e| e.to_string())?;
            out.insert(
                "box".into(),
                json!({"dimension": bd.dimension, "fit_error": bd.fit_error, "elementary": bd.elementary, "counts": bd.counts}),
            );
            out.insert("clusters".into(), json!(kleinian::cluster_count(&ls.points, kleinian::CLUSTER_RADIUS)));
            if let Some(p) = &limit_csv {
                let mut w = csv::Writer::from_path(p).map_err(|e| e.to_string())?;
                let dim = ls.points.first().map_or(0, Vec::len);
                w.write_record((0..dim).map(|i| format!("x{i}"))).map_err(|e| e.to_string())?;
                for pt in &ls.points {
                    w.write_record(pt.iter().map(|v| fmt_float(*v))).map_err(|e| e.to_string())?;
                }
                w.flush().map_err(|e| e.to_string())?;
            }
        }
        Ok(serde_json::Value::Object(out))
    };
    match run() {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(1, e),
    }
}

fn table(metric: &str, radii: &[f64], point: Option<Vec<f64>>) -> ExitCode {
    let chart = match metric.parse::<ModelMetric>().and_then(|m| m.build::<f64>()) {
        Ok(c) => c,
        Err(e) => return fail(2, e),
    };
    let d = chart.domain();
    let x = point.unwrap_or_else(|| {
        (0..d.dim())
            .map(|a| match (d.lower[a].abs() < 1e6, d.upper[a].abs() < 1e6) {
                (true, true) => 0.5 * (d.lower[a] + d.upper[a]),
                (true, false) => d.lower[a] + 1.0,
                (false, true) => d.upper[a] - 1.0,
                (false, false) => 0.0,
            })
            .collect()
    });
    let rows = match geodesy::expansion_compare(&chart, &x, radii, PolarOptions::default()) {
        Ok(r) => r,
        Err(e) => return fail(1, e),
    };
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    let res = (|| -> csv::Result<()> {
        w.write_record(["r", "ball_volume", "gray", "euclidean", "ratio"])?;
        for r in rows {
            w.write_record([r.r, r.ball_volume, r.gray, r.euclidean, r.ratio].map(fmt_float))?;
        }
        w.flush()?;
        Ok(())
    })();
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(1, e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(2, e);
        }
    }
    match cli.command {
        Command::Verify { suite, config, fast, out, format } => verify(&suite, config, fast, out, format),
        Command::Kleinian { command: KleinianCommand::Estimate { config, limit_csv } } => estimate(config, limit_csv),
        Command::Expansion { command: ExpansionCommand::Table { metric, radii, point } } => table(&metric, &radii, point),
    }
}
