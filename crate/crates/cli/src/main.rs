use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use zeta_recurrence::complexfn::TargetPair;
use zeta_recurrence::dioph::{candidates_csv, find_tau_lattice, scan_tau, PhaseTarget};
use zeta_recurrence::eulerfit::greedy_fit;
use zeta_recurrence::recurrence::{
    density_report, fmt_real, joint_search, parse_report_csv, report_csv, report_json, self_approx_scan, ReportRow,
    ScanResult,
};
use zeta_recurrence::zetaeval::{zeta, MIN_TARGET};
use zeta_recurrence::Complex64;

use zeta_recurrence_cli::config::{RawConfig, RunMode};
use zeta_recurrence_cli::output::{fit_series, hits_csv, series, sha256_hex, write, Manifest};

#[derive(Parser)]
#[command(name = "zrec", version, about = "Joint universality and self-approximation experiments for zeta")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// INI config with [run], [domain], [targets], [fit], [search]
    config: PathBuf,
    /// Key overrides: --key value, --key=value or --section.key value
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in the config
    Run(RunArgs),
    /// Fit a finite Euler product to the target pair
    Fit(RunArgs),
    /// Lattice search for shifts matching prescribed prime phases
    FindTau(RunArgs),
    /// Self-approximation scan (mode = self) or phase-density scan
    Scan(RunArgs),
    /// Joint approximation search with certification
    Joint(RunArgs),
    /// Compare zeta against an oracle table
    Verify(RunArgs),
    /// Collect scan.json files (or run directories) into a density report
    Report {
        inputs: Vec<PathBuf>,
        /// Directory for report.csv and report.json; CSV goes to stdout otherwise
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (name, args, forced) = match cli.command {
        Command::Report { inputs, out } => return report(&inputs, out.as_deref()),
        Command::Run(a) => ("run", a, None),
        Command::Fit(a) => ("fit", a, Some(RunMode::FitOnly)),
        Command::FindTau(a) => ("find-tau", a, Some(RunMode::FindTau)),
        Command::Scan(a) => ("scan", a, Some(RunMode::ScanPhases)),
        Command::Joint(a) => ("joint", a, Some(RunMode::Joint)),
        Command::Verify(a) => ("verify", a, Some(RunMode::Verify)),
    };
    let file_text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let mut cfg = RawConfig::parse(&file_text)?;
    cfg.apply_overrides(&args.overrides)?;
    if let Some(m) = forced {
        let keep_self = name == "scan" && cfg.mode().ok() == Some(RunMode::SelfApprox);
        if !keep_self {
            cfg.set("mode", m.as_str())?;
        }
    }
    execute(name, &cfg, Some((&args.config, &file_text)))
}

fn execute(command: &str, cfg: &RawConfig, source: Option<(&Path, &str)>) -> Result<()> {
    let mode = cfg.mode()?;
    let seed: u64 = cfg.get_or("seed", 0)?;
    let workers: usize = cfg.get_or("workers", 0)?;
    if workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().context("cannot size the worker pool")?;
    }
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let mut manifest = Manifest {
        tool: "zrec",
        version: env!("CARGO_PKG_VERSION"),
        library_version: zeta_recurrence::VERSION,
        command: command.to_string(),
        mode: mode.as_str().to_string(),
        config_path: source.map(|(p, _)| p.display().to_string()),
        config_file_sha256: source.map(|(_, t)| sha256_hex(t.as_bytes())),
        config_sha256: sha256_hex(cfg.canonical().as_bytes()),
        config: cfg.entries().clone(),
        seed,
        workers: rayon::current_num_threads(),
        status: "running".into(),
        wall_time_s: None,
        outputs: Vec::new(),
        error: None,
    };
    manifest.save(&dir)?;

    let start = Instant::now();
    let result = dispatch(mode, cfg, &dir);
    manifest.wall_time_s = Some(start.elapsed().as_secs_f64());
    match &result {
        Ok(files) => {
            manifest.status = "completed".into();
            manifest.outputs = files.iter().map(|p| p.display().to_string()).collect();
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(format!("{e:#}"));
        }
    }
    manifest.save(&dir)?;
    result.map(|_| ())
}

fn dispatch(mode: RunMode, cfg: &RawConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    match mode {
        RunMode::Joint => run_joint(cfg, dir),
        RunMode::SelfApprox => run_self(cfg, dir),
        RunMode::ScanPhases => run_phase_scan(cfg, dir),
        RunMode::FitOnly => run_fit(cfg, dir),
        RunMode::FindTau => run_find_tau(cfg, dir),
        RunMode::Verify => run_verify(cfg, dir),
    }
}

fn scan_outputs(r: &ScanResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = density_report(std::slice::from_ref(r))?;
    println!(
        "{} scan: {} hits in {} samples, density {}",
        r.mode.as_str(),
        r.hits,
        r.samples,
        fmt_real(r.density)
    );
    if let Some(b) = r.best.first() {
        println!("best tau {} with sup error {}", fmt_real(b.tau), fmt_real(b.error));
    }
    Ok(vec![
        write(dir, "scan.csv", &report_csv(&rows))?,
        write(dir, "scan.json", &(r.to_json()? + "\n"))?,
        write(dir, "hits.csv", &hits_csv(&r.best))?,
        write(dir, "trace.dat", &series(["tau", "E"], &r.trace))?,
    ])
}

fn run_joint(cfg: &RawConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = cfg.experiment(RunMode::Joint)?;
    let out = joint_search(&spec)?;
    let mut files = scan_outputs(&out.result, dir)?;
    files.push(write(dir, "fit.json", &(out.fit.record().to_json()? + "\n"))?);
    files.push(write(dir, "fit_history.dat", &fit_series(&out.fit.history))?);
    Ok(files)
}

fn run_self(cfg: &RawConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = cfg.experiment(RunMode::SelfApprox)?;
    scan_outputs(&self_approx_scan(&spec)?, dir)
}

fn run_fit(cfg: &RawConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let domain = cfg.domain()?;
    let (a, b, f_a, f_b) = cfg.joint_targets()?;
    let fit = cfg.fit_config(cfg.get("epsilon")?)?;
    let targets = TargetPair::new(&domain, a, b, f_a, f_b)?;
    let state = greedy_fit(&targets, &domain, &fit)?;
    let record = state.record();
    println!(
        "fit: {} primes, residual norm {}, sup {}, success {}",
        record.primes.len(),
        fmt_real(record.residual_norm),
        fmt_real(record.sup_residual),
        record.success
    );
    Ok(vec![
        write(dir, "targets.json", &(serde_json::to_string_pretty(&targets.export(&domain))? + "\n"))?,
        write(dir, "fit.json", &(record.to_json()? + "\n"))?,
        write(dir, "fit_history.dat", &fit_series(&state.history))?,
    ])
}

fn phase_target(cfg: &RawConfig) -> Result<PhaseTarget> {
    let primes: Vec<u64> = cfg.list("primes")?.ok_or_else(|| anyhow!("missing required key `primes`"))?;
    let theta: Vec<f64> = cfg.list("theta")?.ok_or_else(|| anyhow!("missing required key `theta`"))?;
    let delta: f64 = cfg.require("delta")?;
    PhaseTarget::new(primes, theta, delta).map_err(|e| anyhow!("invalid keys `primes`, `theta`, `delta`: {e}"))
}

fn run_phase_scan(cfg: &RawConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let target = phase_target(cfg)?;
    let t_max: f64 = cfg.require("T")?;
    let step: f64 = cfg.require("tau_step")?;
    let scan = scan_tau(&target, t_max, step)?;
    let join = |v: Vec<String>| v.join(" ");
    let summary = format!(
        "primes,theta,delta,T,step,samples,hits,density,box_measure\n{},{},{},{},{},{},{},{},{}\n",
        join(target.primes().iter().map(u64::to_string).collect()),
        join(target.theta().iter().map(|&x| fmt_real(x)).collect()),
        fmt_real(target.delta()),
        fmt_real(t_max),
        fmt_real(step),
        scan.samples,
        scan.hits,
        fmt_real(scan.density),
        fmt_real(target.box_measure()),
    );
    println!("phase scan: {} hits in {} samples, density {}", scan.hits, scan.samples, fmt_real(scan.density));
    Ok(vec![write(dir, "phase_scan.csv", &summary)?, write(dir, "candidates.csv", &candidates_csv(&scan.candidates))?])
}

fn run_find_tau(cfg: &RawConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let target = phase_target(cfg)?;
    let tau_max: f64 = cfg.get_or("tau_max", 1e8)?;
    let cands = find_tau_lattice(&target, tau_max)?;
    println!("lattice search: {} verified candidates up to tau = {}", cands.len(), fmt_real(tau_max));
    Ok(vec![write(dir, "candidates.csv", &candidates_csv(&cands))?])
}

fn run_verify(cfg: &RawConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let path = cfg.oracle_table().ok_or_else(|| anyhow!("verify mode needs key `oracle_table`"))?;
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read oracle table {}", path.display()))?;
    let tol: f64 = cfg.get_or("verify_tol", 1e-10)?;
    let mut csv = String::from("sigma,t,re,im,ref_re,ref_im,deviation,error_bound\n");
    let mut worst = 0.0f64;
    let mut rows = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}:{}: bad number", path.display(), i + 1))?;
        if v.len() != 4 {
            bail!("{}:{}: expected `sigma t re_zeta im_zeta`", path.display(), i + 1);
        }
        let z = zeta(Complex64::new(v[0], v[1]), (tol / 10.0).max(MIN_TARGET))?;
        let dev = (z.value - Complex64::new(v[2], v[3])).norm();
        worst = worst.max(dev);
        rows += 1;
        let cols = [v[0], v[1], z.value.re, z.value.im, v[2], v[3], dev, z.error_bound];
        csv += &cols.iter().map(|&x| fmt_real(x)).collect::<Vec<_>>().join(",");
        csv.push('\n');
    }
    if rows == 0 {
        bail!("oracle table {} has no rows", path.display());
    }
    let file = write(dir, "verify.csv", &csv)?;
    println!("verify: {rows} rows, max deviation {}", fmt_real(worst));
    if worst > tol {
        bail!("max deviation {} exceeds tolerance {}", fmt_real(worst), fmt_real(tol));
    }
    Ok(vec![file])
}

fn report(inputs: &[PathBuf], out: Option<&Path>) -> Result<()> {
    if inputs.is_empty() {
        bail!("report needs at least one scan.json, scan.csv or run directory");
    }
    let mut rows: Vec<ReportRow> = Vec::new();
    for p in inputs {
        let p = if p.is_dir() { p.join("scan.json") } else { p.clone() };
        let text = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
        if p.extension().is_some_and(|e| e == "csv") {
            rows.extend(parse_report_csv(&text)?);
        } else {
            let r = ScanResult::from_json(&text).with_context(|| format!("in {}", p.display()))?;
            rows.extend(density_report(&[r])?);
        }
    }
    let csv = report_csv(&rows);
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write(dir, "report.csv", &csv)?;
            write(dir, "report.json", &(report_json(&rows)? + "\n"))?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}
