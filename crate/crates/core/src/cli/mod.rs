//! The `perclab` command line.
//!
//! Exit status: 0 on success, 1 when `--strict` is given and a check is
//! flagged, 2 on usage, configuration or runtime errors.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::events::{outermost_open_circuit, innermost_open_circuit, MarkedPoints};
use crate::experiments::{
    self, cardy_check, coupling_ratio, doubling_csv, doubling_test, enumeration_agreement, fkg_check,
    random_fkg_instance, read_estimates, read_manifest, run_estimates, sig12, thm1_ratio, thm2_ratio, write_estimates,
    CouplingPair, Manifest, RatioRow, RatioTable, SweepConfig, MANIFEST_SCHEMA,
};
use crate::fsutil::{sha256_hex, write_atomic};
use crate::lattice::EMBEDDING_ID;
use crate::percolation::sample_config_with;
use crate::rng::Seed;
use crate::theory;
use config::{Experiment, Overrides, PairName};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "perclab", version, about = "Critical percolation factorization laboratory")]
pub struct Cli {
    /// Worker threads; defaults to PERCLAB_WORKERS or the core count.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Exit with status 1 when any check is flagged.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate constants and predicted limits.
    Theory(TheoryArgs),
    /// Estimate event probabilities from a plan.
    Simulate(SimulateArgs),
    /// Compare the estimates of two runs.
    Compare(CompareArgs),
    /// Check Monte Carlo against exact enumeration on a small region.
    Enumerate(EnumerateArgs),
    /// Open circuit statistics in an annulus.
    Circuits(CircuitsArgs),
    /// Headline ratio sweeps against the predicted limits.
    Sweep(SweepArgs),
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    let re = a.trim().parse::<f64>().map_err(|e| format!("`{a}`: {e}"))?;
    let im = b.trim().parse::<f64>().map_err(|e| format!("`{b}`: {e}"))?;
    Ok(Complex64::new(re, im))
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct TheoryArgs {
    #[arg(long)]
    pub kf: bool,
    #[arg(long)]
    pub k1: bool,
    #[arg(long)]
    pub k2: bool,
    /// ψ(u1, s, u2, w).
    #[arg(long)]
    pub psi: bool,
    /// Strip coordinates (x, y) of w.
    #[arg(long)]
    pub strip: bool,
    /// Interval-to-interval one-arm prediction; needs --s3.
    #[arg(long)]
    pub bi: bool,
    /// Interval one-arm prediction; needs --s3.
    #[arg(long)]
    pub lemma22: bool,
    /// Harmonic measure of [u1, u1+s] from w.
    #[arg(long)]
    pub harmonic: bool,
    #[arg(long)]
    pub u1: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub u2: Option<f64>,
    #[arg(long, value_parser = parse_complex)]
    pub w: Option<Complex64>,
    #[arg(long)]
    pub s3: Option<f64>,
    /// ₂F₁(a, b; c; z).
    #[arg(long, num_args = 4, value_names = ["A", "B", "C", "Z"])]
    pub hyp2f1: Option<Vec<f64>>,
    #[arg(long, value_name = "X")]
    pub gamma: Option<f64>,
    /// Crossing probability between [x1, x2] and [x3, x4].
    #[arg(long, num_args = 4, value_names = ["X1", "X2", "X3", "X4"])]
    pub cardy: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Decimal or 0x-prefixed hex; overrides the config.
    #[arg(long)]
    pub seed: Option<Seed>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Also rerun the first mesh at twice the halfwidth and flag shifts.
    #[arg(long)]
    pub doubling: bool,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<Seed>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Number of randomized FKG-type inequality instances on the same region.
    #[arg(long, default_value_t = 0)]
    pub fkg: u64,
}

#[derive(Args, Debug)]
pub struct CircuitsArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<Seed>,
    #[arg(long)]
    pub n: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<Seed>,
    #[arg(long)]
    pub n: Option<u64>,
}

/// A failed command; reported on stderr with exit status 2.
#[derive(Debug)]
pub struct Failure(pub String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

/// Parse `args` and run; returns the exit status. Output goes to the given
/// writers so the front end can be driven in-process.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let workers = cli.workers.filter(|&w| w > 0).unwrap_or_else(experiments::default_workers);
    let result = match &cli.command {
        Command::Theory(a) => cmd_theory(a, out),
        Command::Simulate(a) => cmd_simulate(a, workers, out, err),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Enumerate(a) => cmd_enumerate(a, workers, out),
        Command::Circuits(a) => cmd_circuits(a, out),
        Command::Sweep(a) => cmd_sweep(a, workers, out),
    };
    match result {
        Ok(false) => EXIT_OK,
        Ok(true) if cli.strict => {
            let _ = writeln!(err, "perclab: flagged checks under --strict");
            EXIT_VIOLATION
        }
        Ok(true) => {
            let _ = writeln!(err, "perclab: some checks were flagged (see output)");
            EXIT_OK
        }
        Err(Failure(msg)) => {
            let _ = writeln!(err, "perclab: {msg}");
            EXIT_USAGE
        }
    }
}

/// `x` with 12 significant digits, as a JSON number.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0.00000000000".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        format!("{x:.*}", (11 - e) as usize)
    } else {
        format!("{x:.11e}")
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, what: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure(format!("{what} needs --{flag}")))
}

fn cmd_theory(a: &TheoryArgs, out: &mut dyn std::io::Write) -> Outcome {
    let mut fields: Vec<(&str, String)> = Vec::new();
    if a.kf {
        fields.push(("K_F", fmt_sig(theory::k_f())));
    }
    if a.k1 {
        fields.push(("K1", fmt_sig(theory::k1())));
    }
    if a.k2 {
        fields.push(("K2", fmt_sig(theory::k2())));
    }
    let interval = |what: &str| -> Result<(f64, f64, Complex64), Failure> {
        Ok((need(a.u1, "u1", what)?, need(a.s, "s", what)?, need(a.w, "w", what)?))
    };
    if a.psi {
        let (u1, s, w) = interval("--psi")?;
        fields.push(("psi", fmt_sig(theory::psi_factor(u1, s, need(a.u2, "u2", "--psi")?, w)?)));
    }
    if a.strip {
        let (u1, s, w) = interval("--strip")?;
        let p = theory::strip_map(u1, s, need(a.u2, "u2", "--strip")?, w)?;
        fields.push(("strip", format!("{{\"x\": {}, \"y\": {}}}", fmt_sig(p.x), fmt_sig(p.y))));
    }
    if a.bi {
        let (u1, s, w) = interval("--bi")?;
        let v = theory::bi_prediction(u1, s, need(a.u2, "u2", "--bi")?, w, need(a.s3, "s3", "--bi")?)?;
        fields.push(("bi", fmt_sig(v)));
    }
    if a.lemma22 {
        let (u1, s, w) = interval("--lemma22")?;
        fields.push(("lemma22", fmt_sig(theory::lemma22_prediction(u1, s, w, need(a.s3, "s3", "--lemma22")?)?)));
    }
    if a.harmonic {
        let (u1, s, w) = interval("--harmonic")?;
        fields.push(("omega", fmt_sig(theory::harmonic_measure(u1, s, w)?)));
    }
    if let Some(v) = &a.hyp2f1 {
        fields.push(("hyp2f1", fmt_sig(theory::hyp2f1(v[0], v[1], v[2], v[3])?)));
    }
    if let Some(x) = a.gamma {
        fields.push(("gamma", fmt_sig(theory::gamma_fn(x)?)));
    }
    if let Some(v) = &a.cardy {
        fields.push(("cardy", fmt_sig(theory::cardy_crossing(v[0], v[1], v[2], v[3])?)));
    }
    if fields.is_empty() {
        return Err(Failure("theory: nothing requested; see `perclab theory --help`".into()));
    }
    let body: Vec<String> = fields.iter().map(|(k, v)| format!("\"{k}\": {v}")).collect();
    writeln!(out, "{{{}}}", body.join(", "))?;
    Ok(false)
}

fn read_config(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn config_errors(errs: Vec<String>) -> Failure {
    let mut msg = format!("{} configuration error(s):", errs.len());
    for e in errs {
        msg.push_str("\n  - ");
        msg.push_str(&e);
    }
    Failure(msg)
}

fn cmd_simulate(a: &SimulateArgs, workers: usize, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> Outcome {
    let text = read_config(&a.config)?;
    let o = Overrides { seed: a.seed, n: a.n };
    let plan = config::parse_plan(&text, &a.config.display().to_string(), &o).map_err(config_errors)?;
    let runs = run_estimates(&plan, workers)?;
    let records: Vec<_> = runs.iter().flat_map(|r| r.records()).collect();
    let hash = write_estimates(&a.out, &plan, &records)?;
    writeln!(out, "{}\t{}", a.out.join("estimates.csv").display(), hash)?;
    let mut flagged = false;
    if a.doubling {
        let rows = doubling_test(&plan, workers)?;
        write_atomic(&a.out.join("doubling.csv"), doubling_csv(&rows)?.as_bytes())?;
        for r in rows.iter().filter(|r| r.flagged) {
            writeln!(err, "doubling shift flagged: {} moved by {}", r.event, sig12(r.shift))?;
            flagged = true;
        }
    }
    Ok(flagged)
}

fn cmd_compare(a: &CompareArgs, out: &mut dyn std::io::Write) -> Outcome {
    let ma = read_manifest(&a.a.join("manifest.json"))?;
    let mb = read_manifest(&a.b.join("manifest.json"))?;
    if ma.embedding != mb.embedding {
        return Err(Failure(format!(
            "refusing to compare runs with different lattice embeddings: `{}` vs `{}`",
            ma.embedding, mb.embedding
        )));
    }
    let ea = read_estimates(&a.a.join("estimates.csv"))?;
    let eb = read_estimates(&a.b.join("estimates.csv"))?;
    let num = |s: &str| s.parse::<f64>().map_err(|e| Failure(format!("bad number `{s}`: {e}")));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["event", "mesh", "mean_a", "ci95_a", "mean_b", "ci95_b", "shift", "flagged"])?;
    let mut flagged = false;
    let mut matched = 0;
    for ra in &ea {
        let Some(rb) = eb.iter().find(|rb| rb.event == ra.event && rb.mesh == ra.mesh) else { continue };
        matched += 1;
        let (ma_, ca, mb_, cb) = (num(&ra.mean)?, num(&ra.ci95)?, num(&rb.mean)?, num(&rb.ci95)?);
        let shift = mb_ - ma_;
        let f = experiments::stats::doubling_flag(shift, ca, cb);
        flagged |= f;
        w.write_record([
            ra.event.as_str(),
            ra.mesh.as_str(),
            ra.mean.as_str(),
            ra.ci95.as_str(),
            rb.mean.as_str(),
            rb.ci95.as_str(),
            &sig12(shift),
            if f { "true" } else { "false" },
        ])?;
    }
    if matched == 0 {
        return Err(Failure("the two runs share no (event, mesh) rows".into()));
    }
    let bytes = w.into_inner().map_err(|e| Failure(e.to_string()))?;
    match &a.out {
        Some(p) => write_atomic(p, &bytes)?,
        None => out.write_all(&bytes)?,
    }
    Ok(flagged)
}

fn cmd_enumerate(a: &EnumerateArgs, workers: usize, out: &mut dyn std::io::Write) -> Outcome {
    let text = read_config(&a.config)?;
    let o = Overrides { seed: a.seed, n: a.n };
    let plan = config::parse_plan(&text, &a.config.display().to_string(), &o).map_err(config_errors)?;
    let rows = enumeration_agreement(&plan, workers)?;
    let mut report = String::from("event,exact,mc,n,z,within_5sigma\n");
    let mut flagged = false;
    for r in &rows {
        let ok = r.within(5.0);
        flagged |= !ok;
        let _ = writeln!(report, "{},{},{},{},{},{ok}", r.event, sig12(r.exact), sig12(r.mc), r.n, sig12(r.z));
    }
    if a.fkg > 0 {
        let region = plan.region.build()?;
        let mut held = 0;
        for k in 0..a.fkg {
            let inst = random_fkg_instance(&region, plan.seed, k);
            let v = fkg_check(&region, &inst.b, &inst.e, &inst.a, &inst.nu)?;
            held += u64::from(v.holds);
        }
        flagged |= held < a.fkg;
        let _ = writeln!(report, "# fkg instances: {held}/{} hold", a.fkg);
    }
    match &a.out {
        Some(p) => write_atomic(p, report.as_bytes())?,
        None => out.write_all(report.as_bytes())?,
    }
    Ok(flagged)
}

fn cmd_circuits(a: &CircuitsArgs, out: &mut dyn std::io::Write) -> Outcome {
    let text = read_config(&a.config)?;
    let o = Overrides { seed: a.seed, n: a.n };
    let c = config::parse_circuits(&text, &a.config.display().to_string(), &o).map_err(config_errors)?;
    let region = c.region.build()?;
    let z = Complex64::new(c.z[0], c.z[1]);
    let (mut exists, mut semi, mut outer_len, mut inner_len) = (0u64, 0u64, 0u64, 0u64);
    for k in 0..c.n {
        let cfg = sample_config_with(&region, c.seed, k, c.law);
        if let Some(o) = outermost_open_circuit(&cfg, z, c.a, c.b)? {
            exists += 1;
            semi += u64::from(o.is_semi);
            outer_len += o.sites.len() as u64;
            let i = innermost_open_circuit(&cfg, z, c.a, c.b)?.expect("an outermost circuit implies an innermost one");
            inner_len += i.sites.len() as u64;
        }
    }
    let n = c.n as f64;
    let mean = |t: u64| if exists > 0 { fmt_sig(t as f64 / exists as f64) } else { "null".into() };
    writeln!(
        out,
        "{{\"n\": {}, \"exists_frequency\": {}, \"semi_frequency\": {}, \"mean_outermost_length\": {}, \"mean_innermost_length\": {}}}",
        c.n,
        fmt_sig(exists as f64 / n),
        fmt_sig(semi as f64 / n),
        mean(outer_len),
        mean(inner_len),
    )?;
    Ok(false)
}

fn cardy_table(rows: Vec<experiments::CardyRow>) -> RatioTable {
    RatioTable {
        name: "cardy".into(),
        rows: rows
            .into_iter()
            .map(|r| RatioRow {
                variant: "crossing".into(),
                mesh: r.mesh,
                halfwidth: r.halfwidth,
                n: r.n,
                value: Some(r.value),
                ci95: Some(r.ci95),
                theory: r.cardy,
                doubled: r.doubled,
                note: Some(format!("endpoints as given: {}", sig12(r.cardy_raw))),
            })
            .collect(),
        doubling: Vec::new(),
    }
}

fn cmd_sweep(a: &SweepArgs, workers: usize, out: &mut dyn std::io::Write) -> Outcome {
    let text = read_config(&a.config)?;
    let o = Overrides { seed: a.seed, n: a.n };
    let s = config::parse_sweep(&text, &a.config.display().to_string(), &o).map_err(config_errors)?;
    let mut cfg = SweepConfig::new(s.center, s.halfwidth, s.meshes.clone(), s.n, s.seed);
    cfg.workers = workers;
    cfg.doubling = s.doubling;
    cfg.law = s.law;
    let m: MarkedPoints = s.marks;
    let table = match s.experiment {
        Experiment::Thm1 => thm1_ratio(m, &cfg)?,
        Experiment::Thm2 => thm2_ratio(m, &cfg)?,
        Experiment::Cardy => {
            let (s1, s2) = (m.s1.expect("checked"), m.s2.expect("checked"));
            cardy_table(cardy_check(m.u1, s1, m.u2, s2, &cfg)?)
        }
        Experiment::Coupling => {
            let pair = match s.pair.expect("checked") {
                PairName::CrossingVsRadius => CouplingPair::CROSSING_VS_RADIUS,
                PairName::CombinedVsCrossing => CouplingPair::COMBINED_VS_CROSSING,
            };
            coupling_ratio(pair, m, &s.s_list, &cfg)?
        }
    };
    std::fs::create_dir_all(&a.out)?;
    let plan_json = serde_json::to_value(&s)?;
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        embedding: EMBEDDING_ID.into(),
        config_hash: sha256_hex(&serde_json::to_vec(&plan_json)?),
        plan: plan_json,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&a.out.join("manifest.json"), json.as_bytes())?;
    experiments::write_ratio_table(&a.out.join("ratios.csv"), &manifest.config_hash, &table)?;
    if !table.doubling.is_empty() {
        write_atomic(&a.out.join("doubling.csv"), doubling_csv(&table.doubling)?.as_bytes())?;
    }
    for r in &table.rows {
        writeln!(
            out,
            "{}\t{}\tmesh={}\tvalue={}\tci95={}\ttheory={}",
            table.name,
            r.variant,
            sig12(r.mesh),
            r.value.map_or("-".into(), sig12),
            r.ci95.map_or("-".into(), sig12),
            sig12(r.theory)
        )?;
    }
    let flagged =
        table.rows.iter().any(|r| r.doubling_flag() == Some(true)) || table.doubling.iter().any(|d| d.flagged);
    Ok(flagged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("perclab").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn fmt_sig_has_twelve_digits() {
        assert_eq!(fmt_sig(1.0), "1.00000000000");
        assert_eq!(fmt_sig(0.0123456789012345), "0.0123456789012");
        assert_eq!(fmt_sig(-2.5), "-2.50000000000");
        assert_eq!(fmt_sig(1e15), "1.00000000000e15");
    }

    #[test]
    fn theory_kf_and_hyp2f1() {
        let (code, out, _) = run_str(&["theory", "--kf"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["K_F"].as_f64().unwrap() - theory::k_f()).abs() < 1e-11);
        let (code, out, _) = run_str(&["theory", "--hyp2f1", "-0.5", "-0.3333333333333333", "1.1666666666666667", "0"]);
        assert_eq!(code, 0, "{out}");
        assert_eq!(out.trim(), "{\"hyp2f1\": 1.00000000000}");
        let (code, out, _) = run_str(&["theory", "--psi", "--u1", "0", "--s", "1", "--u2", "3", "--w", "1.0,1.0"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["psi"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_str(&["theory"]).0, 2);
        assert_eq!(run_str(&["theory", "--psi", "--u1", "0"]).0, 2);
        assert_eq!(run_str(&["bogus"]).0, 2);
        assert_eq!(run_str(&["theory", "--cardy", "3", "2", "1", "0"]).0, 2);
        let (code, _, err) = run_str(&["simulate", "--config", "/nonexistent.json", "--out", "/tmp/x"]);
        assert_eq!(code, 2);
        assert!(err.contains("nonexistent"));
    }
}
