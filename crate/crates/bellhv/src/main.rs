//! Command-line front end: exact evaluation, MC estimation, the binary-α
//! census, decoupling scans, and the built-in verification suite.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::Value;

use bellhv::analysis::{
    correlator_matrix, enumerate_binary_alphas, grid_search_chsh, grid_search_matrix, ExactJoint,
};
use bellhv::core::{
    quantum_correlation, quantum_joint_distribution, ChshReport, JointOutcomeDistribution,
    PlanarSetting, PROB_TOL,
};
use bellhv::models::discrete::{mi_ratio_m1, mi_ratio_m2, DichotomicM3Model};
use bellhv::models::{ModelDocument, SCHEMA};
use bellhv::sampling::{estimate_hall_joint, estimate_m3c_joint, JointEstimate, SeededStream};
use bellhv::{Error, Result};

#[derive(Parser)]
#[command(name = "bellhv", version, about = "Hidden-variable Bell/CHSH laboratory")]
struct Cli {
    /// Worker thread count for the sampling pool (default: all cores).
    /// Outputs are byte-identical for a fixed seed regardless of this value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a model config: joint, correlators, X_BI, MI diagnostics.
    Run(RunArgs),
    /// Run the built-in verification suite.
    Verify(VerifyArgs),
    /// Scan the background-coupling strength κ and emit CSV.
    Scan(ScanArgs),
    /// Census of all 256 binary α-assignments as CSV.
    Enumerate(EnumerateArgs),
    /// Raw Monte Carlo estimate of a spherical model at one setting pair.
    Sample(SampleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (JSON, schema "bellhv/1").
    #[arg(long)]
    config: PathBuf,
    /// Write the correlator row as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's sample count.
    #[arg(long)]
    samples: Option<u64>,
    /// Override the config's seed.
    #[arg(long, env = "BELLHV_SEED")]
    seed: Option<u64>,
    /// Override the config's grid resolution.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, env = "BELLHV_SEED", default_value_t = 42)]
    seed: u64,
    /// Deliberately corrupt a model so a named criterion fails.
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    config: PathBuf,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SphericalKind {
    Hall,
    M3c,
}

#[derive(Args)]
struct SampleArgs {
    /// Left setting angle (radians unless --degrees).
    #[arg(long)]
    a: f64,
    /// Right setting angle (radians unless --degrees).
    #[arg(long)]
    b: f64,
    /// Interpret --a/--b as degrees.
    #[arg(long)]
    degrees: bool,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, env = "BELLHV_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "hall")]
    kind: SphericalKind,
}

/// On-disk scenario config, schema "bellhv/1".
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioConfig {
    schema: String,
    /// Inline model document (exclusive with `model_path`).
    model: Option<Value>,
    /// Path to a model document (exclusive with `model`).
    model_path: Option<PathBuf>,
    angles: Option<AnglesConfig>,
    samples: Option<u64>,
    seed: Option<u64>,
    kappas: Option<Vec<f64>>,
    resolution: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnglesConfig {
    a: f64,
    a_prime: f64,
    b: f64,
    b_prime: f64,
    /// "radians" or "degrees"; mandatory whenever angles are given.
    units: String,
}

struct Quad {
    a: PlanarSetting,
    a_prime: PlanarSetting,
    b: PlanarSetting,
    b_prime: PlanarSetting,
}

impl AnglesConfig {
    fn quad(&self) -> Result<Quad> {
        let convert: fn(f64) -> PlanarSetting = match self.units.as_str() {
            "radians" => PlanarSetting::new,
            "degrees" => PlanarSetting::from_degrees,
            other => {
                return Err(Error::Config(format!(
                    "angle units must be \"radians\" or \"degrees\", got \"{other}\""
                )))
            }
        };
        Ok(Quad {
            a: convert(self.a),
            a_prime: convert(self.a_prime),
            b: convert(self.b),
            b_prime: convert(self.b_prime),
        })
    }
}

impl ScenarioConfig {
    fn load(path: &PathBuf) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config JSON: {e}")))?;
        if cfg.schema != SCHEMA {
            return Err(Error::Config(format!(
                "unsupported config schema \"{}\", expected \"{SCHEMA}\"",
                cfg.schema
            )));
        }
        match (&cfg.model, &cfg.model_path) {
            (Some(_), Some(_)) => Err(Error::Config(
                "config must give exactly one of 'model' and 'model_path', got both".into(),
            )),
            (None, None) => Err(Error::Config(
                "config must give exactly one of 'model' and 'model_path', got neither".into(),
            )),
            _ => Ok(cfg),
        }
    }

    fn model(&self) -> Result<ModelDocument> {
        let doc = match (&self.model, &self.model_path) {
            (Some(inline), None) => inline.clone(),
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("invalid model JSON: {e}")))?
            }
            _ => unreachable!("validated in load()"),
        };
        ModelDocument::from_json(&doc)
    }
}

/// Plain-decimal formatting with 12 significant digits (locale-independent).
fn fmt_sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.11}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| Error::Config(e.to_string()))
        }
    }
}

fn print_joint(label: &str, j: &JointOutcomeDistribution) {
    println!(
        "{label}: ++ {:.6}  +- {:.6}  -+ {:.6}  -- {:.6}",
        j.p_pp, j.p_pm, j.p_mp, j.p_mm
    );
}

fn print_report(r: &ChshReport) {
    println!("M(a,b)   = {:+.6}", r.m_ab);
    println!("M(a',b)  = {:+.6}", r.m_apb);
    println!("M(a,b')  = {:+.6}", r.m_abp);
    println!("M(a',b') = {:+.6}", r.m_apbp);
    println!("X_BI = {:.6}", r.x_bi);
}

fn report_csv(r: &ChshReport) -> String {
    format!(
        "m_ab,m_apb,m_abp,m_apbp,x_bi\n{},{},{},{},{}\n",
        fmt_sig12(r.m_ab),
        fmt_sig12(r.m_apb),
        fmt_sig12(r.m_abp),
        fmt_sig12(r.m_apbp),
        fmt_sig12(r.x_bi)
    )
}

/// Best CHSH quadruple of a discrete model over its full setting grid.
fn best_quad_report(model: &impl ExactJoint) -> Result<([usize; 4], ChshReport)> {
    let matrix = correlator_matrix(model)?;
    let (quad, _) = grid_search_matrix(&matrix)?;
    let [x, xp, y, yp] = quad;
    let report = ChshReport::new(matrix[x][y], matrix[xp][y], matrix[x][yp], matrix[xp][yp])?;
    Ok((quad, report))
}

fn mi_summary_m3(m: &DichotomicM3Model) -> String {
    let mut non_unity = 0usize;
    let mut total = 0usize;
    for l1 in 0..2 {
        for l2 in 0..2 {
            for xi in 0..2 {
                for xy in 0..4usize {
                    for xpyp in 0..4usize {
                        total += 1;
                        let r = m.mi_ratio(l1, l2, xi, (xy / 2, xy % 2), (xpyp / 2, xpyp % 2));
                        if !r.is_unity(PROB_TOL) {
                            non_unity += 1;
                        }
                    }
                }
            }
        }
    }
    if non_unity == 0 {
        format!("MI diagnostics: ratio unity on all {total} tuples")
    } else {
        format!("MI diagnostics: ratio differs from unity on {non_unity} of {total} tuples")
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = ScenarioConfig::load(&args.config)?;
    let samples = args.samples.or(cfg.samples).unwrap_or(1_000_000);
    let seed = args.seed.or(cfg.seed).unwrap_or(42);
    let resolution = args.resolution.or(cfg.resolution).unwrap_or(64);
    let model = cfg.model()?;
    println!("model: {}", model.kind());
    match &model {
        ModelDocument::Quantum => {
            let (quad, report) = match &cfg.angles {
                Some(angles) => {
                    let q = angles.quad()?;
                    let report = ChshReport::new(
                        quantum_correlation(q.a, q.b),
                        quantum_correlation(q.a_prime, q.b),
                        quantum_correlation(q.a, q.b_prime),
                        quantum_correlation(q.a_prime, q.b_prime),
                    )?;
                    (q, report)
                }
                None => {
                    let (s, _) = grid_search_chsh(quantum_correlation, resolution)?;
                    println!(
                        "grid search at resolution {resolution}: a = {:.6}, a' = {:.6}, b = {:.6}, b' = {:.6}",
                        s.a.radians(),
                        s.a_prime.radians(),
                        s.b.radians(),
                        s.b_prime.radians()
                    );
                    let report = ChshReport::new(
                        quantum_correlation(s.a, s.b),
                        quantum_correlation(s.a_prime, s.b),
                        quantum_correlation(s.a, s.b_prime),
                        quantum_correlation(s.a_prime, s.b_prime),
                    )?;
                    (
                        Quad {
                            a: s.a,
                            a_prime: s.a_prime,
                            b: s.b,
                            b_prime: s.b_prime,
                        },
                        report,
                    )
                }
            };
            print_joint(
                "joint P(s1,s2|a,b)",
                &quantum_joint_distribution(quad.a, quad.b),
            );
            print_report(&report);
            println!("MI diagnostics: n/a (no hidden-variable background)");
            if let Some(out) = &args.out {
                write_output(Some(out), &report_csv(&report))?;
            }
        }
        ModelDocument::Hall => {
            let angles = cfg.angles.as_ref().ok_or_else(|| {
                Error::Config("the hall model needs an 'angles' block in the config".into())
            })?;
            let q = angles.quad()?;
            let est = |a: PlanarSetting, b: PlanarSetting, k: u64| {
                estimate_hall_joint(
                    a.to_unit_vector(),
                    b.to_unit_vector(),
                    samples,
                    SeededStream::with_stream(seed, k),
                )
            };
            let e_ab = est(q.a, q.b, 0)?;
            let e_apb = est(q.a_prime, q.b, 1)?;
            let e_abp = est(q.a, q.b_prime, 2)?;
            let e_apbp = est(q.a_prime, q.b_prime, 3)?;
            println!("samples per pair: {samples}  seed: {seed}");
            print_joint("joint P(s1,s2|a,b)", &e_ab.joint);
            let report = ChshReport::new(
                e_ab.correlation.mean,
                e_apb.correlation.mean,
                e_abp.correlation.mean,
                e_apbp.correlation.mean,
            )?;
            print_report(&report);
            println!("MI diagnostics: background density depends on both settings (MI violated)");
            if let Some(out) = &args.out {
                write_output(Some(out), &report_csv(&report))?;
            }
        }
        ModelDocument::M1(m) => {
            let (quad, report) = best_quad_report(m)?;
            println!("best quadruple (x, x', y, y') = {quad:?}");
            print_joint("joint P(s1,s2|x,y)", &m.joint(quad[0], quad[2])?);
            print_report(&report);
            let unity = (0..m.lambda_count()).all(|l| mi_ratio_m1(m, l).is_unity(PROB_TOL));
            println!(
                "MI diagnostics: ratio {} on all lambda",
                if unity { "unity" } else { "non-unity" }
            );
            if let Some(out) = &args.out {
                write_output(Some(out), &report_csv(&report))?;
            }
        }
        ModelDocument::M2(m) => {
            let (quad, report) = best_quad_report(m)?;
            println!("best quadruple (x, x', y, y') = {quad:?}");
            print_joint("joint P(s1,s2|x,y)", &m.joint(quad[0], quad[2])?);
            print_report(&report);
            let nl = m.n_settings_left();
            let nr = m.n_settings_right();
            let c1 = m.left_bg().outcome_var().cardinality();
            let c2 = m.right_bg().outcome_var().cardinality();
            let mut non_unity = 0usize;
            let mut total = 0usize;
            for l1 in 0..c1 {
                for l2 in 0..c2 {
                    for x in 0..nl {
                        for y in 0..nr {
                            for xp in 0..nl {
                                for yp in 0..nr {
                                    total += 1;
                                    if !mi_ratio_m2(m, l1, l2, (x, y), (xp, yp))
                                        .is_unity(PROB_TOL)
                                    {
                                        non_unity += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            if non_unity == 0 {
                println!("MI diagnostics: ratio unity on all {total} tuples");
            } else {
                println!(
                    "MI diagnostics: ratio differs from unity on {non_unity} of {total} tuples"
                );
            }
            if let Some(out) = &args.out {
                write_output(Some(out), &report_csv(&report))?;
            }
        }
        ModelDocument::M3(m) => {
            let report = m.chsh()?;
            print_joint("joint P(s1,s2|a,b)", &m.joint(0, 0)?);
            print_report(&report);
            println!("{}", mi_summary_m3(m));
            if let Some(out) = &args.out {
                write_output(Some(out), &report_csv(&report))?;
            }
        }
        ModelDocument::Alpha(c) => {
            let m = c.build()?;
            let report = m.chsh()?;
            print_joint("joint P(s1,s2|a,b)", &m.joint(0, 0)?);
            print_report(&report);
            println!("{}", mi_summary_m3(&m));
            if let Some(out) = &args.out {
                write_output(Some(out), &report_csv(&report))?;
            }
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let results = bellhv::verify::run_all(args.seed, args.inject_fault);
    for r in &results {
        println!("{}", r.line());
        eprintln!("criterion {:2} finished in {:.3} s", r.id, r.seconds);
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("verify: {passed}/{} criteria passed", results.len());
    Ok(passed == results.len())
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let cfg = ScenarioConfig::load(&args.config)?;
    let kappas = cfg
        .kappas
        .as_ref()
        .ok_or_else(|| Error::Config("scan needs a 'kappas' grid in the config".into()))?;
    if kappas.is_empty() {
        return Err(Error::Config("the kappa grid must be nonempty".into()));
    }
    if let Some(bad) = kappas.iter().find(|k| !(0.0..=1.0).contains(*k)) {
        return Err(Error::Config(format!("kappa = {bad} outside [0,1]")));
    }
    let model = match cfg.model()? {
        ModelDocument::Alpha(c) => c.build()?,
        ModelDocument::M3(m) => m,
        other => {
            return Err(Error::Config(format!(
                "scan applies to 'alpha' or 'm3-dichotomic' models, got '{}'",
                other.kind()
            )))
        }
    };
    let mut csv = String::from("kappa,m_ab,m_apb,m_abp,m_apbp,x_bi\n");
    for &kappa in kappas {
        let r = model.with_mixed_backgrounds(kappa)?.chsh()?;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_sig12(kappa),
            fmt_sig12(r.m_ab),
            fmt_sig12(r.m_apb),
            fmt_sig12(r.m_abp),
            fmt_sig12(r.m_apbp),
            fmt_sig12(r.x_bi)
        ));
    }
    write_output(args.out.as_ref(), &csv)
}

fn cmd_enumerate(args: &EnumerateArgs) -> Result<()> {
    let rows = enumerate_binary_alphas(&Default::default())?;
    let mut csv = String::from("alpha_bits,x_bi\n");
    for row in rows {
        csv.push_str(&format!("{},{}\n", row.bits_string(), fmt_sig12(row.x_bi)));
    }
    write_output(args.out.as_ref(), &csv)
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let setting = |v: f64| {
        if args.degrees {
            PlanarSetting::from_degrees(v)
        } else {
            PlanarSetting::new(v)
        }
    };
    let a = setting(args.a).to_unit_vector();
    let b = setting(args.b).to_unit_vector();
    let stream = SeededStream::new(args.seed);
    let est: JointEstimate = match args.kind {
        SphericalKind::Hall => estimate_hall_joint(a, b, args.samples, stream)?,
        SphericalKind::M3c => estimate_m3c_joint(a, b, args.samples, stream)?,
    };
    println!("samples: {}  seed: {}", args.samples, args.seed);
    for (label, cell) in ["P(+,+)", "P(+,-)", "P(-,+)", "P(-,-)"].iter().zip(est.cells) {
        println!("{label} = {:.6} \u{b1} {:.6}", cell.mean, cell.standard_error);
    }
    println!(
        "M(a,b) = {:+.6} \u{b1} {:.6}",
        est.correlation.mean, est.correlation.standard_error
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Unsupported(_) => 2,
        Error::Validation(_) | Error::Domain(_) | Error::Sampling(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} workers: {e}");
            return ExitCode::from(2);
        }
    }
    #[cfg(not(feature = "parallel"))]
    if cli.workers.is_some() {
        eprintln!("note: built without the 'parallel' feature; --workers ignored");
    }
    let result = match &cli.cmd {
        Cmd::Run(args) => cmd_run(args).map(|()| true),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Scan(args) => cmd_scan(args).map(|()| true),
        Cmd::Enumerate(args) => cmd_enumerate(args).map(|()| true),
        Cmd::Sample(args) => cmd_sample(args).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
