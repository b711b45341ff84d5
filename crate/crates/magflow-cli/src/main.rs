//! Command-line front end. Each subcommand resolves its configuration from
//! flags, an optional JSON config file, and built-in defaults, in that
//! precedence, runs one experiment against the Bolza group, and writes a CSV
//! or JSON artifact that embeds the resolved configuration. Identical
//! configurations produce byte-identical artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use magflow::flows::flow;
use magflow::variational::{closed_form, growth_check, CoefficientState};
use magflow::{classify, coherent, ergodic, report, spectrum};
use magflow::{Error, FramePoint, FuchsianGroup, GroupElement};

// every experiment runs on the Bolza group
const GENUS: u32 = 2;

#[derive(Parser)]
#[command(name = "magflow", version, about = "Magnetic frame flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Landau level ladder for tensor power k
    Spectrum(CommonArgs),
    /// Trace one magnetic orbit from the identity frame
    Orbit(CommonArgs),
    /// Birkhoff averages of the standard observable suite over a start ensemble
    Birkhoff(CommonArgs),
    /// Equidistribution discrepancy against Liouville at critical energy
    Decay(CommonArgs),
    /// Coefficient cocycle along the flow with its growth envelope
    Variational(CommonArgs),
    /// Monte Carlo area of the fundamental domain
    Area(CommonArgs),
    /// Coherent state profile and normalization diagnostic
    Coherent(CommonArgs),
    /// Full acceptance suite, one verdict per criterion
    Report(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Orbit(_) => "orbit",
            Command::Birkhoff(_) => "birkhoff",
            Command::Decay(_) => "decay",
            Command::Variational(_) => "variational",
            Command::Area(_) => "area",
            Command::Coherent(_) => "coherent",
            Command::Report(_) => "report",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Spectrum(a)
            | Command::Orbit(a)
            | Command::Birkhoff(a)
            | Command::Decay(a)
            | Command::Variational(a)
            | Command::Area(a)
            | Command::Coherent(a)
            | Command::Report(a) => a,
        }
    }
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Magnetic field strength B
    #[arg(long = "B")]
    field: Option<f64>,

    /// Kinetic energy E (critical energy is B^2/2)
    #[arg(long = "E")]
    energy: Option<f64>,

    /// Tensor power of the line bundle
    #[arg(long)]
    k: Option<u64>,

    /// Level index
    #[arg(long)]
    m: Option<u64>,

    /// Integration horizon T
    #[arg(long = "T")]
    horizon: Option<f64>,

    /// Integrator step
    #[arg(long)]
    dt: Option<f64>,

    /// Comma-separated horizon grid for decay fits
    #[arg(long = "T-grid", value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,

    /// Master seed; every stochastic output is a pure function of it
    #[arg(long)]
    seed: Option<u64>,

    /// Monte Carlo sample count
    #[arg(long)]
    samples: Option<u64>,

    /// Number of trajectory start points
    #[arg(long)]
    starts: Option<usize>,

    /// First Laplace eigenvalue used for the decay exponent target
    #[arg(long)]
    lambda1: Option<f64>,

    /// Evaluate spectral ladders in exact rational arithmetic
    #[arg(long)]
    exact_rational: bool,

    /// Artifact format (default depends on the subcommand)
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Write the artifact to this path instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,

    /// JSON config file supplying values for flags not given
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

/// Config file schema; field names match the flag names.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "B")]
    field: Option<f64>,
    #[serde(rename = "E")]
    energy: Option<f64>,
    k: Option<u64>,
    m: Option<u64>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    dt: Option<f64>,
    #[serde(rename = "T_grid")]
    t_grid: Option<Vec<f64>>,
    seed: Option<u64>,
    samples: Option<u64>,
    starts: Option<usize>,
    lambda1: Option<f64>,
    exact_rational: Option<bool>,
    format: Option<Format>,
    output: Option<PathBuf>,
}

/// The fully resolved run configuration, embedded in every artifact.
#[derive(Serialize, Clone)]
struct ResolvedConfig {
    command: String,
    #[serde(rename = "B")]
    field: f64,
    #[serde(rename = "E")]
    energy: f64,
    k: u64,
    m: u64,
    #[serde(rename = "T")]
    horizon: f64,
    dt: f64,
    #[serde(rename = "T_grid")]
    t_grid: Vec<f64>,
    seed: u64,
    samples: u64,
    starts: usize,
    lambda1: f64,
    exact_rational: bool,
    format: Format,
    output: Option<String>,
}

fn default_format(command: &str) -> Format {
    match command {
        "spectrum" | "orbit" | "variational" | "coherent" => Format::Csv,
        _ => Format::Json,
    }
}

fn resolve(command: &str, a: &CommonArgs) -> Result<ResolvedConfig, Error> {
    let file: FileConfig = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("config file does not parse: {e}")))?
        }
        None => FileConfig::default(),
    };
    let output = a.output.clone().or(file.output);
    Ok(ResolvedConfig {
        command: command.to_string(),
        field: a.field.or(file.field).unwrap_or(1.0),
        energy: a.energy.or(file.energy).unwrap_or(0.25),
        k: a.k.or(file.k).unwrap_or(10),
        m: a.m.or(file.m).unwrap_or(0),
        horizon: a.horizon.or(file.horizon).unwrap_or(100.0),
        dt: a.dt.or(file.dt).unwrap_or(0.02),
        t_grid: a.t_grid.clone().or(file.t_grid).unwrap_or_else(|| {
            vec![50.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0, 5000.0]
        }),
        seed: a.seed.or(file.seed).unwrap_or(42),
        samples: a.samples.or(file.samples).unwrap_or(200_000),
        starts: a.starts.or(file.starts).unwrap_or(8),
        lambda1: a.lambda1.or(file.lambda1).unwrap_or(3.8388),
        exact_rational: a.exact_rational || file.exact_rational.unwrap_or(false),
        format: a.format.or(file.format).unwrap_or(default_format(command)),
        output: output.map(|p| p.display().to_string()),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            println!("{obj}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: &Command) -> Result<(), Error> {
    let cfg = resolve(command.name(), command.args())?;
    let artifact = match command {
        Command::Spectrum(_) => run_spectrum(&cfg)?,
        Command::Orbit(_) => run_orbit(&cfg)?,
        Command::Birkhoff(_) => run_birkhoff(&cfg)?,
        Command::Decay(_) => run_decay(&cfg)?,
        Command::Variational(_) => run_variational(&cfg)?,
        Command::Area(_) => run_area(&cfg)?,
        Command::Coherent(_) => run_coherent(&cfg)?,
        Command::Report(_) => run_report(&cfg)?,
    };
    match &cfg.output {
        Some(path) => std::fs::write(path, artifact)
            .map_err(|e| Error::Config(format!("cannot write output file {path}: {e}")))?,
        None => print!("{artifact}"),
    }
    Ok(())
}

/// CSV artifact: resolved config on a comment line, header, rows.
fn csv_artifact(cfg: &ResolvedConfig, header: &str, rows: &[String], trailer: &[String]) -> String {
    let mut out = String::new();
    out.push_str("# config ");
    out.push_str(&serde_json::to_string(cfg).expect("config serializes"));
    out.push('\n');
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    for t in trailer {
        out.push_str(t);
        out.push('\n');
    }
    out
}

/// JSON artifact: the payload object with the resolved config added.
fn json_artifact(cfg: &ResolvedConfig, mut payload: serde_json::Value) -> String {
    let map = payload.as_object_mut().expect("payload is an object");
    map.insert(
        "config".to_string(),
        serde_json::to_value(cfg).expect("config serializes"),
    );
    let mut out = serde_json::to_string_pretty(&payload).expect("artifact serializes");
    out.push('\n');
    out
}

fn complex_pair(z: num::complex::Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn run_spectrum(cfg: &ResolvedConfig) -> Result<String, Error> {
    let levels = if cfg.exact_rational {
        spectrum::landau_levels(cfg.k, cfg.field, GENUS)?
    } else {
        spectrum::landau_levels_float(cfg.k, cfg.field, GENUS)?
    };
    match cfg.format {
        Format::Csv => {
            let rows: Vec<String> = levels
                .iter()
                .map(|l| {
                    let mult = l.multiplicity.map(|x| x.to_string()).unwrap_or_default();
                    format!("{},{},{},{},{}", l.k, l.m, l.value, l.scaled, mult)
                })
                .collect();
            Ok(csv_artifact(cfg, "k,m,value,scaled,multiplicity", &rows, &[]))
        }
        Format::Json => Ok(json_artifact(cfg, json!({ "levels": levels }))),
    }
}

fn run_orbit(cfg: &ResolvedConfig) -> Result<String, Error> {
    let group = FuchsianGroup::bolza();
    let params = classify(cfg.energy, cfg.field)?;
    let start = FramePoint::reduced(&group, &GroupElement::identity())?;
    let n = ((cfg.horizon / cfg.dt).round() as u64).max(1);
    let dt = cfg.horizon / n as f64;
    let mut cur = start;
    let mut samples = Vec::with_capacity(n as usize + 1);
    samples.push((0.0, cur));
    for i in 1..=n {
        cur = flow(&group, &params, &cur, dt, 1.0)?;
        samples.push((i as f64 * dt, cur));
    }
    match cfg.format {
        Format::Csv => {
            let rows: Vec<String> = samples
                .iter()
                .map(|(t, p)| {
                    let e = p.rep.entries();
                    let z = p.rep.disk_point();
                    format!(
                        "{},{},{},{},{},{},{}",
                        t, e[0][0], e[0][1], e[1][0], e[1][1], z.re, z.im
                    )
                })
                .collect();
            Ok(csv_artifact(
                cfg,
                "t,m11,m12,m21,m22,disk_re,disk_im",
                &rows,
                &[],
            ))
        }
        Format::Json => {
            let points: Vec<serde_json::Value> = samples
                .iter()
                .map(|(t, p)| {
                    let e = p.rep.entries();
                    json!({
                        "t": t,
                        "frame": [[e[0][0], e[0][1]], [e[1][0], e[1][1]]],
                        "disk": complex_pair(p.rep.disk_point()),
                    })
                })
                .collect();
            Ok(json_artifact(cfg, json!({ "points": points })))
        }
    }
}

fn run_birkhoff(cfg: &ResolvedConfig) -> Result<String, Error> {
    let group = FuchsianGroup::bolza();
    let suite = ergodic::standard_suite(&group)?;
    let mut blocks = Vec::new();
    for obs in &suite {
        let vals = ergodic::birkhoff_ensemble(
            &group,
            obs,
            cfg.energy,
            cfg.field,
            cfg.starts,
            cfg.horizon,
            cfg.dt,
            cfg.seed,
        )?;
        let mean = vals.iter().sum::<num::complex::Complex64>() / vals.len() as f64;
        blocks.push((obs.id(), vals, mean));
    }
    match cfg.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for (id, vals, mean) in &blocks {
                for (i, v) in vals.iter().enumerate() {
                    rows.push(format!("{id},{i},{},{}", v.re, v.im));
                }
                rows.push(format!("{id},mean,{},{}", mean.re, mean.im));
            }
            Ok(csv_artifact(cfg, "observable,start,re,im", &rows, &[]))
        }
        Format::Json => {
            let observables: Vec<serde_json::Value> = blocks
                .iter()
                .map(|(id, vals, mean)| {
                    json!({
                        "id": id,
                        "per_start": vals.iter().map(|v| complex_pair(*v)).collect::<Vec<_>>(),
                        "mean": complex_pair(*mean),
                    })
                })
                .collect();
            Ok(json_artifact(cfg, json!({ "observables": observables })))
        }
    }
}

fn run_decay(cfg: &ResolvedConfig) -> Result<String, Error> {
    let group = FuchsianGroup::bolza();
    let suite = ergodic::standard_suite(&group)?;
    let starts = ergodic::scattered_starts(&group, cfg.starts, cfg.seed)?;
    let report = ergodic::decay_curve(
        &group,
        &suite,
        &starts,
        cfg.field,
        &cfg.t_grid,
        cfg.dt,
        cfg.samples,
        cfg.seed,
        cfg.lambda1,
    )?;
    match cfg.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for obs in &report.observables {
                for (t, d) in report.t_grid.iter().zip(&obs.discrepancy) {
                    rows.push(format!("{},{t},{d}", obs.id));
                }
            }
            for (t, d) in report.t_grid.iter().zip(&report.sup_discrepancy) {
                rows.push(format!("sup,{t},{d}"));
            }
            let trailer = vec![
                match report.theta_hat {
                    Some(th) => format!("# theta_hat {th}"),
                    None => "# theta_hat none".to_string(),
                },
                format!("# theta_target {}", report.theta_target),
            ];
            Ok(csv_artifact(cfg, "series,t,value", &rows, &trailer))
        }
        Format::Json => Ok(json_artifact(cfg, json!({ "decay": report }))),
    }
}

fn run_variational(cfg: &ResolvedConfig) -> Result<String, Error> {
    let speed = (2.0 * cfg.energy).sqrt();
    let n = ((cfg.horizon / cfg.dt).round() as u64).max(1);
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 * cfg.horizon / n as f64).collect();
    let growth = growth_check(speed, cfg.field, &ts[1..]);
    let init = CoefficientState::new(1.0, 0.0, 0.0, 1.0);
    let envelope = |t: f64| {
        growth.c_fit * (1.0 + t * t).sqrt().powi(3) * (growth.rate * t).exp()
    };
    let states: Vec<(f64, CoefficientState, f64)> = ts
        .iter()
        .map(|&t| {
            let s = closed_form(&init, speed, cfg.field, t);
            let ratio = s.norm() / envelope(t);
            (t, s, ratio)
        })
        .collect();
    match cfg.format {
        Format::Csv => {
            let rows: Vec<String> = states
                .iter()
                .map(|(t, s, ratio)| format!("{t},{},{},{},{},{ratio}", s.a, s.b, s.c, s.d))
                .collect();
            Ok(csv_artifact(cfg, "t,a,b,c,d,bound_ratio", &rows, &[]))
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = states
                .iter()
                .map(|(t, s, ratio)| {
                    json!({"t": t, "a": s.a, "b": s.b, "c": s.c, "d": s.d, "bound_ratio": ratio})
                })
                .collect();
            Ok(json_artifact(
                cfg,
                json!({ "speed": speed, "growth": growth, "rows": rows }),
            ))
        }
    }
}

fn run_area(cfg: &ResolvedConfig) -> Result<String, Error> {
    let group = FuchsianGroup::bolza();
    let est = group.area_mc(cfg.samples, cfg.seed);
    let reference = group.gauss_bonnet_area();
    match cfg.format {
        Format::Csv => {
            let row = format!(
                "{},{},{},{},{},{},{}",
                est.estimate,
                est.stderr,
                est.samples,
                est.accepted,
                est.cover_radius,
                est.cover_area,
                reference
            );
            Ok(csv_artifact(
                cfg,
                "estimate,stderr,samples,accepted,cover_radius,cover_area,gauss_bonnet",
                &[row],
                &[],
            ))
        }
        Format::Json => Ok(json_artifact(
            cfg,
            json!({ "area": est, "gauss_bonnet": reference }),
        )),
    }
}

fn run_coherent(cfg: &ResolvedConfig) -> Result<String, Error> {
    let m = cfg.m as usize;
    match cfg.format {
        Format::Csv => {
            // same truncation radius the norm quadrature uses
            let r_max = (2.0 * (60.0 + 14.0 * m as f64) / cfg.k as f64).sqrt();
            let steps = 240usize;
            let mut rows = Vec::new();
            for convention in [
                coherent::ScalingConvention::BareArgument,
                coherent::ScalingConvention::UnitNorm,
            ] {
                let name = match convention {
                    coherent::ScalingConvention::BareArgument => "BareArgument",
                    coherent::ScalingConvention::UnitNorm => "UnitNorm",
                };
                for i in 0..=steps {
                    let r = r_max * i as f64 / steps as f64;
                    let a = coherent::profile(cfg.k, m, r, convention)?;
                    rows.push(format!("{r},{a},{name}"));
                }
            }
            Ok(csv_artifact(cfg, "r,amplitude,convention", &rows, &[]))
        }
        Format::Json => {
            let diag = coherent::norm_diagnostic(cfg.k, m)?;
            Ok(json_artifact(cfg, json!({ "diagnostic": diag })))
        }
    }
}

fn run_report(cfg: &ResolvedConfig) -> Result<String, Error> {
    let rep = report::run_acceptance(cfg.seed)?;
    match cfg.format {
        Format::Csv => {
            let rows: Vec<String> = rep
                .checks
                .iter()
                .map(|c| format!("{},{}", c.name, c.passed))
                .collect();
            let trailer = vec![format!("# all_passed {}", rep.all_passed)];
            Ok(csv_artifact(cfg, "check,passed", &rows, &trailer))
        }
        Format::Json => Ok(json_artifact(cfg, json!({ "acceptance": rep }))),
    }
}
