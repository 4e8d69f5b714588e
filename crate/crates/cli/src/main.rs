//! `passive-net` command-line front end.
//!
//! Exit codes: 0 success or passive, 1 error, 2 not passive, 3 singular block.

mod manifest;

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use passive_net::feedback::{star_of_impedance_pair, star_product, well_posedness, PairOutput};
use passive_net::io::{
    discrete_json, parse_continuous, parse_system, system_file_json, system_json, write_resonances_csv,
    write_sparams_csv, SystemFile,
};
use passive_net::passivity::{
    discrete_impedance_certificate, discrete_scattering_certificate, impedance_certificate, scattering_certificate,
    PassivityCertificate,
};
use passive_net::pipelines::{
    butterworth_compose, log_grid, sparams, waveguide_compose, waveguide_report, ButterworthConfig, WaveguideConfig,
};
use passive_net::simulate::{write_response_csv, write_time_series_csv, ExcitationSpec};
use passive_net::transforms::{self as tf, ResistanceMatrix};
use passive_net::{DiscreteSystem, StateSpaceSystem};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "passive-net",
    version,
    about = "Passivity checks, transforms and compositions of linear state-space systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Impedance,
    Scattering,
    /// Scattering certificate of a discrete-time system.
    Discrete,
    /// Impedance certificate of a discrete-time system.
    DiscreteImpedance,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Op {
    Fi,
    Of,
    If,
    Ti,
    Bi,
    Sr,
    Cayley,
    Icayley,
    Extcayley,
    Iextcayley,
    Recip,
    Hybrid,
    Ihybrid,
    Chain,
    Ichain,
}

#[derive(Clone, Copy, ValueEnum)]
enum StarOutput {
    Scattering,
    Impedance,
}

#[derive(Subcommand)]
enum Command {
    /// Certifies passivity of a system file.
    Check {
        /// System JSON, `-` for stdin.
        system: String,
        #[arg(long, value_enum, default_value = "impedance")]
        kind: Kind,
    },
    /// Applies one representation transform.
    Transform {
        /// System JSON, `-` for stdin.
        system: String,
        #[arg(long, value_enum)]
        op: Op,
        /// Internal Cayley parameter.
        #[arg(long)]
        sigma: Option<f64>,
        /// Resistance of the top channel.
        #[arg(long = "R1", alias = "r1")]
        r1: Option<f64>,
        /// Resistance of the bottom channel.
        #[arg(long = "R2", alias = "r2")]
        r2: Option<f64>,
        /// Feedthrough shift applied before the external Cayley transform.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Output file, `-` for stdout.
        #[arg(short, long, default_value = "-")]
        out: String,
    },
    /// Redheffer star product of two systems.
    Star {
        p: String,
        q: String,
        /// Treat both inputs as impedance systems and couple them through
        /// external Cayley transforms at the given resistances.
        #[arg(long)]
        impedance_pair: bool,
        /// Resistance of the outer port of `p`.
        #[arg(long = "R1", alias = "r1", default_value_t = 1.0)]
        r1: f64,
        /// Resistance of the coupled channel.
        #[arg(long = "R2", alias = "r2", default_value_t = 1.0)]
        r2: f64,
        /// Resistance of the outer port of `q`.
        #[arg(long = "R3", alias = "r3", default_value_t = 1.0)]
        r3: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon_p: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon_q: f64,
        #[arg(long, value_enum, default_value = "scattering")]
        output: StarOutput,
        #[arg(short, long, default_value = "-")]
        out: String,
        /// Well-posedness report file; stderr when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Butterworth filter from two coupled π circuits.
    Butterworth {
        /// Configuration JSON; defaults when omitted.
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Waveguide with a piston radiation load.
    Waveguide {
        /// Configuration JSON; defaults when omitted.
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Butterworth run: component values plus the s-parameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct ButterworthRun {
    #[serde(flatten)]
    model: ButterworthConfig,
    f_min: f64,
    f_max: f64,
    points: usize,
    seed: u64,
}

impl Default for ButterworthRun {
    fn default() -> Self {
        ButterworthRun { model: ButterworthConfig::default(), f_min: 1e4, f_max: 1e7, points: 301, seed: 0 }
    }
}

/// Waveguide run: model parameters plus the excitation and response grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct WaveguideRun {
    #[serde(flatten)]
    model: WaveguideConfig,
    excitation: ExcitationSpec,
    f_min: f64,
    f_max: f64,
    points: usize,
}

impl Default for WaveguideRun {
    fn default() -> Self {
        WaveguideRun {
            model: WaveguideConfig::default(),
            excitation: ExcitationSpec::default(),
            f_min: 50.0,
            f_max: 10_000.0,
            points: 400,
        }
    }
}

enum Outcome {
    Done,
    NotPassive,
}

fn read_input(path: &str) -> anyhow::Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn write_output(path: &str, text: &str) -> anyhow::Result<()> {
    if path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.write_all(b"\n")?;
        Ok(())
    } else {
        fs::write(path, format!("{text}\n")).with_context(|| format!("writing {path}"))
    }
}

fn cert_json(cert: &PassivityCertificate) -> String {
    serde_json::to_string_pretty(cert).expect("certificate serialises")
}

fn cmd_check(system: &str, kind: Kind) -> anyhow::Result<Outcome> {
    let file = parse_system(&read_input(system)?)?;
    let cert = match (kind, &file) {
        (Kind::Impedance, SystemFile::Continuous(s)) => impedance_certificate(s),
        (Kind::Scattering, SystemFile::Continuous(s)) => scattering_certificate(s),
        (Kind::Discrete, SystemFile::Discrete(s)) => discrete_scattering_certificate(s),
        (Kind::DiscreteImpedance, SystemFile::Discrete(s)) => discrete_impedance_certificate(s),
        (Kind::Discrete | Kind::DiscreteImpedance, _) => bail!("--kind discrete needs a system with \"sigma\""),
        (_, SystemFile::Discrete(_)) => bail!("discrete system given; use --kind discrete"),
    };
    println!("{}", cert_json(&cert));
    Ok(if cert.is_passive() { Outcome::Done } else { Outcome::NotPassive })
}

fn resistance(sys_m1: usize, sys_m2: usize, r1: Option<f64>, r2: Option<f64>) -> anyhow::Result<ResistanceMatrix> {
    let r1 = r1.ok_or_else(|| anyhow!("--R1 is required"))?;
    let r2 = r2.ok_or_else(|| anyhow!("--R2 is required"))?;
    Ok(ResistanceMatrix::scalar(sys_m1, r1, sys_m2, r2)?)
}

fn continuous(file: SystemFile, op: &str) -> anyhow::Result<StateSpaceSystem> {
    match file {
        SystemFile::Continuous(s) => Ok(s),
        SystemFile::Discrete(_) => bail!("--op {op} needs a continuous-time system"),
    }
}

fn cmd_transform(
    system: &str,
    op: Op,
    sigma: Option<f64>,
    r1: Option<f64>,
    r2: Option<f64>,
    epsilon: f64,
    out: &str,
) -> anyhow::Result<Outcome> {
    let file = parse_system(&read_input(system)?)?;
    let name = op.to_possible_value().expect("named op").get_name().to_string();
    let result: SystemFile = if op == Op::Icayley {
        match file {
            SystemFile::Discrete(d) => SystemFile::Continuous(tf::inverse_internal_cayley(&d)?),
            SystemFile::Continuous(_) => bail!("--op icayley needs a discrete system with \"sigma\""),
        }
    } else {
        let s = continuous(file, &name)?;
        let c = match op {
            Op::Fi => tf::full_inversion(&s)?,
            Op::Of => tf::output_flip(&s)?,
            Op::If => tf::input_flip(&s)?,
            Op::Ti => tf::top_inversion(&s)?,
            Op::Bi => tf::bottom_inversion(&s)?,
            Op::Sr => tf::sign_reversal(&s),
            Op::Recip => tf::internal_reciprocal(&s)?,
            Op::Hybrid => tf::hybrid_transform(&s)?,
            Op::Ihybrid => tf::inverse_hybrid(&s)?,
            Op::Chain => tf::chain_transform(&s)?,
            Op::Ichain => tf::inverse_chain(&s)?,
            Op::Extcayley => {
                let r = resistance(s.m1, s.m2, r1, r2)?;
                passive_net::feedback::regularized_external_cayley(&s, &r, epsilon)?
            }
            Op::Iextcayley => tf::inverse_external_cayley(&s, &resistance(s.m1, s.m2, r1, r2)?)?,
            Op::Cayley => {
                let sigma = sigma.ok_or_else(|| anyhow!("--sigma is required for --op cayley"))?;
                let d: DiscreteSystem = tf::internal_cayley(&s, sigma)?;
                write_output(out, &discrete_json(&d))?;
                return Ok(Outcome::Done);
            }
            Op::Icayley => unreachable!("handled above"),
        };
        SystemFile::Continuous(c)
    };
    write_output(out, &system_file_json(&result))?;
    Ok(Outcome::Done)
}

#[allow(clippy::too_many_arguments)]
fn cmd_star(
    p: &str,
    q: &str,
    impedance_pair: bool,
    (r1, r2, r3): (f64, f64, f64),
    (eps_p, eps_q): (f64, f64),
    output: StarOutput,
    out: &str,
    report: Option<&Path>,
) -> anyhow::Result<Outcome> {
    if p == "-" && q == "-" {
        bail!("only one of the inputs may be read from stdin");
    }
    let sp = parse_continuous(&read_input(p)?).context("system p")?;
    let sq = parse_continuous(&read_input(q)?).context("system q")?;
    let (sys, wp) = if impedance_pair {
        let rp = ResistanceMatrix::scalar(sp.m1, r1, sp.m2, r2)?;
        let rq = ResistanceMatrix::scalar(sq.m1, r2, sq.m2, r3)?;
        let ep = passive_net::feedback::regularized_external_cayley(&sp, &rp, eps_p)?;
        let eq = passive_net::feedback::regularized_external_cayley(&sq, &rq, eps_q)?;
        let wp = well_posedness(&ep, &eq)?;
        let form = match output {
            StarOutput::Scattering => PairOutput::Scattering,
            StarOutput::Impedance => PairOutput::Impedance,
        };
        (star_of_impedance_pair(&sp, &sq, &rp, &rq, eps_p, eps_q, form)?, wp)
    } else {
        let wp = well_posedness(&sp, &sq)?;
        (star_product(&sp, &sq)?, wp)
    };
    let text = serde_json::to_string_pretty(&wp)?;
    match report {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => eprintln!("{text}"),
    }
    write_output(out, &system_json(&sys))?;
    Ok(Outcome::Done)
}

fn load_config<T: Default + for<'de> Deserialize<'de> + Serialize>(
    path: Option<&Path>,
) -> anyhow::Result<(T, Vec<u8>)> {
    match path {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            let cfg = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", p.display()))?;
            Ok((cfg, bytes))
        }
        None => {
            let cfg = T::default();
            let bytes = serde_json::to_vec_pretty(&cfg)?;
            Ok((cfg, bytes))
        }
    }
}

struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(RunDir { root: root.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> passive_net::Result<()>,
    ) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}

fn cmd_butterworth(config: Option<&Path>, out: &Path, started: Instant) -> anyhow::Result<Outcome> {
    let (run, bytes) = load_config::<ButterworthRun>(config)?;
    let models = butterworth_compose(&run.model)?;
    let grid = log_grid(run.f_min, run.f_max, run.points);
    let mut dir = RunDir::create(out)?;
    dir.write("config.json", serde_json::to_string_pretty(&run)?.as_bytes())?;
    dir.write_with("sparams.csv", |w| write_sparams_csv(&sparams(&models.regularized, &grid)?, w))?;
    dir.write_with("sparams_minimal.csv", |w| write_sparams_csv(&sparams(&models.minimal, &grid)?, w))?;
    dir.write("regularized.json", system_json(&models.regularized).as_bytes())?;
    dir.write("impedance.json", system_json(&models.impedance).as_bytes())?;
    dir.write("minimal.json", system_json(&models.minimal).as_bytes())?;
    dir.write("well_posedness.json", serde_json::to_string_pretty(&models.well_posedness)?.as_bytes())?;
    let certs = serde_json::json!({
        "regularized_scattering": scattering_certificate(&models.regularized),
        "impedance": impedance_certificate(&models.impedance),
        "minimal_scattering": scattering_certificate(&models.minimal),
    });
    dir.write("certificates.json", serde_json::to_string_pretty(&certs)?.as_bytes())?;
    RunManifest::new("butterworth", &bytes, run.seed, started, dir.files).write(&dir.root)?;
    Ok(Outcome::Done)
}

fn cmd_waveguide(config: Option<&Path>, out: &Path, started: Instant) -> anyhow::Result<Outcome> {
    let (run, bytes) = load_config::<WaveguideRun>(config)?;
    let base = config.and_then(Path::parent);
    let wg = waveguide_compose(&run.model, base)?;
    let grid = log_grid(run.f_min, run.f_max, run.points);
    let report = waveguide_report(&wg, &run.excitation, &grid)?;
    let mut dir = RunDir::create(out)?;
    dir.write("config.json", serde_json::to_string_pretty(&run)?.as_bytes())?;
    dir.write_with("resonances.csv", |w| write_resonances_csv(&report.resonances, w))?;
    dir.write_with("hard_wall_resonances.csv", |w| write_resonances_csv(&report.hard_wall, w))?;
    dir.write_with("response.csv", |w| write_response_csv(&report.response, 1, w))?;
    let series: Vec<_> = (0..report.excitation.len())
        .map(|k| DVector::from_vec(vec![report.excitation[k], report.glottal_pressure[k], report.mouth_pressure[k]]))
        .collect();
    dir.write_with("signals.csv", |w| write_time_series_csv(&series, report.sample_rate, w))?;
    dir.write("composite.json", system_json(&wg.composite_impedance).as_bytes())?;
    dir.write("certificate.json", cert_json(&report.certificate).as_bytes())?;
    let sv = serde_json::json!({
        "order": wg.load.reduced.order,
        "condition": wg.load.reduced.condition,
        "singular_values": wg.load.singular_values,
    });
    dir.write("load.json", serde_json::to_string_pretty(&sv)?.as_bytes())?;
    RunManifest::new("waveguide", &bytes, run.model.seed, started, dir.files).write(&dir.root)?;
    Ok(Outcome::Done)
}

fn configure_threads() {
    if let Some(n) = std::env::var("PASSIVE_NET_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<passive_net::Error>()) {
        Some(e) if e.is_singularity() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { system, kind } => cmd_check(&system, kind),
        Command::Transform { system, op, sigma, r1, r2, epsilon, out } => {
            cmd_transform(&system, op, sigma, r1, r2, epsilon, &out)
        }
        Command::Star { p, q, impedance_pair, r1, r2, r3, epsilon_p, epsilon_q, output, out, report } => {
            cmd_star(&p, &q, impedance_pair, (r1, r2, r3), (epsilon_p, epsilon_q), output, &out, report.as_deref())
        }
        Command::Butterworth { config, out } => cmd_butterworth(config.as_deref(), &out, started),
        Command::Waveguide { config, out } => cmd_waveguide(config.as_deref(), &out, started),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotPassive) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
