use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluxcoh::config::{ConfigFile, MeasurementChoice, Preset, ProtocolChoice, RunConfig, StateChoice};
use fluxcoh::{driver, Error, Result};

/// Macroscopic-coherence analysis of rf-SQUID flux qubits.
#[derive(Parser, Debug)]
#[command(name = "fluxcoh", version)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// suny2000 | delft2000
    #[arg(long, global = true)]
    preset: Option<Preset>,
    /// Charging energy (GHz).
    #[arg(long, global = true)]
    e_c: Option<f64>,
    /// Inductive energy (GHz).
    #[arg(long, global = true)]
    e_l: Option<f64>,
    /// Josephson energy (GHz).
    #[arg(long, global = true)]
    e_j: Option<f64>,
    /// External flux bias (Φ₀).
    #[arg(long, global = true)]
    phi_x: Option<f64>,
    /// Oscillator basis size.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy levels across the avoided crossing.
    Spectrum(SpectrumArgs),
    /// Variance and effective size of the target states.
    Coherence,
    /// Effective size and gap versus dephasing strength.
    Dephase(DephaseArgs),
    /// Certified lower bound on the effective size.
    Witness(WitnessArgs),
    /// Oscillator basis against the finite-difference solver.
    OracleCheck(OracleArgs),
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    phi_x_min: Option<f64>,
    #[arg(long)]
    phi_x_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    n_levels: Option<usize>,
    /// Skip the dephased energy columns.
    #[arg(long)]
    no_dephased: bool,
}

#[derive(Args, Debug)]
struct DephaseArgs {
    /// Smallest Γ in units of the reference spread.
    #[arg(long)]
    gamma_min: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    /// lower | upper | cat
    #[arg(long, value_parser = parse_state)]
    state: Option<StateChoice>,
    /// unitary | averaged | weak
    #[arg(long, value_parser = parse_protocol)]
    protocol: Option<ProtocolChoice>,
    /// charge | flux | energy
    #[arg(long, value_parser = parse_measurement)]
    measurement: Option<MeasurementChoice>,
    /// Dephasing length of the time average, in units of the reference spread.
    #[arg(long)]
    gamma_w: Option<f64>,
    /// Fixed evolution time; scanned when absent.
    #[arg(long)]
    t: Option<f64>,
    /// Outcome bins for charge or flux measurements.
    #[arg(long)]
    n_bins: Option<usize>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    n_levels: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_state(s: &str) -> std::result::Result<StateChoice, String> {
    parse_enum(s)
}

fn parse_protocol(s: &str) -> std::result::Result<ProtocolChoice, String> {
    parse_enum(s)
}

fn parse_measurement(s: &str) -> std::result::Result<MeasurementChoice, String> {
    parse_enum(s)
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let c = &mut file.circuit;
    c.e_c_ghz = cli.e_c.or(c.e_c_ghz);
    c.e_l_ghz = cli.e_l.or(c.e_l_ghz);
    c.e_j_ghz = cli.e_j.or(c.e_j_ghz);
    c.phi_x = cli.phi_x.or(c.phi_x);
    file.basis_dim = cli.dim.or(file.basis_dim);
    file.output_dir = cli.out.clone().or(file.output_dir);
    match &cli.command {
        Command::Spectrum(a) => {
            let s = &mut file.spectrum;
            s.phi_x_min = a.phi_x_min.unwrap_or(s.phi_x_min);
            s.phi_x_max = a.phi_x_max.unwrap_or(s.phi_x_max);
            s.points = a.points.unwrap_or(s.points);
            s.n_levels = a.n_levels.unwrap_or(s.n_levels);
            s.dephased_columns &= !a.no_dephased;
        }
        Command::Coherence => {}
        Command::Dephase(a) => {
            let d = &mut file.dephase;
            d.gamma_min = a.gamma_min.unwrap_or(d.gamma_min);
            d.gamma_max = a.gamma_max.unwrap_or(d.gamma_max);
            d.points = a.points.unwrap_or(d.points);
        }
        Command::Witness(a) => {
            let w = &mut file.witness;
            w.state = a.state.unwrap_or(w.state);
            w.protocol = a.protocol.unwrap_or(w.protocol);
            w.measurement = a.measurement.unwrap_or(w.measurement);
            w.gamma_w = a.gamma_w.unwrap_or(w.gamma_w);
            w.t = a.t.or(w.t);
            w.n_bins = a.n_bins.unwrap_or(w.n_bins);
        }
        Command::OracleCheck(a) => {
            let o = &mut file.oracle;
            o.n_levels = a.n_levels.unwrap_or(o.n_levels);
            o.tolerance = a.tolerance.unwrap_or(o.tolerance);
        }
    }
    let cfg = RunConfig::resolve(&file, cli.preset)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    log::info!("output directory {}", cfg.output_dir.display());
    let summary = match &cli.command {
        Command::Spectrum(_) => serde_json::to_value(driver::cmd_spectrum(&cfg)?)?,
        Command::Coherence => serde_json::to_value(driver::cmd_coherence(&cfg)?)?,
        Command::Dephase(_) => {
            let mut s = serde_json::to_value(driver::cmd_dephase(&cfg)?)?;
            s.as_object_mut().map(|o| o.remove("rows"));
            s
        }
        Command::Witness(_) => serde_json::to_value(driver::cmd_witness(&cfg)?)?,
        Command::OracleCheck(_) => {
            let s = driver::cmd_oracle_check(&cfg)?;
            println!(
                "oracle-check: max relative difference {:.3e} (tolerance {:.1e}) in {:.2} s",
                s.max_rel_diff, s.tolerance, s.runtime_s
            );
            if !s.pass {
                return Err(Error::OracleMismatch {
                    max_rel: s.max_rel_diff,
                    tolerance: s.tolerance,
                });
            }
            return Ok(());
        }
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fluxcoh: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
