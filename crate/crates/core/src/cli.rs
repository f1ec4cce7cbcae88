//! Command-line front end. [`execute`] takes the argument list and output
//! streams explicitly so it can be driven from tests.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;

use crate::error::{Error, ErrorClass, Result};
use crate::oracles::{integrate_two_level, TwoLevelModel};
use crate::runner::{self, analysis, load_scenario_file, Scenario};
use crate::units;
use crate::vibrational::{overlap_matrix, solve_levels, write_wavefunction_csv, LevelSelection};

/// Rows written by `oracle rabi` are thinned to at most this many.
const MAX_ORACLE_ROWS: usize = 20_000;

#[derive(Debug, Parser)]
#[command(
    name = "elvib",
    version,
    about = "Electronic-vibrational entanglement in laser-driven diatomics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one channel's vibrational levels and write them as CSV.
    Levels(LevelsArgs),
    /// Run a scenario and write the time series, metadata and snapshots.
    Propagate(PropagateArgs),
    /// Closed-form models checked against direct integration.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Franck-Condon factor matrix between two channels.
    Fcf(FcfArgs),
    /// Check a scenario file and print the resolved settings.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct LevelsArgs {
    config: PathBuf,
    /// Channel name as given in the scenario.
    #[arg(long)]
    channel: String,
    #[arg(long)]
    n_levels: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write each wavefunction to `<dir>/level_<v>.csv`.
    #[arg(long)]
    wavefunctions_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PropagateArgs {
    config: PathBuf,
    /// Defaults to the scenario's `output.directory`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Two-level Rabi oscillation: formula against RK4.
    Rabi(RabiArgs),
}

#[derive(Debug, Args)]
struct RabiArgs {
    #[arg(long)]
    wl_cm1: f64,
    /// Franck-Condon amplitude (real part).
    #[arg(long, allow_negative_numbers = true)]
    f: f64,
    /// Imaginary part of the Franck-Condon amplitude.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    f_im: f64,
    #[arg(long, allow_negative_numbers = true)]
    evg_cm1: f64,
    #[arg(long, allow_negative_numbers = true)]
    eve_cm1: f64,
    /// Subtracted from the upper level, for undressed level energies.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    photon_energy_cm1: f64,
    #[arg(long)]
    t_end_ps: f64,
    /// Integration step; defaults to 0.005/Ω.
    #[arg(long)]
    dt_ps: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FcfArgs {
    config: PathBuf,
    #[arg(long)]
    channel_a: String,
    #[arg(long)]
    channel_b: String,
    #[arg(long)]
    na: usize,
    #[arg(long)]
    nb: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    config: PathBuf,
    /// Print the scenario with every default filled in.
    #[arg(long)]
    print_config: bool,
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Validation => 1,
        ErrorClass::Runtime => 2,
        ErrorClass::Io => 3,
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 1;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    let result = match cli.command {
        Command::Levels(a) => levels(&a, out),
        Command::Propagate(a) => propagate(&a, out, err),
        Command::Oracle(OracleCommand::Rabi(a)) => rabi(&a, out),
        Command::Fcf(a) => fcf(&a, out),
        Command::Validate(a) => validate(&a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(e.class())
        }
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn channel(s: &Scenario, name: &str, flag: &str) -> Result<usize> {
    s.config.channel_index(name).ok_or_else(|| {
        Error::InvalidInput(format!(
            "{flag}: no channel named \"{name}\" (have {})",
            s.channel_names().join(", ")
        ))
    })
}

fn levels(a: &LevelsArgs, out: &mut dyn Write) -> Result<()> {
    let s = load_scenario_file(&a.config)?;
    let c = channel(&s, &a.channel, "--channel")?;
    let basis = solve_levels(&s.grid, &s.curves[c], s.mass, s.j, LevelSelection::Count(a.n_levels))?;
    basis.write_levels_csv(&a.out)?;
    if let Some(dir) = &a.wavefunctions_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for l in basis.levels() {
            write_wavefunction_csv(&l.wavefunction, &dir.join(format!("level_{}.csv", l.v)))?;
        }
    }
    let e: Vec<f64> = basis.energies().into_iter().map(units::energy_from_internal).collect();
    writeln!(
        out,
        "channel {}: {} levels, E from {:.6} to {:.6} cm-1",
        a.channel,
        e.len(),
        e[0],
        e[e.len() - 1]
    )
    .map_err(io_out)?;
    if e.len() > 1 {
        writeln!(
            out,
            "first spacing {:.10} cm-1, last spacing {:.10} cm-1",
            e[1] - e[0],
            e[e.len() - 1] - e[e.len() - 2]
        )
        .map_err(io_out)?;
    }
    writeln!(out, "wrote {}", a.out.display()).map_err(io_out)
}

fn propagate(a: &PropagateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let s = load_scenario_file(&a.config)?;
    let dir = a
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&s.config.output.directory));
    let result = runner::run(&s)?;
    for w in &result.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let files = runner::write_outputs(&s, &result, &dir)?;

    let names = s.channel_names();
    let Some(last) = result.records.last() else {
        return Err(Error::Numerical("run produced no samples".into()));
    };
    writeln!(
        out,
        "t = {:.6} ps after {} steps ({:.2} s)",
        units::time_from_internal(last.time),
        result.steps,
        result.wall_time_s
    )
    .map_err(io_out)?;
    for (name, p) in names.iter().zip(&last.populations) {
        writeln!(out, "P_{name} = {p:.9}").map_err(io_out)?;
    }
    writeln!(out, "L = {:.9}", last.linear_entropy).map_err(io_out)?;
    writeln!(out, "S_vN = {:.9} bits", last.svn_exact).map_err(io_out)?;
    writeln!(out, "purity = {:.9}", last.purity).map_err(io_out)?;
    writeln!(out, "max norm drift = {:.3e}", result.max_norm_drift).map_err(io_out)?;

    let times: Vec<f64> = result
        .records
        .iter()
        .map(|r| units::time_from_internal(r.time))
        .collect();
    let l: Vec<f64> = result.records.iter().map(|r| r.linear_entropy).collect();
    // Below this swing L only carries propagation roundoff.
    let swing = l.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - l.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let period = if swing > 1e-8 {
        analysis::dominant_period(&times, &l)
    } else {
        None
    };
    match period {
        Some(p) => writeln!(out, "dominant L period = {p:.6} ps"),
        None => writeln!(out, "dominant L period = none"),
    }
    .map_err(io_out)?;
    if let Some(sel) = result.selected_level {
        writeln!(
            out,
            "initial level v = {} in {} at {:.6} cm-1",
            sel.v,
            names[sel.channel],
            units::energy_from_internal(sel.energy)
        )
        .map_err(io_out)?;
    }
    for f in files {
        writeln!(out, "wrote {}", f.display()).map_err(io_out)?;
    }
    Ok(())
}

fn rabi(a: &RabiArgs, out: &mut dyn Write) -> Result<()> {
    let cm1 =
        |flag: &str, v: f64| units::energy_to_internal(v).map_err(|e| Error::InvalidInput(format!("{flag}: {e}")));
    let model = TwoLevelModel::new(
        cm1("--evg-cm1", a.evg_cm1)?,
        cm1("--eve-cm1", a.eve_cm1)? - cm1("--photon-energy-cm1", a.photon_energy_cm1)?,
        cm1("--wl-cm1", a.wl_cm1)?,
        C64::new(a.f, a.f_im),
    )?;
    if !(a.t_end_ps >= 0.0) || !a.t_end_ps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "--t-end-ps must be finite and non-negative, got {}",
            a.t_end_ps
        )));
    }
    let t_end = units::time_to_internal(a.t_end_ps)?;
    let omega = model.rabi_frequency();
    let dt = match a.dt_ps {
        Some(dt) => units::time_to_internal(dt)?,
        None if omega > 0.0 => 0.005 / omega,
        None => (t_end / 1000.0).max(f64::MIN_POSITIVE),
    };
    let samples = integrate_two_level(&model, t_end, dt)?;
    let stride = samples.len().div_ceil(MAX_ORACLE_ROWS).max(1);

    let path = a.out.as_path();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["t_ps", "pe_formula", "pe_ode", "abs_diff", "linear_entropy_formula"])
        .map_err(|e| csv_error(path, e))?;
    let mut max_dev: f64 = 0.0;
    for (k, smp) in samples.iter().enumerate() {
        let formula = model.excited_population(smp.time);
        let ode = smp.excited_population();
        let dev = (formula - ode).abs();
        max_dev = max_dev.max(dev);
        if k % stride == 0 || k + 1 == samples.len() {
            w.write_record([
                format!("{:.12e}", units::time_from_internal(smp.time)),
                format!("{formula:.12e}"),
                format!("{ode:.12e}"),
                format!("{dev:.3e}"),
                format!("{:.12e}", model.linear_entropy(smp.time)),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let period = model.rabi_period();
    if period.is_finite() {
        writeln!(out, "T^R = {:.6} ps", units::time_from_internal(period)).map_err(io_out)?;
    } else {
        writeln!(out, "T^R = inf (no coupling and no detuning)").map_err(io_out)?;
    }
    writeln!(out, "amplitude = {:.9}", model.amplitude()).map_err(io_out)?;
    writeln!(out, "max |formula - ode| = {max_dev:.3e}").map_err(io_out)?;
    writeln!(out, "wrote {}", a.out.display()).map_err(io_out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn fcf(a: &FcfArgs, out: &mut dyn Write) -> Result<()> {
    let s = load_scenario_file(&a.config)?;
    let ca = channel(&s, &a.channel_a, "--channel-a")?;
    let cb = channel(&s, &a.channel_b, "--channel-b")?;
    let ba = solve_levels(&s.grid, &s.curves[ca], s.mass, s.j, LevelSelection::Count(a.na))?;
    let bb = solve_levels(&s.grid, &s.curves[cb], s.mass, s.j, LevelSelection::Count(a.nb))?;
    let m = overlap_matrix(&ba, &bb, a.na, a.nb)?;

    let path = a.out.as_path();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["v_a".to_string()];
    header.extend((0..a.nb).map(|v| format!("v_b_{v}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let (mut best, mut best_at) = (0.0, (0, 0));
    for i in 0..a.na {
        let mut row = vec![i.to_string()];
        for j in 0..a.nb {
            let f = m[(i, j)].norm_sqr();
            if f > best {
                best = f;
                best_at = (i, j);
            }
            row.push(format!("{f:.12e}"));
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let max_col = (0..a.nb)
        .map(|j| (0..a.na).map(|i| m[(i, j)].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    writeln!(out, "{}x{} Franck-Condon factors", a.na, a.nb).map_err(io_out)?;
    writeln!(out, "largest {best:.9} at v_a = {}, v_b = {}", best_at.0, best_at.1).map_err(io_out)?;
    writeln!(out, "largest column sum {max_col:.9}").map_err(io_out)?;
    writeln!(out, "wrote {}", a.out.display()).map_err(io_out)
}

fn validate(a: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let s = load_scenario_file(&a.config)?;
    let plan = runner::build_segments(&s)?;
    for w in &plan.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if a.print_config {
        return writeln!(out, "{}", s.config.to_json()).map_err(io_out);
    }
    let p = &s.propagation;
    writeln!(
        out,
        "ok: {} channel(s): {}",
        s.n_channels(),
        s.channel_names().join(", ")
    )
    .map_err(io_out)?;
    writeln!(
        out,
        "grid: {} points on [{}, {}] a0",
        s.grid.n_points(),
        s.grid.r_min(),
        s.grid.r_max()
    )
    .map_err(io_out)?;
    writeln!(
        out,
        "pulses: {} configured, {} segment(s)",
        s.config.pulses.len(),
        plan.segments.len()
    )
    .map_err(io_out)?;
    writeln!(
        out,
        "time: {} to {} ps, dt = {:.6e} ps, {} steps",
        units::time_from_internal(p.t_start),
        units::time_from_internal(p.t_end),
        units::time_from_internal(p.dt),
        p.steps().0
    )
    .map_err(io_out)
}
