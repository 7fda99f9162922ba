//! Command-line front end: sequence emission, verification against builtin
//! targets, the duration comparison table, curve sweeps, and a deterministic
//! self-test battery.
//!
//! Exit codes: 0 success/pass, 1 verification failure, 2 usage error,
//! 3 I/O or format error.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{duration_table, sweep, sweep_csv};
use crate::dynamics::{evolve, fidelity, SpinSystem};
use crate::opalg::{basis, commutator, inner_product, pauli, realize, Axis, ComplexMatrix};
use crate::sequences::{
    build_coherence_transfer, build_conventional, build_geodesic, build_improved, build_swap13,
    build_trilinear, coherence_transfer_target, conventional_duration, expand_refocusing,
    geodesic_duration, improved_duration, lambda2_decomposition, lambda2_target, swap13_target,
    trilinear_target, PulseAxis, PulseSequence,
};
use crate::tol::{
    ALGEBRA_TOL, CONJUGATION_TOL, DEFAULT_SEED, DURATION_REL_TOL, EXTREMAL_ODE_TOL, EXTREMAL_STEPS,
    PAULI_TOL, SEQUENCE_FIDELITY_TOL,
};
use crate::verify::{
    check_coherence_transfer, check_control_generators, check_decoupling_algebra, check_extremal,
    check_period_battery, check_swap, verify_sequence,
};
use crate::{Error, Result};

const EXIT_PASS: i32 = 0;
const EXIT_VERIFY_FAILED: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "trispin",
    version,
    about = "Pulse-sequence construction and exact unitary verification for coupled three-spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit a named pulse sequence as JSON
    Build {
        /// Sequence family to construct
        #[arg(value_enum)]
        name: SequenceName,
        #[command(flatten)]
        opts: CommonOpts,
        /// Expand ideal decoupled delays into pi-pulse refocusing sandwiches
        #[arg(long)]
        refocused: bool,
    },
    /// Evolve a sequence and compare it against a builtin target unitary
    Verify {
        /// Builtin sequence to construct and check
        #[arg(long, value_enum, conflicts_with = "sequence")]
        builtin: Option<SequenceName>,
        /// Path to a sequence JSON file
        #[arg(long)]
        sequence: Option<PathBuf>,
        /// Target unitary registry entry
        #[arg(long, value_enum)]
        target: TargetName,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Print the duration comparison table
    Table1 {
        #[command(flatten)]
        opts: CommonOpts,
        /// Output format
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
    },
    /// Emit the three duration curves over kappa as CSV
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        kappa_min: f64,
        #[arg(long, default_value_t = 2.0)]
        kappa_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run the full deterministic verification battery
    Selftest {
        #[command(flatten)]
        opts: CommonOpts,
        /// Force the named check to fail (diagnostics of the failure path)
        #[arg(long, hide = true)]
        inject_failure: Option<String>,
    },
}

#[derive(Args, Debug)]
struct CommonOpts {
    /// Coupling constant in Hz
    #[arg(long = "J", default_value_t = 1.0)]
    j: f64,
    /// Rotation angle theta in radians (in [0, 4*pi])
    #[arg(long, conflicts_with = "kappa")]
    theta: Option<f64>,
    /// Dimensionless angle kappa = theta / 2*pi (in [0, 2])
    #[arg(long)]
    kappa: Option<f64>,
    /// Trilinear axes as three letters from {x,y,z}, e.g. `xzz`
    #[arg(long, default_value = "zzz")]
    axes: String,
    /// Fidelity tolerance for verification gates
    #[arg(long, default_value_t = SEQUENCE_FIDELITY_TOL)]
    tol: f64,
    /// Seed for pseudo-random batteries (falls back to TRISPIN_SEED, then a fixed default)
    #[arg(long)]
    seed: Option<u64>,
    /// Write output to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum SequenceName {
    Conventional,
    Improved,
    Geodesic,
    Trilinear,
    Vf,
    Swap13,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum TargetName {
    Trilinear,
    Vf,
    Swap13,
    Lambda2,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum TableFormat {
    Text,
    Json,
}

/// Parses the process arguments and runs; returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Entry point taking explicit arguments; used by tests.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::DimensionMismatch { .. } | Error::NotPowerOfTwo { .. } => EXIT_IO,
        Error::ConstructionCheckFailed { .. } => EXIT_VERIFY_FAILED,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Build {
            name,
            opts,
            refocused,
        } => cmd_build(name, &opts, refocused),
        Command::Verify {
            builtin,
            sequence,
            target,
            opts,
        } => cmd_verify(builtin, sequence.as_deref(), target, &opts),
        Command::Table1 { opts, format } => cmd_table1(&opts, format),
        Command::Sweep {
            kappa_min,
            kappa_max,
            points,
            opts,
        } => cmd_sweep(kappa_min, kappa_max, points, &opts),
        Command::Selftest {
            opts,
            inject_failure,
        } => cmd_selftest(&opts, inject_failure.as_deref()),
    }
}

impl CommonOpts {
    /// Angle in radians; `required` distinguishes builders that need it.
    fn theta(&self, required: bool) -> Result<f64> {
        match (self.theta, self.kappa) {
            (Some(t), None) => Ok(t),
            (None, Some(k)) => Ok(k * TAU),
            (None, None) if !required => Ok(TAU),
            (None, None) => Err(Error::InvalidRange(
                "one of --theta or --kappa is required".into(),
            )),
            (Some(_), Some(_)) => unreachable!("clap conflict"),
        }
    }

    fn axes(&self) -> Result<[PulseAxis; 3]> {
        let chars: Vec<char> = self.axes.chars().collect();
        if chars.len() != 3 {
            return Err(Error::InvalidRange(format!(
                "--axes needs exactly three letters, got `{}`",
                self.axes
            )));
        }
        Ok([
            PulseAxis::parse(chars[0])?,
            PulseAxis::parse(chars[1])?,
            PulseAxis::parse(chars[2])?,
        ])
    }

    fn seed(&self) -> u64 {
        if let Some(seed) = self.seed {
            return seed;
        }
        if let Ok(text) = std::env::var("TRISPIN_SEED") {
            if let Some(hex) = text.strip_prefix("0x") {
                if let Ok(v) = u64::from_str_radix(hex, 16) {
                    return v;
                }
            }
            if let Ok(v) = text.parse() {
                return v;
            }
        }
        DEFAULT_SEED
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            None => {
                use std::io::Write;
                let stdout = std::io::stdout();
                let mut handle = stdout.lock();
                let trailing = if text.ends_with('\n') { "" } else { "\n" };
                match write!(handle, "{text}{trailing}") {
                    Ok(()) => Ok(()),
                    // The consumer closed the pipe (e.g. `| head`); stop
                    // writing without turning it into a failure.
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                    Err(e) => Err(Error::Parse(format!("write stdout: {e}"))),
                }
            }
            Some(path) => write_file(path, text),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Parse(format!("write {}: {e}", path.display())))
}

fn build_named(name: SequenceName, opts: &CommonOpts) -> Result<PulseSequence> {
    let j = opts.j;
    match name {
        SequenceName::Conventional => build_conventional(opts.theta(true)?, j),
        SequenceName::Improved => build_improved(opts.theta(true)?, j),
        SequenceName::Geodesic => build_geodesic(opts.theta(true)?, j),
        SequenceName::Trilinear => build_trilinear(opts.theta(true)?, j, opts.axes()?),
        SequenceName::Vf => build_coherence_transfer(j),
        SequenceName::Swap13 => build_swap13(j),
    }
}

fn target_matrix(name: TargetName, opts: &CommonOpts) -> Result<ComplexMatrix> {
    match name {
        TargetName::Trilinear => trilinear_target(opts.theta(true)?, opts.axes()?),
        TargetName::Vf => Ok(coherence_transfer_target()),
        TargetName::Swap13 => Ok(swap13_target()),
        TargetName::Lambda2 => Ok(lambda2_target()),
    }
}

fn cmd_build(name: SequenceName, opts: &CommonOpts, refocused: bool) -> Result<i32> {
    let mut seq = build_named(name, opts)?;
    if refocused {
        let sys = SpinSystem::three_spin_chain(opts.j)?;
        seq = expand_refocusing(&seq, &sys)?;
    }
    opts.emit(&seq.to_json())?;
    Ok(EXIT_PASS)
}

fn cmd_verify(
    builtin: Option<SequenceName>,
    sequence_path: Option<&Path>,
    target: TargetName,
    opts: &CommonOpts,
) -> Result<i32> {
    let seq = match (builtin, sequence_path) {
        (Some(name), None) => build_named(name, opts)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("read {}: {e}", path.display())))?;
            PulseSequence::from_json(&text)?
        }
        _ => {
            return Err(Error::InvalidRange(
                "exactly one of --builtin or --sequence is required".into(),
            ))
        }
    };
    let sys = SpinSystem::three_spin_chain(opts.j)?;
    let target = target_matrix(target, opts)?;
    let report = verify_sequence(&seq, &sys, &target, opts.tol)?;
    opts.emit(&report.to_json())?;
    Ok(if report.passed {
        EXIT_PASS
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn cmd_table1(opts: &CommonOpts, format: TableFormat) -> Result<i32> {
    let kappa = match (opts.theta, opts.kappa) {
        (Some(t), None) => t / TAU,
        (None, Some(k)) => k,
        (None, None) => 1.0,
        _ => unreachable!("clap conflict"),
    };
    let j = opts.j;
    let rows = duration_table(j, kappa)?;

    // The geodesic column must equal the builders' accounted durations.
    let built = [
        build_geodesic(kappa * TAU, j)?.duration(),
        build_geodesic(TAU, j)?.duration(),
        build_swap13(j)?.duration(),
        build_coherence_transfer(j)?.duration(),
    ];
    for (row, built) in rows.iter().zip(built) {
        let scale = row.tau_geodesic_s.abs().max(f64::MIN_POSITIVE);
        if (row.tau_geodesic_s - built).abs() > DURATION_REL_TOL * scale {
            eprintln!(
                "error: table/builder duration mismatch for {}: {} vs {}",
                row.label, row.tau_geodesic_s, built
            );
            return Ok(EXIT_VERIFY_FAILED);
        }
    }

    let text = match format {
        TableFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
        TableFormat::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "{:<24} {:>16} {:>16} {:>10}\n",
                "transformation", "conventional (s)", "geodesic (s)", "ratio"
            ));
            for row in &rows {
                out.push_str(&format!(
                    "{:<24} {:>16.7} {:>16.7} {:>10.5}\n",
                    row.label, row.tau_conventional_s, row.tau_geodesic_s, row.ratio
                ));
            }
            out
        }
    };
    opts.emit(&text)?;
    Ok(EXIT_PASS)
}

fn cmd_sweep(kappa_min: f64, kappa_max: f64, points: usize, opts: &CommonOpts) -> Result<i32> {
    let rows = sweep(kappa_min, kappa_max, points, opts.j)?;
    opts.emit(&sweep_csv(&rows))?;
    Ok(EXIT_PASS)
}

struct CheckOutcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

fn residual_outcome(name: &'static str, residual: f64, tol: f64) -> CheckOutcome {
    outcome(
        name,
        residual <= tol,
        format!("max residual {residual:.3e} (tol {tol:.1e})"),
    )
}

fn deficit(fidelity: f64) -> f64 {
    (1.0 - fidelity).max(0.0)
}

fn fidelity_outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    outcome(
        name,
        worst >= 1.0 - tol,
        format!(
            "min fidelity 1 - {:.3e} (gate 1 - {tol:.1e})",
            deficit(worst)
        ),
    )
}

/// Runs every verification in a fixed order, printing one line per check.
/// Output is byte-identical for identical flags and seed.
fn cmd_selftest(opts: &CommonOpts, inject_failure: Option<&str>) -> Result<i32> {
    let j = opts.j;
    let seed = opts.seed();
    let sys = SpinSystem::three_spin_chain(j)?;
    let mut checks: Vec<CheckOutcome> = Vec::new();

    // Pauli commutation and square identities.
    {
        let i = num_complex::Complex64::new(0.0, 1.0);
        let mut worst = 0.0_f64;
        for (a, b, c) in [
            (Axis::X, Axis::Y, Axis::Z),
            (Axis::Y, Axis::Z, Axis::X),
            (Axis::Z, Axis::X, Axis::Y),
        ] {
            let lhs = commutator(&pauli(a), &pauli(b))?;
            worst = worst.max(lhs.max_abs_diff(&pauli(c).scale(i))?);
        }
        for axis in Axis::XYZ {
            let sq = pauli(axis).matmul(&pauli(axis))?;
            let quarter = ComplexMatrix::identity(2).scale_real(0.25);
            worst = worst.max(sq.max_abs_diff(&quarter)?);
        }
        checks.push(residual_outcome("pauli-identities", worst, PAULI_TOL));
    }

    // Basis orthogonality at n = 2 and n = 3.
    for n in [2usize, 3] {
        let expected = f64::powi(2.0, n as i32 - 2);
        let mats: Vec<ComplexMatrix> = basis(n).iter().map(realize).collect::<Result<_>>()?;
        let mut worst = 0.0_f64;
        for (r, br) in mats.iter().enumerate() {
            for (s, bs) in mats.iter().enumerate() {
                let ip = inner_product(br, bs)?;
                let target = if r == s { expected } else { 0.0 };
                worst = worst.max((ip.re - target).abs().max(ip.im.abs()));
            }
        }
        let name = if n == 2 {
            "basis-orthogonality-n2"
        } else {
            "basis-orthogonality-n3"
        };
        checks.push(residual_outcome(name, worst, ALGEBRA_TOL));
    }

    // so(3) and mixed relations of the control generators.
    {
        let report = check_control_generators()?;
        checks.push(residual_outcome(
            "control-generators",
            report.max_residual(),
            ALGEBRA_TOL,
        ));
    }

    // Rotation-period identity battery.
    {
        let report = check_period_battery(20, seed)?;
        checks.push(residual_outcome(
            "period-identity",
            report.max_residual(),
            CONJUGATION_TOL,
        ));
    }

    // Commutator table and conjugation identity of the decoupling route.
    {
        let report = check_decoupling_algebra()?;
        checks.push(outcome(
            "decoupling-algebra",
            report.passed,
            format!("max residual {:.3e}", report.max_residual()),
        ));
    }

    // Extremal trajectory conditions at two angles.
    for (name, theta) in [
        ("extremal-quarter-turn", TAU / 4.0),
        ("extremal-full-turn", TAU),
    ] {
        let check = check_extremal(theta, j, EXTREMAL_STEPS)?;
        let passed = check.passed(EXTREMAL_ODE_TOL);
        checks.push(outcome(
            name,
            passed,
            format!(
                "ode residual {:.3e} (tol {:.1e}), endpoint fidelity 1 - {:.3e}",
                check.adjoint_residual.max(check.trajectory_residual),
                EXTREMAL_ODE_TOL,
                deficit(check.endpoint_fidelity)
            ),
        ));
    }

    // Builder fidelity over angle grids.
    let zzz = [PulseAxis::Z; 3];
    {
        let grid = [TAU / 4.0, TAU / 2.0, TAU, 1.5 * TAU];
        let mut worst = 1.0_f64;
        for &theta in &grid {
            let target = trilinear_target(theta, zzz)?;
            for seq in [build_conventional(theta, j)?, build_improved(theta, j)?] {
                let f = fidelity(&evolve(&seq, &sys)?.matrix, &target)?;
                worst = worst.min(f);
            }
        }
        checks.push(fidelity_outcome(
            "conventional-improved-family",
            worst,
            SEQUENCE_FIDELITY_TOL,
        ));
    }
    {
        let grid = [TAU / 4.0, TAU / 2.0, TAU, 1.5 * TAU, 2.0 * TAU];
        let mut worst = 1.0_f64;
        for &theta in &grid {
            let target = trilinear_target(theta, zzz)?;
            let seq = build_geodesic(theta, j)?;
            worst = worst.min(fidelity(&evolve(&seq, &sys)?.matrix, &target)?);
        }
        checks.push(fidelity_outcome(
            "geodesic-family",
            worst,
            SEQUENCE_FIDELITY_TOL,
        ));
    }
    {
        let axes_list = [
            [PulseAxis::X, PulseAxis::Z, PulseAxis::Z],
            [PulseAxis::Y, PulseAxis::Z, PulseAxis::Y],
            [PulseAxis::X, PulseAxis::Z, PulseAxis::X],
        ];
        let mut worst = 1.0_f64;
        for axes in axes_list {
            let seq = build_trilinear(TAU, j, axes)?;
            let target = trilinear_target(TAU, axes)?;
            worst = worst.min(fidelity(&evolve(&seq, &sys)?.matrix, &target)?);
        }
        checks.push(fidelity_outcome(
            "trilinear-conjugations",
            worst,
            SEQUENCE_FIDELITY_TOL,
        ));
    }

    // Coherence transfer and swap, by construction and by conjugation.
    {
        let u = evolve(&build_coherence_transfer(j)?, &sys)?;
        let f = fidelity(&u.matrix, &coherence_transfer_target())?;
        let conj = check_coherence_transfer(&u.matrix)?;
        checks.push(outcome(
            "coherence-transfer",
            f >= 1.0 - SEQUENCE_FIDELITY_TOL && conj.passed,
            format!(
                "fidelity 1 - {:.3e}, conjugation residual {:.3e}",
                deficit(f),
                conj.max_residual()
            ),
        ));
    }
    {
        let u = evolve(&build_swap13(j)?, &sys)?;
        let f = fidelity(&u.matrix, &swap13_target())?;
        let report = check_swap(&u.matrix, seed)?;
        checks.push(outcome(
            "swap13",
            f >= 1.0 - SEQUENCE_FIDELITY_TOL && report.passed,
            format!(
                "fidelity 1 - {:.3e}, max residual {:.3e}",
                deficit(f),
                report.max_residual()
            ),
        ));
    }

    // Refocused decoupling reproduces the ideal sequences.
    {
        let mut worst = 1.0_f64;
        for theta in [TAU / 4.0, TAU] {
            let ideal = build_conventional(theta, j)?;
            let physical = expand_refocusing(&ideal, &sys)?;
            let u_ideal = evolve(&ideal, &sys)?.matrix;
            let u_phys = evolve(&physical, &sys)?.matrix;
            worst = worst.min(fidelity(&u_ideal, &u_phys)?);
            worst = worst.min(fidelity(&u_phys, &trilinear_target(theta, zzz)?)?);
        }
        checks.push(fidelity_outcome(
            "refocused-decoupling",
            worst,
            SEQUENCE_FIDELITY_TOL,
        ));
    }

    // Doubly-controlled phase target versus its exponential form.
    {
        let residual = lambda2_target().max_abs_diff(&lambda2_decomposition())?;
        checks.push(residual_outcome(
            "lambda2-decomposition",
            residual,
            ALGEBRA_TOL,
        ));
    }

    // Closed-form durations against builder accounting, and curve ordering.
    {
        let mut worst = 0.0_f64;
        for theta in [TAU / 4.0, TAU / 2.0, TAU, 1.5 * TAU, 2.0 * TAU] {
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(rel(
                build_conventional(theta, j)?.duration(),
                conventional_duration(theta, j),
            ));
            worst = worst.max(rel(
                build_improved(theta, j)?.duration(),
                improved_duration(theta, j),
            ));
            worst = worst.max(rel(
                build_geodesic(theta, j)?.duration(),
                geodesic_duration(theta, j),
            ));
        }
        let ordered = sweep(0.0, 2.0, 201, j)?[1..]
            .iter()
            .all(|r| r.t_optimal < r.t_improved && r.t_improved < r.t_conventional);
        checks.push(outcome(
            "durations-and-ordering",
            worst <= DURATION_REL_TOL && ordered,
            format!("max relative error {worst:.3e}, strict ordering {ordered}"),
        ));
    }

    // Assemble the report.
    let mut lines = vec![format!("selftest seed=0x{seed:X} J={j} Hz")];
    let mut all_passed = true;
    for mut check in checks {
        if inject_failure == Some(check.name) {
            check.passed = false;
            check.detail.push_str(" [injected failure]");
        }
        all_passed &= check.passed;
        lines.push(format!(
            "[{}] {:<32} {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        ));
    }
    let verdict = if all_passed {
        "all checks passed"
    } else {
        "FAILED"
    };
    lines.push(format!("selftest: {verdict}"));
    opts.emit(&(lines.join("\n") + "\n"))?;
    Ok(if all_passed {
        EXIT_PASS
    } else {
        EXIT_VERIFY_FAILED
    })
}
