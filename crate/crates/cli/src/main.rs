//! `weakmet`: breakdowns, sweeps, figure data, oracle checks and Monte Carlo
//! runs from the command line.
//!
//! Exit status is 0 on success, 2 when a flag fails validation and 3 when the
//! computation itself reports an error.

mod output;

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::Metadata;
use weakmetrology::config_space::{
    gaussian_fisher_breakdown, numerical_gaussian_breakdown, sampled_fisher_breakdown, GaussianMeter,
    MeterProfile, Regime, SampledWavefunction,
};
use weakmetrology::estimation::{crb_experiment, EstimateSummary, Scenario, TrialConfig};
use weakmetrology::phase_space::{
    fig1_grid, figure_sweep, numerical_phase_breakdown, phase_fisher_breakdown, photon_sweep,
    CoherentMeter, Coupling,
};
use weakmetrology::{Execution, FisherBreakdown, QubitState, SelectionPair};

#[derive(Parser)]
#[command(name = "weakmet", version, about = "Fisher-information accounting for post-selected weak measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One breakdown as JSON.
    Breakdown {
        #[command(flatten)]
        meter: MeterArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, allow_hyphen_values = true)]
        g: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Breakdowns over an evenly spaced range of g as CSV.
    Sweep {
        #[command(flatten)]
        meter: MeterArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, allow_hyphen_values = true)]
        g_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        g_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Contributions to the total information over g in [0, π/2], as CSV.
    Fig1 {
        #[arg(long)]
        n: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[command(flatten)]
        pair: FigurePairArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Branch information at g = π/2 for n = 1..n_max, as CSV.
    Fig2 {
        #[arg(long)]
        n_max: u32,
        #[command(flatten)]
        pair: FigurePairArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed forms against finite-difference numerics, as JSON.
    QfiCheck {
        #[command(flatten)]
        meter: MeterArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, allow_hyphen_values = true)]
        g: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo of the post-selection statistic with maximum-likelihood estimates, as JSON.
    Mc {
        #[command(flatten)]
        meter: MeterArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, allow_hyphen_values = true)]
        g: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 200)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lower edge of the estimation window (requires --g-hi).
        #[arg(long, allow_hyphen_values = true, requires = "g_hi")]
        g_lo: Option<f64>,
        /// Upper edge of the estimation window (requires --g-lo).
        #[arg(long, allow_hyphen_values = true, requires = "g_lo")]
        g_hi: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioKind {
    ConfigGauss,
    Phase,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum CouplingKind {
    Symmetric,
    Asymmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    Gaussian,
    Hermite,
    Chirped,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeKind {
    General,
    Weak,
    Strong,
}

#[derive(Args)]
struct MeterArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioKind,
    /// Gaussian position spread (config-gauss, or built-in sampled profiles).
    #[arg(long)]
    sigma: Option<f64>,
    /// Mean photon number of the coherent meter (phase).
    #[arg(long)]
    n: Option<f64>,
    #[arg(long, value_enum, default_value = "symmetric")]
    coupling: CouplingKind,
    /// CSV file with columns p,re,im (sampled).
    #[arg(long)]
    wavefunction: Option<PathBuf>,
    /// Built-in analytic profile (sampled, instead of --wavefunction).
    #[arg(long, value_enum)]
    profile: Option<ProfileKind>,
    /// Chirp of the chirped profile.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    beta: f64,
    /// Displacement of the chirped profile.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    p0: f64,
    #[arg(long, value_enum, default_value = "general")]
    regime: RegimeKind,
}

/// Angles in radians.
#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    theta_i: f64,
    #[arg(long)]
    theta_f: f64,
    #[arg(long, allow_hyphen_values = true)]
    phi0: f64,
}

/// Angles in radians, defaulting to the equatorial orthogonal configuration.
#[derive(Args)]
struct FigurePairArgs {
    #[arg(long, default_value_t = FRAC_PI_2)]
    theta_i: f64,
    #[arg(long, default_value_t = FRAC_PI_2)]
    theta_f: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = PI)]
    phi0: f64,
}

#[derive(Args)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numeric(weakmetrology::Error),
}

impl From<weakmetrology::Error> for Failure {
    fn from(e: weakmetrology::Error) -> Self {
        Failure::Numeric(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

enum Meter {
    Gauss(GaussianMeter),
    Phase(CoherentMeter),
    Sampled(Box<SampledWavefunction>, Regime),
}

impl Meter {
    fn breakdown(&self, pair: &SelectionPair, g: f64) -> weakmetrology::Result<FisherBreakdown> {
        match self {
            Meter::Gauss(m) => Ok(gaussian_fisher_breakdown(m, pair, g)),
            Meter::Phase(m) => match m.coupling {
                Coupling::Symmetric => phase_fisher_breakdown(m, pair, g),
                Coupling::Asymmetric => numerical_phase_breakdown(m, pair, g),
            },
            Meter::Sampled(f, regime) => sampled_fisher_breakdown(f, pair, g, *regime),
        }
    }
}

fn finite(name: &str, v: f64) -> Outcome<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        usage(format!("--{name} must be finite, got {v}"))
    }
}

fn angle_pair(theta_i: f64, theta_f: f64, phi0: f64, meta: &mut Metadata) -> Outcome<SelectionPair> {
    for (name, v) in [("theta-i", theta_i), ("theta-f", theta_f)] {
        if !(0.0..=PI).contains(&finite(name, v)?) {
            return usage(format!("--{name} = {v} must lie in [0, π] (radians)"));
        }
    }
    finite("phi0", phi0)?;
    meta.num("theta_i", theta_i).num("theta_f", theta_f).num("phi0", phi0);
    let pre = QubitState::new(theta_i, phi0).map_err(|e| Failure::Usage(e.to_string()))?;
    let post = QubitState::new(theta_f, 0.0).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(SelectionPair::new(pre, post))
}

fn positive(name: &str, v: Option<f64>, allow_zero: bool) -> Outcome<f64> {
    match v {
        None => usage(format!("--{name} is required for this scenario")),
        Some(x) if x.is_finite() && (x > 0.0 || (allow_zero && x == 0.0)) => Ok(x),
        Some(x) => usage(format!("--{name} = {x} must be {}", if allow_zero { "non-negative" } else { "positive" })),
    }
}

/// Validate the meter flags; loading a wavefunction file is the only step
/// that can fail numerically.
fn meter(args: &MeterArgs, g_extent: f64, meta: &mut Metadata) -> Outcome<Meter> {
    match args.scenario {
        ScenarioKind::ConfigGauss => {
            let sigma = positive("sigma", args.sigma, false)?;
            meta.text("scenario", "config-gauss").num("sigma", sigma);
            Ok(Meter::Gauss(GaussianMeter::new(sigma)?))
        }
        ScenarioKind::Phase => {
            let n = positive("n", args.n, true)?;
            let coupling = match args.coupling {
                CouplingKind::Symmetric => Coupling::Symmetric,
                CouplingKind::Asymmetric => Coupling::Asymmetric,
            };
            meta.text("scenario", "phase").num("n", n).text(
                "coupling",
                match coupling {
                    Coupling::Symmetric => "symmetric",
                    Coupling::Asymmetric => "asymmetric",
                },
            );
            Ok(Meter::Phase(CoherentMeter::with_photons(n, coupling)?))
        }
        ScenarioKind::Sampled => {
            let regime = match args.regime {
                RegimeKind::General => Regime::General,
                RegimeKind::Weak => Regime::Weak,
                RegimeKind::Strong => Regime::Strong,
            };
            meta.text("scenario", "sampled");
            let f = match (&args.wavefunction, args.profile) {
                (Some(path), None) => {
                    meta.text("wavefunction", &path.display().to_string());
                    SampledWavefunction::from_csv_path(path)?
                }
                (None, Some(kind)) => {
                    let sigma = positive("sigma", args.sigma, false)?;
                    finite("beta", args.beta)?;
                    finite("p0", args.p0)?;
                    let (name, profile) = match kind {
                        ProfileKind::Gaussian => ("gaussian", MeterProfile::Gaussian { sigma }),
                        ProfileKind::Hermite => ("hermite", MeterProfile::Hermite { sigma }),
                        ProfileKind::Chirped => (
                            "chirped",
                            MeterProfile::Chirped {
                                sigma,
                                beta: args.beta,
                                p0: args.p0,
                            },
                        ),
                    };
                    meta.text("profile", name).num("sigma", sigma);
                    if let MeterProfile::Chirped { beta, p0, .. } = profile {
                        meta.num("beta", beta).num("p0", p0);
                    }
                    profile.sample(g_extent)?
                }
                _ => return usage("sampled scenario needs exactly one of --wavefunction or --profile"),
            };
            meta.text(
                "regime",
                match regime {
                    Regime::General => "general",
                    Regime::Weak => "weak",
                    Regime::Strong => "strong",
                },
            );
            Ok(Meter::Sampled(Box::new(f), regime))
        }
    }
}

fn check_output(out: &OutputArgs) -> Outcome<()> {
    if let Some(path) = &out.output {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return usage(format!("output directory {} does not exist", parent.display()));
        }
    }
    Ok(())
}

fn emit(out: &OutputArgs, text: &str) -> Outcome<()> {
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .or_else(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn breakdown_row(b: &FisherBreakdown) -> Vec<f64> {
    vec![b.g, b.p_d, b.q_d, b.q_r, b.pd_qd, b.pr_qr, b.f_p, b.f_tot, b.q_j]
}

#[derive(Serialize)]
struct Check {
    quantity: &'static str,
    closed_form: f64,
    numerical: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct CheckReport {
    checks: Vec<Check>,
    max_relative_error: f64,
}

fn qfi_check(closed: &FisherBreakdown, numeric: &FisherBreakdown) -> CheckReport {
    let checks: Vec<Check> = [
        ("p_d", closed.p_d, numeric.p_d),
        ("Q_d", closed.q_d, numeric.q_d),
        ("Q_r", closed.q_r, numeric.q_r),
        ("F_p", closed.f_p, numeric.f_p),
        ("Q_j", closed.q_j, numeric.q_j),
    ]
    .into_iter()
    .map(|(quantity, c, n)| Check {
        quantity,
        closed_form: c,
        numerical: n,
        relative_error: if c == n { 0.0 } else { (n - c).abs() / c.abs().max(f64::MIN_POSITIVE) },
    })
    .collect();
    let max_relative_error = checks.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    CheckReport {
        checks,
        max_relative_error,
    }
}

#[derive(Serialize)]
struct McReport {
    #[serde(flatten)]
    summary: EstimateSummary,
    variance_over_crb: f64,
}

fn run(command: Command) -> Outcome<()> {
    match command {
        Command::Breakdown { meter: m, pair, g, out } => {
            check_output(&out)?;
            let mut meta = Metadata::new("breakdown");
            let g = finite("g", g)?;
            let meter = meter(&m, g.abs(), &mut meta)?;
            let pair = angle_pair(pair.theta_i, pair.theta_f, pair.phi0, &mut meta)?;
            meta.num("g", g);
            let b = meter.breakdown(&pair, g)?;
            emit(&out, &output::json(&meta, "breakdown", &b))
        }
        Command::Sweep {
            meter: m,
            pair,
            g_min,
            g_max,
            points,
            out,
        } => {
            check_output(&out)?;
            let mut meta = Metadata::new("sweep");
            let (g_min, g_max) = (finite("g-min", g_min)?, finite("g-max", g_max)?);
            if points == 0 || (points > 1 && g_max <= g_min) || (points == 1 && g_max < g_min) {
                return usage("need --points >= 1 and --g-max > --g-min");
            }
            let meter = meter(&m, g_min.abs().max(g_max.abs()), &mut meta)?;
            let pair = angle_pair(pair.theta_i, pair.theta_f, pair.phi0, &mut meta)?;
            meta.num("g_min", g_min).num("g_max", g_max).int("points", points as u64);
            let grid: Vec<f64> = (0..points)
                .map(|i| match points {
                    1 => g_min,
                    _ => g_min + (g_max - g_min) * i as f64 / (points - 1) as f64,
                })
                .collect();
            let rows = Execution::Parallel
                .map(&grid, |&g| meter.breakdown(&pair, g).map(|b| breakdown_row(&b)))
                .into_iter()
                .collect::<weakmetrology::Result<Vec<_>>>()?;
            let header = ["g", "p_d", "Q_d", "Q_r", "pdQd", "prQr", "F_p", "F_tot", "Q_j"];
            emit(&out, &output::csv(&meta, &header, &rows))
        }
        Command::Fig1 { n, points, pair, out } => {
            check_output(&out)?;
            let mut meta = Metadata::new("fig1");
            let n = positive("n", Some(n), true)?;
            if points == 0 {
                return usage("--points must be at least 1");
            }
            meta.num("n", n).int("points", points as u64);
            let pair = angle_pair(pair.theta_i, pair.theta_f, pair.phi0, &mut meta)?;
            let meter = CoherentMeter::with_photons(n, Coupling::Symmetric)?;
            let rows: Vec<Vec<f64>> = figure_sweep(&meter, &pair, &fig1_grid(points), Execution::Parallel)?
                .iter()
                .map(|b| vec![b.g, b.f_p, b.pd_qd, b.pr_qr, b.f_tot, b.q_j])
                .collect();
            emit(&out, &output::csv(&meta, &["g", "F_p", "pdQd", "prQr", "F_tot", "Q_j"], &rows))
        }
        Command::Fig2 { n_max, pair, out } => {
            check_output(&out)?;
            let mut meta = Metadata::new("fig2");
            if n_max == 0 {
                return usage("--n-max must be at least 1");
            }
            meta.int("n_max", u64::from(n_max));
            let pair = angle_pair(pair.theta_i, pair.theta_f, pair.phi0, &mut meta)?;
            meta.num("g", FRAC_PI_2);
            let ns: Vec<f64> = (1..=n_max).map(f64::from).collect();
            let rows: Vec<Vec<f64>> = photon_sweep(&ns, &pair, Execution::Parallel)?
                .iter()
                .zip(&ns)
                .map(|(b, &n)| vec![n, b.pd_qd, b.pr_qr, b.q_j, 4.0 * n])
                .collect();
            emit(&out, &output::csv(&meta, &["n", "pdQd", "prQr", "Q_j", "classical_4n"], &rows))
        }
        Command::QfiCheck { meter: m, pair, g, out } => {
            check_output(&out)?;
            let mut meta = Metadata::new("qfi-check");
            let g = finite("g", g)?;
            if m.scenario == ScenarioKind::Sampled {
                return usage("qfi-check supports the config-gauss and phase scenarios");
            }
            let meter = meter(&m, g.abs(), &mut meta)?;
            let pair = angle_pair(pair.theta_i, pair.theta_f, pair.phi0, &mut meta)?;
            meta.num("g", g);
            let (closed, numeric) = match &meter {
                Meter::Gauss(gm) => (gaussian_fisher_breakdown(gm, &pair, g), numerical_gaussian_breakdown(gm, &pair, g)?),
                Meter::Phase(pm) => (phase_fisher_breakdown(pm, &pair, g)?, numerical_phase_breakdown(pm, &pair, g)?),
                Meter::Sampled(..) => unreachable!("rejected above"),
            };
            emit(&out, &output::json(&meta, "report", &qfi_check(&closed, &numeric)))
        }
        Command::Mc {
            meter: m,
            pair,
            g,
            trials,
            repeats,
            seed,
            g_lo,
            g_hi,
            out,
        } => {
            check_output(&out)?;
            let mut meta = Metadata::new("mc");
            let g = finite("g", g)?;
            let scenario = match meter(&m, g.abs(), &mut meta)? {
                Meter::Gauss(gm) => Scenario::ConfigGauss(gm),
                Meter::Phase(pm) if pm.coupling == Coupling::Symmetric => Scenario::Phase(pm),
                _ => return usage("mc supports config-gauss and symmetric phase scenarios"),
            };
            let pair = angle_pair(pair.theta_i, pair.theta_f, pair.phi0, &mut meta)?;
            if trials == 0 {
                return usage("--trials must be at least 1");
            }
            if repeats < 2 {
                return usage("--repeats must be at least 2");
            }
            meta.num("g", g).int("trials", trials).int("repeats", repeats as u64).int("seed", seed);
            let window = match (g_lo, g_hi) {
                (Some(lo), Some(hi)) => {
                    if finite("g-lo", lo)? >= finite("g-hi", hi)? {
                        return usage("--g-lo must be below --g-hi");
                    }
                    meta.num("g_lo", lo).num("g_hi", hi);
                    Some((lo, hi))
                }
                _ => None,
            };
            let config = TrialConfig {
                scenario,
                pair,
                g_true: g,
                trials,
                seed,
                window,
            };
            let summary = crb_experiment(&config, repeats, Execution::Parallel)?;
            let report = McReport {
                summary,
                variance_over_crb: summary.efficiency_ratio(),
            };
            emit(&out, &output::json(&meta, "summary", &report))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {}: {e}", e.kind());
            ExitCode::from(3)
        }
    }
}
