//! `sirsd`: simulate SIRSD presets, fit Koopman surrogates and export artifacts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sirsd_koopman::export::{export_pipeline, trajectory_csv, write_atomic};
use sirsd_koopman::nsfd::simulate_nsfd;
use sirsd_koopman::scenarios::{
    run_long_measles, run_pipeline, DictChoice, Overrides, PipelineOutput, Preset, RangeWarning,
    ScenarioPreset,
};
use sirsd_koopman::{Error, ErrorCategory};

#[derive(Parser)]
#[command(
    name = "sirsd",
    version,
    about = "SIRSD epidemics, NSFD ground truth and EDMD Koopman surrogates"
)]
struct Cli {
    /// Directory for CSV and JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a preset with the NSFD scheme and write `<preset>_nsfd.csv`.
    #[command(allow_negative_numbers = true)]
    Simulate {
        preset: PresetArg,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Fit one dictionary and free-run it against the NSFD ground truth.
    #[command(allow_negative_numbers = true)]
    Fit {
        preset: PresetArg,
        #[arg(long, value_enum)]
        dict: Dict,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Fit both dictionaries and compare them.
    #[command(allow_negative_numbers = true)]
    Validate {
        preset: PresetArg,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Measles with the extended dictionary over t in [0, 500].
    #[command(allow_negative_numbers = true)]
    LongMeasles {
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Validate every preset and run the long measles experiment.
    #[command(allow_negative_numbers = true)]
    All {
        #[arg(long)]
        svd_tol: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "lower")]
enum PresetArg {
    Covid,
    Influenza,
    Ebola,
    Measles,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Covid => Preset::Covid,
            PresetArg::Influenza => Preset::Influenza,
            PresetArg::Ebola => Preset::Ebola,
            PresetArg::Measles => Preset::Measles,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Dict {
    D1,
    D2,
}

#[derive(Args, Default)]
struct OverrideArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Initial infected fraction.
    #[arg(long)]
    i0: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Denominator-function rate; 0 gives phi = dt.
    #[arg(long)]
    eta: Option<f64>,
    /// Relative singular-value cutoff for the pseudoinverse.
    #[arg(long = "svd-tol")]
    svd_tol: Option<f64>,
}

impl From<&OverrideArgs> for Overrides {
    fn from(a: &OverrideArgs) -> Self {
        Overrides {
            beta: a.beta,
            gamma: a.gamma,
            mu: a.mu,
            omega: a.omega,
            i0: a.i0,
            dt: a.dt,
            t_end: a.t_end,
            eta: a.eta,
            svd_tol: a.svd_tol,
        }
    }
}

fn scenario(preset: PresetArg, overrides: &OverrideArgs) -> Result<ScenarioPreset, Error> {
    let (s, warnings) = Preset::from(preset)
        .scenario()
        .with_overrides(&overrides.into())?;
    warn(&warnings);
    Ok(s)
}

fn warn(warnings: &[RangeWarning]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn summarize(out: &PipelineOutput) {
    for run in &out.runs {
        let r = &run.report;
        let negative: Vec<&str> = ["s", "i", "r", "d"]
            .into_iter()
            .zip(r.negativity.to_array())
            .filter_map(|(c, flag)| flag.then_some(c))
            .collect();
        println!(
            "{:<14} {}  rmse {:.3e}  max {:.3e} (t={:.1}, {})  residual {:.3e}  negative [{}]",
            out.label,
            r.dictionary,
            r.total_rmse,
            r.max_error.value,
            r.max_error.time,
            r.max_error.compartment,
            r.residual,
            negative.join(",")
        );
        for w in &r.windows {
            if let Some(e) = w.max_error {
                println!(
                    "{:<14}     window [{}, {}] max error {:.6e}",
                    "", w.start, w.end, e
                );
            }
        }
    }
}

fn export(out_dir: &Path, out: &PipelineOutput) -> Result<(), Error> {
    export_pipeline(out_dir, out)?;
    summarize(out);
    Ok(())
}

fn validate(out_dir: &Path, s: &ScenarioPreset) -> Result<(), Error> {
    let out = run_pipeline(s, DictChoice::Both)?;
    export(out_dir, &out)?;
    if let (Some(d1), Some(d2)) = (out.run("d1"), out.run("d2")) {
        let verdict = if d2.report.total_rmse < d1.report.total_rmse {
            "d2 < d1"
        } else {
            "d2 >= d1"
        };
        println!("{:<14} total rmse {verdict}", out.label);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let out_dir = cli.out.as_path();
    match &cli.command {
        Command::Simulate { preset, overrides } => {
            let s = scenario(*preset, overrides)?;
            let tr = simulate_nsfd(&s.nsfd_config(), &s.params)?;
            let path = out_dir.join(format!("{}_nsfd.csv", s.name));
            write_atomic(&path, trajectory_csv(&tr).as_bytes())?;
            println!("{} ({} rows)", path.display(), tr.len());
        }
        Command::Fit {
            preset,
            dict,
            overrides,
        } => {
            let s = scenario(*preset, overrides)?;
            let choice = match dict {
                Dict::D1 => DictChoice::D1,
                Dict::D2 => DictChoice::D2,
            };
            export(out_dir, &run_pipeline(&s, choice)?)?;
        }
        Command::Validate { preset, overrides } => {
            validate(out_dir, &scenario(*preset, overrides)?)?
        }
        Command::LongMeasles { overrides } => {
            let (out, warnings) = run_long_measles(&overrides.into())?;
            warn(&warnings);
            export(out_dir, &out)?;
        }
        Command::All { svd_tol, eta } => {
            let o = Overrides {
                svd_tol: *svd_tol,
                eta: *eta,
                ..Default::default()
            };
            // Presets are independent; results are printed in a fixed order.
            let results: Vec<Result<PipelineOutput, Error>> = std::thread::scope(|scope| {
                let handles: Vec<_> = Preset::ALL
                    .iter()
                    .map(|p| {
                        scope.spawn(move || {
                            let (s, warnings) = p.scenario().with_overrides(&o)?;
                            warn(&warnings);
                            run_pipeline(&s, DictChoice::Both)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .collect()
            });
            for out in results {
                let out = out?;
                export(out_dir, &out)?;
            }
            let (long, warnings) = run_long_measles(&o)?;
            warn(&warnings);
            export(out_dir, &long)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Config => 2,
                ErrorCategory::Numeric => 3,
                ErrorCategory::Io => 4,
            })
        }
    }
}
