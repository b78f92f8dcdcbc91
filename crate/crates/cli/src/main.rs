//! `cubvol`: generate, measure and analyze random cubical complexes.
//!
//! Machine-readable output (key-sorted JSON) goes to stdout; diagnostics go
//! to stderr. Exit status is 0 on success, 1 when a verification fails and
//! 2 on invalid input.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use cubical_volumes::analysis::{self, AnalysisError};
use cubical_volumes::complex::io::{self, FormatError, Stored};
use cubical_volumes::complex::Complex;
use cubical_volumes::identities::run_identities;
use cubical_volumes::lattice::{LatticeError, LatticeSpec};
use cubical_volumes::measure::{measure, MeasureError};
use cubical_volumes::models::{self, Model, ModelError, ModelParams};
use cubical_volumes::moments::{
    self, mean_generalized, variance_generalized, BoundMode, Kind, MomentsError, PolynomialRecord,
};
use cubical_volumes::montecarlo::{self, MonteCarloError};
use cubical_volumes::poly::{parse_rational, rational_string, rational_to_f64, ParseRationalError};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Moments(#[from] MomentsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Voxel,
    ClosedFaces,
    IndependentFaces,
    Plaquette,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Voxel => Model::Voxel,
            ModelArg::ClosedFaces => Model::ClosedFaces,
            ModelArg::IndependentFaces => Model::IndependentFaces,
            ModelArg::Plaquette => Model::Plaquette,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Mean,
    Variance,
}

#[derive(Parser)]
#[command(
    name = "cubvol",
    version,
    about = "Intrinsic volumes of random cubical complexes on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Dimension of the torus.
    #[arg(short)]
    d: usize,
    /// Side length.
    #[arg(short)]
    n: u64,
    /// Inclusion probability.
    #[arg(short)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SampleArgs {
    fn params(&self) -> Result<ModelParams, CliError> {
        let spec = LatticeSpec::new(self.d, self.n)?;
        Ok(ModelParams::new(
            self.model.into(),
            spec,
            self.p,
            self.seed,
        )?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample one complex and write it as .cuvx (voxel, plaquette) or .cucx.
    Gen {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the intrinsic volumes of a stored complex.
    Measure {
        input: PathBuf,
        /// How to read a voxel field: voxel (closure) or plaquette.
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Print an exact mean or variance polynomial.
    Moments {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(short)]
        d: usize,
        #[arg(short)]
        k: usize,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Exponent base m for the family P_i = 1 - q^(m^(d-i)).
        #[arg(long)]
        base: Option<u64>,
        /// Evaluate at an exact rational such as 3/5 or 0.6.
        #[arg(long)]
        eval: Option<String>,
    },
    /// Isolate the roots of E_d on [0, 1].
    Roots {
        #[arg(short)]
        d: usize,
        /// Interval width, as a rational.
        #[arg(long)]
        tol: Option<String>,
        /// Also certify interleaving for every dimension up to this one.
        #[arg(long)]
        interleave_up_to: Option<usize>,
    },
    /// Print the critical points of V_{d,d-1}.
    CriticalPoints {
        #[arg(short)]
        d: usize,
    },
    /// Sample repeatedly and compare empirical moments with the exact ones.
    Simulate {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        samples: u64,
        /// Write per-sample volumes as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Include the wall time (breaks byte reproducibility).
        #[arg(long)]
        timing: bool,
    },
    /// Exhaustive enumeration or the identity suite; exits 0 iff all pass.
    Verify {
        #[arg(long, conflicts_with = "identities", requires_all = ["model", "d", "n"])]
        exhaustive: bool,
        #[arg(long)]
        identities: bool,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(short)]
        d: Option<usize>,
        #[arg(short)]
        n: Option<u64>,
        #[arg(long, default_value_t = 8)]
        dmax: usize,
    },
    /// Evaluate the Wasserstein bound for the standardized voxel mu_k.
    CltBound {
        #[arg(short)]
        d: usize,
        #[arg(short)]
        k: usize,
        #[arg(short, allow_hyphen_values = true)]
        q: String,
        #[arg(short)]
        n: u64,
        /// Use the uniform per-cell moment estimate instead of exact moments.
        #[arg(long)]
        coarse: bool,
    },
}

fn emit(value: &impl Serialize) -> Result<(), CliError> {
    let value = serde_json::to_value(value).expect("outputs serialize");
    println!("{value}");
    Ok(())
}

fn rational_json(r: &BigRational) -> Value {
    json!({ "exact": rational_string(r), "decimal": rational_to_f64(r) })
}

fn gen(sample: &SampleArgs, output: &PathBuf) -> Result<ExitCode, CliError> {
    let params = sample.params()?;
    let kind = match models::sample(&params)? {
        Complex::Voxel(field) | Complex::Plaquette(field) => {
            io::write_field(&field, output)?;
            "field"
        }
        Complex::Cells(cells) => {
            io::write_cells(&cells, output)?;
            "cells"
        }
    };
    emit(
        &json!({ "output": output, "kind": kind, "model": params.model, "d": sample.d, "n": sample.n }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn measure_file(input: &PathBuf, model: Option<ModelArg>) -> Result<ExitCode, CliError> {
    let complex = match (io::read_any(input)?, model.map(Model::from)) {
        (Stored::Field(f), None | Some(Model::Voxel)) => Complex::Voxel(f),
        (Stored::Field(f), Some(Model::Plaquette)) => Complex::Plaquette(f),
        (Stored::Cells(c), None | Some(Model::ClosedFaces | Model::IndependentFaces)) => {
            Complex::Cells(c)
        }
        (Stored::Field(_), Some(m)) => {
            return Err(CliError::Usage(format!(
                "{m} complexes are stored as cell sets, not voxel fields"
            )))
        }
        (Stored::Cells(_), Some(m)) => {
            return Err(CliError::Usage(format!(
                "{m} complexes are stored as voxel fields, not cell sets"
            )))
        }
    };
    emit(&json!({ "mu": measure(&complex)?.values() }))?;
    Ok(ExitCode::SUCCESS)
}

fn moments_cmd(
    model: Model,
    d: usize,
    k: usize,
    kind: KindArg,
    base: Option<u64>,
    eval: Option<&str>,
) -> Result<ExitCode, CliError> {
    let kind = match kind {
        KindArg::Mean => Kind::Mean,
        KindArg::Variance => Kind::Variance,
    };
    let poly = match base {
        None => moments::moment(model, kind, d, k)?,
        Some(m) => {
            if !matches!(model, Model::Voxel | Model::ClosedFaces) {
                return Err(CliError::Usage(
                    "--base applies to the voxel and closed-faces families".into(),
                ));
            }
            match kind {
                Kind::Mean => mean_generalized(d, k, m)?,
                Kind::Variance => variance_generalized(d, k, m)?,
            }
        }
    };
    let mut value = serde_json::to_value(PolynomialRecord::new(model, kind, d, k, &poly))
        .expect("records serialize");
    let map = value.as_object_mut().expect("records are objects");
    if let Some(m) = base {
        map.insert("base".into(), json!(m));
    }
    if let Some(text) = eval {
        let x = parse_rational(text)?;
        map.insert("at".into(), json!(rational_string(&x)));
        map.insert("value".into(), rational_json(&poly.eval(&x)));
    }
    emit(&value)?;
    Ok(ExitCode::SUCCESS)
}

fn roots_cmd(d: usize, tol: Option<&str>, interleave: Option<usize>) -> Result<ExitCode, CliError> {
    let tol = match tol {
        Some(t) => parse_rational(t)?,
        None => analysis::default_tolerance(),
    };
    match interleave {
        None => {
            emit(&analysis::isolate_roots(d, &tol)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Some(d_max) => {
            let report = analysis::verify_interleaving(d_max, &tol)?;
            emit(&json!({ "all_hold": report.all_hold(), "report": report }))?;
            Ok(if report.all_hold() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn simulate_cmd(
    sample: &SampleArgs,
    samples: u64,
    dump: Option<&PathBuf>,
    threads: Option<usize>,
    timing: bool,
) -> Result<ExitCode, CliError> {
    let params = sample.params()?;
    let run = || montecarlo::simulate_with_samples(&params, samples);
    let (summary, volumes) = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    if let Some(path) = dump {
        montecarlo::write_samples_csv(&volumes, BufWriter::new(File::create(path)?))?;
    }
    if timing {
        emit(&summary.to_json())?;
    } else {
        println!("{}", summary.canonical_json());
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(
    exhaustive: bool,
    identities: bool,
    model: Option<ModelArg>,
    d: Option<usize>,
    n: Option<u64>,
    dmax: usize,
) -> Result<ExitCode, CliError> {
    let passed = match (exhaustive, identities, model, d, n) {
        (true, false, Some(model), Some(d), Some(n)) => {
            let report = montecarlo::exhaustive_verify(model.into(), d, n)?;
            emit(&json!({ "passed": report.passed(), "report": report }))?;
            report.passed()
        }
        (false, true, ..) => {
            let report = run_identities(dmax)?;
            emit(&json!({ "passed": report.all_passed(), "report": report }))?;
            report.all_passed()
        }
        _ => {
            return Err(CliError::Usage(
                "choose --exhaustive --model M -d D -n N, or --identities [--dmax D]".into(),
            ))
        }
    };
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Gen { sample, output } => gen(&sample, &output),
        Command::Measure { input, model } => measure_file(&input, model),
        Command::Moments {
            model,
            d,
            k,
            kind,
            base,
            eval,
        } => moments_cmd(model.into(), d, k, kind, base, eval.as_deref()),
        Command::Roots {
            d,
            tol,
            interleave_up_to,
        } => roots_cmd(d, tol.as_deref(), interleave_up_to),
        Command::CriticalPoints { d } => {
            emit(&analysis::variance_critical_points(d)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            sample,
            samples,
            dump,
            threads,
            timing,
        } => simulate_cmd(&sample, samples, dump.as_ref(), threads, timing),
        Command::Verify {
            exhaustive,
            identities,
            model,
            d,
            n,
            dmax,
        } => verify_cmd(exhaustive, identities, model, d, n, dmax),
        Command::CltBound { d, k, q, n, coarse } => {
            let q = parse_rational(&q)?;
            let mode = if coarse {
                BoundMode::Coarse
            } else {
                BoundMode::Exact
            };
            let bound = moments::wasserstein_bound(d, k, &q, n, mode)?;
            emit(
                &json!({ "d": d, "k": k, "q": rational_string(&q), "n": n, "mode": mode, "bound": bound }),
            )?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
