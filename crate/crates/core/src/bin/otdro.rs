use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use otdro::conic::{build_conic, serialize_conic, verify_certificate};
use otdro::divergences::{divergence_decomposed, EntropyFunction};
use otdro::error::{Error, Result};
use otdro::instance::LiftedInstance;
use otdro::lifting::{build_interpolated, lift_phi_divergence, lift_sinkhorn, lift_wasserstein, DroProblem, DEFAULT_MIX_EPSILON};
use otdro::measure::DiscreteMeasure;
use otdro::oracle::lp_primal_trace;
use otdro::solvers::{solve, Method, SearchOptions, SolveReport};
use otdro::svm::{svm_demo, write_bundle, SvmExperimentConfig};

#[derive(Parser)]
#[command(name = "otdro", version, about = "Worst-case risk over optimal-transport ambiguity sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Wasserstein,
    Phi,
    Sinkhorn,
    Interpolated,
}

#[derive(Subcommand)]
enum Command {
    /// Lift a DRO problem into a transport instance.
    Lift {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "kullback-leibler")]
        phi: EntropyFunction,
        #[arg(long, default_value_t = DEFAULT_MIX_EPSILON)]
        mix_epsilon: f64,
        #[arg(long)]
        reg_epsilon: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        theta1: f64,
        #[arg(long, default_value_t = 1.0)]
        theta2: f64,
        /// Finitely supported reference measure for the Sinkhorn lift.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Solve a lifted instance through its dual.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        /// kl, general-phi, sinkhorn or wasserstein; inferred from the cost when omitted.
        #[arg(long)]
        method: Option<Method>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force grid LP primal of a lifted instance.
    Oracle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        v_step: f64,
        #[arg(long, default_value_t = 2.0)]
        w_max: f64,
        /// A `solve` result to compare against; its weights join the grid.
        #[arg(long)]
        dual: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the exponential-cone program of an interpolated KL instance.
    EmitConic {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Check a `solve` result against the program.
        #[arg(long)]
        verify: Option<PathBuf>,
    },
    /// Worst-case distributions of a linear SVM on synthetic data.
    SvmDemo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Radius to solve at; repeat for several. Defaults to 0, 0.1, 0.2, 0.5.
        #[arg(long)]
        radius: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        theta1: f64,
        #[arg(long, default_value_t = 1.0)]
        theta2: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Generalized φ-divergence between two discrete measures.
    Divergence {
        #[arg(long)]
        phi: EntropyFunction,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long = "mu-hat")]
        mu_hat: PathBuf,
    },
}

/// `println!` that exits quietly when the reader of stdout has gone away.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(Error::Input(format!("writing to stdout: {e}")));
        }
    }};
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("reading {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Input(format!("writing {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s
}

fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<LiftedInstance> {
    LiftedInstance::from_json(&read(path)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Lift {
            family,
            input,
            out,
            phi,
            mix_epsilon,
            reg_epsilon,
            theta1,
            theta2,
            reference,
        } => {
            let p = DroProblem::from_json(&read(&input)?)?;
            let ground = p.ground_or_default();
            let inst = match family {
                Family::Wasserstein => lift_wasserstein(p.loss, ground, &p.nominal, p.radius, p.value_domain)?,
                Family::Phi => lift_phi_divergence(p.loss, phi, &p.nominal, p.radius, mix_epsilon, p.worst_scenario, p.value_domain)?,
                Family::Sinkhorn => {
                    let reg = reg_epsilon.ok_or_else(|| Error::Input("--reg-epsilon is required for sinkhorn".into()))?;
                    let path = reference.ok_or_else(|| Error::Input("--reference is required for sinkhorn".into()))?;
                    lift_sinkhorn(p.loss, ground, &p.nominal, p.radius, reg, &read_measure(&path)?)?.0
                }
                Family::Interpolated => build_interpolated(p.loss, ground, phi, &p.nominal, p.radius, theta1, theta2, p.value_domain)?,
            };
            for note in &inst.notes {
                log::info!("{note}");
            }
            let mut text = inst.to_json();
            text.push('\n');
            write(&out, &text)?;
            say!("lifted {} atoms ({}) to {}", inst.n_atoms(), inst.cost.family(), out.display());
        }
        Command::Solve { input, method, tol, out } => {
            let inst = read_instance(&input)?;
            let method = match method {
                Some(m) => m,
                None => Method::infer(&inst)?,
            };
            let opts = SearchOptions {
                tol,
                ..SearchOptions::default()
            };
            let report = SolveReport::new(&inst, solve(&inst, method, &opts)?)?;
            say!("method: {}", method.name());
            say!("objective: {:.12e}", report.objective);
            say!("empirical risk: {:.12e}", report.empirical_risk);
            say!("lambda_star: {:.12e}", report.lambda_star);
            say!("primal value: {:.12e}", report.diagnostics.primal_value);
            if report.certified() {
                say!("status: converged");
            } else {
                say!(
                    "status: not certified (converged = {}, weak duality = {})",
                    report.diagnostics.converged,
                    report.diagnostics.weak_duality_ok
                );
            }
            if let Some(path) = out {
                write(&path, &to_json(&report))?;
            }
            if !report.diagnostics.converged {
                return Err(Error::Numerical("the dual search did not converge".into()));
            }
        }
        Command::Oracle {
            input,
            v_step,
            w_max,
            dual,
            out,
        } => {
            let inst = read_instance(&input)?;
            let (dual_value, extra_w) = match dual {
                Some(path) => {
                    let r = SolveReport::from_json(&read(&path)?)?;
                    (Some(r.objective), r.records.iter().map(|x| x.weight).collect())
                }
                None => (None, Vec::new()),
            };
            let report = lp_primal_trace(&inst, v_step, w_max, &extra_w, dual_value)?;
            for level in &report.grid_trace {
                say!("v_step {:e}: {:.12e} ({} variables)", level.v_step, level.value, level.variables);
            }
            say!("value: {:.12e}", report.value);
            if let Some(gap) = report.gap_vs_dual {
                say!("gap vs dual: {gap:.3e}");
            }
            if let Some(path) = out {
                write(&path, &to_json(&report))?;
            }
        }
        Command::EmitConic { input, out, verify } => {
            let inst = read_instance(&input)?;
            let program = build_conic(&inst)?;
            write(&out, &serialize_conic(&program))?;
            say!(
                "{} variables, {} linear rows, {} cones",
                program.n_vars,
                program.rows.len(),
                program.cones.len()
            );
            if let Some(path) = verify {
                let r = SolveReport::from_json(&read(&path)?)?;
                let v = verify_certificate(&program, &r.certificate(), &inst)?;
                for note in &v.notes {
                    say!("note: {note}");
                }
                say!("max violation: {:.3e}", v.max_violation);
                say!("objective gap: {:.3e}", v.objective_gap);
                if v.is_clean() {
                    say!("certificate: feasible");
                } else {
                    for x in &v.violations {
                        say!("violation: {x:?}");
                    }
                    return Err(Error::Numerical(format!("{} constraint violations", v.violations.len())));
                }
            }
        }
        Command::SvmDemo {
            seed,
            out,
            radius,
            theta1,
            theta2,
            tol,
        } => {
            let mut config = SvmExperimentConfig {
                seed,
                theta1,
                theta2,
                tol,
                ..SvmExperimentConfig::default()
            };
            if !radius.is_empty() {
                config.radii = radius;
            }
            let bundle = svm_demo(&config)?;
            let files = write_bundle(&bundle, &out)?;
            say!("beta_hat = {:?}, b_hat = {:e}", bundle.beta_hat, bundle.b_hat);
            for r in &bundle.results {
                say!(
                    "r = {}: worst-case hinge risk {:.12e}, mean weight {:.12e}",
                    r.radius,
                    r.objective,
                    r.mean_weight
                );
            }
            say!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Divergence { phi, mu, mu_hat } => {
            let phi = phi.validated()?;
            let (on, off) = divergence_decomposed(&phi, &read_measure(&mu)?, &read_measure(&mu_hat)?)?;
            say!("divergence: {}", on + off);
            say!("on support: {on}");
            say!("off support: {off}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OTDRO_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("otdro: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
