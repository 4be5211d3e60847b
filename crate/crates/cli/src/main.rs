//! `realhom` command-line tool.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use realhom::covering::{run_covering, CoveringDoc, Profile, ProfileName};
use realhom::grid::{self, GridSpec};
use realhom::nerve::{nerve_from_json, nerve_to_json, Mode, DEFAULT_SIMPLEX_BUDGET};
use realhom::pipeline::{homology_stage, nerve_stage, run_homology, RunOptions};
use realhom::pointestimates::kappa_upper_estimate;
use realhom::polysys::parse_system;
use realhom::randharness::empirical_tail;
use realhom::Error;

#[derive(Parser)]
#[command(name = "realhom", version, about = "Homology of real zero sets of polynomial systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Covering, nerve and homology in one run.
    Homology {
        /// Polynomial system JSON.
        system: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Certified point cloud and ball radius.
    Covering {
        /// Polynomial system JSON.
        system: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Nerve of the ball cover described by a covering document.
    Nerve {
        /// Covering JSON from `realhom covering`.
        covering: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Homology of a nerve document or hand-written complex.
    HomologyFromNerve {
        /// Nerve JSON from `realhom nerve`.
        nerve: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Grid estimate of the condition number kappa(f).
    Condition {
        /// Polynomial system JSON.
        system: PathBuf,
        /// Mesh exponent; the grid spacing is 2^-k.
        #[arg(long)]
        k: Option<u32>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Empirical condition-number tail over random systems, as CSV.
    TailBench {
        /// Sphere dimension; systems have n + 1 variables.
        #[arg(long)]
        n: usize,
        /// Number of equations; a single degree is repeated m times.
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated degrees, one per equation.
        #[arg(long, value_delimiter = ',', default_value = "2")]
        degrees: Vec<u32>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Comma-separated thresholds t for Prob[kappa >= t].
        #[arg(long, value_delimiter = ',', default_value = "500,1000,5000")]
        thresholds: Vec<f64>,
        /// Mesh exponent; defaults to the initial exponent for n.
        #[arg(long)]
        k: Option<u32>,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Args, Clone)]
struct RunFlags {
    /// sphere, or projective (antipodal points identified)
    #[arg(long, default_value = "sphere")]
    mode: Mode,
    /// certified, guarded or practical
    #[arg(long, default_value = "certified")]
    profile: ProfileName,
    /// Accept a point only when its alpha estimate is at most this.
    #[arg(long)]
    alpha0: Option<f64>,
    /// Accept only when 1 / (gamma_factor * gamma) >= r.
    #[arg(long)]
    gamma_factor: Option<f64>,
    /// Accept only when beta_factor * beta < r.
    #[arg(long)]
    beta_factor: Option<f64>,
    /// Ball radius epsilon as a multiple of r.
    #[arg(long)]
    epsilon_factor: Option<f64>,
    /// Thin accepted points to a (theta * r)-net.
    #[arg(long)]
    thin_theta: Option<f64>,
    /// Finest mesh exponent tried before giving up.
    #[arg(long)]
    max_k: Option<u32>,
    /// Largest grid a single pass may enumerate.
    #[arg(long)]
    point_budget: Option<u128>,
    /// Most simplices the nerve may hold.
    #[arg(long, default_value_t = DEFAULT_SIMPLEX_BUDGET)]
    simplex_budget: usize,
    /// Seed for random sampling (tail-bench).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "REALHOM_WORKERS")]
    workers: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Acknowledge that the practical profile carries no certificate.
    #[arg(long)]
    no_certificate: bool,
}

impl RunFlags {
    fn profile(&self) -> Result<Profile, Failure> {
        if self.profile == ProfileName::Practical && !self.no_certificate {
            return Err(Failure::usage("the practical profile is uncertified; pass --no-certificate to use it"));
        }
        let mut p = match (self.profile, self.thin_theta) {
            (ProfileName::Certified, Some(t)) => Profile::certified_thinned(t),
            (ProfileName::Guarded, Some(t)) => Profile::guarded_thinned(t),
            (name, _) => Profile::named(name),
        };
        if let Some(t) = self.thin_theta {
            p.thin_theta = t;
        }
        if let Some(v) = self.alpha0 {
            p.alpha0 = v;
        }
        if let Some(v) = self.gamma_factor {
            p.gamma_factor = v;
        }
        if let Some(v) = self.beta_factor {
            p.beta_factor = v;
        }
        if let Some(v) = self.epsilon_factor {
            p.epsilon_factor = v;
        }
        p.max_k = self.max_k;
        if let Some(b) = self.point_budget {
            p.point_budget = b;
        }
        p.validate()?;
        Ok(p)
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => std::fs::write(path, format!("{text}\n"))
                .map_err(|e| Failure::usage(&format!("cannot write {}: {e}", path.display()))),
            None => match writeln!(std::io::stdout().lock(), "{text}") {
                // a closed pipe means the reader has what it wants
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(Failure::usage(&format!("cannot write output: {e}")))
                }
                _ => Ok(()),
            },
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: &str) -> Self {
        Failure { code: 3, message: message.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } | Error::GridBudget { .. } | Error::SimplexBudget(_) => 2,
            Error::Invariant(_) => 4,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(&format!("cannot read {}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Homology { system, run } => {
            let started = Instant::now();
            let f = parse_system(&read(&system)?)?;
            let options = RunOptions { mode: run.mode, profile: run.profile()?, simplex_budget: run.simplex_budget };
            let mut report = run_homology(&f, &options)?;
            report.diagnostics.runtime_ms = Some(started.elapsed().as_millis() as u64);
            warn_ties(report.diagnostics.ties);
            run.emit(&report.to_json())
        }
        Command::Covering { system, run } => {
            let f = parse_system(&read(&system)?)?;
            let covering = run_covering(&f, &run.profile()?)?;
            run.emit(&CoveringDoc::from(&covering).to_json())
        }
        Command::Nerve { covering, run } => {
            let doc = CoveringDoc::from_json(&read(&covering)?)?;
            let (complex, diag, source) = nerve_stage(&doc, run.mode, run.simplex_budget)?;
            warn_ties(Some(diag.ties));
            run.emit(&nerve_to_json(&complex, &source))
        }
        Command::HomologyFromNerve { nerve, run } => {
            let started = Instant::now();
            let (complex, mut source) = nerve_from_json(&read(&nerve)?)?;
            if source.mode.is_none() {
                source.mode = Some(run.mode);
            }
            let mut report = homology_stage(&complex, &source)?;
            report.diagnostics.runtime_ms = Some(started.elapsed().as_millis() as u64);
            run.emit(&report.to_json())
        }
        Command::Condition { system, k, run } => {
            let f = parse_system(&read(&system)?)?;
            let k = k.unwrap_or_else(|| grid::initial_mesh_exponent(f.n()));
            let budget = run.point_budget.unwrap_or(grid::DEFAULT_POINT_BUDGET);
            let estimate = kappa_upper_estimate(&f, k, budget)?;
            let spec = GridSpec::new(f.n(), k)?;
            let doc = serde_json::json!({
                "k": k,
                "eta": spec.eta(),
                "grid_points": spec.count() as u64,
                "kappa_estimate": estimate,
            });
            run.emit(&doc.to_string())
        }
        Command::TailBench { n, m, degrees, samples, thresholds, k, run } => {
            let degrees = match (m, degrees.len()) {
                (Some(m), 1) => vec![degrees[0]; m],
                (Some(m), len) if m != len => {
                    return Err(Failure::usage(&format!("--m {m} disagrees with {len} degrees")));
                }
                _ => degrees,
            };
            let k = k.unwrap_or_else(|| grid::initial_mesh_exponent(n));
            let report = empirical_tail(n, &degrees, samples, &thresholds, k, run.seed)?;
            eprintln!("mean log2 kappa estimate: {}", report.mean_log2_kappa);
            run.emit(report.to_csv().trim_end())
        }
    }
}

fn warn_ties(ties: Option<u64>) {
    if let Some(t) = ties.filter(|&t| t > 0) {
        eprintln!("warning: {t} candidate simplices have enclosing radius within 1e-12 of epsilon; the nerve is sensitive to epsilon");
    }
}

fn workers(command: &Command) -> Option<usize> {
    match command {
        Command::Homology { run, .. }
        | Command::Covering { run, .. }
        | Command::Nerve { run, .. }
        | Command::HomologyFromNerve { run, .. }
        | Command::Condition { run, .. }
        | Command::TailBench { run, .. } => run.workers,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers(&cli.command).unwrap_or(0)).build();
    let pool = match pool {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
