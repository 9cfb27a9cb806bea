use std::path::PathBuf;
use std::process::ExitCode;

use aft_experiments::run::{appendix_cells, fig1_censoring, fig1_follow_ups, fig1_median, fig5_panels, mixture_baselines, supp_rows, MIXTURE_FACTORS};
use aft_experiments::{run_and_write, verify_dir, CliError, CliResult, Exhibit, Scenario, ScenarioFile};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aftsim", version, about = "Simulate structural causal AFT designs and check the reproduced exhibits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts
    Run {
        /// Scenario tag (see `list`); may be omitted when --config names one
        scenario: Option<String>,
        /// TOML file with overrides
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_obs: Option<usize>,
        #[arg(long)]
        n_sim: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads for the replication loop
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the artifacts of a scenario against its registered tolerances
    Verify {
        /// Scenario name (directory under --out)
        scenario: String,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// List the registered scenarios
    List,
    /// Print the design behind a scenario
    Describe { scenario: String },
}

fn resolve(scenario: Option<String>, config: Option<PathBuf>) -> CliResult<(Scenario, Option<usize>)> {
    let file = config.as_deref().map(ScenarioFile::load).transpose()?;
    let tag = match (&scenario, &file) {
        (Some(s), _) => s.clone(),
        (None, Some(f)) => f.scenario.clone(),
        (None, None) => return Err(CliError::Usage("a scenario tag or --config is required".into())),
    };
    let exhibit: Exhibit = tag.parse()?;
    if let Some(f) = &file {
        let named: Exhibit = f.scenario.parse()?;
        if named != exhibit {
            return Err(CliError::Config(format!("config is for {named}, not {exhibit}")));
        }
    }
    let base = Scenario::default_for(exhibit);
    Ok(match file {
        Some(f) => (f.apply(base), f.threads),
        None => (base, None),
    })
}

fn describe(exhibit: Exhibit) -> String {
    let s = Scenario::default_for(exhibit);
    let mut out = format!("{}: {}\n", exhibit.tag(), exhibit.title());
    out += &format!("defaults: n_obs = {}, n_sim = {}, seed = {}\n", s.n_obs, s.n_sim, s.seed);
    match exhibit {
        Exhibit::Table1a | Exhibit::Table1b => {
            out += "baseline: Weibull, sigma = 1/3, kappa = 1/60; Gamma and inverse-Gaussian frailty with variance 0.5, 1, 2\n";
            out += "estimators: median quantile ratio over treated survival 0.3..0.7; marginal Cox (Breslow ties)\n";
        }
        Exhibit::Fig1 => {
            out += &format!("design: Gamma(1) frailty Weibull baseline, hazard ratio 3; control median {:.4}\n", fig1_median());
            let fus: Vec<String> = fig1_follow_ups(&s)
                .into_iter()
                .map(|(l, v)| v.map_or(format!("{l} (unlimited)"), |v| format!("{l} ({v:.4})")))
                .collect();
            out += &format!("follow-up horizons: {}\n", fus.join(", "));
            let cms: Vec<String> = fig1_censoring(&s).into_iter().map(|(l, _)| l).collect();
            out += &format!("exponential dropout means: {} (`none` = no dropout)\n", cms.join(", "));
            out += "every cell censors the same latent cohort\n";
        }
        Exhibit::Fig2L | Exhibit::Fig2R => {
            out += "effect laws: bhn_high (0.05 @ 0.5, 0.18 @ 3.53), bhn_low (0.7 @ 0.3, 0.05 @ 5.10)\n";
            out += "reference lines: E[U1] = 3^(1/3) = 1.442 and 3^(-1/3) = 0.693\n";
        }
        Exhibit::Fig3 => out += "effect laws: Gamma with mean 1.442 or 0.693 and variance 0.5, 1, 2\n",
        Exhibit::Fig5 => {
            for (n, b, t0, t1) in fig5_panels() {
                out += &format!("panel {n}: beta_LA = {b}, tau0 = {t0}, tau1 = {t1}\n");
            }
        }
        Exhibit::FigA1 | Exhibit::FigA2 | Exhibit::FigA3 => {
            for (n, b, t0, t1) in appendix_cells(exhibit) {
                out += &format!("cell {n}: beta_LA = {b}, tau0 = {t0}, tau1 = {t1}\n");
            }
        }
        Exhibit::SuppTable => {
            for (n, _, mr, lc) in supp_rows() {
                out += &format!("row {n}: reference mean ratio {mr:.3}, log contrast {lc:.3}\n");
            }
        }
        Exhibit::CaseMixture => {
            let terms: Vec<String> = MIXTURE_FACTORS.iter().map(|(w, c)| format!("{w} S0({c} t)")).collect();
            out += &format!("mixture: S1(t) = {}\n", terms.join(" + "));
            let names: Vec<&str> = mixture_baselines().iter().map(|b| b.0).collect();
            out += &format!("control curves: {}\n", names.join(", "));
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result: CliResult<u8> = (|| match cli.command {
        Command::Run { scenario, config, n_obs, n_sim, seed, out, threads } => {
            let (mut s, file_threads) = resolve(scenario, config)?;
            s.n_obs = n_obs.unwrap_or(s.n_obs);
            s.n_sim = n_sim.unwrap_or(s.n_sim);
            s.seed = seed.unwrap_or(s.seed);
            s.validate()?;
            let dir = run_and_write(&s, &out, threads.or(file_threads))?;
            println!("wrote {}", dir.display());
            Ok(0)
        }
        Command::Verify { scenario, out } => {
            let report = verify_dir(&out.join(&scenario))?;
            print!("{}", report.render());
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::List => {
            for e in Exhibit::ALL {
                println!("{:<12} {}", e.tag(), e.title());
            }
            Ok(0)
        }
        Command::Describe { scenario } => {
            print!("{}", describe(scenario.parse()?));
            Ok(0)
        }
    })();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
