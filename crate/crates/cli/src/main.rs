//! `rcm`: scaling terms, environment generation, single-replica walk and
//! limit runs, convergence experiments, and a two-sample KS helper.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rcm_core::coupling::CouplingBundle;
use rcm_core::environment::{generate_environment, EnvRecord};
use rcm_core::experiments::{
    render_curves, render_curves_jsonl, run_aging_traps, run_aging_walls, run_gap, run_j1,
    run_subaging, CurveSet, ExperimentConfig, Meta,
};
use rcm_core::limit::{
    build_speed_measure_traps, build_speed_measure_walls, simulate_quasi_diffusion,
};
use rcm_core::params::{scaling_terms, Mode};
use rcm_core::rng::substream;
use rcm_core::stats::two_sample_ks;
use rcm_core::walk::{simulate_walk, WalkOptions};

#[derive(Parser)]
#[command(name = "rcm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses the default pool.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Print the exact scaling terms for a config's parameters.
    Scales {
        #[arg(long)]
        config: PathBuf,
        /// Scale to evaluate; defaults to every entry of the config's n_list.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Environment tools.
    Env {
        #[command(subcommand)]
        cmd: EnvCmd,
    },
    /// Simulate one walk replica and dump its event path.
    Walk {
        #[command(subcommand)]
        cmd: WalkCmd,
    },
    /// Simulate one limit-process replica and dump its event path.
    Limit {
        #[command(subcommand)]
        cmd: LimitCmd,
    },
    /// Convergence experiments; write curves.csv and meta.json.
    Exp {
        #[command(subcommand)]
        cmd: ExpCmd,
    },
    /// Statistics helpers.
    Stats {
        #[command(subcommand)]
        cmd: StatsCmd,
    },
}

#[derive(Subcommand)]
enum EnvCmd {
    /// Generate environments as JSON Lines records.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Environments per scale.
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
}

#[derive(Subcommand)]
enum WalkCmd {
    /// Run one replica on a fresh environment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Horizon in multiples of the natural time scale (a_n or b_n).
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
}

#[derive(Subcommand)]
enum LimitCmd {
    /// Run one quasi-diffusion replica on a fresh bundle.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
}

#[derive(Subcommand)]
enum ExpCmd {
    /// Maximum-equality aging under walls only.
    AgingWalls(RunArgs),
    /// Position aging under walls and traps.
    AgingTraps(RunArgs),
    /// Sub-aging window probabilities on the trap clock.
    Subaging(RunArgs),
    /// Gap-statistic ECDF convergence.
    Gap(RunArgs),
    /// Skorokhod J1 upper-bound diagnostic.
    J1(RunArgs),
}

#[derive(Subcommand)]
enum StatsCmd {
    /// Two-sample Kolmogorov-Smirnov test between newline-delimited samples.
    Ks { a: PathBuf, b: PathBuf },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).context("parsing experiment config")?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(args: &RunArgs, cfg: &ExperimentConfig, set: &CurveSet, secs: f64) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let body = match args.format {
        OutputFormat::Csv => render_curves(&set.rows),
        OutputFormat::Jsonl => render_curves_jsonl(&set.rows)?,
    };
    let name = match args.format {
        OutputFormat::Csv => "curves.csv",
        OutputFormat::Jsonl => "curves.jsonl",
    };
    fs::write(args.out.join(name), body)?;
    for (file, contents) in &set.side_files {
        fs::write(args.out.join(file), contents)?;
    }
    Meta::new(cfg, cfg.master_seed, secs)?.write(&args.out.join("meta.json"))?;
    println!("wrote {} rows to {}", set.rows.len(), args.out.display());
    Ok(())
}

fn run_experiment(
    args: &RunArgs,
    runner: impl Fn(&ExperimentConfig, usize) -> rcm_core::Result<CurveSet>,
) -> Result<()> {
    let cfg = load_config(&args.config, args.seed)?;
    let start = Instant::now();
    let set = runner(&cfg, args.workers)?;
    write_outputs(args, &cfg, &set, start.elapsed().as_secs_f64())
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        out.push(
            line.parse::<f64>()
                .with_context(|| format!("{}:{}: not a number", path.display(), i + 1))?,
        );
    }
    if out.is_empty() {
        bail!("{}: no samples", path.display());
    }
    Ok(out)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Scales { config, n } => {
            let cfg = load_config(&config, None)?;
            let ns = n.map(|v| vec![v]).unwrap_or_else(|| cfg.n_list.clone());
            for n in ns {
                let s = scaling_terms(&cfg.params, n)?;
                println!("{}", serde_json::to_string(&s)?);
            }
            Ok(())
        }
        Command::Env { cmd } => match cmd {
            EnvCmd::Gen {
                config,
                seed,
                out,
                count,
            } => {
                let cfg = load_config(&config, seed)?;
                fs::create_dir_all(&out)?;
                let path = out.join("environments.jsonl");
                let mut file = fs::File::create(&path)?;
                for &n in &cfg.n_list {
                    for idx in 0..count {
                        let env_seed =
                            rcm_core::rng::mix(cfg.master_seed, &[0xE0, n, idx]);
                        let env = generate_environment(&cfg.params, n, cfg.k, env_seed)?;
                        let rec = EnvRecord::from_environment(&env, env_seed);
                        serde_json::to_writer(&mut file, &rec)?;
                        file.write_all(b"\n")?;
                    }
                }
                println!("wrote {}", path.display());
                Ok(())
            }
        },
        Command::Walk { cmd } => match cmd {
            WalkCmd::Run {
                config,
                seed,
                out,
                horizon,
            } => {
                let cfg = load_config(&config, seed)?;
                let n = cfg.n_list[0];
                let scales = scaling_terms(&cfg.params, n)?;
                let t_end = horizon
                    * match cfg.params.mode {
                        Mode::Rw => scales.wall_time,
                        Mode::Rwt => scales.trap_time.expect("RWT scales"),
                    };
                let env = generate_environment(
                    &cfg.params,
                    n,
                    cfg.k,
                    rcm_core::rng::mix(cfg.master_seed, &[0xE0, n, 0]),
                )?;
                let opts = WalkOptions {
                    reflected: true,
                    collapse: Some(rcm_core::walk::CollapseOptions {
                        threshold: cfg.collapse_threshold,
                        ..Default::default()
                    }),
                };
                let mut rng = substream(cfg.master_seed, &[0xAA, n]);
                let path = simulate_walk(&env, 0, t_end, &[], &opts, &mut rng)?;
                fs::create_dir_all(&out)?;
                let file = out.join("walk_path.csv");
                let mut body = String::from("event_index,time,position\n");
                for (i, (&t, &x)) in path
                    .event_times()
                    .iter()
                    .zip(path.positions())
                    .enumerate()
                {
                    body.push_str(&format!("{i},{t},{x}\n"));
                }
                fs::write(&file, body)?;
                println!(
                    "wrote {} ({} events, {} collapsed excursions)",
                    file.display(),
                    path.events(),
                    path.collapse_log.len()
                );
                Ok(())
            }
        },
        Command::Limit { cmd } => match cmd {
            LimitCmd::Run {
                config,
                seed,
                out,
                horizon,
            } => {
                let cfg = load_config(&config, seed)?;
                let bundle = CouplingBundle::new(
                    &cfg.params,
                    cfg.k,
                    cfg.epsilon0(),
                    cfg.epsiloninf(),
                    cfg.master_seed,
                )?;
                let sub0 = bundle.limit_resistance_path(cfg.params.lambda)?;
                let measure = match cfg.params.mode {
                    Mode::Rw => build_speed_measure_walls(
                        &sub0,
                        cfg.params.lambda,
                        cfg.k as f64,
                        cfg.grid_step,
                        cfg.params.mean_conductance().expect("walls-only mean"),
                    )?,
                    Mode::Rwt => {
                        let subinf = bundle
                            .limit_conductance_path(0.0)?
                            .expect("RWT bundle");
                        build_speed_measure_traps(
                            &sub0,
                            &subinf,
                            cfg.params.lambda,
                            cfg.k as f64,
                            cfg.weight_cutoff,
                        )?
                    }
                };
                let mut rng = substream(cfg.master_seed, &[0xBB]);
                let start = measure.entry_atom(0.0, &mut rng);
                let path = simulate_quasi_diffusion(&measure, start, horizon, &mut rng)?;
                fs::create_dir_all(&out)?;
                let file = out.join("limit_path.csv");
                let mut body = String::from("event_index,time,position\n");
                for (i, (&t, &a)) in path
                    .event_times()
                    .iter()
                    .zip(path.atom_indices())
                    .enumerate()
                {
                    body.push_str(&format!("{i},{t},{}\n", measure.atoms()[a].preimage));
                }
                fs::write(&file, body)?;
                println!("wrote {} ({} events)", file.display(), path.events());
                Ok(())
            }
        },
        Command::Exp { cmd } => match cmd {
            ExpCmd::AgingWalls(args) => run_experiment(&args, run_aging_walls),
            ExpCmd::AgingTraps(args) => run_experiment(&args, run_aging_traps),
            ExpCmd::Subaging(args) => run_experiment(&args, run_subaging),
            ExpCmd::Gap(args) => run_experiment(&args, |cfg, w| Ok(run_gap(cfg, w)?.0)),
            ExpCmd::J1(args) => run_experiment(&args, run_j1),
        },
        Command::Stats { cmd } => match cmd {
            StatsCmd::Ks { a, b } => {
                let xs = read_samples(&a)?;
                let ys = read_samples(&b)?;
                let (d, p) = two_sample_ks(&xs, &ys)?;
                println!("{}", serde_json::json!({ "ks": d, "p_value": p }));
                Ok(())
            }
        },
    }
}
