use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use d2dsgd::config::{DatasetSection, ExperimentConfig, SchedulerName};
use d2dsgd::experiment::{self, load_dataset};
use d2dsgd::figures::{self, BoundFigure, BoundSetup, LinkModel};
use d2dsgd::formats;
use d2dsgd::spec::{parse_grid, parse_horizons, TopologySpec};
use d2dsgd::sweep::sweep;
use d2dsgd_core::learner::partition_noniid;
use d2dsgd_core::scheduling;

#[derive(Parser)]
#[command(name = "d2dsgd", version, about = "Compressed decentralized SGD over wireless D2D links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkKind {
    Digital,
    Analog,
}

#[derive(Subcommand)]
enum Command {
    /// Train with the configured links; writes trace.csv and run.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate the optimality-gap bounds over SNR and horizon grids.
    Bounds {
        #[arg(long, value_enum)]
        protocol: LinkKind,
        #[arg(long)]
        topology: TopologySpec,
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        placement_seed: u64,
        /// `start:step:stop` or a comma-separated list, in dB.
        #[arg(long)]
        snr_grid: String,
        #[arg(long)]
        t_grid: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        block_len: usize,
        #[arg(long, default_value_t = 4e7)]
        a: f64,
        /// Digital slots from TDMA instead of coloring.
        #[arg(long)]
        tdma: bool,
        #[arg(long)]
        equal_snr: bool,
        /// Analog slot count (default: the pairing schedule's).
        #[arg(long)]
        slots: Option<usize>,
        #[arg(long, default_value_t = figures::FIGURE_NOISE_AT_30DB)]
        noise_at_30db: f64,
        #[arg(long, default_value_t = 1.0)]
        a_prime_factor: f64,
        #[arg(long, default_value_t = 1)]
        baseline: u64,
        /// Evaluate even when `a` or `a'` violates the step-size hypotheses.
        #[arg(long)]
        no_check: bool,
        #[arg(long)]
        allow_negative_diagonal: bool,
    },
    /// Build a transmission schedule and report or dump it.
    Schedule {
        #[arg(long)]
        topology: TopologySpec,
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        #[arg(long, value_enum)]
        mode: LinkKind,
        #[arg(long)]
        tdma: bool,
        /// Print one line per slot.
        #[arg(long)]
        dump: bool,
    },
    /// Split a dataset into non-IID device shards.
    Partition {
        /// `synthetic` or a directory with Fashion-MNIST style IDX files.
        #[arg(long)]
        dataset: String,
        #[arg(long = "K", default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_missing: usize,
        #[arg(long, default_value_t = 20)]
        feature_dim: usize,
        #[arg(long)]
        summary: bool,
    },
    /// Emit the data behind a figure: fig3, fig4, fig6, fig7 from the
    /// bounds, fig9 from training runs derived from `--config`.
    Figure {
        id: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "500,1000,2000,5000,10000")]
        budgets: String,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn simulate(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let prepared = experiment::prepare(&cfg, &base_dir(config))?;
    let trace = experiment::run_prepared(&cfg, &prepared)?;
    let meta = experiment::write_outputs(out, &cfg, &prepared, &trace)?;
    let last = trace.records.last().context("empty trace")?;
    println!(
        "t={} gap={:.6e} accuracy={:.4} diverged={} config={} -> {}",
        last.t,
        last.gap,
        last.accuracy,
        meta.diverged,
        &meta.config_hash[..12],
        out.display()
    );
    Ok(())
}

fn schedule(topology: &TopologySpec, nodes: usize, mode: LinkKind, tdma: bool, dump: bool) -> Result<()> {
    let topo = topology.build(nodes, 0, Path::new("."))?;
    let text = match mode {
        LinkKind::Digital => {
            let s = if tdma { scheduling::tdma_schedule(&topo) } else { scheduling::digital_schedule(&topo) };
            scheduling::check_digital(&topo, &s)?;
            let bound = scheduling::auxiliary_graph(topo.graph()).max_degree() + 1;
            if !dump {
                println!("slots={} max_degree_bound={bound}", s.slot_count());
            }
            formats::dump_digital(&s)
        }
        LinkKind::Analog => {
            let s = scheduling::analog_schedule(&topo);
            scheduling::check_analog(&topo, &s)?;
            if !dump {
                println!("slots={} pairs={}", s.slot_count(), s.rounds().len());
            }
            formats::dump_analog(&s)
        }
    };
    if dump {
        print!("{text}");
    }
    Ok(())
}

fn partition(dataset: &str, k: usize, seed: u64, max_missing: usize, feature_dim: usize, summary: bool) -> Result<()> {
    let section = if dataset == "synthetic" {
        DatasetSection::synthetic(feature_dim)
    } else {
        let dir = PathBuf::from(dataset);
        DatasetSection::Idx {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: None,
            test_labels: None,
            classes: 10,
        }
    };
    let (train, _) = load_dataset(&section, Path::new("."))?;
    let part = partition_noniid(&train, k, max_missing, seed)?;
    let used: usize = part.shards.iter().map(|s| s.len()).sum();
    println!("devices={k} samples_used={used} of {}", train.len());
    if summary {
        for (i, (shard, classes)) in part.shards.iter().zip(&part.available).enumerate() {
            let list: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
            println!(
                "device {i}: samples={} per_class={} classes={{{}}}",
                shard.len(),
                part.per_class[i],
                list.join(",")
            );
        }
    }
    Ok(())
}

fn figure(id: &str, out: &Path, config: Option<&Path>, budgets: &str) -> Result<()> {
    if id == "fig9" {
        let config = config.context("fig9 needs --config with the learner settings")?;
        let base = ExperimentConfig::load(config)?;
        let budgets: Vec<usize> = parse_horizons(budgets)?.into_iter().map(|b| b as usize).collect();
        let cells = figures::fig9_configs(&base, &budgets)?;
        let prepared = experiment::prepare(&cells[0].2, &base_dir(config))?;
        let results = sweep(cells, |(_, _, cfg)| experiment::run_prepared(cfg, &prepared));
        let mut runs = Vec::new();
        for cell in results {
            let (n, scheme, _) = cell.input;
            match cell.outcome {
                Ok(trace) => runs.push((n, scheme, trace)),
                Err(e) => eprintln!("N={n} {scheme}: failed: {e}"),
            }
        }
        return figures::write_fig9(&figures::fig9_rows(&runs)?, create(out)?);
    }
    let fig: BoundFigure = id.parse()?;
    figures::write_labeled(&figures::bound_figure(fig)?, create(out)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, seed, out } => simulate(&config, seed, &out),
        Command::Bounds {
            protocol,
            topology,
            nodes,
            placement_seed,
            snr_grid,
            t_grid,
            out,
            block_len,
            a,
            tdma,
            equal_snr,
            slots,
            noise_at_30db,
            a_prime_factor,
            baseline,
            no_check,
            allow_negative_diagonal,
        } => {
            let link = match protocol {
                LinkKind::Digital => LinkModel::Digital {
                    block_len,
                    scheduler: if tdma { SchedulerName::Tdma } else { SchedulerName::Coloring },
                    equal_snr,
                },
                LinkKind::Analog => LinkModel::Analog { block_len, slots, noise_at_30db, a_prime_factor },
            };
            let topo = topology.build(nodes, placement_seed, Path::new("."))?;
            let mut setup = BoundSetup::new(topo, allow_negative_diagonal, link, a)?;
            setup.baseline = baseline;
            setup.check_hypotheses = !no_check;
            let snrs = parse_grid(&snr_grid)?;
            let rows = setup.curves(&snrs, &parse_horizons(&t_grid)?)?;
            figures::write_curves(&rows, create(&out)?)?;
            if let LinkKind::Digital = protocol {
                // per-device reconstruction quality next to the curves
                let path = out.with_extension("omega.csv");
                let mut w = create(&path)?;
                writeln!(w, "snr_db,device,omega")?;
                for &snr in &snrs {
                    for (i, om) in setup.digital_omega(snr)?.1.iter().enumerate() {
                        writeln!(w, "{snr},{i},{om}")?;
                    }
                }
            }
            Ok(())
        }
        Command::Schedule { topology, nodes, mode, tdma, dump } => schedule(&topology, nodes, mode, tdma, dump),
        Command::Partition { dataset, k, seed, max_missing, feature_dim, summary } => {
            partition(&dataset, k, seed, max_missing, feature_dim, summary)
        }
        Command::Figure { id, out, config, budgets } => {
            if id.is_empty() {
                bail!("figure id required");
            }
            figure(&id, &out, config.as_deref(), &budgets)
        }
    }
}
