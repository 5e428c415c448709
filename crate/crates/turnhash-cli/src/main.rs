use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use turnhash::exact::polygon_distance;
use turnhash::generate::random_step;
use turnhash::polyindex::{PolygonIndex, PolygonIndexConfig, Variant};
use turnhash::Norm;
use turnhash_cli::bench::{self, BenchConfig};
use turnhash_cli::dataset::{self, GenOptions, Kind};
use turnhash_cli::eval::{self, FamilyKind};
use turnhash_cli::CliError;

/// Polygon retrieval under turning-function distances.
#[derive(Parser)]
#[command(name = "turnhash", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Random,
    Regular,
    Perturbed,
    Spiral,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    MeanReduce,
    StepShift,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    H1,
    H2,
    MeanReduce,
}

#[derive(clap::Args)]
struct IndexArgs {
    /// Vertex bound; defaults to the dataset's declared or largest count.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    p: u8,
    #[arg(long, value_enum, default_value = "mean-reduce")]
    variant: VariantArg,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Write a JSON-lines dataset of generated polygons.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Vertex noise relative to the diameter (perturbed kind).
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        /// Tightness (spiral kind).
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Build the mirrored spiral, which reaches the lower bound.
        #[arg(long)]
        mirrored: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the aligned distance between two polygons of a dataset.
    Dist {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        p: u8,
    },
    /// Build an index over a dataset and save it.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        index: IndexArgs,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Query a saved index with every polygon of a dataset, or just one.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        id: Option<String>,
    },
    /// Compare empirical collision rates with the closed-form laws (CSV).
    EvalCollision {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// First function: `const:<v>` or a JSON step function.
        #[arg(long, requires = "g")]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
        /// Number of random step pairs, used when `--f/--g` are absent.
        #[arg(long, default_value_t = 20)]
        random_pairs: usize,
        #[arg(long, default_value_t = 6)]
        pieces: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recall and scan cost over a sweep of (r, c) and dataset sizes (CSV).
    Bench {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        index: IndexArgs,
        /// Comma-separated `r:c` pairs; empty gives a header-only table.
        #[arg(long, default_value = "")]
        sweep: String,
        /// Comma-separated prefix sizes of the dataset.
        #[arg(long, default_value = "")]
        sizes: String,
        #[arg(long, default_value_t = 100)]
        repetitions: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn norm(p: u8) -> Norm {
    Norm::from_p(p).expect("clap restricts p to 1 or 2")
}

fn variant(v: VariantArg) -> Variant {
    match v {
        VariantArg::MeanReduce => Variant::MeanReduce,
        VariantArg::StepShift => Variant::StepShift,
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Validation(format!("bad {what} {s:?}"))))
        .collect()
}

fn parse_sweep(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    parse_list::<String>(text, "sweep entry")?
        .iter()
        .map(|item| {
            let (r, c) = item.split_once(':').ok_or_else(|| CliError::Validation(format!("sweep entry {item:?} is not r:c")))?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| CliError::Validation(format!("bad number {s:?}")));
            Ok((num(r)?, num(c)?))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { kind, m, count, seed, sigma, epsilon, mirrored, output: out } => {
            let kind = match kind {
                KindArg::Random => Kind::Random,
                KindArg::Regular => Kind::Regular,
                KindArg::Perturbed => Kind::Perturbed,
                KindArg::Spiral => Kind::Spiral,
            };
            let data = dataset::generate(kind, m, count, seed, GenOptions { sigma, epsilon, mirrored })?;
            dataset::write(output(&out)?, &data)
        }
        Command::Dist { input, a, b, p } => {
            let data = dataset::read(&input)?;
            let d = polygon_distance(data.get(&a)?, data.get(&b)?, norm(p));
            println!("{}", json!({ "a": a, "b": b, "p": p, "distance": d.distance, "alpha": d.alpha, "u": d.u }));
            Ok(())
        }
        Command::Build { input, index, r, c, output: out } => {
            let data = dataset::read(&input)?;
            let config = PolygonIndexConfig {
                m: index.m.unwrap_or_else(|| data.vertex_bound()),
                p: norm(index.p),
                r,
                c,
                variant: variant(index.variant),
                delta: index.delta,
                seed: index.seed,
            };
            let built = PolygonIndex::build(data.polygons, config)?;
            built.save(BufWriter::new(File::create(&out)?))?;
            let params = built.inner_params();
            let stats = built.stats();
            println!(
                "{}",
                json!({
                    "polygons": built.len(),
                    "clones": built.clone_count(),
                    "concat_k": params.concat_k,
                    "tables_l": params.tables_l,
                    "p1": params.p1,
                    "p2": params.p2,
                    "rho": params.rho,
                    "entries": stats.entries,
                })
            );
            Ok(())
        }
        Command::Query { index, input, id } => {
            let loaded = PolygonIndex::load(BufReader::new(File::open(&index)?))?;
            let data = dataset::read(&input)?;
            let queries = match &id {
                Some(id) => vec![data.get(id)?.clone()],
                None => data.polygons,
            };
            let mut out = std::io::stdout().lock();
            for q in &queries {
                let o = loaded.query(q)?;
                let hit = o.hit.map(|h| json!({ "id": h.id, "distance": h.distance }));
                writeln!(out, "{}", json!({ "query": q.id(), "hit": hit, "probes": o.probes, "scanned": o.scanned }))?;
            }
            Ok(())
        }
        Command::EvalCollision { family, f, g, random_pairs, pieces, a, b, trials, seed, output: out } => {
            let pairs = match (f, g) {
                (Some(f), Some(g)) => vec![(eval::parse_step(&f)?, eval::parse_step(&g)?)],
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..random_pairs)
                        .map(|_| (random_step(&mut rng, pieces, a, b), random_step(&mut rng, pieces, a, b)))
                        .collect()
                }
            };
            let kind = match family {
                FamilyArg::H1 => FamilyKind::H1,
                FamilyArg::H2 => FamilyKind::H2,
                FamilyArg::MeanReduce => FamilyKind::MeanReduce,
            };
            let rows = eval::eval_collision(kind, a, b, &pairs, trials, seed)?;
            eval::write_csv(output(&out)?, &rows)
        }
        Command::Bench { input, index, sweep, sizes, repetitions, output: out } => {
            let data = dataset::read(&input)?;
            let cfg = BenchConfig {
                m: index.m.unwrap_or_else(|| data.vertex_bound()),
                p: norm(index.p),
                variant: variant(index.variant),
                delta: index.delta,
                seed: index.seed,
                sweep: parse_sweep(&sweep)?,
                sizes: parse_list(&sizes, "size")?,
                repetitions,
            };
            let rows = bench::run(&data.polygons, &cfg)?;
            bench::write_csv(output(&out)?, &rows)
        }
    }
}

fn main() -> ExitCode {
    if let Some(threads) = std::env::var("TURNHASH_THREADS").ok().and_then(|t| t.parse::<usize>().ok()) {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
