use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geek_core::engine::{run_pipeline, transformer_for, EngineConfig};
use geek_core::io::{
    gen_synthetic, parse_csv, read_buckets, read_bvecs, read_fvecs, read_seed_groups, read_sparse,
    write_assignment_text, write_buckets, write_clustering, write_seed_groups, write_sparse,
    write_vecs, Dictionaries, Schema, SynthKind, SynthSpec,
};
use geek_core::metrics::evaluate;
use geek_core::{refine, seeds_to_centers, DataSet, Error, Silk};
use log::{info, warn};

#[derive(Parser)]
#[command(
    name = "geek",
    version,
    about = "Seeding-free clustering over dense, categorical and sparse data"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hash a data set into buckets.
    Transform {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run SILK over a bucket artifact.
    Seed {
        #[arg(long)]
        buckets: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign every object to the center of its nearest seed group.
    Assign {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        seeds: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the whole pipeline on g workers.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the pipeline over a parameter grid, one metrics record per line.
    Bench {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [5000, 10000, 20000, 30000])]
        t: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [20, 40, 60])]
        m: Vec<usize>,
        #[arg(long = "silk-l", value_delimiter = ',', default_values_t = [10, 20, 30, 40])]
        silk_l: Vec<usize>,
        /// Metrics lines go here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic data set with known labels.
    Gen {
        #[arg(long)]
        kind: SynthKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        clusters: usize,
        #[arg(long)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        cardinality: Option<u32>,
        #[arg(long)]
        set_size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth labels, one per line.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Fvecs,
    Bvecs,
    Csv,
    Sparse,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Defaults to the file extension (.fvecs, .bvecs, .csv, anything else is sparse).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON column types for CSV input.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Universe size for sparse input; defaults to the largest index + 1.
    #[arg(long)]
    universe: Option<u64>,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON engine configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    g: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Binary clustering artifact.
    #[arg(long)]
    out: Option<PathBuf>,
    /// One cluster index per line.
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Metrics record as JSON.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

/// An error with the stage it happened in.
struct Failure {
    stage: &'static str,
    error: Error,
    /// Bad settings caught before any stage ran.
    usage: bool,
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> StageExt<T> for geek_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|error| match error {
            Error::Stage { stage, source } => Failure {
                stage,
                error: *source,
                usage: false,
            },
            error => Failure {
                stage,
                usage: matches!(error, Error::Config(_)),
                error,
            },
        })
    }
}

impl<T> StageExt<T> for std::io::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage,
            error: e.into(),
            usage: false,
        })
    }
}

struct Input {
    data: DataSet,
    dictionaries: Option<Dictionaries>,
}

impl ConfigArgs {
    fn load(&self) -> Result<EngineConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => EngineConfig::load(p).stage("config")?,
            None => EngineConfig::default(),
        };
        if let Some(g) = self.g {
            cfg.g = g;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

impl InputArgs {
    fn format(&self) -> Format {
        self.format
            .unwrap_or_else(|| match self.input.extension().and_then(|e| e.to_str()) {
                Some("fvecs") => Format::Fvecs,
                Some("bvecs") => Format::Bvecs,
                Some("csv") => Format::Csv,
                _ => Format::Sparse,
            })
    }

    fn load(&self, cfg: &EngineConfig) -> Result<Input, Failure> {
        let path = &self.input;
        let data = match self.format() {
            Format::Fvecs => DataSet::Dense(read_fvecs(path).stage("input")?),
            Format::Bvecs => DataSet::Dense(read_bvecs(path).stage("input")?),
            Format::Sparse => DataSet::Sparse(read_sparse(path, self.universe).stage("input")?),
            Format::Csv => {
                let schema = match &self.schema {
                    Some(p) => Schema::load(p).stage("config")?,
                    None => Schema::default(),
                };
                let text = fs::read_to_string(path).stage("input")?;
                let table = parse_csv(&text, &schema).stage("input")?;
                let cat = table.to_categorical(cfg.t_disc).stage("transform")?;
                return Ok(Input {
                    data: DataSet::Categorical(cat),
                    dictionaries: Some(table.dictionaries),
                });
            }
        };
        Ok(Input {
            data,
            dictionaries: None,
        })
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        stage: "output",
        error: Error::InvalidInput(e.to_string()),
        usage: false,
    })?;
    fs::write(path, text + "\n").stage("output")
}

/// Writes the requested outputs. CSV dictionaries go next to the artifact.
fn write_outputs(
    out: &OutputArgs,
    clustering: &geek_core::Clustering,
    record: &geek_core::metrics::MetricsRecord,
    dictionaries: Option<&Dictionaries>,
) -> Result<(), Failure> {
    if let Some(p) = &out.out {
        write_clustering(p, clustering).stage("output")?;
        if let Some(d) = dictionaries {
            write_json(&p.with_extension("dict.json"), d)?;
        }
    }
    if let Some(p) = &out.assignment {
        write_assignment_text(p, &clustering.assignment).stage("output")?;
    }
    if let Some(p) = &out.metrics {
        write_json(p, record)?;
    }
    Ok(())
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Transform { input, config, out } => {
            let cfg = config.load()?;
            let inp = input.load(&cfg)?;
            cfg.validate(&inp.data).stage("config")?;
            let tr = transformer_for(&inp.data, &cfg).stage("transform")?;
            let buckets = tr.transform(&inp.data).stage("transform")?;
            info!("{} buckets over {} tables", buckets.len(), tr.tables());
            write_buckets(&out, &buckets).stage("output")
        }
        Cmd::Seed {
            buckets,
            config,
            out,
        } => {
            let cfg = config.load()?;
            let buckets = read_buckets(&buckets).stage("input")?;
            let n = buckets
                .iter()
                .flat_map(|b| b.members.last())
                .max()
                .map_or(0, |&m| m as usize + 1);
            let silk = Silk::new(&cfg.silk_params(), n).stage("seeding")?;
            let groups = silk.run(&buckets).stage("seeding")?;
            if groups.is_empty() {
                warn!("no seed group reached delta = {}", cfg.delta);
            }
            info!("{} seed groups", groups.len());
            write_seed_groups(&out, &groups).stage("output")
        }
        Cmd::Assign {
            input,
            seeds,
            config,
            out,
        } => {
            let cfg = config.load()?;
            let inp = input.load(&cfg)?;
            let metric = cfg.validate(&inp.data).stage("config")?;
            let groups = read_seed_groups(&seeds).stage("input")?;
            if groups.is_empty() {
                return Err(Failure {
                    stage: "centers",
                    error: Error::InvalidInput("the seed artifact holds no groups".into()),
                    usage: false,
                });
            }
            if let Some(bad) = groups
                .iter()
                .flat_map(|g| g.members())
                .find(|&&m| m as usize >= inp.data.len())
            {
                return Err(Failure {
                    stage: "centers",
                    error: Error::InvalidInput(format!("seed member {bad} is outside the data")),
                    usage: false,
                });
            }
            let centers = seeds_to_centers(&groups, &inp.data).stage("centers")?;
            let mut c = geek_core::assign(&inp.data, &centers, metric).stage("assign")?;
            if cfg.passes > 0 {
                c = refine(&inp.data, &c, metric, cfg.passes).stage("assign")?;
            }
            let record = evaluate(&c, &inp.data, metric)
                .stage("metrics")?
                .with_params(serde_json::to_value(&cfg).unwrap_or_default());
            println!(
                "k* = {}  max radius = {:.6}  mean radius = {:.6}",
                record.k_star, record.radius.max, record.radius.mean
            );
            write_outputs(&out, &c, &record, inp.dictionaries.as_ref())
        }
        Cmd::Run { input, config, out } => {
            let cfg = config.load()?;
            let inp = input.load(&cfg)?;
            let res = run_pipeline(&inp.data, &cfg).stage("config")?;
            if res.fallback {
                warn!("no seed groups; fell back to one random object per worker");
            }
            let record = res.metrics(&cfg);
            println!(
                "k* = {}  max radius = {:.6}  mean radius = {:.6}  total {:.3}s",
                record.k_star,
                record.radius.max,
                record.radius.mean,
                record.timings.get("total").copied().unwrap_or(0.0)
            );
            write_outputs(&out, &res.clustering, &record, inp.dictionaries.as_ref())
        }
        Cmd::Bench {
            input,
            config,
            t,
            m,
            silk_l,
            out,
        } => {
            let base = config.load()?;
            let inp = input.load(&base)?;
            let mut lines = Vec::new();
            for &t in &t {
                for &m in &m {
                    for &l in &silk_l {
                        let cfg = EngineConfig {
                            t,
                            m,
                            silk_l: l,
                            ..base.clone()
                        };
                        let res = run_pipeline(&inp.data, &cfg).stage("config")?;
                        let mut rec = res.metrics(&cfg);
                        rec.params = serde_json::json!({ "t": t, "m": m, "silk_L": l, "config": rec.params });
                        info!("t = {t} m = {m} L = {l}: k* = {}", rec.k_star);
                        lines.push(serde_json::to_string(&rec).expect("record serializes"));
                    }
                }
            }
            let text = lines.join("\n") + "\n";
            match out {
                Some(p) => fs::write(p, text).stage("output"),
                None => std::io::stdout().write_all(text.as_bytes()).stage("output"),
            }
        }
        Cmd::Gen {
            kind,
            n,
            d,
            clusters,
            separation,
            seed,
            cardinality,
            set_size,
            out,
            labels,
        } => {
            let mut spec = SynthSpec::new(kind, n, d, clusters, separation, seed);
            if let Some(c) = cardinality {
                spec.cardinality = c;
            }
            if let Some(s) = set_size {
                spec.set_size = s;
            }
            let syn = gen_synthetic(&spec).stage("gen")?;
            match &syn.data {
                DataSet::Dense(x) => write_vecs(&out, x).stage("output")?,
                DataSet::Sparse(x) => write_sparse(&out, x).stage("output")?,
                DataSet::Categorical(x) => {
                    let mut w = csv::Writer::from_path(&out).map_err(csv_failure)?;
                    w.write_record((0..x.dim()).map(|a| format!("a{a}")))
                        .map_err(csv_failure)?;
                    for i in 0..x.len() {
                        w.write_record(x.row(i).iter().map(|c| format!("v{c}")))
                            .map_err(csv_failure)?;
                    }
                    w.flush().stage("output")?;
                }
            }
            if let Some(p) = labels {
                write_assignment_text(p, &syn.labels).stage("output")?;
            }
            Ok(())
        }
    }
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure {
        stage: "output",
        error: Error::InvalidInput(e.to_string()),
        usage: false,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("geek: {} stage failed: {}", f.stage, f.error);
            ExitCode::from(if f.usage { 2 } else { 1 })
        }
    }
}
