//! The `fannet` command line.
//!
//! Exit codes: 0 on success, 1 when a verification-style subcommand run with
//! `--strict` finds its property falsified, 2 on usage, input or IO errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::analysis::{
    bias_report, boundary_profile, sensitivity_report, CounterexampleStore, DEFAULT_FRAGILE_CUT,
    DEFAULT_ROBUST_CUT,
};
use crate::error::{Error, Result};
use crate::io::{load_dataset, load_network, read_report, report_to_json, Report};
use crate::network::{Dataset, Network, Sample, Split};
use crate::noise::NoiseSpec;
use crate::smv::{cross_validate, emit_smv, run_checker, Property, CHECKER_ENV};
use crate::tolerance::{global_tolerance, SearchMode, ToleranceReport};
use crate::verify::{check_baseline, extract_adversarial_vectors};

#[derive(Parser, Debug)]
#[command(name = "fannet", version, about = "Noise tolerance analysis for feed-forward ReLU classifiers")]
struct Cli {
    /// Worker threads for per-sample parallelism (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify every sample without noise.
    Baseline {
        #[command(flatten)]
        input: NetData,
        /// Exit with status 1 unless every sample is classified correctly.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-sample and global noise tolerance.
    Tolerance {
        #[command(flatten)]
        input: NetData,
        /// Initial (largest) symmetric noise bound, in percent.
        #[arg(long = "init", default_value_t = 50)]
        init: u32,
        #[arg(long, value_enum, default_value_t = ModeArg::Binary)]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate adversarial noise vectors into a counterexample store.
    Extract {
        #[command(flatten)]
        input: NetData,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Restrict to these sample ids (repeatable).
        #[arg(long = "sample")]
        samples: Vec<u64>,
        /// Maximum vectors kept per sample.
        #[arg(long, default_value_t = 1000)]
        cap: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-class vulnerability and bias witness pairs from a store.
    Bias {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 100)]
        pairs_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sign histogram of counterexample deltas per input node.
    Sensitivity {
        #[arg(long)]
        store: PathBuf,
        /// Network and dataset, for flagging noise-inert nodes.
        #[arg(long, requires = "data")]
        net: Option<PathBuf>,
        #[arg(long, requires = "net")]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Band samples of a tolerance report by distance to the decision boundary.
    Boundary {
        /// Tolerance report produced by `fannet tolerance`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FRAGILE_CUT)]
        fragile_cut: u32,
        #[arg(long, default_value_t = DEFAULT_ROBUST_CUT)]
        robust_cut: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the SMV model of one sample.
    EmitSmv {
        #[command(flatten)]
        target: SmvTarget,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the SMV model, run the external checker on it and compare verdicts.
    CheckSmv {
        #[command(flatten)]
        target: SmvTarget,
        /// Exit with status 1 if the checker disagrees with the engine.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct NetData {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct NoiseArgs {
    /// Symmetric bound: every node ranges over [-D, +D] percent.
    #[arg(long = "noise")]
    noise: Option<u32>,
    /// Per-node ranges `lo0:hi0,lo1:hi1,...` in percent.
    #[arg(long = "noise-range", allow_hyphen_values = true)]
    noise_range: Option<String>,
}

impl NoiseArgs {
    fn spec(&self, dim: usize) -> Result<NoiseSpec> {
        match (&self.noise, &self.noise_range) {
            (Some(d), _) => Ok(NoiseSpec::symmetric(*d, dim)),
            (None, Some(r)) => {
                let spec = NoiseSpec::parse_ranges(r)?;
                if spec.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: spec.dim(),
                    });
                }
                Ok(spec)
            }
            (None, None) => unreachable!("clap enforces one noise option"),
        }
    }
}

#[derive(Args, Debug)]
struct SmvTarget {
    #[arg(long)]
    net: PathBuf,
    /// Dataset holding the sample; pair with --sample.
    #[arg(long, requires = "sample")]
    data: Option<PathBuf>,
    #[arg(long)]
    sample: Option<u64>,
    /// Explicit input `v0,v1,...` instead of a dataset row; pair with --label.
    #[arg(long, conflicts_with = "data", requires = "label", allow_hyphen_values = true)]
    input: Option<String>,
    #[arg(long)]
    label: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, value_enum, default_value_t = PropertyArg::P2)]
    property: PropertyArg,
}

impl SmvTarget {
    fn resolve(&self, net: &Network) -> Result<Sample> {
        if let Some(text) = &self.input {
            let features = text
                .split(',')
                .enumerate()
                .map(|(i, v)| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::parse(format!("--input value {i}"), e))
                })
                .collect::<Result<Vec<_>>>()?;
            let name = self.label.as_deref().unwrap_or_default();
            let label = net.label_by_name(name).ok_or_else(|| Error::LabelUnknown {
                label: name.to_string(),
                row: 0,
            })?;
            return Ok(Sample::new(self.sample.unwrap_or(0), features, label));
        }
        let data = self
            .data
            .as_ref()
            .ok_or_else(|| Error::parse("arguments", "need --data and --sample, or --input and --label"))?;
        let id = self
            .sample
            .ok_or_else(|| Error::parse("arguments", "--sample is required with --data"))?;
        let ds = load_dataset(data, net, Split::Test)?;
        ds.get(id)
            .cloned()
            .ok_or_else(|| Error::parse("--sample", format!("no sample with id {id}")))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Binary,
    Linear,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PropertyArg {
    P1,
    P2,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

fn emit<R: Report>(report: &R, out: Option<&Path>) -> Result<()> {
    let text = report_to_json(report);
    write_output(&text, out)
}

fn write_output(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn load_pair(input: &NetData) -> Result<(Network, Dataset)> {
    let net = load_network(&input.net)?;
    let ds = load_dataset(&input.data, &net, input.split.into())?;
    Ok((net, ds))
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Baseline { input, strict, out } => {
            let (net, ds) = load_pair(&input)?;
            let rep = check_baseline(&net, &ds)?;
            emit(&rep, out.as_deref())?;
            Ok(if strict && rep.correct != rep.total { 1 } else { 0 })
        }
        Command::Tolerance {
            input,
            init,
            mode,
            out,
        } => {
            let (net, ds) = load_pair(&input)?;
            let mode = match mode {
                ModeArg::Binary => SearchMode::BinarySearch,
                ModeArg::Linear => SearchMode::LinearDescent,
            };
            emit(&global_tolerance(&net, &ds, init, mode)?, out.as_deref())?;
            Ok(0)
        }
        Command::Extract {
            input,
            noise,
            samples,
            cap,
            out,
        } => {
            let (net, ds) = load_pair(&input)?;
            let spec = noise.spec(net.input_dim)?;
            let chosen: Vec<&Sample> = if samples.is_empty() {
                ds.samples.iter().collect()
            } else {
                samples
                    .iter()
                    .map(|id| {
                        ds.get(*id)
                            .ok_or_else(|| Error::parse("--sample", format!("no sample with id {id}")))
                    })
                    .collect::<Result<_>>()?
            };
            let found = chosen
                .par_iter()
                .map(|s| match extract_adversarial_vectors(&net, s, &spec, cap) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::BaselineMisclassified { .. }) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut store = CounterexampleStore::new();
            for (s, f) in chosen.iter().zip(found) {
                match f {
                    Some(v) => {
                        store.extend_from(s, &spec, v)?;
                    }
                    None => eprintln!("sample {}: misclassified without noise, skipped", s.id),
                }
            }
            emit(&store, Some(&out))?;
            Ok(0)
        }
        Command::Bias {
            net,
            store,
            train,
            test,
            pairs_cap,
            out,
        } => {
            let net = load_network(&net)?;
            let store: CounterexampleStore = read_report(&store)?;
            let train = load_dataset(&train, &net, Split::Train)?;
            let test = load_dataset(&test, &net, Split::Test)?;
            emit(&bias_report(&store, &train, &test, &net, pairs_cap), out.as_deref())?;
            Ok(0)
        }
        Command::Sensitivity {
            store,
            net,
            data,
            out,
        } => {
            let store: CounterexampleStore = read_report(&store)?;
            let ds = match (net, data) {
                (Some(n), Some(d)) => {
                    let net = load_network(&n)?;
                    Some(load_dataset(&d, &net, Split::Test)?)
                }
                _ => None,
            };
            emit(&sensitivity_report(&store, ds.as_ref()), out.as_deref())?;
            Ok(0)
        }
        Command::Boundary {
            report,
            fragile_cut,
            robust_cut,
            out,
        } => {
            let rep: ToleranceReport = read_report(&report)?;
            emit(&boundary_profile(&rep, fragile_cut, robust_cut)?, out.as_deref())?;
            Ok(0)
        }
        Command::EmitSmv { target, out } => {
            let net = load_network(&target.net)?;
            let s = target.resolve(&net)?;
            let spec = target.noise.spec(net.input_dim)?;
            let model = emit_smv(&net, &s, &spec, target.property.into())?;
            write_output(&model.text, out.as_deref())?;
            Ok(0)
        }
        Command::CheckSmv { target, strict, out } => {
            let binary = std::env::var_os(CHECKER_ENV)
                .ok_or_else(|| Error::Checker(format!("{CHECKER_ENV} is not set")))?;
            let net = load_network(&target.net)?;
            let s = target.resolve(&net)?;
            let spec = target.noise.spec(net.input_dim)?;
            let model = emit_smv(&net, &s, &spec, target.property.into())?;
            let dir = std::env::temp_dir().join(format!("fannet-check-{}", std::process::id()));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let output = run_checker(Path::new(&binary), &model, &dir);
            let _ = std::fs::remove_dir_all(&dir);
            let rep = cross_validate(&net, &s, &spec, &model, &output?)?;
            emit(&rep, out.as_deref())?;
            Ok(if strict && !rep.agree { 1 } else { 0 })
        }
    }
}

impl From<PropertyArg> for Property {
    fn from(p: PropertyArg) -> Self {
        match p {
            PropertyArg::P1 => Property::P1,
            PropertyArg::P2 => Property::P2,
        }
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(Error::Checker(format!("thread pool: {e}"))),
        },
        None => run(cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fannet: {e}");
            2
        }
    }
}
