//! `segfd` command-line interface.
//!
//! Exit codes: 0 success, 1 method errors under strict mode, 2 usage or
//! input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use segfd::aggregation::{agg_mean, agg_mean_foreground, agg_non_boundary, agg_patch_min, DEFAULT_BOUNDARY_WIDTH, DEFAULT_PATCH_SIZE};
use segfd::io::report::{ranking_inputs, write_ranking};
use segfd::io::volume::{read_confidence_map, read_label_map};
use segfd::io::{emit_report, read_manifest, Config, EvalReport, VolumeMeta};
use segfd::learners::{ForestParams, DEFAULT_RIDGE_EPSILON};
use segfd::pairwise::pairwise_dsc;
use segfd::pipeline::{fit_forest_from_manifest, fit_gaussian_from_manifest, run_evaluate, save_json_model};
use segfd::risk_coverage::{aurc, aurc_optimal, aurc_random, naurc, rc_curve};
use segfd::stats::{bootstrap_ranking, RankingMetric, DEFAULT_N_BOOTSTRAP};
use segfd::{CaseRecord, Error, LabelMode, Result};

#[derive(Parser)]
#[command(name = "segfd", version, about = "Evaluate failure detection for semantic segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every configured method on a manifest and write a report.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with status 1 when any case or method failed.
        #[arg(long)]
        strict: bool,
    },
    /// Risk-coverage curve and AURC family from a CSV with `risk` and `confidence` columns.
    RcCurve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Image-level confidences of one confidence map.
    Aggregate {
        #[arg(long)]
        conf: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[command(flatten)]
        meta: MetaArgs,
        #[arg(long, default_value_t = DEFAULT_BOUNDARY_WIDTH)]
        width: usize,
        #[arg(long, default_value_t = DEFAULT_PATCH_SIZE)]
        patch_size: usize,
    },
    /// Mean pairwise DSC of ensemble member predictions.
    PairwiseDice {
        #[arg(long, num_args = 2.., required = true)]
        samples: Vec<PathBuf>,
        #[command(flatten)]
        meta: MetaArgs,
    },
    /// Fit the simple-feature regression forest on a training manifest.
    FitRf {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        n_trees: usize,
        #[arg(long, default_value_t = DEFAULT_BOUNDARY_WIDTH)]
        width: usize,
    },
    /// Fit the Gaussian of the Mahalanobis confidence on a training manifest.
    FitMahalanobis {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RIDGE_EPSILON)]
        ridge_epsilon: f64,
    },
    /// Bootstrap ranking of the confidences found in one or more reports.
    Rank {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Risk to rank on; the first configured risk of the first report by default.
        #[arg(long)]
        risk: Option<String>,
        #[arg(long, default_value_t = DEFAULT_N_BOOTSTRAP)]
        n_bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "aurc")]
        metric: MetricArg,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MetricArg {
    Aurc,
    Naurc,
    Spearman,
}

impl From<MetricArg> for RankingMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Aurc => RankingMetric::Aurc,
            MetricArg::Naurc => RankingMetric::Naurc,
            MetricArg::Spearman => RankingMetric::Spearman,
        }
    }
}

#[derive(Args)]
struct MetaArgs {
    /// Voxel spacing per axis, e.g. `1,1` or `2.5,1,1`.
    #[arg(long, value_delimiter = ',')]
    spacing: Vec<f64>,
    #[arg(long, value_enum, default_value = "exclusive")]
    label_mode: ModeArg,
    #[arg(long, value_delimiter = ',', required = true)]
    class_ids: Vec<u32>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Exclusive,
    Regions,
}

impl MetaArgs {
    fn meta(&self) -> VolumeMeta {
        VolumeMeta {
            spacing: self.spacing.clone(),
            label_mode: match self.label_mode {
                ModeArg::Exclusive => LabelMode::Exclusive,
                ModeArg::Regions => LabelMode::Regions,
            },
            class_ids: self.class_ids.clone(),
        }
    }
}

#[derive(Serialize)]
struct AurcFamily {
    n: usize,
    aurc: f64,
    aurc_random: f64,
    aurc_optimal: f64,
    naurc: Option<f64>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serialisable") + "\n"
}

fn read_risk_confidence(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let (ir, ic) = (column("risk")?, column("confidence")?);
    let mut risks = Vec::new();
    let mut confidences = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parse = |i: usize| {
            let raw = record.get(i).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|_| Error::BadRow {
                path: path.to_path_buf(),
                row: k + 1,
                detail: format!("cannot parse `{raw}` as a number"),
            })
        };
        risks.push(parse(ir)?);
        confidences.push(parse(ic)?);
    }
    Ok((risks, confidences))
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Evaluate {
            manifest,
            config,
            out,
            seed,
            strict,
        } => {
            let (mut cfg, base) = Config::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let strict = strict || cfg.strict;
            let manifest = read_manifest(&manifest)?;
            let report = run_evaluate(&manifest, &cfg, &base)?;
            emit_report(&report, &out)?;
            for e in &report.errors {
                eprintln!(
                    "warning [{}] {}{}: {}",
                    e.code,
                    e.case_id.as_deref().map(|c| format!("{c} ")).unwrap_or_default(),
                    e.scope,
                    e.message
                );
            }
            println!(
                "{} cases, {} summary rows, {} errors",
                report.cases.len(),
                report.summary.len(),
                report.errors.len()
            );
            if strict && !report.errors.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::RcCurve { input, out } => {
            let (risks, confidences) = read_risk_confidence(&input)?;
            let curve = rc_curve(&risks, &confidences)?;
            let value = aurc(&curve);
            let random = aurc_random(&risks)?;
            let optimal = aurc_optimal(&risks)?;
            let family = AurcFamily {
                n: risks.len(),
                aurc: value,
                aurc_random: random,
                aurc_optimal: optimal,
                naurc: naurc(value, random, optimal).ok(),
            };
            create_dir(&out)?;
            write(&out.join("curve.csv"), &curve.to_csv())?;
            let json = pretty(&family);
            write(&out.join("aurc.json"), &json)?;
            print!("{json}");
        }
        Command::Aggregate {
            conf,
            pred,
            meta,
            width,
            patch_size,
        } => {
            let meta = meta.meta();
            let conf = read_confidence_map(&conf, &meta)?;
            let pred = read_label_map(&pred, &meta)?;
            #[derive(Serialize)]
            struct Scores {
                mean: f64,
                non_boundary: f64,
                mean_foreground: f64,
                patch_min: f64,
            }
            print!(
                "{}",
                pretty(&Scores {
                    mean: agg_mean(&conf)?,
                    non_boundary: agg_non_boundary(&conf, &pred, width)?,
                    mean_foreground: agg_mean_foreground(&conf, &pred, width)?,
                    patch_min: agg_patch_min(&conf, patch_size)?,
                })
            );
        }
        Command::PairwiseDice { samples, meta } => {
            let meta = meta.meta();
            let maps = samples
                .iter()
                .map(|p| read_label_map(p, &meta))
                .collect::<Result<Vec<_>>>()?;
            println!("{}", pairwise_dsc(&maps)?);
        }
        Command::FitRf {
            manifest,
            out,
            seed,
            n_trees,
            width,
        } => {
            let params = ForestParams {
                n_trees,
                seed,
                ..ForestParams::default()
            };
            let model = fit_forest_from_manifest(&read_manifest(&manifest)?, width, &params)?;
            save_json_model(&model, &out)?;
        }
        Command::FitMahalanobis {
            manifest,
            out,
            ridge_epsilon,
        } => {
            let model = fit_gaussian_from_manifest(&read_manifest(&manifest)?, ridge_epsilon)?;
            save_json_model(&model, &out)?;
        }
        Command::Rank {
            reports,
            out,
            risk,
            n_bootstrap,
            seed,
            metric,
        } => {
            let loaded = reports
                .iter()
                .map(|p| EvalReport::load(p))
                .collect::<Result<Vec<_>>>()?;
            let risk = match risk {
                Some(r) => r,
                None => loaded[0]
                    .config
                    .risks
                    .keys()
                    .next()
                    .cloned()
                    .ok_or_else(|| Error::Config("first report has no risks".into()))?,
            };
            let mut sources: Vec<(String, &[CaseRecord], String)> = Vec::new();
            for report in &loaded {
                for column in report.config.confidence_columns() {
                    if sources.iter().any(|(n, _, _)| *n == column.name) {
                        return Err(Error::Config(format!(
                            "confidence `{}` appears in more than one report",
                            column.name
                        )));
                    }
                    sources.push((column.name.clone(), &report.cases, column.name));
                }
            }
            let inputs = ranking_inputs(&sources, &risk);
            let ranking = bootstrap_ranking(&inputs, n_bootstrap, seed, metric.into())?;
            write_ranking(&ranking, &out)?;
            print!("{}", ranking.to_csv());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(2)
        }
    }
}
