//! Subcommand implementations behind the `nidsgan` driver.
//!
//! Every command reads the config, rebuilds whatever it needs from the
//! artifacts already in the output directory and writes its own artifacts
//! there. Nothing depends on wall-clock time or thread count, so rerunning a
//! command with the same inputs rewrites identical bytes.

mod config;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    AugmentSection, CleanSection, EdaSection, EncoderSection, IsoSection, LabelSection, Paths,
    PipelineConfig, TuneSection,
};

use crate::analysis;
use crate::error::{Error, Result};
use crate::eval::{self, ClassMetrics, ComparisonReport};
use crate::gan;
use crate::gbt::{self, BoostedEnsemble, GbtConfig, TrialRecord};
use crate::ingest::{
    self, class_distribution, CleanReport, LabelMapping, LabelReport, Schema, TabularDataset,
};
use crate::isoforest::{self, ClassAnomaly};
use crate::preprocess::{
    fit_encoders, stratified_split, transform, EncoderPlan, FeatureMatrix, FittedEncoder,
    SplitIndices,
};
use crate::seed;

pub const CLEAN_DATASET: &str = "dataset-clean.csv";

/// Stream indices for seeds derived from the master seed.
const SPLIT_STREAM: u64 = 1;
const GBT_STREAM: u64 = 2;
const TUNE_STREAM: u64 = 3;
const ISO_STREAM: u64 = 4;
const GAN_STREAM: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Baseline,
    Augmented,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Augmented => "augmented",
        }
    }
}

/// Reads a file, reporting a missing one as [`Error::MissingInput`].
pub fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub source: String,
    pub rows_parsed: usize,
    pub clean: CleanReport,
    pub labels: LabelReport,
    pub class_counts: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub variant: Variant,
    pub model: BoostedEnsemble,
    pub metrics: ClassMetrics,
}

/// Encoded data with its encoder and split, rebuilt from the cleaned
/// dataset.
pub struct Prepared {
    pub encoder: FittedEncoder,
    pub matrix: FeatureMatrix,
    pub split: SplitIndices,
}

impl Prepared {
    pub fn train(&self) -> FeatureMatrix {
        self.matrix.select_rows(&self.split.train)
    }

    pub fn val(&self) -> FeatureMatrix {
        self.matrix.select_rows(&self.split.val)
    }

    pub fn test(&self) -> FeatureMatrix {
        self.matrix.select_rows(&self.split.test)
    }
}

pub struct Pipeline {
    pub config: PipelineConfig,
}

impl Pipeline {
    /// Loads a config file. `out` replaces the configured output directory
    /// and `seed` the master seed.
    pub fn from_file(path: &Path, out: Option<PathBuf>, seed_override: Option<u64>) -> Result<Self> {
        let text = read_input(path)?;
        let mut config = PipelineConfig::from_toml(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.resolve_paths(&base);
        Ok(Pipeline::new(config, out, seed_override))
    }

    pub fn new(mut config: PipelineConfig, out: Option<PathBuf>, seed_override: Option<u64>) -> Self {
        if let Some(o) = out {
            config.paths.out = o;
        }
        if let Some(s) = seed_override {
            config.seed = s;
        }
        Pipeline { config }
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.paths.out
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let dir = self.out_dir();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn derived_seed(&self, stream: u64) -> u64 {
        seed::derive(self.config.seed, stream)
    }

    pub fn schema(&self) -> Result<Schema> {
        match &self.config.paths.schema {
            Some(p) => Schema::from_text(&read_input(p)?),
            None => Ok(Schema::nslkdd()),
        }
    }

    fn label_mapping(&self) -> Result<LabelMapping> {
        match &self.config.paths.label_map {
            Some(p) => LabelMapping::from_text(&read_input(p)?),
            None => Ok(LabelMapping::nslkdd_default()),
        }
    }

    /// Parses, cleans and relabels the raw dataset.
    pub fn ingest(&self) -> Result<IngestReport> {
        let schema = self.schema()?;
        let mapping = self.label_mapping()?;
        let path = &self.config.paths.dataset;
        let text = read_input(path)?;
        let raw = ingest::parse_nslkdd(text.as_bytes(), &schema, path.display().to_string())?;
        let (cleaned, clean_report) = ingest::clean(&raw, &self.config.clean.options());
        let keep: BTreeSet<String> = self.config.labels.keep.iter().cloned().collect();
        let (mapped, label_report) = ingest::map_labels(&cleaned, &mapping, &keep)?;
        if mapped.is_empty() {
            return Err(Error::invalid("no rows left after cleaning and relabelling"));
        }
        let hist = class_distribution(&mapped);
        self.write(CLEAN_DATASET, &mapped.to_csv_string())?;
        self.write("class-distribution.csv", &hist.to_csv())?;
        let report = IngestReport {
            source: path.display().to_string(),
            rows_parsed: raw.len(),
            clean: clean_report,
            labels: label_report,
            class_counts: hist.entries.clone(),
        };
        self.write_json("ingest-report.json", &report)?;
        Ok(report)
    }

    /// The cleaned dataset written by [`Pipeline::ingest`].
    pub fn load_clean(&self) -> Result<TabularDataset> {
        let schema = self.schema()?;
        let path = self.artifact(CLEAN_DATASET);
        let text = read_input(&path)?;
        ingest::parse_nslkdd(text.as_bytes(), &schema, path.display().to_string())
    }

    pub fn encoder_plan(&self, schema: &Schema) -> Result<EncoderPlan> {
        let onehot: Vec<&str> = self.config.encoder.onehot.iter().map(String::as_str).collect();
        EncoderPlan::with_onehot(schema, &onehot).with_overrides(schema, &self.config.encoder.overrides)
    }

    /// Fits the encoder on the cleaned dataset and splits it.
    pub fn prepare_with(&self, plan_of: impl Fn(EncoderPlan) -> EncoderPlan) -> Result<Prepared> {
        let ds = self.load_clean()?;
        let plan = plan_of(self.encoder_plan(ds.schema())?);
        let encoder = fit_encoders(&ds, &plan)?;
        let matrix = transform(&encoder, &ds)?;
        let split = stratified_split(&matrix, self.config.split, self.derived_seed(SPLIT_STREAM))?;
        Ok(Prepared {
            encoder,
            matrix,
            split,
        })
    }

    pub fn prepare(&self) -> Result<Prepared> {
        self.prepare_with(|p| p)
    }

    fn gbt_config(&self) -> GbtConfig {
        GbtConfig {
            seed: self.derived_seed(GBT_STREAM),
            ..self.config.gbt.clone()
        }
    }

    /// Trains and evaluates one model variant. The augmented variant first
    /// rebalances the training partition with per-class GANs.
    pub fn train(&self, variant: Variant) -> Result<TrainOutcome> {
        let prepared = self.prepare()?;
        self.write("encoder.json", &(prepared.encoder.to_json()? + "\n"))?;
        self.write_json("split.json", &prepared.split)?;
        let v = variant.name();

        let mut train_set = prepared.train();
        if variant == Variant::Augmented {
            train_set = self.augment(&prepared, &train_set)?;
        }
        let val = prepared.val();
        let test = prepared.test();

        let mut cfg = self.gbt_config();
        if self.config.tune.budget > 0 {
            let (best, trials) = gbt::tune(
                &train_set,
                &val,
                self.config.tune.budget,
                &self.config.tune.space,
                &cfg,
                self.derived_seed(TUNE_STREAM),
            )?;
            self.write(&format!("tune-trials-{v}.csv"), &TrialRecord::to_csv(&trials))?;
            cfg = best;
        }
        let model = gbt::train(&train_set, &cfg)?;
        let pred = gbt::predict(&model, &test)?;
        let cm = eval::confusion(&pred, &test.class_ids, &test.class_names)?;
        let metrics = eval::metrics(&cm)?;

        self.write(&format!("model-{v}.json"), &(model.to_json()? + "\n"))?;
        self.write(&format!("confusion-{v}.csv"), &cm.to_csv())?;
        self.write(&format!("metrics-{v}.json"), &(metrics.to_json()? + "\n"))?;
        self.write(&format!("metrics-{v}.txt"), &eval::metrics_table(&metrics))?;
        self.write(
            &format!("feature-importance-{v}.csv"),
            &gbt::feature_importance(&model).to_csv(),
        )?;
        let mut trace = String::from("round,train_loss\n");
        for (i, l) in model.loss_trace.iter().enumerate() {
            trace.push_str(&format!("{i},{l}\n"));
        }
        self.write(&format!("loss-trace-{v}.csv"), &trace)?;
        Ok(TrainOutcome {
            variant,
            model,
            metrics,
        })
    }

    fn augment(&self, prepared: &Prepared, train_set: &FeatureMatrix) -> Result<FeatureMatrix> {
        let targets = if self.config.augment.targets.is_empty() {
            gan::default_targets(train_set, &self.config.augment.majority)
        } else {
            self.config.augment.targets.clone()
        };
        let cfg = gan::GanConfig {
            seed: self.derived_seed(GAN_STREAM),
            ..self.config.gan.clone()
        };
        let roles = prepared.encoder.feature_roles();
        let aug = gan::augment(train_set, &targets, &cfg, &roles)?;

        #[derive(Serialize)]
        struct ClassEntry<'a> {
            class: &'a str,
            real_rows: usize,
            target: usize,
            synthetic_rows: usize,
            final_d_loss: Option<f64>,
            final_g_loss: Option<f64>,
        }
        let mut entries = Vec::new();
        for c in &aug.classes {
            if c.synthetic_rows > 0 {
                let class_file = sanitize(&c.class);
                self.write(&format!("gan-trace-{class_file}.csv"), &c.trace.to_csv())?;
                let pairs = analysis::real_vs_synthetic_summary(train_set, &c.synthetic, &c.class)?;
                self.write(
                    &format!("synthetic-vs-real-{class_file}.csv"),
                    &analysis::paired_csv(&pairs),
                )?;
            }
            let last = c.trace.epochs.last();
            entries.push(ClassEntry {
                class: &c.class,
                real_rows: c.real_rows,
                target: c.target,
                synthetic_rows: c.synthetic_rows,
                final_d_loss: last.map(|e| e.d_loss),
                final_g_loss: last.map(|e| e.g_loss),
            });
        }
        self.write_json("augmentation-report.json", &entries)?;
        Ok(aug.matrix)
    }

    /// Fits an Isolation Forest on the training partition and ranks classes
    /// by mean anomaly score over all rows.
    pub fn anomaly(&self) -> Result<Vec<ClassAnomaly>> {
        let prepared = self.prepare()?;
        let train_set = prepared.train();
        let psi = self.config.isoforest.psi.min(train_set.n_rows());
        let forest = isoforest::fit(
            &train_set,
            self.config.isoforest.trees,
            psi,
            self.derived_seed(ISO_STREAM),
        )?;
        let ranking = isoforest::class_anomaly_ranking(&forest, &prepared.matrix)?;
        self.write("anomaly-ranking.csv", &isoforest::ranking_csv(&ranking))?;
        self.write("isoforest.json", &(forest.to_json()? + "\n"))?;
        Ok(ranking)
    }

    pub fn load_metrics(&self, variant: Variant) -> Result<ClassMetrics> {
        ClassMetrics::from_json(&read_input(&self.artifact(&format!("metrics-{}.json", variant.name())))?)
    }

    /// Before/after report from the two metrics artifacts.
    pub fn compare(&self) -> Result<ComparisonReport> {
        let before = self.load_metrics(Variant::Baseline)?;
        let after = self.load_metrics(Variant::Augmented)?;
        let report = eval::compare(&before, &after)?;
        self.write("comparison.json", &(report.to_json()? + "\n"))?;
        self.write("comparison.txt", &report.to_text(&before, &after))?;
        Ok(report)
    }

    /// Per-class feature summaries on unscaled features, plus `duration` by
    /// class. Returns the number of summaries written.
    pub fn eda(&self) -> Result<usize> {
        let prepared = self.prepare_with(|p| p.unscaled())?;
        let m = &prepared.matrix;
        let features: Vec<String> = if !self.config.eda.features.is_empty() {
            self.config.eda.features.clone()
        } else {
            match read_input(&self.artifact("model-baseline.json")) {
                Ok(text) => {
                    let model = BoostedEnsemble::from_json(&text)?;
                    gbt::feature_importance(&model)
                        .top(10)
                        .iter()
                        .map(|(n, _)| n.clone())
                        .filter(|n| m.feature_index(n).is_some())
                        .collect()
                }
                Err(Error::MissingInput(_)) => m.feature_names.clone(),
                Err(e) => return Err(e),
            }
        };
        let features = if features.is_empty() { m.feature_names.clone() } else { features };
        let classes: Vec<String> = if self.config.eda.classes.is_empty() {
            m.class_names.clone()
        } else {
            self.config.eda.classes.clone()
        };
        let f: Vec<&str> = features.iter().map(String::as_str).collect();
        let c: Vec<&str> = classes.iter().map(String::as_str).collect();
        let summaries = analysis::feature_summaries(m, &f, &c)?;
        self.write("feature-summaries.csv", &analysis::summaries_csv(&summaries))?;
        self.write("feature-histograms.csv", &analysis::histograms_csv(&summaries))?;
        self.write_json("feature-summaries.json", &summaries)?;
        if m.feature_index("duration").is_some() {
            let d = analysis::feature_summaries(m, &["duration"], &c)?;
            self.write("duration-by-class.csv", &analysis::summaries_csv(&d))?;
        }
        Ok(summaries.len())
    }

    /// Ingest, both training variants, anomaly ranking, EDA and comparison.
    pub fn all(&self) -> Result<ComparisonReport> {
        self.ingest()?;
        self.train(Variant::Baseline)?;
        self.train(Variant::Augmented)?;
        self.anomaly()?;
        self.eda()?;
        self.compare()
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
