//! Batch front end: file ingestion, configuration, the pipeline phases
//! (pretrain, init, train, evaluate), the distance/kernel/initializer
//! ablation grid, and the cluster-count scalability benchmark. Reports are
//! machine-readable; loss curves come out as plot-ready CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autoencoder::{pretrain, AeConfig, AeError, AutoencoderState, HiddenActivation};
use crate::head::{
    train, train_from_centers, Distance, EpochLosses, HeadError, InitMethod, InitSummary, Kernel,
    TrainConfig,
};
use crate::init::InitError;
use crate::linalg::{LinAlgError, Matrix};
use crate::metrics::{evaluate, MetricError, MetricsReport};
use crate::rng::RngState;

pub mod cli;
pub mod io;
pub mod synth;

pub use io::MatrixFormat;

/// Harness-level errors. `code()` gives the stable machine-parseable name.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, col {col}: cannot parse {content:?} as a number")]
    NonNumericCell {
        row: usize,
        col: usize,
        content: String,
    },
    #[error("row {row}, col {col}: non-finite value rejected")]
    NonFiniteValue { row: usize, col: usize },
    #[error("{path}: no data")]
    EmptyFile { path: String },
    #[error("{path}: malformed binary file")]
    BadBinary { path: String },
    #[error("line {line}: negative label")]
    NegativeLabel { line: usize },
    #[error("line {line}: cannot parse {content:?} as a non-negative integer")]
    NonIntegerLine { line: usize, content: String },
    #[error("matrix has {matrix_rows} rows but the labels file has {labels}")]
    LengthMismatch { matrix_rows: usize, labels: usize },
    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("{0}")]
    InvalidFlag(String),
    #[error(transparent)]
    Head(#[from] HeadError),
    #[error(transparent)]
    Autoencoder(#[from] AeError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Stable error code for scripting against stderr output.
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::Io { .. } => "Io",
            HarnessError::RaggedRows { .. } => "RaggedRows",
            HarnessError::NonNumericCell { .. } => "NonNumericCell",
            HarnessError::NonFiniteValue { .. } => "NonFiniteValue",
            HarnessError::EmptyFile { .. } => "EmptyFile",
            HarnessError::BadBinary { .. } => "BadBinary",
            HarnessError::NegativeLabel { .. } => "NegativeLabel",
            HarnessError::NonIntegerLine { .. } => "NonIntegerLine",
            HarnessError::LengthMismatch { .. } => "LengthMismatch",
            HarnessError::InsufficientData { .. } => "InsufficientData",
            HarnessError::InvalidFlag(_) => "InvalidFlag",
            HarnessError::Head(e) => match e {
                HeadError::InvalidDelta(_) => "InvalidDelta",
                HeadError::DimensionMismatch { .. } => "DimensionMismatch",
                HeadError::ZeroVector { .. } => "ZeroVector",
                HeadError::DegenerateColumn { .. } => "DegenerateColumn",
                HeadError::NonFiniteDivergence { .. } => "NonFiniteDivergence",
                HeadError::NonFiniteLoss { .. } => "NonFiniteLoss",
                HeadError::TooFewPoints { .. } => "TooFewPoints",
                HeadError::InvalidConfig(_) => "InvalidConfig",
                HeadError::Init(i) => init_code(i),
                HeadError::Autoencoder(a) => ae_code(a),
                HeadError::LinAlg(_) => "LinAlg",
            },
            HarnessError::Autoencoder(a) => ae_code(a),
            HarnessError::Init(i) => init_code(i),
            HarnessError::Metric(m) => match m {
                MetricError::LengthMismatch { .. } => "LengthMismatch",
                MetricError::TooFewInstances { .. } => "TooFewInstances",
            },
            HarnessError::LinAlg(_) => "LinAlg",
            HarnessError::Json(_) => "Json",
        }
    }
}

fn init_code(e: &InitError) -> &'static str {
    match e {
        InitError::DimensionMismatch { .. } => "DimensionMismatch",
        InitError::InsufficientSubclusters { .. } => "InsufficientSubclusters",
        InitError::TooFewPoints { .. } => "TooFewPoints",
        InitError::InvalidConfig(_) => "InvalidConfig",
    }
}

fn ae_code(e: &AeError) -> &'static str {
    match e {
        AeError::DimensionMismatch { .. } => "DimensionMismatch",
        AeError::ShapeMismatch(_) => "ShapeMismatch",
        AeError::NonFiniteLoss { .. } => "NonFiniteLoss",
        AeError::InvalidConfig(_) => "InvalidConfig",
    }
}

/// An error tagged with the pipeline phase that produced it.
#[derive(Debug, Error)]
#[error("phase {phase}: {source}")]
pub struct PipelineError {
    pub phase: &'static str,
    #[source]
    pub source: HarnessError,
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        self.source.code()
    }
}

fn at<E: Into<HarnessError>>(phase: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError {
        phase,
        source: e.into(),
    }
}

/// Splits a training error into its phase: initialization failures carry
/// the `init` phase, everything else belongs to `train`.
fn train_phase_error(e: HeadError) -> PipelineError {
    let phase = match &e {
        HeadError::Init(_) => "init",
        _ => "train",
    };
    PipelineError {
        phase,
        source: HarnessError::Head(e),
    }
}

/// Epoch presets per task profile: (pretrain, train).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Schema,
    Entity,
    Domain,
}

impl Profile {
    pub fn pretrain_epochs(self) -> usize {
        match self {
            Profile::Schema | Profile::Domain => 30,
            Profile::Entity => 100,
        }
    }

    pub fn train_epochs(self) -> usize {
        match self {
            Profile::Schema => 200,
            Profile::Entity => 50,
            Profile::Domain => 100,
        }
    }
}

/// Kernel family; the bandwidth / degrees-of-freedom live in their own
/// config fields so they can be set independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Cauchy,
    StudentsT,
    Normal,
}

fn default_format() -> MatrixFormat {
    MatrixFormat::Csv
}
fn default_out() -> String {
    "tabledc-out".into()
}
fn default_alpha() -> f64 {
    0.9
}
fn default_gamma() -> f64 {
    1.0
}
fn default_nu() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.01
}
fn default_epsilon() -> f64 {
    1e-10
}
fn default_lr() -> f64 {
    1e-3
}
fn default_distance() -> Distance {
    Distance::Mahalanobis
}
fn default_kernel() -> KernelChoice {
    KernelChoice::Cauchy
}
fn default_init() -> InitMethod {
    InitMethod::Birch
}
fn default_activation() -> HiddenActivation {
    HiddenActivation::Relu
}
fn default_true() -> bool {
    true
}
fn default_branching() -> usize {
    50
}
fn default_restarts() -> usize {
    20
}
fn default_refresh() -> usize {
    1
}

/// Full run configuration. A config file is this struct as a flat JSON
/// object; command-line flags override file keys; a report echoes the
/// resolved result so any run can be replayed from its own report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // data
    #[serde(default)]
    pub input: String,
    #[serde(default = "default_format")]
    pub format: MatrixFormat,
    #[serde(default)]
    pub header: bool,
    #[serde(default)]
    pub labels: Option<String>,
    #[serde(default = "default_out")]
    pub out: String,
    /// Reuse a pretraining snapshot instead of pretraining in-run.
    #[serde(default)]
    pub ae_state: Option<String>,

    // model
    #[serde(default)]
    pub k: usize,
    /// Encoder widths after the input layer, ending at the latent size.
    #[serde(default)]
    pub hidden_dims: Option<Vec<usize>>,
    #[serde(default = "default_activation")]
    pub activation: HiddenActivation,
    #[serde(default)]
    pub batch_size: Option<usize>,

    // clustering head
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_distance")]
    pub distance: Distance,
    #[serde(default = "default_kernel")]
    pub kernel: KernelChoice,
    #[serde(default = "default_init")]
    pub init: InitMethod,
    #[serde(default = "default_true")]
    pub centers_trainable: bool,
    #[serde(default)]
    pub birch_threshold: Option<f64>,
    #[serde(default = "default_branching")]
    pub birch_branching: usize,
    #[serde(default = "default_branching")]
    pub birch_leaf_capacity: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_refresh")]
    pub target_refresh: usize,

    // schedule
    #[serde(default)]
    pub profile: Option<Profile>,
    #[serde(default)]
    pub pretrain_epochs: Option<usize>,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default = "default_lr")]
    pub pretrain_lr: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    /// A configuration with every knob at its default for the given input.
    pub fn new(input: impl Into<String>, k: usize) -> Self {
        serde_json::from_value::<RunConfig>(serde_json::json!({
            "input": input.into(),
            "k": k,
        }))
        .expect("defaults are complete")
    }

    /// Reads a flat JSON config file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Copy with the profile applied to any unset epoch counts.
    /// The schema profile is the fallback when none is given.
    pub fn resolved(&self) -> RunConfig {
        let mut out = self.clone();
        let profile = self.profile.unwrap_or(Profile::Schema);
        out.profile = Some(profile);
        out.pretrain_epochs = Some(
            self.pretrain_epochs
                .unwrap_or_else(|| profile.pretrain_epochs()),
        );
        out.epochs = Some(self.epochs.unwrap_or_else(|| profile.train_epochs()));
        if out.hidden_dims.is_none() {
            out.hidden_dims = Some(vec![500, 500, 2000, 100]);
        }
        out
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.input.is_empty() {
            return Err(HarnessError::InvalidFlag("--input is required".into()));
        }
        if self.k == 0 {
            return Err(HarnessError::InvalidFlag(
                "--k must be a positive cluster count".into(),
            ));
        }
        if self.out.is_empty() {
            return Err(HarnessError::InvalidFlag("--out must not be empty".into()));
        }
        Ok(())
    }

    /// The kernel with its hyperparameter attached.
    pub fn head_kernel(&self) -> Kernel {
        match self.kernel {
            KernelChoice::Cauchy => Kernel::Cauchy { gamma: self.gamma },
            KernelChoice::StudentsT => Kernel::StudentsT { nu: self.nu },
            KernelChoice::Normal => Kernel::Normal { gamma: self.gamma },
        }
    }

    /// Autoencoder layout for data of width `input_dim`. Must be called on
    /// a resolved config.
    pub fn ae_config(&self, input_dim: usize) -> Result<AeConfig, HarnessError> {
        let tail = self
            .hidden_dims
            .clone()
            .unwrap_or_else(|| vec![500, 500, 2000, 100]);
        let mut dims = Vec::with_capacity(tail.len() + 1);
        dims.push(input_dim);
        dims.extend(tail);
        let mut cfg = AeConfig::new(dims, self.activation)?;
        cfg.batch_size = self.batch_size;
        Ok(cfg)
    }

    /// Joint-training configuration. Must be called on a resolved config.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            k: self.k,
            alpha: self.alpha,
            delta: self.delta,
            epsilon: self.epsilon,
            epochs: self.epochs.unwrap_or(200),
            lr: self.lr,
            distance: self.distance,
            kernel: self.head_kernel(),
            init: self.init,
            centers_trainable: self.centers_trainable,
            target_refresh: self.target_refresh,
            restarts: self.restarts,
            birch_threshold: self.birch_threshold,
            birch_branching: self.birch_branching,
            birch_leaf_capacity: self.birch_leaf_capacity,
        }
    }
}

/// Wall-clock seconds per pipeline phase.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseTimings {
    pub pretrain_seconds: f64,
    pub init_seconds: f64,
    pub train_seconds: f64,
}

/// Files a successful run wrote.
#[derive(Debug, Clone, Serialize)]
pub struct OutputFiles {
    pub report: String,
    pub losses: String,
    pub labels: String,
}

/// Machine-readable run summary, also written as `report.json`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    /// Fully resolved configuration; replaying it reproduces the run.
    pub config: RunConfig,
    pub n: usize,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    pub timings: PhaseTimings,
    pub files: OutputFiles,
    pub final_losses: EpochLosses,
    pub init: InitSummary,
    /// Divergence of the soft assignments from the target, per epoch.
    pub kl_target_soft_curve: Vec<f64>,
    #[serde(skip)]
    pub labels: Vec<usize>,
}

fn write_losses_csv(path: &Path, curve: &[EpochLosses]) -> Result<(), HarnessError> {
    let mut out = String::from("epoch,re_loss,ce_loss,total_loss,kl_p_m\n");
    for (i, e) in curve.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            e.reconstruction,
            e.clustering,
            e.total,
            e.clustering
        ));
    }
    fs::write(path, out).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn ensure_out_dir(out: &str) -> Result<PathBuf, HarnessError> {
    let dir = PathBuf::from(out);
    fs::create_dir_all(&dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    Ok(dir)
}

/// Obtains the pretrained autoencoder: either loads the configured
/// snapshot or pretrains from scratch with the shared generator.
fn obtain_pretrained(
    config: &RunConfig,
    x: &Matrix,
    rng: &mut RngState,
) -> Result<AutoencoderState, HarnessError> {
    match &config.ae_state {
        Some(path) => {
            let state = io::load_ae_state(path)?;
            if state.config.input_dim() != x.cols() {
                return Err(HarnessError::InvalidFlag(format!(
                    "snapshot expects {} input columns, data has {}",
                    state.config.input_dim(),
                    x.cols()
                )));
            }
            Ok(state)
        }
        None => {
            let ae_cfg = config.ae_config(x.cols())?;
            let epochs = config.pretrain_epochs.unwrap_or(30);
            let (state, _) = pretrain(x, ae_cfg, epochs, config.pretrain_lr, rng)?;
            Ok(state)
        }
    }
}

/// Full pipeline on in-memory data: pretrain, initialize, train, and
/// evaluate when labels are present. Writes `report.json`, `losses.csv`,
/// and `labels.txt` under the output directory.
pub fn run_pipeline_on(
    config: &RunConfig,
    x: &Matrix,
    labels: Option<&[usize]>,
) -> Result<RunReport, PipelineError> {
    let config = config.resolved();
    if let Some(l) = labels {
        if l.len() != x.rows() {
            return Err(at("load")(HarnessError::LengthMismatch {
                matrix_rows: x.rows(),
                labels: l.len(),
            }));
        }
    }

    let mut rng = RngState::new(config.seed);
    let pretrain_started = Instant::now();
    let ae = obtain_pretrained(&config, x, &mut rng).map_err(|e| PipelineError {
        phase: "pretrain",
        source: e,
    })?;
    let pretrain_seconds = pretrain_started.elapsed().as_secs_f64();

    let train_cfg = config.train_config();
    let result = train(x, &train_cfg, ae, &mut rng).map_err(train_phase_error)?;

    let metrics = match labels {
        Some(truth) => Some(evaluate(truth, &result.labels).map_err(at("evaluate"))?),
        None => None,
    };

    let dir = ensure_out_dir(&config.out).map_err(at("write"))?;
    let report_path = dir.join("report.json");
    let losses_path = dir.join("losses.csv");
    let labels_path = dir.join("labels.txt");
    write_losses_csv(&losses_path, &result.loss_curve).map_err(at("write"))?;
    io::save_labels(&labels_path, &result.labels).map_err(at("write"))?;

    let mut echo = config.clone();
    // the echo pins the dimensions actually used
    echo.hidden_dims = echo.hidden_dims.or_else(|| Some(vec![500, 500, 2000, 100]));

    let report = RunReport {
        config: echo,
        n: x.rows(),
        d: x.cols(),
        metrics,
        timings: PhaseTimings {
            pretrain_seconds,
            init_seconds: result.init.seconds,
            train_seconds: result.epoch_seconds.iter().sum(),
        },
        files: OutputFiles {
            report: report_path.display().to_string(),
            losses: losses_path.display().to_string(),
            labels: labels_path.display().to_string(),
        },
        final_losses: *result.loss_curve.last().expect("epochs >= 1"),
        init: result.init.clone(),
        kl_target_soft_curve: result.loss_curve.iter().map(|e| e.kl_target_soft).collect(),
        labels: result.labels,
    };
    write_json(&report_path, &report).map_err(at("write"))?;
    Ok(report)
}

/// File-based pipeline entry point.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let resolved = config.resolved();
    resolved.validate().map_err(at("config"))?;
    let x =
        io::load_matrix(&resolved.input, resolved.format, resolved.header).map_err(at("load"))?;
    let labels = match &resolved.labels {
        Some(path) => Some(io::load_labels(path).map_err(at("load"))?),
        None => None,
    };
    run_pipeline_on(&resolved, &x, labels.as_deref())
}

/// Pretraining alone: trains the autoencoder, writes the per-epoch loss
/// curve and a reusable snapshot.
pub fn run_pretrain(config: &RunConfig) -> Result<(String, Vec<f64>), PipelineError> {
    let config = config.resolved();
    config.validate().map_err(at("config"))?;
    let x = io::load_matrix(&config.input, config.format, config.header).map_err(at("load"))?;

    let mut rng = RngState::new(config.seed);
    let ae_cfg = config.ae_config(x.cols()).map_err(at("pretrain"))?;
    let epochs = config.pretrain_epochs.unwrap_or(30);
    let (state, losses) =
        pretrain(&x, ae_cfg, epochs, config.pretrain_lr, &mut rng).map_err(at("pretrain"))?;

    let dir = ensure_out_dir(&config.out).map_err(at("write"))?;
    let state_path = dir.join("ae_state.bin");
    io::save_ae_state(&state_path, &state).map_err(at("write"))?;
    let curve_path = dir.join("pretrain_losses.csv");
    let mut csv = String::from("epoch,re_loss\n");
    for (i, l) in losses.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, l));
    }
    fs::write(&curve_path, csv)
        .map_err(|source| HarnessError::Io {
            path: curve_path.display().to_string(),
            source,
        })
        .map_err(at("write"))?;
    Ok((state_path.display().to_string(), losses))
}

/// One cell of the ablation grid.
#[derive(Debug, Clone, Serialize)]
pub struct AblationCell {
    pub group: &'static str,
    pub cell: String,
    pub distance: String,
    pub kernel: String,
    pub init: String,
    pub ari: Option<f64>,
    pub acc: Option<f64>,
    pub error: Option<String>,
}

/// Grid results plus the CSV location.
#[derive(Debug, Serialize)]
pub struct AblationReport {
    pub cells: Vec<AblationCell>,
    pub csv: String,
}

fn distance_name(d: Distance) -> &'static str {
    match d {
        Distance::Mahalanobis => "mahalanobis",
        Distance::Euclidean => "euclidean",
        Distance::Cosine => "cosine",
    }
}

fn kernel_name(k: &Kernel) -> &'static str {
    match k {
        Kernel::Cauchy { .. } => "cauchy",
        Kernel::StudentsT { .. } => "students-t",
        Kernel::Normal { .. } => "normal",
    }
}

fn init_name(i: InitMethod) -> &'static str {
    match i {
        InitMethod::Birch => "birch",
        InitMethod::KMeans => "kmeans",
        InitMethod::KMeansPlusPlus => "kmeanspp",
    }
}

/// Runs the ablation grid: the three distances with the Cauchy kernel
/// fixed, the three kernels with the Mahalanobis distance fixed, and the
/// three initializers under the default head. Every cell reuses one
/// pretrained autoencoder snapshot and the same seed. Cell failures are
/// recorded in their row; the grid continues.
pub fn ablate(config: &RunConfig) -> Result<AblationReport, PipelineError> {
    let config = config.resolved();
    config.validate().map_err(at("config"))?;
    let labels_path = config.labels.clone().ok_or_else(|| {
        at("config")(HarnessError::InvalidFlag(
            "ablation needs --labels to score its cells".into(),
        ))
    })?;
    let x = io::load_matrix(&config.input, config.format, config.header).map_err(at("load"))?;
    let truth = io::load_labels(&labels_path).map_err(at("load"))?;
    if truth.len() != x.rows() {
        return Err(at("load")(HarnessError::LengthMismatch {
            matrix_rows: x.rows(),
            labels: truth.len(),
        }));
    }

    let mut rng = RngState::new(config.seed);
    let snapshot = obtain_pretrained(&config, &x, &mut rng).map_err(at("pretrain"))?;

    let base = config.train_config();
    let mut variants: Vec<(&'static str, TrainConfig)> = Vec::new();
    for distance in [Distance::Mahalanobis, Distance::Euclidean, Distance::Cosine] {
        let mut cfg = base.clone();
        cfg.distance = distance;
        cfg.kernel = Kernel::Cauchy {
            gamma: config.gamma,
        };
        variants.push(("distance", cfg));
    }
    for kernel in [
        Kernel::Cauchy {
            gamma: config.gamma,
        },
        Kernel::StudentsT { nu: config.nu },
        Kernel::Normal {
            gamma: config.gamma,
        },
    ] {
        let mut cfg = base.clone();
        cfg.distance = Distance::Mahalanobis;
        cfg.kernel = kernel;
        variants.push(("kernel", cfg));
    }
    for init in [
        InitMethod::Birch,
        InitMethod::KMeans,
        InitMethod::KMeansPlusPlus,
    ] {
        let mut cfg = base.clone();
        cfg.init = init;
        variants.push(("init", cfg));
    }

    let mut cells = Vec::with_capacity(variants.len());
    for (group, cfg) in variants {
        let cell_name = match group {
            "distance" => distance_name(cfg.distance).to_string(),
            "kernel" => kernel_name(&cfg.kernel).to_string(),
            _ => init_name(cfg.init).to_string(),
        };
        let outcome = train(&x, &cfg, snapshot.clone(), &mut RngState::new(config.seed))
            .map_err(HarnessError::Head)
            .and_then(|result| Ok(evaluate(&truth, &result.labels)?));
        let (ari, acc, error) = match outcome {
            Ok(m) => (Some(m.ari), Some(m.acc), None),
            Err(e) => (None, None, Some(format!("{}: {e}", e.code()))),
        };
        cells.push(AblationCell {
            group,
            cell: cell_name,
            distance: distance_name(cfg.distance).to_string(),
            kernel: kernel_name(&cfg.kernel).to_string(),
            init: init_name(cfg.init).to_string(),
            ari,
            acc,
            error,
        });
    }

    let dir = ensure_out_dir(&config.out).map_err(at("write"))?;
    let csv_path = dir.join("ablation.csv");
    let mut csv = String::from("group,cell,distance,kernel,init,ari,acc,error\n");
    for c in &cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.group,
            c.cell,
            c.distance,
            c.kernel,
            c.init,
            c.ari.map(|v| v.to_string()).unwrap_or_default(),
            c.acc.map(|v| v.to_string()).unwrap_or_default(),
            c.error.clone().unwrap_or_default()
        ));
    }
    fs::write(&csv_path, csv)
        .map_err(|source| HarnessError::Io {
            path: csv_path.display().to_string(),
            source,
        })
        .map_err(at("write"))?;

    Ok(AblationReport {
        cells,
        csv: csv_path.display().to_string(),
    })
}

/// Scalability benchmark options.
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub k_grid: Vec<usize>,
    /// Synthetic data size used when the config names no input file.
    pub n: usize,
    pub d: usize,
    pub warmup_epochs: usize,
    pub measured_epochs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            k_grid: vec![100, 200, 400, 800],
            n: 5000,
            d: 100,
            warmup_epochs: 2,
            measured_epochs: 5,
        }
    }
}

/// One measured grid point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalePoint {
    pub k: usize,
    pub seconds_per_epoch: f64,
}

/// Benchmark results plus provenance.
#[derive(Debug, Serialize)]
pub struct ScalabilityReport {
    pub points: Vec<ScalePoint>,
    pub n: usize,
    pub d: usize,
    pub warmup_epochs: usize,
    pub measured_epochs: usize,
    /// `TABLEDC_HW_*` environment variables, for labeling benchmark runs.
    pub hardware: BTreeMap<String, String>,
    pub csv: String,
}

/// Measures mean per-epoch training wall time for each cluster count in
/// the grid, after warm-up epochs. Centers are seeded by an evenly strided
/// draw from the latent points: initialization quality does not affect
/// per-epoch cost, and the stride keeps the benchmark deterministic and
/// cheap at large K. Emits `scalability.csv` with one `(k, seconds)` row
/// per grid point.
pub fn bench_scalability(
    config: &RunConfig,
    opts: &BenchOptions,
) -> Result<ScalabilityReport, PipelineError> {
    let config = config.resolved();
    if opts.k_grid.is_empty() {
        return Err(at("config")(HarnessError::InvalidFlag(
            "--k-grid must name at least one cluster count".into(),
        )));
    }
    let max_k = *opts.k_grid.iter().max().unwrap();

    let mut rng = RngState::new(config.seed);
    let x = if config.input.is_empty() {
        Matrix::from_fn(opts.n, opts.d, |_, _| rng.next_gaussian())
    } else {
        io::load_matrix(&config.input, config.format, config.header).map_err(at("load"))?
    };
    if x.rows() < max_k {
        return Err(at("config")(HarnessError::InsufficientData {
            needed: max_k,
            got: x.rows(),
        }));
    }

    let snapshot = obtain_pretrained(&config, &x, &mut rng).map_err(at("pretrain"))?;
    let latent = snapshot.encode(&x).map_err(at("init"))?;

    let mut points = Vec::with_capacity(opts.k_grid.len());
    for &k in &opts.k_grid {
        let mut cfg = config.train_config();
        cfg.k = k;
        cfg.epochs = opts.warmup_epochs + opts.measured_epochs;
        let centers = Matrix::from_fn(k, latent.cols(), |c, t| latent.get(c * x.rows() / k, t));
        let result = train_from_centers(&x, &cfg, snapshot.clone(), centers, |_| {})
            .map_err(train_phase_error)?;
        let measured = &result.epoch_seconds[opts.warmup_epochs..];
        let mean = measured.iter().sum::<f64>() / measured.len() as f64;
        points.push(ScalePoint {
            k,
            seconds_per_epoch: mean,
        });
    }

    let dir = ensure_out_dir(&config.out).map_err(at("write"))?;
    let csv_path = dir.join("scalability.csv");
    let mut csv = String::from("k,seconds_per_epoch\n");
    for p in &points {
        csv.push_str(&format!("{},{}\n", p.k, p.seconds_per_epoch));
    }
    fs::write(&csv_path, csv)
        .map_err(|source| HarnessError::Io {
            path: csv_path.display().to_string(),
            source,
        })
        .map_err(at("write"))?;

    let hardware = std::env::vars()
        .filter_map(|(k, v)| {
            k.strip_prefix("TABLEDC_HW_")
                .map(|suffix| (suffix.to_lowercase(), v))
        })
        .collect();

    Ok(ScalabilityReport {
        points,
        n: x.rows(),
        d: x.cols(),
        warmup_epochs: opts.warmup_epochs,
        measured_epochs: opts.measured_epochs,
        hardware,
        csv: csv_path.display().to_string(),
    })
}
