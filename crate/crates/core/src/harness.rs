//! Seeded end-to-end experiments: transmission code, orthogonalization,
//! subset family, ID code, verification and bound checks, plus parameter
//! sweeps written as CSV.
//!
//! All randomness comes from the config's root seed through labeled
//! derivation, so reports and artifacts are byte-identical across reruns and
//! thread counts. Wall-clock timings are only recorded when asked for.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::idcode::{
    build_loeber_code, build_zero_entropy_code, check_size_bounds, estimate_concentration, purify_and_extend,
    verify_id_code, ConcentrationEstimate, IdCode, IdErrorReport, PhasePolicy, PhaseSearch, SizeBounds, CHECK_SLACK,
};
use crate::io::{read_json, write_json};
use crate::orthogonalize::{orthogonalize_code, OrthogonalizationReport};
use crate::random::{derive_seed, rng_for};
use crate::subsets::{generate_family, verify_family, FamilyMode, FamilyParams, SubsetFamily};
use crate::tol::{check_dim, DIM_GUARD};
use crate::transmission::{random_code, CodeKind, CodeOptions, DecoderKind, TransmissionCode};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BOUND_VIOLATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Exit status for a failed run.
pub fn exit_code_for(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Caps rayon's global pool at `QIDLAB_THREADS` when set.
pub fn init_threads_from_env() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var("QIDLAB_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("QIDLAB_THREADS must be a positive integer, got `{raw}`")))?;
    // a pool built earlier in the process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    Identity { dim: usize },
    /// `id_A ⊗ Tr_C`.
    Extended { dim_a: usize, dim_c: usize },
    Depolarizing { dim: usize, p: f64 },
    Dephasing { p: f64 },
    AmplitudeDamping { gamma: f64 },
    /// `(1−p) id + p U·U†` with a Haar-random `U` drawn from the seed.
    RandomNearIdentity { dim: usize, p: f64 },
    /// Random channel with `kraus` Haar-distributed Kraus operators.
    Random { in_dim: usize, out_dim: usize, kraus: usize },
    File { path: PathBuf },
}

impl ChannelSpec {
    pub fn build(&self, seed: u64) -> Result<KrausChannel> {
        let mut rng = rng_for(seed, "channel", &[]);
        match self {
            ChannelSpec::Identity { dim } => KrausChannel::identity(*dim),
            ChannelSpec::Extended { dim_a, dim_c } => KrausChannel::extended(*dim_a, *dim_c),
            ChannelSpec::Depolarizing { dim, p } => KrausChannel::depolarizing(*dim, *p),
            ChannelSpec::Dephasing { p } => KrausChannel::dephasing(*p),
            ChannelSpec::AmplitudeDamping { gamma } => KrausChannel::amplitude_damping(*gamma),
            ChannelSpec::RandomNearIdentity { dim, p } => KrausChannel::random_near_identity(*dim, *p, &mut rng),
            ChannelSpec::Random { in_dim, out_dim, kraus } => KrausChannel::random(*in_dim, *out_dim, *kraus, &mut rng),
            ChannelSpec::File { path } => read_json(path),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSetting {
    Value(f64),
    /// `"auto"`: the measured maximum error of the orthogonal code.
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Fraction `ε` of the ground set per subset; alternative to `size`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default = "auto_lambda")]
    pub lambda: LambdaSetting,
    pub count: usize,
    #[serde(default = "random_mode")]
    pub mode: FamilyMode,
    #[serde(default)]
    pub max_attempts: Option<usize>,
}

fn auto_lambda() -> LambdaSetting {
    LambdaSetting::Auto(AutoTag::Auto)
}

fn random_mode() -> FamilyMode {
    FamilyMode::Random
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    ZeroEntropy,
    Loeber,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub channel: ChannelSpec,
    pub block_n: usize,
    pub messages: usize,
    #[serde(default = "basis_kind")]
    pub code_kind: CodeKind,
    #[serde(default)]
    pub decoder: Option<DecoderKind>,
    #[serde(default)]
    pub mix: Option<f64>,
    pub family: FamilyConfig,
    #[serde(default = "zero_entropy")]
    pub construction: Construction,
    #[serde(default = "default_trials")]
    pub phase_trials: usize,
    #[serde(default = "uniform_policy")]
    pub phase_policy: PhasePolicy,
    /// Monte Carlo samples for the concentration estimate of message 0; 0 skips it.
    #[serde(default)]
    pub mc_samples: usize,
    /// Purify the ID code onto `id ⊗ Tr_C` with this `dim C` (identity channels only).
    #[serde(default)]
    pub purify_dim: Option<usize>,
    #[serde(default = "default_guard")]
    pub dim_guard: usize,
    #[serde(default)]
    pub timings: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn basis_kind() -> CodeKind {
    CodeKind::Basis
}
fn zero_entropy() -> Construction {
    Construction::ZeroEntropy
}
fn default_trials() -> usize {
    200
}
fn uniform_policy() -> PhasePolicy {
    PhasePolicy::Uniform
}
fn default_guard() -> usize {
    DIM_GUARD
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionStats {
    pub messages: usize,
    pub avg_error: f64,
    pub max_error: f64,
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyStats {
    pub ground: usize,
    pub size: usize,
    pub count: usize,
    pub lambda: f64,
    pub attempts: usize,
    pub worst_overlap: usize,
    pub allowed_overlap: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdStats {
    pub construction: Construction,
    pub delta: f64,
    pub threshold_first: f64,
    pub threshold_second: f64,
    pub rejections: Vec<usize>,
    pub total_rejections: usize,
    /// Guaranteed message count from the concentration argument; `None`
    /// when it is below one and therefore says nothing.
    pub analytic_n_prime: Option<f64>,
    pub achieved_n: usize,
    pub report: IdErrorReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purified_report: Option<IdErrorReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    /// `<=` for ceilings, `>=` for floors.
    pub relation: String,
    pub bound: f64,
    pub ok: bool,
}

impl BoundCheck {
    fn le(name: &str, value: f64, bound: f64) -> Self {
        BoundCheck {
            name: name.into(),
            value,
            relation: "<=".into(),
            bound,
            ok: value <= bound + CHECK_SLACK,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub transmission: TransmissionStats,
    pub orthogonalization: OrthogonalizationReport,
    pub family: FamilyStats,
    pub id: IdStats,
    pub size_bounds: SizeBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationEstimate>,
    pub bound_checks: Vec<BoundCheck>,
    pub all_bounds_hold: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

impl ExperimentReport {
    pub fn exit_code(&self) -> i32 {
        if self.all_bounds_hold {
            EXIT_OK
        } else {
            EXIT_BOUND_VIOLATION
        }
    }
}

/// Everything a run produces; each artifact is serialized by [`PipelineRun::write`].
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub channel: KrausChannel,
    pub code: TransmissionCode,
    pub ocode: TransmissionCode,
    pub family: SubsetFamily,
    pub idcode: IdCode,
    pub purified: Option<IdCode>,
    pub report: ExperimentReport,
}

impl PipelineRun {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        write_json(dir.join("channel.json"), &self.channel)?;
        write_json(dir.join("code.json"), &self.code)?;
        write_json(dir.join("ocode.json"), &self.ocode)?;
        write_json(dir.join("family.json"), &self.family)?;
        write_json(dir.join("idcode.json"), &self.idcode)?;
        if let Some(p) = &self.purified {
            write_json(dir.join("idcode_purified.json"), p)?;
        }
        write_json(dir.join("report.json"), &self.report)
    }
}

struct Clock {
    on: bool,
    last: Instant,
    laps: BTreeMap<String, f64>,
    order: usize,
}

impl Clock {
    fn new(on: bool) -> Self {
        Clock {
            on,
            last: Instant::now(),
            laps: BTreeMap::new(),
            order: 0,
        }
    }

    fn lap(&mut self, stage: &str) {
        if self.on {
            let now = Instant::now();
            self.order += 1;
            self.laps.insert(format!("{:02}_{stage}", self.order), (now - self.last).as_secs_f64() * 1e3);
            self.last = now;
        }
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.on.then_some(self.laps)
    }
}

/// Runs every stage; stage failures carry the stage name. When
/// `output_dir` is set the artifacts are written there.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineRun> {
    let cfg = config;
    let mut clock = Clock::new(cfg.timings);
    let stage = |name: &'static str| move |e: Error| e.at_stage(name);

    let channel = cfg.channel.build(derive_seed(cfg.seed, "channel", &[])).map_err(stage("channel"))?;
    let din = channel.block_in_dim(cfg.block_n, cfg.dim_guard).map_err(stage("channel"))?;
    channel.block_out_dim(cfg.block_n, cfg.dim_guard).map_err(stage("channel"))?;
    clock.lap("channel");

    let mut opts = CodeOptions::new(cfg.code_kind);
    opts.decoder = cfg.decoder;
    if let Some(m) = cfg.mix {
        opts.mix = m;
    }
    let code = random_code(&channel, cfg.block_n, cfg.messages, derive_seed(cfg.seed, "code", &[]), opts)
        .map_err(stage("code"))?;
    let errors = code.errors().map_err(stage("code"))?;
    let transmission = TransmissionStats {
        messages: errors.len(),
        avg_error: errors.iter().sum::<f64>() / errors.len() as f64,
        max_error: errors.iter().copied().fold(0.0, f64::max),
        errors,
    };
    clock.lap("code");

    let orth = orthogonalize_code(&code)?;
    let ocode = orth.code;
    let orep = orth.report;
    clock.lap("orthogonalize");

    let delta = orep.delta_out;
    let ground = ocode.len();
    let lambda = match cfg.family.lambda {
        LambdaSetting::Value(v) => v,
        LambdaSetting::Auto(_) => delta,
    };
    let eps = match (cfg.family.eps, cfg.family.size) {
        (Some(e), None) => e,
        (None, Some(s)) => s as f64 / ground as f64,
        _ => return Err(Error::Config("family needs exactly one of `eps` and `size`".into()).at_stage("family")),
    };
    let mut fparams = FamilyParams::new(ground, eps, lambda, cfg.family.count, derive_seed(cfg.seed, "family", &[]));
    fparams.mode = cfg.family.mode;
    fparams.max_attempts = cfg.family.max_attempts;
    let generated = generate_family(&fparams).map_err(stage("family"))?;
    let family = generated.family;
    let fcheck = verify_family(&family);
    let family_stats = FamilyStats {
        ground,
        size: family.size(),
        count: family.len(),
        lambda,
        attempts: generated.attempts,
        worst_overlap: fcheck.worst_overlap,
        allowed_overlap: fcheck.allowed,
        warnings: generated.warnings,
    };
    clock.lap("family");

    let search = PhaseSearch {
        policy: cfg.phase_policy,
        seed: derive_seed(cfg.seed, "phases", &[]),
        trials: cfg.phase_trials,
    };
    let (idcode, delta_used, t1, t2, rejections, n_prime) = match cfg.construction {
        Construction::ZeroEntropy => {
            let b = build_zero_entropy_code(&ocode, &family, &search).map_err(stage("build-id"))?;
            (b.code, b.delta, b.threshold_first, b.threshold_second, b.rejections, Some(b.analytic_n_prime))
        }
        Construction::Loeber => {
            let c = build_loeber_code(&ocode, &family).map_err(stage("build-id"))?;
            (c, delta, delta, 2.0 * delta, Vec::new(), None)
        }
    };
    clock.lap("build-id");

    let report = verify_id_code(&idcode).map_err(stage("verify-id"))?;
    let purified = match cfg.purify_dim {
        Some(dc) => Some(purify_and_extend(&idcode, dc).map_err(stage("purify"))?),
        None => None,
    };
    let purified_report = match &purified {
        Some(p) => Some(verify_id_code(p).map_err(stage("purify"))?),
        None => None,
    };
    let bounds = check_size_bounds(&idcode, &report, Some(din)).map_err(stage("size-bounds"))?;
    clock.lap("verify-id");

    let concentration = if cfg.mc_samples > 0 {
        Some(
            estimate_concentration(&ocode, &family, 0, delta, cfg.mc_samples, derive_seed(cfg.seed, "mc", &[]))
                .map_err(stage("concentration"))?,
        )
    } else {
        None
    };
    clock.lap("concentration");

    let mut checks = vec![
        BoundCheck::le("delta_out", orep.delta_out, orep.bound_delta),
        BoundCheck::le("gram_deviation", orep.gram_deviation, crate::tol::TOL_ORTH),
        BoundCheck {
            name: "M_prime".into(),
            value: orep.M_prime as f64,
            relation: ">=".into(),
            bound: orep.size_bound() as f64,
            ok: orep.M_prime >= orep.size_bound(),
        },
        BoundCheck::le("lambda1_max", report.lambda1_max, t1),
        BoundCheck::le("lambda2_max", report.lambda2_max, t2),
        BoundCheck {
            name: "size_bound".into(),
            value: bounds.n as f64,
            relation: "<=".into(),
            bound: if bounds.zero_entropy { bounds.pure_bound } else { bounds.general_bound },
            ok: bounds.satisfied,
        },
    ];
    if let Some(p) = &purified_report {
        checks.push(BoundCheck::le("purified_report_difference", report.max_difference(p).unwrap_or(f64::INFINITY), CHECK_SLACK));
    }
    let all_bounds_hold = checks.iter().all(|c| c.ok);

    let id = IdStats {
        construction: cfg.construction,
        delta: delta_used,
        threshold_first: t1,
        threshold_second: t2,
        total_rejections: rejections.iter().sum(),
        rejections,
        analytic_n_prime: n_prime.filter(|&n| n >= 1.0),
        achieved_n: idcode.len(),
        report,
        purified_report,
    };
    let report = ExperimentReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: ExperimentConfig {
            output_dir: None,
            ..cfg.clone()
        },
        transmission,
        orthogonalization: orep,
        family: family_stats,
        id,
        size_bounds: bounds,
        concentration,
        bound_checks: checks,
        all_bounds_hold,
        timings_ms: clock.finish(),
    };
    let run = PipelineRun {
        channel,
        code,
        ocode,
        family,
        idcode,
        purified,
        report,
    };
    if let Some(dir) = &cfg.output_dir {
        run.write(dir)?;
    }
    Ok(run)
}

/// Cartesian grid over dotted config paths, e.g.
/// `{"base": {...}, "axes": [{"param": "channel.p", "values": [0.01, 0.02]}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub base: serde_json::Value,
    pub axes: Vec<SweepAxis>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<serde_json::Value>,
}

impl SweepGrid {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Grid points in lexicographic order of axis indices (first axis outermost).
    pub fn points(&self) -> Result<Vec<Vec<serde_json::Value>>> {
        if self.axes.is_empty() || self.axes.iter().any(|a| a.values.is_empty()) {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        let mut points: Vec<Vec<serde_json::Value>> = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(v.clone());
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }

    pub fn config_at(&self, point: &[serde_json::Value]) -> Result<ExperimentConfig> {
        let mut v = self.base.clone();
        for (axis, value) in self.axes.iter().zip(point) {
            set_path(&mut v, &axis.param, value.clone())?;
        }
        let mut cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.output_dir = None;
        Ok(cfg)
    }
}

fn set_path(v: &mut serde_json::Value, path: &str, value: serde_json::Value) -> Result<()> {
    let mut cur = v;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{path}` does not name a config field")))?;
        if i + 1 == parts.len() {
            obj.insert((*p).to_string(), value);
            return Ok(());
        }
        cur = obj
            .get_mut(*p)
            .ok_or_else(|| Error::Config(format!("`{path}` does not name a config field")))?;
    }
    Ok(())
}

pub const SWEEP_COLUMNS: [&str; 18] = [
    "status",
    "exit_code",
    "error",
    "M",
    "L",
    "M_prime",
    "eps_in",
    "delta_out",
    "bound_delta",
    "N",
    "lambda1_max",
    "lambda2_max",
    "threshold_first",
    "threshold_second",
    "log2_pure_bound",
    "log2_general_bound",
    "rejections",
    "runtime_ms",
];

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub params: Vec<String>,
    pub fields: Vec<String>,
    pub exit_code: i32,
}

fn value_cell(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn run_point(grid: &SweepGrid, point: &[serde_json::Value], timings: bool) -> SweepRow {
    let params: Vec<String> = point.iter().map(value_cell).collect();
    let start = Instant::now();
    let outcome = grid.config_at(point).and_then(|cfg| run_pipeline(&cfg));
    let runtime = if timings {
        format!("{:.3}", start.elapsed().as_secs_f64() * 1e3)
    } else {
        String::new()
    };
    let f = |x: f64| format!("{x}");
    match outcome {
        Ok(run) => {
            let r = &run.report;
            let o = &r.orthogonalization;
            let code = r.exit_code();
            let fields = vec![
                if code == EXIT_OK { "ok" } else { "bound-violation" }.to_string(),
                code.to_string(),
                String::new(),
                o.M.to_string(),
                o.L.to_string(),
                o.M_prime.to_string(),
                f(o.eps_in),
                f(o.delta_out),
                f(o.bound_delta),
                r.id.achieved_n.to_string(),
                f(r.id.report.lambda1_max),
                f(r.id.report.lambda2_max),
                f(r.id.threshold_first),
                f(r.id.threshold_second),
                f(r.size_bounds.log2_pure_bound),
                f(r.size_bounds.log2_general_bound),
                r.id.total_rejections.to_string(),
                runtime,
            ];
            SweepRow {
                params,
                fields,
                exit_code: code,
            }
        }
        Err(e) => {
            let code = exit_code_for(&e);
            let mut fields = vec!["failed".to_string(), code.to_string(), e.to_string()];
            fields.resize(SWEEP_COLUMNS.len() - 1, String::new());
            fields.push(runtime);
            SweepRow {
                params,
                fields,
                exit_code: code,
            }
        }
    }
}

/// Runs every grid point (in parallel) and returns the CSV text; failed
/// points become flagged rows. `timings` fills the `runtime_ms` column.
pub fn sweep(grid: &SweepGrid, timings: bool) -> Result<(String, Vec<SweepRow>)> {
    let points = grid.points()?;
    let rows: Vec<SweepRow> = points.par_iter().map(|p| run_point(grid, p, timings)).collect();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header: Vec<&str> = grid.axes.iter().map(|a| a.param.as_str()).chain(SWEEP_COLUMNS).collect();
    w.write_record(&header)?;
    for row in &rows {
        w.write_record(row.params.iter().chain(&row.fields))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))?;
    Ok((text, rows))
}

/// Worst exit status over the rows (failures outrank bound violations).
pub fn sweep_exit_code(rows: &[SweepRow]) -> i32 {
    rows.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_OK)
}

/// Loads a code book, checking the guard on its dimension.
pub fn load_code(path: impl AsRef<Path>) -> Result<TransmissionCode> {
    let code: TransmissionCode = read_json(path)?;
    check_dim(code.input_dim(), DIM_GUARD)?;
    Ok(code)
}
