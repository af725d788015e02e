//! One full analysis run: configuration, orchestration, and output.
//!
//! The JSON report is deterministic for a fixed configuration: struct field
//! order fixes key order, floats are written with 17 significant digits, and
//! wall-clock timing is left out unless asked for.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::arc::{arc_for_direction, ArcOptions, ArcResult, DirectionArc};
use crate::cones::{linearized_cone, sample_directions};
use crate::cq::{
    check_acq_empirical, check_crcq, check_licq, check_mfcq, check_rcrcq, NeighborhoodSampler, Verdict, DEFAULT_RADII,
    DEFAULT_SAMPLES_PER_RADIUS,
};
use crate::fixtures;
use crate::kkt::{check_ssonc, solve_multipliers, MultiplierSet, SsoncReport};
use crate::linalg::{NewtonOptions, DEFAULT_RANK_TOL};
use crate::model::{
    evaluate_point, feasibility, load_problem, FeasibilityReport, FunctionId, ModelError, PointData, Problem, DEFAULT_ACTIVE_TOL,
};

pub const DEFAULT_ARC_SAMPLE: usize = 4;
pub const DEFAULT_ACQ_DIRECTIONS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemSource {
    File(PathBuf),
    Builtin(String),
}

impl ProblemSource {
    /// `builtin:NAME` or a file path.
    pub fn parse(s: &str) -> Self {
        match s.strip_prefix("builtin:") {
            Some(name) => ProblemSource::Builtin(name.to_string()),
            None => ProblemSource::File(PathBuf::from(s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub rank: f64,
    pub active: f64,
    pub direction: f64,
    pub newton: f64,
    pub verify: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: DEFAULT_RANK_TOL,
            active: DEFAULT_ACTIVE_TOL,
            direction: crate::arc::DEFAULT_DIR_TOL,
            newton: NewtonOptions::default().tol,
            verify: crate::arc::DEFAULT_VERIFY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcDirections {
    Explicit(Vec<Vec<f64>>),
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub source: ProblemSource,
    /// Overrides the point in the problem file.
    pub point: Option<Vec<f64>>,
    pub seed: u64,
    pub radii: Vec<f64>,
    pub samples: usize,
    pub tol: Tolerances,
    pub arc_directions: ArcDirections,
    pub delta: f64,
    pub arc_samples: usize,
    pub acq_directions: usize,
    #[serde(skip)]
    pub json_path: Option<PathBuf>,
    #[serde(skip)]
    pub csv_dir: Option<PathBuf>,
    #[serde(skip)]
    pub include_timing: bool,
}

impl RunConfig {
    pub fn new(source: ProblemSource) -> Self {
        Self {
            source,
            point: None,
            seed: 0,
            radii: DEFAULT_RADII.to_vec(),
            samples: DEFAULT_SAMPLES_PER_RADIUS,
            tol: Tolerances::default(),
            arc_directions: ArcDirections::Sample(DEFAULT_ARC_SAMPLE),
            delta: crate::arc::DEFAULT_DELTA,
            arc_samples: crate::arc::DEFAULT_SAMPLES,
            acq_directions: DEFAULT_ACQ_DIRECTIONS,
            json_path: None,
            csv_dir: None,
            include_timing: false,
        }
    }

    pub fn builtin(name: &str) -> Self {
        Self::new(ProblemSource::Builtin(name.to_string()))
    }

    fn validate(&self) -> Result<(), RunError> {
        let t = &self.tol;
        for (name, v) in [
            ("tol-rank", t.rank),
            ("tol-active", t.active),
            ("tol-direction", t.direction),
            ("tol-newton", t.newton),
            ("tol-verify", t.verify),
            ("delta", self.delta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RunError::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if self.radii.is_empty() || self.radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(RunError::Input("radii must be positive".into()));
        }
        if self.samples == 0 {
            return Err(RunError::Input("samples must be at least 1".into()));
        }
        if self.arc_samples < 5 || self.arc_samples.is_multiple_of(2) {
            return Err(RunError::Input(format!(
                "arc samples must be odd and at least 5, got {}",
                self.arc_samples
            )));
        }
        Ok(())
    }

    fn arc_options(&self) -> ArcOptions {
        ArcOptions {
            delta: self.delta,
            samples: self.arc_samples,
            tol_dir: self.tol.direction,
            tol_rank: self.tol.rank,
            verify_tol: self.tol.verify,
            newton: NewtonOptions {
                tol: self.tol.newton,
                ..NewtonOptions::default()
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// 2 for bad input, 3 for numerical or output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 2,
            RunError::Numerical(_) | RunError::Io { .. } => 3,
        }
    }
}

impl From<ModelError> for RunError {
    fn from(e: ModelError) -> Self {
        RunError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemEcho {
    pub source: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// The problem in file syntax.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionEcho {
    pub function: FunctionId,
    pub value: f64,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqSection {
    pub licq: Verdict,
    pub mfcq: Verdict,
    pub crcq: Verdict,
    pub rcrcq: Verdict,
    pub acq_evidence: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcEntry {
    pub direction: Vec<f64>,
    pub result: Option<DirectionArc>,
    pub error: Option<String>,
    /// File name of the plot data, when written.
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionNote {
    pub section: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub sections_ms: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub problem: ProblemEcho,
    pub point: Vec<f64>,
    pub feasibility: FeasibilityReport,
    pub active_set: Vec<FunctionId>,
    pub functions: Vec<FunctionEcho>,
    pub cq: Option<CqSection>,
    pub kkt: Option<MultiplierSet>,
    pub ssonc: Option<SsoncReport>,
    pub arcs: Vec<ArcEntry>,
    /// Sections that were skipped, with the reason.
    pub skipped: Vec<SectionNote>,
    /// Sections that failed numerically.
    pub errors: Vec<SectionNote>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

fn load(config: &RunConfig) -> Result<(Problem, String), RunError> {
    match &config.source {
        ProblemSource::Builtin(name) => {
            let p = fixtures::builtin(name)
                .ok_or_else(|| RunError::Input(format!("unknown builtin `{name}` (known: {})", fixtures::BUILTIN_NAMES.join(", "))))?;
            Ok((p, format!("builtin:{name}")))
        }
        ProblemSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| RunError::Input(format!("cannot read {}: {e}", path.display())))?;
            Ok((load_problem(&text)?, path.display().to_string()))
        }
    }
}

struct Clock {
    start: Instant,
    last: Instant,
    sections: Vec<(String, f64)>,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            sections: vec![],
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.sections.push((name.to_string(), (now - self.last).as_secs_f64() * 1e3));
        self.last = now;
    }

    fn finish(self) -> Timing {
        Timing {
            total_ms: self.start.elapsed().as_secs_f64() * 1e3,
            sections_ms: self.sections,
        }
    }
}

/// Feasibility, point evaluation, constraint qualifications, multipliers,
/// SSONC and arcs, in that order. Later sections run when they still make
/// sense after an earlier one failed.
pub fn run(config: &RunConfig) -> Result<Report, RunError> {
    config.validate()?;
    let mut clock = Clock::new();
    let (problem, source) = load(config)?;
    let point = config
        .point
        .clone()
        .or_else(|| problem.point.clone())
        .ok_or_else(|| RunError::Input("no point given (use --point or a `point` line)".into()))?;
    let feas = feasibility(&problem, &point, config.tol.active)?;
    let pd = evaluate_point(&problem, &point, config.tol.active)?;
    clock.lap("evaluation");

    let mut skipped = vec![];
    let mut errors = vec![];
    let mut cq = None;
    let mut kkt = None;
    let mut ssonc = None;
    let mut arcs = vec![];
    let opts = config.arc_options();

    if let ArcDirections::Explicit(ds) = &config.arc_directions {
        if let Some(bad) = ds.iter().find(|d| d.len() != problem.n) {
            return Err(RunError::Input(format!(
                "arc direction has {} entries, problem has {} variables",
                bad.len(),
                problem.n
            )));
        }
    }

    if !feas.feasible {
        for section in ["cq", "kkt", "ssonc", "arcs"] {
            skipped.push(SectionNote {
                section,
                message: format!(
                    "point is infeasible (max inequality violation {:e}, max equality violation {:e})",
                    feas.max_ineq_violation, feas.max_eq_violation
                ),
            });
        }
    } else {
        cq = cq_section(config, &problem, &pd, &opts, &mut errors);
        clock.lap("cq");
        match solve_multipliers(&pd) {
            Ok(ms) => {
                if ms.kkt {
                    match check_ssonc(&pd, &ms) {
                        Ok(r) => ssonc = Some(r),
                        Err(e) => errors.push(SectionNote {
                            section: "ssonc",
                            message: e.to_string(),
                        }),
                    }
                } else {
                    skipped.push(SectionNote {
                        section: "ssonc",
                        message: format!("not a KKT point (stationarity residual {:e})", ms.residual),
                    });
                }
                kkt = Some(ms);
            }
            Err(e) => errors.push(SectionNote {
                section: "kkt",
                message: e.to_string(),
            }),
        }
        clock.lap("kkt");
        arcs = arc_section(config, &problem, &pd, &opts);
        clock.lap("arcs");
    }

    let functions = std::iter::once(FunctionId::Objective)
        .chain((0..problem.m()).map(FunctionId::Ineq))
        .chain((0..problem.p()).map(FunctionId::Eq))
        .map(|id| FunctionEcho {
            function: id,
            value: pd.taylor(id).value,
            gradient: pd.gradient(id).to_vec(),
        })
        .collect();

    let mut report = Report {
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        config: config.clone(),
        problem: ProblemEcho {
            source,
            n: problem.n,
            m: problem.m(),
            p: problem.p(),
            text: problem.to_file_text(),
        },
        point,
        feasibility: feas,
        active_set: pd.active.iter().map(|&i| FunctionId::Ineq(i)).collect(),
        functions,
        cq,
        kkt,
        ssonc,
        arcs,
        skipped,
        errors,
        timing: None,
    };
    if config.include_timing {
        report.timing = Some(clock.finish());
    }
    Ok(report)
}

fn cq_section(
    config: &RunConfig,
    problem: &Problem,
    pd: &PointData,
    opts: &ArcOptions,
    errors: &mut Vec<SectionNote>,
) -> Option<CqSection> {
    let sampler = NeighborhoodSampler::new(pd.x.clone(), config.seed)
        .with_radii(config.radii.clone())
        .with_samples(config.samples);
    let tol = config.tol.rank;
    let result = (|| {
        Ok::<_, crate::linalg::LinalgError>(CqSection {
            licq: check_licq(pd, tol)?,
            mfcq: check_mfcq(pd, tol)?,
            crcq: check_crcq(problem, pd, &sampler, tol)?,
            rcrcq: check_rcrcq(problem, pd, &sampler, tol)?,
            acq_evidence: check_acq_empirical(problem, pd, config.acq_directions, config.seed, opts).0,
        })
    })();
    match result {
        Ok(s) => Some(s),
        Err(e) => {
            errors.push(SectionNote {
                section: "cq",
                message: e.to_string(),
            });
            None
        }
    }
}

fn arc_section(config: &RunConfig, problem: &Problem, pd: &PointData, opts: &ArcOptions) -> Vec<ArcEntry> {
    let directions = match &config.arc_directions {
        ArcDirections::Explicit(ds) => ds.clone(),
        ArcDirections::Sample(k) => sample_directions(&linearized_cone(pd), *k, config.seed).directions,
    };
    directions
        .into_iter()
        .map(|d| match arc_for_direction(problem, pd, &d, opts) {
            Ok(a) => ArcEntry {
                direction: d,
                result: Some(a),
                error: None,
                csv: None,
            },
            Err(e) => ArcEntry {
                direction: d,
                result: None,
                error: Some(e.to_string()),
                csv: None,
            },
        })
        .collect()
}

/// Writes `x` with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }
}

/// Serializes any value as JSON with the report's float formatting.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision);
    value.serialize(&mut ser).expect("report types serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let io_err = |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Arc samples as CSV: `t, zeta_1..zeta_n, g_1..g_m, h_1..h_p`.
pub fn arc_csv(ar: &ArcResult) -> String {
    let n = ar.points.first().map_or(0, Vec::len);
    let m = ar.g.first().map_or(0, Vec::len);
    let p = ar.h.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("zeta_{i}")));
    header.extend((1..=m).map(|i| format!("g_{i}")));
    header.extend((1..=p).map(|i| format!("h_{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..ar.t.len() {
        let row: Vec<String> = std::iter::once(ar.t[k])
            .chain(ar.points[k].iter().copied())
            .chain(ar.g[k].iter().copied())
            .chain(ar.h[k].iter().copied())
            .map(format_f64)
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn emit_plot_data(ar: &ArcResult, path: &Path) -> Result<(), RunError> {
    write_atomic(path, &arc_csv(ar))
}

/// Writes the JSON report and one CSV per traced arc as configured, and
/// records the CSV file names in the report.
pub fn write_outputs(report: &mut Report, config: &RunConfig) -> Result<(), RunError> {
    if let Some(dir) = &config.csv_dir {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.clone(), source })?;
        for (k, entry) in report.arcs.iter_mut().enumerate() {
            if let Some(a) = &entry.result {
                let name = format!("arc_{}.csv", k + 1);
                emit_plot_data(&a.arc, &dir.join(&name))?;
                entry.csv = Some(name);
            }
        }
    }
    if let Some(path) = &config.json_path {
        write_atomic(path, &to_json(report))?;
    }
    Ok(())
}

/// Short human-readable digest of a report.
pub fn summary(report: &Report) -> String {
    let mut s = String::new();
    let status = |v: &Verdict| {
        serde_json::to_value(v.status)
            .ok()
            .and_then(|j| j.as_str().map(String::from))
            .unwrap_or_default()
    };
    let _ = writeln!(
        s,
        "problem   {} (n={}, m={}, p={})",
        report.problem.source, report.problem.n, report.problem.m, report.problem.p
    );
    let _ = writeln!(s, "point     {:?}", report.point);
    let _ = writeln!(
        s,
        "feasible  {} (ineq {:.3e}, eq {:.3e})",
        report.feasibility.feasible, report.feasibility.max_ineq_violation, report.feasibility.max_eq_violation
    );
    let active: Vec<String> = report.active_set.iter().map(|f| f.to_string()).collect();
    let _ = writeln!(s, "active    {{{}}}", active.join(", "));
    if let Some(cq) = &report.cq {
        let _ = writeln!(
            s,
            "licq {}  mfcq {}  crcq {}  rcrcq {}  acq-evidence: {}",
            status(&cq.licq),
            status(&cq.mfcq),
            status(&cq.crcq),
            status(&cq.rcrcq),
            cq.acq_evidence.note.as_deref().unwrap_or("")
        );
    }
    if let Some(ms) = &report.kkt {
        let _ = writeln!(
            s,
            "kkt       {} (residual {:.3e}, {} vertices, {} rays)",
            ms.kkt,
            ms.residual,
            ms.vertices.len(),
            ms.rays.len()
        );
    }
    if let Some(r) = &report.ssonc {
        let st = serde_json::to_value(r.status)
            .ok()
            .and_then(|j| j.as_str().map(String::from))
            .unwrap_or_default();
        match &r.worst {
            Some(w) => {
                let _ = writeln!(
                    s,
                    "ssonc     {st} (worst value {:.6e} at mu={:?}, d={:?})",
                    w.value, w.multiplier.mu, w.d
                );
            }
            None => {
                let _ = writeln!(s, "ssonc     {st}");
            }
        }
    }
    for (k, a) in report.arcs.iter().enumerate() {
        match (&a.result, &a.error) {
            (Some(r), _) => {
                let p = &r.properties;
                let flag = |b: bool| if b { "pass" } else { "FAIL" };
                let _ = writeln!(
                    s,
                    "arc {:<3}  d={:?}  arc1 {} arc2 {} arc3 {} arc4 {} arc5 {}  feasible(t>=0) {}",
                    k + 1,
                    a.direction,
                    flag(p.arc1.pass),
                    flag(p.arc2.pass),
                    flag(p.arc3.pass),
                    flag(p.arc4.pass),
                    flag(p.arc5.pass),
                    flag(p.feasible_forward.pass)
                );
            }
            (None, Some(e)) => {
                let _ = writeln!(s, "arc {:<3}  d={:?}  error: {e}", k + 1, a.direction);
            }
            _ => {}
        }
    }
    for n in &report.skipped {
        let _ = writeln!(s, "skipped   {}: {}", n.section, n.message);
    }
    for n in &report.errors {
        let _ = writeln!(s, "error     {}: {}", n.section, n.message);
    }
    s
}
