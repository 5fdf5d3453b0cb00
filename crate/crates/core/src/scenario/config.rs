//! Flat `section.key = value` scenario files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use toml::Value;

use crate::blowup::DetectionPolicy;
use crate::dynamics::{Reduction, RhsForm, SimConfig};

/// What a scenario evolves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    General,
    Gx,
    Case1,
    Case2,
    Peakon,
    PeriodicPeakon,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::General,
        ScenarioKind::Gx,
        ScenarioKind::Case1,
        ScenarioKind::Case2,
        ScenarioKind::Peakon,
        ScenarioKind::PeriodicPeakon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::General => "general",
            ScenarioKind::Gx => "gx",
            ScenarioKind::Case1 => "case1",
            ScenarioKind::Case2 => "case2",
            ScenarioKind::Peakon => "peakon",
            ScenarioKind::PeriodicPeakon => "periodic_peakon",
        }
    }

    pub fn reduction(self) -> Option<Reduction> {
        match self {
            ScenarioKind::Gx => Some(Reduction::GengXue),
            ScenarioKind::Case1 => Some(Reduction::Case1),
            ScenarioKind::Case2 => Some(Reduction::Case2),
            _ => None,
        }
    }

    fn is_peakon(self) -> bool {
        matches!(self, ScenarioKind::Peakon | ScenarioKind::PeriodicPeakon)
    }
}

/// Profile shared by every bump of a bump-family initial condition, as a
/// function of `z = (x - center) / width` with `z` wrapped to the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpFamily {
    /// `exp(-z²)`
    Gaussian,
    /// `z exp(-z²)`, sign changing
    OddGaussian,
    /// `sech z`
    Sech,
    /// `sin(2π w (x - center) / L)` where the width `w` counts periods.
    Sine,
}

impl BumpFamily {
    const NAMES: [(&'static str, BumpFamily); 4] = [
        ("gaussian", BumpFamily::Gaussian),
        ("odd_gaussian", BumpFamily::OddGaussian),
        ("sech", BumpFamily::Sech),
        ("sine", BumpFamily::Sine),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES
            .iter()
            .find(|(_, f)| *f == self)
            .map(|(n, _)| *n)
            .unwrap_or("gaussian")
    }

    /// Value at `x` on a circle of length `length`.
    pub fn eval(self, x: f64, center: f64, width: f64, length: f64) -> f64 {
        if self == BumpFamily::Sine {
            return (2.0 * std::f64::consts::PI * width * (x - center) / length).sin();
        }
        let z = crate::peakon::wrap_centered(x - center, length) / width;
        match self {
            BumpFamily::Gaussian => (-z * z).exp(),
            BumpFamily::OddGaussian => z * (-z * z).exp(),
            BumpFamily::Sech => 1.0 / z.cosh(),
            BumpFamily::Sine => unreachable!(),
        }
    }
}

/// One bump per momentum field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bumps {
    pub family: BumpFamily,
    pub m_amp: Vec<f64>,
    pub m_center: Vec<f64>,
    pub m_width: Vec<f64>,
    pub n_amp: Vec<f64>,
    pub n_center: Vec<f64>,
    pub n_width: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakonData {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub x0: f64,
    /// Mollifier width in grid spacings.
    pub sigma_cells: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    Bumps(Bumps),
    /// CSV with a header and columns `x, m_1..m_N, n_1..n_N`, one row per
    /// grid node. Further columns are ignored.
    File(PathBuf),
    Peakon(PeakonData),
}

/// Observers a scenario may attach.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    /// Conserved quantities, sign and one-sided bounds.
    Invariants,
    /// Crest position of `u_1` for speed measurement.
    PeakTrack,
}

impl ObserverKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "invariants" => Some(ObserverKind::Invariants),
            "peak_track" => Some(ObserverKind::PeakTrack),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObserverKind::Invariants => "invariants",
            ObserverKind::PeakTrack => "peak_track",
        }
    }
}

/// Overrides for the divergence detector. Unset values come from
/// [`DetectionPolicy::with_scale`] at the initial L∞ norm.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DetectSection {
    pub magnitude: Option<f64>,
    pub rate: Option<f64>,
    pub window: Option<usize>,
}

impl DetectSection {
    pub fn policy(&self, scale: f64, cap: f64) -> DetectionPolicy {
        let mut p = DetectionPolicy::with_scale(scale, cap);
        if let Some(m) = self.magnitude {
            p.magnitude = m;
        }
        if let Some(r) = self.rate {
            p.rate = r;
        }
        if let Some(w) = self.window {
            p.window = w;
        }
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Number of components of the evolved state.
    pub components: usize,
    pub seed: u64,
    pub n_points: usize,
    pub length: f64,
    pub sim: SimConfig,
    pub initial: InitialData,
    pub observers: Vec<ObserverKind>,
    /// Run directory. Relative paths resolve against `NOVIKOV_OUT` when set.
    pub output_dir: PathBuf,
    /// Requested snapshot times. Each is written at the first monitor
    /// sample at or after it; the final state is always written.
    pub snapshot_times: Vec<f64>,
    pub detect: DetectSection,
}

/// One problem found while reading a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Every violation found in a configuration document.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration")?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Str,
    Int,
    Float,
    Bool,
    FloatList,
    StrList,
}

/// Every accepted key, its type, default (as written in a document) and
/// a one-line description. This table is the reference for the grammar.
pub const KEYS: &[(&str, &str, &str)] = &[
    (
        "scenario.kind",
        "\"gx\"",
        "general | gx | case1 | case2 | peakon | periodic_peakon",
    ),
    (
        "scenario.components",
        "1",
        "number of components N, used by the general kind",
    ),
    ("scenario.seed", "0", "seed for randomized test families"),
    ("grid.n_points", "512", "grid size, even and at least 8"),
    (
        "grid.length",
        "40.0",
        "period of the domain; must be 1 for periodic_peakon",
    ),
    ("sim.dt", "0.0002", "time step"),
    ("sim.t_end", "2.0", "final time"),
    (
        "sim.dealias",
        "true",
        "evaluate products on the zero-padded grid",
    ),
    ("sim.monitor_stride", "10", "steps between monitor samples"),
    (
        "sim.blowup_linf_cap",
        "1000000.0",
        "momentum L∞ at which the run stops as blow-up suspected",
    ),
    (
        "sim.form",
        "\"componentwise\"",
        "componentwise | transport right-hand side",
    ),
    (
        "initial.family",
        "\"gaussian\"",
        "gaussian | odd_gaussian | sech | sine",
    ),
    (
        "initial.file",
        "",
        "CSV of samples with columns x, m_1..m_N, n_1..n_N; replaces the bump keys",
    ),
    ("initial.m_amp", "[1.0]", "bump amplitude per m field"),
    ("initial.m_center", "[15.0]", "bump centre per m field"),
    (
        "initial.m_width",
        "[1.0]",
        "bump width per m field (periods for sine)",
    ),
    ("initial.n_amp", "[1.0]", "bump amplitude per n field"),
    ("initial.n_center", "[25.0]", "bump centre per n field"),
    (
        "initial.n_width",
        "[1.0]",
        "bump width per n field (periods for sine)",
    ),
    ("peakon.p", "", "u amplitudes, required for peakon kinds"),
    ("peakon.q", "", "v amplitudes, required for peakon kinds"),
    ("peakon.x0", "L/2", "initial crest position"),
    (
        "peakon.sigma_cells",
        "4.0",
        "mollifier width in grid spacings, at least 2",
    ),
    (
        "observers.list",
        "[\"invariants\"]",
        "invariants | peak_track",
    ),
    ("output.dir", "\"run\"", "run directory"),
    ("output.snapshot_times", "[]", "times of field snapshots"),
    (
        "detect.magnitude",
        "",
        "divergence magnitude threshold, default 1e3 × initial L∞",
    ),
    ("detect.rate", "", "divergence slope threshold, default 1e2"),
    ("detect.window", "", "samples in the slope fit, default 20"),
];

fn key_kind(key: &str) -> Option<Kind> {
    Some(match key {
        "scenario.kind" | "sim.form" | "initial.family" | "initial.file" | "output.dir" => {
            Kind::Str
        }
        "scenario.components"
        | "scenario.seed"
        | "grid.n_points"
        | "sim.monitor_stride"
        | "detect.window" => Kind::Int,
        "grid.length"
        | "sim.dt"
        | "sim.t_end"
        | "sim.blowup_linf_cap"
        | "peakon.x0"
        | "peakon.sigma_cells"
        | "detect.magnitude"
        | "detect.rate" => Kind::Float,
        "sim.dealias" => Kind::Bool,
        "initial.m_amp"
        | "initial.m_center"
        | "initial.m_width"
        | "initial.n_amp"
        | "initial.n_center"
        | "initial.n_width"
        | "peakon.p"
        | "peakon.q"
        | "output.snapshot_times" => Kind::FloatList,
        "observers.list" => Kind::StrList,
        _ => return None,
    })
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

/// Typed view over the flattened document that records every problem.
struct Reader {
    values: BTreeMap<String, Value>,
    errors: Vec<Violation>,
}

impl Reader {
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        self.errors.push(Violation {
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn str(&mut self, key: &str) -> Option<String> {
        match self.values.get(key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.fail(key, "expected a quoted string");
                None
            }
        }
    }

    fn int(&mut self, key: &str) -> Option<i64> {
        match self.values.get(key)? {
            Value::Integer(i) => Some(*i),
            _ => {
                self.fail(key, "expected an integer");
                None
            }
        }
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        match self.values.get(key)? {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.fail(key, "expected a number");
                None
            }
        }
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        match self.values.get(key)? {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.fail(key, "expected true or false");
                None
            }
        }
    }

    fn floats(&mut self, key: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = self.values.get(key)? else {
            self.fail(key, "expected a bracketed list of numbers");
            return None;
        };
        let parsed: Option<Vec<f64>> = items
            .iter()
            .map(|v| match v {
                Value::Float(f) => Some(*f),
                Value::Integer(i) => Some(*i as f64),
                _ => None,
            })
            .collect();
        if parsed.is_none() {
            self.fail(key, "expected a bracketed list of numbers");
        }
        parsed
    }

    fn strs(&mut self, key: &str) -> Option<Vec<String>> {
        let Value::Array(items) = self.values.get(key)? else {
            self.fail(key, "expected a bracketed list of strings");
            return None;
        };
        let parsed: Option<Vec<String>> = items
            .iter()
            .map(|v| v.as_str().map(str::to_string))
            .collect();
        if parsed.is_none() {
            self.fail(key, "expected a bracketed list of strings");
        }
        parsed
    }

    fn positive(&mut self, key: &str, value: f64) -> f64 {
        if !(value.is_finite() && value > 0.0) {
            self.fail(key, format!("must be positive and finite, got {value}"));
        }
        value
    }
}

/// Parses and validates a scenario document, reporting every violation.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        violations: vec![Violation {
            key: "<document>".into(),
            message: e.message().trim().to_string(),
        }],
    })?;
    let mut values = BTreeMap::new();
    flatten("", &table, &mut values);
    let mut r = Reader {
        values,
        errors: Vec::new(),
    };

    let unknown: Vec<String> = r
        .values
        .keys()
        .filter(|k| key_kind(k).is_none())
        .cloned()
        .collect();
    for k in unknown {
        r.fail(&k, "unknown key");
    }

    let kind = match r.str("scenario.kind").as_deref() {
        None => ScenarioKind::Gx,
        Some(name) => ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .unwrap_or_else(|| {
                r.fail("scenario.kind", format!("unknown scenario kind \"{name}\""));
                ScenarioKind::Gx
            }),
    };
    let seed = r.int("scenario.seed").unwrap_or(0);
    if seed < 0 {
        r.fail("scenario.seed", "must be nonnegative");
    }

    let n_points = r.int("grid.n_points").unwrap_or(512);
    if n_points < 8 || n_points % 2 != 0 {
        r.fail(
            "grid.n_points",
            format!("must be even and at least 8, got {n_points}"),
        );
    }
    let default_length = if kind == ScenarioKind::PeriodicPeakon {
        1.0
    } else {
        40.0
    };
    let length = r.float("grid.length").unwrap_or(default_length);
    let length = r.positive("grid.length", length);
    if kind == ScenarioKind::PeriodicPeakon && length != 1.0 {
        r.fail(
            "grid.length",
            format!("length must be 1 for periodic_peakon, got {length}"),
        );
    }

    let dt = r.float("sim.dt").unwrap_or(2e-4);
    let dt = r.positive("sim.dt", dt);
    let t_end = r.float("sim.t_end").unwrap_or(2.0);
    let t_end = r.positive("sim.t_end", t_end);
    if dt >= t_end {
        r.fail(
            "sim.dt",
            format!("must be below sim.t_end = {t_end}, got {dt}"),
        );
    }
    let stride = r.int("sim.monitor_stride").unwrap_or(10);
    if stride < 1 {
        r.fail(
            "sim.monitor_stride",
            format!("must be at least 1, got {stride}"),
        );
    }
    let cap = r.float("sim.blowup_linf_cap").unwrap_or(1e6);
    let cap = r.positive("sim.blowup_linf_cap", cap);
    let dealias = r.bool("sim.dealias").unwrap_or(true);
    let form = match r.str("sim.form").as_deref() {
        None | Some("componentwise") => RhsForm::Componentwise,
        Some("transport") => RhsForm::Transport,
        Some(other) => {
            r.fail(
                "sim.form",
                format!("must be componentwise or transport, got \"{other}\""),
            );
            RhsForm::Componentwise
        }
    };
    let mut sim = SimConfig::new(dt, t_end)
        .with_stride(stride.max(1) as usize)
        .with_cap(cap)
        .with_dealias(dealias);
    sim.form = form;

    let bump_keys = [
        "initial.family",
        "initial.m_amp",
        "initial.m_center",
        "initial.m_width",
        "initial.n_amp",
        "initial.n_center",
        "initial.n_width",
    ];
    let peakon_keys = ["peakon.p", "peakon.q", "peakon.x0", "peakon.sigma_cells"];
    let (initial, components) = if kind.is_peakon() {
        for k in bump_keys.iter().chain(&["initial.file"]) {
            if r.has(k) {
                r.fail(k, format!("not used by the {} kind", kind.name()));
            }
        }
        let p = r.floats("peakon.p");
        let q = r.floats("peakon.q");
        if p.is_none() && !r.has("peakon.p") {
            r.fail("peakon.p", format!("required for the {} kind", kind.name()));
        }
        if q.is_none() && !r.has("peakon.q") {
            r.fail("peakon.q", format!("required for the {} kind", kind.name()));
        }
        let (p, q) = (p.unwrap_or_default(), q.unwrap_or_default());
        if p.len() != q.len() || (p.is_empty() && r.has("peakon.p")) {
            r.fail(
                "peakon.q",
                format!(
                    "needs as many entries as peakon.p ({}), got {}",
                    p.len(),
                    q.len()
                ),
            );
        }
        let x0 = r.float("peakon.x0").unwrap_or(0.5 * length);
        let sigma_cells = r.float("peakon.sigma_cells").unwrap_or(4.0);
        if !(sigma_cells >= 2.0) {
            r.fail(
                "peakon.sigma_cells",
                format!("under-resolved mollifier: must be at least 2, got {sigma_cells}"),
            );
        }
        let n = p.len().max(1);
        (
            InitialData::Peakon(PeakonData {
                p,
                q,
                x0,
                sigma_cells,
            }),
            n,
        )
    } else {
        for k in peakon_keys {
            if r.has(k) {
                r.fail(
                    k,
                    format!("only used by peakon kinds, scenario is {}", kind.name()),
                );
            }
        }
        let components = match kind.reduction() {
            Some(red) => {
                if r.has("scenario.components") {
                    let c = r.int("scenario.components").unwrap_or(0);
                    if c != red.n_components() as i64 {
                        r.fail(
                            "scenario.components",
                            format!(
                                "{} has {} components, got {c}",
                                kind.name(),
                                red.n_components()
                            ),
                        );
                    }
                }
                red.n_components()
            }
            None => {
                let c = r.int("scenario.components").unwrap_or(1);
                if c < 1 {
                    r.fail(
                        "scenario.components",
                        format!("must be at least 1, got {c}"),
                    );
                }
                c.max(1) as usize
            }
        };
        // reductions are described by one m and one n field
        let fields = if kind.reduction().is_some() {
            1
        } else {
            components
        };
        let initial = if let Some(path) = r.str("initial.file") {
            for k in bump_keys {
                if r.has(k) {
                    r.fail(k, "cannot be combined with initial.file");
                }
            }
            let path = PathBuf::from(path);
            if !path.is_file() {
                r.fail(
                    "initial.file",
                    format!("file {} does not exist", path.display()),
                );
            }
            InitialData::File(path)
        } else {
            let family = match r.str("initial.family").as_deref() {
                None => BumpFamily::Gaussian,
                Some(name) => BumpFamily::NAMES
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, f)| *f)
                    .unwrap_or_else(|| {
                        r.fail("initial.family", format!("unknown family \"{name}\""));
                        BumpFamily::Gaussian
                    }),
            };
            let mut list = |key: &str, default: f64| -> Vec<f64> {
                let v = r.floats(key).unwrap_or_else(|| vec![default; fields]);
                if v.len() != fields {
                    r.fail(key, format!("needs {fields} entries, got {}", v.len()));
                }
                v
            };
            let bumps = Bumps {
                family,
                m_amp: list("initial.m_amp", 1.0),
                m_center: list("initial.m_center", 0.375 * length),
                m_width: list("initial.m_width", 1.0),
                n_amp: list("initial.n_amp", 1.0),
                n_center: list("initial.n_center", 0.625 * length),
                n_width: list("initial.n_width", 1.0),
            };
            for (key, widths) in [
                ("initial.m_width", &bumps.m_width),
                ("initial.n_width", &bumps.n_width),
            ] {
                if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    r.fail(key, "widths must be positive");
                }
            }
            InitialData::Bumps(bumps)
        };
        (initial, components)
    };

    let observers = match r.strs("observers.list") {
        None => vec![ObserverKind::Invariants],
        Some(names) => {
            let mut out = Vec::new();
            for name in names {
                match ObserverKind::parse(&name) {
                    Some(o) if !out.contains(&o) => out.push(o),
                    Some(_) => r.fail("observers.list", format!("\"{name}\" listed twice")),
                    None => r.fail("observers.list", format!("unknown observer \"{name}\"")),
                }
            }
            out
        }
    };

    let output_dir = PathBuf::from(r.str("output.dir").unwrap_or_else(|| "run".into()));
    let snapshot_times = r.floats("output.snapshot_times").unwrap_or_default();
    if snapshot_times
        .iter()
        .any(|t| !(t.is_finite() && *t >= 0.0 && *t <= t_end))
    {
        r.fail(
            "output.snapshot_times",
            format!("times must lie in [0, {t_end}]"),
        );
    }
    if snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
        r.fail("output.snapshot_times", "times must be increasing");
    }

    let detect = DetectSection {
        magnitude: r.float("detect.magnitude"),
        rate: r.float("detect.rate"),
        window: r.int("detect.window").map(|w| {
            if w < 2 {
                r.fail("detect.window", format!("must be at least 2, got {w}"));
            }
            w.max(2) as usize
        }),
    };
    if let Some(m) = detect.magnitude {
        r.positive("detect.magnitude", m);
    }
    if let Some(v) = detect.rate {
        r.positive("detect.rate", v);
    }

    if !r.errors.is_empty() {
        return Err(ConfigError {
            violations: r.errors,
        });
    }
    Ok(ScenarioConfig {
        kind,
        components,
        seed: seed as u64,
        n_points: n_points as usize,
        length,
        sim,
        initial,
        observers,
        output_dir,
        snapshot_times,
        detect,
    })
}

fn float(v: f64) -> String {
    Value::Float(v).to_string()
}

fn floats(v: &[f64]) -> String {
    format!(
        "[{}]",
        v.iter().map(|x| float(*x)).collect::<Vec<_>>().join(", ")
    )
}

fn string(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Writes the configuration back as a complete document, every key
/// explicit. Parsing the output yields an equal configuration.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    let mut lines = vec![format!("scenario.kind = {}", string(cfg.kind.name()))];
    if cfg.kind == ScenarioKind::General {
        lines.push(format!("scenario.components = {}", cfg.components));
    }
    lines.push(format!("scenario.seed = {}", cfg.seed));
    lines.push(format!("grid.n_points = {}", cfg.n_points));
    lines.push(format!("grid.length = {}", float(cfg.length)));
    let s = &cfg.sim;
    lines.push(format!("sim.dt = {}", float(s.dt)));
    lines.push(format!("sim.t_end = {}", float(s.t_end)));
    lines.push(format!("sim.dealias = {}", s.dealias));
    lines.push(format!("sim.monitor_stride = {}", s.monitor_stride));
    lines.push(format!(
        "sim.blowup_linf_cap = {}",
        float(s.blowup_linf_cap)
    ));
    let form = match s.form {
        RhsForm::Componentwise => "componentwise",
        RhsForm::Transport => "transport",
    };
    lines.push(format!("sim.form = {}", string(form)));
    match &cfg.initial {
        InitialData::Bumps(b) => {
            lines.push(format!("initial.family = {}", string(b.family.name())));
            lines.push(format!("initial.m_amp = {}", floats(&b.m_amp)));
            lines.push(format!("initial.m_center = {}", floats(&b.m_center)));
            lines.push(format!("initial.m_width = {}", floats(&b.m_width)));
            lines.push(format!("initial.n_amp = {}", floats(&b.n_amp)));
            lines.push(format!("initial.n_center = {}", floats(&b.n_center)));
            lines.push(format!("initial.n_width = {}", floats(&b.n_width)));
        }
        InitialData::File(path) => lines.push(format!(
            "initial.file = {}",
            string(&path.to_string_lossy())
        )),
        InitialData::Peakon(p) => {
            lines.push(format!("peakon.p = {}", floats(&p.p)));
            lines.push(format!("peakon.q = {}", floats(&p.q)));
            lines.push(format!("peakon.x0 = {}", float(p.x0)));
            lines.push(format!("peakon.sigma_cells = {}", float(p.sigma_cells)));
        }
    }
    let names: Vec<String> = cfg.observers.iter().map(|o| string(o.name())).collect();
    lines.push(format!("observers.list = [{}]", names.join(", ")));
    lines.push(format!(
        "output.dir = {}",
        string(&cfg.output_dir.to_string_lossy())
    ));
    lines.push(format!(
        "output.snapshot_times = {}",
        floats(&cfg.snapshot_times)
    ));
    if let Some(m) = cfg.detect.magnitude {
        lines.push(format!("detect.magnitude = {}", float(m)));
    }
    if let Some(r) = cfg.detect.rate {
        lines.push(format!("detect.rate = {}", float(r)));
    }
    if let Some(w) = cfg.detect.window {
        lines.push(format!("detect.window = {w}"));
    }
    lines.push(String::new());
    lines.join("\n")
}
