use std::collections::{BTreeSet, VecDeque};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{serialize_config, InitialData, ObserverKind, ScenarioConfig, ScenarioKind};
use crate::blowup::{detect_divergence, Flag, MonitorSeries};
use crate::dynamics::{
    make_reduction, run_simulation, NovikovState, Observer, SimulationReport, Termination,
};
use crate::grid::{PeriodicGrid, RealField};
use crate::invariants::{InvariantObserver, InvariantRecord};
use crate::peakon::{
    mollified_peakon_momentum, peakon_speed, track_peak, Flavor, PeakTrack, PeakonSpec,
};
use crate::{Error, Result};

/// Column order of `monitors.csv`.
pub const MONITOR_COLUMNS: [&str; 10] = [
    "time",
    "linf_max",
    "general_accum",
    "H",
    "H1",
    "H2",
    "case1_min_uxv",
    "case1_min_uvx",
    "case2_min_drift",
    "case2_max_wronskian",
];

/// Decimal form with 17 significant digits, enough to recover every
/// binary64 value exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Directory a run writes to: relative configured paths resolve against
/// `NOVIKOV_OUT` when it is set.
pub fn resolve_output_dir(cfg: &ScenarioConfig) -> PathBuf {
    match std::env::var_os("NOVIKOV_OUT") {
        Some(root) if cfg.output_dir.is_relative() => PathBuf::from(root).join(&cfg.output_dir),
        _ => cfg.output_dir.clone(),
    }
}

pub fn grid_of(cfg: &ScenarioConfig) -> Result<PeriodicGrid> {
    PeriodicGrid::new(cfg.n_points, cfg.length)
}

/// Peakon description of a peakon scenario.
pub fn peakon_spec(cfg: &ScenarioConfig) -> Option<Result<PeakonSpec>> {
    let InitialData::Peakon(p) = &cfg.initial else {
        return None;
    };
    let flavor = match cfg.kind {
        ScenarioKind::PeriodicPeakon => Flavor::PeriodicUnit,
        _ => Flavor::LineTruncated,
    };
    Some(PeakonSpec::new(p.p.clone(), p.q.clone(), p.x0, flavor))
}

/// Builds the state at time zero.
pub fn initial_state(cfg: &ScenarioConfig) -> Result<NovikovState> {
    let grid = grid_of(cfg)?;
    match &cfg.initial {
        InitialData::Peakon(p) => {
            let spec = peakon_spec(cfg).expect("peakon data")?;
            mollified_peakon_momentum(&spec, &grid, 0.0, p.sigma_cells * grid.spacing())
        }
        InitialData::Bumps(b) => {
            let field = |amp: f64, center: f64, width: f64| {
                grid.sample(|x| amp * b.family.eval(x, center, width, grid.length()))
            };
            let m: Vec<RealField> = (0..b.m_amp.len())
                .map(|i| field(b.m_amp[i], b.m_center[i], b.m_width[i]))
                .collect();
            let n: Vec<RealField> = (0..b.n_amp.len())
                .map(|i| field(b.n_amp[i], b.n_center[i], b.n_width[i]))
                .collect();
            match cfg.kind.reduction() {
                Some(red) => make_reduction(red, m[0].clone(), n[0].clone()),
                None => NovikovState::new(m, n, 0.0),
            }
        }
        InitialData::File(path) => {
            let s = read_state_csv(path, &grid, cfg.components)?;
            match cfg.kind.reduction() {
                Some(red) => s.with_reduction(red),
                None => Ok(s),
            }
        }
    }
}

/// Reads `x, m_1..m_N, n_1..n_N` columns, located by header name.
pub fn read_state_csv(
    path: &Path,
    grid: &PeriodicGrid,
    n_components: usize,
) -> Result<NovikovState> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig(format!("{} is empty", path.display())))??;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let column = |name: &str| {
        names
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::InvalidConfig(format!("{} has no column {name}", path.display())))
    };
    let x_col = column("x")?;
    let m_cols = (1..=n_components)
        .map(|i| column(&format!("m_{i}")))
        .collect::<Result<Vec<_>>>()?;
    let n_cols = (1..=n_components)
        .map(|i| column(&format!("n_{i}")))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        if row.len() != names.len() {
            return Err(Error::InvalidConfig(format!(
                "{}: ragged row",
                path.display()
            )));
        }
        rows.push(row);
    }
    if rows.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_points(),
            got: rows.len(),
        });
    }
    for (j, row) in rows.iter().enumerate() {
        if (row[x_col] - grid.node(j)).abs() > 1e-9 * grid.length() {
            return Err(Error::InvalidConfig(format!(
                "{}: row {j} has x = {} but the grid node is {}",
                path.display(),
                row[x_col],
                grid.node(j)
            )));
        }
    }
    let take = |c: usize| RealField::new(grid.clone(), rows.iter().map(|r| r[c]).collect());
    let m = m_cols.into_iter().map(take).collect::<Result<_>>()?;
    let n = n_cols.into_iter().map(take).collect::<Result<_>>()?;
    NovikovState::new(m, n, 0.0)
}

/// Writes one snapshot: `x, m_1..m_N, n_1..n_N, u_1..u_N, v_1..v_N`.
pub fn write_snapshot(path: &Path, s: &NovikovState) -> Result<()> {
    let n = s.n_components();
    let mut cols: Vec<Vec<f64>> = vec![s.grid().nodes()];
    cols.extend(s.m().iter().map(|f| f.samples().to_vec()));
    cols.extend(s.n().iter().map(|f| f.samples().to_vec()));
    for i in 0..n {
        cols.push(s.u(i)?.into_samples());
    }
    for i in 0..n {
        cols.push(s.v(i)?.into_samples());
    }
    let mut header = vec!["x".to_string()];
    for prefix in ["m", "n", "u", "v"] {
        header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for j in 0..s.grid().n_points() {
        let row: Vec<String> = cols.iter().map(|c| fmt_float(c[j])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the monitor table. Invariant records, when present, are aligned
/// with the series sample by sample.
pub fn write_monitors(
    path: &Path,
    series: &MonitorSeries,
    records: Option<&[InvariantRecord]>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", MONITOR_COLUMNS.join(","))?;
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    let at = |v: &Option<Vec<f64>>, k: usize| v.as_ref().map(|v| v[k]);
    for k in 0..series.len() {
        let rec = records.and_then(|r| r.get(k));
        let row = [
            fmt_float(series.times[k]),
            fmt_float(series.linf_max[k]),
            fmt_float(series.general_accum[k]),
            opt(rec.and_then(|r| r.h.map(|h| h.h_energy))),
            opt(rec.and_then(|r| r.h1)),
            opt(rec.and_then(|r| r.h2)),
            opt(at(&series.case1_min_uxv, k)),
            opt(at(&series.case1_min_uvx, k)),
            opt(at(&series.case2_min_drift, k)),
            opt(at(&series.case2_max_wronskian, k)),
        ];
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SnapshotRecord {
    pub requested: Option<f64>,
    pub time: f64,
    pub file: String,
}

/// Writes a snapshot at the first sample reaching each requested time.
struct SnapshotWriter {
    dir: PathBuf,
    pending: VecDeque<f64>,
    written: Vec<SnapshotRecord>,
}

impl Observer for SnapshotWriter {
    fn name(&self) -> &str {
        "snapshots"
    }

    fn observe(
        &mut self,
        state: &NovikovState,
    ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>> {
        let mut due = None;
        while let Some(&t) = self.pending.front() {
            if t > state.time() + 1e-12 * (1.0 + t.abs()) {
                break;
            }
            due = Some(t);
            self.pending.pop_front();
        }
        if let Some(t) = due {
            let file = format!("snapshot_{:03}.csv", self.written.len());
            write_snapshot(&self.dir.join(&file), state)?;
            self.written.push(SnapshotRecord {
                requested: Some(t),
                time: state.time(),
                file,
            });
        }
        Ok(())
    }
}

/// Frames of `u_1` for crest tracking.
#[derive(Default)]
struct PeakFrames {
    times: Vec<f64>,
    frames: Vec<RealField>,
}

impl Observer for PeakFrames {
    fn name(&self) -> &str {
        "peak_track"
    }

    fn observe(
        &mut self,
        state: &NovikovState,
    ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>> {
        self.times.push(state.time());
        self.frames.push(state.u(0)?);
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PeakSummary {
    pub measured_speed: f64,
    pub expected_speed: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantSummary {
    pub h_drift: Option<f64>,
    pub h1_drift: Option<f64>,
    pub h2_drift: Option<f64>,
    pub sign_violations: usize,
    pub min_one_sided: f64,
}

/// Run manifest written as `manifest.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config: String,
    pub kind: ScenarioKind,
    pub termination: Option<Termination>,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub steps: usize,
    pub samples: usize,
    pub flags: BTreeSet<Flag>,
    pub snapshots: Vec<SnapshotRecord>,
    pub invariants: Option<InvariantSummary>,
    pub peak: Option<PeakSummary>,
}

/// What a finished scenario produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: SimulationReport,
    pub manifest: Manifest,
    pub invariants: Option<InvariantObserver>,
    pub peak_track: Option<PeakTrack>,
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let text =
        serde_json::to_string_pretty(manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

/// Runs a scenario and writes `monitors.csv`, snapshots and
/// `manifest.json` into `dir`.
///
/// A run that stops at the L∞ cap is a normal outcome. A NaN leaves a
/// manifest naming the error before the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<RunOutcome> {
    run_scenario_observed(cfg, dir, &mut [])
}

/// [`run_scenario`] with further observers called after the built-in ones.
pub fn run_scenario_observed(
    cfg: &ScenarioConfig,
    dir: &Path,
    extra: &mut [&mut dyn Observer],
) -> Result<RunOutcome> {
    let s0 = initial_state(cfg)?;
    cfg.sim.validate(&s0)?;
    fs::create_dir_all(dir)?;
    let started = Instant::now();

    let mut invariants = cfg
        .observers
        .contains(&ObserverKind::Invariants)
        .then(InvariantObserver::new);
    let mut frames = cfg
        .observers
        .contains(&ObserverKind::PeakTrack)
        .then(PeakFrames::default);
    let mut snaps = SnapshotWriter {
        dir: dir.to_path_buf(),
        pending: cfg.snapshot_times.iter().copied().collect(),
        written: Vec::new(),
    };
    let scale = s0.linf_max();

    let result = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut snaps];
        if let Some(o) = invariants.as_mut() {
            observers.push(o);
        }
        if let Some(o) = frames.as_mut() {
            observers.push(o);
        }
        for o in extra.iter_mut() {
            observers.push(&mut **o);
        }
        run_simulation(s0, &cfg.sim, &mut observers)
    };
    let mut manifest = Manifest {
        config: serialize_config(cfg),
        kind: cfg.kind,
        termination: None,
        error: None,
        wall_time_s: 0.0,
        steps: 0,
        samples: 0,
        flags: BTreeSet::new(),
        snapshots: Vec::new(),
        invariants: None,
        peak: None,
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            manifest.error = Some(e.to_string());
            manifest.wall_time_s = started.elapsed().as_secs_f64();
            manifest.snapshots = snaps.written;
            write_manifest(dir, &manifest)?;
            return Err(e);
        }
    };

    let final_file = "snapshot_final.csv".to_string();
    write_snapshot(&dir.join(&final_file), &report.final_state)?;
    snaps.written.push(SnapshotRecord {
        requested: None,
        time: report.final_state.time(),
        file: final_file,
    });
    write_monitors(
        &dir.join("monitors.csv"),
        &report.series,
        invariants.as_ref().map(|o| o.records.as_slice()),
    )?;

    let policy = cfg.detect.policy(scale, cfg.sim.blowup_linf_cap);
    let mut flags = report.series.flags.clone();
    if let Ok(found) = detect_divergence(&report.series, &policy) {
        flags.extend(found);
    }

    let peak_track = frames
        .filter(|f| f.frames.len() >= 2)
        .map(|f| track_peak(&f.times, &f.frames))
        .transpose()?;
    if let (Some(track), Some(spec)) = (&peak_track, peakon_spec(cfg)) {
        let expected = peakon_speed(&spec?);
        let relative_error = (track.speed - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        manifest.peak = Some(PeakSummary {
            measured_speed: track.speed,
            expected_speed: expected,
            relative_error,
        });
    }
    manifest.invariants = invariants.as_ref().map(|o| InvariantSummary {
        h_drift: o.h_drift(),
        h1_drift: o.h1_drift(),
        h2_drift: o.h2_drift(),
        sign_violations: o.sign_violations.len(),
        min_one_sided: o
            .records
            .iter()
            .map(|r| r.one_sided_min)
            .fold(f64::INFINITY, f64::min),
    });
    manifest.termination = Some(report.termination);
    manifest.steps = report.steps;
    manifest.samples = report.series.len();
    manifest.flags = flags;
    manifest.snapshots = snaps.written;
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_manifest(dir, &manifest)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        report,
        manifest,
        invariants,
        peak_track,
    })
}

/// Splits `monitors.csv` into one two-column CSV per monitor, named
/// `<column>.csv` with header `time,<column>`, skipping empty columns.
/// Returns the files written.
pub fn emit_plots(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(run_dir.join("monitors.csv"))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    if header.first() != Some(&"time") {
        return Err(Error::InvalidConfig(format!(
            "{} is not a monitor table",
            run_dir.display()
        )));
    }
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let out_dir = run_dir.join("plots");
    fs::create_dir_all(&out_dir)?;
    let mut written = Vec::new();
    for (c, name) in header.iter().enumerate().skip(1) {
        let points: Vec<(&str, &str)> = rows
            .iter()
            .filter_map(|r| r.get(c).filter(|v| !v.is_empty()).map(|v| (r[0], *v)))
            .collect();
        if points.is_empty() {
            continue;
        }
        let path = out_dir.join(format!("{name}.csv"));
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "time,{name}")?;
        for (t, v) in points {
            writeln!(w, "{t},{v}")?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
