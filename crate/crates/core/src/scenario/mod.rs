//! Scenario runner: configured simulations, sweeps and their output files.
//!
//! All numbers are computed in memory first; files are written only after
//! every point of a run or sweep has succeeded.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{parse_real, qualify, AtomsSpec, OutputSpec, Scenario, Settings, SweepSpec};

use crate::evolve::{factorized_scheme, propagate, InvariantMonitor, TimeGrid};
use crate::measures::{atomic_inversion, concurrence, detect_esd, negativity, wigner, Atom, Cut, WignerGrid};
use crate::states::{bell_atoms, compose_initial, pcd_analytic, pure_field_coefficients, scts_state, werner_atoms};
use crate::{hamiltonian, Error};

/// Failure of a scenario, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("configuration error: {0}")]
    Parse(String),
    #[error("truncation failure: {0}")]
    Truncation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Parse(_) => 2,
            ScenarioError::Truncation(_) => 3,
            ScenarioError::Numerical(_) => 4,
            ScenarioError::Io(_) => 1,
        }
    }

    /// Parameter validation failures count as configuration errors.
    pub(crate) fn from_config(e: Error) -> Self {
        match e {
            Error::Truncation(m) => ScenarioError::Truncation(m),
            other => ScenarioError::Parse(other.to_string()),
        }
    }
}

impl From<Error> for ScenarioError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) | Error::InvalidDimension(m) => ScenarioError::Parse(m),
            Error::Truncation(m) => ScenarioError::Truncation(m),
            other => ScenarioError::Numerical(other.to_string()),
        }
    }
}

/// Samples of named channels over `λt`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub channels: Vec<String>,
    pub times: Vec<f64>,
    /// `rows[k][c]` is channel `c` at `times[k]`.
    pub rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn channel(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.channels.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda_t");
        for c in &self.channels {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            out.push_str(&fmt_float(*t));
            for v in row {
                out.push(',');
                out.push_str(&fmt_float(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn cut_channel(cut: Cut) -> String {
    match cut {
        Cut::AtomsVsField => "negativity".into(),
        other => format!("negativity_{}", other.name()),
    }
}

/// Maximum invariant deviations observed along a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InvariantSummary {
    pub trace_drift: f64,
    pub hermiticity: f64,
    pub energy_drift: f64,
    pub hamiltonian_norm: f64,
    pub positivity_failures: usize,
}

/// Everything a single run produces, before any file is written.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub scenario: Scenario,
    /// Fock levels kept after truncation escalation.
    pub n_max: usize,
    pub series: Option<TimeSeries>,
    pub wigner: Vec<(f64, WignerGrid)>,
    pub invariants: InvariantSummary,
    files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn files(&self) -> &[(String, String)] {
        &self.files
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

fn time_label(t: f64) -> String {
    format!("{t}")
}

/// Runs one scenario in memory.
pub fn simulate(scenario: &Scenario) -> Result<RunOutput, ScenarioError> {
    let out = &scenario.outputs;
    let field = scts_state(scenario.field, &scenario.policy)?;
    let n_max = field.n_max();
    if n_max != scenario.policy.n_max {
        log::info!("field truncation escalated to n_max = {n_max}");
    }
    let atoms = match scenario.atoms {
        AtomsSpec::Bell { theta } => bell_atoms(theta),
        AtomsSpec::Werner { eta } => werner_atoms(eta)?,
    };
    let rho0 = compose_initial(&atoms, &field);
    let h = hamiltonian::build(&scenario.model, n_max)?;
    let grid = TimeGrid::uniform(scenario.t_max, scenario.samples)?;

    let mut files = Vec::new();
    let mut series = None;
    let mut wigner_grids = Vec::new();
    let mut summary = InvariantSummary::default();

    let needs_dynamics = out.has_time_series() || !out.wigner_times.is_empty() || out.scheme_comparison;
    if needs_dynamics {
        let trajectory = propagate(&rho0, &h, &grid)?;
        let monitor = InvariantMonitor::new(&rho0.rho, &h, trajectory.propagator().norm());
        summary.hamiltonian_norm = monitor.h_norm;

        let mut channels = Vec::new();
        if out.concurrence {
            channels.push("concurrence".to_string());
        }
        channels.extend(out.negativity.iter().map(|&c| cut_channel(c)));
        if out.inversion {
            channels.push("inversion_A".into());
            channels.push("inversion_B".into());
        }

        let wigner_states: Vec<_> = out.wigner_times.iter().map(|&t| trajectory.state_at(t)).collect();
        let mut rows = Vec::with_capacity(grid.len());
        for state in trajectory {
            let inv = monitor.check(&state);
            summary.trace_drift = summary.trace_drift.max(inv.trace_drift);
            summary.hermiticity = summary.hermiticity.max(inv.hermiticity);
            summary.energy_drift = summary.energy_drift.max(inv.energy_drift);
            if !inv.positive {
                summary.positivity_failures += 1;
            }
            if !monitor.within_tolerance(&inv) {
                return Err(ScenarioError::Numerical(format!(
                    "invariants violated at lambda_t = {}: {inv:?}",
                    state.time
                )));
            }
            if !out.has_time_series() {
                continue;
            }
            let mut row = Vec::with_capacity(channels.len());
            if out.concurrence {
                row.push(concurrence(&state.atoms())?);
            }
            for &cut in &out.negativity {
                row.push(negativity(&state, cut)?);
            }
            if out.inversion {
                row.push(atomic_inversion(&state, Atom::A));
                row.push(atomic_inversion(&state, Atom::B));
            }
            rows.push(row);
        }

        if out.has_time_series() {
            let ts = TimeSeries { channels, times: grid.samples().to_vec(), rows };
            files.push(("timeseries.csv".to_string(), ts.to_csv()));
            if out.esd {
                files.push(("esd.csv".to_string(), esd_csv(&ts, out.esd_threshold)));
            }
            series = Some(ts);
        }

        for state in wigner_states {
            let w = wigner(&state.field(), &out.wigner)?;
            let label = time_label(state.time);
            files.push((format!("wigner_t{label}.csv"), wigner_csv(&w)));
            files.push((format!("wigner_t{label}.meta"), wigner_meta(&w, state.time, n_max)));
            wigner_grids.push((state.time, w));
        }

        files.push(("invariants.csv".to_string(), invariants_csv(&summary)));
    }

    if out.pcd {
        let p = field.photon_distribution();
        let mut csv = String::from("l,analytic,matrix\n");
        for (l, matrix) in p.iter().enumerate().take(out.pcd_max_l + 1) {
            let analytic = pcd_analytic(l, &scenario.field)?;
            let _ = writeln!(csv, "{l},{},{}", fmt_float(analytic), fmt_float(*matrix));
        }
        files.push(("pcd.csv".to_string(), csv));
    }

    if out.scheme_comparison {
        let AtomsSpec::Bell { theta } = scenario.atoms else {
            unreachable!("validated at parse time")
        };
        let (coefficients, _) = pure_field_coefficients(scenario.field, &scenario.policy)?;
        let exact = series.as_ref().and_then(|s| s.channel("concurrence"));
        let mut csv = String::from("lambda_t,concurrence_factorized,concurrence_exact\n");
        let scheme = factorized_scheme(theta, &coefficients, &grid)?;
        for (k, state) in scheme.enumerate() {
            let state = state?;
            let c = concurrence(&state.atoms())?;
            let e = exact.as_ref().map_or(String::new(), |e| fmt_float(e[k]));
            let _ = writeln!(csv, "{},{},{}", fmt_float(state.time), fmt_float(c), e);
        }
        files.push(("scheme_comparison.csv".to_string(), csv));
        files.push((
            "scheme_comparison.meta".to_string(),
            format!(
                "comparator = factorized single-atom amplitudes\nexact = block-diagonal propagation\nfield_levels = {}\n",
                coefficients.len()
            ),
        ));
    }

    let mut manifest = scenario.manifest();
    let _ = write!(manifest, "\n# resolved field levels after truncation escalation: {n_max}\n");
    files.push(("manifest.cfg".to_string(), manifest));

    Ok(RunOutput {
        scenario: scenario.clone(),
        n_max,
        series,
        wigner: wigner_grids,
        invariants: summary,
        files,
    })
}

fn esd_csv(ts: &TimeSeries, threshold: f64) -> String {
    let mut csv = String::from("measure,t_start,t_end,duration\n");
    for name in ts.channels.iter().filter(|c| c.starts_with("concurrence") || c.starts_with("negativity")) {
        let values = ts.channel(name).expect("channel exists");
        for (a, b) in detect_esd(&ts.times, &values, threshold).intervals {
            let _ = writeln!(csv, "{name},{},{},{}", fmt_float(a), fmt_float(b), fmt_float(b - a));
        }
    }
    csv
}

fn wigner_csv(w: &WignerGrid) -> String {
    let mut csv = String::from("x,p,w\n");
    for i in 0..w.nx {
        for j in 0..w.np {
            let _ = writeln!(csv, "{},{},{}", fmt_float(w.x(i)), fmt_float(w.p(j)), fmt_float(w.get(i, j)));
        }
    }
    csv
}

fn wigner_meta(w: &WignerGrid, t: f64, n_max: usize) -> String {
    format!(
        "lambda_t = {}\nx_min = {}\nx_max = {}\np_min = {}\np_max = {}\nnx = {}\nnp = {}\nfield_levels = {n_max}\nintegral = {}\nmin = {}\nmax = {}\ntruncation_risk = {}\n",
        fmt_float(t),
        fmt_float(w.x_range.0),
        fmt_float(w.x_range.1),
        fmt_float(w.p_range.0),
        fmt_float(w.p_range.1),
        w.nx,
        w.np,
        fmt_float(w.integral()),
        fmt_float(w.min()),
        fmt_float(w.max()),
        w.truncation_risk
    )
}

fn invariants_csv(s: &InvariantSummary) -> String {
    format!(
        "quantity,max_deviation\ntrace,{}\nhermiticity,{}\nenergy,{}\nhamiltonian_norm,{}\npositivity_failures,{}\n",
        fmt_float(s.trace_drift),
        fmt_float(s.hermiticity),
        fmt_float(s.energy_drift),
        fmt_float(s.hamiltonian_norm),
        s.positivity_failures
    )
}

/// Results of every sweep point plus the combined long-format table.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub sweep: SweepSpec,
    pub points: Vec<(String, RunOutput)>,
    pub combined: String,
}

fn point_dir(sweep: &SweepSpec, k: usize) -> String {
    let mut name = format!("point_{k:03}");
    for (p, v) in sweep.short_names().iter().zip(&sweep.values[k]) {
        let _ = write!(name, "_{p}={v}");
    }
    name
}

/// Runs every point of `sweep`. With `threads = Some(n)` points run on a
/// dedicated pool of `n` threads; results are ordered as the sweep values.
pub fn simulate_sweep(base: &Scenario, sweep: &SweepSpec, threads: Option<usize>) -> Result<SweepOutput, ScenarioError> {
    let scenarios: Vec<Scenario> =
        sweep.values.iter().map(|p| base.at_point(sweep, p)).collect::<Result<_, _>>()?;
    let run_all = || scenarios.par_iter().map(simulate).collect::<Result<Vec<_>, _>>();
    let runs = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ScenarioError::Numerical(format!("thread pool: {e}")))?
            .install(run_all)?,
        None => run_all()?,
    };

    let names = sweep.short_names();
    let mut combined = String::new();
    let mut header_written = false;
    for (k, run) in runs.iter().enumerate() {
        let Some(ts) = &run.series else { continue };
        if !header_written {
            combined.push_str(&names.join(","));
            combined.push_str(",lambda_t");
            for c in &ts.channels {
                combined.push(',');
                combined.push_str(c);
            }
            combined.push('\n');
            header_written = true;
        }
        let prefix = sweep.values[k].join(",");
        for (t, row) in ts.times.iter().zip(&ts.rows) {
            combined.push_str(&prefix);
            combined.push(',');
            combined.push_str(&fmt_float(*t));
            for v in row {
                combined.push(',');
                combined.push_str(&fmt_float(*v));
            }
            combined.push('\n');
        }
    }
    let points = runs.into_iter().enumerate().map(|(k, r)| (point_dir(sweep, k), r)).collect();
    Ok(SweepOutput { sweep: sweep.clone(), points, combined })
}

fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir)?;
    for (name, content) in files {
        fs::write(dir.join(name), content)?;
    }
    Ok(())
}

/// Simulates `scenario` and writes its files into `out_dir`.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutput, ScenarioError> {
    let output = simulate(scenario)?;
    write_files(out_dir, &output.files)?;
    Ok(output)
}

/// Simulates every sweep point, then writes one subdirectory per point,
/// `sweep.csv` and the base manifest into `out_dir`.
pub fn sweep(
    base: &Scenario,
    sweep: &SweepSpec,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<SweepOutput, ScenarioError> {
    let output = simulate_sweep(base, sweep, threads)?;
    for (dir, run) in &output.points {
        write_files(&out_dir.join(dir), &run.files)?;
    }
    let mut base_manifest = base.clone();
    base_manifest.sweep = Some(sweep.clone());
    write_files(
        out_dir,
        &[
            ("sweep.csv".to_string(), output.combined.clone()),
            ("manifest.cfg".to_string(), base_manifest.manifest()),
        ],
    )?;
    Ok(output)
}

/// Reads a config file and applies `KEY=VALUE` overrides.
pub fn load(path: &Path, overrides: &[String]) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ScenarioError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let mut settings = Settings::parse(&text)?;
    for o in overrides {
        settings.apply_override(o)?;
    }
    Scenario::from_settings(settings)
}

/// Default output directory: `$JCSIM_OUT` or `./jcsim-out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("JCSIM_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("jcsim-out"))
}
