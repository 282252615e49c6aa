//! Declarative scenario configuration.
//!
//! Configs are `key = value` files with `[section]` headers. Every setting
//! has a default; [`Scenario::manifest`] renders the fully resolved set in
//! the same format so that a manifest can be fed back as a config.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use ini::Ini;

use crate::fock::TruncationPolicy;
use crate::hamiltonian::{AtomicEnergy, ModelSpec};
use crate::measures::{Cut, WignerSpec, ESD_THRESHOLD};
use crate::states::FieldParams;

use super::ScenarioError;

/// Known keys in manifest order, with defaults.
const KEYS: &[(&str, &[(&str, &str)])] = &[
    (
        "model",
        &[
            ("lambda", "1"),
            ("omega", "10"),
            ("delta", "0"),
            ("jz", "0"),
            ("gd", "0"),
            ("kerr_k", "0"),
            ("detuned_form", "false"),
            ("atomic_energy", "half"),
        ],
    ),
    ("truncation", &[("n_max", "80"), ("pad_factor", "2"), ("tail_tol", "1e-8")]),
    ("atoms", &[("kind", "bell"), ("theta", "pi/4"), ("eta", "0.5")]),
    ("field", &[("nbar_c", "5"), ("nbar_s", "0"), ("nbar_th", "0"), ("phi", "0"), ("alpha_phase", "0")]),
    ("grid", &[("t_max", "10"), ("samples", "2001")]),
    (
        "outputs",
        &[
            ("concurrence", "true"),
            ("negativity", "atoms_vs_field"),
            ("inversion", "true"),
            ("esd", "true"),
            ("esd_threshold", "1e-6"),
            ("pcd", "false"),
            ("pcd_max_l", "40"),
            ("wigner_times", ""),
            ("wigner_x_min", "-5"),
            ("wigner_x_max", "5"),
            ("wigner_p_min", "-5"),
            ("wigner_p_max", "5"),
            ("wigner_nx", "101"),
            ("wigner_np", "101"),
            ("scheme_comparison", "false"),
        ],
    ),
    ("sweep", &[("parameter", ""), ("values", "")]),
];

/// Scalar settings a sweep may vary.
const SWEEPABLE: &[&str] = &[
    "model.lambda",
    "model.omega",
    "model.delta",
    "model.jz",
    "model.gd",
    "model.kerr_k",
    "truncation.n_max",
    "truncation.pad_factor",
    "truncation.tail_tol",
    "atoms.theta",
    "atoms.eta",
    "field.nbar_c",
    "field.nbar_s",
    "field.nbar_th",
    "field.phi",
    "field.alpha_phase",
    "grid.t_max",
    "grid.samples",
];

fn parse_err(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse(msg.into())
}

/// Raw `section.key → value` settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn known(qualified: &str) -> bool {
    qualified
        .split_once('.')
        .and_then(|(s, k)| KEYS.iter().find(|(sec, _)| *sec == s).map(|(_, keys)| keys.iter().any(|(n, _)| *n == k)))
        .unwrap_or(false)
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| parse_err(format!("line {}: {}", e.line, e.msg)))?;
        let mut values = BTreeMap::new();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let Some(section) = section else {
                    return Err(parse_err(format!("setting '{key}' appears before any [section]")));
                };
                let qualified = format!("{}.{}", section.trim(), key.trim());
                if !known(&qualified) {
                    return Err(parse_err(format!("unknown setting '{qualified}'")));
                }
                if values.insert(qualified.clone(), value.trim().to_string()).is_some() {
                    return Err(parse_err(format!("duplicate setting '{qualified}'")));
                }
            }
        }
        Ok(Self { values })
    }

    /// Applies `section.key=value`; a bare key is resolved when unambiguous.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ScenarioError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| parse_err(format!("override '{assignment}' is not KEY=VALUE")))?;
        let key = qualify(key.trim())?;
        self.values.insert(key, value.trim().to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: String) -> Result<(), ScenarioError> {
        let key = qualify(key)?;
        self.values.insert(key, value);
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        if let Some(v) = self.values.get(key) {
            return v;
        }
        let (s, k) = key.split_once('.').expect("qualified key");
        KEYS.iter()
            .find(|(sec, _)| *sec == s)
            .and_then(|(_, keys)| keys.iter().find(|(n, _)| *n == k))
            .map(|(_, d)| *d)
            .expect("known key")
    }

    fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn f64(&self, key: &str) -> Result<f64, ScenarioError> {
        parse_real(self.raw(key)).map_err(|e| parse_err(format!("{key}: {e}")))
    }

    fn usize(&self, key: &str) -> Result<usize, ScenarioError> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| parse_err(format!("{key}: expected a non-negative integer, got '{raw}'")))
    }

    fn bool(&self, key: &str) -> Result<bool, ScenarioError> {
        match self.raw(key).to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            other => Err(parse_err(format!("{key}: expected true or false, got '{other}'"))),
        }
    }

    fn list(&self, key: &str) -> Vec<String> {
        self.raw(key).split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    }
}

/// Resolves a possibly bare key name to `section.key`.
pub fn qualify(key: &str) -> Result<String, ScenarioError> {
    if key.contains('.') {
        return if known(key) { Ok(key.to_string()) } else { Err(parse_err(format!("unknown setting '{key}'"))) };
    }
    let hits: Vec<String> = KEYS
        .iter()
        .filter(|(_, keys)| keys.iter().any(|(n, _)| *n == key))
        .map(|(s, _)| format!("{s}.{key}"))
        .collect();
    match hits.len() {
        1 => Ok(hits.into_iter().next().unwrap()),
        0 => Err(parse_err(format!("unknown setting '{key}'"))),
        _ => Err(parse_err(format!("ambiguous setting '{key}': use one of {}", hits.join(", ")))),
    }
}

/// Parses a real number, also accepting multiples of `pi` such as
/// `pi/4`, `2pi`, `3*pi/2` or `-pi`.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(format!("'{t}' is not finite")) };
    }
    let bad = || format!("expected a number, got '{t}'");
    let Some(pos) = t.find("pi") else { return Err(bad()) };
    let (head, tail) = (&t[..pos], &t[pos + 2..]);
    let head = head.trim().trim_end_matches('*').trim();
    let factor = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let tail = tail.trim();
    let divisor = if tail.is_empty() {
        1.0
    } else {
        tail.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?
    };
    if divisor == 0.0 {
        return Err(bad());
    }
    Ok(factor * PI / divisor)
}

fn fmt_real(v: f64) -> String {
    format!("{v}")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AtomsSpec {
    Bell { theta: f64 },
    Werner { eta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub concurrence: bool,
    pub negativity: Vec<Cut>,
    pub inversion: bool,
    pub esd: bool,
    pub esd_threshold: f64,
    pub pcd: bool,
    pub pcd_max_l: usize,
    pub wigner_times: Vec<f64>,
    pub wigner: WignerSpec,
    pub scheme_comparison: bool,
}

impl OutputSpec {
    pub fn has_time_series(&self) -> bool {
        self.concurrence || self.inversion || !self.negativity.is_empty()
    }
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            concurrence: true,
            negativity: vec![Cut::AtomsVsField],
            inversion: true,
            esd: true,
            esd_threshold: ESD_THRESHOLD,
            pcd: false,
            pcd_max_l: 40,
            wigner_times: Vec::new(),
            wigner: WignerSpec::default(),
            scheme_comparison: false,
        }
    }
}

/// One or more settings varied together; `values[k]` holds one value per
/// parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub parameters: Vec<String>,
    pub values: Vec<Vec<String>>,
}

impl SweepSpec {
    /// `parameter` is a comma-separated list of names; `values` a
    /// comma-separated list of points, each point a `:`-separated tuple
    /// with one entry per parameter.
    pub fn parse(parameter: &str, values: &str) -> Result<Self, ScenarioError> {
        let parameters: Vec<String> = parameter
            .split(',')
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .map(qualify)
            .collect::<Result<_, _>>()?;
        if parameters.is_empty() {
            return Err(parse_err("sweep needs at least one parameter"));
        }
        for p in &parameters {
            if !SWEEPABLE.contains(&p.as_str()) {
                return Err(parse_err(format!("'{p}' is not a sweepable scalar setting")));
            }
        }
        let points: Vec<Vec<String>> = values
            .split(',')
            .map(|v| v.trim())
            .filter(|v| !v.is_empty())
            .map(|v| v.split(':').map(|x| x.trim().to_string()).collect::<Vec<_>>())
            .collect();
        if points.is_empty() {
            return Err(parse_err("sweep needs at least one value"));
        }
        for point in &points {
            if point.len() != parameters.len() {
                return Err(parse_err(format!(
                    "sweep point '{}' has {} entries for {} parameters",
                    point.join(":"),
                    point.len(),
                    parameters.len()
                )));
            }
        }
        Ok(Self { parameters, values: points })
    }

    /// Short parameter names (the key without its section).
    pub fn short_names(&self) -> Vec<&str> {
        self.parameters.iter().map(|p| p.split_once('.').map_or(p.as_str(), |(_, k)| k)).collect()
    }
}

/// Fully resolved simulation description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub model: ModelSpec,
    pub policy: TruncationPolicy,
    pub atoms: AtomsSpec,
    pub field: FieldParams,
    pub t_max: f64,
    pub samples: usize,
    pub outputs: OutputSpec,
    pub sweep: Option<SweepSpec>,
    settings: Settings,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Self::from_settings(Settings::parse(text)?)
    }

    pub fn from_settings(s: Settings) -> Result<Self, ScenarioError> {
        let atomic_energy = match s.raw("model.atomic_energy").to_ascii_lowercase().as_str() {
            "half" => AtomicEnergy::Half,
            "full" => AtomicEnergy::Full,
            other => return Err(parse_err(format!("model.atomic_energy: expected half or full, got '{other}'"))),
        };
        let model = ModelSpec {
            lambda: s.f64("model.lambda")?,
            omega: s.f64("model.omega")?,
            delta: s.f64("model.delta")?,
            jz: s.f64("model.jz")?,
            gd: s.f64("model.gd")?,
            kerr_k: s.f64("model.kerr_k")?,
            detuned_form: s.bool("model.detuned_form")?,
            atomic_energy,
        };
        model.validate().map_err(ScenarioError::from_config)?;

        let policy = TruncationPolicy {
            n_max: s.usize("truncation.n_max")?,
            pad_factor: s.usize("truncation.pad_factor")?,
            tail_tol: s.f64("truncation.tail_tol")?,
        };
        policy.validate().map_err(ScenarioError::from_config)?;

        let atoms = match s.raw("atoms.kind").to_ascii_lowercase().as_str() {
            "bell" => {
                if s.is_set("atoms.eta") {
                    return Err(parse_err("atoms.eta is only valid with kind = werner"));
                }
                AtomsSpec::Bell { theta: s.f64("atoms.theta")? }
            }
            "werner" => {
                if s.is_set("atoms.theta") {
                    return Err(parse_err("atoms.theta is only valid with kind = bell"));
                }
                let eta = s.f64("atoms.eta")?;
                if !(0.0..=1.0).contains(&eta) {
                    return Err(parse_err(format!("atoms.eta must lie in [0, 1], got {eta}")));
                }
                AtomsSpec::Werner { eta }
            }
            other => return Err(parse_err(format!("atoms.kind: expected bell or werner, got '{other}'"))),
        };

        let field = FieldParams {
            nbar_c: s.f64("field.nbar_c")?,
            nbar_s: s.f64("field.nbar_s")?,
            nbar_th: s.f64("field.nbar_th")?,
            phi: s.f64("field.phi")?,
            alpha_phase: s.f64("field.alpha_phase")?,
        };
        field.validate().map_err(ScenarioError::from_config)?;

        let t_max = s.f64("grid.t_max")?;
        let samples = s.usize("grid.samples")?;
        crate::evolve::TimeGrid::uniform(t_max, samples).map_err(ScenarioError::from_config)?;

        let negativity = s
            .list("outputs.negativity")
            .iter()
            .filter(|c| c.as_str() != "none")
            .map(|c| c.parse::<Cut>().map_err(|e| parse_err(format!("outputs.negativity: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let wigner_times = s
            .list("outputs.wigner_times")
            .iter()
            .map(|t| parse_real(t).map_err(|e| parse_err(format!("outputs.wigner_times: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        for &t in &wigner_times {
            if t < 0.0 {
                return Err(parse_err(format!("outputs.wigner_times: negative time {t}")));
            }
        }
        let wigner = WignerSpec {
            x_range: (s.f64("outputs.wigner_x_min")?, s.f64("outputs.wigner_x_max")?),
            p_range: (s.f64("outputs.wigner_p_min")?, s.f64("outputs.wigner_p_max")?),
            nx: s.usize("outputs.wigner_nx")?,
            np: s.usize("outputs.wigner_np")?,
        };
        if !wigner_times.is_empty() {
            wigner.validate().map_err(ScenarioError::from_config)?;
        }
        let outputs = OutputSpec {
            concurrence: s.bool("outputs.concurrence")?,
            negativity,
            inversion: s.bool("outputs.inversion")?,
            esd: s.bool("outputs.esd")?,
            esd_threshold: s.f64("outputs.esd_threshold")?,
            pcd: s.bool("outputs.pcd")?,
            pcd_max_l: s.usize("outputs.pcd_max_l")?,
            wigner_times,
            wigner,
            scheme_comparison: s.bool("outputs.scheme_comparison")?,
        };
        if outputs.scheme_comparison {
            if !matches!(atoms, AtomsSpec::Bell { .. }) {
                return Err(parse_err("outputs.scheme_comparison requires kind = bell"));
            }
            if field.nbar_th != 0.0 {
                return Err(parse_err("outputs.scheme_comparison requires a pure field (nbar_th = 0)"));
            }
        }

        let sweep = if s.is_set("sweep.parameter") || s.is_set("sweep.values") {
            Some(SweepSpec::parse(s.raw("sweep.parameter"), s.raw("sweep.values"))?)
        } else {
            None
        };

        Ok(Self { model, policy, atoms, field, t_max, samples, outputs, sweep, settings: s })
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    /// Scenario with `parameters[k] = point[k]` applied and no sweep.
    pub fn at_point(&self, sweep: &SweepSpec, point: &[String]) -> Result<Self, ScenarioError> {
        let mut settings = self.settings.clone();
        settings.values.remove("sweep.parameter");
        settings.values.remove("sweep.values");
        for (p, v) in sweep.parameters.iter().zip(point) {
            settings.set(p, v.clone())?;
        }
        Self::from_settings(settings)
    }

    /// Resolved settings in config syntax. Feeding the manifest back to
    /// [`Scenario::parse`] reproduces `self` exactly.
    pub fn manifest(&self) -> String {
        let m = &self.model;
        let o = &self.outputs;
        let mut out = String::new();
        let mut section = |name: &str, rows: Vec<(&str, String)>| {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in rows {
                let _ = writeln!(out, "{k} = {v}");
            }
            let _ = writeln!(out);
        };
        section(
            "model",
            vec![
                ("lambda", fmt_real(m.lambda)),
                ("omega", fmt_real(m.omega)),
                ("delta", fmt_real(m.delta)),
                ("jz", fmt_real(m.jz)),
                ("gd", fmt_real(m.gd)),
                ("kerr_k", fmt_real(m.kerr_k)),
                ("detuned_form", m.detuned_form.to_string()),
                (
                    "atomic_energy",
                    match m.atomic_energy {
                        AtomicEnergy::Half => "half",
                        AtomicEnergy::Full => "full",
                    }
                    .into(),
                ),
            ],
        );
        section(
            "truncation",
            vec![
                ("n_max", self.policy.n_max.to_string()),
                ("pad_factor", self.policy.pad_factor.to_string()),
                ("tail_tol", fmt_real(self.policy.tail_tol)),
            ],
        );
        section(
            "atoms",
            match self.atoms {
                AtomsSpec::Bell { theta } => vec![("kind", "bell".into()), ("theta", fmt_real(theta))],
                AtomsSpec::Werner { eta } => vec![("kind", "werner".into()), ("eta", fmt_real(eta))],
            },
        );
        let f = &self.field;
        section(
            "field",
            vec![
                ("nbar_c", fmt_real(f.nbar_c)),
                ("nbar_s", fmt_real(f.nbar_s)),
                ("nbar_th", fmt_real(f.nbar_th)),
                ("phi", fmt_real(f.phi)),
                ("alpha_phase", fmt_real(f.alpha_phase)),
            ],
        );
        section("grid", vec![("t_max", fmt_real(self.t_max)), ("samples", self.samples.to_string())]);
        let cuts: Vec<&str> = o.negativity.iter().map(|c| c.name()).collect();
        let times: Vec<String> = o.wigner_times.iter().map(|&t| fmt_real(t)).collect();
        section(
            "outputs",
            vec![
                ("concurrence", o.concurrence.to_string()),
                ("negativity", if cuts.is_empty() { "none".into() } else { cuts.join(", ") }),
                ("inversion", o.inversion.to_string()),
                ("esd", o.esd.to_string()),
                ("esd_threshold", fmt_real(o.esd_threshold)),
                ("pcd", o.pcd.to_string()),
                ("pcd_max_l", o.pcd_max_l.to_string()),
                ("wigner_times", times.join(", ")),
                ("wigner_x_min", fmt_real(o.wigner.x_range.0)),
                ("wigner_x_max", fmt_real(o.wigner.x_range.1)),
                ("wigner_p_min", fmt_real(o.wigner.p_range.0)),
                ("wigner_p_max", fmt_real(o.wigner.p_range.1)),
                ("wigner_nx", o.wigner.nx.to_string()),
                ("wigner_np", o.wigner.np.to_string()),
                ("scheme_comparison", o.scheme_comparison.to_string()),
            ],
        );
        if let Some(sw) = &self.sweep {
            let points: Vec<String> = sw.values.iter().map(|p| p.join(":")).collect();
            section("sweep", vec![("parameter", sw.parameters.join(", ")), ("values", points.join(", "))]);
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}
