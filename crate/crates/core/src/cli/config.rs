//! Flat `key=value` scenario files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::bath::BathSpec;
use crate::lattice::{golden_ratio, Boundary, LatticeSpec};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Spectrum,
    Bound,
    Bic,
    Evolve,
    Sweep,
    Oracle,
    KernelCheck,
}

impl Task {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "spectrum" => Task::Spectrum,
            "bound" => Task::Bound,
            "bic" => Task::Bic,
            "evolve" => Task::Evolve,
            "sweep" => Task::Sweep,
            "oracle" => Task::Oracle,
            "kernelcheck" => Task::KernelCheck,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Bound => "bound",
            Task::Bic => "bic",
            Task::Evolve => "evolve",
            Task::Sweep => "sweep",
            Task::Oracle => "oracle",
            Task::KernelCheck => "kernelcheck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Phi,
    Delta,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Phi => "phi",
            SweepAxis::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// `n0` is a 1-based site label.
    Site,
    /// `n0` is a 1-based index into the ascending lattice spectrum.
    Mode,
}

impl InitialKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitialKind::Site => "site",
            InitialKind::Mode => "mode",
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub lattice: LatticeSpec,
    pub bath: BathSpec,
    pub task: Task,
    pub initial: InitialKind,
    pub n0: usize,
    pub t_max: f64,
    pub dt: f64,
    pub record_every: usize,
    /// Extra 1-based sites written to the trajectory file.
    pub sites: Vec<usize>,
    pub window: (f64, f64),
    pub axis: SweepAxis,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub include_positive: bool,
    pub min_gap_width: f64,
    pub grid_points: usize,
    pub edge_ipr: f64,
    pub edge_window: usize,
    pub modes: usize,
    pub omega_max: f64,
    pub oracle_t_max: f64,
    pub out_dir: PathBuf,
}

/// Keys accepted in a scenario file, in manifest order.
pub const KEYS: &[&str] = &[
    "task",
    "n_sites",
    "delta",
    "beta",
    "phi",
    "boundary",
    "eta",
    "s",
    "omega_c",
    "initial",
    "n0",
    "t_max",
    "dt",
    "record_every",
    "sites",
    "window_from",
    "window_to",
    "axis",
    "from",
    "to",
    "points",
    "include_positive",
    "min_gap_width",
    "grid_points",
    "edge_ipr",
    "edge_window",
    "modes",
    "omega_max",
    "oracle_t_max",
    "out_dir",
];

/// Parses `text` into raw key/value pairs. Lines starting with `#` and blank
/// lines are skipped; keys prefixed `meta.` are informational and ignored.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", lineno + 1)))?;
        let k = k.trim();
        if k.starts_with("meta.") {
            continue;
        }
        if !KEYS.contains(&k) {
            return Err(CliError::Config(format!("line {}: unknown key `{k}`", lineno + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Reads a real number, `golden`, a ratio `p/q`, or a multiple of π such as
/// `-pi`, `0.4pi` or `2/3pi`.
pub fn parse_real(key: &str, raw: &str) -> Result<f64, CliError> {
    let bad = || CliError::Config(format!("`{key}`: cannot read `{raw}` as a number"));
    let s = raw.trim();
    if s == "golden" {
        return Ok(golden_ratio());
    }
    if let Some(coef) = s.strip_suffix("pi") {
        let c = match coef.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => parse_ratio(other).ok_or_else(bad)?,
        };
        return Ok(c * PI);
    }
    let v = parse_ratio(s).ok_or_else(bad)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_ratio(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            (q != 0.0).then(|| p / q)
        }
        None => s.parse().ok(),
    }
}

fn parse_count(key: &str, raw: &str) -> Result<usize, CliError> {
    raw.trim().parse().map_err(|_| CliError::Config(format!("`{key}`: expected a non-negative integer, got `{raw}`")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("`{key}`: expected true or false, got `{raw}`"))),
    }
}

impl Scenario {
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let real = |k: &str, default: f64| get(k).map_or(Ok(default), |v| parse_real(k, v));
        let count = |k: &str, default: usize| get(k).map_or(Ok(default), |v| parse_count(k, v));

        let task = match get("task") {
            None => return Err(CliError::Config("missing `task`".into())),
            Some(t) => Task::parse(t).ok_or_else(|| CliError::Config(format!("unknown task `{t}`")))?,
        };
        let boundary = match get("boundary").unwrap_or("open") {
            "open" => Boundary::Open,
            "periodic" => Boundary::Periodic,
            other => return Err(CliError::Config(format!("unknown boundary `{other}`"))),
        };
        let lattice = LatticeSpec::new(
            count("n_sites", 99)?,
            real("delta", 2.0)?,
            real("beta", 1.0 / 3.0)?,
            real("phi", 0.0)?,
            boundary,
        )?;
        let bath = BathSpec::new(real("eta", 0.1)?, real("s", 1.0)?, real("omega_c", 10.0)?)?;
        let initial = match get("initial").unwrap_or("site") {
            "site" => InitialKind::Site,
            "mode" => InitialKind::Mode,
            other => return Err(CliError::Config(format!("unknown initial kind `{other}`"))),
        };
        let n0 = count("n0", 1)?;
        if n0 == 0 || n0 > lattice.n_sites() {
            return Err(CliError::Config(format!("`n0` must lie in 1..={}", lattice.n_sites())));
        }
        let t_max = real("t_max", 200.0)?;
        let dt = real("dt", 0.005)?;
        if !(t_max > 0.0) || !(dt > 0.0) {
            return Err(CliError::Config("`t_max` and `dt` must be positive".into()));
        }
        let record_every = count("record_every", 10)?;
        if record_every == 0 {
            return Err(CliError::Config("`record_every` must be at least 1".into()));
        }
        let sites = match get("sites") {
            None | Some("") => Vec::new(),
            Some(list) => list.split(',').map(|x| parse_count("sites", x)).collect::<Result<Vec<_>, _>>()?,
        };
        if let Some(&bad) = sites.iter().find(|&&s| s == 0 || s > lattice.n_sites()) {
            return Err(CliError::Config(format!("site {bad} out of range")));
        }
        let window = (real("window_from", 50.0_f64.min(t_max / 4.0))?, real("window_to", t_max)?);
        let axis = match get("axis").unwrap_or("phi") {
            "phi" => SweepAxis::Phi,
            "delta" => SweepAxis::Delta,
            other => return Err(CliError::Config(format!("unknown sweep axis `{other}`"))),
        };
        let (from_default, to_default) = match axis {
            SweepAxis::Phi => (-PI, PI),
            SweepAxis::Delta => (0.0, 4.0),
        };
        let points = count("points", 51)?;
        if task == Task::Sweep && points < 2 {
            return Err(CliError::Config("`points` must be at least 2".into()));
        }
        let min_gap_width = real("min_gap_width", 0.05)?;
        if !(min_gap_width > 0.0) {
            return Err(CliError::Config("`min_gap_width` must be positive".into()));
        }
        let edge_ipr = real("edge_ipr", 0.1)?;
        let edge_window = count("edge_window", 10)?;
        if !(edge_ipr > 0.0) || edge_window == 0 {
            return Err(CliError::Config("edge thresholds must be positive".into()));
        }
        Ok(Self {
            lattice,
            bath,
            task,
            initial,
            n0,
            t_max,
            dt,
            record_every,
            sites,
            window,
            axis,
            from: real("from", from_default)?,
            to: real("to", to_default)?,
            points,
            include_positive: get("include_positive").map_or(Ok(task == Task::Bic), |v| parse_bool("include_positive", v))?,
            min_gap_width,
            grid_points: count("grid_points", 2000)?,
            edge_ipr,
            edge_window,
            modes: count("modes", 2000)?,
            omega_max: real("omega_max", 20.0 * bath.omega_c())?,
            oracle_t_max: real("oracle_t_max", 50.0)?,
            out_dir: PathBuf::from(get("out_dir").unwrap_or("out")),
        })
    }

    /// Every effective parameter, in a form `from_pairs` reads back exactly.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let sites = self.sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("task", self.task.as_str().into()),
            ("n_sites", self.lattice.n_sites().to_string()),
            ("delta", self.lattice.delta().to_string()),
            ("beta", self.lattice.beta().to_string()),
            ("phi", self.lattice.phi().to_string()),
            ("boundary", self.lattice.boundary().to_string()),
            ("eta", self.bath.eta().to_string()),
            ("s", self.bath.s().to_string()),
            ("omega_c", self.bath.omega_c().to_string()),
            ("initial", self.initial.as_str().into()),
            ("n0", self.n0.to_string()),
            ("t_max", self.t_max.to_string()),
            ("dt", self.dt.to_string()),
            ("record_every", self.record_every.to_string()),
            ("sites", sites),
            ("window_from", self.window.0.to_string()),
            ("window_to", self.window.1.to_string()),
            ("axis", self.axis.as_str().into()),
            ("from", self.from.to_string()),
            ("to", self.to.to_string()),
            ("points", self.points.to_string()),
            ("include_positive", self.include_positive.to_string()),
            ("min_gap_width", self.min_gap_width.to_string()),
            ("grid_points", self.grid_points.to_string()),
            ("edge_ipr", self.edge_ipr.to_string()),
            ("edge_window", self.edge_window.to_string()),
            ("modes", self.modes.to_string()),
            ("omega_max", self.omega_max.to_string()),
            ("oracle_t_max", self.oracle_t_max.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_tokens() {
        assert_eq!(parse_real("beta", "golden").unwrap(), golden_ratio());
        assert_eq!(parse_real("beta", "1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_real("phi", "-pi").unwrap(), -PI);
        assert_eq!(parse_real("phi", "pi").unwrap(), PI);
        assert_eq!(parse_real("phi", "0.4pi").unwrap(), 0.4 * PI);
        assert_eq!(parse_real("phi", "2/3pi").unwrap(), 2.0 / 3.0 * PI);
        assert_eq!(parse_real("eta", "1e-3").unwrap(), 1e-3);
        assert!(parse_real("eta", "abc").is_err());
        assert!(parse_real("eta", "1/0").is_err());
    }

    #[test]
    fn comments_and_unknown_keys() {
        let p = parse_pairs("# hello\n\ntask = bound\nmeta.version=1\n").unwrap();
        assert_eq!(p.get("task").map(String::as_str), Some("bound"));
        assert_eq!(p.len(), 1);
        assert!(parse_pairs("colour=blue").is_err());
        assert!(parse_pairs("task").is_err());
    }

    #[test]
    fn negative_coupling_is_a_config_error() {
        let p = parse_pairs("task=bound\neta=-0.1").unwrap();
        assert!(matches!(Scenario::from_pairs(&p), Err(CliError::Config(_))));
    }

    #[test]
    fn pairs_round_trip() {
        let p = parse_pairs("task=evolve\nbeta=golden\nphi=0.4pi\nsites=1,99\nn0=50").unwrap();
        let s = Scenario::from_pairs(&p).unwrap();
        let text: String = s.to_pairs().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        let again = Scenario::from_pairs(&parse_pairs(&text).unwrap()).unwrap();
        assert_eq!(s, again);
    }
}
