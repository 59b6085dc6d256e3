//! Sectioned TOML run configuration.
//!
//! Every problem found while reading is collected (unknown sections and keys,
//! missing mandatory keys, wrong types) and reported together with line
//! numbers. Optional keys that were filled in are listed in `defaulted`.

use std::collections::HashMap;
use std::path::Path;

use toml::{Table, Value};

use crate::beams::{
    ControlBeamSpec, ProbeKind, ProbeSpec, DEFAULT_DOUBLE_OFFSET_CM, DEFAULT_SECH_PEAKS, DEFAULT_SECH_SPACING_CM,
};
use crate::error::{ConfigIssue, Error, Result, Violation};
use crate::params::{GridSpec, PhysicalParams, DEFAULT_DOPPLER_WIDTH, DEFAULT_WAVELENGTH_CM};
use crate::solver::{IntensityCoupling, SplitOrder};

/// Minimum samples across the probe's 1/e diameter.
pub const MIN_SAMPLES_ACROSS_PROBE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Averaging {
    /// Closed-form Maxwellian average.
    Exact,
    /// Gauss–Hermite with the given node count.
    GaussHermite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub order: SplitOrder,
    /// Tabulated χ (true) or direct evaluation per grid point.
    pub chi_table: bool,
    pub averaging: Averaging,
    pub coupling: IntensityCoupling,
    pub absorbing_edge: bool,
    pub snapshot_every: usize,
    pub table_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub delta_r_min: f64,
    pub delta_r_max: f64,
    pub delta_r_points: usize,
    pub z: f64,
    pub probe_level: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub draws: usize,
    pub tolerance: f64,
    pub max_steps: usize,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: PhysicalParams,
    pub grid: Option<GridSpec>,
    pub control: Option<ControlBeamSpec>,
    pub probe: Option<ProbeSpec>,
    pub solver: SolverSettings,
    pub scan: ScanSettings,
    pub oracle: OracleSettings,
    pub seed: u64,
}

/// A parsed configuration together with the keys that took default values.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: Config,
    pub defaulted: Vec<String>,
}

const SECTIONS: [&str; 9] = [
    "atom", "detuning", "grid", "control", "probe", "solver", "scan", "oracle", "run",
];

/// Line numbers of section headers and keys, found by a plain scan of the text.
struct Locator {
    sections: HashMap<String, usize>,
    keys: HashMap<(String, String), usize>,
}

impl Locator {
    fn new(text: &str) -> Self {
        let mut sections = HashMap::new();
        let mut keys = HashMap::new();
        let mut current = String::new();
        for (n, line) in text.lines().enumerate() {
            let t = line.trim();
            if let Some(rest) = t.strip_prefix('[') {
                if let Some(end) = rest.find(']') {
                    current = rest[..end].trim().to_string();
                    sections.entry(current.clone()).or_insert(n + 1);
                }
            } else if let Some(eq) = t.find('=') {
                let key = t[..eq].trim().trim_matches('"').to_string();
                if !key.is_empty() && !key.starts_with('#') {
                    keys.entry((current.clone(), key)).or_insert(n + 1);
                }
            }
        }
        Self { sections, keys }
    }

    fn section(&self, s: &str) -> Option<usize> {
        self.sections.get(s).copied()
    }

    fn key(&self, s: &str, k: &str) -> Option<usize> {
        self.keys
            .get(&(s.to_string(), k.to_string()))
            .copied()
            .or(self.section(s))
    }
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    loc: &'a Locator,
    issues: &'a mut Vec<ConfigIssue>,
    defaulted: &'a mut Vec<String>,
    known: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn issue(&mut self, key: Option<&str>, message: String) {
        let line = match key {
            Some(k) => self.loc.key(self.name, k),
            None => self.loc.section(self.name),
        };
        self.issues.push(ConfigIssue { line, message });
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn missing(&mut self, key: &str) {
        self.issue(None, format!("[{}] missing mandatory key `{key}`", self.name));
    }

    fn default_used(&mut self, key: &str) {
        self.defaulted.push(format!("{}.{key}", self.name));
    }

    fn mismatch(&mut self, key: &str, expected: &str, got: &Value) {
        self.issue(
            Some(key),
            format!("[{}] `{key}` must be {expected}, found {}", self.name, got.type_str()),
        );
    }

    fn float(&mut self, key: &'static str, default: Option<f64>) -> Option<f64> {
        match self.raw(key) {
            Some(Value::Float(v)) => Some(*v),
            Some(Value::Integer(v)) => Some(*v as f64),
            Some(other) => {
                self.mismatch(key, "a number", other);
                None
            }
            None => self.fallback(key, default),
        }
    }

    fn int(&mut self, key: &'static str, default: Option<i64>) -> Option<i64> {
        match self.raw(key) {
            Some(Value::Integer(v)) => Some(*v),
            Some(other) => {
                self.mismatch(key, "an integer", other);
                None
            }
            None => self.fallback(key, default),
        }
    }

    fn count(&mut self, key: &'static str, default: Option<usize>) -> Option<usize> {
        let v = self.int(key, default.map(|d| d as i64))?;
        if v < 0 {
            self.issue(Some(key), format!("[{}] `{key}` must be non-negative", self.name));
            return None;
        }
        Some(v as usize)
    }

    fn boolean(&mut self, key: &'static str, default: Option<bool>) -> Option<bool> {
        match self.raw(key) {
            Some(Value::Boolean(v)) => Some(*v),
            Some(other) => {
                self.mismatch(key, "a boolean", other);
                None
            }
            None => self.fallback(key, default),
        }
    }

    fn string(&mut self, key: &'static str, default: Option<&str>) -> Option<String> {
        match self.raw(key) {
            Some(Value::String(v)) => Some(v.clone()),
            Some(other) => {
                self.mismatch(key, "a string", other);
                None
            }
            None => self.fallback(key, default.map(str::to_string)),
        }
    }

    /// Absent lists return `Ok(None)` so the caller can pick a default.
    fn float_list(&mut self, key: &'static str) -> Option<Option<Vec<f64>>> {
        match self.raw(key) {
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        Value::Float(v) => out.push(*v),
                        Value::Integer(v) => out.push(*v as f64),
                        other => {
                            self.mismatch(key, "an array of numbers", other);
                            return None;
                        }
                    }
                }
                Some(Some(out))
            }
            Some(other) => {
                self.mismatch(key, "an array of numbers", other);
                None
            }
            None => Some(None),
        }
    }

    fn fallback<T>(&mut self, key: &str, default: Option<T>) -> Option<T> {
        match default {
            Some(d) => {
                self.default_used(key);
                Some(d)
            }
            None => {
                self.missing(key);
                None
            }
        }
    }

    fn finish(mut self) {
        let Some(table) = self.table else { return };
        let unknown: Vec<String> = table
            .keys()
            .filter(|k| !self.known.contains(&k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            self.issue(Some(&k), format!("[{}] unknown key `{k}`", self.name));
        }
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn section_table<'a>(root: &'a Table, name: &str, loc: &Locator, issues: &mut Vec<ConfigIssue>) -> Option<&'a Table> {
    match root.get(name) {
        Some(Value::Table(t)) => Some(t),
        Some(_) => {
            issues.push(ConfigIssue {
                line: loc.key("", name),
                message: format!("`{name}` must be a section"),
            });
            None
        }
        None => None,
    }
}

/// Parses configuration text; see `parse_config`.
pub fn parse_config_str(text: &str) -> Result<Resolved> {
    let root: Table = toml::from_str(text).map_err(|e| {
        Error::Config(vec![ConfigIssue {
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        }])
    })?;
    let loc = Locator::new(text);
    let mut issues = Vec::new();
    let mut defaulted = Vec::new();

    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            issues.push(ConfigIssue {
                line: loc.section(key).or(loc.key("", key)),
                message: format!("unknown section `{key}`"),
            });
        }
    }
    for required in ["atom", "detuning"] {
        if !root.contains_key(required) {
            issues.push(ConfigIssue {
                line: None,
                message: format!("missing mandatory section [{required}]"),
            });
        }
    }

    macro_rules! section {
        ($name:literal) => {
            Section {
                name: $name,
                table: section_table(&root, $name, &loc, &mut issues),
                loc: &loc,
                issues: &mut issues,
                defaulted: &mut defaulted,
                known: Vec::new(),
            }
        };
    }
    macro_rules! present {
        ($name:literal) => {
            matches!(root.get($name), Some(Value::Table(_)))
        };
    }

    // [atom]
    let atom_present = present!("atom");
    let mut s = section!("atom");
    let (gamma, big_gamma, density, wavelength, doppler) = if atom_present {
        (
            s.float("gamma_rad_s", None),
            s.float("big_gamma_over_gamma", None),
            s.float("density_cm3", None),
            s.float("lambda_cm", Some(DEFAULT_WAVELENGTH_CM)),
            s.float("doppler_width_over_gamma", Some(DEFAULT_DOPPLER_WIDTH)),
        )
    } else {
        (None, None, None, None, None)
    };
    s.finish();

    // [detuning]
    let det_present = present!("detuning");
    let mut s = section!("detuning");
    let (delta_p, delta_r) = if det_present {
        (s.float("delta_p_over_gamma", None), s.float("delta_R_over_gamma", None))
    } else {
        (None, None)
    };
    s.finish();

    // [grid]
    let grid_present = present!("grid");
    let grid = if grid_present {
        let mut s = section!("grid");
        let g = (
            s.count("nx", None),
            s.count("ny", None),
            s.float("extent_cm", None),
            s.float("dz_cm", None),
            s.float("cell_length_cm", None),
        );
        s.finish();
        match g {
            (Some(nx), Some(ny), Some(extent), Some(dz), Some(cell_length)) => Some(GridSpec {
                nx,
                ny,
                extent,
                dz,
                cell_length,
            }),
            _ => None,
        }
    } else {
        None
    };

    // [control]
    let control = if present!("control") {
        let mut s = section!("control");
        let g0 = s.float("g0_over_gamma", None);
        let waist = s.float("waist_cm", None);
        // An incomplete [grid] is already reported; don't add a second error here.
        let waist_position = match (grid, grid_present) {
            (Some(g), _) => s.float("waist_position_cm", Some(g.cell_length)),
            (None, true) => s.float("waist_position_cm", Some(f64::NAN)),
            (None, false) => s.float("waist_position_cm", None),
        };
        s.finish();
        match (g0, waist, waist_position, wavelength) {
            (Some(g0), Some(waist), Some(waist_position), Some(wavelength)) => Some(ControlBeamSpec {
                g0,
                waist,
                waist_position,
                wavelength,
            }),
            _ => None,
        }
    } else {
        None
    };

    // [probe]
    let probe = if present!("probe") {
        let mut s = section!("probe");
        let kind_name = s.string("kind", None);
        let g0 = s.float("g0_over_gamma", None);
        let width = s.float("width_cm", None);
        let centers = s.float_list("centers_cm");
        let kind = match kind_name.as_deref() {
            Some(name) => match ProbeKind::parse(name) {
                Some(k) => Some(k),
                None => {
                    s.issue(
                        Some("kind"),
                        format!("[probe] unknown kind `{name}` (expected gaussian, double_gaussian or sech_multi)"),
                    );
                    None
                }
            },
            None => None,
        };
        let centers = match (kind, centers) {
            (Some(_), Some(Some(c))) => Some(c),
            (Some(k), Some(None)) => {
                s.default_used("centers_cm");
                Some(match k {
                    ProbeKind::Gaussian => Vec::new(),
                    ProbeKind::DoubleGaussian => vec![-DEFAULT_DOUBLE_OFFSET_CM, DEFAULT_DOUBLE_OFFSET_CM],
                    ProbeKind::SechMulti => {
                        ProbeSpec::sech_multi(0.0, 1.0, DEFAULT_SECH_PEAKS, DEFAULT_SECH_SPACING_CM).centers
                    }
                })
            }
            _ => None,
        };
        s.finish();
        match (kind, g0, width, centers) {
            (Some(kind), Some(g0), Some(width), Some(centers)) => Some(ProbeSpec {
                kind,
                g0,
                width,
                centers,
            }),
            _ => None,
        }
    } else {
        None
    };

    // [solver]
    let mut s = section!("solver");
    let order = s.int("order", Some(2));
    let chi = s.string("chi", Some("table"));
    let averaging = s.string("averaging", Some("exact"));
    let nodes = s.count("quadrature_nodes", Some(64));
    let coupling = s.string("intensity_coupling", Some("integrated"));
    let absorbing_edge = s.boolean("absorbing_edge", Some(false));
    let snapshot_every = s.count("snapshot_every", Some(100));
    let table_tolerance = s.float("table_tolerance", Some(1e-4));
    let order = order.and_then(|o| {
        let parsed = u32::try_from(o).ok().and_then(SplitOrder::from_order);
        if parsed.is_none() {
            s.issue(Some("order"), format!("[solver] `order` must be 2 or 4, found {o}"));
        }
        parsed
    });
    let chi_table = chi.and_then(|c| match c.as_str() {
        "table" => Some(true),
        "direct" => Some(false),
        other => {
            s.issue(
                Some("chi"),
                format!("[solver] `chi` must be \"table\" or \"direct\", found \"{other}\""),
            );
            None
        }
    });
    let averaging = match (averaging.as_deref(), nodes) {
        (Some("exact"), Some(_)) => Some(Averaging::Exact),
        (Some("gauss_hermite"), Some(n)) => {
            if n >= 2 && n.is_multiple_of(2) {
                Some(Averaging::GaussHermite(n))
            } else {
                s.issue(
                    Some("quadrature_nodes"),
                    format!("[solver] `quadrature_nodes` must be even and >= 2, found {n}"),
                );
                None
            }
        }
        (Some(other), _) => {
            s.issue(
                Some("averaging"),
                format!("[solver] `averaging` must be \"exact\" or \"gauss_hermite\", found \"{other}\""),
            );
            None
        }
        _ => None,
    };
    let coupling = coupling.and_then(|c| match c.as_str() {
        "integrated" => Some(IntensityCoupling::Integrated),
        "frozen" => Some(IntensityCoupling::Frozen),
        other => {
            s.issue(
                Some("intensity_coupling"),
                format!("[solver] `intensity_coupling` must be \"integrated\" or \"frozen\", found \"{other}\""),
            );
            None
        }
    });
    s.finish();
    let solver = match (
        order,
        chi_table,
        averaging,
        coupling,
        absorbing_edge,
        snapshot_every,
        table_tolerance,
    ) {
        (
            Some(order),
            Some(chi_table),
            Some(averaging),
            Some(coupling),
            Some(absorbing_edge),
            Some(snapshot_every),
            Some(table_tolerance),
        ) => Some(SolverSettings {
            order,
            chi_table,
            averaging,
            coupling,
            absorbing_edge,
            snapshot_every,
            table_tolerance,
        }),
        _ => None,
    };

    // [scan]
    let mut s = section!("scan");
    let scan = (
        s.float("r_min_cm", Some(-0.03)),
        s.float("r_max_cm", Some(0.03)),
        s.count("r_points", Some(121)),
        s.float("delta_R_min_over_gamma", Some(-0.1)),
        s.float("delta_R_max_over_gamma", Some(0.05)),
        s.count("delta_R_points", Some(151)),
        s.float("z_cm", Some(0.0)),
    );
    let probe_level = match s.raw("probe_level_over_gamma") {
        Some(Value::Float(v)) => Some(*v),
        Some(Value::Integer(v)) => Some(*v as f64),
        Some(other) => {
            s.mismatch("probe_level_over_gamma", "a number", other);
            None
        }
        None => {
            if let Some(p) = &probe {
                s.default_used("probe_level_over_gamma");
                Some(p.g0)
            } else {
                None
            }
        }
    };
    s.finish();
    let scan = match scan {
        (Some(r_min), Some(r_max), Some(r_points), Some(dmin), Some(dmax), Some(dpoints), Some(z)) => {
            Some(ScanSettings {
                r_min,
                r_max,
                r_points,
                delta_r_min: dmin,
                delta_r_max: dmax,
                delta_r_points: dpoints,
                z,
                probe_level,
            })
        }
        _ => None,
    };

    // [oracle]
    let mut s = section!("oracle");
    let oracle = (
        s.count("draws", Some(100)),
        s.float("tolerance", Some(1e-6)),
        s.count("max_steps", Some(200_000)),
    );
    s.finish();

    // [run]
    let mut s = section!("run");
    let seed = s.int("seed", Some(0));
    s.finish();

    if !issues.is_empty() {
        return Err(Error::Config(issues));
    }

    let params = PhysicalParams {
        gamma: gamma.unwrap(),
        big_gamma: big_gamma.unwrap(),
        delta_p: delta_p.unwrap(),
        delta_r: delta_r.unwrap(),
        doppler_width: doppler.unwrap(),
        density: density.unwrap(),
        wavelength: wavelength.unwrap(),
    };
    let (draws, tolerance, max_steps) = (oracle.0.unwrap(), oracle.1.unwrap(), oracle.2.unwrap());
    let config = Config {
        params,
        grid,
        control,
        probe,
        solver: solver.unwrap(),
        scan: scan.unwrap(),
        oracle: OracleSettings {
            draws,
            tolerance,
            max_steps,
        },
        seed: seed.unwrap() as u64,
    };
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    Ok(Resolved { config, defaulted })
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<Resolved> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

impl Config {
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = self.params.violations();
        if let Some(g) = &self.grid {
            v.extend(g.violations());
            if let Some(p) = &self.probe {
                if p.width > 0.0 && g.extent > 0.0 && g.nx > 0 && g.ny > 0 {
                    v.extend(g.check_resolution(2.0 * p.feature_width(), MIN_SAMPLES_ACROSS_PROBE));
                }
            }
        }
        if let Some(c) = &self.control {
            v.extend(c.violations());
        }
        if let Some(p) = &self.probe {
            v.extend(p.violations());
        }
        if self.scan.r_points < 2 || self.scan.delta_r_points < 2 {
            v.push(Violation::new("scan", "scan axes need at least 2 points"));
        }
        if !(self.scan.r_max > self.scan.r_min) || !(self.scan.delta_r_max > self.scan.delta_r_min) {
            v.push(Violation::new("scan", "scan ranges must be increasing"));
        }
        if !(self.solver.table_tolerance > 0.0) {
            v.push(Violation::new(
                "solver.table_tolerance",
                "table_tolerance must be positive",
            ));
        }
        if !(self.oracle.tolerance > 0.0) {
            v.push(Violation::new("oracle.tolerance", "tolerance must be positive"));
        }
        v
    }

    /// Every resolved value as a TOML table; parsing `to_toml()` gives back `self`.
    pub fn to_table(&self) -> Table {
        fn table(entries: Vec<(&str, Value)>) -> Value {
            Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
        }
        let p = &self.params;
        let mut root = Table::new();
        root.insert(
            "atom".into(),
            table(vec![
                ("gamma_rad_s", p.gamma.into()),
                ("big_gamma_over_gamma", p.big_gamma.into()),
                ("density_cm3", p.density.into()),
                ("lambda_cm", p.wavelength.into()),
                ("doppler_width_over_gamma", p.doppler_width.into()),
            ]),
        );
        root.insert(
            "detuning".into(),
            table(vec![
                ("delta_p_over_gamma", p.delta_p.into()),
                ("delta_R_over_gamma", p.delta_r.into()),
            ]),
        );
        if let Some(g) = &self.grid {
            root.insert(
                "grid".into(),
                table(vec![
                    ("nx", (g.nx as i64).into()),
                    ("ny", (g.ny as i64).into()),
                    ("extent_cm", g.extent.into()),
                    ("dz_cm", g.dz.into()),
                    ("cell_length_cm", g.cell_length.into()),
                ]),
            );
        }
        if let Some(c) = &self.control {
            root.insert(
                "control".into(),
                table(vec![
                    ("g0_over_gamma", c.g0.into()),
                    ("waist_cm", c.waist.into()),
                    ("waist_position_cm", c.waist_position.into()),
                ]),
            );
        }
        if let Some(pr) = &self.probe {
            root.insert(
                "probe".into(),
                table(vec![
                    ("kind", pr.kind.name().into()),
                    ("g0_over_gamma", pr.g0.into()),
                    ("width_cm", pr.width.into()),
                    (
                        "centers_cm",
                        Value::Array(pr.centers.iter().map(|&c| c.into()).collect()),
                    ),
                ]),
            );
        }
        let s = &self.solver;
        let (averaging, nodes) = match s.averaging {
            Averaging::Exact => ("exact", 64),
            Averaging::GaussHermite(n) => ("gauss_hermite", n),
        };
        root.insert(
            "solver".into(),
            table(vec![
                ("order", (s.order.order() as i64).into()),
                ("chi", if s.chi_table { "table" } else { "direct" }.into()),
                ("averaging", averaging.into()),
                ("quadrature_nodes", (nodes as i64).into()),
                (
                    "intensity_coupling",
                    match s.coupling {
                        IntensityCoupling::Integrated => "integrated",
                        IntensityCoupling::Frozen => "frozen",
                    }
                    .into(),
                ),
                ("absorbing_edge", s.absorbing_edge.into()),
                ("snapshot_every", (s.snapshot_every as i64).into()),
                ("table_tolerance", s.table_tolerance.into()),
            ]),
        );
        let sc = &self.scan;
        let mut scan = vec![
            ("r_min_cm", sc.r_min.into()),
            ("r_max_cm", sc.r_max.into()),
            ("r_points", (sc.r_points as i64).into()),
            ("delta_R_min_over_gamma", sc.delta_r_min.into()),
            ("delta_R_max_over_gamma", sc.delta_r_max.into()),
            ("delta_R_points", (sc.delta_r_points as i64).into()),
            ("z_cm", sc.z.into()),
        ];
        if let Some(level) = sc.probe_level {
            scan.push(("probe_level_over_gamma", level.into()));
        }
        root.insert("scan".into(), table(scan));
        root.insert(
            "oracle".into(),
            table(vec![
                ("draws", (self.oracle.draws as i64).into()),
                ("tolerance", self.oracle.tolerance.into()),
                ("max_steps", (self.oracle.max_steps as i64).into()),
            ]),
        );
        root.insert("run".into(), table(vec![("seed", (self.seed as i64).into())]));
        root
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("config table serializes")
    }

    pub fn require_grid(&self, subcommand: &str) -> Result<GridSpec> {
        self.grid.ok_or_else(|| missing_section("grid", subcommand))
    }

    pub fn require_control(&self, subcommand: &str) -> Result<ControlBeamSpec> {
        self.control.ok_or_else(|| missing_section("control", subcommand))
    }

    pub fn require_probe(&self, subcommand: &str) -> Result<ProbeSpec> {
        self.probe.clone().ok_or_else(|| missing_section("probe", subcommand))
    }
}

fn missing_section(section: &str, subcommand: &str) -> Error {
    Error::Config(vec![ConfigIssue {
        line: None,
        message: format!("`{subcommand}` needs a [{section}] section"),
    }])
}
