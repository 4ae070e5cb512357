//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [basis]
//! L = 1
//! K = 3
//!
//! [velocity]
//! mode.0 = 1.0
//! mode.1 = affine 0.1 0.0 0.0
//! ```
//!
//! Nested settings use dotted keys (`origin.x`, `mc.seed`). Lines starting
//! with `#` or `;` are comments. [`RunConfig::to_text`] writes every setting
//! with defaults filled in; its SHA-256 is the config hash.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::algebra::p_matrix;
use crate::basis::{build_basis, default_nodes_per_dim, GpcBasis};
use crate::error::Result as CoreResult;
use crate::flux::VELOCITY_INVERTIBILITY_TOL;
use crate::quantile::{Surrogate, DEFAULT_N_CDF};
use crate::solver::{Boundary, Form, Grid, InitialCondition, ModeFunction, VelocitySpec, DEFAULT_CFL};

pub const SECTIONS: [&str; 6] = ["basis", "grid", "run", "phi0", "velocity", "quantile"];

/// One problem found while parsing, anchored to a line when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub section: Option<String>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        match (&self.section, &self.key) {
            (Some(s), Some(k)) => write!(f, "[{s}] {k}: ")?,
            (Some(s), None) => write!(f, "[{s}]: ")?,
            _ => {}
        }
        f.write_str(&self.message)
    }
}

/// All errors of one parse, one per line when displayed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisConfig {
    pub l: usize,
    pub k: usize,
    pub nodes_per_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub dims: usize,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Center of the first cell.
    pub origin: [f64; 2],
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Intrusive,
    MonteCarlo { samples: usize, seed: u64 },
    Collocation { nodes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub form: Form,
    pub cfl: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
    pub mode: RunMode,
    pub norm_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileConfig {
    pub epsilon: f64,
    pub p: f64,
    pub n_cdf: usize,
    pub surrogate: Surrogate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub basis: BasisConfig,
    pub grid: GridConfig,
    pub run: RunSection,
    pub phi0: InitialCondition,
    /// One profile per basis function, in index-set order.
    pub velocity: Vec<ModeFunction>,
    pub quantile: QuantileConfig,
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Raw entries with typed accessors that record errors instead of failing.
struct Sections {
    map: BTreeMap<String, BTreeMap<String, Entry>>,
    errors: Vec<ConfigError>,
}

impl Sections {
    fn err(&mut self, section: &str, key: &str, line: Option<usize>, message: String) {
        self.errors.push(ConfigError {
            line,
            section: Some(section.to_string()),
            key: Some(key.to_string()),
            message,
        });
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        let e = self.map.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.line, e.value.clone()))
    }

    fn parsed<T: std::str::FromStr>(&mut self, section: &str, key: &str, default: T, what: &str) -> (T, Option<usize>) {
        match self.raw(section, key) {
            None => (default, None),
            Some((line, v)) => match v.parse() {
                Ok(x) => (x, Some(line)),
                Err(_) => {
                    self.err(section, key, Some(line), format!("expected {what}, found '{v}'"));
                    (default, Some(line))
                }
            },
        }
    }

    fn real(&mut self, section: &str, key: &str, default: f64) -> (f64, Option<usize>) {
        let (x, line) = self.parsed(section, key, default, "a real number");
        if !x.is_finite() {
            self.err(section, key, line, format!("value {x} is not finite"));
            return (default, line);
        }
        (x, line)
    }

    fn count(&mut self, section: &str, key: &str, default: usize) -> (usize, Option<usize>) {
        self.parsed(section, key, default, "a nonnegative integer")
    }

    fn check(&mut self, ok: bool, section: &str, key: &str, line: Option<usize>, message: impl FnOnce() -> String) {
        if !ok {
            let m = message();
            self.err(section, key, line, m);
        }
    }

    fn choice<T: Copy>(&mut self, section: &str, key: &str, options: &[(&str, T)], default: T) -> (T, Option<usize>) {
        let Some((line, v)) = self.raw(section, key) else {
            return (default, None);
        };
        match options.iter().find(|(name, _)| *name == v) {
            Some((_, t)) => (*t, Some(line)),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(section, key, Some(line), format!("'{v}' is not one of {}", names.join(", ")));
                (default, Some(line))
            }
        }
    }
}

fn split_sections(text: &str) -> Sections {
    let mut map: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
    let mut errors = Vec::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(ConfigError {
                    line: Some(line),
                    section: None,
                    key: None,
                    message: format!("malformed section header '{s}'"),
                });
                continue;
            };
            let name = name.trim().to_string();
            if SECTIONS.contains(&name.as_str()) {
                map.entry(name.clone()).or_default();
                current = Some(name);
            } else {
                errors.push(ConfigError {
                    line: Some(line),
                    section: Some(name.clone()),
                    key: None,
                    message: format!("unknown section; accepted sections: {}", SECTIONS.join(", ")),
                });
                // Keys of an unknown section are skipped.
                current = Some(format!("!{name}"));
            }
            continue;
        }
        let Some((key, value)) = s.split_once('=') else {
            errors.push(ConfigError {
                line: Some(line),
                section: current.clone(),
                key: None,
                message: format!("expected 'key = value', found '{s}'"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = current.clone() else {
            errors.push(ConfigError {
                line: Some(line),
                section: None,
                key: Some(key.to_string()),
                message: "key appears before any section header".into(),
            });
            continue;
        };
        if section.starts_with('!') {
            continue;
        }
        let entries = map.entry(section.clone()).or_default();
        if let Some(prev) = entries.get(key) {
            errors.push(ConfigError {
                line: Some(line),
                section: Some(section),
                key: Some(key.to_string()),
                message: format!("duplicate key, first set on line {}", prev.line),
            });
            continue;
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
                used: false,
            },
        );
    }
    Sections { map, errors }
}

fn accepted_keys(section: &str) -> &'static str {
    match section {
        "basis" => "L, K, nodes_per_dim",
        "grid" => "dims, nx, ny, dx, dy, origin.x, origin.y, boundary",
        "run" => "form, cfl, t_end, snapshot_every, mode, mc.samples, mc.seed, collocation.nodes, norm_floor",
        "phi0" => "kind, slope.x, slope.y, offset, center.x, center.y, radius, amplitude, wavenumber.x, wavenumber.y",
        "velocity" => "mode.<index>",
        _ => "epsilon, p, n_cdf, surrogate",
    }
}

fn parse_mode_function(value: &str) -> std::result::Result<ModeFunction, String> {
    let mut words = value.split_whitespace();
    let head = words.next().ok_or("empty velocity mode")?;
    let nums = |words: std::str::SplitWhitespace<'_>, n: usize, name: &str| -> std::result::Result<Vec<f64>, String> {
        let v: Vec<f64> = words
            .map(|w| w.parse::<f64>().map_err(|_| format!("'{w}' is not a number")))
            .collect::<std::result::Result<_, _>>()?;
        if v.len() != n || v.iter().any(|x| !x.is_finite()) {
            return Err(format!("'{name}' takes {n} finite numbers"));
        }
        Ok(v)
    };
    match head {
        "constant" => Ok(ModeFunction::Constant(nums(words, 1, head)?[0])),
        "affine" => {
            let v = nums(words, 3, head)?;
            Ok(ModeFunction::Affine {
                c0: v[0],
                cx: v[1],
                cy: v[2],
            })
        }
        "bump" => {
            let v = nums(words, 4, head)?;
            if v[3] <= 0.0 {
                return Err("bump width must be positive".into());
            }
            Ok(ModeFunction::GaussianBump {
                amplitude: v[0],
                center: [v[1], v[2]],
                width: v[3],
            })
        }
        _ => match head.parse::<f64>() {
            Ok(c) if c.is_finite() && words.next().is_none() => Ok(ModeFunction::Constant(c)),
            _ => Err(format!(
                "'{value}' is not a number or one of 'constant c', 'affine c0 cx cy', 'bump a x y width'"
            )),
        },
    }
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigErrors> {
    let mut s = split_sections(text);

    let (l, l_line) = s.count("basis", "L", 1);
    s.check(l >= 1, "basis", "L", l_line, || "L must be at least 1".into());
    let (k, _) = s.count("basis", "K", 1);
    let min_nodes = crate::basis::min_nodes_per_dim(k);
    let (nodes_per_dim, n_line) = s.count("basis", "nodes_per_dim", default_nodes_per_dim(k));
    s.check(nodes_per_dim >= min_nodes, "basis", "nodes_per_dim", n_line, || {
        format!("{nodes_per_dim} nodes cannot integrate degree-{k} triple products exactly; need at least {min_nodes}")
    });

    let (dims, d_line) = s.count("grid", "dims", 1);
    s.check((1..=2).contains(&dims), "grid", "dims", d_line, || "dims must be 1 or 2".into());
    let (nx, nx_line) = s.count("grid", "nx", 100);
    s.check(nx >= 2, "grid", "nx", nx_line, || "nx must be at least 2".into());
    let (ny, ny_line) = s.count("grid", "ny", if dims == 2 { nx } else { 1 });
    s.check(dims == 2 && ny >= 2 || dims != 2 && ny == 1, "grid", "ny", ny_line, || {
        "ny must be at least 2 on 2D grids and 1 on 1D grids".into()
    });
    let (dx, dx_line) = s.real("grid", "dx", 2.0 / nx.max(1) as f64);
    s.check(dx > 0.0, "grid", "dx", dx_line, || "dx must be positive".into());
    let (dy, dy_line) = s.real("grid", "dy", if dims == 2 { 2.0 / ny.max(1) as f64 } else { 1.0 });
    s.check(dy > 0.0, "grid", "dy", dy_line, || "dy must be positive".into());
    let (ox, _) = s.real("grid", "origin.x", -1.0 + 0.5 * dx);
    let (oy, _) = s.real("grid", "origin.y", if dims == 2 { -1.0 + 0.5 * dy } else { 0.0 });
    let (boundary, _) = s.choice(
        "grid",
        "boundary",
        &[("outflow", Boundary::Outflow), ("periodic", Boundary::Periodic)],
        Boundary::Outflow,
    );

    let (form, _) = s.choice(
        "run",
        "form",
        &[("conservative", Form::Conservative), ("capacity", Form::Capacity)],
        Form::Conservative,
    );
    let (cfl, cfl_line) = s.real("run", "cfl", DEFAULT_CFL);
    s.check(cfl > 0.0 && cfl < 1.0, "run", "cfl", cfl_line, || format!("value {cfl} outside (0, 1)"));
    let (t_end, t_line) = s.real("run", "t_end", 0.25);
    s.check(t_end >= 0.0, "run", "t_end", t_line, || "t_end must be nonnegative".into());
    let (snapshot_every, _) = s.count("run", "snapshot_every", 0);
    #[derive(Clone, Copy)]
    enum M {
        I,
        Mc,
        Co,
    }
    let (m, _) = s.choice("run", "mode", &[("intrusive", M::I), ("mc", M::Mc), ("collocation", M::Co)], M::I);
    let (samples, samples_line) = s.count("run", "mc.samples", 1000);
    let (seed, _) = s.parsed("run", "mc.seed", 0u64, "a 64-bit unsigned integer");
    let (nodes, nodes_line) = s.count("run", "collocation.nodes", 8);
    let mode = match m {
        M::I => RunMode::Intrusive,
        M::Mc => {
            s.check(samples >= 1, "run", "mc.samples", samples_line, || "need at least one sample".into());
            RunMode::MonteCarlo { samples, seed }
        }
        M::Co => {
            s.check(nodes >= 1, "run", "collocation.nodes", nodes_line, || "need at least one node".into());
            RunMode::Collocation { nodes }
        }
    };
    let norm_floor = match s.raw("run", "norm_floor") {
        None => None,
        Some((_, v)) if v == "off" => None,
        Some((line, v)) => match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Some(x),
            _ => {
                s.err("run", "norm_floor", Some(line), format!("expected 'off' or a positive number, found '{v}'"));
                None
            }
        },
    };

    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Plane,
        Circle,
        Wave,
    }
    let (kind, _) = s.choice(
        "phi0",
        "kind",
        &[("plane", Kind::Plane), ("circle", Kind::Circle), ("wave", Kind::Wave)],
        Kind::Plane,
    );
    let phi0 = match kind {
        Kind::Plane => InitialCondition::Plane {
            slope: [s.real("phi0", "slope.x", 1.0).0, s.real("phi0", "slope.y", 0.0).0],
            offset: s.real("phi0", "offset", 0.0).0,
        },
        Kind::Circle => {
            let center = [s.real("phi0", "center.x", 0.0).0, s.real("phi0", "center.y", 0.0).0];
            let (radius, r_line) = s.real("phi0", "radius", 0.5);
            s.check(radius > 0.0, "phi0", "radius", r_line, || "radius must be positive".into());
            InitialCondition::Circle { center, radius }
        }
        Kind::Wave => InitialCondition::Wave {
            slope: [s.real("phi0", "slope.x", 1.0).0, s.real("phi0", "slope.y", 0.0).0],
            amplitude: s.real("phi0", "amplitude", 0.0).0,
            wavenumber: [s.real("phi0", "wavenumber.x", 0.0).0, s.real("phi0", "wavenumber.y", 0.0).0],
            offset: s.real("phi0", "offset", 0.0).0,
        },
    };

    let basis_len = if l >= 1 {
        crate::basis::MultiIndexSet::total_degree(l, k).len()
    } else {
        1
    };
    let mut velocity = vec![ModeFunction::Constant(0.0); basis_len];
    velocity[0] = ModeFunction::Constant(1.0);
    let keys: Vec<String> = s.map.get("velocity").map(|m| m.keys().cloned().collect()).unwrap_or_default();
    for key in keys {
        let Some(index) = key.strip_prefix("mode.") else { continue };
        let (line, value) = s.raw("velocity", &key).expect("key listed above");
        match index.parse::<usize>() {
            Ok(i) if i < basis_len => match parse_mode_function(&value) {
                Ok(f) => velocity[i] = f,
                Err(m) => s.err("velocity", &key, Some(line), m),
            },
            _ => s.err(
                "velocity",
                &key,
                Some(line),
                format!("mode index must be an integer below |K| = {basis_len}"),
            ),
        }
    }

    let (epsilon, e_line) = s.real("quantile", "epsilon", 0.05);
    s.check(epsilon >= 0.0, "quantile", "epsilon", e_line, || "epsilon must be nonnegative".into());
    let (p, p_line) = s.real("quantile", "p", 0.9);
    s.check(p > 0.0 && p <= 1.0, "quantile", "p", p_line, || format!("value {p} outside (0, 1]"));
    let (n_cdf, c_line) = s.count("quantile", "n_cdf", DEFAULT_N_CDF);
    s.check(n_cdf >= 2, "quantile", "n_cdf", c_line, || "n_cdf must be at least 2".into());
    let (surrogate, _) = s.choice(
        "quantile",
        "surrogate",
        &[("pointwise", Surrogate::Pointwise), ("galerkin", Surrogate::Galerkin)],
        Surrogate::Pointwise,
    );

    let unused: Vec<(String, String, usize)> = s
        .map
        .iter()
        .flat_map(|(sec, m)| m.iter().filter(|(_, e)| !e.used).map(move |(k, e)| (sec.clone(), k.clone(), e.line)))
        .collect();
    for (sec, key, line) in unused {
        let msg = format!("unknown key; accepted keys: {}", accepted_keys(&sec));
        s.err(&sec, &key, Some(line), msg);
    }

    let config = RunConfig {
        basis: BasisConfig { l, k, nodes_per_dim },
        grid: GridConfig {
            dims,
            nx,
            ny: if dims == 2 { ny } else { 1 },
            dx,
            dy,
            origin: [ox, oy],
            boundary,
        },
        run: RunSection {
            form,
            cfl,
            t_end,
            snapshot_every,
            mode,
            norm_floor,
        },
        phi0,
        velocity,
        quantile: QuantileConfig {
            epsilon,
            p,
            n_cdf,
            surrogate,
        },
    };

    if s.errors.is_empty() {
        if let Err(e) = config.check_velocity_operator() {
            s.errors.push(e);
        }
    }
    if s.errors.is_empty() {
        Ok(config)
    } else {
        s.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        Err(ConfigErrors(s.errors))
    }
}

fn real_text(x: f64) -> String {
    format!("{x:?}")
}

fn mode_text(f: &ModeFunction) -> String {
    match f {
        ModeFunction::Constant(c) => format!("constant {}", real_text(*c)),
        ModeFunction::Affine { c0, cx, cy } => {
            format!("affine {} {} {}", real_text(*c0), real_text(*cx), real_text(*cy))
        }
        ModeFunction::GaussianBump {
            amplitude,
            center,
            width,
        } => format!(
            "bump {} {} {} {}",
            real_text(*amplitude),
            real_text(center[0]),
            real_text(center[1]),
            real_text(*width)
        ),
        ModeFunction::Tabulated(_) => unreachable!("tabulated modes are not configurable"),
    }
}

impl RunConfig {
    /// Canonical text: every setting, fixed order, shortest round-trip reals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        let b = &self.basis;
        line("[basis]".into());
        line(format!("L = {}", b.l));
        line(format!("K = {}", b.k));
        line(format!("nodes_per_dim = {}", b.nodes_per_dim));
        let g = &self.grid;
        line(String::new());
        line("[grid]".into());
        line(format!("dims = {}", g.dims));
        line(format!("nx = {}", g.nx));
        line(format!("ny = {}", g.ny));
        line(format!("dx = {}", real_text(g.dx)));
        line(format!("dy = {}", real_text(g.dy)));
        line(format!("origin.x = {}", real_text(g.origin[0])));
        line(format!("origin.y = {}", real_text(g.origin[1])));
        line(format!(
            "boundary = {}",
            match g.boundary {
                Boundary::Outflow => "outflow",
                Boundary::Periodic => "periodic",
            }
        ));
        let r = &self.run;
        line(String::new());
        line("[run]".into());
        line(format!(
            "form = {}",
            match r.form {
                Form::Conservative => "conservative",
                Form::Capacity => "capacity",
            }
        ));
        line(format!("cfl = {}", real_text(r.cfl)));
        line(format!("t_end = {}", real_text(r.t_end)));
        line(format!("snapshot_every = {}", r.snapshot_every));
        match r.mode {
            RunMode::Intrusive => line("mode = intrusive".into()),
            RunMode::MonteCarlo { samples, seed } => {
                line("mode = mc".into());
                line(format!("mc.samples = {samples}"));
                line(format!("mc.seed = {seed}"));
            }
            RunMode::Collocation { nodes } => {
                line("mode = collocation".into());
                line(format!("collocation.nodes = {nodes}"));
            }
        }
        line(format!(
            "norm_floor = {}",
            r.norm_floor.map_or_else(|| "off".to_string(), real_text)
        ));
        line(String::new());
        line("[phi0]".into());
        match &self.phi0 {
            InitialCondition::Plane { slope, offset } => {
                line("kind = plane".into());
                line(format!("slope.x = {}", real_text(slope[0])));
                line(format!("slope.y = {}", real_text(slope[1])));
                line(format!("offset = {}", real_text(*offset)));
            }
            InitialCondition::Circle { center, radius } => {
                line("kind = circle".into());
                line(format!("center.x = {}", real_text(center[0])));
                line(format!("center.y = {}", real_text(center[1])));
                line(format!("radius = {}", real_text(*radius)));
            }
            InitialCondition::Wave {
                slope,
                amplitude,
                wavenumber,
                offset,
            } => {
                line("kind = wave".into());
                line(format!("slope.x = {}", real_text(slope[0])));
                line(format!("slope.y = {}", real_text(slope[1])));
                line(format!("amplitude = {}", real_text(*amplitude)));
                line(format!("wavenumber.x = {}", real_text(wavenumber[0])));
                line(format!("wavenumber.y = {}", real_text(wavenumber[1])));
                line(format!("offset = {}", real_text(*offset)));
            }
        }
        line(String::new());
        line("[velocity]".into());
        for (i, f) in self.velocity.iter().enumerate() {
            line(format!("mode.{i} = {}", mode_text(f)));
        }
        let q = &self.quantile;
        line(String::new());
        line("[quantile]".into());
        line(format!("epsilon = {}", real_text(q.epsilon)));
        line(format!("p = {}", real_text(q.p)));
        line(format!("n_cdf = {}", q.n_cdf));
        line(format!(
            "surrogate = {}",
            match q.surrogate {
                Surrogate::Pointwise => "pointwise",
                Surrogate::Galerkin => "galerkin",
            }
        ));
        out
    }

    /// Hex SHA-256 of [`RunConfig::to_text`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn build_basis(&self) -> CoreResult<GpcBasis> {
        build_basis(self.basis.l, self.basis.k, self.basis.nodes_per_dim)
    }

    pub fn build_grid(&self) -> CoreResult<Grid> {
        let g = &self.grid;
        if g.dims == 1 {
            Grid::new_1d(g.nx, g.dx, g.origin[0], g.boundary)
        } else {
            Grid::new_2d(g.nx, g.ny, g.dx, g.dy, g.origin, g.boundary)
        }
    }

    pub fn velocity_spec(&self) -> VelocitySpec {
        VelocitySpec::new(self.velocity.clone())
    }

    /// `P(v̂)` must be nonsingular at every cell center.
    fn check_velocity_operator(&self) -> std::result::Result<(), ConfigError> {
        let fail = |message: String| ConfigError {
            line: None,
            section: Some("velocity".into()),
            key: None,
            message,
        };
        let basis = self.build_basis().map_err(|e| fail(e.to_string()))?;
        let grid = self.build_grid().map_err(|e| fail(e.to_string()))?;
        let spec = self.velocity_spec();
        let mut worst = (f64::INFINITY, 0);
        for c in 0..grid.n_cells() {
            let p = p_matrix(&basis, &spec.eval(grid.center(c)));
            let m = p.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
            if m < worst.0 {
                worst = (m, c);
            }
        }
        if worst.0 <= VELOCITY_INVERTIBILITY_TOL {
            return Err(fail(format!(
                "velocity operator P(v) is singular at cell {} (min |eigenvalue| {:e})",
                worst.1, worst.0
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[basis]\nL = 1\nK = 1\n\n[velocity]\nmode.0 = 1.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.basis.nodes_per_dim, default_nodes_per_dim(1));
        assert_eq!(c.grid.dims, 1);
        assert_eq!(c.grid.nx, 100);
        assert_eq!(c.run.cfl, DEFAULT_CFL);
        assert_eq!(c.run.mode, RunMode::Intrusive);
        assert_eq!(c.velocity, vec![ModeFunction::Constant(1.0), ModeFunction::Constant(0.0)]);
        assert_eq!(c.quantile.surrogate, Surrogate::Pointwise);
    }

    #[test]
    fn cfl_out_of_range_names_key_and_line() {
        let e = parse_config("[run]\ncfl = 1.5\n").unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].line, Some(2));
        assert_eq!(e.0[0].key.as_deref(), Some("cfl"));
        assert!(e.to_string().contains("cfl"));
    }

    #[test]
    fn unknown_section_lists_accepted() {
        let e = parse_config("[solver]\nx = 1\n").unwrap_err();
        assert_eq!(e.0.len(), 1);
        let msg = e.to_string();
        assert!(msg.contains("line 1"));
        for s in SECTIONS {
            assert!(msg.contains(s));
        }
    }

    #[test]
    fn collects_every_error() {
        let text = "L = 2\n[grid]\nnx = -3\nfoo = 1\nnx = 4\n[run]\nform = sideways\nbroken line\n";
        let e = parse_config(text).unwrap_err();
        let lines: Vec<Option<usize>> = e.0.iter().map(|x| x.line).collect();
        assert_eq!(lines, vec![Some(1), Some(3), Some(4), Some(5), Some(7), Some(8)]);
    }

    #[test]
    fn singular_velocity_rejected() {
        let e = parse_config("[velocity]\nmode.0 = 0.0\nmode.1 = 0.0\n").unwrap_err();
        assert_eq!(e.0[0].section.as_deref(), Some("velocity"));
        assert!(e.to_string().contains("singular"));
        // K = 1 with |v_1| > |v_0| has eigenvalues v_0 ± v_1 of both signs but
        // none at zero.
        assert!(parse_config("[velocity]\nmode.0 = 0.1\nmode.1 = 0.5\n").is_ok());
        assert!(parse_config("[velocity]\nmode.0 = 0.5\nmode.1 = 0.5\n").is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let text = "[basis]\nL = 2\nK = 2\n[grid]\ndims = 2\nnx = 10\nboundary = periodic\n\
                    [run]\nmode = mc\nmc.seed = 7\nnorm_floor = 1e-8\n[phi0]\nkind = circle\nradius = 0.3\n\
                    [velocity]\nmode.0 = affine 1 0.1 0\nmode.2 = bump 0.1 0 0 0.25\n[quantile]\nsurrogate = galerkin\n";
        let a = parse_config(text).unwrap();
        let t1 = a.to_text();
        let b = parse_config(&t1).unwrap();
        assert_eq!(a, b);
        assert_eq!(t1, b.to_text());
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn bad_velocity_modes() {
        let e = parse_config("[velocity]\nmode.5 = 1\nmode.1 = affine 1 2\nmode.0 = spin\n").unwrap_err();
        assert_eq!(e.0.len(), 3);
        assert!(e.0.iter().all(|x| x.section.as_deref() == Some("velocity")));
    }
}
