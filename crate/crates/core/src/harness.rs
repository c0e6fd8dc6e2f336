//! Run configuration, initial data, the time loop and the studies behind the
//! `maxglm` command.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::diagnostics::{
    self, collocated_divergence, collocated_errors, num, staggered_divergences, staggered_divergences_at,
    staggered_errors, total_energy_collocated, total_energy_staggered, DiagnosticsSeries, ErrorTable,
    SeriesMeta, VectorField, ERROR_COMPONENTS,
};
use crate::error::{Error, Result};
use crate::grid::{snapshot_to_string, Field, Grid2D, Location};
use crate::htc::{cfl_dt, compatibility_residual, semidiscrete_rhs, ButcherTableau, CflMode, FvState, HtcStepper};
use crate::mimetic::{adjointness_defect, check_identities, random_field};
use crate::model::{assemble_matrices, EnergyKind, EnergyModel, ModelParams, State};
use crate::simm::{apply_e_operator, apply_phi_operator, simm_step, CgConfig, StaggeredState};

/// Published values the studies are compared against.
pub mod reference {
    /// Resolutions of the convergence tables.
    pub const N: [usize; 4] = [20, 40, 80, 160];

    /// Collocated scheme, columns in the order of
    /// [`crate::diagnostics::ERROR_COMPONENTS`], rows by [`N`].
    pub const HTC_ERRORS: [[f64; 7]; 4] = [
        [2.57e-2, 2.57e-2, 1.45e-1, 3.63e-2, 1.54e-1, 5.14e-2, 7.27e-2],
        [6.45e-3, 6.45e-3, 3.65e-2, 9.12e-3, 3.87e-2, 1.29e-2, 1.82e-2],
        [1.61e-3, 1.61e-3, 9.13e-3, 2.28e-3, 9.69e-3, 3.23e-3, 4.57e-3],
        [4.04e-4, 4.04e-4, 2.28e-3, 5.71e-4, 2.42e-3, 8.07e-4, 1.14e-3],
    ];

    /// Staggered scheme, same layout as [`HTC_ERRORS`].
    pub const SIMM_ERRORS: [[f64; 7]; 4] = [
        [3.06e-2, 3.06e-2, 1.73e-1, 4.33e-2, 1.84e-1, 6.12e-2, 8.65e-2],
        [7.74e-3, 7.74e-3, 4.38e-2, 1.09e-2, 4.64e-2, 1.55e-2, 2.19e-2],
        [1.94e-3, 1.94e-3, 1.10e-2, 2.74e-3, 1.16e-2, 3.88e-3, 5.49e-3],
        [4.85e-4, 4.85e-4, 2.75e-3, 6.86e-4, 2.91e-3, 9.71e-4, 1.37e-3],
    ];

    /// `(ch, div B, div E)` at t = 0.1 on 40×40 with Δt = 10⁻².
    pub const AP_DIVERGENCE: [(f64, f64, f64); 4] = [
        (1e2, 3.831380e-5, 3.831579e-5),
        (1e3, 3.569500e-6, 3.569623e-6),
        (1e4, 4.351311e-8, 4.351523e-8),
        (1e5, 4.368280e-10, 4.358525e-10),
    ];

    /// Accepted deviation factor for every tabulated value.
    pub const FACTOR: f64 = 2.0;
    /// Smallest accepted observed order in the convergence tables.
    pub const MIN_ORDER: f64 = 1.9;

    /// `true` if `got` is within a factor [`FACTOR`] of `want`.
    pub fn within_factor(got: f64, want: f64) -> bool {
        got > 0.0 && got <= FACTOR * want && got >= want / FACTOR
    }

    /// Table row for resolution `n`, if tabulated.
    pub fn row(table: &[[f64; 7]; 4], n: usize) -> Option<[f64; 7]> {
        N.iter().position(|&m| m == n).map(|k| table[k])
    }
}

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($var:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        pub enum $name { $($var),+ }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$var => $s),+ }
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($name::$var),)+
                    _ => Err(Error::InvalidParameter(format!(
                        concat!("unknown ", stringify!($name), " '{}', expected one of: {}"),
                        s,
                        [$($s),+].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(Scheme { Htc => "htc", Simm => "simm" });
keyword_enum!(InitialCondition {
    Planar => "planar",
    GaussT1 => "gauss_t1",
    GaussT2 => "gauss_t2",
    GaussAp => "gauss_ap",
});
keyword_enum!(RkMethod { Rk4 => "rk4", High => "rk_high" });
keyword_enum!(EnergyChoice { Quadratic => "quadratic", Exponential => "exponential" });
keyword_enum!(CflChoice { Light => "light", Strict => "strict" });

impl RkMethod {
    pub fn tableau(self) -> ButcherTableau {
        match self {
            RkMethod::Rk4 => ButcherTableau::rk4(),
            RkMethod::High => ButcherTableau::fehlberg8(),
        }
    }
}

impl From<EnergyChoice> for EnergyKind {
    fn from(e: EnergyChoice) -> Self {
        match e {
            EnergyChoice::Quadratic => EnergyKind::Quadratic,
            EnergyChoice::Exponential => EnergyKind::Exponential,
        }
    }
}

impl From<CflChoice> for CflMode {
    fn from(c: CflChoice) -> Self {
        match c {
            CflChoice::Light => CflMode::LightSpeed,
            CflChoice::Strict => CflMode::Strict,
        }
    }
}

/// Everything that defines a run. Built from `key = value` text.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub energy: EnergyChoice,
    pub c0: f64,
    pub ch: f64,
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Exactly one of `cfl` and `dt` is set after [`RunConfig::validate`].
    pub cfl: Option<f64>,
    pub dt: Option<f64>,
    pub cfl_mode: CflChoice,
    pub t_end: f64,
    pub ic: InitialCondition,
    /// Gaussian half width.
    pub sigma: f64,
    pub rk: RkMethod,
    pub cg_tol: f64,
    pub cg_maxiter: Option<usize>,
    pub output_dir: Option<PathBuf>,
    /// Write field snapshots every this many steps; 0 disables them.
    pub snapshot_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: Scheme::Htc,
            energy: EnergyChoice::Quadratic,
            c0: 1.0,
            ch: 1.0,
            nx: 20,
            ny: 20,
            x_min: -1.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
            cfl: None,
            dt: None,
            cfl_mode: CflChoice::Light,
            t_end: std::f64::consts::SQRT_2,
            ic: InitialCondition::Planar,
            sigma: 0.2,
            rk: RkMethod::High,
            cg_tol: 1e-12,
            cg_maxiter: None,
            output_dir: None,
            snapshot_every: 0,
        }
    }
}

/// Keys accepted in config files and overrides.
pub const CONFIG_KEYS: [&str; 22] = [
    "scheme",
    "energy",
    "c0",
    "ch",
    "nx",
    "ny",
    "x_min",
    "x_max",
    "y_min",
    "y_max",
    "cfl",
    "dt",
    "cfl_mode",
    "t_end",
    "ic",
    "sigma",
    "rk",
    "cg_tol",
    "cg_maxiter",
    "output_dir",
    "snapshot_every",
    "n",
];

/// Reals may be written as `sqrt(x)`.
fn parse_real(v: &str) -> Result<f64> {
    let v = v.trim();
    if let Some(inner) = v.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        return Ok(parse_real(inner)?.sqrt());
    }
    v.parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("'{v}' is not a number")))
}

fn parse_count(v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidParameter(format!("'{v}' is not a nonnegative integer")))
}

impl RunConfig {
    /// Sets one key. `dt` and `cfl` replace each other so that an override
    /// can switch the time step rule.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "scheme" => self.scheme = value.parse()?,
            "energy" => self.energy = value.parse()?,
            "c0" => self.c0 = parse_real(value)?,
            "ch" => self.ch = parse_real(value)?,
            "nx" => self.nx = parse_count(value)?,
            "ny" => self.ny = parse_count(value)?,
            "n" => {
                self.nx = parse_count(value)?;
                self.ny = self.nx;
            }
            "x_min" => self.x_min = parse_real(value)?,
            "x_max" => self.x_max = parse_real(value)?,
            "y_min" => self.y_min = parse_real(value)?,
            "y_max" => self.y_max = parse_real(value)?,
            "cfl" => {
                self.cfl = Some(parse_real(value)?);
                self.dt = None;
            }
            "dt" => {
                self.dt = Some(parse_real(value)?);
                self.cfl = None;
            }
            "cfl_mode" => self.cfl_mode = value.parse()?,
            "t_end" => self.t_end = parse_real(value)?,
            "ic" => self.ic = value.parse()?,
            "sigma" => self.sigma = parse_real(value)?,
            "rk" => self.rk = value.parse()?,
            "cg_tol" => self.cg_tol = parse_real(value)?,
            "cg_maxiter" => {
                self.cg_maxiter = match value {
                    "" | "auto" => None,
                    v => Some(parse_count(v)?),
                }
            }
            "output_dir" => self.output_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            "snapshot_every" => self.snapshot_every = parse_count(value)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown key '{other}'; known keys: {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Setting both `cfl`
    /// and `dt` in one file is an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let (mut saw_cfl, mut saw_dt) = (false, false);
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |message: String| Error::Config { line: k + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            saw_cfl |= key == "cfl";
            saw_dt |= key == "dt";
            if saw_cfl && saw_dt {
                return Err(at("set either cfl or dt, not both".into()));
            }
            cfg.set(key, value).map_err(|e| at(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies `key=value` strings on top of the current values.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("override '{o}' is not key=value")))?;
            self.set(k, v)?;
        }
        self.validate()
    }

    /// Fills the default `cfl = 0.9` when no time step rule is given and
    /// checks every field.
    pub fn validate(&mut self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match (self.cfl, self.dt) {
            (None, None) => self.cfl = Some(0.9),
            (Some(_), Some(_)) => return bad("set either cfl or dt, not both".into()),
            (Some(c), None) if !(c > 0.0 && c <= 1.0) => return bad(format!("cfl must lie in (0, 1], got {c}")),
            (None, Some(d)) if !(d > 0.0 && d.is_finite()) => return bad(format!("dt must be positive, got {d}")),
            _ => {}
        }
        ModelParams::new(self.c0, self.ch)?;
        Grid2D::new(self.nx, self.ny, (self.x_min, self.x_max), (self.y_min, self.y_max))?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.scheme == Scheme::Simm && self.energy != EnergyChoice::Quadratic {
            return bad("the staggered scheme supports only the quadratic energy".into());
        }
        CgConfig {
            tol: self.cg_tol,
            max_iter: self.cg_maxiter,
        }
        .validate()
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.nx, self.ny, (self.x_min, self.x_max), (self.y_min, self.y_max))
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.c0, self.ch)
    }

    pub fn cg(&self) -> CgConfig {
        CgConfig {
            tol: self.cg_tol,
            max_iter: self.cg_maxiter,
        }
    }

    /// Nominal time step from `dt` or the CFL rule.
    pub fn time_step(&self) -> Result<f64> {
        match (self.dt, self.cfl) {
            (Some(dt), _) => Ok(dt),
            (None, Some(c)) => cfl_dt(&self.grid()?, self.params()?, c, self.cfl_mode.into()),
            (None, None) => cfl_dt(&self.grid()?, self.params()?, 0.9, self.cfl_mode.into()),
        }
    }

    /// Canonical `key = value` text: every key, fixed order, full precision.
    pub fn to_config_string(&self) -> String {
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        let real = |v: f64| format!("{v:?}");
        m.insert("scheme", self.scheme.to_string());
        m.insert("energy", self.energy.to_string());
        m.insert("c0", real(self.c0));
        m.insert("ch", real(self.ch));
        m.insert("nx", self.nx.to_string());
        m.insert("ny", self.ny.to_string());
        m.insert("x_min", real(self.x_min));
        m.insert("x_max", real(self.x_max));
        m.insert("y_min", real(self.y_min));
        m.insert("y_max", real(self.y_max));
        if let Some(c) = self.cfl {
            m.insert("cfl", real(c));
        }
        if let Some(d) = self.dt {
            m.insert("dt", real(d));
        }
        m.insert("cfl_mode", self.cfl_mode.to_string());
        m.insert("t_end", real(self.t_end));
        m.insert("ic", self.ic.to_string());
        m.insert("sigma", real(self.sigma));
        m.insert("rk", self.rk.to_string());
        m.insert("cg_tol", real(self.cg_tol));
        m.insert("cg_maxiter", self.cg_maxiter.map_or("auto".into(), |n| n.to_string()));
        if let Some(d) = &self.output_dir {
            m.insert("output_dir", d.display().to_string());
        }
        m.insert("snapshot_every", self.snapshot_every.to_string());
        m.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k} = {v}");
            s
        })
    }

    /// SHA-256 of the canonical text, without the output directory so that
    /// the same physics hashes equally wherever it is written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let digest = Sha256::digest(c.to_config_string().as_bytes());
        format!("{digest:x}")
    }
}

/// Planar wave along (1, 1): every field is its amplitude times `sin(π(x − y))`.
pub fn ic_planar(x: f64, y: f64) -> State {
    let b = std::f64::consts::FRAC_1_SQRT_2;
    let s = (std::f64::consts::PI * (x - y)).sin();
    State::new(
        [0.25 * b * s, -0.25 * b * s, s],
        0.25 * s,
        [1.5 * b * s, 0.5 * b * s, 0.0],
        0.5 * s,
    )
}

/// Amplitudes `(B₀ = E₀, φ₀ = ψ₀)` of the Gaussian variants.
pub fn gaussian_amplitudes(ic: InitialCondition) -> Result<([f64; 3], f64)> {
    match ic {
        InitialCondition::GaussT1 => Ok(([0.0, 0.0, 1e-2], 0.0)),
        InitialCondition::GaussT2 => Ok(([0.25e-2, 0.0, 1e-2], 0.5e-2)),
        InitialCondition::GaussAp => Ok(([1e-4, 0.0, 1e-2], 0.0)),
        InitialCondition::Planar => Err(Error::InvalidParameter("planar is not a Gaussian variant".into())),
    }
}

/// Gaussian pulse `exp(−½|x|²/σ²)` centered at the origin, scaled by the
/// amplitudes of `variant`.
pub fn ic_gaussian(variant: InitialCondition, sigma: f64) -> Result<impl Fn(f64, f64) -> State> {
    let (v, s) = gaussian_amplitudes(variant)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let k = 0.5 / (sigma * sigma);
    Ok(move |x: f64, y: f64| {
        let g = (-k * (x * x + y * y)).exp();
        State::new([v[0] * g, v[1] * g, v[2] * g], s * g, [v[0] * g, v[1] * g, v[2] * g], s * g)
    })
}

/// Initial condition of a config as a point function.
pub fn initial_condition(cfg: &RunConfig) -> Result<Box<dyn Fn(f64, f64) -> State>> {
    match cfg.ic {
        InitialCondition::Planar => Ok(Box::new(ic_planar)),
        v => Ok(Box::new(ic_gaussian(v, cfg.sigma)?)),
    }
}

/// Solver state of either scheme.
#[derive(Clone, Debug, PartialEq)]
pub enum Solution {
    Htc(FvState),
    Simm(StaggeredState),
}

impl Solution {
    pub fn time(&self) -> f64 {
        match self {
            Solution::Htc(s) => s.time,
            Solution::Simm(s) => s.time,
        }
    }

    pub fn energy(&self) -> f64 {
        match self {
            Solution::Htc(s) => total_energy_collocated(s),
            Solution::Simm(s) => total_energy_staggered(s),
        }
    }

    /// `(name, field)` pairs for snapshots.
    pub fn fields(&self) -> Vec<(&'static str, Field)> {
        match self {
            Solution::Htc(s) => {
                let mut f = Field::zeros(s.grid, Location::Cell, 8);
                for (chunk, q) in f.data.chunks_exact_mut(8).zip(&s.cells) {
                    chunk.copy_from_slice(&q.0);
                }
                vec![("q", f)]
            }
            Solution::Simm(s) => vec![
                ("B", s.b.clone()),
                ("psi", s.psi.clone()),
                ("E", s.e.clone()),
                ("phi", s.phi.clone()),
            ],
        }
    }
}

/// Initial solution of a config at t = 0.
pub fn initial_solution(cfg: &RunConfig) -> Result<Solution> {
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let q = initial_condition(cfg)?;
    Ok(match cfg.scheme {
        Scheme::Htc => Solution::Htc(FvState::sample(grid, EnergyModel::new(cfg.energy.into(), params), q)),
        Scheme::Simm => Solution::Simm(StaggeredState::sample(grid, params, q)),
    })
}

/// Step sizes that land exactly on `t_end`: full steps of `dt`, then one
/// shorter step for any remainder larger than a rounding error.
pub fn step_schedule(t_end: f64, dt: f64) -> Vec<f64> {
    if t_end <= 0.0 {
        return Vec::new();
    }
    let n = (t_end / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut steps = vec![dt; n];
    steps[n - 1] = t_end - (n - 1) as f64 * dt;
    steps
}

/// Result of [`run`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub series: DiagnosticsSeries,
    pub solution: Solution,
    pub steps: usize,
    /// Largest CG iteration count of any solve (staggered scheme only).
    pub max_cg_iterations: usize,
    /// Half-time divergences of the last step (staggered scheme only).
    pub last_half_divergence: Option<(f64, f64)>,
    /// Files written, if an output directory was set.
    pub files: Vec<PathBuf>,
}

/// Runs a config to `t_end`, recording energy and divergence after every
/// step. Writes CSVs, snapshots and `summary.txt` when `output_dir` is set.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let dt = cfg.time_step()?;
    let schedule = step_schedule(cfg.t_end, dt);
    let mut stepper = HtcStepper::new(cfg.rk.tableau());
    let cg = cfg.cg();
    let mut series = DiagnosticsSeries::new(SeriesMeta {
        scheme: cfg.scheme.to_string(),
        nx: cfg.nx,
        ny: cfg.ny,
        c0: cfg.c0,
        ch: cfg.ch,
        config_hash: cfg.hash(),
    });
    let mut sol = initial_solution(&cfg)?;
    let (db, de) = divergences_now(&sol);
    series.push(0.0, sol.energy(), db, de)?;

    let mut files = Vec::new();
    let out = cfg.output_dir.clone();
    if let Some(dir) = &out {
        if cfg.snapshot_every > 0 {
            files.extend(write_snapshots(dir, 0, &sol)?);
        }
    }

    let mut max_cg = 0;
    let mut last_half = None;
    for (k, &h) in schedule.iter().enumerate() {
        let t_new = if k + 1 == schedule.len() { cfg.t_end } else { (k + 1) as f64 * dt };
        let fail = |e: Error| Error::Step {
            step: k + 1,
            time: sol.time(),
            source: Box::new(e),
        };
        let (next, div) = match &sol {
            Solution::Htc(s) => {
                let mut n = s.clone();
                stepper.step(&mut n, h);
                n.time = t_new;
                if !n.is_finite() {
                    return Err(fail(Error::InvalidParameter("solution is no longer finite".into())));
                }
                let d = (collocated_divergence(&n, VectorField::B), collocated_divergence(&n, VectorField::E));
                (Solution::Htc(n), d)
            }
            Solution::Simm(s) => {
                let (mut n, rep) = simm_step(s, h, &cg).map_err(fail)?;
                n.time = t_new;
                max_cg = max_cg.max(rep.phi.iterations).max(rep.e.iterations);
                let d = staggered_divergences(s, &n);
                last_half = Some(d);
                (Solution::Simm(n), d)
            }
        };
        sol = next;
        series.push(t_new, sol.energy(), div.0, div.1)?;
        if let Some(dir) = &out {
            if cfg.snapshot_every > 0 && ((k + 1) % cfg.snapshot_every == 0 || k + 1 == schedule.len()) {
                files.extend(write_snapshots(dir, k + 1, &sol)?);
            }
        }
    }

    let mut output = RunOutput {
        series,
        solution: sol,
        steps: schedule.len(),
        max_cg_iterations: max_cg,
        last_half_divergence: last_half,
        files,
    };
    if let Some(dir) = &out {
        output.series.write(dir)?;
        output.files.push(dir.join("energy.csv"));
        output.files.push(dir.join("divergence.csv"));
        let summary = dir.join("summary.txt");
        diagnostics::write_file(&summary, &run_summary(&cfg, &output))?;
        output.files.push(summary);
        let config = dir.join("config.txt");
        diagnostics::write_file(&config, &cfg.to_config_string())?;
        output.files.push(config);
    }
    Ok(output)
}

fn divergences_now(sol: &Solution) -> (f64, f64) {
    match sol {
        Solution::Htc(s) => (collocated_divergence(s, VectorField::B), collocated_divergence(s, VectorField::E)),
        Solution::Simm(s) => staggered_divergences_at(s),
    }
}

fn write_snapshots(dir: &Path, step: usize, sol: &Solution) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (name, f) in sol.fields() {
        let path = dir.join(format!("snapshot_{step:06}_{name}.txt"));
        diagnostics::write_file(&path, &snapshot_to_string(&f, sol.time()))?;
        out.push(path);
    }
    Ok(out)
}

/// Human-readable account of a run.
pub fn run_summary(cfg: &RunConfig, out: &RunOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scheme        {}", cfg.scheme);
    let _ = writeln!(s, "grid          {}x{}", cfg.nx, cfg.ny);
    let _ = writeln!(s, "ic            {}", cfg.ic);
    let _ = writeln!(s, "c0, ch        {}, {}", cfg.c0, cfg.ch);
    let _ = writeln!(s, "t_end         {}", cfg.t_end);
    let _ = writeln!(s, "steps         {}", out.steps);
    let _ = writeln!(s, "config hash   {}", out.series.meta.config_hash);
    let _ = writeln!(s, "max |rel energy error|  {}", num(out.series.max_abs_rel_err()));
    let _ = writeln!(s, "max div B               {}", num(out.series.max_div_b()));
    let _ = writeln!(s, "max div E               {}", num(out.series.max_div_e()));
    if cfg.scheme == Scheme::Simm {
        let _ = writeln!(s, "max CG iterations       {}", out.max_cg_iterations);
    }
    s
}

/// One pass/fail line of a study or check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 1e-13`.
    pub rule: String,
    pub pass: bool,
}

impl CheckEntry {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        CheckEntry {
            name: name.into(),
            value,
            rule: format!("<= {limit:e}"),
            pass: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        CheckEntry {
            name: name.into(),
            value,
            rule: format!(">= {limit}"),
            pass: value >= limit,
        }
    }

    pub fn near(name: impl Into<String>, value: f64, want: f64, factor: f64) -> Self {
        CheckEntry {
            name: name.into(),
            value,
            rule: format!("within x{factor} of {want:e}"),
            pass: value > 0.0 && value <= factor * want && value >= want / factor,
        }
    }
}

impl fmt::Display for CheckEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<44} {:>24}  ({})", self.name, format!("{:.6e}", self.value), self.rule)
    }
}

/// A list of checks with an overall verdict.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<CheckEntry>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn push(&mut self, e: CheckEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        let failed = self.entries.iter().filter(|e| !e.pass).count();
        write!(f, "{} checks, {} failed", self.entries.len(), failed)
    }
}

/// Planar-wave convergence study.
#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub scheme: Scheme,
    pub table: ErrorTable,
    pub report: Report,
}

/// Runs the planar wave to `t = √2` with CFL 0.9 on `N×N` grids and compares
/// the final state with the initial one.
pub fn study_convergence(scheme: Scheme, ns: &[usize], rk: RkMethod, out: Option<&Path>) -> Result<ConvergenceStudy> {
    if ns.is_empty() {
        return Err(Error::InvalidParameter("no resolutions given".into()));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let cfg = RunConfig {
            scheme,
            nx: n,
            ny: n,
            cfl: Some(0.9),
            rk,
            ic: InitialCondition::Planar,
            t_end: std::f64::consts::SQRT_2,
            ..RunConfig::default()
        };
        let init = initial_solution(&cfg)?;
        let done = run(&cfg)?;
        let errs = match (&done.solution, &init) {
            (Solution::Htc(s), Solution::Htc(r)) => collocated_errors(s, r)?,
            (Solution::Simm(s), Solution::Simm(r)) => staggered_errors(s, r)?,
            _ => unreachable!("scheme fixed by the config"),
        };
        rows.push((n, errs));
    }
    let table = ErrorTable {
        components: ERROR_COMPONENTS.iter().map(|s| s.to_string()).collect(),
        rows,
    };
    let reference_table = match scheme {
        Scheme::Htc => &reference::HTC_ERRORS,
        Scheme::Simm => &reference::SIMM_ERRORS,
    };
    let mut report = Report::default();
    for (n, errs) in &table.rows {
        if let Some(want) = reference::row(reference_table, *n) {
            for (k, name) in ERROR_COMPONENTS.iter().enumerate() {
                report.push(CheckEntry::near(format!("{scheme} N={n} {name}"), errs[k], want[k], reference::FACTOR));
            }
        }
    }
    if table.rows.len() > 1 {
        for (k, orders) in table.orders()?.iter().enumerate() {
            for (w, o) in orders.iter().enumerate() {
                let (n1, n2) = (table.rows[w].0, table.rows[w + 1].0);
                report.push(CheckEntry::at_least(
                    format!("{scheme} order {} {n1}->{n2}", ERROR_COMPONENTS[k]),
                    *o,
                    reference::MIN_ORDER,
                ));
            }
        }
    }
    if let Some(dir) = out {
        table.write(&dir.join("errors.csv"))?;
        diagnostics::write_file(&dir.join("summary.txt"), &format!("{report}\n"))?;
    }
    Ok(ConvergenceStudy { scheme, table, report })
}

/// One row of the asymptotic-preserving study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApRow {
    pub ch: f64,
    pub div_b: f64,
    pub div_e: f64,
}

#[derive(Clone, Debug)]
pub struct ApStudy {
    pub rows: Vec<ApRow>,
    /// Orders in ε = c0/ch between consecutive rows, `(div B, div E)`.
    pub orders: Vec<(f64, f64)>,
    pub report: Report,
}

impl ApStudy {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("ch,eps,divB,divE,order_divB,order_divE\n");
        for (k, r) in self.rows.iter().enumerate() {
            let _ = write!(s, "{},{},{},{}", num(r.ch), num(1.0 / r.ch), num(r.div_b), num(r.div_e));
            match k.checked_sub(1).map(|i| self.orders[i]) {
                Some((a, b)) => {
                    let _ = writeln!(s, ",{},{}", num(a), num(b));
                }
                None => s.push_str(",,\n"),
            }
        }
        s
    }
}

/// Staggered runs on 40×40 to t = 0.1 with Δt = 10⁻², reporting the
/// half-time divergences of the last step for each cleaning speed.
pub fn study_ap(chs: &[f64], out: Option<&Path>) -> Result<ApStudy> {
    let mut rows = Vec::new();
    for &ch in chs {
        let cfg = RunConfig {
            scheme: Scheme::Simm,
            ch,
            nx: 40,
            ny: 40,
            dt: Some(1e-2),
            t_end: 0.1,
            ic: InitialCondition::GaussAp,
            ..RunConfig::default()
        };
        let done = run(&cfg)?;
        let (div_b, div_e) = done
            .last_half_divergence
            .ok_or_else(|| Error::InvalidParameter("AP study needs at least one step".into()))?;
        rows.push(ApRow { ch, div_b, div_e });
    }
    let mut orders = Vec::new();
    for w in rows.windows(2) {
        let r = (w[1].ch / w[0].ch).ln();
        orders.push(((w[0].div_b / w[1].div_b).ln() / r, (w[0].div_e / w[1].div_e).ln() / r));
    }
    let mut report = Report::default();
    for r in &rows {
        if let Some(&(_, b, e)) = reference::AP_DIVERGENCE.iter().find(|(c, _, _)| *c == r.ch) {
            report.push(CheckEntry::near(format!("ap ch={:e} divB", r.ch), r.div_b, b, reference::FACTOR));
            report.push(CheckEntry::near(format!("ap ch={:e} divE", r.ch), r.div_e, e, reference::FACTOR));
        }
    }
    for (w, o) in rows.windows(2).zip(&orders) {
        if w[0].ch == 1e4 && w[1].ch == 1e5 {
            for (name, v) in [("divB", o.0), ("divE", o.1)] {
                report.push(CheckEntry {
                    name: format!("ap order {name} 1e4->1e5"),
                    value: v,
                    rule: "2.0 +- 0.1".into(),
                    pass: (v - 2.0).abs() <= 0.1,
                });
            }
        }
    }
    let study = ApStudy { rows, orders, report };
    if let Some(dir) = out {
        diagnostics::write_file(&dir.join("ap.csv"), &study.to_csv())?;
        diagnostics::write_file(&dir.join("summary.txt"), &format!("{}\n", study.report))?;
    }
    Ok(study)
}

keyword_enum!(
    /// Property suites of [`check`].
    Suite { All => "all", Ops => "ops", Flux => "flux", Matrices => "matrices" }
);

/// Sizes of the randomized checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckSizes {
    pub fields: usize,
    pub flux_pairs: usize,
    pub seed: u64,
}

impl Default for CheckSizes {
    fn default() -> Self {
        CheckSizes {
            fields: 100,
            flux_pairs: 10_000,
            seed: 20240101,
        }
    }
}

fn random_state(rng: &mut ChaCha8Rng, scale: f64) -> State {
    let mut s = State::ZERO;
    s.0.iter_mut().for_each(|v| *v = scale * rng.gen_range(-1.0..1.0));
    s
}

/// Mimetic identities on 8×8, 33×17 and 64×64, and summation by parts.
pub fn check_ops(sizes: CheckSizes) -> Result<Report> {
    let mut r = Report::default();
    for (nx, ny) in [(8, 8), (33, 17), (64, 64)] {
        let g = Grid2D::new(nx, ny, (-1.0, 1.0), (-1.0, 1.0))?;
        r.push(CheckEntry::at_most(
            format!("identities curl.grad, div.curl {nx}x{ny}"),
            check_identities(g, sizes.fields, sizes.seed),
            1e-13,
        ));
    }
    let g = Grid2D::new(32, 24, (-1.0, 1.0), (0.0, 1.5))?;
    r.push(CheckEntry::at_most(
        "adjointness grad/div (relative) 32x24",
        adjointness_defect(g, sizes.fields, sizes.seed),
        1e-12,
    ));
    Ok(r)
}

/// Flux compatibility and semi-discrete energy production for both energies.
pub fn check_flux(sizes: CheckSizes) -> Result<Report> {
    let mut r = Report::default();
    let params = ModelParams::new(1.0, 1.0)?;
    for kind in [EnergyKind::Quadratic, EnergyKind::Exponential] {
        let m = EnergyModel::new(kind, params);
        let mut rng = ChaCha8Rng::seed_from_u64(sizes.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..sizes.flux_pairs {
            let (a, b) = (random_state(&mut rng, 1.0), random_state(&mut rng, 1.0));
            for n in [[1.0, 0.0], [0.0, 1.0]] {
                worst = worst.max(compatibility_residual(&a, &b, n, &m).abs());
            }
        }
        r.push(CheckEntry::at_most(format!("flux compatibility {kind:?}"), worst, 1e-13));

        let g = Grid2D::square(16)?;
        let mut worst: f64 = 0.0;
        for _ in 0..sizes.fields {
            let cells = (0..g.points()).map(|_| random_state(&mut rng, 1.0)).collect();
            let s = FvState::new(g, m, cells);
            let rhs = semidiscrete_rhs(&s);
            let prod: f64 = s
                .cells
                .iter()
                .zip(&rhs)
                .map(|(q, d)| g.cell_area() * m.main_field(q).dot(d))
                .sum();
            worst = worst.max(prod.abs());
        }
        r.push(CheckEntry::at_most(format!("energy production {kind:?} 16x16"), worst, 1e-12));
    }
    Ok(r)
}

/// Symmetry and eigenstructure of the flux matrices, and SPD of the two
/// implicit operators.
pub fn check_matrices(sizes: CheckSizes) -> Result<Report> {
    let mut r = Report::default();
    for (c0, ch) in [(1.0, 1.0), (1.0, 2.0), (2.0, 5.0), (1.0, 10.0)] {
        let m = assemble_matrices(ModelParams::new(c0, ch)?);
        r.push(CheckEntry::at_most(format!("H symmetry c0={c0} ch={ch}"), m.symmetry_defect(), 0.0));
        r.push(CheckEntry::at_most(format!("H1 R - R Lambda c0={c0} ch={ch}"), m.eigen_residual(), 1e-12));
    }
    let g = Grid2D::square(16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sizes.seed);
    for (dt, ch) in [(1e-2, 1e2), (1e-2, 1e5)] {
        let p = ModelParams::new(1.0, ch)?;
        for (name, ncomp) in [("phi", 1), ("E", 3)] {
            let apply = |f: &Field| match ncomp {
                1 => apply_phi_operator(p, dt, f),
                _ => apply_e_operator(p, dt, f),
            };
            let (mut sym, mut coercive): (f64, f64) = (0.0, f64::INFINITY);
            for _ in 0..sizes.fields {
                let u = random_field(g, Location::Vertex, ncomp, &mut rng);
                let v = random_field(g, Location::Vertex, ncomp, &mut rng);
                let (au, av) = (apply(&u), apply(&v));
                let (a, b) = (v.dot(&au), u.dot(&av));
                let scale = (v.l2_norm() * au.l2_norm()).max(u.l2_norm() * av.l2_norm());
                sym = sym.max((a - b).abs() / scale);
                coercive = coercive.min(u.dot(&au) / u.dot(&u));
            }
            r.push(CheckEntry::at_most(format!("{name} operator symmetry (|<v,Au>-<Av,u>| / |v||Au|) dt={dt} ch={ch:e}"), sym, 1e-13));
            r.push(CheckEntry::at_least(format!("{name} operator <u,Au>/<u,u> dt={dt} ch={ch:e}"), coercive, 1.0));
        }
    }
    Ok(r)
}

/// Runs the selected property suites.
pub fn check(suite: Suite, sizes: CheckSizes) -> Result<Report> {
    let mut r = Report::default();
    if matches!(suite, Suite::All | Suite::Ops) {
        r.extend(check_ops(sizes)?);
    }
    if matches!(suite, Suite::All | Suite::Flux) {
        r.extend(check_flux(sizes)?);
    }
    if matches!(suite, Suite::All | Suite::Matrices) {
        r.extend(check_matrices(sizes)?);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let text = "# T2 energy run\nscheme = simm\nnx = 50 # cells\nny = 50\nic = gauss_t2\nt_end = 10\n";
        let mut c = RunConfig::parse(text).unwrap();
        assert_eq!(c.scheme, Scheme::Simm);
        assert_eq!((c.nx, c.ny), (50, 50));
        assert_eq!(c.cfl, Some(0.9));
        c.apply_overrides(&["dt=0.01", "ch = 100"]).unwrap();
        assert_eq!((c.cfl, c.dt, c.ch), (None, Some(0.01), 100.0));
        assert!(RunConfig::parse("t_end = sqrt(2)").unwrap().t_end == 2f64.sqrt());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match RunConfig::parse("nx = 10\nbogus = 1\n") {
            Err(Error::Config { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::parse("cfl = 0.5\ndt = 0.1"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(RunConfig::parse("nx 10"), Err(Error::Config { line: 1, .. })));
        assert!(RunConfig::parse("scheme = simm\nenergy = exponential").is_err());
        assert!(RunConfig::parse("cfl = 1.5").is_err());
        assert!(RunConfig::parse("ic = vortex").is_err());
    }

    #[test]
    fn config_text_round_trips() {
        let mut c = RunConfig::parse("scheme = simm\nch = 1e3\ndt = 0.01\nic = gauss_ap\nnx = 40\nny = 40").unwrap();
        c.validate().unwrap();
        let back = RunConfig::parse(&c.to_config_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let mut d = c.clone();
        d.ch = 1e4;
        assert_ne!(d.hash(), c.hash());
        d = c.clone();
        d.output_dir = Some("elsewhere".into());
        assert_eq!(d.hash(), c.hash());
    }

    #[test]
    fn planar_examples() {
        assert_eq!(ic_planar(0.3, 0.3), State::ZERO);
        let q = ic_planar(0.5, 0.0);
        assert!((q.b()[2] - 1.0).abs() < 1e-15);
        let b = 2f64.sqrt() / 2.0;
        assert!((q.e()[0] - 1.5 * b).abs() < 1e-15);
        assert!((q.psi() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_examples() {
        let t1 = ic_gaussian(InitialCondition::GaussT1, 0.2).unwrap();
        assert_eq!(t1(0.0, 0.0), State::new([0.0, 0.0, 1e-2], 0.0, [0.0, 0.0, 1e-2], 0.0));
        assert!(t1(1.0, 1.0).max_abs() < 1e-12);
        let t2 = ic_gaussian(InitialCondition::GaussT2, 0.2).unwrap();
        let q = t2(0.2, 0.0);
        let g = (-0.5f64).exp();
        assert!((q.phi() - 0.5e-2 * g).abs() < 1e-17);
        assert!((q.b()[0] - 0.25e-2 * g).abs() < 1e-17);
        assert!(ic_gaussian(InitialCondition::Planar, 0.2).is_err());
        assert!(ic_gaussian(InitialCondition::GaussAp, 0.0).is_err());
    }

    #[test]
    fn schedule_lands_on_t_end() {
        let s = step_schedule(0.1, 0.01);
        assert_eq!(s.len(), 10);
        assert!((s.iter().sum::<f64>() - 0.1).abs() < 1e-15);
        let s = step_schedule(2f64.sqrt(), 0.09);
        assert_eq!(s.len(), 16);
        assert!(s[15] > 0.0 && s[15] < 0.09);
        assert!(step_schedule(0.0, 0.1).is_empty());
    }

    #[test]
    fn zero_length_run_has_one_row() {
        let cfg = RunConfig {
            t_end: 0.0,
            ..RunConfig::default()
        };
        let out = run(&cfg).unwrap();
        assert_eq!(out.series.rows.len(), 1);
        assert_eq!(out.steps, 0);
        assert_eq!(out.series.rows[0].rel_err, 0.0);
    }

    #[test]
    fn runs_are_deterministic() {
        for scheme in [Scheme::Htc, Scheme::Simm] {
            let cfg = RunConfig {
                scheme,
                nx: 12,
                ny: 10,
                ic: InitialCondition::GaussT2,
                t_end: 0.3,
                rk: RkMethod::Rk4,
                ..RunConfig::default()
            };
            let a = run(&cfg).unwrap();
            let b = run(&cfg).unwrap();
            assert_eq!(a.series.energy_csv(), b.series.energy_csv());
            assert_eq!(a.series.divergence_csv(), b.series.divergence_csv());
            assert_eq!(a.solution, b.solution);
            assert!((a.solution.time() - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn reference_tables_are_consistent() {
        for table in [&reference::HTC_ERRORS, &reference::SIMM_ERRORS] {
            for row in table {
                assert_eq!(row[0], row[1]);
            }
        }
        assert!(reference::within_factor(3.0, 2.0));
        assert!(!reference::within_factor(4.1, 2.0));
        assert!(!reference::within_factor(0.9, 2.0));
    }

    #[test]
    fn check_entries_format() {
        let e = CheckEntry::at_most("x", 1e-14, 1e-13);
        assert!(e.pass && e.to_string().starts_with("PASS"));
        let e = CheckEntry::near("y", 5.0, 2.0, 2.0);
        assert!(!e.pass && e.to_string().starts_with("FAIL"));
    }
}
