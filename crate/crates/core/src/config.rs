//! Scenario configuration as flat `key = value` text with dotted keys.
//!
//! Every key the solver reads is written back by [`ScenarioConfig::to_kv_string`],
//! so a run manifest doubles as a config file that reproduces the run.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::coords::SupportStrip;
use crate::diagnostics::FrontParams;
use crate::error::{Error, Result};
use crate::fields::{BumpProfile, FieldKind, InitialData, Profile};
use crate::quadrature::{Discretization, Grid1D, Kernel, QuadratureRule, Weight};

/// Serialize a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Euler,
    Boussinesq,
    Custom,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Euler => "euler",
            Scenario::Boussinesq => "boussinesq",
            Scenario::Custom => "custom",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "euler" => Ok(Scenario::Euler),
            "boussinesq" => Ok(Scenario::Boussinesq),
            "custom" => Ok(Scenario::Custom),
            other => Err(format!("unknown scenario `{other}` (expected euler | boussinesq | custom)")),
        }
    }
}

/// `amplitude * bump((x1 - c1)/r1) * bump((x2 - c2)/r2)`; amplitude 0 is the zero field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileParams {
    pub amplitude: f64,
    pub x1_center: f64,
    pub x1_radius: f64,
    pub x2_center: f64,
    pub x2_radius: f64,
}

impl ProfileParams {
    fn standard(amplitude: f64) -> Self {
        Self { amplitude, x1_center: 2.0, x1_radius: 1.0, x2_center: 0.0, x2_radius: 2.0 }
    }

    pub fn profile(&self) -> Profile {
        if self.amplitude == 0.0 {
            Profile::Zero
        } else {
            Profile::Product {
                x1: BumpProfile::new(self.x1_center, self.x1_radius, self.amplitude),
                x2: BumpProfile::new(self.x2_center, self.x2_radius, 1.0),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataParams {
    pub omega0: ProfileParams,
    pub rho0: ProfileParams,
    pub c_rho: Option<f64>,
    pub c_omega: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridParams {
    pub z_min: f64,
    /// `None` means one unit right of the support edge.
    pub z_max: Option<f64>,
    pub n_z1: usize,
    pub n_u: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorParams {
    pub tol: f64,
    pub dt_min: f64,
    pub dt_init: f64,
    pub phi_threshold: f64,
    pub t_end: f64,
    /// Stop once the blow-up front is within this many cells of the left edge.
    pub front_edge_cells: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingParams {
    /// Uniform sample spacing; steps are shortened to land on it. 0 disables.
    pub dt: f64,
    pub every_step: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardParams {
    pub n_t: usize,
    pub max_iter: usize,
    pub gap_tol: f64,
    pub ceiling: f64,
    pub t_window: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineParams {
    pub levels: Vec<u32>,
    pub window_end: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputParams {
    pub dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    pub snapshot_z1_stride: usize,
    pub snapshot_n_z2: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub kernel: Kernel,
    pub data: DataParams,
    pub grid: GridParams,
    pub integrator: IntegratorParams,
    pub sampling: SamplingParams,
    pub front_b: f64,
    pub picard: PicardParams,
    pub refine: RefineParams,
    pub output: OutputParams,
}

impl ScenarioConfig {
    pub fn default_for(scenario: Scenario) -> Self {
        let mut cfg = Self {
            scenario,
            kernel: Kernel::Sech,
            data: DataParams {
                omega0: ProfileParams::standard(0.0),
                rho0: ProfileParams::standard(1.0),
                c_rho: None,
                c_omega: None,
            },
            grid: GridParams { z_min: -40.0, z_max: None, n_z1: 2048, n_u: 257 },
            integrator: IntegratorParams {
                tol: 1e-8,
                dt_min: 1e-10,
                dt_init: 1e-3,
                phi_threshold: 50.0,
                t_end: 10.0,
                front_edge_cells: 5.0,
            },
            sampling: SamplingParams { dt: 0.05, every_step: true },
            front_b: 4.0,
            picard: PicardParams { n_t: 256, max_iter: 40, gap_tol: 1e-10, ceiling: 1e6, t_window: 0.5 },
            refine: RefineParams { levels: vec![1, 2], window_end: None },
            output: OutputParams {
                dir: PathBuf::from("out"),
                snapshot_times: Vec::new(),
                snapshot_z1_stride: 16,
                snapshot_n_z2: 64,
            },
        };
        if scenario == Scenario::Euler {
            cfg.data.omega0 = ProfileParams::standard(1.0);
            cfg.data.rho0 = ProfileParams::standard(0.0);
            // The Euler phase grows linearly at roughly 4 per unit time, so the
            // window has to hold the forward front until t = 50.
            cfg.grid.z_min = -260.0;
            // Twice the nodes keep the z1 spacing near 0.065 on the longer window.
            cfg.grid.n_z1 = 4096;
            cfg.integrator.t_end = 50.0;
            cfg.integrator.phi_threshold = 1000.0;
            cfg.sampling = SamplingParams { dt: 0.25, every_step: false };
        }
        cfg
    }

    pub fn z_max(&self, strip: &SupportStrip) -> f64 {
        self.grid.z_max.unwrap_or(strip.z1_max + 1.0)
    }

    /// Grid and tolerance scaled for refinement level `factor`.
    pub fn refined(&self, factor: u32) -> Self {
        let f = factor.max(1) as usize;
        let mut c = self.clone();
        c.grid.n_z1 = (self.grid.n_z1 - 1) * f + 1;
        c.grid.n_u = (self.grid.n_u - 1) * f + 1;
        c.integrator.tol = self.integrator.tol / (f as f64).powi(4);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let om0 = self.data.omega0.profile();
        let rho0 = self.data.rho0.profile();
        match self.scenario {
            Scenario::Euler => {
                if !rho0.is_zero() {
                    issues.push("scenario euler requires rho0 = 0 (data.rho0.amplitude = 0)".to_string());
                }
                if om0.is_zero() {
                    issues.push("scenario euler requires a nonzero omega0".to_string());
                }
            }
            Scenario::Boussinesq => {
                if !om0.is_zero() {
                    issues.push("scenario boussinesq requires omega0 = 0 (data.omega0.amplitude = 0)".to_string());
                }
                if rho0.is_zero() || !rho0.touches_axis() {
                    issues.push("scenario boussinesq requires rho0 that does not vanish on x2 = 0".to_string());
                }
            }
            Scenario::Custom => {}
        }
        let g = &self.grid;
        if g.n_z1 < 3 {
            issues.push(format!("grid.n_z1 must be >= 3, got {}", g.n_z1));
        }
        if g.n_u < 3 || g.n_u.is_multiple_of(2) {
            issues.push(format!("grid.n_u must be odd and >= 3, got {}", g.n_u));
        }
        if !g.z_min.is_finite() {
            issues.push("grid.z_min must be finite".to_string());
        }
        let it = &self.integrator;
        for (name, v) in [("integrator.tol", it.tol), ("integrator.dt_min", it.dt_min), ("integrator.dt_init", it.dt_init)] {
            if !(v > 0.0) {
                issues.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(it.phi_threshold > 0.0) {
            issues.push(format!("integrator.phi_threshold must be positive, got {}", it.phi_threshold));
        }
        if !(it.t_end >= 0.0) || !it.t_end.is_finite() {
            issues.push(format!("integrator.t_end must be finite and >= 0, got {}", it.t_end));
        }
        if !(it.front_edge_cells >= 0.0) {
            issues.push("integrator.front_edge_cells must be >= 0".to_string());
        }
        if !(self.sampling.dt >= 0.0) {
            issues.push(format!("sampling.dt must be >= 0, got {}", self.sampling.dt));
        }
        if !(self.front_b >= 1.0) {
            issues.push(format!("front.B must be >= 1, got {}", self.front_b));
        }
        let p = &self.picard;
        if p.n_t < 2 || p.max_iter < 1 || !(p.gap_tol > 0.0) || !(p.ceiling > 0.0) || !(p.t_window >= 0.0) {
            issues.push("picard parameters need n_t >= 2, max_iter >= 1, gap_tol > 0, ceiling > 0, t_window >= 0".to_string());
        }
        if self.refine.levels.is_empty() || self.refine.levels.contains(&0) {
            issues.push("refine.levels must be a nonempty list of positive factors".to_string());
        }
        if self.output.snapshot_z1_stride == 0 || self.output.snapshot_n_z2 < 2 {
            issues.push("output.snapshot_z1_stride must be >= 1 and output.snapshot_n_z2 >= 2".to_string());
        }
        match InitialData::new(om0, rho0, self.data.c_rho, self.data.c_omega) {
            Ok(data) => {
                let z_max = self.z_max(&data.strip);
                if z_max < data.strip.z1_max {
                    issues.push(format!("grid.z_max = {z_max} must cover the support edge {}", data.strip.z1_max));
                }
                if z_max <= g.z_min {
                    issues.push("grid.z_min must be below grid.z_max".to_string());
                }
            }
            Err(Error::Validation(v)) => issues.extend(v),
            Err(e) => issues.push(e.to_string()),
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }

    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("scenario", self.scenario.name().into());
        put("kernel", self.kernel.name().into());
        for (name, p) in [("omega0", &self.data.omega0), ("rho0", &self.data.rho0)] {
            put(&format!("data.{name}.amplitude"), fmt_f64(p.amplitude));
            put(&format!("data.{name}.x1.center"), fmt_f64(p.x1_center));
            put(&format!("data.{name}.x1.radius"), fmt_f64(p.x1_radius));
            put(&format!("data.{name}.x2.center"), fmt_f64(p.x2_center));
            put(&format!("data.{name}.x2.radius"), fmt_f64(p.x2_radius));
        }
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "auto".into());
        put("data.c_rho", opt(self.data.c_rho));
        put("data.c_omega", opt(self.data.c_omega));
        put("grid.z_min", fmt_f64(self.grid.z_min));
        put("grid.z_max", opt(self.grid.z_max));
        put("grid.n_z1", self.grid.n_z1.to_string());
        put("grid.n_u", self.grid.n_u.to_string());
        let it = &self.integrator;
        put("integrator.tol", fmt_f64(it.tol));
        put("integrator.dt_min", fmt_f64(it.dt_min));
        put("integrator.dt_init", fmt_f64(it.dt_init));
        put("integrator.phi_threshold", fmt_f64(it.phi_threshold));
        put("integrator.t_end", fmt_f64(it.t_end));
        put("integrator.front_edge_cells", fmt_f64(it.front_edge_cells));
        put("sampling.dt", fmt_f64(self.sampling.dt));
        put("sampling.every_step", self.sampling.every_step.to_string());
        put("front.B", fmt_f64(self.front_b));
        let p = &self.picard;
        put("picard.n_t", p.n_t.to_string());
        put("picard.max_iter", p.max_iter.to_string());
        put("picard.gap_tol", fmt_f64(p.gap_tol));
        put("picard.ceiling", fmt_f64(p.ceiling));
        put("picard.t_window", fmt_f64(p.t_window));
        put("refine.levels", self.refine.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","));
        put("refine.window_end", opt(self.refine.window_end));
        put("output.dir", self.output.dir.display().to_string());
        put("output.snapshot_times", self.output.snapshot_times.iter().map(|&t| fmt_f64(t)).collect::<Vec<_>>().join(","));
        put("output.snapshot_z1_stride", self.output.snapshot_z1_stride.to_string());
        put("output.snapshot_n_z2", self.output.snapshot_n_z2.to_string());
        s
    }

    /// Parse config text. The `scenario` key (default `boussinesq`) selects the
    /// defaults that the remaining keys override; `result.*` keys are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse { line: idx + 1, message: format!("expected key=value, got `{line}`") });
            };
            pairs.push((idx + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let scenario = match pairs.iter().rev().find(|(_, k, _)| k == "scenario") {
            Some((line, _, v)) => v.parse().map_err(|message| Error::Parse { line: *line, message })?,
            None => Scenario::Boussinesq,
        };
        let mut cfg = Self::default_for(scenario);
        for (line, k, v) in &pairs {
            cfg.set(k, v).map_err(|message| Error::Parse { line: *line, message })?;
        }
        Ok(cfg)
    }

    /// Set one key. Changing `scenario` here only changes the tag, not the defaults.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
        }
        fn opt_f(key: &str, v: &str) -> std::result::Result<Option<f64>, String> {
            if v == "auto" || v.is_empty() {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        if key.starts_with("result.") {
            return Ok(());
        }
        if let Some(rest) = key.strip_prefix("data.omega0.").or_else(|| key.strip_prefix("data.rho0.")) {
            let p = if key.starts_with("data.omega0.") { &mut self.data.omega0 } else { &mut self.data.rho0 };
            let slot = match rest {
                "amplitude" => &mut p.amplitude,
                "x1.center" => &mut p.x1_center,
                "x1.radius" => &mut p.x1_radius,
                "x2.center" => &mut p.x2_center,
                "x2.radius" => &mut p.x2_radius,
                _ => return Err(format!("unknown key `{key}`")),
            };
            *slot = num(key, value)?;
            return Ok(());
        }
        match key {
            "scenario" => self.scenario = value.parse()?,
            "kernel" => self.kernel = value.parse()?,
            "data.c_rho" => self.data.c_rho = opt_f(key, value)?,
            "data.c_omega" => self.data.c_omega = opt_f(key, value)?,
            "grid.z_min" => self.grid.z_min = num(key, value)?,
            "grid.z_max" => self.grid.z_max = opt_f(key, value)?,
            "grid.n_z1" => self.grid.n_z1 = num(key, value)?,
            "grid.n_u" => self.grid.n_u = num(key, value)?,
            "integrator.tol" => self.integrator.tol = num(key, value)?,
            "integrator.dt_min" => self.integrator.dt_min = num(key, value)?,
            "integrator.dt_init" => self.integrator.dt_init = num(key, value)?,
            "integrator.phi_threshold" => self.integrator.phi_threshold = num(key, value)?,
            "integrator.t_end" | "T" => self.integrator.t_end = num(key, value)?,
            "integrator.front_edge_cells" => self.integrator.front_edge_cells = num(key, value)?,
            "sampling.dt" => self.sampling.dt = num(key, value)?,
            "sampling.every_step" => self.sampling.every_step = num(key, value)?,
            "front.B" => self.front_b = num(key, value)?,
            "picard.n_t" => self.picard.n_t = num(key, value)?,
            "picard.max_iter" => self.picard.max_iter = num(key, value)?,
            "picard.gap_tol" => self.picard.gap_tol = num(key, value)?,
            "picard.ceiling" => self.picard.ceiling = num(key, value)?,
            "picard.t_window" => self.picard.t_window = num(key, value)?,
            "refine.levels" => {
                self.refine.levels = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(key, s.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "refine.window_end" => self.refine.window_end = opt_f(key, value)?,
            "output.dir" => self.output.dir = PathBuf::from(value),
            "output.snapshot_times" => {
                self.output.snapshot_times = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(key, s.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "output.snapshot_z1_stride" => self.output.snapshot_z1_stride = num(key, value)?,
            "output.snapshot_n_z2" => self.output.snapshot_n_z2 = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

/// Everything derived from a validated config that the solvers need.
#[derive(Clone, Debug)]
pub struct Problem {
    pub config: ScenarioConfig,
    pub data: InitialData,
    pub disc: Discretization,
    pub weight: Weight,
    pub fronts: FrontParams,
}

impl Problem {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let data = InitialData::new(
            config.data.omega0.profile(),
            config.data.rho0.profile(),
            config.data.c_rho,
            config.data.c_omega,
        )?;
        let grid = Grid1D::uniform(config.grid.z_min, config.z_max(&data.strip), config.grid.n_z1)?;
        let rule = QuadratureRule::simpson(config.grid.n_u)?;
        let z1 = data.axis_threshold(FieldKind::Omega0, data.c_omega, &grid.nodes);
        let z2 = data.axis_threshold(FieldKind::F1, data.c_rho, &grid.nodes);
        let fronts = FrontParams { b: config.front_b, k: data.strip.k, z1, z2 };
        let disc = Discretization::new(&data, grid, rule)?;
        Ok(Self { config: config.clone(), data, disc, weight: Weight::new(config.kernel), fronts })
    }
}
