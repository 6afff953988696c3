//! The nonlocal stream factor.
//!
//! On each line `z1 = const` the transported vorticity is integrated against the
//! kernel weight in the Lagrangian label `u = z2 - phi(z1)`, so the integration
//! range is the fixed support interval of the initial data. The line integrals
//! `W(z1)` are then accumulated from the right edge to give `Omega(z1)`.

use crate::error::{Error, Result};
use crate::fields::{FieldKind, InitialData};

/// Composite Simpson nodes and weights on `[0, 1]`. `n` must be odd and at least 3.
pub fn simpson_unit_rule(n: usize) -> impl Iterator<Item = (f64, f64)> {
    debug_assert!(n >= 3 && n % 2 == 1);
    let h = 1.0 / (n - 1) as f64;
    (0..n).map(move |i| {
        let c = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        (i as f64 * h, c * h / 3.0)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    Sech,
    SechSquared,
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Sech => "sech",
            Kernel::SechSquared => "sech_squared",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sech" => Ok(Kernel::Sech),
            "sech_squared" | "sech2" => Ok(Kernel::SechSquared),
            other => Err(format!("unknown kernel `{other}` (expected sech | sech_squared)")),
        }
    }
}

/// Kernel weight in `z2` together with its outer prefactor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weight {
    pub kind: Kernel,
}

impl Weight {
    pub fn new(kind: Kernel) -> Self {
        Self { kind }
    }

    pub fn prefactor(&self) -> f64 {
        match self.kind {
            Kernel::Sech => 0.25,
            Kernel::SechSquared => 0.125,
        }
    }

    /// `sech(z2)` or `sech(z2)^2`, written in terms of `exp(-|z2|)` so it underflows
    /// instead of overflowing.
    #[inline]
    pub fn eval(&self, z2: f64) -> f64 {
        let e = (-z2.abs()).exp();
        let s = 2.0 * e / (1.0 + e * e);
        match self.kind {
            Kernel::Sech => s,
            Kernel::SechSquared => s * s,
        }
    }
}

/// Uniform node set in `z1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    pub nodes: Vec<f64>,
    pub h: f64,
}

impl Grid1D {
    pub fn uniform(z_min: f64, z_max: f64, n: usize) -> Result<Self> {
        if !(z_max > z_min) || n < 2 {
            return Err(Error::Validation(vec![format!(
                "grid needs z_min < z_max and at least 2 nodes (got [{z_min}, {z_max}], n = {n})"
            )]));
        }
        let h = (z_max - z_min) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| z_min + i as f64 * h).collect();
        nodes[n - 1] = z_max;
        Ok(Self { nodes, h })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn z_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn z_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Piecewise-linear interpolation of nodal values, held constant beyond the
    /// edges. The second value reports whether `z` was outside the grid.
    pub fn interpolate(&self, values: &[f64], z: f64) -> (f64, bool) {
        let n = self.nodes.len();
        if z <= self.nodes[0] {
            return (values[0], z < self.nodes[0]);
        }
        if z >= self.nodes[n - 1] {
            return (values[n - 1], z > self.nodes[n - 1]);
        }
        let s = (z - self.nodes[0]) / self.h;
        let i = (s.floor() as usize).min(n - 2);
        let frac = (z - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        (values[i] + frac * (values[i + 1] - values[i]), false)
    }
}

/// Composite Simpson rule, mapped onto each line's support interval in `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub unit_nodes: Vec<f64>,
    pub unit_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn simpson(n_u: usize) -> Result<Self> {
        if n_u < 3 || n_u.is_multiple_of(2) {
            return Err(Error::Validation(vec![format!("Simpson rule needs an odd node count >= 3, got {n_u}")]));
        }
        let (unit_nodes, unit_weights) = simpson_unit_rule(n_u).unzip();
        Ok(Self { unit_nodes, unit_weights })
    }

    pub fn len(&self) -> usize {
        self.unit_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_nodes.is_empty()
    }

    pub fn map_to(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let len = hi - lo;
        (
            self.unit_nodes.iter().map(|s| lo + s * len).collect(),
            self.unit_weights.iter().map(|w| w * len).collect(),
        )
    }
}

/// `sum_k wq[k] * g[k] * w(u[k] + phase)`: the line integral of a sampled label
/// profile against the shifted kernel weight.
#[inline]
pub fn line_integral(u: &[f64], wq: &[f64], g: &[f64], phase: f64, weight: Weight) -> f64 {
    let mut acc = 0.0;
    for k in 0..u.len() {
        let gk = g[k];
        if gk != 0.0 {
            acc += wq[k] * gk * weight.eval(u[k] + phase);
        }
    }
    acc
}

/// Per-line quadrature tables: label nodes, weights and the time-independent data
/// samples `omega0(z1, u)`, `f1(z1, u)` on every grid line.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub grid: Grid1D,
    pub rule: QuadratureRule,
    pub intervals: Vec<Option<(f64, f64)>>,
    u: Vec<f64>,
    wq: Vec<f64>,
    om0: Vec<f64>,
    f1: Vec<f64>,
    has_omega0: bool,
    has_f1: bool,
}

/// Borrowed view of one line's tables.
#[derive(Clone, Copy, Debug)]
pub struct LineView<'a> {
    pub z1: f64,
    pub u: &'a [f64],
    pub wq: &'a [f64],
    pub om0: &'a [f64],
    pub f1: &'a [f64],
}

impl Discretization {
    pub fn new(data: &InitialData, grid: Grid1D, rule: QuadratureRule) -> Result<Self> {
        if grid.z_max() < data.strip.z1_max {
            return Err(Error::Validation(vec![format!(
                "grid right edge {} does not cover the support (z1_max = {})",
                grid.z_max(),
                data.strip.z1_max
            )]));
        }
        let n_u = rule.len();
        let n = grid.len();
        let mut u = vec![0.0; n * n_u];
        let mut wq = vec![0.0; n * n_u];
        let mut om0 = vec![0.0; n * n_u];
        let mut f1 = vec![0.0; n * n_u];
        let mut intervals = Vec::with_capacity(n);
        for (i, &z1) in grid.nodes.iter().enumerate() {
            let iv = data.strip.line_interval(z1);
            intervals.push(iv);
            let Some((lo, hi)) = iv else { continue };
            let (nodes, weights) = rule.map_to(lo, hi);
            let r = i * n_u..(i + 1) * n_u;
            u[r.clone()].copy_from_slice(&nodes);
            wq[r.clone()].copy_from_slice(&weights);
            for (k, &uk) in nodes.iter().enumerate() {
                om0[i * n_u + k] = data.eval_z(FieldKind::Omega0, z1, uk);
                f1[i * n_u + k] = data.eval_z(FieldKind::F1, z1, uk);
            }
        }
        Ok(Self {
            grid,
            rule,
            intervals,
            u,
            wq,
            has_omega0: om0.iter().any(|&v| v != 0.0),
            has_f1: f1.iter().any(|&v| v != 0.0),
            om0,
            f1,
        })
    }

    pub fn n_z1(&self) -> usize {
        self.grid.len()
    }

    pub fn n_u(&self) -> usize {
        self.rule.len()
    }

    pub fn has_forcing(&self) -> bool {
        self.has_f1
    }

    pub fn has_vorticity(&self) -> bool {
        self.has_omega0
    }

    pub fn line(&self, i: usize) -> LineView<'_> {
        let n_u = self.rule.len();
        let r = i * n_u..(i + 1) * n_u;
        LineView {
            z1: self.grid.nodes[i],
            u: &self.u[r.clone()],
            wq: &self.wq[r.clone()],
            om0: &self.om0[r.clone()],
            f1: &self.f1[r],
        }
    }

    /// `W(z1_i) = int [omega0 + f1 * mem_i] w(u + phi_i) du` for one line.
    #[inline]
    pub fn line_w(&self, i: usize, phi: f64, mem: f64, weight: Weight) -> f64 {
        let line = self.line(i);
        let mut acc = 0.0;
        for k in 0..line.u.len() {
            let g = line.om0[k] + line.f1[k] * mem;
            if g != 0.0 {
                acc += line.wq[k] * g * weight.eval(line.u[k] + phi);
            }
        }
        acc
    }

    /// Line integrals on every node. `phi` and `mem` must match the grid.
    pub fn inner_profile_w(&self, phi: &[f64], mem: &[f64], weight: Weight, out: &mut [f64]) -> Result<()> {
        let n = self.n_z1();
        for len in [phi.len(), mem.len(), out.len()] {
            if len != n {
                return Err(Error::ShapeMismatch { expected: n, got: len });
            }
        }
        for i in 0..n {
            out[i] = if self.intervals[i].is_some() { self.line_w(i, phi[i], mem[i], weight) } else { 0.0 };
        }
        Ok(())
    }

    /// Largest `|omega0 + f1 * mem|` over the quadrature nodes of all lines.
    pub fn coarse_sup_omega(&self, mem: &[f64]) -> f64 {
        let n_u = self.n_u();
        let mut m = 0.0f64;
        for (i, &iv) in self.intervals.iter().enumerate() {
            if iv.is_none() {
                continue;
            }
            for k in i * n_u..(i + 1) * n_u {
                m = m.max((self.om0[k] + self.f1[k] * mem[i]).abs());
            }
        }
        m
    }
}

/// `Omega(z1_i) = prefactor * int_{z1_i}^{z_max} W`, by reverse cumulative trapezoid.
pub fn omega_profile(w: &[f64], h: f64, weight: Weight, out: &mut [f64]) {
    let n = w.len();
    debug_assert_eq!(out.len(), n);
    if n == 0 {
        return;
    }
    let c = weight.prefactor();
    let mut acc = 0.0;
    out[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        acc += 0.5 * h * (w[i] + w[i + 1]);
        out[i] = c * acc;
    }
}

/// Estimated contribution of lines left of the grid, `2 M e^{z_min + K + L}`.
pub fn left_tail_bound(sup_omega: f64, z_min: f64, k: f64, phase_sup: f64) -> f64 {
    2.0 * sup_omega * (z_min + k + phase_sup).exp()
}
