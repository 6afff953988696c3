//! Hyperbolic coordinates on the quadrant.
//!
//! `z1 = log(x1 x2)` labels the hyperbola a point sits on and `z2 = log(x2 / x1)`
//! its position along it. Trajectories of the model flow keep `z1` fixed, so every
//! transport problem in this crate is solved line by line in `z2`.

use crate::error::{Error, Result};

/// Largest argument accepted by `exp` before the result overflows an `f64`.
const EXP_MAX: f64 = 709.78;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointX {
    pub x1: f64,
    pub x2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointZ {
    pub z1: f64,
    pub z2: f64,
}

impl PointX {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }
}

impl PointZ {
    pub fn new(z1: f64, z2: f64) -> Self {
        Self { z1, z2 }
    }
}

pub fn x_to_z(p: PointX) -> Result<PointZ> {
    if !(p.x1 > 0.0) {
        return Err(Error::Domain { field: "x1", value: p.x1 });
    }
    if !(p.x2 > 0.0) {
        return Err(Error::Domain { field: "x2", value: p.x2 });
    }
    let (l1, l2) = (p.x1.ln(), p.x2.ln());
    Ok(PointZ { z1: l1 + l2, z2: l2 - l1 })
}

pub fn z_to_x(p: PointZ) -> Result<PointX> {
    let a = 0.5 * (p.z1 - p.z2);
    let b = 0.5 * (p.z1 + p.z2);
    if !a.is_finite() || !b.is_finite() || a > EXP_MAX || b > EXP_MAX {
        return Err(Error::Range(format!("z = ({}, {}) has no finite x-image", p.z1, p.z2)));
    }
    Ok(PointX { x1: a.exp(), x2: b.exp() })
}

/// Axis-aligned rectangle `[x1_min, x1_max] x [x2_min, x2_max]` in x-coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Rect {
    pub fn contains(&self, p: PointX) -> bool {
        p.x1 >= self.x1_min && p.x1 <= self.x1_max && p.x2 >= self.x2_min && p.x2 <= self.x2_max
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            x1_min: self.x1_min.min(other.x1_min),
            x1_max: self.x1_max.max(other.x1_max),
            x2_min: self.x2_min.min(other.x2_min),
            x2_max: self.x2_max.max(other.x2_max),
        }
    }
}

/// Image of the support box `[delta, C1] x [0, C2]` in z-coordinates.
///
/// The box maps into the half-strip `2 log delta <= z1 - z2 <= 2 log C1`,
/// `z1 + z2 <= 2 log C2`, and `k` bounds all three logarithms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportStrip {
    pub k: f64,
    pub z1_max: f64,
    pub delta0: f64,
    pub box_x: Rect,
}

impl SupportStrip {
    pub fn from_box(box_x: Rect) -> Result<Self> {
        let delta0 = box_x.x1_min;
        if !(delta0 > 0.0) {
            return Err(Error::Domain { field: "x1", value: delta0 });
        }
        if !(box_x.x1_max > delta0) || !(box_x.x2_max > 0.0) {
            return Err(Error::Validation(vec![format!("degenerate support box {box_x:?}")]));
        }
        let lo = 2.0 * delta0.ln();
        let hi1 = 2.0 * box_x.x1_max.ln();
        let hi2 = 2.0 * box_x.x2_max.ln();
        let k = (-lo).max(hi1).max(hi2).max(f64::EPSILON);
        Ok(Self { k, z1_max: (box_x.x1_max * box_x.x2_max).ln(), delta0, box_x })
    }

    /// Whether a z-point lies in the half-strip.
    pub fn contains(&self, p: PointZ) -> bool {
        // Slack for rounding in the logarithms of boundary points.
        let eps = 1e-12 * (1.0 + p.z1.abs() + p.z2.abs());
        let d = p.z1 - p.z2;
        let s = p.z1 + p.z2;
        d >= 2.0 * self.delta0.ln() - eps && d <= 2.0 * self.box_x.x1_max.ln() + eps && s <= 2.0 * self.box_x.x2_max.ln() + eps
    }

    /// The `z2` range of the support box on the line `z1 = const`, or `None` when the
    /// hyperbola misses the box.
    pub fn line_interval(&self, z1: f64) -> Option<(f64, f64)> {
        let lo = z1 - 2.0 * self.box_x.x1_max.ln();
        let hi = (z1 - 2.0 * self.delta0.ln()).min(2.0 * self.box_x.x2_max.ln() - z1);
        (hi > lo).then_some((lo, hi))
    }
}
