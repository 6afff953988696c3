//! Parametric initial data: products of smooth bumps, compactly supported away
//! from the `x2`-axis, and the forcing profile `f1 = rho0 / x1` they induce.

use crate::coords::{z_to_x, PointX, PointZ, Rect, SupportStrip};
use crate::error::{Error, Result};
use crate::quadrature::simpson_unit_rule;

/// Node count of the per-line Simpson rule used for axis masses.
pub const AXIS_MASS_NODES: usize = 257;

/// Line used to approximate the `z1 -> -inf` limit of the axis mass.
const FAR_LEFT_LINE: f64 = -60.0;

/// `exp(-s^2 / (1 - s^2))` on `|s| < 1`, zero elsewhere. Smooth, maximum 1 at 0.
#[inline]
pub fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 < 1.0 {
        (-s2 / (1.0 - s2)).exp()
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpProfile {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl BumpProfile {
    pub fn new(center: f64, radius: f64, amplitude: f64) -> Self {
        Self { center, radius, amplitude }
    }

    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        self.amplitude * bump((v - self.center) / self.radius)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// A field on the quadrant: either identically zero or `a(x1) * b(x2)`.
///
/// When the `x2` factor is centred at or below the axis it is read as the one-sided
/// restriction of an even bump, so the field is positive on part of `x2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Zero,
    Product { x1: BumpProfile, x2: BumpProfile },
}

impl Profile {
    #[inline]
    pub fn eval_x(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Product { x1: a, x2: b } => {
                if x2 < 0.0 {
                    return 0.0;
                }
                let va = a.eval(x1);
                if va == 0.0 {
                    0.0
                } else {
                    va * b.eval(x2)
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Product { x1, x2 } => x1.amplitude == 0.0 || x2.amplitude == 0.0,
        }
    }

    /// `sup |f|`, attained at the product of the two bump centres.
    pub fn sup(&self) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Product { x1, x2 } => {
                let b = if x2.center >= 0.0 { x2.amplitude } else { x2.eval(0.0) };
                (x1.amplitude * b).abs()
            }
        }
    }

    pub fn support_box(&self) -> Option<Rect> {
        match self {
            Profile::Zero => None,
            p if p.is_zero() => None,
            Profile::Product { x1, x2 } => {
                let (a0, a1) = x1.support();
                let (b0, b1) = x2.support();
                Some(Rect { x1_min: a0, x1_max: a1, x2_min: b0.max(0.0), x2_max: b1 })
            }
        }
    }

    /// True when the field does not vanish identically on `x2 = 0`.
    pub fn touches_axis(&self) -> bool {
        match self {
            Profile::Zero => false,
            Profile::Product { x2, .. } => !self.is_zero() && x2.eval(0.0) > 0.0,
        }
    }

    fn validate(&self, name: &str, issues: &mut Vec<String>) {
        if let Profile::Product { x1, x2 } = self {
            for (axis, b) in [("x1", x1), ("x2", x2)] {
                if !(b.radius > 0.0) || !b.radius.is_finite() {
                    issues.push(format!("{name}.{axis}.radius must be positive, got {}", b.radius));
                }
                if !(b.amplitude >= 0.0) || !b.amplitude.is_finite() {
                    issues.push(format!("{name}.{axis}.amplitude must be nonnegative, got {}", b.amplitude));
                }
                if !b.center.is_finite() {
                    issues.push(format!("{name}.{axis}.center must be finite"));
                }
            }
            if x1.center - x1.radius <= 0.0 {
                issues.push(format!(
                    "{name} support must stay away from the x2-axis (x1 >= {} is not > 0)",
                    x1.center - x1.radius
                ));
            }
            if x2.center + x2.radius <= 0.0 {
                issues.push(format!("{name}.x2 factor has no support in x2 >= 0"));
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Omega0,
    Rho0,
    F1,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    X(PointX),
    Z(PointZ),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub omega0: Profile,
    pub rho0: Profile,
    pub strip: SupportStrip,
    /// Lower bound for the axis mass of `f1` (the `c(rho0)` constant).
    pub c_rho: f64,
    /// Lower bound for the axis mass of `omega0`.
    pub c_omega: f64,
}

impl InitialData {
    /// Validate the profiles and derive the support strip plus axis-mass constants.
    /// Constants left as `None` default to half the far-left axis mass.
    pub fn new(omega0: Profile, rho0: Profile, c_rho: Option<f64>, c_omega: Option<f64>) -> Result<Self> {
        let mut issues = Vec::new();
        omega0.validate("omega0", &mut issues);
        rho0.validate("rho0", &mut issues);
        if !issues.is_empty() {
            return Err(Error::Validation(issues));
        }
        let box_x = match (omega0.support_box(), rho0.support_box()) {
            (Some(a), Some(b)) => a.union(&b),
            (Some(a), None) | (None, Some(a)) => a,
            // No support at all: any box will do, nothing is ever integrated.
            (None, None) => Rect { x1_min: 1.0, x1_max: 2.0, x2_min: 0.0, x2_max: 1.0 },
        };
        let strip = SupportStrip::from_box(box_x)?;
        let mut data = Self { omega0, rho0, strip, c_rho: 0.0, c_omega: 0.0 };
        data.c_rho = c_rho.unwrap_or_else(|| 0.5 * data.axis_mass(FieldKind::F1, FAR_LEFT_LINE));
        data.c_omega = c_omega.unwrap_or_else(|| 0.5 * data.axis_mass(FieldKind::Omega0, FAR_LEFT_LINE));
        Ok(data)
    }

    pub fn eval(&self, kind: FieldKind, p: Point) -> f64 {
        match p {
            Point::Z(z) => self.eval_z(kind, z.z1, z.z2),
            Point::X(x) => self.eval_x(kind, x.x1, x.x2),
        }
    }

    #[inline]
    pub fn eval_x(&self, kind: FieldKind, x1: f64, x2: f64) -> f64 {
        match kind {
            FieldKind::Omega0 => self.omega0.eval_x(x1, x2),
            FieldKind::Rho0 => self.rho0.eval_x(x1, x2),
            FieldKind::F1 => {
                if x1 > 0.0 {
                    self.rho0.eval_x(x1, x2) / x1
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn eval_z(&self, kind: FieldKind, z1: f64, z2: f64) -> f64 {
        let Ok(x) = z_to_x(PointZ::new(z1, z2)) else {
            // Only reachable far outside any support box.
            return 0.0;
        };
        match kind {
            FieldKind::Omega0 => self.omega0.eval_x(x.x1, x.x2),
            FieldKind::Rho0 => self.rho0.eval_x(x.x1, x.x2),
            FieldKind::F1 => (0.5 * (z2 - z1)).exp() * self.rho0.eval_x(x.x1, x.x2),
        }
    }

    /// `int_R field(z1, z2) dz2` along one line, by Simpson over the line's support.
    pub fn axis_mass(&self, kind: FieldKind, z1: f64) -> f64 {
        let Some((lo, hi)) = self.strip.line_interval(z1) else {
            return 0.0;
        };
        let len = hi - lo;
        simpson_unit_rule(AXIS_MASS_NODES)
            .map(|(s, w)| w * len * self.eval_z(kind, z1, lo + s * len))
            .sum()
    }

    /// Largest scanned `z1` such that the axis mass is at least `c` on every scanned
    /// line to its left. `None` when even the leftmost line fails or `c <= 0`.
    pub fn axis_threshold(&self, kind: FieldKind, c: f64, scan: &[f64]) -> Option<f64> {
        if !(c > 0.0) {
            return None;
        }
        let mut last = None;
        for &z1 in scan {
            if self.axis_mass(kind, z1) >= c {
                last = Some(z1);
            } else {
                break;
            }
        }
        last
    }

    pub fn axis_constant(&self, kind: FieldKind) -> f64 {
        match kind {
            FieldKind::Omega0 => self.c_omega,
            _ => self.c_rho,
        }
    }
}

/// Field values sampled on a tensor grid in x-coordinates. `values[i * x2.len() + j]`
/// holds the value at `(x1[i], x2[j])`.
#[derive(Clone, Debug)]
pub struct XSnapshot {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub values: Vec<f64>,
}

impl XSnapshot {
    pub fn sample(x1: Vec<f64>, x2: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(x1.len() * x2.len());
        for &a in &x1 {
            for &b in &x2 {
                values.push(f(a, b));
            }
        }
        Self { x1, x2, values }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.x2.len() + j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnComponents {
    /// Finite-difference estimate of the `C^1` norm.
    pub cn_estimate: f64,
    pub support_measure: f64,
    pub inv_delta: f64,
    pub empty_support: bool,
}

fn difference(v: &dyn Fn(usize) -> f64, x: &[f64], i: usize) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let (a, b) = match i {
        0 => (0, 1),
        i if i == n - 1 => (n - 2, n - 1),
        i => (i - 1, i + 1),
    };
    (v(b) - v(a)) / (x[b] - x[a])
}

fn cell_width(x: &[f64], i: usize) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let left = if i > 0 { x[i] - x[i - 1] } else { x[1] - x[0] };
    let right = if i + 1 < n { x[i + 1] - x[i] } else { x[n - 1] - x[n - 2] };
    0.5 * (left + right)
}

/// `(||f||_{C^1}, |supp f|, 1 / min_{supp f} x1)` estimated from a snapshot.
pub fn kn_components(snap: &XSnapshot) -> KnComponents {
    let (n1, n2) = (snap.x1.len(), snap.x2.len());
    let mut sup = 0.0f64;
    let mut d1 = 0.0f64;
    let mut d2 = 0.0f64;
    let mut measure = 0.0;
    let mut min_x1 = f64::INFINITY;
    for i in 0..n1 {
        for j in 0..n2 {
            let v = snap.at(i, j);
            sup = sup.max(v.abs());
            d1 = d1.max(difference(&|k| snap.at(k, j), &snap.x1, i).abs());
            d2 = d2.max(difference(&|k| snap.at(i, k), &snap.x2, j).abs());
            if v != 0.0 {
                measure += cell_width(&snap.x1, i) * cell_width(&snap.x2, j);
                min_x1 = min_x1.min(snap.x1[i]);
            }
        }
    }
    let empty = !min_x1.is_finite();
    KnComponents {
        cn_estimate: sup + d1 + d2,
        support_measure: if empty { 0.0 } else { measure },
        inv_delta: if empty || min_x1 <= 0.0 { 0.0 } else { 1.0 / min_x1 },
        empty_support: empty,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::x_to_z;
    use approx::assert_relative_eq;

    pub(crate) fn default_rho0() -> Profile {
        Profile::Product { x1: BumpProfile::new(2.0, 1.0, 1.0), x2: BumpProfile::new(0.0, 2.0, 1.0) }
    }

    fn boussinesq() -> InitialData {
        InitialData::new(Profile::Zero, default_rho0(), None, None).unwrap()
    }

    fn euler() -> InitialData {
        InitialData::new(default_rho0(), Profile::Zero, None, None).unwrap()
    }

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.5), 0.0);
        assert!(bump(0.999) > 0.0 && bump(0.999) < 1e-200);
        assert_eq!(bump(0.5), bump(-0.5));
    }

    #[test]
    fn default_box_and_strip() {
        let d = boussinesq();
        assert_eq!(d.strip.box_x, Rect { x1_min: 1.0, x1_max: 3.0, x2_min: 0.0, x2_max: 2.0 });
        assert_eq!(d.strip.delta0, 1.0);
        assert!(d.rho0.touches_axis());
        assert!(d.c_rho > 0.0);
        assert_eq!(d.c_omega, 0.0);
    }

    #[test]
    fn rho0_peak_is_amplitude() {
        let d = boussinesq();
        assert_eq!(d.eval(FieldKind::Rho0, Point::X(PointX::new(2.0, 0.0))), 1.0);
        let p = Profile::Product { x1: BumpProfile::new(2.0, 1.0, 1.0), x2: BumpProfile::new(1.0, 0.5, 1.0) };
        assert_eq!(p.eval_x(2.0, 1.0), 1.0);
    }

    #[test]
    fn f1_vanishes_off_strip() {
        let d = boussinesq();
        for z in [PointZ::new(3.0, 0.0), PointZ::new(-5.0, 1.0), PointZ::new(-5.0, -8.0), PointZ::new(0.0, 2.0)] {
            assert!(!d.strip.contains(z));
            assert_eq!(d.eval(FieldKind::F1, Point::Z(z)), 0.0);
        }
    }

    #[test]
    fn f1_matches_rho0_over_x1() {
        let d = boussinesq();
        for &(x1, x2) in &[(1.5, 0.3), (2.0, 1.0), (2.7, 0.01), (1.2, 1.8)] {
            let z = x_to_z(PointX::new(x1, x2)).unwrap();
            let zf = d.eval(FieldKind::F1, Point::Z(z));
            let xf = d.eval(FieldKind::Rho0, Point::X(PointX::new(x1, x2))) / x1;
            assert!(zf > 0.0);
            assert_relative_eq!(zf, xf, max_relative = 1e-12);
        }
    }

    #[test]
    fn frame_consistency() {
        let d = euler();
        for i in 0..30 {
            let z = PointZ::new(-4.0 + 0.19 * i as f64, -3.0 + 0.11 * i as f64);
            let x = z_to_x(z).unwrap();
            for kind in [FieldKind::Omega0, FieldKind::Rho0, FieldKind::F1] {
                let a = d.eval(kind, Point::Z(z));
                let b = d.eval(kind, Point::X(x));
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{kind:?} {a} {b}");
            }
        }
    }

    #[test]
    fn fields_nonnegative() {
        let d = boussinesq();
        for i in 0..60 {
            for j in 0..60 {
                let z = PointZ::new(-8.0 + 0.17 * i as f64, -8.0 + 0.2 * j as f64);
                for kind in [FieldKind::Omega0, FieldKind::Rho0, FieldKind::F1] {
                    assert!(d.eval(kind, Point::Z(z)) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn axis_mass_zero_field_and_right_of_support() {
        let d = boussinesq();
        for z1 in [-30.0, -1.0, 0.0, 1.0] {
            assert_eq!(d.axis_mass(FieldKind::Omega0, z1), 0.0);
        }
        assert_eq!(d.axis_mass(FieldKind::F1, d.strip.z1_max + 0.01), 0.0);
        assert_eq!(d.axis_mass(FieldKind::Rho0, d.strip.z1_max + 3.0), 0.0);
    }

    /// Independent oracle: the x-frame form `2 int omega(x1, e^{z1}/x1) dx1/x1` on a
    /// very fine midpoint grid.
    fn x_frame_mass(d: &InitialData, kind: FieldKind, z1: f64) -> f64 {
        let n = 200_000;
        let (a, b) = (d.strip.box_x.x1_min, d.strip.box_x.x1_max);
        let h = (b - a) / n as f64;
        (0..n)
            .map(|i| {
                let x1 = a + (i as f64 + 0.5) * h;
                2.0 * d.eval_x(kind, x1, z1.exp() / x1) / x1 * h
            })
            .sum()
    }

    #[test]
    fn axis_mass_matches_x_frame_quadrature() {
        let d = euler();
        for z1 in [-20.0, -3.0, 0.0, 0.8, 1.5] {
            let m = d.axis_mass(FieldKind::Omega0, z1);
            let oracle = x_frame_mass(&d, FieldKind::Omega0, z1);
            assert_relative_eq!(m, oracle, max_relative = 1e-8, epsilon = 1e-14);
        }
        let b = boussinesq();
        for z1 in [-12.0, 0.3] {
            assert_relative_eq!(b.axis_mass(FieldKind::F1, z1), x_frame_mass(&b, FieldKind::F1, z1), max_relative = 1e-8);
        }
    }

    #[test]
    fn indicator_like_line_mass_is_bounded_by_length() {
        // u-support of radius r fully inside the line: mass lies in (0, 2 r amplitude].
        let d = euler();
        let z1 = -10.0;
        let (lo, hi) = d.strip.line_interval(z1).unwrap();
        let m = d.axis_mass(FieldKind::Omega0, z1);
        assert!(m > 0.0 && m <= hi - lo);
        // brute force fine grid in u
        let n = 100_000;
        let h = (hi - lo) / n as f64;
        let brute: f64 = (0..n).map(|i| d.eval_z(FieldKind::Omega0, z1, lo + (i as f64 + 0.5) * h) * h).sum();
        assert_relative_eq!(m, brute, max_relative = 1e-8);
    }

    #[test]
    fn axis_mass_stays_above_constant_left_of_threshold() {
        let d = boussinesq();
        let scan: Vec<f64> = (0..=400).map(|i| -40.0 + 0.1 * i as f64).collect();
        let z2 = d.axis_threshold(FieldKind::F1, d.c_rho, &scan).unwrap();
        assert!(z2 > -1.0 && z2 < d.strip.z1_max);
        for &z in scan.iter().filter(|&&z| z <= z2) {
            assert!(d.axis_mass(FieldKind::F1, z) >= d.c_rho);
        }
        assert_eq!(d.axis_threshold(FieldKind::Omega0, d.c_omega, &scan), None);
    }

    #[test]
    fn validation_errors() {
        let bad = Profile::Product { x1: BumpProfile::new(0.5, 1.0, 1.0), x2: BumpProfile::new(0.0, -1.0, -2.0) };
        match InitialData::new(bad, Profile::Zero, None, None) {
            Err(Error::Validation(v)) => assert!(v.len() >= 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kn_components_zero_field() {
        let snap = XSnapshot::sample(vec![0.0, 1.0, 2.0], vec![0.0, 1.0], |_, _| 0.0);
        let k = kn_components(&snap);
        assert_eq!((k.cn_estimate, k.support_measure, k.inv_delta), (0.0, 0.0, 0.0));
        assert!(k.empty_support);
    }

    #[test]
    fn kn_components_initial_rho0() {
        let d = boussinesq();
        let h = 0.01;
        let x1: Vec<f64> = (0..=350).map(|i| i as f64 * h).collect();
        let x2: Vec<f64> = (0..=250).map(|i| i as f64 * h).collect();
        let snap = XSnapshot::sample(x1, x2, |a, b| d.eval_x(FieldKind::Rho0, a, b));
        let k = kn_components(&snap);
        assert!(!k.empty_support);
        assert!(k.inv_delta <= 1.0 / d.strip.delta0);
        assert!(k.inv_delta >= 1.0 / (d.strip.delta0 + h));
        assert!((k.support_measure - 4.0).abs() < 0.1, "{}", k.support_measure);
        assert!(k.cn_estimate > 1.0);
    }
}
