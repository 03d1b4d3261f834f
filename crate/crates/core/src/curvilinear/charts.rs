use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;

use crate::{Error, Mat3, Result, Vec3};

/// Default distance kept from coordinate singularities, in units of the domain scale.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// Step of the central differences used when a chart has no analytic partials.
const FD_STEP: f64 = 1e-5;

/// A coordinate system `ρ = f(x)` on part of space.
///
/// Jacobians are `∂x_i/∂ρ_j` at entry `(i, j)`. Second derivatives are returned as one
/// matrix per Cartesian component: `hessian[k][(i, j)] = ∂²x_k/∂ρ_i∂ρ_j`.
pub trait Chart: Send + Sync {
    fn name(&self) -> &str;

    /// Cartesian position to chart coordinates.
    fn coordinates(&self, x: &Vec3) -> Result<Vec3>;

    /// Chart coordinates to Cartesian position.
    fn position(&self, rho: &Vec3) -> Vec3;

    /// True when `rho` lies inside the validity domain.
    fn contains(&self, rho: &Vec3) -> bool;

    /// Declared orthogonality. Operations that rely on it also check it numerically.
    fn is_orthogonal(&self) -> bool;

    /// Period of each coordinate that is an angle.
    fn periods(&self) -> [Option<f64>; 3] {
        [None; 3]
    }

    fn analytic_jacobian(&self, _rho: &Vec3) -> Option<Mat3> {
        None
    }

    fn analytic_hessian(&self, _rho: &Vec3) -> Option<[Mat3; 3]> {
        None
    }
}

impl fmt::Debug for dyn Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart({})", self.name())
    }
}

/// `∂x/∂ρ`, analytic when the chart provides it.
pub fn jacobian(c: &dyn Chart, rho: &Vec3) -> Mat3 {
    c.analytic_jacobian(rho).unwrap_or_else(|| fd_jacobian(c, rho, FD_STEP))
}

/// Central-difference `∂x/∂ρ`.
pub fn fd_jacobian(c: &dyn Chart, rho: &Vec3, h: f64) -> Mat3 {
    let mut m = Mat3::zeros();
    for j in 0..3 {
        let mut e = Vec3::zeros();
        e[j] = h;
        m.set_column(j, &((c.position(&(rho + e)) - c.position(&(rho - e))) / (2.0 * h)));
    }
    m
}

/// Second derivatives of the position, analytic when available.
pub fn hessian(c: &dyn Chart, rho: &Vec3) -> [Mat3; 3] {
    if let Some(h) = c.analytic_hessian(rho) {
        return h;
    }
    let h = 1e-4;
    let mut out = [Mat3::zeros(); 3];
    for i in 0..3 {
        let mut e = Vec3::zeros();
        e[i] = h;
        let d = (jacobian(c, &(rho + e)) - jacobian(c, &(rho - e))) / (2.0 * h);
        for (k, hk) in out.iter_mut().enumerate() {
            for j in 0..3 {
                hk[(i, j)] = d[(k, j)];
            }
        }
    }
    for hk in out.iter_mut() {
        *hk = 0.5 * (*hk + hk.transpose());
    }
    out
}

/// Plain Cartesian coordinates, `N = 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CartesianChart;

impl Chart for CartesianChart {
    fn name(&self) -> &str {
        "cartesian"
    }
    fn coordinates(&self, x: &Vec3) -> Result<Vec3> {
        Ok(*x)
    }
    fn position(&self, rho: &Vec3) -> Vec3 {
        *rho
    }
    fn contains(&self, rho: &Vec3) -> bool {
        rho.iter().all(|v| v.is_finite())
    }
    fn is_orthogonal(&self) -> bool {
        true
    }
    fn analytic_jacobian(&self, _: &Vec3) -> Option<Mat3> {
        Some(Mat3::identity())
    }
    fn analytic_hessian(&self, _: &Vec3) -> Option<[Mat3; 3]> {
        Some([Mat3::zeros(); 3])
    }
}

/// Spherical coordinates `(r, θ, φ)` with the polar axis along x:
/// `x = r cos θ`, `y = r sin θ cos φ`, `z = r sin θ sin φ`.
#[derive(Clone, Copy, Debug)]
pub struct PolarChart {
    pub margin: f64,
}

impl Default for PolarChart {
    fn default() -> Self {
        PolarChart { margin: DEFAULT_MARGIN }
    }
}

impl Chart for PolarChart {
    fn name(&self) -> &str {
        "polar"
    }

    fn coordinates(&self, x: &Vec3) -> Result<Vec3> {
        let r = x.norm();
        let rho = if r > 0.0 {
            Vec3::new(r, (x.x / r).clamp(-1.0, 1.0).acos(), x.z.atan2(x.y))
        } else {
            Vec3::zeros()
        };
        if !self.contains(&rho) {
            return Err(Error::OutsideChart([x.x, x.y, x.z]));
        }
        Ok(rho)
    }

    fn position(&self, rho: &Vec3) -> Vec3 {
        let (r, (st, ct), (sp, cp)) = (rho[0], rho[1].sin_cos(), rho[2].sin_cos());
        Vec3::new(r * ct, r * st * cp, r * st * sp)
    }

    fn contains(&self, rho: &Vec3) -> bool {
        rho[0] > self.margin && rho[1] > self.margin && rho[1] < PI - self.margin
    }

    fn is_orthogonal(&self) -> bool {
        true
    }

    fn periods(&self) -> [Option<f64>; 3] {
        [None, None, Some(2.0 * PI)]
    }

    fn analytic_jacobian(&self, rho: &Vec3) -> Option<Mat3> {
        let (r, (st, ct), (sp, cp)) = (rho[0], rho[1].sin_cos(), rho[2].sin_cos());
        Some(Mat3::new(
            ct, -r * st, 0.0,
            st * cp, r * ct * cp, -r * st * sp,
            st * sp, r * ct * sp, r * st * cp,
        ))
    }

    fn analytic_hessian(&self, rho: &Vec3) -> Option<[Mat3; 3]> {
        let (r, (st, ct), (sp, cp)) = (rho[0], rho[1].sin_cos(), rho[2].sin_cos());
        let hx = Mat3::new(
            0.0, -st, 0.0,
            -st, -r * ct, 0.0,
            0.0, 0.0, 0.0,
        );
        let hy = Mat3::new(
            0.0, ct * cp, -st * sp,
            ct * cp, -r * st * cp, -r * ct * sp,
            -st * sp, -r * ct * sp, -r * st * cp,
        );
        let hz = Mat3::new(
            0.0, ct * sp, st * cp,
            ct * sp, -r * st * sp, r * ct * cp,
            st * cp, r * ct * cp, -r * st * sp,
        );
        Some([hx, hy, hz])
    }
}

/// Cylindrical coordinates `(r, θ, z)` about the z axis.
#[derive(Clone, Copy, Debug)]
pub struct CylindricalChart {
    pub margin: f64,
}

impl Default for CylindricalChart {
    fn default() -> Self {
        CylindricalChart { margin: DEFAULT_MARGIN }
    }
}

impl Chart for CylindricalChart {
    fn name(&self) -> &str {
        "cylindrical"
    }

    fn coordinates(&self, x: &Vec3) -> Result<Vec3> {
        let rho = Vec3::new(x.x.hypot(x.y), x.y.atan2(x.x), x.z);
        if !self.contains(&rho) {
            return Err(Error::OutsideChart([x.x, x.y, x.z]));
        }
        Ok(rho)
    }

    fn position(&self, rho: &Vec3) -> Vec3 {
        let (s, c) = rho[1].sin_cos();
        Vec3::new(rho[0] * c, rho[0] * s, rho[2])
    }

    fn contains(&self, rho: &Vec3) -> bool {
        rho[0] > self.margin && rho[2].is_finite()
    }

    fn is_orthogonal(&self) -> bool {
        true
    }

    fn periods(&self) -> [Option<f64>; 3] {
        [None, Some(2.0 * PI), None]
    }

    fn analytic_jacobian(&self, rho: &Vec3) -> Option<Mat3> {
        let (r, (s, c)) = (rho[0], rho[1].sin_cos());
        Some(Mat3::new(
            c, -r * s, 0.0,
            s, r * c, 0.0,
            0.0, 0.0, 1.0,
        ))
    }

    fn analytic_hessian(&self, rho: &Vec3) -> Option<[Mat3; 3]> {
        let (r, (s, c)) = (rho[0], rho[1].sin_cos());
        let hx = Mat3::new(0.0, -s, 0.0, -s, -r * c, 0.0, 0.0, 0.0, 0.0);
        let hy = Mat3::new(0.0, c, 0.0, c, -r * s, 0.0, 0.0, 0.0, 0.0);
        Some([hx, hy, Mat3::zeros()])
    }
}

/// Confocal ellipsoidal coordinates in the first octant inside the ellipsoid with
/// semi-axes `α > β > γ`.
///
/// `ρ₁², ρ₂², ρ₃²` are the three roots `λ` of `x²/(α²−λ) + y²/(β²−λ) + z²/(γ²−λ) = 1`,
/// ordered `α > ρ₁ > β > ρ₂ > γ > ρ₃ > 0`.
#[derive(Clone, Copy, Debug)]
pub struct EllipticalChart {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub margin: f64,
}

impl EllipticalChart {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > beta && beta > gamma && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "elliptical chart needs alpha > beta > gamma > 0, got {alpha}, {beta}, {gamma}"
            )));
        }
        Ok(EllipticalChart {
            alpha,
            beta,
            gamma,
            margin: DEFAULT_MARGIN * alpha,
        })
    }

    fn squares(&self) -> [f64; 3] {
        [self.alpha * self.alpha, self.beta * self.beta, self.gamma * self.gamma]
    }

    /// Closed-form metric `N_i = −ρ_i² (ρ_i²−ρ_j²)(ρ_i²−ρ_k²) / ((ρ_i²−α²)(ρ_i²−β²)(ρ_i²−γ²))`.
    pub fn closed_form_metric(&self, rho: &Vec3) -> [f64; 3] {
        let [a, b, c] = self.squares();
        let l = rho.map(|v| v * v);
        [0, 1, 2].map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            -l[i] * (l[i] - l[j]) * (l[i] - l[k]) / ((l[i] - a) * (l[i] - b) * (l[i] - c))
        })
    }

    /// The three roots in `λ = ε²`, largest first.
    fn roots(&self, x: &Vec3) -> Result<[f64; 3]> {
        let [a, b, c] = self.squares();
        let (x2, y2, z2) = (x.x * x.x, x.y * x.y, x.z * x.z);
        let c2 = -(a + b + c - x2 - y2 - z2);
        let c1 = a * b + b * c + c * a - x2 * (b + c) - y2 * (a + c) - z2 * (a + b);
        let c0 = -(a * b * c - x2 * b * c - y2 * a * c - z2 * a * b);
        let companion = Matrix3::new(0.0, 0.0, -c0, 1.0, 0.0, -c1, 0.0, 1.0, -c2);
        let mut eig: Vec<f64> = companion
            .complex_eigenvalues()
            .iter()
            .map(|z| if z.im.abs() < 1e-12 * a { z.re } else { f64::NAN })
            .collect();
        eig.sort_by(|p, q| q.partial_cmp(p).unwrap_or(std::cmp::Ordering::Equal));
        let brackets = [(b, a), (c, b), (0.0, c)];
        let f = |l: f64| x2 / (a - l) + y2 / (b - l) + z2 / (c - l) - 1.0;
        let mut out = [0.0; 3];
        for (i, &(lo, hi)) in brackets.iter().enumerate() {
            let e = eig[i];
            let gap = 1e-9 * a;
            out[i] = if e.is_finite() && e > lo + gap && e < hi - gap {
                newton_polish(f, e, lo, hi)
            } else {
                bisect(f, lo, hi)
            };
        }
        Ok(out)
    }
}

/// A few guarded Newton steps on the monotone secular function.
fn newton_polish(f: impl Fn(f64) -> f64, mut l: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..3 {
        let h = 1e-7 * (hi - lo);
        let d = (f(l + h) - f(l - h)) / (2.0 * h);
        if !(d > 0.0) {
            break;
        }
        let next = l - f(l) / d;
        if !(next > lo && next < hi) {
            break;
        }
        l = next;
    }
    l
}

/// Root of an increasing function on `(lo, hi)` with poles at both ends.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

impl Chart for EllipticalChart {
    fn name(&self) -> &str {
        "elliptical"
    }

    fn coordinates(&self, x: &Vec3) -> Result<Vec3> {
        let outside = Error::OutsideChart([x.x, x.y, x.z]);
        let [a, b, c] = self.squares();
        if !(x.x > 0.0 && x.y > 0.0 && x.z > 0.0) || x.x * x.x / a + x.y * x.y / b + x.z * x.z / c >= 1.0 {
            return Err(outside);
        }
        let l = self.roots(x)?;
        let rho = Vec3::new(l[0].sqrt(), l[1].sqrt(), l[2].sqrt());
        if !self.contains(&rho) {
            return Err(outside);
        }
        Ok(rho)
    }

    fn position(&self, rho: &Vec3) -> Vec3 {
        let [a, b, c] = self.squares();
        let l = rho.map(|v| v * v);
        let prod = |s: f64| (s - l[0]) * (s - l[1]) * (s - l[2]);
        Vec3::new(
            (prod(a) / ((a - b) * (a - c))).max(0.0).sqrt(),
            (prod(b) / ((b - a) * (b - c))).max(0.0).sqrt(),
            (prod(c) / ((c - a) * (c - b))).max(0.0).sqrt(),
        )
    }

    fn contains(&self, rho: &Vec3) -> bool {
        let m = self.margin;
        self.alpha - m > rho[0]
            && rho[0] > self.beta + m
            && self.beta - m > rho[1]
            && rho[1] > self.gamma + m
            && self.gamma - m > rho[2]
            && rho[2] > m
    }

    fn is_orthogonal(&self) -> bool {
        true
    }

    fn analytic_jacobian(&self, rho: &Vec3) -> Option<Mat3> {
        let x = self.position(rho);
        let s = self.squares();
        Some(Mat3::from_fn(|k, i| x[k] * rho[i] / (rho[i] * rho[i] - s[k])))
    }

    fn analytic_hessian(&self, rho: &Vec3) -> Option<[Mat3; 3]> {
        let x = self.position(rho);
        let s = self.squares();
        Some([0, 1, 2].map(|k| {
            Mat3::from_fn(|i, j| {
                let di = rho[i] * rho[i] - s[k];
                if i == j {
                    -x[k] * s[k] / (di * di)
                } else {
                    let dj = rho[j] * rho[j] - s[k];
                    x[k] * rho[i] * rho[j] / (di * dj)
                }
            })
        }))
    }
}

/// The non-orthogonal chart `ρ₁ = x`, `ρ₂ = x + y`, `ρ₃ = z`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SkewedChart;

impl Chart for SkewedChart {
    fn name(&self) -> &str {
        "skewed"
    }
    fn coordinates(&self, x: &Vec3) -> Result<Vec3> {
        Ok(Vec3::new(x.x, x.x + x.y, x.z))
    }
    fn position(&self, rho: &Vec3) -> Vec3 {
        Vec3::new(rho[0], rho[1] - rho[0], rho[2])
    }
    fn contains(&self, rho: &Vec3) -> bool {
        rho.iter().all(|v| v.is_finite())
    }
    fn is_orthogonal(&self) -> bool {
        false
    }
    fn analytic_jacobian(&self, _: &Vec3) -> Option<Mat3> {
        Some(Mat3::new(1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 1.0))
    }
    fn analytic_hessian(&self, _: &Vec3) -> Option<[Mat3; 3]> {
        Some([Mat3::zeros(); 3])
    }
}

type MapFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;
type DomainFn = Arc<dyn Fn(&Vec3) -> bool + Send + Sync>;

/// A chart built from user callables. Partials are differenced.
#[derive(Clone)]
pub struct CustomChart {
    name: String,
    forward: MapFn,
    inverse: MapFn,
    domain: DomainFn,
    orthogonal: bool,
    periods: [Option<f64>; 3],
}

impl CustomChart {
    /// `forward` maps Cartesian positions to chart coordinates, `inverse` the reverse.
    pub fn new(
        name: impl Into<String>,
        forward: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
        inverse: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
    ) -> Self {
        CustomChart {
            name: name.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            domain: Arc::new(|r: &Vec3| r.iter().all(|v| v.is_finite())),
            orthogonal: false,
            periods: [None; 3],
        }
    }

    pub fn with_domain(mut self, d: impl Fn(&Vec3) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Arc::new(d);
        self
    }

    pub fn orthogonal(mut self, yes: bool) -> Self {
        self.orthogonal = yes;
        self
    }

    pub fn with_periods(mut self, p: [Option<f64>; 3]) -> Self {
        self.periods = p;
        self
    }
}

impl fmt::Debug for CustomChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomChart").field("name", &self.name).finish()
    }
}

impl Chart for CustomChart {
    fn name(&self) -> &str {
        &self.name
    }
    fn coordinates(&self, x: &Vec3) -> Result<Vec3> {
        let rho = (self.forward)(x);
        if !self.contains(&rho) {
            return Err(Error::OutsideChart([x.x, x.y, x.z]));
        }
        Ok(rho)
    }
    fn position(&self, rho: &Vec3) -> Vec3 {
        (self.inverse)(rho)
    }
    fn contains(&self, rho: &Vec3) -> bool {
        (self.domain)(rho)
    }
    fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }
    fn periods(&self) -> [Option<f64>; 3] {
        self.periods
    }
}

/// Built-in chart by name: `cartesian`, `polar`, `cylindrical`, `skewed`, or
/// `elliptical` with `[alpha, beta, gamma]`.
pub fn chart_by_name(name: &str, params: &[f64]) -> Result<Arc<dyn Chart>> {
    Ok(match name {
        "cartesian" => Arc::new(CartesianChart),
        "polar" => Arc::new(PolarChart::default()),
        "cylindrical" => Arc::new(CylindricalChart::default()),
        "skewed" => Arc::new(SkewedChart),
        "elliptical" => match params {
            [a, b, c] => Arc::new(EllipticalChart::new(*a, *b, *c)?),
            [] => Arc::new(EllipticalChart::new(3.0, 2.0, 1.0)?),
            _ => return Err(Error::InvalidParameter("elliptical chart takes [alpha, beta, gamma]".into())),
        },
        other => return Err(Error::InvalidParameter(format!("unknown chart `{other}`"))),
    })
}
