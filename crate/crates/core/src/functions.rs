//! Closed-form scalar and vector functions of position and time, with optional
//! exact derivatives. Missing derivatives fall back to central differences.

use std::fmt;
use std::sync::Arc;

use crate::{Mat3, Vec3};

/// Relative step used when a derivative has to be approximated by differences.
pub const DEFAULT_STEP: f64 = 1e-5;

type ScalarFn = Arc<dyn Fn(&Vec3, f64) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&Vec3, f64) -> Vec3 + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&Vec3, f64) -> Mat3 + Send + Sync>;
type CutFn = Arc<dyn Fn(&Vec3, &Vec3) -> bool + Send + Sync>;

/// A scalar function `f(x, t)`.
#[derive(Clone)]
pub struct ScalarFunction {
    value: ScalarFn,
    gradient: Option<VectorFn>,
    hessian: Option<MatrixFn>,
    time_derivative: Option<ScalarFn>,
    cut: Option<CutFn>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .field("time_derivative", &self.time_derivative.is_some())
            .field("branch_cut", &self.cut.is_some())
            .finish()
    }
}

impl ScalarFunction {
    pub fn new(value: impl Fn(&Vec3, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFunction {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
            time_derivative: None,
            cut: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        ScalarFunction::new(move |_, _| c)
            .with_gradient(|_, _| Vec3::zeros())
            .with_hessian(|_, _| Mat3::zeros())
            .with_time_derivative(|_, _| 0.0)
    }

    pub fn with_gradient(mut self, g: impl Fn(&Vec3, f64) -> Vec3 + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&Vec3, f64) -> Mat3 + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_time_derivative(mut self, d: impl Fn(&Vec3, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.time_derivative = Some(Arc::new(d));
        self
    }

    /// Declare a branch cut: `crosses(p, q)` is true when the segment from `p` to `q` crosses it.
    pub fn with_branch_cut(mut self, crosses: impl Fn(&Vec3, &Vec3) -> bool + Send + Sync + 'static) -> Self {
        self.cut = Some(Arc::new(crosses));
        self
    }

    /// Drop every registered derivative so that all of them are differenced.
    pub fn without_derivatives(&self) -> Self {
        ScalarFunction {
            value: self.value.clone(),
            gradient: None,
            hessian: None,
            time_derivative: None,
            cut: self.cut.clone(),
        }
    }

    /// `self + other`, keeping derivatives only when both sides have them.
    pub fn plus(&self, other: &ScalarFunction) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let value = {
            let (a, b) = (a.value.clone(), b.value.clone());
            move |x: &Vec3, t: f64| a(x, t) + b(x, t)
        };
        let mut out = ScalarFunction::new(value);
        if let (Some(ga), Some(gb)) = (a.gradient.clone(), b.gradient.clone()) {
            out = out.with_gradient(move |x, t| ga(x, t) + gb(x, t));
        }
        if let (Some(ha), Some(hb)) = (a.hessian.clone(), b.hessian.clone()) {
            out = out.with_hessian(move |x, t| ha(x, t) + hb(x, t));
        }
        if let (Some(da), Some(db)) = (a.time_derivative.clone(), b.time_derivative.clone()) {
            out = out.with_time_derivative(move |x, t| da(x, t) + db(x, t));
        }
        out.cut = a.cut.or(b.cut);
        out
    }

    pub fn value(&self, x: &Vec3, t: f64) -> f64 {
        (self.value)(x, t)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn has_time_derivative(&self) -> bool {
        self.time_derivative.is_some()
    }

    pub fn exact_gradient(&self, x: &Vec3, t: f64) -> Option<Vec3> {
        self.gradient.as_ref().map(|g| g(x, t))
    }

    /// Exact gradient if registered, else central differences with step `h`.
    pub fn gradient(&self, x: &Vec3, t: f64, h: f64) -> Vec3 {
        match &self.gradient {
            Some(g) => g(x, t),
            None => central_gradient(|p| self.value(p, t), x, h),
        }
    }

    /// Exact Hessian if registered, else differences of the gradient.
    pub fn hessian(&self, x: &Vec3, t: f64, h: f64) -> Mat3 {
        if let Some(hf) = &self.hessian {
            return hf(x, t);
        }
        let mut m = Mat3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            let col = (self.gradient(&(x + e), t, h) - self.gradient(&(x - e), t, h)) / (2.0 * h);
            m.set_column(j, &col);
        }
        0.5 * (m + m.transpose())
    }

    /// Exact ∂f/∂t if registered, else a centred difference with step `dt`.
    pub fn time_derivative(&self, x: &Vec3, t: f64, dt: f64) -> f64 {
        match &self.time_derivative {
            Some(d) => d(x, t),
            None => (self.value(x, t + dt) - self.value(x, t - dt)) / (2.0 * dt),
        }
    }

    /// True when the segment `p`–`q` crosses the declared branch cut.
    pub fn crosses_cut(&self, p: &Vec3, q: &Vec3) -> bool {
        self.cut.as_ref().is_some_and(|c| c(p, q))
    }

    pub fn has_branch_cut(&self) -> bool {
        self.cut.is_some()
    }
}

/// A vector function `u(x, t)`, typically an Eulerian velocity field.
#[derive(Clone)]
pub struct VectorFunction {
    value: VectorFn,
    jacobian: Option<MatrixFn>,
    time_derivative: Option<VectorFn>,
}

impl fmt::Debug for VectorFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFunction")
            .field("jacobian", &self.jacobian.is_some())
            .field("time_derivative", &self.time_derivative.is_some())
            .finish()
    }
}

impl VectorFunction {
    pub fn new(value: impl Fn(&Vec3, f64) -> Vec3 + Send + Sync + 'static) -> Self {
        VectorFunction {
            value: Arc::new(value),
            jacobian: None,
            time_derivative: None,
        }
    }

    pub fn zero() -> Self {
        VectorFunction::new(|_, _| Vec3::zeros())
            .with_jacobian(|_, _| Mat3::zeros())
            .steady()
    }

    /// Register `∂u_i/∂x_j` as entry `(i, j)`.
    pub fn with_jacobian(mut self, j: impl Fn(&Vec3, f64) -> Mat3 + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_time_derivative(mut self, d: impl Fn(&Vec3, f64) -> Vec3 + Send + Sync + 'static) -> Self {
        self.time_derivative = Some(Arc::new(d));
        self
    }

    /// Mark the field as time independent.
    pub fn steady(self) -> Self {
        self.with_time_derivative(|_, _| Vec3::zeros())
    }

    pub fn without_derivatives(&self) -> Self {
        VectorFunction {
            value: self.value.clone(),
            jacobian: None,
            time_derivative: None,
        }
    }

    pub fn value(&self, x: &Vec3, t: f64) -> Vec3 {
        (self.value)(x, t)
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn jacobian(&self, x: &Vec3, t: f64, h: f64) -> Mat3 {
        match &self.jacobian {
            Some(j) => j(x, t),
            None => {
                let mut m = Mat3::zeros();
                for j in 0..3 {
                    let mut e = Vec3::zeros();
                    e[j] = h;
                    m.set_column(j, &((self.value(&(x + e), t) - self.value(&(x - e), t)) / (2.0 * h)));
                }
                m
            }
        }
    }

    pub fn time_derivative(&self, x: &Vec3, t: f64, dt: f64) -> Vec3 {
        match &self.time_derivative {
            Some(d) => d(x, t),
            None => (self.value(x, t + dt) - self.value(x, t - dt)) / (2.0 * dt),
        }
    }

    /// Material acceleration `∂u/∂t + (∇u) u`.
    pub fn acceleration(&self, x: &Vec3, t: f64, h: f64) -> Vec3 {
        self.time_derivative(x, t, h) + self.jacobian(x, t, h) * self.value(x, t)
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn central_gradient(f: impl Fn(&Vec3) -> f64, x: &Vec3, h: f64) -> Vec3 {
    let mut g = Vec3::zeros();
    for j in 0..3 {
        let mut e = Vec3::zeros();
        e[j] = h;
        g[j] = (f(&(x + e)) - f(&(x - e))) / (2.0 * h);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallback_gradient_matches_exact() {
        let f = ScalarFunction::new(|x, _| x.x * x.x * x.y).with_gradient(|x, _| Vec3::new(2.0 * x.x * x.y, x.x * x.x, 0.0));
        let p = Vec3::new(0.3, -0.7, 1.1);
        let fd = f.without_derivatives().gradient(&p, 0.0, 1e-5);
        assert!((fd - f.gradient(&p, 0.0, 1e-5)).norm() < 1e-9);
    }

    #[test]
    fn sum_keeps_common_derivatives() {
        let a = ScalarFunction::new(|x, _| x.x).with_gradient(|_, _| Vec3::x());
        let b = ScalarFunction::constant(2.0);
        let s = a.plus(&b);
        assert!(s.has_gradient());
        assert!(!s.has_hessian());
        assert_eq!(s.value(&Vec3::new(1.0, 0.0, 0.0), 0.0), 3.0);
    }

    #[test]
    fn acceleration_of_rotation_is_centripetal() {
        let w = 2.0;
        let u = VectorFunction::new(move |x, _| Vec3::new(-w * x.y, w * x.x, 0.0)).steady();
        let p = Vec3::new(1.0, 0.5, 0.0);
        let a = u.acceleration(&p, 0.0, 1e-5);
        assert!((a + w * w * Vec3::new(1.0, 0.5, 0.0)).norm() < 1e-8);
    }
}
