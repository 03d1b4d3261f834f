use std::fmt;
use std::sync::Arc;

use crate::{Mat3, Vec3};

type PathFn = Arc<dyn Fn(&Vec3, f64) -> Vec3 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Vec3, f64) -> Mat3 + Send + Sync>;

/// Closed-form particle motion `x(a, t)` with optional exact derivatives.
///
/// Gradients are with respect to labels: entry `(i, j)` is `∂x_i/∂a_j` (or `∂u_i/∂a_j`).
#[derive(Clone)]
pub struct AnalyticMotion {
    pub(crate) position: PathFn,
    pub(crate) velocity: PathFn,
    pub(crate) acceleration: Option<PathFn>,
    pub(crate) gradient: Option<GradFn>,
    pub(crate) velocity_gradient: Option<GradFn>,
}

impl fmt::Debug for AnalyticMotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticMotion")
            .field("acceleration", &self.acceleration.is_some())
            .field("gradient", &self.gradient.is_some())
            .field("velocity_gradient", &self.velocity_gradient.is_some())
            .finish()
    }
}

impl AnalyticMotion {
    pub fn new(
        position: impl Fn(&Vec3, f64) -> Vec3 + Send + Sync + 'static,
        velocity: impl Fn(&Vec3, f64) -> Vec3 + Send + Sync + 'static,
    ) -> Self {
        AnalyticMotion {
            position: Arc::new(position),
            velocity: Arc::new(velocity),
            acceleration: None,
            gradient: None,
            velocity_gradient: None,
        }
    }

    pub fn with_acceleration(mut self, f: impl Fn(&Vec3, f64) -> Vec3 + Send + Sync + 'static) -> Self {
        self.acceleration = Some(Arc::new(f));
        self
    }

    pub fn with_gradient(mut self, f: impl Fn(&Vec3, f64) -> Mat3 + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(f));
        self
    }

    pub fn with_velocity_gradient(mut self, f: impl Fn(&Vec3, f64) -> Mat3 + Send + Sync + 'static) -> Self {
        self.velocity_gradient = Some(Arc::new(f));
        self
    }

    /// The affine motion `x = A(t) a + b(t)` given `A`, `b` and their first two time derivatives.
    pub fn affine(
        matrix: impl Fn(f64) -> [Mat3; 3] + Send + Sync + 'static,
        offset: impl Fn(f64) -> [Vec3; 3] + Send + Sync + 'static,
    ) -> Self {
        let m = Arc::new(matrix);
        let o = Arc::new(offset);
        let (m1, m2, m3, m4) = (m.clone(), m.clone(), m.clone(), m.clone());
        let (o1, o2, o3) = (o.clone(), o.clone(), o);
        AnalyticMotion::new(
            move |a, t| m1(t)[0] * a + o1(t)[0],
            move |a, t| m2(t)[1] * a + o2(t)[1],
        )
        .with_acceleration(move |a, t| m3(t)[2] * a + o3(t)[2])
        .with_gradient(move |_, t| m4(t)[0])
        .with_velocity_gradient(move |_, t| m(t)[1])
    }
}
