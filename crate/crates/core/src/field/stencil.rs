use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Field, LabelGrid, Rank};
use crate::{Error, Result};

/// Formal accuracy of a finite-difference stencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn value(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }

    /// Nodes an axis needs before the stencil can be applied.
    pub fn min_nodes(self) -> usize {
        match self {
            StencilOrder::Second => 3,
            StencilOrder::Fourth => 6,
        }
    }
}

impl TryFrom<u8> for StencilOrder {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            o => Err(format!("stencil order must be 2 or 4, got {o}")),
        }
    }
}

impl From<StencilOrder> for u8 {
    fn from(o: StencilOrder) -> u8 {
        o.value() as u8
    }
}

/// What happens at the ends of an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// One-sided stencils at both ends of every axis, even periodic ones.
    OneSided,
    /// Wrap around on axes flagged periodic; one-sided stencils elsewhere.
    #[default]
    PeriodicWrap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StencilSpec {
    pub order: StencilOrder,
    #[serde(default)]
    pub boundary: BoundaryPolicy,
}

impl Default for StencilSpec {
    fn default() -> Self {
        StencilSpec::second_order()
    }
}

impl StencilSpec {
    pub fn second_order() -> Self {
        StencilSpec {
            order: StencilOrder::Second,
            boundary: BoundaryPolicy::PeriodicWrap,
        }
    }

    pub fn fourth_order() -> Self {
        StencilSpec {
            order: StencilOrder::Fourth,
            boundary: BoundaryPolicy::PeriodicWrap,
        }
    }

    pub fn with_boundary(mut self, boundary: BoundaryPolicy) -> Self {
        self.boundary = boundary;
        self
    }

    fn check(&self, grid: &LabelGrid, axis: usize) -> Result<(usize, f64, bool)> {
        let ax = grid.axis(axis)?;
        let need = self.order.min_nodes();
        if ax.nodes < need {
            return Err(Error::StencilTooLarge {
                order: self.order.value(),
                axis,
                needed: need,
                found: ax.nodes,
            });
        }
        let wrap = ax.periodic && self.boundary == BoundaryPolicy::PeriodicWrap;
        Ok((ax.nodes, ax.spacing, wrap))
    }
}

/// Derivative at position `i` of a line of `n` samples read through `at`.
#[inline]
fn derivative_1d(at: impl Fn(usize) -> f64, i: usize, n: usize, h: f64, order: StencilOrder, wrap: bool) -> f64 {
    let w = |k: isize| -> f64 { at(((i as isize + k).rem_euclid(n as isize)) as usize) };
    match order {
        StencilOrder::Second => {
            if wrap || (i > 0 && i + 1 < n) {
                (w(1) - w(-1)) / (2.0 * h)
            } else if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else {
                (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
            }
        }
        StencilOrder::Fourth => {
            if wrap || (i > 1 && i + 2 < n) {
                (w(-2) - 8.0 * w(-1) + 8.0 * w(1) - w(2)) / (12.0 * h)
            } else if i == 0 {
                (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h)
            } else if i == 1 {
                (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12.0 * h)
            } else if i == n - 1 {
                (25.0 * at(n - 1) - 48.0 * at(n - 2) + 36.0 * at(n - 3) - 16.0 * at(n - 4)
                    + 3.0 * at(n - 5))
                    / (12.0 * h)
            } else {
                (3.0 * at(n - 1) + 10.0 * at(n - 2) - 18.0 * at(n - 3) + 6.0 * at(n - 4)
                    - at(n - 5))
                    / (12.0 * h)
            }
        }
    }
}

/// Partial derivative of every component of `f` along label axis `axis`.
pub fn differentiate(f: &Field, axis: usize, s: &StencilSpec) -> Result<Field> {
    let grid = f.grid();
    let (n, h, wrap) = s.check(grid, axis)?;
    f.check_finite()?;
    let nc = f.rank().components();
    let stride = grid.stride(axis);
    let src = f.data();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(nc).enumerate().for_each(|(node, dst)| {
        let i = grid.index(node)[axis];
        let base = node - i * stride;
        for (c, d) in dst.iter_mut().enumerate() {
            *d = derivative_1d(|j| src[(base + j * stride) * nc + c], i, n, h, s.order, wrap);
        }
    });
    Field::new(grid.clone(), f.rank(), out)
}

/// Derivative along label axis `axis`, or zero when the grid has no such axis
/// (fields of a lower-dimensional grid are constant along the missing directions).
fn partial_or_zero(f: &Field, axis: usize, s: &StencilSpec) -> Result<Field> {
    if axis < f.grid().ndim() {
        differentiate(f, axis, s)
    } else {
        Ok(Field::zeros(f.grid().clone(), f.rank()))
    }
}

/// Gradient of a scalar field as a vector field.
pub fn gradient(f: &Field, s: &StencilSpec) -> Result<Field> {
    f.expect_rank(Rank::Scalar)?;
    let parts = (0..3)
        .map(|k| partial_or_zero(f, k, s))
        .collect::<Result<Vec<_>>>()?;
    Field::from_components(&parts)
}

/// Divergence of a vector field.
pub fn divergence(v: &Field, s: &StencilSpec) -> Result<Field> {
    v.expect_rank(Rank::Vector)?;
    let mut acc = Field::zeros(v.grid().clone(), Rank::Scalar);
    for k in 0..v.grid().ndim() {
        let d = differentiate(&v.component(k), k, s)?;
        acc = acc.linear_combination(1.0, &d, 1.0)?;
    }
    Ok(acc)
}

/// Right-handed curl of a vector field.
pub fn curl(v: &Field, s: &StencilSpec) -> Result<Field> {
    v.expect_rank(Rank::Vector)?;
    let d = |comp: usize, axis: usize| partial_or_zero(&v.component(comp), axis, s);
    let cx = d(2, 1)?.linear_combination(1.0, &d(1, 2)?, -1.0)?;
    let cy = d(0, 2)?.linear_combination(1.0, &d(2, 0)?, -1.0)?;
    let cz = d(1, 0)?.linear_combination(1.0, &d(0, 1)?, -1.0)?;
    Field::from_components(&[cx, cy, cz])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Axis, LabelGrid};
    use std::f64::consts::PI;

    fn max_err(f: &Field, exact: impl Fn(usize) -> f64) -> f64 {
        (0..f.node_count())
            .map(|n| (f.scalar(n) - exact(n)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = LabelGrid::cube(0.0, 1.0, 8, 3).unwrap();
        let f = Field::scalar_from_fn(g, |_| 3.5);
        for axis in 0..3 {
            for s in [StencilSpec::second_order(), StencilSpec::fourth_order()] {
                let d = differentiate(&f, axis, &s).unwrap();
                assert!(d.data().iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn affine_exact_for_second_order_including_boundaries() {
        let g = LabelGrid::cube(-1.0, 2.0, 9, 2).unwrap();
        let f = Field::scalar_from_fn(g.clone(), |a| 2.0 * a.x - 0.5 * a.y + 1.0);
        let dx = differentiate(&f, 0, &StencilSpec::second_order()).unwrap();
        assert!(max_err(&dx, |_| 2.0) < 1e-13);
    }

    #[test]
    fn fourth_order_exact_on_cubics() {
        let g = LabelGrid::new(vec![Axis::closed(0.0, 1.0, 10)]).unwrap();
        let f = Field::scalar_from_fn(g.clone(), |a| a.x.powi(3) - 2.0 * a.x * a.x);
        let d = differentiate(&f, 0, &StencilSpec::fourth_order()).unwrap();
        assert!(max_err(&d, |n| {
            let x = g.label(n).x;
            3.0 * x * x - 4.0 * x
        }) < 1e-12);
    }

    #[test]
    fn fourth_order_needs_six_nodes() {
        let g = LabelGrid::new(vec![Axis::closed(0.0, 1.0, 4)]).unwrap();
        let f = Field::scalar_from_fn(g, |a| a.x);
        assert!(matches!(
            differentiate(&f, 0, &StencilSpec::fourth_order()),
            Err(Error::StencilTooLarge { .. })
        ));
    }

    #[test]
    fn invalid_axis_is_an_error() {
        let g = LabelGrid::cube(0.0, 1.0, 8, 2).unwrap();
        let f = Field::scalar_from_fn(g, |a| a.x);
        assert!(matches!(
            differentiate(&f, 2, &StencilSpec::second_order()),
            Err(Error::InvalidAxis { .. })
        ));
    }

    fn periodic_sine_error(cells: usize, s: StencilSpec) -> f64 {
        let g = LabelGrid::new(vec![Axis::periodic(0.0, 2.0 * PI, cells)]).unwrap();
        let f = Field::scalar_from_fn(g.clone(), |a| a.x.sin());
        let d = differentiate(&f, 0, &s).unwrap();
        max_err(&d, |n| g.label(n).x.cos())
    }

    #[test]
    fn periodic_sine_orders() {
        for (s, p) in [(StencilSpec::second_order(), 2.0), (StencilSpec::fourth_order(), 4.0)] {
            let e1 = periodic_sine_error(64, s);
            let e2 = periodic_sine_error(128, s);
            let order = (e1 / e2).log2();
            assert!((order - p).abs() < 0.15, "order {order} vs {p}");
        }
    }

    #[test]
    fn one_sided_policy_on_periodic_axis_still_converges() {
        let s = StencilSpec::second_order().with_boundary(BoundaryPolicy::OneSided);
        let e1 = periodic_sine_error(64, s);
        let e2 = periodic_sine_error(128, s);
        assert!((e1 / e2).log2() > 1.8);
    }

    #[test]
    fn curl_of_rotation_and_gradient_of_quadratic() {
        let g = LabelGrid::cube(-1.0, 1.0, 8, 3).unwrap();
        let v = Field::vector_from_fn(g.clone(), |a| crate::Vec3::new(-a.y, a.x, 0.0));
        let c = curl(&v, &StencilSpec::second_order()).unwrap();
        for n in 0..g.node_count() {
            assert!((c.vector(n) - crate::Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        }
        let div = divergence(&v, &StencilSpec::second_order()).unwrap();
        assert!(div.data().iter().all(|d| d.abs() < 1e-12));
        let f = Field::scalar_from_fn(g.clone(), |a| a.x * a.y);
        let gr = gradient(&f, &StencilSpec::second_order()).unwrap();
        for n in 0..g.node_count() {
            let a = g.label(n);
            assert!((gr.vector(n) - crate::Vec3::new(a.y, a.x, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn missing_axes_differentiate_to_zero() {
        let g = LabelGrid::cube(-1.0, 1.0, 8, 2).unwrap();
        let v = Field::vector_from_fn(g.clone(), |a| crate::Vec3::new(-a.y, a.x, 7.0));
        let c = curl(&v, &StencilSpec::second_order()).unwrap();
        assert!((c.vector(5).z - 2.0).abs() < 1e-12);
        assert!(c.vector(5).x.abs() < 1e-12);
    }
}
