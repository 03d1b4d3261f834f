use serde::{Deserialize, Serialize};

use super::{pairwise_dot, Field, Rank};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    Trapezoid,
    /// Samples are taken to sit at interval midpoints; every sample gets weight `h`.
    Midpoint,
    /// Composite Simpson; needs an even number of intervals.
    Simpson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub description: String,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::trapezoid()
    }
}

impl From<QuadratureKind> for QuadratureRule {
    fn from(kind: QuadratureKind) -> Self {
        let description = match kind {
            QuadratureKind::Trapezoid => "composite trapezoid",
            QuadratureKind::Midpoint => "composite midpoint (samples at cell centres)",
            QuadratureKind::Simpson => "composite Simpson (even interval count)",
        };
        QuadratureRule {
            kind,
            description: description.to_string(),
        }
    }
}

/// One tensor-product direction of an integration domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadAxis {
    pub samples: usize,
    pub spacing: f64,
    /// Periodic direction: samples cover one period without repeating the first.
    pub closed: bool,
}

impl QuadratureRule {
    pub fn trapezoid() -> Self {
        QuadratureKind::Trapezoid.into()
    }

    pub fn midpoint() -> Self {
        QuadratureKind::Midpoint.into()
    }

    pub fn simpson() -> Self {
        QuadratureKind::Simpson.into()
    }

    /// Weights for one direction.
    pub fn weights(&self, axis: QuadAxis) -> Result<Vec<f64>> {
        let QuadAxis {
            samples: n,
            spacing: h,
            closed,
        } = axis;
        if n == 0 {
            return Err(Error::Quadrature("empty domain".into()));
        }
        match (self.kind, closed) {
            (QuadratureKind::Midpoint, _) | (QuadratureKind::Trapezoid, true) => Ok(vec![h; n]),
            (QuadratureKind::Trapezoid, false) => {
                if n < 2 {
                    return Err(Error::Quadrature("trapezoid needs two samples".into()));
                }
                let mut w = vec![h; n];
                w[0] = 0.5 * h;
                w[n - 1] = 0.5 * h;
                Ok(w)
            }
            (QuadratureKind::Simpson, true) => {
                if n % 2 != 0 {
                    return Err(Error::Quadrature(format!(
                        "Simpson needs an even interval count, got {n}"
                    )));
                }
                Ok((0..n)
                    .map(|i| if i % 2 == 0 { 2.0 * h / 3.0 } else { 4.0 * h / 3.0 })
                    .collect())
            }
            (QuadratureKind::Simpson, false) => {
                let intervals = n.saturating_sub(1);
                if intervals == 0 || intervals % 2 != 0 {
                    return Err(Error::Quadrature(format!(
                        "Simpson needs an even interval count, got {intervals}"
                    )));
                }
                Ok((0..n)
                    .map(|i| {
                        if i == 0 || i == n - 1 {
                            h / 3.0
                        } else if i % 2 == 1 {
                            4.0 * h / 3.0
                        } else {
                            2.0 * h / 3.0
                        }
                    })
                    .collect())
            }
        }
    }

    /// Tensor-product weights over row-major samples (last axis fastest).
    pub fn tensor_weights(&self, axes: &[QuadAxis]) -> Result<Vec<f64>> {
        let mut w = vec![1.0];
        for ax in axes {
            let wa = self.weights(*ax)?;
            w = w.iter().flat_map(|a| wa.iter().map(move |b| a * b)).collect();
        }
        Ok(w)
    }

    /// Integral of row-major samples over a tensor-product domain.
    pub fn integrate(&self, values: &[f64], axes: &[QuadAxis]) -> Result<f64> {
        if axes.is_empty() {
            return Err(Error::Quadrature("empty domain".into()));
        }
        let w = self.tensor_weights(axes)?;
        if w.len() != values.len() {
            return Err(Error::Quadrature(format!(
                "{} samples for a domain of {}",
                values.len(),
                w.len()
            )));
        }
        Ok(pairwise_dot(&w, values))
    }

    /// Line integral of samples spaced `h` in the curve parameter.
    pub fn integrate_line(&self, values: &[f64], h: f64, closed: bool) -> Result<f64> {
        self.integrate(
            values,
            &[QuadAxis {
                samples: values.len(),
                spacing: h,
                closed,
            }],
        )
    }

    /// Integral of a scalar field over its whole grid; periodic axes are closed.
    pub fn integrate_field(&self, f: &Field) -> Result<f64> {
        f.expect_rank(Rank::Scalar)?;
        let axes: Vec<QuadAxis> = f
            .grid()
            .axes()
            .iter()
            .map(|a| QuadAxis {
                samples: a.nodes,
                spacing: a.spacing,
                closed: a.periodic,
            })
            .collect();
        self.integrate(f.data(), &axes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Axis, LabelGrid};
    use std::f64::consts::PI;

    #[test]
    fn x_dy_around_unit_circle() {
        let n = 256;
        let h = 2.0 * PI / n as f64;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * h;
                t.cos() * t.cos()
            })
            .collect();
        let v = QuadratureRule::trapezoid().integrate_line(&vals, h, true).unwrap();
        assert!((v - PI).abs() < 1e-3);
        let zero = QuadratureRule::trapezoid().integrate_line(&vec![0.0; n], h, true).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn unit_cube_volume() {
        let g = LabelGrid::cube(0.0, 1.0, 16, 3).unwrap();
        let one = Field::scalar_from_fn(g, |_| 1.0);
        for q in [QuadratureRule::trapezoid(), QuadratureRule::simpson()] {
            assert!((q.integrate_field(&one).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn simpson_exact_on_cubics_and_rejects_odd() {
        let g = LabelGrid::new(vec![Axis::closed(0.0, 2.0, 8)]).unwrap();
        let f = Field::scalar_from_fn(g, |a| a.x.powi(3));
        assert!((QuadratureRule::simpson().integrate_field(&f).unwrap() - 4.0).abs() < 1e-13);
        let odd = Field::scalar_from_fn(LabelGrid::new(vec![Axis::closed(0.0, 2.0, 7)]).unwrap(), |_| 1.0);
        assert!(matches!(
            QuadratureRule::simpson().integrate_field(&odd),
            Err(Error::Quadrature(_))
        ));
    }

    #[test]
    fn midpoint_on_cell_centred_grid() {
        let g = LabelGrid::new(vec![Axis::cell_centered(0.0, 1.0, 10)]).unwrap();
        let f = Field::scalar_from_fn(g, |a| a.x);
        assert!((QuadratureRule::midpoint().integrate_field(&f).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_domain_is_an_error() {
        assert!(QuadratureRule::trapezoid().integrate_line(&[], 0.1, true).is_err());
    }
}
