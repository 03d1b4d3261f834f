use serde::{Deserialize, Serialize};

use super::spectral::spectral_derivative_vec;
use crate::{Error, Result, Vec3};

/// Orthonormal `(e1, e2)` spanning the plane normal to `n`, with `e1 × e2 = n̂`.
pub fn plane_frame(normal: &Vec3) -> Result<(Vec3, Vec3)> {
    let n = normal
        .try_normalize(1e-300)
        .ok_or_else(|| Error::Degenerate("zero normal".into()))?;
    let seed = if n.z.abs() > 0.9 { Vec3::x() } else { Vec3::z() };
    let e1 = (seed - n * seed.dot(&n)).normalize();
    let e2 = n.cross(&e1);
    Ok((e1, e2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LoopShape {
    /// Smooth closed curve sampled uniformly in a parameter of period `2π`.
    Smooth,
    /// Straight sides in label space, `per_side` samples each (the end vertex belongs to the next side).
    Polygon { sides: usize, per_side: usize },
}

/// A closed chain of particle labels.
#[derive(Clone, Debug)]
pub struct MaterialLoop {
    points: Vec<Vec3>,
    /// `da/ds` at each point: per unit of the `2π` parameter for smooth loops, per unit
    /// side parameter in `[0, 1]` for polygons.
    tangents: Vec<Vec3>,
    shape: LoopShape,
}

/// Loops need at least this many points.
pub const MIN_LOOP_POINTS: usize = 16;

impl MaterialLoop {
    fn checked(points: Vec<Vec3>, tangents: Vec<Vec3>, shape: LoopShape) -> Result<Self> {
        if points.len() < MIN_LOOP_POINTS {
            return Err(Error::Degenerate(format!(
                "a loop needs at least {MIN_LOOP_POINTS} points, got {}",
                points.len()
            )));
        }
        let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
        let n = points.len();
        for i in 0..n {
            if (points[(i + 1) % n] - points[i]).norm() <= 1e-13 * scale {
                return Err(Error::Degenerate(format!("repeated consecutive loop points at {i}")));
            }
        }
        Ok(MaterialLoop { points, tangents, shape })
    }

    /// Circle of labels counter-clockwise about `normal`.
    pub fn circle(center: Vec3, radius: f64, normal: Vec3, points: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Degenerate(format!("circle radius {radius}")));
        }
        let (e1, e2) = plane_frame(&normal)?;
        let (p, t): (Vec<Vec3>, Vec<Vec3>) = (0..points)
            .map(|i| {
                let (s, c) = (std::f64::consts::TAU * i as f64 / points as f64).sin_cos();
                (center + radius * (c * e1 + s * e2), radius * (-s * e1 + c * e2))
            })
            .unzip();
        Self::checked(p, t, LoopShape::Smooth)
    }

    /// Closed polygon through `vertices` with `per_side` samples on every side.
    pub fn polygon(vertices: &[Vec3], per_side: usize) -> Result<Self> {
        if vertices.len() < 3 || per_side < 5 {
            return Err(Error::Degenerate("a polygon needs 3 vertices and 5 samples per side".into()));
        }
        let k = vertices.len();
        let mut p = Vec::with_capacity(k * per_side);
        let mut t = Vec::with_capacity(k * per_side);
        for i in 0..k {
            let (v0, v1) = (vertices[i], vertices[(i + 1) % k]);
            for j in 0..per_side {
                p.push(v0 + (v1 - v0) * (j as f64 / per_side as f64));
                t.push(v1 - v0);
            }
        }
        Self::checked(
            p,
            t,
            LoopShape::Polygon {
                sides: k,
                per_side,
            },
        )
    }

    /// Parallelogram `corner, corner + e1, corner + e1 + e2, corner + e2`.
    pub fn parallelogram(corner: Vec3, e1: Vec3, e2: Vec3, per_side: usize) -> Result<Self> {
        Self::polygon(&[corner, corner + e1, corner + e1 + e2, corner + e2], per_side)
    }

    /// A smooth closed loop through explicit labels, taken as uniform in a `2π`-periodic
    /// parameter; tangents are Fourier derivatives.
    pub fn from_points(points: Vec<Vec3>) -> Result<Self> {
        let t = spectral_derivative_vec(&points, std::f64::consts::TAU);
        Self::checked(points, t, LoopShape::Smooth)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn tangents(&self) -> &[Vec3] {
        &self.tangents
    }

    pub fn shape(&self) -> &LoopShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same loop traversed the other way.
    pub fn reversed(&self) -> Self {
        match self.shape {
            LoopShape::Smooth => {
                let n = self.points.len();
                let idx: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
                MaterialLoop {
                    points: idx.iter().map(|&i| self.points[i]).collect(),
                    tangents: idx.iter().map(|&i| -self.tangents[i]).collect(),
                    shape: LoopShape::Smooth,
                }
            }
            LoopShape::Polygon { sides, per_side } => {
                let mut verts: Vec<Vec3> = (0..sides).map(|k| self.points[k * per_side]).collect();
                verts.reverse();
                Self::polygon(&verts, per_side).expect("reversal of a valid polygon")
            }
        }
    }

    /// Label-space length by the loop's own quadrature.
    pub fn label_length(&self) -> f64 {
        let h = self.parameter_step();
        self.tangents.iter().map(|t| t.norm() * h).sum()
    }

    pub(crate) fn parameter_step(&self) -> f64 {
        match self.shape {
            LoopShape::Smooth => std::f64::consts::TAU / self.points.len() as f64,
            LoopShape::Polygon { per_side, .. } => 1.0 / per_side as f64,
        }
    }
}
