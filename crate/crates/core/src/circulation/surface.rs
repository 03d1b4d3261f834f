use std::f64::consts::{FRAC_PI_2, TAU};

use super::curve::{plane_frame, MaterialLoop};
use crate::field::{Axis, LabelGrid, QuadAxis, QuadratureRule};
use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BoundaryWalk {
    /// The boundary is the last row of the first parameter (second parameter periodic).
    LastRow,
    /// The boundary is the perimeter of a square parameter grid.
    Perimeter,
    None,
}

/// A patch of labels parameterized over a two-dimensional grid `(s1, s2)`.
#[derive(Clone, Debug)]
pub struct MaterialSurface {
    param: LabelGrid,
    points: Vec<Vec3>,
    tangents: [Vec<Vec3>; 2],
    boundary: Option<MaterialLoop>,
    walk: BoundaryWalk,
    /// Normal used where the parameterization degenerates (disk centre, cap pole).
    pole_normal: Option<Vec3>,
}

impl MaterialSurface {
    /// General patch from a parameter grid, a label map and its parameter tangents.
    pub fn custom(
        param: LabelGrid,
        label: impl Fn(f64, f64) -> Vec3,
        tangents: impl Fn(f64, f64) -> (Vec3, Vec3),
        boundary: Option<MaterialLoop>,
    ) -> Result<Self> {
        if param.ndim() != 2 {
            return Err(Error::InvalidGrid("surface parameter grid must be two-dimensional".into()));
        }
        let mut points = Vec::with_capacity(param.node_count());
        let (mut t1, mut t2) = (Vec::new(), Vec::new());
        for n in 0..param.node_count() {
            let s = param.label(n);
            points.push(label(s.x, s.y));
            let (a, b) = tangents(s.x, s.y);
            t1.push(a);
            t2.push(b);
        }
        Ok(MaterialSurface {
            param,
            points,
            tangents: [t1, t2],
            boundary,
            walk: BoundaryWalk::None,
            pole_normal: None,
        })
    }

    /// Flat disk with polar parameters `(r, θ)`; normal orientation right-handed with its
    /// boundary circle.
    pub fn disk(center: Vec3, radius: f64, normal: Vec3, radial_cells: usize, azimuth_points: usize) -> Result<Self> {
        let (e1, e2) = plane_frame(&normal)?;
        let param = LabelGrid::new(vec![
            Axis::closed(0.0, radius, radial_cells),
            Axis::periodic(0.0, TAU, azimuth_points),
        ])?;
        let boundary = MaterialLoop::circle(center, radius, normal, azimuth_points)?;
        let mut s = Self::custom(
            param,
            |r, th| center + r * (th.cos() * e1 + th.sin() * e2),
            |r, th| (th.cos() * e1 + th.sin() * e2, r * (-th.sin() * e1 + th.cos() * e2)),
            Some(boundary),
        )?;
        s.walk = BoundaryWalk::LastRow;
        s.pole_normal = Some(e1.cross(&e2));
        Ok(s)
    }

    /// Hemisphere over the circle `(center, radius, normal)`, bulging towards `normal`,
    /// with parameters (polar angle from the normal, azimuth).
    pub fn cap(center: Vec3, radius: f64, normal: Vec3, polar_cells: usize, azimuth_points: usize) -> Result<Self> {
        let (e1, e2) = plane_frame(&normal)?;
        let n = e1.cross(&e2);
        let param = LabelGrid::new(vec![
            Axis::closed(0.0, FRAC_PI_2, polar_cells),
            Axis::periodic(0.0, TAU, azimuth_points),
        ])?;
        let boundary = MaterialLoop::circle(center, radius, normal, azimuth_points)?;
        let mut s = Self::custom(
            param,
            |th, ph| center + radius * (th.sin() * (ph.cos() * e1 + ph.sin() * e2) + th.cos() * n),
            |th, ph| {
                (
                    radius * (th.cos() * (ph.cos() * e1 + ph.sin() * e2) - th.sin() * n),
                    radius * th.sin() * (-ph.sin() * e1 + ph.cos() * e2),
                )
            },
            Some(boundary),
        )?;
        s.walk = BoundaryWalk::LastRow;
        s.pole_normal = Some(n);
        Ok(s)
    }

    /// Flat parallelogram `corner + s1 e1 + s2 e2`, `s1, s2 ∈ [0, 1]`, normal along `e1 × e2`.
    pub fn parallelogram(corner: Vec3, e1: Vec3, e2: Vec3, cells: usize) -> Result<Self> {
        if e1.cross(&e2).norm() == 0.0 {
            return Err(Error::Degenerate("parallel parallelogram edges".into()));
        }
        let param = LabelGrid::new(vec![Axis::closed(0.0, 1.0, cells), Axis::closed(0.0, 1.0, cells)])?;
        let boundary = MaterialLoop::parallelogram(corner, e1, e2, cells)?;
        let mut s = Self::custom(param, |a, b| corner + a * e1 + b * e2, |_, _| (e1, e2), Some(boundary))?;
        s.walk = BoundaryWalk::Perimeter;
        Ok(s)
    }

    /// The six faces of the label box `[lo, hi]`, oriented outwards.
    pub fn box_faces(lo: Vec3, hi: Vec3, cells: usize) -> Result<Vec<Self>> {
        let d = hi - lo;
        let (ex, ey, ez) = (Vec3::new(d.x, 0.0, 0.0), Vec3::new(0.0, d.y, 0.0), Vec3::new(0.0, 0.0, d.z));
        [
            (lo, ez, ey),
            (lo + ex, ey, ez),
            (lo, ex, ez),
            (lo + ey, ez, ex),
            (lo, ey, ex),
            (lo + ez, ex, ey),
        ]
        .into_iter()
        .map(|(c, a, b)| Self::parallelogram(c, a, b, cells))
        .collect()
    }

    pub fn param_grid(&self) -> &LabelGrid {
        &self.param
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// `∂a/∂s1` and `∂a/∂s2` at every node.
    pub fn tangents(&self) -> (&[Vec3], &[Vec3]) {
        (&self.tangents[0], &self.tangents[1])
    }

    pub fn boundary(&self) -> Option<&MaterialLoop> {
        self.boundary.as_ref()
    }

    /// Quadrature weights over the parameter grid; periodic parameters are closed.
    pub fn weights(&self, q: &QuadratureRule) -> Result<Vec<f64>> {
        let axes: Vec<QuadAxis> = self
            .param
            .axes()
            .iter()
            .map(|a| QuadAxis {
                samples: a.nodes,
                spacing: a.spacing,
                closed: a.periodic,
            })
            .collect();
        q.tensor_weights(&axes)
    }

    /// Unit normals `(∂a/∂s1 × ∂a/∂s2) / |…|` in label space.
    pub fn normals(&self) -> Vec<Vec3> {
        (0..self.points.len())
            .map(|n| {
                let c = self.tangents[0][n].cross(&self.tangents[1][n]);
                match (c.try_normalize(1e-14 * (1.0 + self.tangents[0][n].norm())), self.pole_normal) {
                    (Some(u), _) => u,
                    (None, Some(p)) => p,
                    (None, None) => Vec3::zeros(),
                }
            })
            .collect()
    }

    /// Label-space area.
    pub fn area(&self, q: &QuadratureRule) -> Result<f64> {
        let w = self.weights(q)?;
        Ok((0..self.points.len())
            .map(|n| w[n] * self.tangents[0][n].cross(&self.tangents[1][n]).norm())
            .sum())
    }

    /// Boundary nodes of the parameter grid in loop order, when the surface has a known walk.
    pub fn boundary_nodes(&self) -> Option<Vec<usize>> {
        let [n1, n2, _] = self.param.shape();
        let at = |i: usize, j: usize| i * n2 + j;
        match self.walk {
            BoundaryWalk::LastRow => Some((0..n2).map(|j| at(n1 - 1, j)).collect()),
            BoundaryWalk::Perimeter => {
                let c = n1 - 1;
                let mut v = Vec::with_capacity(4 * c);
                v.extend((0..c).map(|i| at(i, 0)));
                v.extend((0..c).map(|j| at(c, j)));
                v.extend((0..c).map(|i| at(c - i, c)));
                v.extend((0..c).map(|j| at(0, c - j)));
                Some(v)
            }
            BoundaryWalk::None => None,
        }
    }

    /// Largest distance between the grid boundary and `lp`, point by point in order.
    pub fn spans(&self, lp: &MaterialLoop) -> Option<f64> {
        let nodes = self.boundary_nodes()?;
        if nodes.len() != lp.len() {
            return None;
        }
        Some(
            nodes
                .iter()
                .zip(lp.points())
                .map(|(n, p)| (self.points[*n] - p).norm())
                .fold(0.0, f64::max),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn boundaries_reproduce_loops() {
        let d = MaterialSurface::disk(Vec3::new(0.1, 0.2, 0.3), 0.7, Vec3::new(0.0, 1.0, 1.0), 8, 32).unwrap();
        assert!(d.spans(d.boundary().unwrap()).unwrap() < 1e-14);
        let c = MaterialSurface::cap(Vec3::zeros(), 1.0, Vec3::z(), 8, 32).unwrap();
        assert!(c.spans(c.boundary().unwrap()).unwrap() < 1e-14);
        let p = MaterialSurface::parallelogram(Vec3::zeros(), Vec3::x(), Vec3::new(0.2, 1.0, 0.0), 8).unwrap();
        assert!(p.spans(p.boundary().unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn normals_are_unit_and_oriented() {
        let c = MaterialSurface::cap(Vec3::zeros(), 1.0, Vec3::z(), 8, 32).unwrap();
        for (n, p) in c.normals().iter().zip(c.points()) {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            assert!((n - p).norm() < 1e-12);
        }
        for f in MaterialSurface::box_faces(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0), 6).unwrap() {
            let centre = Vec3::new(0.5, 1.0, 1.5);
            let (n, p) = (f.normals()[24], f.points()[24]);
            assert!(n.dot(&(p - centre)) > 0.0);
        }
    }

    #[test]
    fn areas() {
        let q = QuadratureRule::trapezoid();
        let d = MaterialSurface::disk(Vec3::zeros(), 1.0, Vec3::z(), 16, 64).unwrap();
        assert!((d.area(&q).unwrap() - PI).abs() < 1e-12);
        let c = MaterialSurface::cap(Vec3::zeros(), 1.0, Vec3::z(), 64, 64).unwrap();
        assert!((c.area(&q).unwrap() - 2.0 * PI).abs() < 1e-3);
    }
}
