use rayon::prelude::*;

use crate::field::{Field, LabelGrid, Rank};
use crate::{Error, Result, Vec3};

/// Inverts the piecewise-multilinear interpolant of node positions so that label data
/// can be read off at arbitrary spatial points. Label axes are treated as open even
/// when periodic; points must fall inside the image of the stored cells.
pub struct Resampler<'a> {
    positions: &'a Field,
    grid: &'a LabelGrid,
    ndim: usize,
    seeds: Vec<usize>,
}

/// A point found inside cell `cell` at local coordinates `local` ∈ [0, 1]^d.
#[derive(Clone, Copy, Debug)]
pub struct Location {
    pub cell: [usize; 3],
    pub local: [f64; 3],
}

impl<'a> Resampler<'a> {
    pub fn new(positions: &'a Field) -> Result<Self> {
        positions.expect_rank(Rank::Vector)?;
        positions.check_finite()?;
        let grid = positions.grid();
        let ndim = grid.ndim();
        let shape = grid.shape();
        let stride: Vec<usize> = (0..ndim).map(|k| (shape[k] / 16).max(1)).collect();
        let seeds = (0..grid.node_count())
            .filter(|n| {
                let idx = grid.index(*n);
                (0..ndim).all(|k| idx[k].is_multiple_of(stride[k]) || idx[k] + 1 == shape[k])
            })
            .collect();
        Ok(Resampler {
            positions,
            grid,
            ndim,
            seeds,
        })
    }

    fn corner_weights(&self, local: &[f64; 3], mask: usize) -> (f64, [f64; 3]) {
        let mut w = 1.0;
        let mut dw = [1.0; 3];
        for k in 0..self.ndim {
            let bit = (mask >> k) & 1 == 1;
            let (f, df) = if bit { (local[k], 1.0) } else { (1.0 - local[k], -1.0) };
            w *= f;
            for (j, d) in dw.iter_mut().enumerate().take(self.ndim) {
                *d *= if j == k { df } else { f };
            }
        }
        (w, dw)
    }

    fn corner_node(&self, cell: &[usize; 3], mask: usize) -> usize {
        let mut idx = *cell;
        for (k, i) in idx.iter_mut().enumerate().take(self.ndim) {
            *i += (mask >> k) & 1;
        }
        self.grid.flat(idx)
    }

    /// Cell and local coordinates whose interpolated position equals `x`.
    pub fn locate(&self, x: &Vec3) -> Result<Location> {
        let d = self.ndim;
        let shape = self.grid.shape();
        let seed = self
            .seeds
            .iter()
            .copied()
            .min_by(|p, q| {
                let dp = (self.positions.vector(*p) - x).rows(0, d).norm();
                let dq = (self.positions.vector(*q) - x).rows(0, d).norm();
                dp.total_cmp(&dq)
            })
            .ok_or_else(|| Error::Resample("empty grid".into()))?;
        let idx = self.grid.index(seed);
        let mut cell = [0usize; 3];
        for k in 0..d {
            cell[k] = idx[k].min(shape[k] - 2);
        }
        let mut local = [0.5; 3];
        let scale = 1.0 + x.norm();
        for _ in 0..200 {
            let mut p = Vec3::zeros();
            let mut jac = nalgebra::Matrix3::<f64>::identity();
            for k in 0..d {
                jac[(k, k)] = 0.0;
            }
            for mask in 0..(1usize << d) {
                let (w, dw) = self.corner_weights(&local, mask);
                let xc = self.positions.vector(self.corner_node(&cell, mask));
                p += w * xc;
                for i in 0..d {
                    for k in 0..d {
                        jac[(i, k)] += dw[k] * xc[i];
                    }
                }
            }
            let r = p - x;
            let inside = (0..d).all(|k| (-1e-9..=1.0 + 1e-9).contains(&local[k]));
            if r.rows(0, d).norm() <= 1e-13 * scale && inside {
                return Ok(Location { cell, local });
            }
            let mut rr = r;
            for k in d..3 {
                rr[k] = 0.0;
            }
            let step = jac
                .try_inverse()
                .ok_or_else(|| Error::Resample("degenerate cell".into()))?
                * rr;
            let mut moved = false;
            for k in 0..d {
                local[k] -= step[k];
                let shift = local[k].floor();
                if local[k] < -1e-9 || local[k] > 1.0 + 1e-9 {
                    let target = (cell[k] as f64 + shift).clamp(0.0, (shape[k] - 2) as f64) as usize;
                    if target != cell[k] {
                        local[k] -= target as f64 - cell[k] as f64;
                        cell[k] = target;
                        moved = true;
                    }
                }
                local[k] = local[k].clamp(-0.5, 1.5);
            }
            if !moved && step.rows(0, d).norm() < 1e-15 {
                break;
            }
        }
        Err(Error::Resample(format!(
            "point ({:.6}, {:.6}, {:.6}) is outside the mapped domain",
            x.x, x.y, x.z
        )))
    }

    /// Interpolated node values at a located point.
    pub fn interpolate(&self, values: &Field, loc: &Location) -> Vec<f64> {
        let nc = values.rank().components();
        let mut out = vec![0.0; nc];
        for mask in 0..(1usize << self.ndim) {
            let (w, _) = self.corner_weights(&loc.local, mask);
            let node = values.node(self.corner_node(&loc.cell, mask));
            for c in 0..nc {
                out[c] += w * node[c];
            }
        }
        out
    }

    /// Four-node Lagrange weights and their derivatives along axis `k` at fractional
    /// index `xi`; the stencil is shifted inward near the ends.
    fn cubic_axis(&self, k: usize, xi: f64) -> (usize, [f64; 4], [f64; 4]) {
        let n = self.grid.shape()[k];
        let start = (xi.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let s = xi - start as f64;
        let mut w = [0.0; 4];
        let mut dw = [0.0; 4];
        for j in 0..4 {
            let mut value = 1.0;
            let mut slope = 0.0;
            for m in (0..4).filter(|&m| m != j) {
                let denom = j as f64 - m as f64;
                slope = slope * (s - m as f64) / denom + value / denom;
                value *= (s - m as f64) / denom;
            }
            w[j] = value;
            dw[j] = slope;
        }
        (start, w, dw)
    }

    /// Tensor-cubic interpolation of `values` at fractional index `xi`, with the
    /// derivative of every component along each index axis when `grad` is set.
    fn cubic_eval(&self, values: &Field, xi: &[f64; 3], grad: Option<&mut [Vec<f64>; 3]>) -> Vec<f64> {
        let d = self.ndim;
        let nc = values.rank().components();
        let axes: Vec<_> = (0..d).map(|k| self.cubic_axis(k, xi[k])).collect();
        let mut out = vec![0.0; nc];
        let mut g = [vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]];
        for corner in 0..4usize.pow(d as u32) {
            let mut idx = [0usize; 3];
            let mut w = 1.0;
            let mut dw = [1.0; 3];
            for k in 0..d {
                let j = (corner / 4usize.pow(k as u32)) % 4;
                let (start, wk, dwk) = &axes[k];
                idx[k] = start + j;
                w *= wk[j];
                for (m, dm) in dw.iter_mut().enumerate().take(d) {
                    *dm *= if m == k { dwk[j] } else { wk[j] };
                }
            }
            let node = values.node(self.grid.flat(idx));
            for c in 0..nc {
                out[c] += w * node[c];
                for k in 0..d {
                    g[k][c] += dw[k] * node[c];
                }
            }
        }
        if let Some(grad) = grad {
            *grad = g;
        }
        out
    }

    /// Fractional label index whose tensor-cubic position equals `x`, refined by Newton
    /// steps from the multilinear location.
    pub fn locate_cubic(&self, x: &Vec3) -> Result<[f64; 3]> {
        let d = self.ndim;
        let loc = self.locate(x)?;
        let mut xi = [0.0; 3];
        for k in 0..d {
            xi[k] = loc.cell[k] as f64 + loc.local[k];
        }
        let shape = self.grid.shape();
        let scale = 1.0 + x.norm();
        for _ in 0..20 {
            let mut g = [vec![], vec![], vec![]];
            let p = self.cubic_eval(self.positions, &xi, Some(&mut g));
            let mut jac = nalgebra::Matrix3::<f64>::identity();
            let mut r = Vec3::zeros();
            for i in 0..d {
                r[i] = p[i] - x[i];
                for k in 0..d {
                    jac[(i, k)] = g[k][i];
                }
            }
            if r.norm() <= 1e-14 * scale {
                return Ok(xi);
            }
            let step = jac.try_inverse().ok_or_else(|| Error::Resample("degenerate cell".into()))? * r;
            for k in 0..d {
                xi[k] = (xi[k] - step[k]).clamp(0.0, (shape[k] - 1) as f64);
            }
        }
        Ok(xi)
    }

    /// Like [`Resampler::resample`] but with tensor-cubic interpolation of both the
    /// positions and the values. Every label axis needs at least four nodes.
    pub fn resample_cubic(&self, values: &Field, spatial: &LabelGrid) -> Result<Field> {
        if values.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if (0..self.ndim).any(|k| self.grid.shape()[k] < 4) {
            return Err(Error::InvalidGrid("cubic resampling needs four nodes per axis".into()));
        }
        let nodes = (0..spatial.node_count())
            .into_par_iter()
            .map(|n| {
                let xi = self.locate_cubic(&spatial.label(n))?;
                Ok(self.cubic_eval(values, &xi, None))
            })
            .collect::<Result<Vec<_>>>()?;
        Field::new(spatial.clone(), values.rank(), nodes.concat())
    }

    /// Values of `values` (a field on the label grid) at every node of `spatial`.
    pub fn resample(&self, values: &Field, spatial: &LabelGrid) -> Result<Field> {
        if values.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let nodes = (0..spatial.node_count())
            .into_par_iter()
            .map(|n| {
                let loc = self.locate(&spatial.label(n))?;
                Ok(self.interpolate(values, &loc))
            })
            .collect::<Result<Vec<_>>>()?;
        Field::new(spatial.clone(), values.rank(), nodes.concat())
    }
}

/// Resample `values` given on the label grid at node positions `positions` onto `spatial`.
pub fn resample(positions: &Field, values: &Field, spatial: &LabelGrid) -> Result<Field> {
    Resampler::new(positions)?.resample(values, spatial)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_map_inverts_exactly() {
        let g = LabelGrid::cube(-1.0, 1.0, 10, 2).unwrap();
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let x = Field::vector_from_fn(g.clone(), |a| Vec3::new(c * a.x - s * a.y + 0.1, s * a.x + c * a.y, 0.0));
        let lab = Field::vector_from_fn(g.clone(), |a| *a);
        let spatial = LabelGrid::cube(-0.5, 0.5, 7, 2).unwrap();
        let back = resample(&x, &lab, &spatial).unwrap();
        for n in 0..spatial.node_count() {
            let p = spatial.label(n) - Vec3::new(0.1, 0.0, 0.0);
            let a = Vec3::new(c * p.x + s * p.y, -s * p.x + c * p.y, 0.0);
            assert!((back.vector(n) - a).norm() < 1e-12);
        }
    }

    #[test]
    fn cubic_resampling_is_fourth_order() {
        let err = |cells: usize| {
            let g = LabelGrid::cube(0.0, 1.0, cells, 2).unwrap();
            let map = |a: &Vec3| Vec3::new(a.x + 0.1 * (3.0 * a.y).sin(), a.y + 0.1 * (2.0 * a.x).sin(), 0.0);
            let x = Field::vector_from_fn(g.clone(), map);
            let v = Field::scalar_from_fn(g.clone(), |a| (a.x * a.y).cos());
            let spatial = LabelGrid::cube(0.3, 0.7, 5, 2).unwrap();
            let r = Resampler::new(&x).unwrap().resample_cubic(&v, &spatial).unwrap();
            // Each spatial node's label, by Newton on the exact map.
            (0..spatial.node_count())
                .map(|n| {
                    let target = spatial.label(n);
                    let mut a = target;
                    for _ in 0..50 {
                        let h = 1e-7;
                        let f = map(&a) - target;
                        let jx = (map(&(a + Vec3::x() * h)) - map(&a)) / h;
                        let jy = (map(&(a + Vec3::y() * h)) - map(&a)) / h;
                        let det = jx.x * jy.y - jy.x * jx.y;
                        a.x -= (jy.y * f.x - jy.x * f.y) / det;
                        a.y -= (-jx.y * f.x + jx.x * f.y) / det;
                    }
                    (r.scalar(n) - (a.x * a.y).cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(16), err(32));
        assert!(coarse / fine > 12.0, "{coarse:e} {fine:e}");
    }

    #[test]
    fn outside_point_fails() {
        let g = LabelGrid::cube(0.0, 1.0, 8, 3).unwrap();
        let x = Field::vector_from_fn(g.clone(), |a| *a);
        let r = Resampler::new(&x).unwrap();
        assert!(r.locate(&Vec3::new(2.0, 0.5, 0.5)).is_err());
        assert!(r.locate(&Vec3::new(0.33, 0.5, 0.91)).is_ok());
    }
}
