use serde::{Deserialize, Serialize};

use super::{pairwise_sum, Field};
use crate::Vec3;

/// Width in nodes of the boundary band that residual norms may leave out.
pub const DEFAULT_RIND: usize = 2;

/// (L∞, L², location of the maximum) summary of a residual.
///
/// `l2` is the root mean square over the counted samples. For vector and tensor
/// fields each node contributes its largest absolute component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorm {
    pub linf: f64,
    pub l2: f64,
    pub max_location: Option<[f64; 3]>,
    pub samples: usize,
    pub rind_excluded: bool,
}

impl ResidualNorm {
    pub fn zero() -> Self {
        ResidualNorm {
            linf: 0.0,
            l2: 0.0,
            max_location: None,
            samples: 0,
            rind_excluded: false,
        }
    }

    /// Summary of residual samples with optional positions.
    pub fn from_samples(values: &[f64], locations: Option<&[Vec3]>) -> Self {
        let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        let mut imax = None;
        let mut linf = 0.0;
        for (i, v) in abs.iter().enumerate() {
            if *v > linf || v.is_nan() || imax.is_none() {
                linf = *v;
                imax = Some(i);
                if v.is_nan() {
                    break;
                }
            }
        }
        let sq: Vec<f64> = abs.iter().map(|v| v * v).collect();
        let l2 = if abs.is_empty() {
            0.0
        } else {
            (pairwise_sum(&sq) / abs.len() as f64).sqrt()
        };
        ResidualNorm {
            linf,
            l2,
            max_location: imax.and_then(|i| locations.map(|l| [l[i].x, l[i].y, l[i].z])),
            samples: abs.len(),
            rind_excluded: false,
        }
    }

    /// Norms of a residual field, optionally skipping a boundary rind of `width` nodes.
    pub fn of_field(f: &Field, rind: Option<usize>) -> Self {
        let g = f.grid();
        let mut vals = Vec::with_capacity(f.node_count());
        let mut locs = Vec::with_capacity(f.node_count());
        for n in 0..f.node_count() {
            if let Some(w) = rind {
                if g.in_rind(n, w) {
                    continue;
                }
            }
            let m = f
                .node(n)
                .iter()
                .fold(0.0f64, |acc, v| if v.is_nan() { f64::NAN } else { acc.max(v.abs()) });
            vals.push(m);
            locs.push(g.label(n));
        }
        let mut r = Self::from_samples(&vals, Some(&locs));
        r.rind_excluded = rind.is_some();
        r
    }

    /// Merge two summaries as if their samples had been pooled.
    pub fn combine(&self, other: &ResidualNorm) -> ResidualNorm {
        let n = self.samples + other.samples;
        let l2 = if n == 0 {
            0.0
        } else {
            ((self.l2 * self.l2 * self.samples as f64 + other.l2 * other.l2 * other.samples as f64)
                / n as f64)
                .sqrt()
        };
        let (linf, loc) = if other.linf > self.linf || other.linf.is_nan() {
            (other.linf, other.max_location)
        } else {
            (self.linf, self.max_location)
        };
        ResidualNorm {
            linf,
            l2,
            max_location: loc,
            samples: n,
            rind_excluded: self.rind_excluded || other.rind_excluded,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{LabelGrid, Rank};

    #[test]
    fn triple_from_samples() {
        let locs = [Vec3::new(0., 0., 0.), Vec3::new(1., 2., 3.), Vec3::new(4., 4., 4.)];
        let r = ResidualNorm::from_samples(&[1.0, -3.0, 2.0], Some(&locs));
        assert_eq!(r.linf, 3.0);
        assert!((r.l2 - (14.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(r.max_location, Some([1., 2., 3.]));
    }

    #[test]
    fn rind_drops_boundary_spike() {
        let g = LabelGrid::cube(0.0, 1.0, 8, 2).unwrap();
        let mut d = vec![0.0; g.node_count()];
        d[0] = 5.0;
        let f = Field::new(g, Rank::Scalar, d).unwrap();
        assert_eq!(ResidualNorm::of_field(&f, None).linf, 5.0);
        let r = ResidualNorm::of_field(&f, Some(DEFAULT_RIND));
        assert_eq!(r.linf, 0.0);
        assert!(r.rind_excluded);
        assert_eq!(r.samples, 25);
    }

    #[test]
    fn nan_propagates() {
        let r = ResidualNorm::from_samples(&[1.0, f64::NAN, 2.0], None);
        assert!(r.linf.is_nan());
    }

    #[test]
    fn combine_pools() {
        let a = ResidualNorm::from_samples(&[1.0, 1.0], None);
        let b = ResidualNorm::from_samples(&[3.0, 3.0], None);
        let c = a.combine(&b);
        assert_eq!(c.linf, 3.0);
        assert!((c.l2 - 5.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.samples, 4);
    }
}
