//! Velocity induced by a compactly supported vorticity field, by direct summation of
//! the `r⁻³` kernel, and the geometric identities of a single vortex element.
//!
//! Vorticity is the half-curl `Ω = ½ curl u`, so one element of volume `dV` at `x`
//! induces `du = dV/(2π) · Ω × (x₁ − x) / r³` at the target `x₁`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{divergence, Axis, Field, LabelGrid, QuadAxis, QuadratureRule, Rank, ResidualNorm, StencilSpec, DEFAULT_RIND};
use crate::functions::VectorFunction;
use crate::{Error, Result, Vec3};

/// Width in cells of the boundary band that must be free of vorticity.
pub const SUPPORT_BAND: usize = 2;
/// Largest magnitude tolerated inside the boundary band.
pub const SUPPORT_TOLERANCE: f64 = 1e-14;
/// Default minimum distance from a target to a nonzero source node, in cells.
pub const DEFAULT_MIN_SEPARATION: f64 = 0.5;

/// Half-curl vorticity sampled on a spatial grid, with quadrature weights.
#[derive(Clone, Debug)]
pub struct VorticitySource {
    field: Field,
    weights: Vec<f64>,
}

impl VorticitySource {
    /// Wrap a vector field of half-curl vorticity. Fails unless the field vanishes
    /// within two cells of every non-periodic boundary.
    pub fn new(field: Field, q: &QuadratureRule) -> Result<Self> {
        field.expect_rank(Rank::Vector)?;
        field.check_finite()?;
        let grid = field.grid();
        let mut edge: f64 = 0.0;
        for n in 0..field.node_count() {
            if grid.in_rind(n, SUPPORT_BAND) {
                edge = edge.max(field.vector(n).norm());
            }
        }
        if edge > SUPPORT_TOLERANCE {
            return Err(Error::NonCompactSource { value: edge });
        }
        let axes: Vec<QuadAxis> = grid
            .axes()
            .iter()
            .map(|a| QuadAxis {
                samples: a.nodes,
                spacing: a.spacing,
                closed: a.periodic,
            })
            .collect();
        let weights = q.tensor_weights(&axes)?;
        Ok(VorticitySource { field, weights })
    }

    pub fn from_fn(grid: LabelGrid, q: &QuadratureRule, omega: impl Fn(&Vec3) -> Vec3 + Sync + Send) -> Result<Self> {
        Self::new(Field::vector_from_fn(grid, omega), q)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn grid(&self) -> &LabelGrid {
        self.field.grid()
    }

    /// The same source with every vorticity vector reversed.
    pub fn negated(&self) -> Self {
        VorticitySource {
            field: self.field.map(|v| -v),
            weights: self.weights.clone(),
        }
    }

    /// Discrete divergence of the vorticity, away from the boundary band.
    pub fn divergence(&self, s: &StencilSpec) -> Result<ResidualNorm> {
        Ok(ResidualNorm::of_field(&divergence(&self.field, s)?, Some(DEFAULT_RIND)))
    }

    fn min_spacing(&self) -> f64 {
        self.grid().axes().iter().map(|a| a.spacing).fold(f64::INFINITY, f64::min)
    }
}

/// Velocity induced at `target` by one element of vorticity `omega` and volume `volume` at `position`.
pub fn element_velocity(position: &Vec3, omega: &Vec3, volume: f64, target: &Vec3) -> Vec3 {
    let d = target - position;
    let r2 = d.norm_squared();
    omega.cross(&d) * (volume / (2.0 * PI * r2 * r2.sqrt()))
}

/// Options for [`velocity_from_vorticity`].
#[derive(Clone, Debug)]
pub struct ReconstructionOptions {
    /// Minimum distance from a target to a nonzero source node, in units of the smallest spacing.
    pub min_separation: f64,
    /// Gradient of a harmonic potential added to the summed velocity.
    pub harmonic_correction: Option<VectorFunction>,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            min_separation: DEFAULT_MIN_SEPARATION,
            harmonic_correction: None,
        }
    }
}

/// Velocity at each target by direct summation over the source nodes.
pub fn velocity_from_vorticity(src: &VorticitySource, targets: &[Vec3], opts: &ReconstructionOptions) -> Result<Vec<Vec3>> {
    let grid = src.grid();
    let nodes: Vec<(Vec3, Vec3, f64)> = (0..grid.node_count())
        .filter_map(|n| {
            let w = src.field.vector(n);
            (w != Vec3::zeros()).then(|| (grid.label(n), w, src.weights[n]))
        })
        .collect();
    let minimum = opts.min_separation * src.min_spacing();
    targets
        .par_iter()
        .enumerate()
        .map(|(i, x1)| {
            let mut nearest = f64::INFINITY;
            let mut u = Vec3::zeros();
            for (x, w, dv) in &nodes {
                nearest = nearest.min((x1 - x).norm());
                u += element_velocity(x, w, *dv, x1);
            }
            if nearest < minimum {
                return Err(Error::TargetTooClose {
                    target: i,
                    distance: nearest,
                    minimum,
                });
            }
            if let Some(c) = &opts.harmonic_correction {
                u += c.value(x1, 0.0);
            }
            Ok(u)
        })
        .collect()
}

/// Identities of one element–target pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryRow {
    /// `(x₁ − x)·du`, relative to `|x₁ − x| |du|`.
    pub radial_dot: f64,
    /// `Ω·du`, relative to `|Ω| |du|`.
    pub axis_dot: f64,
    /// `| |du| − dV |Ω| sin ε / (2π r²) |`, relative to the formula's value.
    pub magnitude_gap: f64,
    pub magnitude: f64,
    /// Angle between the rotation axis and the line to the target.
    pub angle: f64,
}

impl GeometryRow {
    pub fn worst(&self) -> f64 {
        self.radial_dot.abs().max(self.axis_dot.abs()).max(self.magnitude_gap)
    }
}

pub fn biot_savart_geometry(position: &Vec3, omega: &Vec3, volume: f64, target: &Vec3) -> GeometryRow {
    let du = element_velocity(position, omega, volume, target);
    let d = target - position;
    let (r, wn, un) = (d.norm(), omega.norm(), du.norm());
    let rel = |v: f64, scale: f64| if scale > 0.0 { v / scale } else { v };
    // atan2 keeps the angle accurate near 0 and π, where acos does not.
    let angle = omega.cross(&d).norm().atan2(omega.dot(&d));
    let formula = volume * wn * angle.sin() / (2.0 * PI * r * r);
    GeometryRow {
        radial_dot: rel(d.dot(&du), r * un),
        axis_dot: rel(omega.dot(&du), wn * un),
        magnitude_gap: rel((un - formula).abs(), formula.abs()),
        magnitude: un,
        angle,
    }
}

/// A Gaussian-damped swirl `u = U₀ e^{−r²/σ²} (−y, x, 0)` about the z axis.
///
/// Its half-curl is compact on `[−1, 1]³` at 32 cells or more for `σ ≤ 0.13` and the velocity itself is the
/// reconstruction oracle.
#[derive(Clone, Copy, Debug)]
pub struct GaussianSwirl {
    pub amplitude: f64,
    pub width: f64,
}

impl Default for GaussianSwirl {
    fn default() -> Self {
        GaussianSwirl {
            amplitude: 1.0,
            width: 0.13,
        }
    }
}

impl GaussianSwirl {
    pub fn velocity(&self, x: &Vec3) -> Vec3 {
        let g = self.amplitude * (-x.norm_squared() / (self.width * self.width)).exp();
        g * Vec3::new(-x.y, x.x, 0.0)
    }

    pub fn vorticity(&self, x: &Vec3) -> Vec3 {
        let s2 = self.width * self.width;
        let g = self.amplitude * (-x.norm_squared() / s2).exp();
        g * Vec3::new(x.z * x.x / s2, x.z * x.y / s2, 1.0 - (x.x * x.x + x.y * x.y) / s2)
    }

    /// Azimuthal speed in the plane `z = 0` from the radial integral `(1/r) ∫₀^r 2 Z(s) s ds`
    /// by composite Simpson with `intervals` panels.
    pub fn azimuthal_speed_by_quadrature(&self, r: f64, intervals: usize) -> f64 {
        let n = intervals + intervals % 2;
        let h = r / n as f64;
        let f = |s: f64| 2.0 * self.vorticity(&Vec3::new(s, 0.0, 0.0)).z * s;
        let mut sum = f(0.0) + f(r);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        sum * h / 3.0 / r
    }

    /// Source on the cell-centred `cells³` grid over `[−1, 1]³`.
    pub fn source(&self, cells: usize) -> Result<VorticitySource> {
        let ax = Axis::cell_centered(-1.0, 1.0, cells);
        let grid = LabelGrid::new(vec![ax.clone(), ax.clone(), ax])?;
        VorticitySource::from_fn(grid, &QuadratureRule::midpoint(), |x| self.vorticity(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn narrow() -> GaussianSwirl {
        GaussianSwirl {
            amplitude: 1.0,
            width: 0.08,
        }
    }

    #[test]
    fn zero_vorticity_gives_zero_velocity() {
        let g = LabelGrid::cube(-1.0, 1.0, 8, 3).unwrap();
        let src = VorticitySource::from_fn(g, &QuadratureRule::trapezoid(), |_| Vec3::zeros()).unwrap();
        let u = velocity_from_vorticity(&src, &[Vec3::new(0.1, 0.2, 0.3)], &Default::default()).unwrap();
        assert_eq!(u[0], Vec3::zeros());
    }

    #[test]
    fn single_element_matches_kernel() {
        let g = LabelGrid::cube(-1.0, 1.0, 8, 3).unwrap();
        let center = g.flat([4, 4, 4]);
        let w = Vec3::new(0.3, -0.2, 1.1);
        let src = VorticitySource::new(
            Field::vector_from_fn_indexed(g.clone(), |n| if n == center { w } else { Vec3::zeros() }),
            &QuadratureRule::trapezoid(),
        )
        .unwrap();
        let target = Vec3::new(0.37, -0.61, 0.13);
        let u = velocity_from_vorticity(&src, &[target], &Default::default()).unwrap()[0];
        assert_eq!(u, element_velocity(&Vec3::zeros(), &w, g.cell_volume(), &target));
    }

    #[test]
    fn non_compact_source_is_rejected() {
        let g = LabelGrid::cube(-1.0, 1.0, 8, 3).unwrap();
        let r = VorticitySource::from_fn(g, &QuadratureRule::trapezoid(), |_| Vec3::z());
        assert!(matches!(r, Err(Error::NonCompactSource { .. })));
    }

    #[test]
    fn target_on_a_node_is_rejected() {
        let src = narrow().source(16).unwrap();
        let node = src.grid().label(src.grid().flat([8, 8, 8]));
        let r = velocity_from_vorticity(&src, &[node], &Default::default());
        assert!(matches!(r, Err(Error::TargetTooClose { .. })));
    }

    #[test]
    fn swirl_oracle_agrees_with_radial_quadrature() {
        let s = GaussianSwirl::default();
        for r in [0.05, 0.125, 0.2] {
            let q = s.azimuthal_speed_by_quadrature(r, 400);
            assert!((q - s.velocity(&Vec3::new(r, 0.0, 0.0)).y).abs() < 1e-10);
        }
    }

    #[test]
    fn swirl_source_is_solenoidal() {
        let s = GaussianSwirl::default();
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&c| s.source(c).unwrap().divergence(&StencilSpec::second_order()).unwrap().linf)
            .collect();
        // σ/h is only 4 on the finer grid, so the ratio is still short of 4.
        assert!(errs[1] < errs[0] / 2.5, "{errs:?}");
    }

    #[test]
    fn reconstruction_converges_at_second_order() {
        let s = GaussianSwirl::default();
        let targets = [Vec3::zeros(), Vec3::new(0.125, 0.0, 0.0)];
        let exact = s.velocity(&targets[1]);
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&c| {
                let u = velocity_from_vorticity(&s.source(c).unwrap(), &targets, &Default::default()).unwrap();
                assert!(u[0].norm() < 1e-12);
                assert!(u[1].x.abs() < 1e-12 && u[1].z.abs() < 1e-12);
                (u[1] - exact).norm() / exact.norm()
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.7, "{errs:?}");
        assert!(errs[1] < 0.02, "{errs:?}");
    }

    #[test]
    fn reversing_vorticity_reverses_velocity() {
        let src = narrow().source(12).unwrap();
        let h = 2.0 / 12.0;
        let t = [Vec3::new(2.0 * h, h, -h), Vec3::new(0.0, 2.0 * h, 0.0)];
        let a = velocity_from_vorticity(&src, &t, &Default::default()).unwrap();
        let b = velocity_from_vorticity(&src.negated(), &t, &Default::default()).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(*u, -v);
        }
    }

    #[test]
    fn element_geometry_identities() {
        let on_axis = biot_savart_geometry(&Vec3::zeros(), &Vec3::z(), 1.0, &Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(on_axis.magnitude, 0.0);
        let side = biot_savart_geometry(&Vec3::zeros(), &Vec3::z(), 1.0, &Vec3::x());
        assert!((side.magnitude - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut v = || Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for _ in 0..10_000 {
            let row = biot_savart_geometry(&v(), &v(), 0.1, &v());
            assert!(row.worst() <= 1e-12, "{row:?}");
        }
    }

    #[test]
    fn harmonic_correction_is_added() {
        let src = narrow().source(12).unwrap();
        let t = [Vec3::new(0.3, 0.3, 0.3)];
        let base = velocity_from_vorticity(&src, &t, &Default::default()).unwrap()[0];
        let opts = ReconstructionOptions {
            harmonic_correction: Some(VectorFunction::new(|_, _| Vec3::new(1.0, 0.0, 0.0))),
            ..Default::default()
        };
        let shifted = velocity_from_vorticity(&src, &t, &opts).unwrap()[0];
        assert_eq!(shifted - base, Vec3::new(1.0, 0.0, 0.0));
    }
}
