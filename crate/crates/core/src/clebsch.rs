//! Velocity fields of the form `u = ∇F + φ∇ψ`, their vorticity and advection
//! residuals, and checks of irrotational flow through a velocity potential.
//!
//! Derivatives of the scalar potentials use central stencils with the spacing of the
//! sample grid. Stencils that cross a declared branch cut are left out of the norms
//! and counted.

use serde::{Deserialize, Serialize};

use crate::dynamics::ForcePotential;
use crate::field::{Field, LabelGrid, ResidualNorm, StencilOrder, StencilSpec};
use crate::functions::{ScalarFunction, VectorFunction, DEFAULT_STEP};
use crate::{Error, Result, Vec3};

/// Gauge potential `F` and Clebsch potentials `φ`, `ψ`.
#[derive(Clone, Debug)]
pub struct ClebschTriple {
    pub name: String,
    pub gauge: ScalarFunction,
    pub phi: ScalarFunction,
    pub psi: ScalarFunction,
    /// How the expected velocity and vorticity of the triple were derived.
    pub note: &'static str,
}

impl ClebschTriple {
    pub fn new(name: impl Into<String>, gauge: ScalarFunction, phi: ScalarFunction, psi: ScalarFunction) -> Self {
        ClebschTriple {
            name: name.into(),
            gauge,
            phi,
            psi,
            note: "",
        }
    }

    /// `∇F + φ∇ψ` at one point, with exact gradients where registered.
    pub fn velocity_at(&self, x: &Vec3, t: f64) -> Vec3 {
        let h = DEFAULT_STEP * x.norm().max(1.0);
        self.gauge.gradient(x, t, h) + self.phi.value(x, t) * self.psi.gradient(x, t, h)
    }

    /// The velocity as a function, for use with other modules.
    pub fn velocity(&self) -> VectorFunction {
        let ct = self.clone();
        VectorFunction::new(move |x, t| ct.velocity_at(x, t))
    }

    fn has_cut(&self) -> bool {
        self.gauge.has_branch_cut() || self.phi.has_branch_cut() || self.psi.has_branch_cut()
    }
}

/// Named fixture triples.
pub const PRESETS: [&str; 5] = ["uniform_potential", "linear_shear", "rigid_rotation", "rotation_invariants", "translating"];

/// A shipped triple. `scale` is the speed `k` or angular velocity `ω` where one applies.
pub fn clebsch_preset(name: &str, scale: f64) -> Result<ClebschTriple> {
    let zero = || ScalarFunction::constant(0.0);
    let k = scale;
    let w = scale;
    let ct = match name {
        "uniform_potential" => ClebschTriple {
            note: "F = k x, φ = ψ = 0: u = (k, 0, 0), no vorticity",
            ..ClebschTriple::new(
                name,
                ScalarFunction::new(move |x, _| k * x.x)
                    .with_gradient(move |_, _| Vec3::new(k, 0.0, 0.0))
                    .with_time_derivative(|_, _| 0.0),
                zero(),
                zero(),
            )
        },
        "linear_shear" => ClebschTriple {
            note: "F = 0, φ = x, ψ = y: u = x ∇y = (0, x, 0), curl u = ∇x × ∇y = (0, 0, 1)",
            ..ClebschTriple::new(name, zero(), coordinate(0, 1.0), coordinate(1, 1.0))
        },
        "rigid_rotation" => ClebschTriple {
            note: "F = −ω x y, φ = 2ω x, ψ = y: ∇F = (−ω y, −ω x, 0) and φ∇ψ = (0, 2ω x, 0) add to \
                   (−ω y, ω x, 0); curl u = (0, 0, 2ω)",
            ..ClebschTriple::new(
                name,
                ScalarFunction::new(move |x, _| -w * x.x * x.y)
                    .with_gradient(move |x, _| Vec3::new(-w * x.y, -w * x.x, 0.0))
                    .with_time_derivative(|_, _| 0.0),
                coordinate(0, 2.0 * w),
                coordinate(1, 1.0),
            )
        },
        "rotation_invariants" => ClebschTriple {
            note: "F = 0, φ = x² + y², ψ = z: both constant along circles about z, so rigid rotation \
                   about z advects them with zero material derivative",
            ..ClebschTriple::new(
                name,
                zero(),
                ScalarFunction::new(|x, _| x.x * x.x + x.y * x.y)
                    .with_gradient(|x, _| Vec3::new(2.0 * x.x, 2.0 * x.y, 0.0))
                    .with_time_derivative(|_, _| 0.0),
                coordinate(2, 1.0),
            )
        },
        "translating" => ClebschTriple {
            note: "F = 0, φ = x − k t, ψ = y: advected by the uniform stream u = (k, 0, 0)",
            ..ClebschTriple::new(
                name,
                zero(),
                ScalarFunction::new(move |x, t| x.x - k * t)
                    .with_gradient(|_, _| Vec3::x())
                    .with_time_derivative(move |_, _| -k),
                coordinate(1, 1.0),
            )
        },
        other => return Err(Error::InvalidParameter(format!("unknown Clebsch preset `{other}`"))),
    };
    Ok(ct)
}

fn coordinate(axis: usize, c: f64) -> ScalarFunction {
    let mut g = Vec3::zeros();
    g[axis] = c;
    ScalarFunction::new(move |x, _| c * x[axis])
        .with_gradient(move |_, _| g)
        .with_time_derivative(|_, _| 0.0)
}

/// Residual norms with the number of points skipped at a branch cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutResidual {
    pub norm: ResidualNorm,
    /// Points whose stencil crossed a branch cut.
    pub excluded: usize,
}

impl CutResidual {
    pub fn linf(&self) -> f64 {
        self.norm.linf
    }
}

/// Pointwise central stencils with the spacing of a sample grid.
struct Stencil {
    h: [f64; 3],
    order: StencilOrder,
}

impl Stencil {
    fn new(grid: &LabelGrid, s: &StencilSpec) -> Self {
        let axes = grid.axes();
        let h0 = axes[0].spacing;
        Stencil {
            h: [0, 1, 2].map(|k| axes.get(k).map_or(h0, |a| a.spacing)),
            order: s.order,
        }
    }

    fn reach(&self) -> f64 {
        match self.order {
            StencilOrder::Second => 1.0,
            StencilOrder::Fourth => 2.0,
        }
    }

    fn crosses(&self, f: &ScalarFunction, x: &Vec3) -> bool {
        f.has_branch_cut()
            && (0..3).any(|k| {
                let mut e = Vec3::zeros();
                e[k] = self.reach() * self.h[k];
                f.crosses_cut(&(x - e), &(x + e))
            })
    }

    fn first(&self, f: &dyn Fn(&Vec3) -> f64, x: &Vec3, k: usize) -> f64 {
        let h = self.h[k];
        let mut e = Vec3::zeros();
        e[k] = h;
        match self.order {
            StencilOrder::Second => (f(&(x + e)) - f(&(x - e))) / (2.0 * h),
            StencilOrder::Fourth => {
                (-f(&(x + 2.0 * e)) + 8.0 * f(&(x + e)) - 8.0 * f(&(x - e)) + f(&(x - 2.0 * e))) / (12.0 * h)
            }
        }
    }

    fn second(&self, f: &dyn Fn(&Vec3) -> f64, x: &Vec3, k: usize) -> f64 {
        let h = self.h[k];
        let mut e = Vec3::zeros();
        e[k] = h;
        let f0 = f(x);
        match self.order {
            StencilOrder::Second => (f(&(x + e)) - 2.0 * f0 + f(&(x - e))) / (h * h),
            StencilOrder::Fourth => {
                (-f(&(x + 2.0 * e)) + 16.0 * f(&(x + e)) - 30.0 * f0 + 16.0 * f(&(x - e)) - f(&(x - 2.0 * e)))
                    / (12.0 * h * h)
            }
        }
    }

    fn gradient(&self, f: &ScalarFunction, x: &Vec3, t: f64) -> Vec3 {
        let v = |p: &Vec3| f.value(p, t);
        Vec3::from_fn(|k, _| self.first(&v, x, k))
    }

    fn laplacian(&self, f: &ScalarFunction, x: &Vec3, t: f64) -> f64 {
        let v = |p: &Vec3| f.value(p, t);
        (0..3).map(|k| self.second(&v, x, k)).sum()
    }

    fn curl(&self, u: &dyn Fn(&Vec3) -> Vec3, x: &Vec3) -> Vec3 {
        let d = |c: usize, k: usize| self.first(&|p: &Vec3| u(p)[c], x, k);
        Vec3::new(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1))
    }

    fn divergence(&self, u: &dyn Fn(&Vec3) -> Vec3, x: &Vec3) -> f64 {
        (0..3).map(|k| self.first(&|p: &Vec3| u(p)[k], x, k)).sum()
    }
}

/// Evaluate `f` at every grid node not excluded by `skip`; returns the norm and the skip count.
fn pointwise(grid: &LabelGrid, skip: impl Fn(&Vec3) -> bool, f: impl Fn(&Vec3) -> f64) -> CutResidual {
    let mut vals = Vec::new();
    let mut locs = Vec::new();
    let mut excluded = 0;
    for x in grid.labels() {
        if skip(&x) {
            excluded += 1;
            continue;
        }
        vals.push(f(&x));
        locs.push(x);
    }
    CutResidual {
        norm: ResidualNorm::from_samples(&vals, Some(&locs)),
        excluded,
    }
}

/// `u = ∇F + φ∇ψ` at the nodes of a spatial grid.
pub fn clebsch_velocity(ct: &ClebschTriple, grid: &LabelGrid, t: f64) -> Field {
    Field::vector_from_fn(grid.clone(), |x| ct.velocity_at(x, t))
}

/// Largest component of `curl u − ∇φ × ∇ψ`, with `curl u` differenced on the grid spacing.
pub fn clebsch_vorticity_residual(ct: &ClebschTriple, grid: &LabelGrid, t: f64, s: &StencilSpec) -> CutResidual {
    let st = Stencil::new(grid, s);
    let u = |p: &Vec3| ct.velocity_at(p, t);
    let h = DEFAULT_STEP;
    pointwise(
        grid,
        |x| ct.has_cut() && [&ct.gauge, &ct.phi, &ct.psi].iter().any(|f| st.crosses(f, x)),
        |x| {
            let w = st.curl(&u, x);
            let cross = ct.phi.gradient(x, t, h).cross(&ct.psi.gradient(x, t, h));
            (w - cross).amax()
        },
    )
}

/// `div(∇F + φ∇ψ)` on the grid spacing.
pub fn clebsch_divergence_residual(ct: &ClebschTriple, grid: &LabelGrid, t: f64, s: &StencilSpec) -> CutResidual {
    let st = Stencil::new(grid, s);
    let u = |p: &Vec3| ct.velocity_at(p, t);
    pointwise(grid, |x| ct.has_cut() && st.crosses(&ct.gauge, x), |x| st.divergence(&u, x))
}

/// Material-derivative residuals `∂φ/∂t + u·∇φ` and `∂ψ/∂t + u·∇ψ` under a flow velocity.
/// Time derivatives are exact where registered, else two-time differences.
pub fn clebsch_advection_residual(
    ct: &ClebschTriple,
    u: &VectorFunction,
    grid: &LabelGrid,
    t: f64,
    s: &StencilSpec,
) -> (CutResidual, CutResidual) {
    let st = Stencil::new(grid, s);
    let dt = 1e-4;
    let one = |f: &ScalarFunction| {
        pointwise(
            grid,
            |x| st.crosses(f, x),
            |x| f.time_derivative(x, t, dt) + u.value(x, t).dot(&st.gradient(f, x, t)),
        )
    };
    (one(&ct.phi), one(&ct.psi))
}

/// Largest asymmetry of the differenced second derivatives of each potential, at two
/// step sizes. Smooth potentials show a gap that shrinks like `h²`.
pub fn smoothness_probe(ct: &ClebschTriple, points: &[Vec3], t: f64, h: f64) -> [f64; 2] {
    let asym = |f: &ScalarFunction, x: &Vec3, h: f64| {
        let g = |p: &Vec3| f.gradient(p, t, 0.1 * h);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let (mut ei, mut ej) = (Vec3::zeros(), Vec3::zeros());
                ei[i] = h;
                ej[j] = h;
                let dij = (g(&(x + ej))[i] - g(&(x - ej))[i]) / (2.0 * h);
                let dji = (g(&(x + ei))[j] - g(&(x - ei))[j]) / (2.0 * h);
                worst = worst.max((dij - dji).abs());
            }
        }
        worst
    };
    [h, 0.5 * h].map(|h| {
        points
            .iter()
            .flat_map(|x| [&ct.gauge, &ct.phi, &ct.psi].map(|f| asym(f, x, h)))
            .fold(0.0, f64::max)
    })
}

/// Checks of a velocity potential `F`: Laplace's equation and the pressure integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialFlowReport {
    /// `∇²F`.
    pub laplace: CutResidual,
    /// `∂F/∂t + ½|∇F|² − Ω`.
    pub bernoulli: CutResidual,
    /// Spread of the Bernoulli residual about its mean, which ignores the integration constant.
    pub bernoulli_spread: f64,
    pub time: f64,
}

/// `∇²F` at every node, skipping stencils that cross a branch cut.
pub fn laplace_residual(potential: &ScalarFunction, grid: &LabelGrid, t: f64, s: &StencilSpec) -> CutResidual {
    let st = Stencil::new(grid, s);
    pointwise(grid, |x| st.crosses(potential, x), |x| st.laplacian(potential, x, t))
}

pub fn potential_flow_checks(
    potential: &ScalarFunction,
    fp: &ForcePotential,
    grid: &LabelGrid,
    t: f64,
    s: &StencilSpec,
) -> PotentialFlowReport {
    let st = Stencil::new(grid, s);
    let skip = |x: &Vec3| st.crosses(potential, x);
    let laplace = pointwise(grid, skip, |x| st.laplacian(potential, x, t));
    let dt = 1e-4;
    let bern = |x: &Vec3| {
        let g = st.gradient(potential, x, t);
        potential.time_derivative(x, t, dt) + 0.5 * g.norm_squared() - fp.omega(x, t)
    };
    let values: Vec<f64> = grid.labels().iter().filter(|x| !skip(x)).map(bern).collect();
    let mean = if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    PotentialFlowReport {
        laplace,
        bernoulli: pointwise(grid, skip, bern),
        bernoulli_spread: spread,
        time: t,
    }
}

/// `F = Γθ/2π` about the z axis with the cut along the negative x axis.
pub fn vortex_potential(circulation: f64) -> ScalarFunction {
    let c = circulation / (2.0 * std::f64::consts::PI);
    ScalarFunction::new(move |x, _| c * x.y.atan2(x.x))
        .with_gradient(move |x, _| {
            let r2 = x.x * x.x + x.y * x.y;
            c * Vec3::new(-x.y / r2, x.x / r2, 0.0)
        })
        .with_time_derivative(|_, _| 0.0)
        .with_branch_cut(|p, q| {
            // Crosses y = 0 at negative x.
            if (p.y >= 0.0) == (q.y >= 0.0) {
                return false;
            }
            let s = p.y / (p.y - q.y);
            p.x + s * (q.x - p.x) < 0.0
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::eulerian_vorticity;
    use crate::field::Axis;
    use crate::flows::{catalog_flow, Params};

    fn grid(cells: usize) -> LabelGrid {
        LabelGrid::cube(-1.0, 1.0, cells, 3).unwrap()
    }

    fn rotation_field(w: f64) -> VectorFunction {
        VectorFunction::new(move |x, _| Vec3::new(-w * x.y, w * x.x, 0.0))
    }

    #[test]
    fn velocities_of_presets() {
        let g = grid(4);
        let x = Vec3::new(0.3, -0.7, 0.2);
        let u = clebsch_preset("linear_shear", 1.0).unwrap().velocity_at(&x, 0.0);
        assert_eq!(u, Vec3::new(0.0, 0.3, 0.0));
        let w = 1.5;
        let rot = clebsch_preset("rigid_rotation", w).unwrap();
        let f = clebsch_velocity(&rot, &g, 0.0);
        for n in 0..f.node_count() {
            let p = g.label(n);
            assert!((f.vector(n) - Vec3::new(-w * p.y, w * p.x, 0.0)).norm() < 1e-14);
        }
        let pot = clebsch_preset("uniform_potential", 2.0).unwrap();
        assert_eq!(pot.velocity_at(&x, 0.0), Vec3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn vorticity_is_grad_phi_cross_grad_psi() {
        let s = StencilSpec::second_order();
        for (name, scale) in [("uniform_potential", 1.0), ("linear_shear", 1.0), ("rigid_rotation", 0.8)] {
            let ct = clebsch_preset(name, scale).unwrap();
            let r = clebsch_vorticity_residual(&ct, &grid(8), 0.0, &s);
            assert!(r.linf() < 1e-9, "{name}: {:e}", r.linf());
            assert_eq!(r.excluded, 0);
        }
    }

    #[test]
    fn vorticity_residual_is_second_order_for_curved_triples() {
        let ct = ClebschTriple::new(
            "curved",
            ScalarFunction::new(|x, _| (x.x * x.y).sin()),
            ScalarFunction::new(|x, _| x.z.exp() * x.x),
            ScalarFunction::new(|x, _| (x.y + x.z * x.z).cos()),
        );
        let s = StencilSpec::second_order();
        let e: Vec<f64> = [8, 16].iter().map(|&c| clebsch_vorticity_residual(&ct, &grid(c), 0.0, &s).linf()).collect();
        let order = (e[0] / e[1]).log2();
        assert!((1.8..2.3).contains(&order), "{e:?}");
    }

    #[test]
    fn rotation_preset_is_divergence_free_and_matches_half_curl() {
        let ct = clebsch_preset("rigid_rotation", 1.2).unwrap();
        let g = grid(8);
        let s = StencilSpec::second_order();
        assert!(clebsch_divergence_residual(&ct, &g, 0.0, &s).linf() < 1e-12);
        let u = clebsch_velocity(&ct, &g, 0.0);
        let w = eulerian_vorticity(&u, 0.0, &s).unwrap();
        let h = DEFAULT_STEP;
        for n in 0..g.node_count() {
            let x = g.label(n);
            let half = 0.5 * ct.phi.gradient(&x, 0.0, h).cross(&ct.psi.gradient(&x, 0.0, h));
            assert!((w.at(n) - half).norm() < 1e-12);
        }
    }

    #[test]
    fn gauge_shift_leaves_velocity_unchanged() {
        let ct = clebsch_preset("rigid_rotation", 0.9).unwrap();
        let mut shifted = ct.clone();
        shifted.gauge = ct.gauge.plus(&ScalarFunction::new(|_, t| t * t + 3.0).with_gradient(|_, _| Vec3::zeros()));
        for x in grid(3).labels() {
            assert_eq!(ct.velocity_at(&x, 1.7), shifted.velocity_at(&x, 1.7));
        }
    }

    #[test]
    fn advection_of_invariant_potentials() {
        let s = StencilSpec::second_order();
        let g = grid(8);
        let ct = clebsch_preset("rotation_invariants", 1.0).unwrap();
        let (a, b) = clebsch_advection_residual(&ct, &rotation_field(1.3), &g, 0.4, &s);
        assert!(a.linf() < 1e-12 && b.linf() < 1e-12);
        let (a, b) = clebsch_advection_residual(&ct, &VectorFunction::zero(), &g, 0.4, &s);
        assert_eq!((a.linf(), b.linf()), (0.0, 0.0));
        let tr = clebsch_preset("translating", 1.0).unwrap();
        let stream = VectorFunction::new(|_, _| Vec3::x());
        let (a, b) = clebsch_advection_residual(&tr, &stream, &g, 0.4, &s);
        assert!(a.linf() < 1e-12 && b.linf() < 1e-12);
        // Under a different stream the material derivative of φ no longer vanishes.
        let (a, _) = clebsch_advection_residual(&tr, &rotation_field(1.0), &g, 0.4, &s);
        assert!(a.linf() > 0.5);
    }

    #[test]
    fn potential_flows_satisfy_laplace_and_bernoulli() {
        let s = StencilSpec::second_order();
        let g = grid(8);
        let k = 0.7;
        let uniform = ScalarFunction::new(move |x, _| k * x.x).with_time_derivative(|_, _| 0.0);
        let fp = ForcePotential::without_pressure(ScalarFunction::constant(k * k / 2.0), 1.0);
        let r = potential_flow_checks(&uniform, &fp, &g, 0.0, &s);
        assert!(r.laplace.linf() < 1e-12 && r.bernoulli.linf() < 1e-12);

        let e = catalog_flow("stagnation", &Params::from([("k".to_string(), k)]), None).unwrap();
        let stag = ScalarFunction::new(move |x, _| 0.5 * k * (x.x * x.x - x.y * x.y)).with_time_derivative(|_, _| 0.0);
        let r = potential_flow_checks(&stag, &e.force, &g, 0.3, &s);
        assert!(r.laplace.linf() < 1e-12);
        assert!(r.bernoulli.linf() <= 1e-12, "{:e}", r.bernoulli.linf());
    }

    #[test]
    fn vortex_potential_excludes_the_cut() {
        let gamma = 2.0 * std::f64::consts::PI;
        let e = catalog_flow("point_vortex", &Params::new(), None).unwrap();
        let f = vortex_potential(gamma);
        let s = StencilSpec::second_order();
        let errs: Vec<(f64, f64)> = [16, 32]
            .iter()
            .map(|&c| {
                let g = LabelGrid::new(vec![
                    Axis::closed(-1.5, -0.5, c),
                    Axis::closed(-0.5, 0.5, c),
                    Axis::closed(-0.15, 0.15, 3),
                ])
                .unwrap();
                let r = potential_flow_checks(&f, &e.force, &g, 0.0, &s);
                assert!(r.laplace.excluded > 0);
                assert_eq!(r.laplace.excluded, r.bernoulli.excluded);
                (r.bernoulli.linf(), r.laplace.linf())
            })
            .collect();
        assert!(errs[1].0 < errs[0].0 / 3.0, "{errs:?}");
        assert!(errs[1].1 < errs[0].1 / 3.0, "{errs:?}");
    }

    #[test]
    fn smooth_potentials_pass_the_probe() {
        let ct = clebsch_preset("rotation_invariants", 1.0).unwrap();
        let pts = grid(3).labels();
        let [a, b] = smoothness_probe(&ct, &pts, 0.0, 1e-2);
        assert!(a < 1e-8 && b < 1e-8);
        let rough = ClebschTriple::new(
            "rough",
            // Classical example whose mixed partials differ at the origin.
            ScalarFunction::new(|x, _| {
                let r2 = x.x * x.x + x.y * x.y;
                if r2 == 0.0 {
                    0.0
                } else {
                    x.x * x.y * (x.x * x.x - x.y * x.y) / r2
                }
            }),
            ScalarFunction::constant(0.0),
            ScalarFunction::constant(0.0),
        );
        let [a, _] = smoothness_probe(&rough, &[Vec3::zeros()], 0.0, 1e-2);
        assert!(a > 1.0, "{a}");
    }
}
