//! Kinetic energy ("living force") of a material volume, its rate of change against the
//! boundary flux of the combined potential, and the boundary form of the energy of a
//! potential flow.
//!
//! For an incompressible fluid with `ẍ = ∇Ω`, `Ω = V − p/ϱ`, the divergence theorem gives
//! `dK/dt = ∮ ϱ Ω U_n dω` over the current boundary of the volume.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::circulation::MaterialSurface;
use crate::clebsch::laplace_residual;
use crate::dynamics::{Closure, ForcePotential};
use crate::field::{Axis, LabelGrid, QuadAxis, QuadratureRule, StencilSpec};
use crate::flowmap::{FlowMap, ReferenceDensity};
use crate::functions::ScalarFunction;
use crate::{Error, Result, Vec3};

/// Step for label gradients of maps without exact ones.
const GRADIENT_STEP: f64 = 1e-5;
/// Largest `|∇²F|` accepted as harmonic.
pub const HARMONIC_TOLERANCE: f64 = 1e-6;
/// Normal derivatives at or below this are treated as zero.
pub const NEUMANN_FLOOR: f64 = 1e-12;
/// `C` in the bound `‖∇F‖∞ ≤ C h²` for potentials with no normal flux.
pub const HELMHOLTZ_CONSTANT: f64 = 1.0;

fn quad_axes(g: &LabelGrid) -> Vec<QuadAxis> {
    g.axes()
        .iter()
        .map(|a| QuadAxis {
            samples: a.nodes,
            spacing: a.spacing,
            closed: a.periodic,
        })
        .collect()
}

fn reference_density(m: &FlowMap, a: &Vec3) -> Result<f64> {
    match m.reference_density() {
        ReferenceDensity::Constant(r) => Ok(*r),
        ReferenceDensity::Field(f) => m
            .node_of(a)
            .map(|n| f.scalar(n))
            .ok_or_else(|| Error::Unavailable(format!("reference density at label {a:?}"))),
    }
}

/// `½ ∭ |ẋ|² ϱ₀ da db dc` over the map's label grid.
pub fn living_force(m: &FlowMap, t: f64, q: &QuadratureRule) -> Result<f64> {
    let u = m.velocities(t)?;
    let rho = m.reference_density();
    let w = q.tensor_weights(&quad_axes(m.labels()))?;
    Ok(0.5 * (0..u.node_count()).map(|n| w[n] * rho.at_node(n) * u.vector(n).norm_squared()).sum::<f64>())
}

/// A region of labels parameterized over a three-dimensional grid, with its closed boundary.
#[derive(Clone, Debug)]
pub struct MaterialVolume {
    name: String,
    param: LabelGrid,
    labels: Vec<Vec3>,
    /// `|∂a/∂s|` at every parameter node.
    volume_element: Vec<f64>,
    boundary: Vec<MaterialSurface>,
}

impl MaterialVolume {
    /// The label box `[lo, hi]` with `cells` intervals per side.
    pub fn label_box(lo: Vec3, hi: Vec3, cells: usize) -> Result<Self> {
        let param = LabelGrid::new((0..3).map(|k| Axis::closed(lo[k], hi[k], cells)).collect())?;
        let labels = param.labels();
        Ok(MaterialVolume {
            name: "box".into(),
            volume_element: vec![1.0; labels.len()],
            labels,
            param,
            boundary: MaterialSurface::box_faces(lo, hi, cells)?,
        })
    }

    /// Cylinder of `radius` about the z axis through `base`, extending `height` upwards.
    pub fn cylinder(
        base: Vec3,
        radius: f64,
        height: f64,
        radial_cells: usize,
        azimuth_points: usize,
        axial_cells: usize,
    ) -> Result<Self> {
        if radius <= 0.0 || height <= 0.0 {
            return Err(Error::InvalidParameter("cylinder radius and height must be positive".into()));
        }
        let param = LabelGrid::new(vec![
            Axis::closed(0.0, radius, radial_cells),
            Axis::periodic(0.0, TAU, azimuth_points),
            Axis::closed(0.0, height, axial_cells),
        ])?;
        let label = |s: &Vec3| base + Vec3::new(s.x * s.y.cos(), s.x * s.y.sin(), s.z);
        let labels: Vec<Vec3> = param.labels().iter().map(label).collect();
        let volume_element = param.labels().iter().map(|s| s.x).collect();
        let side_param = LabelGrid::new(vec![Axis::periodic(0.0, TAU, azimuth_points), Axis::closed(0.0, height, axial_cells)])?;
        let side = MaterialSurface::custom(
            side_param,
            |th, z| base + Vec3::new(radius * th.cos(), radius * th.sin(), z),
            |th, _| (Vec3::new(-radius * th.sin(), radius * th.cos(), 0.0), Vec3::z()),
            None,
        )?;
        let top = MaterialSurface::disk(base + height * Vec3::z(), radius, Vec3::z(), radial_cells, azimuth_points)?;
        let bottom = MaterialSurface::disk(base, radius, -Vec3::z(), radial_cells, azimuth_points)?;
        Ok(MaterialVolume {
            name: "cylinder".into(),
            param,
            labels,
            volume_element,
            boundary: vec![side, top, bottom],
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[Vec3] {
        &self.labels
    }

    pub fn boundary(&self) -> &[MaterialSurface] {
        &self.boundary
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.param.shape()
    }

    fn weights(&self, q: &QuadratureRule) -> Result<Vec<f64>> {
        let w = q.tensor_weights(&quad_axes(&self.param))?;
        Ok(w.iter().zip(&self.volume_element).map(|(w, j)| w * j).collect())
    }

    fn integrate<T: std::iter::Sum + std::ops::Mul<f64, Output = T>>(
        &self,
        q: &QuadratureRule,
        f: impl Fn(&Vec3) -> Result<T>,
    ) -> Result<T> {
        let w = self.weights(q)?;
        self.labels.iter().zip(&w).map(|(a, w)| Ok(f(a)? * *w)).sum()
    }

    /// Label-space volume.
    pub fn volume(&self, q: &QuadratureRule) -> Result<f64> {
        self.integrate(q, |_| Ok(1.0))
    }

    pub fn mass(&self, m: &FlowMap, q: &QuadratureRule) -> Result<f64> {
        self.integrate(q, |a| reference_density(m, a))
    }

    /// `∭ ẋ ϱ₀ da`.
    pub fn momentum(&self, m: &FlowMap, t: f64, q: &QuadratureRule) -> Result<Vec3> {
        self.integrate(q, |a| Ok(m.velocity(a, t)? * reference_density(m, a)?))
    }

    /// `½ ∭ |ẋ|² ϱ₀ da` over this volume.
    pub fn living_force(&self, m: &FlowMap, t: f64, q: &QuadratureRule) -> Result<f64> {
        self.integrate(q, |a| Ok(0.5 * m.velocity(a, t)?.norm_squared() * reference_density(m, a)?))
    }

    /// `∮ ϱ Ω U_n dω` over the boundary carried to time `t`.
    pub fn boundary_flux(&self, m: &FlowMap, fp: &ForcePotential, t: f64, q: &QuadratureRule) -> Result<f64> {
        let mut total = 0.0;
        for surf in &self.boundary {
            let w = surf.weights(q)?;
            let (t1, t2) = surf.tangents();
            for (n, a) in surf.points().iter().enumerate() {
                let (f, _) = m.gradient_at(a, t, GRADIENT_STEP)?;
                let area = (f * t1[n]).cross(&(f * t2[n]));
                let x = m.position(a, t)?;
                let u = m.velocity(a, t)?;
                total += w[n] * fp.density(&x, t) * fp.omega(&x, t) * u.dot(&area);
            }
        }
        Ok(total)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub time: f64,
    pub living_force: f64,
    /// Centred difference `(K(t + dt) − K(t − dt)) / 2dt`.
    pub rate: f64,
    pub flux: f64,
}

impl EnergyRow {
    pub fn gap(&self) -> f64 {
        (self.rate - self.flux).abs()
    }
}

/// Living force and its balance against the boundary flux at a sequence of times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub flow: String,
    pub domain: String,
    pub resolution: [usize; 3],
    pub step: f64,
    pub rows: Vec<EnergyRow>,
}

impl EnergyLedger {
    pub fn max_gap(&self) -> f64 {
        self.rows.iter().map(EnergyRow::gap).fold(0.0, f64::max)
    }

    /// Confirms `K ≥ 0` and strictly increasing times.
    pub fn check(&self) -> Result<()> {
        if let Some(r) = self.rows.iter().find(|r| r.living_force < 0.0) {
            return Err(Error::Degenerate(format!("negative living force {} at t = {}", r.living_force, r.time)));
        }
        if self.rows.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidParameter("ledger times must increase".into()));
        }
        Ok(())
    }
}

/// Compare `dK/dt` by centred differences of step `dt` with the boundary flux of `ϱΩ`.
pub fn energy_flux_residual(
    m: &FlowMap,
    fp: &ForcePotential,
    vol: &MaterialVolume,
    times: &[f64],
    dt: f64,
    q: &QuadratureRule,
) -> Result<EnergyLedger> {
    if matches!(fp.closure, Closure::Barotropic { .. }) {
        return Err(Error::InvalidParameter("the boundary-flux balance needs an incompressible closure".into()));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let k = |s: f64| vol.living_force(m, s, q);
        rows.push(EnergyRow {
            time: t,
            living_force: k(t)?,
            rate: (k(t + dt)? - k(t - dt)?) / (2.0 * dt),
            flux: vol.boundary_flux(m, fp, t, q)?,
        });
    }
    let ledger = EnergyLedger {
        flow: m.name().to_string(),
        domain: vol.name().to_string(),
        resolution: vol.resolution(),
        step: dt,
        rows,
    };
    ledger.check()?;
    Ok(ledger)
}

/// Helmholtz's implication for a harmonic potential: no normal flux anywhere means no motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelmholtzCheck {
    /// `max |∂F/∂n|` over the boundary.
    pub neumann_linf: f64,
    /// `max |∇F|` over the nodes by centred differences.
    pub gradient_linf: f64,
    /// `C h²`.
    pub bound: f64,
}

impl HelmholtzCheck {
    pub fn no_normal_flux(&self) -> bool {
        self.neumann_linf <= NEUMANN_FLOOR
    }

    /// False only when the boundary is impermeable and the flow still moves.
    pub fn holds(&self) -> bool {
        !self.no_normal_flux() || self.gradient_linf <= self.bound
    }
}

/// Energy of a potential flow in a box, from the volume and from the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    /// `½ ∭ |∇F|²`.
    pub volume: f64,
    /// `½ ∮ F ∂F/∂n` with the outward normal.
    pub boundary: f64,
    pub laplace: f64,
    pub cells: usize,
    pub helmholtz: HelmholtzCheck,
}

impl EnergyIdentity {
    pub fn gap(&self) -> f64 {
        (self.volume - self.boundary).abs()
    }
}

/// Second-order one-sided derivative along the outward normal `n` at a boundary point.
fn outward_derivative(f: &dyn Fn(&Vec3) -> f64, x: &Vec3, n: &Vec3, h: f64) -> f64 {
    (3.0 * f(x) - 4.0 * f(&(x - h * n)) + f(&(x - 2.0 * h * n))) / (2.0 * h)
}

/// Check `½ ∭ |∇F|² = ½ ∮ F ∂F/∂n` on the box `[lo, hi]` with `cells` intervals per side.
///
/// `F` must pass the Laplace gate. Normal derivatives use one-sided second-order
/// differences with the grid spacing.
pub fn boundary_energy_identity(
    potential: &ScalarFunction,
    lo: Vec3,
    hi: Vec3,
    cells: usize,
    s: &StencilSpec,
    q: &QuadratureRule,
) -> Result<EnergyIdentity> {
    let t = 0.0;
    let grid = LabelGrid::new((0..3).map(|k| Axis::closed(lo[k], hi[k], cells)).collect())?;
    let laplace = laplace_residual(potential, &grid, t, s).linf();
    if !(laplace <= HARMONIC_TOLERANCE) {
        return Err(Error::NotHarmonic(laplace));
    }
    let h: Vec<f64> = grid.axes().iter().map(|a| a.spacing).collect();
    let f = |x: &Vec3| potential.value(x, t);
    let hmin = h.iter().cloned().fold(f64::INFINITY, f64::min);

    let w = q.tensor_weights(&quad_axes(&grid))?;
    let nodes = grid.labels();
    let volume = 0.5 * nodes.iter().zip(&w).map(|(x, w)| w * potential.gradient(x, t, hmin).norm_squared()).sum::<f64>();
    let centred = |x: &Vec3| {
        Vec3::from_fn(|k, _| {
            let mut e = Vec3::zeros();
            e[k] = h[k];
            (f(&(x + e)) - f(&(x - e))) / (2.0 * h[k])
        })
    };
    let gradient_linf = nodes.iter().map(|x| centred(x).amax()).fold(0.0, f64::max);

    let mut boundary = 0.0;
    let mut neumann_linf: f64 = 0.0;
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let face = LabelGrid::new(vec![Axis::closed(lo[i], hi[i], cells), Axis::closed(lo[j], hi[j], cells)])?;
        let fw = q.tensor_weights(&quad_axes(&face))?;
        for (side, normal) in [(lo[k], -1.0), (hi[k], 1.0)] {
            let mut n = Vec3::zeros();
            n[k] = normal;
            for (p, w) in face.labels().iter().zip(&fw) {
                let mut x = Vec3::zeros();
                x[k] = side;
                x[i] = p.x;
                x[j] = p.y;
                let dn = outward_derivative(&f, &x, &n, h[k]);
                neumann_linf = neumann_linf.max(dn.abs());
                boundary += w * f(&x) * dn;
            }
        }
    }
    Ok(EnergyIdentity {
        volume,
        boundary: 0.5 * boundary,
        laplace,
        cells,
        helmholtz: HelmholtzCheck {
            neumann_linf,
            gradient_linf,
            bound: HELMHOLTZ_CONSTANT * hmin * hmin,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowmap::AnalyticMotion;
    use crate::flows::fixtures::{radial_source, radial_source_grid};
    use crate::flows::{catalog_flow, Params};

    fn rotation(omega: f64) -> crate::flows::CatalogEntry {
        catalog_flow("rigid_rotation", &Params::from([("omega".to_string(), omega)]), None).unwrap()
    }

    #[test]
    fn rest_has_no_living_force() {
        let g = LabelGrid::cube(-0.5, 0.5, 4, 3).unwrap();
        let m = FlowMap::analytic("rest", g, AnalyticMotion::new(|a, _| *a, |_, _| Vec3::zeros()));
        assert_eq!(living_force(&m, 0.3, &QuadratureRule::simpson()).unwrap(), 0.0);
    }

    #[test]
    fn rigid_rotation_on_unit_cube() {
        let w = 1.7;
        let e = rotation(w);
        let m = e.map.with_labels(LabelGrid::cube(-0.5, 0.5, 8, 3).unwrap()).unwrap();
        for t in [0.0, 0.4, 2.0] {
            let k = living_force(&m, t, &QuadratureRule::simpson()).unwrap();
            assert!((k - w * w / 12.0).abs() < 1e-12, "{k}");
        }
        let vol = MaterialVolume::label_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), 8).unwrap();
        let k = vol.living_force(&e.map, 0.7, &QuadratureRule::simpson()).unwrap();
        assert!((k - w * w / 12.0).abs() < 1e-12);
    }

    #[test]
    fn translation_carries_half_the_mass() {
        let g = LabelGrid::cube(0.0, 2.0, 4, 3).unwrap();
        let m = FlowMap::analytic(
            "drift",
            g,
            AnalyticMotion::new(|a, t| a + Vec3::new(t, 0.0, 0.0), |_, _| Vec3::x()),
        )
        .with_reference_density(ReferenceDensity::Constant(0.5));
        let k = living_force(&m, 1.0, &QuadratureRule::trapezoid()).unwrap();
        assert!((k - 0.5 * 4.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_in_coaxial_cylinder_is_balanced() {
        let w = 1.3;
        let e = rotation(w);
        let (radius, height) = (0.8, 0.5);
        let vol = MaterialVolume::cylinder(Vec3::new(0.0, 0.0, -0.25), radius, height, 8, 32, 4).unwrap();
        let q = QuadratureRule::simpson();
        let ledger = energy_flux_residual(&e.map, &e.force, &vol, &[0.0, 0.5, 1.0], 1e-3, &q).unwrap();
        let exact = 0.5 * w * w * TAU * height * radius.powi(4) / 4.0;
        for r in &ledger.rows {
            assert!((r.living_force - exact).abs() < 1e-12, "{r:?}");
            assert!(r.flux.abs() < 1e-12);
        }
        assert!(ledger.max_gap() <= 1e-8, "{}", ledger.max_gap());
    }

    #[test]
    fn steady_shear_has_no_energy_exchange() {
        let e = catalog_flow("simple_shear", &Params::new(), None).unwrap();
        let vol = MaterialVolume::label_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), 6).unwrap();
        let l = energy_flux_residual(&e.map, &e.force, &vol, &[0.0, 1.0], 1e-2, &QuadratureRule::simpson()).unwrap();
        assert!(l.max_gap() < 1e-10, "{:?}", l.rows);
    }

    #[test]
    fn radial_source_balances_at_second_order_in_time() {
        let s = radial_source(4.0, radial_source_grid(8).unwrap());
        let vol = MaterialVolume::label_box(Vec3::new(1.0, -0.5, -0.5), Vec3::new(2.0, 0.5, 0.5), 16).unwrap();
        let q = QuadratureRule::simpson();
        let gaps: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&dt| energy_flux_residual(&s.map, &s.force, &vol, &[0.5], dt, &q).unwrap().max_gap())
            .collect();
        let rate = energy_flux_residual(&s.map, &s.force, &vol, &[0.5], 0.05, &q).unwrap().rows[0].rate;
        assert!(rate.abs() > 1e-3, "{rate}");
        for w in gaps.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.8, "{gaps:?}");
        }
    }

    #[test]
    fn living_force_adds_over_disjoint_parts() {
        let e = catalog_flow("taylor_green", &Params::new(), None).unwrap();
        let q = QuadratureRule::simpson();
        let whole = MaterialVolume::label_box(Vec3::new(0.1, 0.2, 0.0), Vec3::new(0.9, 1.0, 0.4), 8).unwrap();
        let left = MaterialVolume::label_box(Vec3::new(0.1, 0.2, 0.0), Vec3::new(0.5, 1.0, 0.4), 8).unwrap();
        let right = MaterialVolume::label_box(Vec3::new(0.5, 0.2, 0.0), Vec3::new(0.9, 1.0, 0.4), 8).unwrap();
        let t = 0.3;
        let k = whole.living_force(&e.map, t, &q).unwrap();
        let parts = left.living_force(&e.map, t, &q).unwrap() + right.living_force(&e.map, t, &q).unwrap();
        // Simpson on the halves is a finer rule than on the whole, so agreement is only to quadrature error.
        assert!((k - parts).abs() < 1e-5 * k, "{k} {parts}");
    }

    #[test]
    fn galilean_offset_adds_mass_and_momentum_terms() {
        let e = catalog_flow("stagnation", &Params::new(), None).unwrap();
        let drift = Vec3::new(0.3, -0.7, 0.2);
        let base = e.map.clone();
        let b2 = base.clone();
        let moved = FlowMap::analytic(
            "stagnation_drifting",
            base.labels().clone(),
            AnalyticMotion::new(
                move |a, t| base.position(a, t).unwrap() + drift * t,
                move |a, t| b2.velocity(a, t).unwrap() + drift,
            ),
        );
        let q = QuadratureRule::simpson();
        let vol = MaterialVolume::label_box(Vec3::new(0.2, 0.1, -0.3), Vec3::new(0.6, 0.9, 0.3), 6).unwrap();
        let t = 0.4;
        let k0 = vol.living_force(&e.map, t, &q).unwrap();
        let k1 = vol.living_force(&moved, t, &q).unwrap();
        let mass = vol.mass(&e.map, &q).unwrap();
        let p = vol.momentum(&e.map, t, &q).unwrap();
        let expected = k0 + 0.5 * mass * drift.norm_squared() + drift.dot(&p);
        assert!((k1 - expected).abs() < 1e-12 * k1.max(1.0), "{k1} {expected}");
    }

    #[test]
    fn cylinder_volume_and_box_fluxes() {
        let q = QuadratureRule::simpson();
        let cyl = MaterialVolume::cylinder(Vec3::zeros(), 0.5, 2.0, 8, 16, 4).unwrap();
        assert!((cyl.volume(&q).unwrap() - 0.5 * TAU * 0.25 * 2.0).abs() < 1e-12);
        // Outward orientation: a uniform dilatation with Ω = 1 has flux equal to d(volume)/dt.
        let g = LabelGrid::cube(-1.0, 1.0, 4, 3).unwrap();
        let m = crate::flows::fixtures::radial_stretching(g);
        let fp = ForcePotential::without_pressure(ScalarFunction::constant(1.0), 1.0);
        for vol in [cyl, MaterialVolume::label_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), 6).unwrap()] {
            let v0 = vol.volume(&q).unwrap();
            let flux = vol.boundary_flux(&m, &fp, 0.5, &q).unwrap();
            // x = a(1 + t): volume (1 + t)³ V₀, rate 3 (1 + t)² V₀.
            assert!((flux - 3.0 * 1.5f64.powi(2) * v0).abs() < 1e-10 * v0, "{} {flux}", vol.name());
        }
    }

    #[test]
    fn constant_potential_is_trivial() {
        let f = ScalarFunction::constant(2.5);
        let r = boundary_energy_identity(&f, Vec3::zeros(), Vec3::repeat(1.0), 8, &StencilSpec::second_order(), &QuadratureRule::simpson())
            .unwrap();
        assert_eq!(r.volume, 0.0);
        assert!(r.boundary.abs() < 1e-13);
        assert!(r.helmholtz.no_normal_flux() && r.helmholtz.holds());
    }

    #[test]
    fn quadratic_potentials_match_moment_oracles() {
        let xy = ScalarFunction::new(|x, _| x.x * x.y);
        let saddle = ScalarFunction::new(|x, _| x.x * x.x - x.y * x.y);
        for (f, exact) in [(xy, 1.0 / 3.0), (saddle, 4.0 / 3.0)] {
            let r = boundary_energy_identity(&f, Vec3::zeros(), Vec3::repeat(1.0), 16, &StencilSpec::second_order(), &QuadratureRule::simpson())
                .unwrap();
            assert!((r.volume - exact).abs() < 1e-12, "{r:?}");
            assert!((r.boundary - exact).abs() < 1e-12, "{r:?}");
            assert!(!r.helmholtz.no_normal_flux() && r.helmholtz.holds());
        }
    }

    #[test]
    fn smooth_harmonic_potential_converges() {
        let f = ScalarFunction::new(|x, _| x.x.exp() * x.y.cos());
        let gaps: Vec<f64> = [8, 16]
            .iter()
            .map(|&c| {
                boundary_energy_identity(&f, Vec3::zeros(), Vec3::repeat(1.0), c, &StencilSpec::fourth_order(), &QuadratureRule::simpson())
                    .unwrap()
                    .gap()
            })
            .collect();
        assert!(gaps[1] < gaps[0] / 3.5, "{gaps:?}");
    }

    #[test]
    fn non_harmonic_potential_is_rejected() {
        // Zero normal derivative on the x and y faces, but ∇²F ≠ 0.
        let f = ScalarFunction::new(|x, _| (std::f64::consts::PI * x.x).cos() * (std::f64::consts::PI * x.y).cos());
        let r = boundary_energy_identity(&f, Vec3::zeros(), Vec3::repeat(1.0), 8, &StencilSpec::second_order(), &QuadratureRule::simpson());
        assert!(matches!(r, Err(Error::NotHarmonic(_))));
    }
}
