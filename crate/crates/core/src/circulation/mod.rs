//! Line and surface integrals over material loops and surfaces: circulation in position
//! and label form, vorticity flux, Stokes and Kelvin checks, and vortex-tube sections.

mod curve;
mod spectral;
mod surface;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::invariant_at;
use crate::field::{differentiate, pairwise_sum, Axis, Field, LabelGrid, QuadratureRule, Rank, StencilSpec};
use crate::flowmap::FlowMap;
use crate::functions::DEFAULT_STEP;
use crate::{Error, Result, Vec3};

pub use curve::{plane_frame, LoopShape, MaterialLoop, MIN_LOOP_POINTS};
pub use surface::MaterialSurface;

use spectral::spectral_derivative_vec;

/// Both forms of the circulation around a material loop.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Circulation {
    pub time: f64,
    /// `∮ u · dx` along the advected loop.
    pub position_form: f64,
    /// `∮ (α da + β db + γ dc)` along the label loop.
    pub label_form: f64,
    pub advected_length: f64,
    pub points: usize,
}

impl Circulation {
    pub fn mismatch(&self) -> f64 {
        (self.position_form - self.label_form).abs()
    }
}

struct LoopSample {
    x: Vec3,
    u: Vec3,
    covelocity: Vec3,
}

fn sample_loop(m: &FlowMap, points: &[Vec3], t: f64) -> Result<Vec<LoopSample>> {
    points
        .par_iter()
        .map(|a| {
            let x = m.position(a, t)?;
            let u = m.velocity(a, t)?;
            let (f, _) = m.gradient_at(a, t, DEFAULT_STEP)?;
            Ok(LoopSample {
                x,
                u,
                covelocity: f.transpose() * u,
            })
        })
        .collect()
}

/// Fourth-order derivative of samples on `[0, 1]` including both ends.
fn side_derivative(x: &[Vec3]) -> Result<Vec<Vec3>> {
    let cells = x.len() - 1;
    let grid = LabelGrid::new(vec![Axis::closed(0.0, 1.0, cells)])?;
    let data = x.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
    let f = Field::new(grid, Rank::Vector, data)?;
    let d = differentiate(&f, 0, &StencilSpec::fourth_order())?;
    Ok((0..x.len()).map(|n| d.vector(n)).collect())
}

/// Circulation around `lp` at time `t`.
pub fn circulation(m: &FlowMap, lp: &MaterialLoop, t: f64, q: &QuadratureRule) -> Result<Circulation> {
    let samples = sample_loop(m, lp.points(), t)?;
    let h = lp.parameter_step();
    let (position_form, label_form, length) = match *lp.shape() {
        LoopShape::Smooth => {
            let x: Vec<Vec3> = samples.iter().map(|s| s.x).collect();
            let dx = spectral_derivative_vec(&x, std::f64::consts::TAU);
            let pos: Vec<f64> = samples.iter().zip(&dx).map(|(s, d)| s.u.dot(d)).collect();
            let lab: Vec<f64> = samples.iter().zip(lp.tangents()).map(|(s, d)| s.covelocity.dot(d)).collect();
            let len: Vec<f64> = dx.iter().map(|d| d.norm()).collect();
            (
                q.integrate_line(&pos, h, true)?,
                q.integrate_line(&lab, h, true)?,
                q.integrate_line(&len, h, true)?,
            )
        }
        LoopShape::Polygon { sides, per_side } => {
            let n = lp.len();
            let (mut pos, mut lab, mut len) = (Vec::new(), Vec::new(), Vec::new());
            for k in 0..sides {
                let idx: Vec<usize> = (0..=per_side).map(|j| (k * per_side + j) % n).collect();
                let x: Vec<Vec3> = idx.iter().map(|&i| samples[i].x).collect();
                let dx = side_derivative(&x)?;
                let side = lp.tangents()[k * per_side];
                let p: Vec<f64> = idx.iter().zip(&dx).map(|(&i, d)| samples[i].u.dot(d)).collect();
                let l: Vec<f64> = idx.iter().map(|&i| samples[i].covelocity.dot(&side)).collect();
                let s: Vec<f64> = dx.iter().map(|d| d.norm()).collect();
                pos.push(q.integrate_line(&p, h, false)?);
                lab.push(q.integrate_line(&l, h, false)?);
                len.push(q.integrate_line(&s, h, false)?);
            }
            (pairwise_sum(&pos), pairwise_sum(&lab), pairwise_sum(&len))
        }
    };
    if !(length > 1e-12) {
        return Err(Error::Degenerate(format!("advected loop length {length:e}")));
    }
    Ok(Circulation {
        time: t,
        position_form,
        label_form,
        advected_length: length,
        points: lp.len(),
    })
}

/// `2 ∬ ω · n dσ` over a material surface, with `ω` the half-curl vorticity.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VorticityFlux {
    pub time: f64,
    /// Spatial vorticity `F A / J` against tangents differenced from advected positions.
    pub position_form: f64,
    /// Label invariants against label-space tangents.
    pub label_form: f64,
}

pub fn vorticity_flux(m: &FlowMap, surf: &MaterialSurface, t: f64, s: &StencilSpec, q: &QuadratureRule) -> Result<VorticityFlux> {
    let pts = surf.points();
    let evaluated: Vec<(Vec3, Vec3, Vec3)> = pts
        .par_iter()
        .map(|a| {
            let p = invariant_at(m, a, t, DEFAULT_STEP)?;
            Ok((m.position(a, t)?, p.label, p.spatial))
        })
        .collect::<Result<_>>()?;
    let grid = surf.param_grid().clone();
    let x = Field::new(
        grid,
        Rank::Vector,
        evaluated.iter().flat_map(|(x, _, _)| [x.x, x.y, x.z]).collect(),
    )?;
    let (x1, x2) = (differentiate(&x, 0, s)?, differentiate(&x, 1, s)?);
    let (a1, a2) = surf.tangents();
    let w = surf.weights(q)?;
    let pos: Vec<f64> = (0..pts.len())
        .map(|n| 2.0 * w[n] * evaluated[n].2.dot(&x1.vector(n).cross(&x2.vector(n))))
        .collect();
    let lab: Vec<f64> = (0..pts.len())
        .map(|n| 2.0 * w[n] * evaluated[n].1.dot(&a1[n].cross(&a2[n])))
        .collect();
    Ok(VorticityFlux {
        time: t,
        position_form: pairwise_sum(&pos),
        label_form: pairwise_sum(&lab),
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StokesCheck {
    pub circulation: f64,
    pub flux: f64,
    pub residual: f64,
}

/// `|∮ u · dx − 2 ∬ ω · n dσ|` for a surface spanning the loop, both in position form.
pub fn stokes_residual(
    m: &FlowMap,
    lp: &MaterialLoop,
    surf: &MaterialSurface,
    t: f64,
    s: &StencilSpec,
    q: &QuadratureRule,
) -> Result<StokesCheck> {
    match surf.spans(lp) {
        Some(d) if d <= 1e-10 * (1.0 + lp.label_length()) => {}
        _ => return Err(Error::InvalidParameter("surface does not span the loop".into())),
    }
    let c = circulation(m, lp, t, q)?.position_form;
    let f = vorticity_flux(m, surf, t, s, q)?.position_form;
    Ok(StokesCheck {
        circulation: c,
        flux: f,
        residual: (c - f).abs(),
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KelvinRow {
    pub t: f64,
    pub circulation: f64,
    pub label_form: f64,
    pub flux: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KelvinDrift {
    pub rows: Vec<KelvinRow>,
    pub circulation_drift: f64,
    pub flux_drift: Option<f64>,
}

/// Change in circulation (and in flux through `surf`, if given) relative to `times[0]`.
pub fn kelvin_drift(
    m: &FlowMap,
    lp: &MaterialLoop,
    surf: Option<&MaterialSurface>,
    times: &[f64],
    s: &StencilSpec,
    q: &QuadratureRule,
) -> Result<KelvinDrift> {
    if times.len() < 2 {
        return Err(Error::InvalidParameter("Kelvin drift needs at least two times".into()));
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let c = circulation(m, lp, t, q)?;
        let flux = surf
            .map(|sf| vorticity_flux(m, sf, t, s, q).map(|f| f.position_form))
            .transpose()?;
        rows.push(KelvinRow {
            t,
            circulation: c.position_form,
            label_form: c.label_form,
            flux,
        });
    }
    let c0 = rows[0].circulation;
    let circulation_drift = rows.iter().map(|r| (r.circulation - c0).abs()).fold(0.0, f64::max);
    let flux_drift = rows[0]
        .flux
        .map(|f0| rows.iter().map(|r| (r.flux.unwrap_or(f64::NAN) - f0).abs()).fold(0.0, f64::max));
    Ok(KelvinDrift {
        rows,
        circulation_drift,
        flux_drift,
    })
}

/// How the flux through a tube section is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionMethod {
    /// Integrate vorticity over the section.
    Surface,
    /// Circulation around the section's boundary loop; usable when vorticity is singular
    /// inside the section (point vortex).
    BoundaryCirculation,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TubeFlux {
    pub first: f64,
    pub second: f64,
    pub difference: f64,
    pub method: SectionMethod,
}

/// Flux through two sections of one vortex tube, oriented the same way along the tube.
pub fn tube_section_flux(
    m: &FlowMap,
    sections: (&MaterialSurface, &MaterialSurface),
    t: f64,
    method: SectionMethod,
    s: &StencilSpec,
    q: &QuadratureRule,
) -> Result<TubeFlux> {
    let flux = |sf: &MaterialSurface| -> Result<f64> {
        match method {
            SectionMethod::Surface => Ok(vorticity_flux(m, sf, t, s, q)?.position_form),
            SectionMethod::BoundaryCirculation => {
                let b = sf
                    .boundary()
                    .ok_or_else(|| Error::InvalidParameter("section has no boundary loop".into()))?;
                Ok(circulation(m, b, t, q)?.position_form)
            }
        }
    };
    let (first, second) = (flux(sections.0)?, flux(sections.1)?);
    Ok(TubeFlux {
        first,
        second,
        difference: (first - second).abs(),
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{catalog_flow, Params};
    use std::f64::consts::PI;

    fn params(kv: &[(&str, f64)]) -> Params {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn q() -> QuadratureRule {
        QuadratureRule::trapezoid()
    }

    #[test]
    fn rotation_disk_flux_and_circulation() {
        let w = 1.5;
        let e = catalog_flow("rigid_rotation", &params(&[("omega", w)]), None).unwrap();
        let d = MaterialSurface::disk(Vec3::zeros(), 1.0, Vec3::z(), 32, 128).unwrap();
        let s = StencilSpec::fourth_order();
        let f = vorticity_flux(&e.map, &d, 0.4, &s, &q()).unwrap();
        assert!((f.position_form - 2.0 * PI * w).abs() < 1e-4, "{f:?}");
        assert!((f.label_form - 2.0 * PI * w).abs() < 1e-12);
        let c = circulation(&e.map, d.boundary().unwrap(), 0.4, &q()).unwrap();
        assert!((c.position_form - 2.0 * PI * w).abs() < 1e-12);
        assert!(c.mismatch() < 1e-12);
        let r = circulation(&e.map, &d.boundary().unwrap().reversed(), 0.4, &q()).unwrap();
        assert!((r.position_form + c.position_form).abs() < 1e-12);
    }

    #[test]
    fn cap_and_disk_agree() {
        let e = catalog_flow("rigid_rotation", &Params::new(), None).unwrap();
        let s = StencilSpec::fourth_order();
        let cap = MaterialSurface::cap(Vec3::new(0.1, 0.0, 0.2), 0.8, Vec3::new(0.3, 0.0, 1.0), 64, 128).unwrap();
        let r = stokes_residual(&e.map, cap.boundary().unwrap(), &cap, 0.9, &s, &q()).unwrap();
        assert!(r.residual < 1e-3, "{r:?}");
    }

    #[test]
    fn point_vortex_circulation() {
        let e = catalog_flow("point_vortex", &params(&[("cells", 8.0), ("steps", 512.0)]), None).unwrap();
        let around = MaterialLoop::circle(Vec3::zeros(), 1.0, Vec3::z(), 256).unwrap();
        let c = circulation(&e.map, &around, 0.5, &q()).unwrap();
        assert!((c.position_form - 2.0 * PI).abs() < 1e-6, "{c:?}");
        let beside = MaterialLoop::circle(Vec3::new(1.0, 0.0, 0.0), 0.3, Vec3::z(), 256).unwrap();
        let c = circulation(&e.map, &beside, 0.5, &q()).unwrap();
        assert!(c.position_form.abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn gerstner_square_label_and_position_forms_agree() {
        let e = catalog_flow("gerstner", &Params::new(), None).unwrap();
        let sq = MaterialSurface::parallelogram(Vec3::new(0.5, -1.5, 0.0), Vec3::new(0.4, 0.0, 0.0), Vec3::new(0.0, 0.4, 0.0), 32).unwrap();
        let c = circulation(&e.map, sq.boundary().unwrap(), 0.7, &q()).unwrap();
        assert!(c.mismatch() < 1e-5, "{c:?}");
        let r = stokes_residual(&e.map, sq.boundary().unwrap(), &sq, 0.7, &StencilSpec::fourth_order(), &q()).unwrap();
        assert!(r.residual < 1e-3, "{r:?}");
    }

    #[test]
    fn rotation_tube_sections_match() {
        let e = catalog_flow("rigid_rotation", &Params::new(), None).unwrap();
        let a = MaterialSurface::disk(Vec3::zeros(), 0.5, Vec3::z(), 16, 64).unwrap();
        let b = MaterialSurface::disk(Vec3::new(0.0, 0.0, 0.7), 0.5, Vec3::z(), 16, 64).unwrap();
        let r = tube_section_flux(&e.map, (&a, &b), 1.1, SectionMethod::Surface, &StencilSpec::fourth_order(), &q()).unwrap();
        assert!(r.difference <= 1e-6, "{r:?}");
    }

    #[test]
    fn polygon_reversal_negates() {
        let e = catalog_flow("simple_shear", &Params::new(), None).unwrap();
        let lp = MaterialLoop::parallelogram(Vec3::new(-0.5, -0.5, 0.0), Vec3::x(), Vec3::y(), 16).unwrap();
        let c = circulation(&e.map, &lp, 0.3, &q()).unwrap();
        let r = circulation(&e.map, &lp.reversed(), 0.3, &q()).unwrap();
        assert!((c.position_form + 1.0).abs() < 1e-12, "{c:?}");
        assert!((c.position_form + r.position_form).abs() < 1e-13);
    }
}
