use rayon::prelude::*;

use crate::field::LabelGrid;
use crate::flowmap::{advance, FlowMap, SampledTrajectories};
use crate::functions::VectorFunction;
use crate::{Error, Result, Vec3};

/// Particles re-run at half step for the step-halving estimate.
const HALVING_SAMPLE: usize = 64;

fn check_times(times: &[f64], dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if times.first().is_none_or(|t| *t < 0.0) {
        return Err(Error::InvalidParameter("times must be non-empty and start at t >= 0".into()));
    }
    let mut prev = 0.0;
    for &t in times {
        let steps = (t - prev) / dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} does not divide the gap from {prev} to {t}"
            )));
        }
        prev = t;
    }
    Ok(())
}

fn integrate_one(v: &VectorFunction, a: Vec3, times: &[f64], dt: f64, bounds: Option<(Vec3, Vec3)>, particle: usize) -> Result<Vec<Vec3>> {
    let mut out = Vec::with_capacity(times.len());
    let (mut x, mut t) = (a, 0.0);
    for &s in times {
        x = advance(v, x, t, s, dt, bounds, particle)?;
        t = s;
        out.push(x);
    }
    Ok(out)
}

/// Integrate `dx/dt = v(x, t)` with classical RK4 from `x(a, 0) = a` for every node of `grid`,
/// storing positions and velocities at `times`.
///
/// A strided subset of particles is re-integrated with `dt / 2`; the largest change in the
/// final position is kept as `step_halving_error`.
pub fn integrate_trajectories(
    v: &VectorFunction,
    grid: LabelGrid,
    times: &[f64],
    dt: f64,
    bounds: Option<(Vec3, Vec3)>,
) -> Result<FlowMap> {
    check_times(times, dt)?;
    let labels = grid.labels();
    let paths: Vec<Result<Vec<Vec3>>> = labels
        .par_iter()
        .enumerate()
        .map(|(n, a)| integrate_one(v, *a, times, dt, bounds, n))
        .collect();
    let nt = times.len();
    let mut positions = Vec::with_capacity(labels.len() * nt);
    for p in paths {
        positions.extend(p?);
    }
    let velocities: Vec<Vec3> = positions
        .par_iter()
        .enumerate()
        .map(|(i, x)| v.value(x, times[i % nt]))
        .collect();

    let stride = labels.len().div_ceil(HALVING_SAMPLE).max(1);
    let t_end = times[nt - 1];
    let halving = (0..labels.len())
        .step_by(stride)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&n| {
            let fine = advance(v, labels[n], 0.0, t_end, 0.5 * dt, bounds, n)?;
            Ok((fine - positions[n * nt + nt - 1]).norm())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let table = SampledTrajectories {
        times: times.to_vec(),
        positions,
        velocities: Some(velocities),
        dt: Some(dt),
        step_halving_error: Some(halving),
    };
    FlowMap::sampled("integrated", grid, table, Some((v.clone(), dt, bounds)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat3;

    fn rotation(w: f64) -> VectorFunction {
        VectorFunction::new(move |x, _| Vec3::new(-w * x.y, w * x.x, 0.0))
            .with_jacobian(move |_, _| Mat3::new(0.0, -w, 0.0, w, 0.0, 0.0, 0.0, 0.0, 0.0))
            .steady()
    }

    #[test]
    fn zero_field_is_identity() {
        let g = LabelGrid::cube(-1.0, 1.0, 4, 2).unwrap();
        let m = integrate_trajectories(&VectorFunction::zero(), g.clone(), &[0.5, 1.0], 0.1, None).unwrap();
        for n in 0..g.node_count() {
            assert_eq!(m.position(&g.label(n), 1.0).unwrap(), g.label(n));
        }
    }

    #[test]
    fn constant_field_translates_exactly() {
        let g = LabelGrid::cube(-1.0, 1.0, 4, 3).unwrap();
        let v = VectorFunction::new(|_, _| Vec3::new(1.0, 0.0, 0.0)).steady();
        let m = integrate_trajectories(&v, g.clone(), &[1.0, 2.0], 0.25, None).unwrap();
        for n in 0..g.node_count() {
            let a = g.label(n);
            assert!((m.position(&a, 2.0).unwrap() - (a + Vec3::new(2.0, 0.0, 0.0))).norm() < 1e-14);
        }
    }

    #[test]
    fn rotation_closure_is_fourth_order() {
        let w = 1.3;
        let period = 2.0 * std::f64::consts::PI / w;
        let g = LabelGrid::cube(0.5, 1.0, 4, 2).unwrap();
        let err = |steps: usize| {
            let m = integrate_trajectories(&rotation(w), g.clone(), &[period], period / steps as f64, None).unwrap();
            (0..g.node_count())
                .map(|n| (m.position(&g.label(n), period).unwrap() - g.label(n)).norm())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        let order = (e1 / e2).log2();
        assert!((3.8..=4.2).contains(&order), "order {order}");
    }

    #[test]
    fn escaping_particle_is_reported() {
        let g = LabelGrid::cube(0.0, 1.0, 4, 2).unwrap();
        let v = VectorFunction::new(|_, _| Vec3::new(1.0, 0.0, 0.0)).steady();
        let bounds = Some((Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.5, 2.0, 2.0)));
        assert!(matches!(
            integrate_trajectories(&v, g, &[1.0], 0.1, bounds),
            Err(Error::ParticleEscaped { .. })
        ));
    }

    #[test]
    fn dt_must_divide_gaps() {
        let g = LabelGrid::cube(0.0, 1.0, 4, 2).unwrap();
        assert!(integrate_trajectories(&VectorFunction::zero(), g, &[1.0], 0.3, None).is_err());
    }
}
