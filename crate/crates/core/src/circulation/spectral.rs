use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::Vec3;

/// Derivative of periodic samples covering one `period`, by Fourier differentiation.
/// The Nyquist mode of an even-length sequence is dropped.
pub(crate) fn spectral_derivative(values: &[f64], period: f64) -> Vec<f64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|v| Complex::new(*v, 0.0)).collect();
    forward.process(&mut buf);
    let scale = 2.0 * std::f64::consts::PI / period;
    for (k, c) in buf.iter_mut().enumerate() {
        let wave = if k < n.div_ceil(2) {
            k as f64
        } else if n.is_multiple_of(2) && k == n / 2 {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c *= Complex::new(0.0, wave * scale);
    }
    inverse.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

pub(crate) fn spectral_derivative_vec(points: &[Vec3], period: f64) -> Vec<Vec3> {
    let parts: Vec<Vec<f64>> = (0..3)
        .map(|k| spectral_derivative(&points.iter().map(|p| p[k]).collect::<Vec<_>>(), period))
        .collect();
    (0..points.len()).map(|i| Vec3::new(parts[0][i], parts[1][i], parts[2][i])).collect()
}
