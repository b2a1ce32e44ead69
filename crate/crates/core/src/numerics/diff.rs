use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Fourth-order finite-difference first derivative with one-sided
/// closures at the two ends.
pub fn fd4_first(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5);
    let mut g = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    for i in 2..n - 2 {
        g[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * c;
    }
    g[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * c;
    g[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * c;
    g[n - 1] = -(-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] + 16.0 * f[n - 4]
        - 3.0 * f[n - 5])
        * c;
    g[n - 2] = -(-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]) * c;
    g
}

/// Fourth-order finite-difference second derivative.
pub fn fd4_second(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 6);
    let mut g = vec![0.0; n];
    let c = 1.0 / (12.0 * h * h);
    for i in 2..n - 2 {
        g[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) * c;
    }
    let left = |f: &dyn Fn(usize) -> f64| {
        (
            (45.0 * f(0) - 154.0 * f(1) + 214.0 * f(2) - 156.0 * f(3) + 61.0 * f(4) - 10.0 * f(5)) * c,
            (10.0 * f(0) - 15.0 * f(1) - 4.0 * f(2) + 14.0 * f(3) - 6.0 * f(4) + f(5)) * c,
        )
    };
    let (g0, g1) = left(&|i| f[i]);
    g[0] = g0;
    g[1] = g1;
    let (gn, gn1) = left(&|i| f[n - 1 - i]);
    g[n - 1] = gn;
    g[n - 2] = gn1;
    g
}

/// Spectral derivative of order `order` of samples that are treated as one
/// period of a periodic function with spacing `h` (the caller guarantees the
/// data decays to zero at both ends, so the wrap is smooth).
pub fn spectral_derivative(f: &[f64], h: f64, order: u32) -> Vec<f64> {
    let n = f.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let period = n as f64 * h;
    for (j, z) in buf.iter_mut().enumerate() {
        let kj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        if n % 2 == 0 && j == n / 2 && order % 2 == 1 {
            *z = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, 2.0 * PI * kj / period);
        *z *= ik.powu(order);
    }
    inv.process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}
