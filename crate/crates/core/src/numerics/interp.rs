/// Natural cubic spline through `(x_i, y_i)` with `x` strictly increasing.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 3 && y.len() == n, "spline needs at least three knots");
        let mut m = vec![0.0; n];
        // tridiagonal solve (Thomas) for interior second derivatives
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Self { x, y, m }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= self.x.len() => self.x.len() - 2,
            p => p - 1,
        }
    }

    /// Evaluates the spline; outside the knot range the end cubic is extended.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
            .collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    d[i] = 0.0;
                } else {
                    let h0 = x[i] - x[i - 1];
                    let h1 = x[i + 1] - x[i];
                    let w1 = 2.0 * h1 + h0;
                    let w2 = h1 + 2.0 * h0;
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
            d[n - 1] = end_slope(
                x[n - 1] - x[n - 2],
                x[n - 2] - x[n - 3],
                delta[n - 2],
                delta[n - 3],
            );
        }
        Self { x, y, d }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Local four-point (cubic) Lagrange interpolation of uniformly spaced
/// samples `f` with first node `x0` and spacing `h`. Fourth-order accurate.
pub fn lagrange4(f: &[f64], x0: f64, h: f64, t: f64) -> f64 {
    let n = f.len();
    let s = (t - x0) / h;
    let i = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = s - i as f64;
    // nodes at u = 0, 1, 2, 3
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    l0 * f[i] + l1 * f[i + 1] + l2 * f[i + 2] + l3 * f[i + 3]
}

/// Local Lagrange interpolation through `points` uniformly spaced samples
/// around `t` (sixth order for `points = 6`).
pub fn lagrange_uniform(f: &[f64], x0: f64, h: f64, t: f64, points: usize) -> f64 {
    let n = f.len();
    let s = (t - x0) / h;
    let half = (points as isize - 1) / 2;
    let i0 = (s.floor() as isize - half).clamp(0, n as isize - points as isize) as usize;
    let u = s - i0 as f64;
    let mut acc = 0.0;
    for j in 0..points {
        let mut w = 1.0;
        for l in 0..points {
            if l != j {
                w *= (u - l as f64) / (j as f64 - l as f64);
            }
        }
        acc += w * f[i0 + j];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_smooth_function() {
        let x: Vec<f64> = (0..201).map(|i| -4.0 + 0.04 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (-v * v).exp()).collect();
        let s = CubicSpline::new(x, y);
        for t in [-1.234, 0.0, 0.777, 2.5] {
            assert!((s.eval(t) - (-t * t).exp()).abs() < 1e-6);
            assert!((s.derivative(t) + 2.0 * t * (-t * t).exp()).abs() < 1e-4);
        }
    }

    #[test]
    fn pchip_stays_monotone() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 0.1, 3.0, 3.05, 10.0];
        let p = Pchip::new(x, y);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn lagrange4_exact_on_cubics() {
        let f: Vec<f64> = (0..10).map(|i| {
            let x = 0.5 * i as f64;
            x * x * x - 2.0 * x
        }).collect();
        let t = 2.3;
        assert!((lagrange4(&f, 0.0, 0.5, t) - (t * t * t - 2.0 * t)).abs() < 1e-12);
        assert!((lagrange_uniform(&f, 0.0, 0.5, t, 6) - (t * t * t - 2.0 * t)).abs() < 1e-12);
    }

    #[test]
    fn lagrange6_is_sixth_order() {
        let err = |n: usize| {
            let h = 6.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (-3.0 + i as f64 * h).sin()).collect();
            (0..n - 1)
                .map(|i| {
                    let t = -3.0 + (i as f64 + 0.37) * h;
                    (lagrange_uniform(&f, -3.0, h, t, 6) - t.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(err(41) / err(81) > 50.0);
    }
}
