/// Natural cubic spline through equally spaced samples.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl UniformSpline {
    /// Needs at least two samples and `h > 0`.
    pub fn new(x0: f64, h: f64, y: Vec<f64>) -> Self {
        assert!(y.len() >= 2 && h > 0.0, "spline needs two samples and positive spacing");
        let n = y.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system (1, 4, 1)·m = 6/h²·Δ²y for the interior knots.
            let k = n - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                let rhs = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (h * h);
                let denom = 4.0 - if i > 0 { c[i - 1] } else { 0.0 };
                c[i] = 1.0 / denom;
                d[i] = (rhs - if i > 0 { d[i - 1] } else { 0.0 }) / denom;
            }
            for i in (0..k).rev() {
                m[i + 1] = d[i] - if i + 1 < k { c[i] * m[i + 2] } else { 0.0 };
            }
        }
        UniformSpline { x0, h, y, m }
    }

    pub fn start(&self) -> f64 {
        self.x0
    }

    pub fn end(&self) -> f64 {
        self.x0 + self.h * (self.y.len() - 1) as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start() && x <= self.end()
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    }

    /// Value, first and second derivative at `x` (clamped to the range).
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let (i, t) = self.locate(x);
        let (h, y0, y1, m0, m1) = (self.h, self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let a = 1.0 - t;
        let v = a * y0 + t * y1 + h * h / 6.0 * ((a * a * a - a) * m0 + (t * t * t - t) * m1);
        let dv = (y1 - y0) / h + h / 6.0 * ((1.0 - 3.0 * a * a) * m0 + (3.0 * t * t - 1.0) * m1);
        let ddv = a * m0 + t * m1;
        (v, dv, ddv)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// Second derivatives at the knots.
    pub fn knot_curvatures(&self) -> &[f64] {
        &self.m
    }
}
