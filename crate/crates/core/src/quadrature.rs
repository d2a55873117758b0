//! Gauss–Legendre rules on the unit interval, composite rules and an
//! adaptive Gauss–Kronrod integrator for scalar integrands.

use std::f64::consts::PI;

/// A quadrature rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// `n`-point Gauss–Legendre rule mapped to `[0, 1]`; exact for degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // nodes on [-1,1] are +-x; map to [0,1]
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Quadrature { points, weights }
    }

    /// Smallest Gauss–Legendre rule exact for polynomials of degree `degree`.
    pub fn exact_for_degree(degree: usize) -> Self {
        Self::gauss_legendre(degree / 2 + 1)
    }

    /// Splits `[0, 1]` into `panels` equal panels, each carrying `self`.
    pub fn composite(&self, panels: usize) -> Self {
        assert!(panels >= 1);
        let h = 1.0 / panels as f64;
        let mut points = Vec::with_capacity(panels * self.len());
        let mut weights = Vec::with_capacity(panels * self.len());
        for k in 0..panels {
            let a = k as f64 * h;
            for (x, w) in self.points.iter().zip(&self.weights) {
                points.push(a + h * x);
                weights.push(h * w);
            }
        }
        Quadrature { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(a + h * x))
            .sum::<f64>()
            * h
    }

    /// Iterator over `(t, weight)` pairs mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (a + h * x, h * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS_K[7] * fc;
    let mut gauss = GK_WEIGHTS_G[3] * fc;
    for (k, x) in GK_NODES.iter().take(7).enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        kronrod += GK_WEIGHTS_K[k] * s;
        if k % 2 == 1 {
            gauss += GK_WEIGHTS_G[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of a scalar function over `[a, b]`.
pub fn adaptive_integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let (whole, _) = gk15(&mut f, a, b);
    let scale = whole.abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&mut f, lo, hi);
        let local_tol = (abs_tol.max(rel_tol * scale)) * (hi - lo) / (b - a);
        if err <= local_tol || depth >= 40 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_monomials_exactly() {
        for n in 1..=8 {
            let q = Quadrature::gauss_legendre(n);
            assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for k in 0..2 * n {
                let exact = 1.0 / (k as f64 + 1.0);
                let approx = q.integrate(0.0, 1.0, |s| s.powi(k as i32));
                assert!((approx - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn points_are_sorted_inside_unit_interval() {
        let q = Quadrature::gauss_legendre(7);
        assert!(q.points.windows(2).all(|w| w[0] < w[1]));
        assert!(q.points[0] > 0.0 && q.points[6] < 1.0);
        assert!((q.points[3] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn composite_rule_sums_to_one() {
        let q = Quadrature::gauss_legendre(3).composite(5);
        assert_eq!(q.len(), 15);
        assert!((q.integrate(0.0, 2.0, |t| t * t) - 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_smooth_bump() {
        let bump = |s: f64| if s <= 0.0 || s >= 1.0 { 0.0 } else { (-1.0 / (s * (1.0 - s))).exp() };
        let coarse = adaptive_integrate(bump, 0.0, 1.0, 1e-15, 1e-13);
        let fine = Quadrature::gauss_legendre(20).composite(200).integrate(0.0, 1.0, bump);
        assert!((coarse - fine).abs() < 1e-14);
        let e = adaptive_integrate(|t| (-t).exp(), 0.0, 3.0, 1e-14, 1e-14);
        assert!((e - (1.0 - (-3.0f64).exp())).abs() < 1e-13);
    }
}
