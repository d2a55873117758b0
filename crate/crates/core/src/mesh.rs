//! Temporal partitions `0 = t_0 < t_1 < … < t_N = T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A partition of `(0, T)` into intervals `J_n = (t_{n-1}, t_n)`, `n = 1..=N`.
///
/// Intervals are indexed from 0 in code, so interval `n` spans
/// `[breakpoints[n], breakpoints[n + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMesh {
    breakpoints: Vec<f64>,
}

impl TemporalMesh {
    /// Builds a mesh from explicit breakpoints.
    pub fn from_breakpoints(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument("a mesh needs at least two breakpoints".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite breakpoint".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "breakpoints not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(TemporalMesh { breakpoints })
    }

    /// `N` equal intervals on `(0, T)`.
    pub fn uniform(t_end: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("number of intervals must be positive".into()));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {t_end}")));
        }
        let mut breakpoints: Vec<f64> = (0..=n).map(|k| k as f64 * t_end / n as f64).collect();
        breakpoints[n] = t_end;
        Self::from_breakpoints(breakpoints)
    }

    /// Random mesh with `tau_n >= c * max_n tau_n`, reproducible from `seed`.
    ///
    /// Interval weights are drawn uniformly from `[c (1 + 1e-9), 1]` and
    /// normalized to sum to `T`; the small margin absorbs rounding in the
    /// cumulative sum so the constraint holds when lengths are recomputed
    /// from the breakpoints.
    pub fn quasi_uniform(t_end: f64, n: usize, c: f64, seed: u64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidArgument(format!("quasi-uniformity constant {c} outside (0, 1]")));
        }
        if c == 1.0 {
            return Self::uniform(t_end, n);
        }
        if n == 0 {
            return Err(Error::InvalidArgument("number of intervals must be positive".into()));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {t_end}")));
        }
        let lo = (c * (1.0 + 1e-9)).min(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut breakpoints = Vec::with_capacity(n + 1);
        breakpoints.push(0.0);
        let mut acc = 0.0;
        for w in &weights[..n - 1] {
            acc += w;
            breakpoints.push(t_end * acc / total);
        }
        breakpoints.push(t_end);
        let mesh = Self::from_breakpoints(breakpoints)?;
        debug_assert!(mesh.satisfies_quasi_uniformity(c));
        Ok(mesh)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Number of intervals `N`.
    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn final_time(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// `(t_{n-1}, t_n)` for 0-based interval `n`.
    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.breakpoints[n], self.breakpoints[n + 1])
    }

    pub fn tau_n(&self, n: usize) -> f64 {
        self.breakpoints[n + 1] - self.breakpoints[n]
    }

    pub fn taus(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Maximal step `tau`.
    pub fn tau(&self) -> f64 {
        self.taus().into_iter().fold(0.0, f64::max)
    }

    /// `min_n tau_n / tau`.
    pub fn quasi_uniformity_constant(&self) -> f64 {
        let taus = self.taus();
        let min = taus.iter().cloned().fold(f64::INFINITY, f64::min);
        min / self.tau()
    }

    pub fn satisfies_quasi_uniformity(&self, c: f64) -> bool {
        let tau = self.tau();
        self.taus().iter().all(|&t| t >= c * tau)
    }

    /// Index of the interval containing `t`, with `[t_{n-1}, t_n)` except the
    /// last interval, which is closed at `T`.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let end = self.final_time();
        if !(0.0..=end).contains(&t) {
            return None;
        }
        if t == end {
            return Some(self.len() - 1);
        }
        // partition_point gives the first breakpoint > t
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        Some(idx - 1)
    }

    /// Mesh of the reversed time `s = T - t`.
    pub fn reversed(&self) -> Self {
        let end = self.final_time();
        let mut b: Vec<f64> = self.breakpoints.iter().rev().map(|t| end - t).collect();
        b[0] = 0.0;
        *b.last_mut().unwrap() = end;
        TemporalMesh { breakpoints: b }
    }

    /// Plain text: one breakpoint per line, 17 significant digits.
    pub fn to_text(&self) -> String {
        self.breakpoints.iter().map(|t| format!("{t:.16e}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let breakpoints = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<f64>().map_err(|e| Error::Parse(format!("breakpoint '{l}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_breakpoints(breakpoints)
    }
}

/// Both sides of `Σ_{m<l1<l2<l3≤n} τ_l1 τ_l2 τ_l3 ≥ C (t_n − t_m)^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBound {
    pub triple_sum: f64,
    pub cube: f64,
    pub ratio: f64,
}

/// Evaluates the triple-product sum over intervals `m+1..=n` (1-based
/// breakpoint indices, so `t_m = breakpoints[m]`) against `(t_n - t_m)^3`.
pub fn product_bound_check(mesh: &TemporalMesh, m: usize, n: usize) -> Result<ProductBound> {
    if n < m + 3 {
        return Err(Error::InvalidArgument(format!("need n >= m + 3, got m = {m}, n = {n}")));
    }
    if n > mesh.len() {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds interval count {}", mesh.len())));
    }
    // elementary symmetric polynomials e1, e2, e3 of the step lengths
    let (mut e1, mut e2, mut e3) = (0.0, 0.0, 0.0);
    for l in m..n {
        let t = mesh.tau_n(l);
        e3 += e2 * t;
        e2 += e1 * t;
        e1 += t;
    }
    let span = mesh.breakpoints()[n] - mesh.breakpoints()[m];
    let cube = span.powi(3);
    Ok(ProductBound {
        triple_sum: e3,
        cube,
        ratio: e3 / cube,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_examples() {
        let m = TemporalMesh::uniform(1.0, 4).unwrap();
        assert_eq!(m.breakpoints(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let one = TemporalMesh::uniform(1.0, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.tau(), 1.0);
        let m8 = TemporalMesh::uniform(2.0, 8).unwrap();
        assert_eq!(m8.tau(), 0.25);
        assert_eq!(m8.quasi_uniformity_constant(), 1.0);
        assert!(TemporalMesh::uniform(1.0, 0).is_err());
        assert!(TemporalMesh::uniform(0.0, 3).is_err());
        assert!(TemporalMesh::uniform(-1.0, 3).is_err());
    }

    #[test]
    fn quasi_uniform_examples() {
        let m = TemporalMesh::quasi_uniform(1.0, 4, 1.0, 0).unwrap();
        assert_eq!(m, TemporalMesh::uniform(1.0, 4).unwrap());

        let m = TemporalMesh::quasi_uniform(1.0, 16, 0.5, 7).unwrap();
        let taus = m.taus();
        let max = taus.iter().cloned().fold(0.0, f64::max);
        assert!(taus.iter().all(|&t| t >= 0.5 * max));
        assert_eq!(m.final_time(), 1.0);

        let m = TemporalMesh::quasi_uniform(1.0, 2, 0.5, 1).unwrap();
        let ratio = m.tau_n(0) / m.tau_n(1);
        assert!((0.5..=2.0).contains(&ratio));

        assert_eq!(
            TemporalMesh::quasi_uniform(1.0, 16, 0.5, 7).unwrap(),
            TemporalMesh::quasi_uniform(1.0, 16, 0.5, 7).unwrap()
        );
        assert!(TemporalMesh::quasi_uniform(1.0, 4, 0.0, 0).is_err());
        assert!(TemporalMesh::quasi_uniform(1.0, 4, 1.5, 0).is_err());
    }

    fn brute_triple(mesh: &TemporalMesh, m: usize, n: usize) -> f64 {
        let mut s = 0.0;
        for a in m..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    s += mesh.tau_n(a) * mesh.tau_n(b) * mesh.tau_n(c);
                }
            }
        }
        s
    }

    #[test]
    fn product_bound_examples() {
        let h = 0.125;
        let mesh = TemporalMesh::uniform(1.0, 8).unwrap();
        let pb = product_bound_check(&mesh, 2, 5).unwrap();
        assert!((pb.triple_sum - h * h * h).abs() < 1e-15);
        assert!((pb.cube - 27.0 * h * h * h).abs() < 1e-15);
        assert!((pb.ratio - 1.0 / 27.0).abs() < 1e-13);

        for k in 3..=8 {
            let pb = product_bound_check(&mesh, 0, k).unwrap();
            let binom = (k * (k - 1) * (k - 2) / 6) as f64;
            assert!((pb.triple_sum - binom * h.powi(3)).abs() < 1e-14);
            assert!((pb.cube - (k as f64 * h).powi(3)).abs() < 1e-14);
        }

        let q = TemporalMesh::quasi_uniform(1.0, 10, 0.3, 4).unwrap();
        let pb = product_bound_check(&q, 4, 7).unwrap();
        assert!((pb.triple_sum - q.tau_n(4) * q.tau_n(5) * q.tau_n(6)).abs() < 1e-16);

        assert!(product_bound_check(&mesh, 2, 4).is_err());
    }

    #[test]
    fn product_sum_matches_brute_force() {
        let q = TemporalMesh::quasi_uniform(2.0, 12, 0.4, 11).unwrap();
        for m in 0..6 {
            for n in m + 3..=12 {
                let pb = product_bound_check(&q, m, n).unwrap();
                let brute = brute_triple(&q, m, n);
                assert!((pb.triple_sum - brute).abs() < 1e-14 * brute.max(1.0));
            }
        }
    }

    #[test]
    fn locate_uses_half_open_intervals() {
        let m = TemporalMesh::uniform(1.0, 4).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.25), Some(1));
        assert_eq!(m.locate(0.3), Some(1));
        assert_eq!(m.locate(1.0), Some(3));
        assert_eq!(m.locate(1.1), None);
        assert_eq!(m.locate(-0.1), None);
    }

    #[test]
    fn refinement_contains_coarse_breakpoints() {
        for n in 1..20 {
            let coarse = TemporalMesh::uniform(3.0, n).unwrap();
            let fine = TemporalMesh::uniform(3.0, 2 * n).unwrap();
            for (k, t) in coarse.breakpoints().iter().enumerate() {
                assert!((fine.breakpoints()[2 * k] - t).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let q = TemporalMesh::quasi_uniform(1.7, 9, 0.5, 3).unwrap();
        let back = TemporalMesh::from_text(&q.to_text()).unwrap();
        assert_eq!(q, back);
        assert!(TemporalMesh::from_text("0\n0.5\n0.4\n").is_err());
        assert!(TemporalMesh::from_text("0\nabc\n").is_err());
    }

    #[test]
    fn reversal_is_an_involution() {
        let q = TemporalMesh::quasi_uniform(1.0, 7, 0.5, 2).unwrap();
        let rr = q.reversed().reversed();
        for (a, b) in q.breakpoints().iter().zip(rr.breakpoints()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((q.reversed().tau_n(0) - q.tau_n(6)).abs() < 1e-15);
    }
}
