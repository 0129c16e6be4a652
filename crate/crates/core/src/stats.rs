//! Small statistics toolkit: exact summation, moments, rank correlation and
//! goodness-of-fit tests.

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

/// Order-independent floating-point accumulator.
///
/// Keeps a list of non-overlapping partials (Shewchuk's algorithm) so that the
/// final value is the correctly rounded sum of all inputs, whatever order they
/// were added or merged in.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction on the last partial.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn exact_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    xs.into_iter().collect::<ExactSum>().value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    exact_sum(xs.iter().copied()) / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for a single value.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss = exact_sum(xs.iter().map(|x| (x - m) * (x - m)));
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Average (fractional) ranks, 1-based; ties share the mean of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy = exact_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = exact_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = exact_sum(y.iter().map(|b| (b - my) * (b - my)));
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Spearman rank correlation with a two-sided p-value.
///
/// For n ≤ 8 the p-value is exact, by enumerating all permutations of the
/// second sample's ranks. Larger samples use the t approximation with n − 2
/// degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Correlation {
    assert_eq!(x.len(), y.len(), "spearman: length mismatch");
    let n = x.len();
    if n < 3 {
        return Correlation { rho: f64::NAN, p_value: 1.0 };
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let rho = pearson(&rx, &ry);
    if rho.is_nan() {
        return Correlation { rho, p_value: 1.0 };
    }
    let p_value = if n <= 8 {
        let mut perm = ry.clone();
        let mut hits = 0usize;
        let mut total = 0usize;
        permute(&mut perm, 0, &mut |p| {
            total += 1;
            let r = pearson(&rx, p);
            if r.abs() >= rho.abs() - 1e-12 {
                hits += 1;
            }
        });
        hits as f64 / total as f64
    } else if rho.abs() >= 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Correlation { rho, p_value }
}

fn permute(v: &mut Vec<f64>, k: usize, f: &mut dyn FnMut(&[f64])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square goodness-of-fit against the uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquareTest {
    assert!(counts.len() >= 2, "need at least two categories");
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic = exact_sum(counts.iter().map(|&c| {
        let d = c as f64 - expected;
        d * d / expected
    }));
    let dof = counts.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    ChiSquareTest { statistic, dof, p_value: 1.0 - dist.cdf(statistic) }
}

/// Round to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().expect("formatted float parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_sum_beats_naive_cancellation() {
        let xs = [1e100, 1.0, -1e100, 1e-3];
        assert_eq!(exact_sum(xs), 1.001);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 1.001);
    }

    #[test]
    fn std_of_reference_values() {
        let xs = [0.8, 0.9, 1.0];
        assert!((mean(&xs) - 0.9).abs() < 1e-15);
        assert!((sample_std(&xs) - 0.1).abs() < 1e-15);
        assert_eq!(sample_std(&[0.4]), 0.0);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn spearman_exact_small_sample() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [5.0, 4.0, 3.0, 2.0, 1.0];
        let c = spearman(&x, &y);
        assert!((c.rho + 1.0).abs() < 1e-12);
        // 2 of 120 permutations reach |rho| = 1.
        assert!((c.p_value - 2.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_large_sample_matches_reference() {
        // scipy.stats.spearmanr(range(10), [2,1,4,3,6,5,8,7,10,9]) -> rho 0.93939..., p 5.484052998513666e-05
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0, 10.0, 9.0];
        let c = spearman(&x, &y);
        assert!((c.rho - 0.939_393_939_393_939_4).abs() < 1e-12);
        assert!((c.p_value - 5.484_052_998_513_666e-5).abs() < 1e-9, "{}", c.p_value);
    }

    #[test]
    fn chi_square_reference() {
        // scipy.stats.chisquare([10, 20, 30]) -> statistic 10.0, p 0.006737946999085467
        let t = chi_square_uniform(&[10, 20, 30]);
        assert!((t.statistic - 10.0).abs() < 1e-12);
        assert!((t.p_value - 0.006_737_946_999_085_467).abs() < 1e-9);
    }

    #[test]
    fn round_sig_twelve_digits() {
        assert_eq!(round_sig(2.0 / 3.0, 12), 0.666666666667);
        assert_eq!(round_sig(0.0, 12), 0.0);
    }

    proptest! {
        #[test]
        fn exact_sum_is_order_independent(mut xs in prop::collection::vec(-1e6f64..1e6, 0..64), seed in any::<u64>()) {
            let a = exact_sum(xs.iter().copied());
            use rand::seq::SliceRandom;
            xs.shuffle(&mut crate::rng::stream("test", seed));
            let b = exact_sum(xs.iter().copied());
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
