use serde::{Deserialize, Serialize};

use super::MmdError;
use crate::stats::{median, ExactSum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// exp(−‖u − v‖² / (2σ²))
    Rbf { sigma: f64 },
    /// ⟨u, v⟩
    Linear,
}

impl Kernel {
    pub fn rbf(sigma: f64) -> Result<Self, MmdError> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(Kernel::Rbf { sigma })
        } else {
            Err(MmdError::InvalidArgument(format!("RBF bandwidth must be positive, got {sigma}")))
        }
    }

    /// RBF kernel with the median-heuristic bandwidth of `points`.
    pub fn rbf_median(points: &[&[f64]]) -> Self {
        Kernel::Rbf { sigma: median_bandwidth(points) }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64, MmdError> {
        if u.len() != v.len() {
            return Err(MmdError::ShapeError(u.len(), v.len()));
        }
        Ok(match *self {
            Kernel::Linear => exact_dot(u, v),
            Kernel::Rbf { sigma } => (-sq_dist(u, v) / (2.0 * sigma * sigma)).exp(),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Rbf { .. } => "rbf",
            Kernel::Linear => "linear",
        }
    }
}

fn exact_dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).collect::<ExactSum>().value()
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).collect::<ExactSum>().value()
}

/// Median of pairwise Euclidean distances among `points` (each unordered pair
/// once). Falls back to 1.0 when there are fewer than two points or the median is 0.
pub fn median_bandwidth(points: &[&[f64]]) -> f64 {
    let mut d = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(sq_dist(points[i], points[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let m = median(&d);
    if m > 0.0 && m.is_finite() {
        m
    } else {
        1.0
    }
}

/// Kernel matrix `K[i][j] = k(xs[i], ys[j])`.
pub fn gram(xs: &[&[f64]], ys: &[&[f64]], kernel: &Kernel) -> Result<Vec<Vec<f64>>, MmdError> {
    xs.iter().map(|x| ys.iter().map(|y| kernel.eval(x, y)).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// V-statistic: includes the diagonal, always ≥ 0, needs ≥ 1 sample per side.
    BiasedV,
    /// U-statistic: excludes the diagonal, can be negative, needs ≥ 2 samples per side.
    UnbiasedU,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::BiasedV => "biased_v",
            Estimator::UnbiasedU => "unbiased_u",
        }
    }

    fn min_samples(self) -> usize {
        match self {
            Estimator::BiasedV => 1,
            Estimator::UnbiasedU => 2,
        }
    }
}

/// Mean of a within-sample gram, optionally without the diagonal.
fn within_mean(xs: &[&[f64]], kernel: &Kernel, skip_diag: bool) -> Result<f64, MmdError> {
    let mut s = ExactSum::new();
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in xs.iter().enumerate() {
            if !(skip_diag && i == j) {
                s.add(kernel.eval(x, y)?);
            }
        }
    }
    let n = xs.len() as f64;
    let count = if skip_diag { n * (n - 1.0) } else { n * n };
    Ok(s.value() / count)
}

/// Squared MMD between samples `xs` and `ys`.
///
/// Kernel sums are accumulated exactly, so the result does not depend on
/// sample order and identical samples give exactly 0 under the V-statistic.
pub fn mmd2(xs: &[&[f64]], ys: &[&[f64]], kernel: &Kernel, estimator: Estimator) -> Result<f64, MmdError> {
    let need = estimator.min_samples();
    let got = xs.len().min(ys.len());
    if got < need {
        return Err(MmdError::TooFewSamples { estimator: estimator.name(), needed: need, got });
    }
    let skip = estimator == Estimator::UnbiasedU;
    let kxx = within_mean(xs, kernel, skip)?;
    let kyy = within_mean(ys, kernel, skip)?;
    let mut cross = ExactSum::new();
    for x in xs {
        for y in ys {
            cross.add(kernel.eval(x, y)?);
        }
    }
    let kxy = cross.value() / (xs.len() as f64 * ys.len() as f64);
    let mut total = ExactSum::new();
    for t in [kxx, kyy, -2.0 * kxy] {
        total.add(t);
    }
    Ok(total.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdEstimate {
    pub mmd2: f64,
    /// sqrt(max(mmd2, 0)).
    pub value: f64,
    /// True when a negative `mmd2` was clamped to 0.
    pub clamped: bool,
    pub estimator: Estimator,
    pub kernel: Kernel,
    pub n_x: usize,
    pub n_y: usize,
}

pub fn mmd(xs: &[&[f64]], ys: &[&[f64]], kernel: &Kernel, estimator: Estimator) -> Result<MmdEstimate, MmdError> {
    let m2 = mmd2(xs, ys, kernel, estimator)?;
    Ok(MmdEstimate {
        mmd2: m2,
        value: m2.max(0.0).sqrt(),
        clamped: m2 < 0.0,
        estimator,
        kernel: *kernel,
        n_x: xs.len(),
        n_y: ys.len(),
    })
}

/// Upper bound on the gap between training-prompt and test-prompt risk:
/// `C · MMD`, where `C` bounds the loss in the kernel's function class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscBound {
    pub c: f64,
    pub mmd: f64,
    pub bound: f64,
}

pub fn disc_upper_bound(estimate: &MmdEstimate, c: f64) -> Result<DiscBound, MmdError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(MmdError::InvalidArgument(format!("bound constant must be positive, got {c}")));
    }
    Ok(DiscBound { c, mmd: estimate.value, bound: c * estimate.value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|x| x.as_slice()).collect()
    }

    /// Plain triple loop over the defining sums.
    fn oracle_mmd2(xs: &[Vec<f64>], ys: &[Vec<f64>], k: impl Fn(&[f64], &[f64]) -> f64, unbiased: bool) -> f64 {
        let (n, m) = (xs.len() as f64, ys.len() as f64);
        let mut a = 0.0;
        let mut b = 0.0;
        let mut c = 0.0;
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in xs.iter().enumerate() {
                if !(unbiased && i == j) {
                    a += k(x, y);
                }
            }
        }
        for (i, x) in ys.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                if !(unbiased && i == j) {
                    b += k(x, y);
                }
            }
        }
        for x in xs {
            for y in ys {
                c += k(x, y);
            }
        }
        if unbiased {
            a / (n * (n - 1.0)) + b / (m * (m - 1.0)) - 2.0 * c / (n * m)
        } else {
            a / (n * n) + b / (m * m) - 2.0 * c / (n * m)
        }
    }

    fn rbf_oracle(sigma: f64) -> impl Fn(&[f64], &[f64]) -> f64 {
        move |u, v| {
            let d: f64 = u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
            (-d / (2.0 * sigma * sigma)).exp()
        }
    }

    fn sample(n: usize, shift: f64, seed: u64) -> Vec<Vec<f64>> {
        use rand::Rng;
        let mut rng = crate::rng::stream("mmd-test", seed);
        (0..n).map(|_| (0..3).map(|_| rng.gen::<f64>() + shift).collect()).collect()
    }

    #[test]
    fn singleton_rbf_closed_form() {
        let x = vec![vec![0.0]];
        let y = vec![vec![1.0]];
        let k = Kernel::rbf(1.0).unwrap();
        let m2 = mmd2(&refs(&x), &refs(&y), &k, Estimator::BiasedV).unwrap();
        assert!((m2 - (2.0 - 2.0 * (-0.5f64).exp())).abs() < 1e-15);
        let m2 = mmd2(&refs(&x), &refs(&y), &Kernel::rbf(1.0 / 2f64.sqrt()).unwrap(), Estimator::BiasedV).unwrap();
        assert!((m2 - 1.264_241_117_657_115_4).abs() < 1e-15);
    }

    #[test]
    fn matches_triple_loop_oracle() {
        let xs = sample(7, 0.0, 1);
        let ys = sample(5, 0.3, 2);
        let k = Kernel::rbf(0.8).unwrap();
        for (est, unbiased) in [(Estimator::BiasedV, false), (Estimator::UnbiasedU, true)] {
            let got = mmd2(&refs(&xs), &refs(&ys), &k, est).unwrap();
            let want = oracle_mmd2(&xs, &ys, rbf_oracle(0.8), unbiased);
            assert!((got - want).abs() < 1e-12, "{est:?}: {got} vs {want}");
        }
        let got = mmd2(&refs(&xs), &refs(&ys), &Kernel::Linear, Estimator::BiasedV).unwrap();
        let want = oracle_mmd2(&xs, &ys, |u, v| u.iter().zip(v).map(|(a, b)| a * b).sum(), false);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn linear_v_statistic_is_squared_mean_gap() {
        let xs = sample(6, 0.0, 3);
        let ys = sample(4, 1.0, 4);
        let mean = |s: &[Vec<f64>]| -> Vec<f64> {
            (0..3).map(|d| s.iter().map(|v| v[d]).sum::<f64>() / s.len() as f64).collect()
        };
        let (mx, my) = (mean(&xs), mean(&ys));
        let want: f64 = mx.iter().zip(&my).map(|(a, b)| (a - b).powi(2)).sum();
        let got = mmd2(&refs(&xs), &refs(&ys), &Kernel::Linear, Estimator::BiasedV).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn rbf_gram_is_positive_semidefinite() {
        let xs = sample(12, 0.0, 5);
        let r = refs(&xs);
        let g = gram(&r, &r, &Kernel::rbf_median(&r)).unwrap();
        let m = DMatrix::from_fn(12, 12, |i, j| g[i][j]);
        let eig = m.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10), "{:?}", eig.eigenvalues);
    }

    #[test]
    fn identical_samples_give_exact_zero() {
        let xs = sample(9, 0.0, 6);
        let e = mmd(&refs(&xs), &refs(&xs), &Kernel::rbf(0.5).unwrap(), Estimator::BiasedV).unwrap();
        assert_eq!(e.mmd2, 0.0);
        assert_eq!(e.value, 0.0);
        assert!(!e.clamped);
    }

    #[test]
    fn unbiased_can_go_negative_and_is_clamped() {
        let mut found = false;
        for seed in 0..50 {
            let xs = sample(3, 0.0, 100 + seed);
            let ys = sample(3, 0.0, 200 + seed);
            let e = mmd(&refs(&xs), &refs(&ys), &Kernel::rbf(1.0).unwrap(), Estimator::UnbiasedU).unwrap();
            if e.mmd2 < 0.0 {
                assert!(e.clamped);
                assert_eq!(e.value, 0.0);
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn errors() {
        let one = vec![vec![0.0, 1.0]];
        let two = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(matches!(
            mmd2(&refs(&one), &refs(&two), &Kernel::Linear, Estimator::UnbiasedU),
            Err(MmdError::TooFewSamples { .. })
        ));
        assert!(matches!(mmd2(&[], &refs(&two), &Kernel::Linear, Estimator::BiasedV), Err(MmdError::TooFewSamples { .. })));
        assert!(matches!(Kernel::Linear.eval(&[1.0], &[1.0, 2.0]), Err(MmdError::ShapeError(1, 2))));
        assert!(Kernel::rbf(0.0).is_err());
        let e = mmd(&refs(&one), &refs(&two), &Kernel::Linear, Estimator::BiasedV).unwrap();
        assert!(disc_upper_bound(&e, 0.0).is_err());
        assert!(disc_upper_bound(&e, -1.0).is_err());
        assert!((disc_upper_bound(&e, 2.0).unwrap().bound - 2.0 * e.value).abs() < 1e-15);
    }

    #[test]
    fn median_bandwidth_fallbacks() {
        let p = [0.0, 0.0];
        assert_eq!(median_bandwidth(&[&p]), 1.0);
        assert_eq!(median_bandwidth(&[&p, &p, &p]), 1.0);
        assert_eq!(median_bandwidth(&[&[0.0][..], &[3.0][..]]), 3.0);
    }

    proptest! {
        #[test]
        fn order_independent(seed in 0u64..1000, n in 2usize..8, m in 2usize..8) {
            let xs = sample(n, 0.0, seed);
            let ys = sample(m, 0.2, seed + 7);
            let mut xr = xs.clone();
            xr.reverse();
            let mut yr = ys.clone();
            yr.rotate_left(1);
            let k = Kernel::rbf(0.7).unwrap();
            for est in [Estimator::BiasedV, Estimator::UnbiasedU] {
                let a = mmd2(&refs(&xs), &refs(&ys), &k, est).unwrap();
                let b = mmd2(&refs(&xr), &refs(&yr), &k, est).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn v_statistic_non_negative(seed in 0u64..1000, n in 1usize..6, m in 1usize..6) {
            let xs = sample(n, 0.0, seed);
            let ys = sample(m, 0.1, seed + 3);
            let v = mmd2(&refs(&xs), &refs(&ys), &Kernel::rbf(0.5).unwrap(), Estimator::BiasedV).unwrap();
            prop_assert!(v >= -1e-15);
        }
    }
}
