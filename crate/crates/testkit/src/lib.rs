//! Independent reference computations for tests.
//!
//! Nothing here depends on `ope-core`. Everything works on plain slices so the
//! library's closed forms can be checked against brute force.

use nalgebra::{DMatrix, DVector};

/// Minimizes a quadratic `f: ℝⁿ → ℝ` by reading off its gradient and Hessian
/// with central differences of step `h` and solving `H x = −g` at the origin.
///
/// Central differences are exact for quadratics, so any `h` works up to
/// rounding; `h = 1` keeps cancellation small.
pub fn minimize_quadratic<F: Fn(&[f64]) -> f64>(f: F, dim: usize, h: f64) -> Option<Vec<f64>> {
    let origin = vec![0.0; dim];
    let f0 = f(&origin);
    let shifted = |pairs: &[(usize, f64)]| {
        let mut x = origin.clone();
        for &(i, d) in pairs {
            x[i] += d;
        }
        f(&x)
    };
    let mut grad = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let fp = shifted(&[(i, h)]);
        let fm = shifted(&[(i, -h)]);
        grad[i] = (fp - fm) / (2.0 * h);
        hess[(i, i)] = (fp + fm - 2.0 * f0) / (h * h);
        for j in 0..i {
            let v = (shifted(&[(i, h), (j, h)]) - shifted(&[(i, h), (j, -h)]) - shifted(&[(i, -h), (j, h)])
                + shifted(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let x = hess.lu().solve(&(-grad))?;
    Some(x.iter().copied().collect())
}

/// Minimizes a quadratic over the affine set `Σ x = 1` by eliminating the last
/// coordinate. Returns the full vector; the caller checks non-negativity.
pub fn minimize_quadratic_on_simplex<F: Fn(&[f64]) -> f64>(f: F, dim: usize, h: f64) -> Option<Vec<f64>> {
    assert!(dim >= 1);
    if dim == 1 {
        return Some(vec![1.0]);
    }
    let lift = |y: &[f64]| {
        let mut x = y.to_vec();
        x.push(1.0 - y.iter().sum::<f64>());
        x
    };
    let y = minimize_quadratic(|y| f(&lift(y)), dim - 1, h)?;
    Some(lift(&y))
}

/// Central-difference gradient.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}

/// Fixed-count MSE of the weighted estimator:
/// squared conditional bias plus conditional variance.
pub fn fixed_path_mse(omega: &[f64], counts: &[usize], p_test: &[f64], means: &[f64], vars: &[f64]) -> f64 {
    let mut bias = 0.0;
    let mut var = 0.0;
    for a in 0..omega.len() {
        bias += (omega[a] - 1.0) * p_test[a] * means[a];
        if omega[a] * p_test[a] != 0.0 && vars[a] > 0.0 {
            var += (omega[a] * p_test[a]).powi(2) * vars[a] / counts[a] as f64;
        }
    }
    bias * bias + var
}

/// Variance of `Σ_i α_i X_i` for the unbiased multi-policy family at one
/// action, summed over independent records:
/// `π_test² Σ_i α_i² E[r²]/π_i − π_test² Σ_i α_i² r̄²`.
pub fn alpha_objective(alpha: &[f64], probs: &[f64], p_test: f64, mean: f64, var: f64) -> f64 {
    alpha
        .iter()
        .zip(probs)
        .map(|(a, p)| p_test * p_test * a * a * ((mean * mean + var) / p - mean * mean))
        .sum()
}

/// Exact mean and variance of `estimator(actions, rewards)` by enumerating
/// every action sequence and reward outcome.
///
/// `record_policies[i]` is the action distribution of record `i`;
/// `supports[τ]` lists `(reward, probability)` for action `τ`.
pub fn enumerate_estimator<E>(record_policies: &[Vec<f64>], supports: &[Vec<(f64, f64)>], estimator: E) -> (f64, f64)
where
    E: Fn(&[usize], &[f64]) -> f64,
{
    let n = record_policies.len();
    let mut actions = vec![0usize; n];
    let mut rewards = vec![0.0; n];
    let mut outcomes: Vec<(f64, f64)> = Vec::new();
    recurse(
        record_policies,
        supports,
        0,
        1.0,
        &mut actions,
        &mut rewards,
        &estimator,
        &mut outcomes,
    );
    let mean: f64 = outcomes.iter().map(|(p, v)| p * v).sum();
    let var: f64 = outcomes.iter().map(|(p, v)| p * (v - mean) * (v - mean)).sum();
    (mean, var)
}

#[allow(clippy::too_many_arguments)]
fn recurse<E>(
    pols: &[Vec<f64>],
    supports: &[Vec<(f64, f64)>],
    i: usize,
    prob: f64,
    actions: &mut Vec<usize>,
    rewards: &mut Vec<f64>,
    estimator: &E,
    out: &mut Vec<(f64, f64)>,
) where
    E: Fn(&[usize], &[f64]) -> f64,
{
    if i == pols.len() {
        out.push((prob, estimator(actions, rewards)));
        return;
    }
    for (a, &pa) in pols[i].iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for &(r, pr) in &supports[a] {
            if pr == 0.0 {
                continue;
            }
            actions[i] = a;
            rewards[i] = r;
            recurse(pols, supports, i + 1, prob * pa * pr, actions, rewards, estimator, out);
        }
    }
}

/// Plain summary statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub se_mean: f64,
    /// Standard error of the sample variance, `sqrt((m4 − s⁴)/n)`.
    pub se_variance: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    assert!(n >= 2, "need at least two samples");
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let variance = m2 / (nf - 1.0);
    Summary {
        n,
        mean,
        variance,
        se_mean: (variance / nf).sqrt(),
        se_variance: ((m4 - variance * variance).max(0.0) / nf).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimizer_finds_known_optimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 3.0).powi(2) + x[0] * x[1];
        let x = minimize_quadratic(f, 2, 1.0).unwrap();
        let g = fd_gradient(f, &x, 1e-5);
        assert!(g.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn simplex_minimizer() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let x = minimize_quadratic_on_simplex(f, 4, 1.0).unwrap();
        assert!(x.iter().all(|v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn enumeration_of_coin() {
        let (m, v) = enumerate_estimator(&[vec![1.0]], &[vec![(0.0, 0.5), (1.0, 0.5)]], |_, r| r[0]);
        assert!((m - 0.5).abs() < 1e-15 && (v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn summary_of_known_sample() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
    }
}
