//! DDPM noise schedule and forward corruption.

use crate::diffusion::DiffusionError;
use ndarray::Array2;

/// Beta/alpha tables governing forward corruption and reverse sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    pub timesteps: usize,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

/// Error-free product of two f64s via fused multiply-add.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Linear beta interpolation with a compensated running product for
/// `alpha_bar`, so long schedules do not drift.
pub fn make_schedule(
    timesteps: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<NoiseSchedule, DiffusionError> {
    if timesteps == 0
        || !(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0)
    {
        return Err(DiffusionError::BadRange {
            detail: format!("T={timesteps}, beta_start={beta_start}, beta_end={beta_end}"),
        });
    }
    let mut beta = Vec::with_capacity(timesteps);
    for t in 0..timesteps {
        let b = if timesteps == 1 {
            beta_start
        } else {
            beta_start + (beta_end - beta_start) * t as f64 / (timesteps - 1) as f64
        };
        beta.push(b);
    }
    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bar = Vec::with_capacity(timesteps);
    let mut hi = 1.0f64;
    let mut lo = 0.0f64;
    for &a in &alpha {
        let (p, e) = two_prod(hi, a);
        lo = lo * a + e;
        hi = p;
        alpha_bar.push(hi + lo);
    }
    Ok(NoiseSchedule { timesteps, beta, alpha, alpha_bar })
}

/// Forward corruption: `x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps`.
pub fn q_sample(
    x0: &Array2<f64>,
    t: usize,
    eps: &Array2<f64>,
    sched: &NoiseSchedule,
) -> Result<Array2<f64>, DiffusionError> {
    if t >= sched.timesteps {
        return Err(DiffusionError::TOutOfRange { t, total: sched.timesteps });
    }
    if x0.dim() != eps.dim() {
        return Err(DiffusionError::ShapeMismatch(format!(
            "x0 {:?} vs eps {:?}",
            x0.dim(),
            eps.dim()
        )));
    }
    let ab = sched.alpha_bar[t];
    Ok(x0 * ab.sqrt() + eps * (1.0 - ab).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_step_schedule() {
        let s = make_schedule(1, 0.1, 0.1).unwrap();
        assert_eq!(s.alpha_bar, vec![0.9]);
        assert_eq!(s.alpha_bar[0], s.alpha[0]);
    }

    #[test]
    fn alpha_bar_strictly_decreasing_long_schedule() {
        let s = make_schedule(1000, 1e-4, 0.02).unwrap();
        assert_eq!(s.alpha_bar[0], s.alpha[0]);
        for t in 1..1000 {
            assert!(s.alpha_bar[t] < s.alpha_bar[t - 1], "not decreasing at {t}");
        }
    }

    #[test]
    fn alpha_bar_matches_sequential_product_oracle() {
        // Oracle: the naive running product, computed independently.
        let s = make_schedule(50, 1e-4, 0.02).unwrap();
        let mut product = 1.0f64;
        for t in 0..50 {
            product *= 1.0 - s.beta[t];
            assert!(
                (s.alpha_bar[t] - product).abs() <= 1e-10,
                "t={t}: {} vs {product}",
                s.alpha_bar[t]
            );
        }
    }

    #[test]
    fn bad_ranges_are_rejected() {
        assert!(make_schedule(0, 1e-4, 0.02).is_err());
        assert!(make_schedule(10, 0.0, 0.02).is_err());
        assert!(make_schedule(10, 0.02, 1e-4).is_err());
        assert!(make_schedule(10, 0.5, 1.0).is_err());
    }

    #[test]
    fn q_sample_degenerate_cases() {
        // Near-zero beta: x_t stays close to x0.
        let s = make_schedule(5, 1e-12, 1e-12).unwrap();
        let x0 = Array2::from_shape_fn((3, 2), |(r, c)| (r + c) as f64);
        let eps = Array2::from_elem((3, 2), 1.0);
        let xt = q_sample(&x0, 4, &eps, &s).unwrap();
        for (a, b) in xt.iter().zip(x0.iter()) {
            assert!((a - b).abs() < 1e-5);
        }
        // Zero noise: exactly the scaled x0.
        let s = make_schedule(10, 1e-2, 0.1).unwrap();
        let zero = Array2::zeros((3, 2));
        let xt = q_sample(&x0, 7, &zero, &s).unwrap();
        let scale = s.alpha_bar[7].sqrt();
        for (a, b) in xt.iter().zip(x0.iter()) {
            assert_eq!(*a, b * scale);
        }
    }

    #[test]
    fn q_sample_shape_and_range_errors() {
        let s = make_schedule(10, 1e-4, 0.02).unwrap();
        let x0 = Array2::zeros((2, 2));
        let eps = Array2::zeros((3, 2));
        assert!(matches!(q_sample(&x0, 0, &eps, &s), Err(DiffusionError::ShapeMismatch(_))));
        let eps = Array2::zeros((2, 2));
        assert!(matches!(q_sample(&x0, 10, &eps, &s), Err(DiffusionError::TOutOfRange { .. })));
    }

    #[test]
    fn marginal_matches_iterative_chain_moments() {
        // The closed-form q_sample marginal must agree with chaining the
        // one-step forward kernel, in mean and variance, over 10k draws.
        let s = make_schedule(10, 0.02, 0.2).unwrap();
        let t = 9usize;
        let x0 = 1.7f64;
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(123);

        let mut chain_sum = 0.0;
        let mut chain_sq = 0.0;
        for _ in 0..n {
            let mut x = x0;
            for step in 0..=t {
                let z: f64 = {
                    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                };
                x = (1.0 - s.beta[step]).sqrt() * x + s.beta[step].sqrt() * z;
            }
            chain_sum += x;
            chain_sq += x * x;
        }
        let chain_mean = chain_sum / n as f64;
        let chain_var = chain_sq / n as f64 - chain_mean * chain_mean;

        let closed_mean = s.alpha_bar[t].sqrt() * x0;
        let closed_var = 1.0 - s.alpha_bar[t];
        assert!(
            (chain_mean - closed_mean).abs() / closed_mean.abs().max(1.0) < 0.02,
            "mean {chain_mean} vs {closed_mean}"
        );
        assert!(
            (chain_var - closed_var).abs() / closed_var < 0.02,
            "var {chain_var} vs {closed_var}"
        );
    }
}
