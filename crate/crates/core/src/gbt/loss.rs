//! Softmax cross-entropy and its per-class derivatives.

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln softmax(scores)[label]`, computed via log-sum-exp.
pub fn softmax_loss(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}

/// Gradient `p_c - 1{c = label}` and diagonal hessian `p_c (1 - p_c)` of the
/// loss with respect to each class score.
pub fn softmax_grad_hess(scores: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(scores);
    let g = p
        .iter()
        .enumerate()
        .map(|(c, &pc)| pc - if c == label { 1.0 } else { 0.0 })
        .collect();
    let h = p.iter().map(|&pc| pc * (1.0 - pc)).collect();
    (g, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn grad_hess_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let k = 4;
            let scores: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
            let label = rng.random_range(0..k);
            let (g, h) = softmax_grad_hess(&scores, label);
            for c in 0..k {
                let shifted = |d: f64| {
                    let mut s = scores.clone();
                    s[c] += d;
                    softmax_loss(&s, label)
                };
                let fd_g = (shifted(1e-5) - shifted(-1e-5)) / 2e-5;
                let e = 1e-3;
                let fd_h = (shifted(e) - 2.0 * shifted(0.0) + shifted(-e)) / (e * e);
                assert!((g[c] - fd_g).abs() / g[c].abs().max(1e-12) < 1e-5, "g {} vs {}", g[c], fd_g);
                assert!((h[c] - fd_h).abs() / h[c].abs().max(1e-12) < 1e-5, "h {} vs {}", h[c], fd_h);
            }
        }
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, 1001.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
