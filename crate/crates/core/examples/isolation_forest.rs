// Scores a Gaussian cloud with one planted outlier.

use ndarray::{concatenate, Axis, array};
use nidsgan::isoforest::{decision_value, fit, score_matrix};
use nidsgan::preprocess::FeatureMatrix;
use nidsgan::synth::gaussian_toy;

pub fn run_example() -> nidsgan::Result<()> {
    let cloud = gaussian_toy(300, &[0.5, 0.5], 0.05, 11);
    let values = concatenate(Axis(0), &[cloud.view(), array![[0.98, 0.02]].view()])
        .map_err(|e| nidsgan::Error::invalid(e.to_string()))?;
    let n = values.nrows();
    let x = FeatureMatrix::new(
        values,
        vec!["a".into(), "b".into()],
        vec![0; n],
        vec!["all".into()],
    )?;
    let forest = fit(&x, 100, 256, 11)?;
    let scores = score_matrix(&forest, &x)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    for &i in order.iter().take(3) {
        println!(
            "row {i:>3}  score {:.4}  decision {:+.4}",
            scores[i],
            decision_value(scores[i])
        );
    }
    assert_eq!(order[0], n - 1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nidsgan::Result<()> {
    run_example()
}
