// Per-class quartiles and shared-edge histograms for a toy matrix.

use ndarray::array;
use nidsgan::analysis::{feature_summaries, histograms_csv, summaries_csv};
use nidsgan::preprocess::FeatureMatrix;

pub fn run_example() -> nidsgan::Result<()> {
    let x = FeatureMatrix::new(
        array![[1.0, 0.0], [2.0, 5.0], [4.0, 1.0], [7.0, 2.0], [11.0, 0.0], [3.0, 9.0], [3.5, 8.0]],
        vec!["duration".into(), "src_bytes".into()],
        vec![0, 0, 0, 0, 0, 1, 1],
        vec!["normal".into(), "smurf".into(), "nmap".into()],
    )?;
    let s = feature_summaries(&x, &["duration", "src_bytes"], &["normal", "smurf", "nmap"])?;
    print!("{}", summaries_csv(&s));
    print!("{}", histograms_csv(&s));
    let d = &s[0];
    assert_eq!((d.q1, d.median, d.q3), (2.0, 4.0, 7.0));
    assert!((d.variance - 13.2).abs() < 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nidsgan::Result<()> {
    run_example()
}
