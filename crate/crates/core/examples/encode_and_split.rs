// Encodes cleaned records into a feature matrix, splits it by class and
// checks the encoding inverts.

use std::collections::BTreeSet;

use nidsgan::ingest::{clean, default_keep, map_labels, parse_nslkdd_str, CleanOptions, LabelMapping, Schema};
use nidsgan::preprocess::{fit_encoders, inverse_transform, stratified_split, transform, EncoderPlan, SplitRatios};
use nidsgan::synth::{generate, SurrogateConfig};

pub fn run_example() -> nidsgan::Result<()> {
    let text = generate(&SurrogateConfig {
        rows: 2000,
        ..SurrogateConfig::default()
    });
    let schema = Schema::nslkdd();
    let (cleaned, _) = clean(&parse_nslkdd_str(&text, &schema)?, &CleanOptions::default());
    let keep: BTreeSet<String> = default_keep();
    let (ds, _) = map_labels(&cleaned, &LabelMapping::nslkdd_default(), &keep)?;

    let enc = fit_encoders(&ds, &EncoderPlan::nslkdd(&schema))?;
    let m = transform(&enc, &ds)?;
    println!("{} rows x {} features, {} classes", m.n_rows(), m.n_features(), m.n_classes());

    let split = stratified_split(&m, SplitRatios::default(), 1)?;
    println!("train {} / val {} / test {}", split.train.len(), split.val.len(), split.test.len());
    for (c, name) in m.class_names.iter().enumerate() {
        let count = |ids: &[usize]| ids.iter().filter(|&&i| m.class_ids[i] == c).count();
        println!(
            "  {name:<10} {:>5} {:>5} {:>5}",
            count(&split.train),
            count(&split.val),
            count(&split.test)
        );
    }

    let back = inverse_transform(&enc, &m)?;
    let again = transform(&enc, &back)?;
    let worst = (&again.values - &m.values).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    println!("round-trip max abs difference {worst:e}");
    assert!(worst < 1e-9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nidsgan::Result<()> {
    run_example()
}
