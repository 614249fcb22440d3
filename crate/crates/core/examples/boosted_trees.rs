// Trains the boosted-tree classifier on surrogate traffic and prints the
// per-class report.

use std::collections::BTreeSet;

use nidsgan::eval::{confusion, metrics, metrics_table};
use nidsgan::gbt::{feature_importance, predict, train, GbtConfig};
use nidsgan::ingest::{clean, default_keep, map_labels, parse_nslkdd_str, CleanOptions, LabelMapping, Schema};
use nidsgan::preprocess::{fit_encoders, stratified_split, transform, EncoderPlan, SplitRatios};
use nidsgan::synth::{generate, SurrogateConfig};

pub fn run_example() -> nidsgan::Result<()> {
    let text = generate(&SurrogateConfig {
        rows: 3000,
        ..SurrogateConfig::default()
    });
    let schema = Schema::nslkdd();
    let (cleaned, _) = clean(&parse_nslkdd_str(&text, &schema)?, &CleanOptions::default());
    let keep: BTreeSet<String> = default_keep();
    let (ds, _) = map_labels(&cleaned, &LabelMapping::nslkdd_default(), &keep)?;
    let m = transform(&fit_encoders(&ds, &EncoderPlan::nslkdd(&schema))?, &ds)?;
    let split = stratified_split(&m, SplitRatios::default(), 3)?;
    let (train_set, test) = (m.select_rows(&split.train), m.select_rows(&split.test));

    let cfg = GbtConfig {
        n_rounds: 25,
        max_depth: 4,
        seed: 3,
        ..GbtConfig::default()
    };
    let model = train(&train_set, &cfg)?;
    println!(
        "loss {:.4} -> {:.4}",
        model.loss_trace.first().copied().unwrap_or(f64::NAN),
        model.loss_trace.last().copied().unwrap_or(f64::NAN)
    );

    let cm = confusion(&predict(&model, &test)?, &test.class_ids, &test.class_names)?;
    let report = metrics(&cm)?;
    print!("{}", metrics_table(&report));
    assert!(report.accuracy > 0.9);

    println!("top features by gain:");
    for (name, gain) in feature_importance(&model).top(5) {
        println!("  {name:<28} {gain:.2}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> nidsgan::Result<()> {
    run_example()
}
