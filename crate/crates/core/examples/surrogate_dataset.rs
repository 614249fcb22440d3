// Generates NSL-KDD-shaped surrogate records, then parses, cleans and
// relabels them.
//
// ```text
// cargo run --release --example surrogate_dataset -- data/KDDTrain+.txt 40000
// ```

use std::collections::BTreeSet;

use nidsgan::ingest::{
    class_distribution, clean, default_keep, map_labels, parse_nslkdd_str, CleanOptions, LabelMapping, Schema,
};
use nidsgan::synth::{generate, SurrogateConfig};

pub fn run_example() -> nidsgan::Result<()> {
    let text = generate(&SurrogateConfig {
        rows: 3000,
        ..SurrogateConfig::default()
    });
    let raw = parse_nslkdd_str(&text, &Schema::nslkdd())?;
    let (cleaned, report) = clean(&raw, &CleanOptions::default());
    println!(
        "{} rows in, {} dropped, {} sentinel cells zeroed",
        report.rows_in, report.rows_dropped, report.cells_replaced
    );
    let keep: BTreeSet<String> = default_keep();
    let (mapped, labels) = map_labels(&cleaned, &LabelMapping::nslkdd_default(), &keep)?;
    println!("{} rows kept; dropped by class: {:?}", labels.rows_kept, labels.dropped);
    print!("{}", class_distribution(&mapped).to_csv());
    assert_eq!(class_distribution(&mapped).total, mapped.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> nidsgan::Result<()> {
    let mut args = std::env::args().skip(1);
    match args.next() {
        Some(path) => {
            let rows = args.next().map_or(20_000, |n| n.parse().expect("row count"));
            let text = generate(&SurrogateConfig {
                rows,
                ..SurrogateConfig::default()
            });
            if let Some(dir) = std::path::Path::new(&path).parent() {
                std::fs::create_dir_all(dir).map_err(|e| nidsgan::Error::Io {
                    path: dir.into(),
                    source: e,
                })?;
            }
            std::fs::write(&path, text).map_err(|e| nidsgan::Error::Io {
                path: path.clone().into(),
                source: e,
            })?;
            println!("wrote {rows} surrogate records to {path}");
            Ok(())
        }
        None => run_example(),
    }
}
