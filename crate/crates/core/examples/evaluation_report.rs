// Builds confusion matrices by hand and prints the metrics and comparison
// reports.

use nidsgan::eval::{compare, confusion, metrics, metrics_table, micro_recall};

pub fn run_example() -> nidsgan::Result<()> {
    let classes: Vec<String> = ["normal", "nmap", "satan"].map(String::from).to_vec();
    let truth = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2];
    let before = [0, 0, 0, 0, 0, 0, 0, 2, 1, 1, 2, 2, 2, 2];
    let after = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 0];

    let cm_before = confusion(&before, &truth, &classes)?;
    let cm_after = confusion(&after, &truth, &classes)?;
    print!("{}", cm_before.to_csv());
    let m_before = metrics(&cm_before)?;
    let m_after = metrics(&cm_after)?;
    print!("{}", metrics_table(&m_before));
    assert!((micro_recall(&cm_before) - m_before.accuracy).abs() < 1e-12);

    let report = compare(&m_before, &m_after)?;
    print!("{}", report.to_text(&m_before, &m_after));
    assert_eq!(report.improved, vec!["nmap".to_string()]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nidsgan::Result<()> {
    run_example()
}
