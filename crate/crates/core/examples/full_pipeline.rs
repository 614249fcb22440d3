// Runs every pipeline step on a small surrogate file in a scratch
// directory, or on a given config.
//
// ```text
// cargo run --release --example full_pipeline -- configs/pipeline.toml
// ```

use std::path::Path;

use nidsgan::pipeline::Pipeline;
use nidsgan::synth::{generate, SurrogateConfig};

const SMALL: &str = r#"
seed = 9

[paths]
dataset = "data.txt"
out = "out"

[gbt]
n_rounds = 15
max_depth = 4

[gan]
latent_dim = 8
generator_hidden = [16, 32, 32, 16]
discriminator_hidden = [32, 16, 8]
epochs = 20
"#;

fn report(p: &Pipeline) -> nidsgan::Result<()> {
    let r = p.all()?;
    println!("accuracy {:.6} -> {:.6}", r.accuracy_before, r.accuracy_after);
    for d in &r.classes {
        println!("  {:<10} recall {:.4} -> {:.4}", d.class, d.before.recall, d.after.recall);
    }
    println!("artifacts in {}", p.out_dir().display());
    Ok(())
}

pub fn run_example() -> nidsgan::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| nidsgan::Error::invalid(e.to_string()))?;
    let io = |path: &Path, e: std::io::Error| nidsgan::Error::Io {
        path: path.into(),
        source: e,
    };
    let data = dir.path().join("data.txt");
    let text = generate(&SurrogateConfig {
        rows: 1500,
        ..SurrogateConfig::default()
    });
    std::fs::write(&data, text).map_err(|e| io(&data, e))?;
    let cfg = dir.path().join("pipeline.toml");
    std::fs::write(&cfg, SMALL).map_err(|e| io(&cfg, e))?;

    let p = Pipeline::from_file(&cfg, None, None)?;
    report(&p)?;
    for name in ["comparison.json", "metrics-augmented.txt", "anomaly-ranking.csv", "feature-summaries.csv"] {
        assert!(p.artifact(name).exists(), "{name} missing");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> nidsgan::Result<()> {
    match std::env::args().nth(1) {
        Some(cfg) => report(&Pipeline::from_file(Path::new(&cfg), None, None)?),
        None => run_example(),
    }
}
