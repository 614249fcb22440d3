// Fits a small GAN to a two-feature Gaussian and compares sample moments.

use ndarray::{Array2, Axis};
use nidsgan::gan::{synthesize, train_gan_scaled, GanConfig};
use nidsgan::preprocess::FeatureRole;
use nidsgan::synth::gaussian_toy;

fn column_means(x: &Array2<f64>) -> Vec<f64> {
    x.mean_axis(Axis(0)).expect("rows").to_vec()
}

pub fn run_example() -> nidsgan::Result<()> {
    let real = gaussian_toy(128, &[0.3, 0.7], 0.05, 5);
    let cfg = GanConfig {
        latent_dim: 8,
        generator_hidden: vec![16, 32, 32, 16],
        discriminator_hidden: vec![32, 16, 8],
        epochs: 400,
        batch_size: 32,
        seed: 5,
        ..GanConfig::default()
    };
    let model = train_gan_scaled(&real, &cfg)?;
    let last = model.trace.epochs.last().expect("trained");
    println!("final d_loss {:.4} g_loss {:.4}", last.d_loss, last.g_loss);
    let fake = synthesize(&model, 512, 6, &[FeatureRole::Continuous; 2])?;
    let (rm, fm) = (column_means(&real), column_means(&fake));
    for (j, (r, f)) in rm.iter().zip(&fm).enumerate() {
        println!("feature {j}: real mean {r:.3}, synthetic mean {f:.3}");
    }
    assert!(fake.iter().all(|v| (0.0..=1.0).contains(v)));
    Ok(())
}

#[allow(dead_code)]
fn main() -> nidsgan::Result<()> {
    run_example()
}
