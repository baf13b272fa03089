//! Recovers a hidden rotation between two point clouds with the orthogonal
//! and the unconstrained linear fit, with and without noise.
//!
//! ```bash
//! cargo run --example procrustes -- [dim]
//! ```

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use cvdp::alignment::{fit_linear, fit_orthogonal, frobenius_residual};
use cvdp::seed;

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let n = 4 * d;
    let mut rng = seed::rng(1, &[]);
    let q = gaussian(d, d, &mut rng).qr().q();
    let x = gaussian(d, n, &mut rng);

    for sigma in [0.0, 0.01, 0.1] {
        let y = &q * &x + gaussian(d, n, &mut rng) * sigma;
        let orth = fit_orthogonal(&x, &y)?;
        let lin = fit_linear(&x, &y)?;
        println!("noise {sigma}:");
        for (name, t) in [("orthogonal", &orth.matrix), ("linear", &lin.matrix)] {
            let ortho_err = (t.transpose() * t - DMatrix::<f64>::identity(d, d)).amax();
            println!(
                "  {name:>10}: |T - Q| = {:.2e}, residual {:.4}, |T'T - I| = {:.1e}",
                (t - &q).norm(),
                frobenius_residual(t, &x, &y),
                ortho_err
            );
        }
    }
    Ok(())
}
