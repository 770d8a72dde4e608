//! Gaussian units: coupled Gibbs sampling, annealing, and the bit-level
//! internal representation of a single unit.

use corrdiff::gbit::{build_internal_rep, gbit_sweep, sample_internal_g, GbitNetwork};
use corrdiff::RandomStream;

fn moments(xs: &[f64]) -> (f64, f64) {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (
        m,
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64,
    )
}

fn main() -> corrdiff::Result<()> {
    let mut rng = RandomStream::new(11, 0);
    let net = GbitNetwork::new(
        vec![1.0, -1.0],
        vec![1.0, 1.0],
        vec![vec![0.0, 0.5], vec![0.5, 0.0]],
    )?;
    for beta in [1.0, 4.0] {
        let hot = net.annealed(beta)?;
        let mut g = vec![0.0; 2];
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..200_000 {
            gbit_sweep(&hot, &mut g, &mut rng)?;
            a.push(g[0]);
            b.push(g[1]);
        }
        let (ma, va) = moments(&a);
        let (mb, vb) = moments(&b);
        let cov = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / a.len() as f64;
        println!("beta {beta}: means ({ma:+.3}, {mb:+.3}) variances ({va:.3}, {vb:.3}) covariance {cov:+.3}");
    }

    let rep = build_internal_rep(3, 4, 2.0, 1.0)?;
    println!(
        "internal representation: {} bits with weights {:?}",
        rep.n_bits(),
        rep.d
    );
    let xs = sample_internal_g(&rep, 200_000, &mut rng);
    let (m, v) = moments(&xs);
    println!("internal G: mean {m:.3} (target 2), variance {v:.3} (target about 1)");
    Ok(())
}
