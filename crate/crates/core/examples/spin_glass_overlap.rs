//! Parisi overlap distribution of an Edwards-Anderson instance from plain MCMC.
//!
//! cargo run --release --example spin_glass_overlap -- [L] [beta] [records]

use corrdiff::datastore::{generate_equilibrium_dataset, Protocol};
use corrdiff::eval::{overlap_edges, pair_overlaps, Histogram};
use corrdiff::spin::build_ea_3d;
use corrdiff::RandomStream;

fn main() -> corrdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);
    let beta: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.9);
    let records: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(400);
    let graph = build_ea_3d(l, 5)?;
    let n = graph.n_sites();
    println!("{l}^3 instance: {n} spins, {} bonds", graph.edges().len());
    let ds = generate_equilibrium_dataset(
        &graph,
        beta,
        &Protocol::desk_ramp(n),
        records,
        &RandomStream::new(2, 0),
        "overlap example",
    )?;
    let (qs, sampled) = pair_overlaps(&ds, &mut RandomStream::new(2, 1));
    let hist = Histogram::new(&qs, &overlap_edges(16))?;
    println!(
        "{} pairs{}",
        qs.len(),
        if sampled { " (sampled)" } else { "" }
    );
    println!("q_low,q_high,fraction");
    for (k, mass) in hist.mass.iter().enumerate() {
        println!("{:+.3},{:+.3},{mass:.4}", hist.edges[k], hist.edges[k + 1]);
    }
    Ok(())
}
