//! Generates an equilibrium dataset, writes it with its sidecar and reads it back.
//!
//! cargo run --release --example equilibrium_dataset -- [L] [records] [out.bin]

use std::path::PathBuf;
use std::time::Instant;

use corrdiff::datastore::{generate_equilibrium_dataset, sidecar_path, Protocol, SpinDataset};
use corrdiff::eval::{energies, magnetizations, mean_se};
use corrdiff::spin::build_ferro_2d;
use corrdiff::RandomStream;

fn main() -> corrdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);
    let count: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ferro2d.bin"));

    let graph = build_ferro_2d(l, 1.0)?;
    let beta = (1.0 + 2f64.sqrt()).ln() / 2.0;
    let protocol = Protocol::desk_randomize(graph.n_sites());
    let start = Instant::now();
    let ds = generate_equilibrium_dataset(
        &graph,
        beta,
        &protocol,
        count,
        &RandomStream::new(2024, 1),
        format!("ferro2d L={l} beta={beta:?} {}", protocol.describe()),
    )?;
    let secs = start.elapsed().as_secs_f64();
    ds.write(&out)?;

    let back = SpinDataset::read(&out)?;
    assert_eq!(back, ds);
    let (e, e_se) = mean_se(&energies(&ds, &graph));
    let am: Vec<f64> = magnetizations(&ds).iter().map(|m| m.abs()).collect();
    let (m, m_se) = mean_se(&am);
    println!("records = {}", ds.len());
    println!("seconds = {secs:.2}");
    println!("energy_per_spin = {e:.4} +- {e_se:.4}");
    println!("abs_m = {m:.4} +- {m_se:.4}");
    println!("dataset = {}", out.display());
    println!("sidecar = {}", sidecar_path(&out).display());
    Ok(())
}
