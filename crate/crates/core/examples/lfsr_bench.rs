//! Galois LFSR generators and a throughput comparison.

use corrdiff::lfsr::{bench_for, BenchGenerator, Lfsr32, Lfsr8};

fn main() -> corrdiff::Result<()> {
    let mut l8 = Lfsr8::new(1)?;
    let mut period = 0;
    loop {
        l8.step();
        period += 1;
        if l8.state() == 1 {
            break;
        }
    }
    println!("8-bit LFSR period: {period}");

    let mut l32 = Lfsr32::new(0xace1)?;
    let words: Vec<String> = (0..5).map(|_| format!("{:08x}", l32.next_word())).collect();
    println!("first 32-bit words from seed 0xace1: {}", words.join(" "));

    for generator in [BenchGenerator::Lfsr32, BenchGenerator::Stream] {
        let (draws, rate) = bench_for(generator, 0.5, 1)?;
        println!("{:>7}: {draws} words, {rate:.3e} words/s", generator.name());
    }
    Ok(())
}
