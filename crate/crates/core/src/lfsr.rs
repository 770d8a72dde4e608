//! Galois linear-feedback shift registers, the cheap hardware-style source
//! of uniform bits for p-bits.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Toggle mask of a maximal 8-bit register (period 255).
pub const MASK_8: u8 = 0xB8;
/// Toggle mask of a maximal 32-bit register (period 2^32 - 1).
pub const MASK_32: u32 = 0x8020_0003;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lfsr8 {
    state: u8,
}

impl Lfsr8 {
    pub fn new(seed: u8) -> Result<Self> {
        if seed == 0 {
            return Err(Error::InvalidArgument("LFSR seed must be nonzero".into()));
        }
        Ok(Self { state: seed })
    }

    pub fn state(&self) -> u8 {
        self.state
    }

    #[inline]
    pub fn step(&mut self) -> u8 {
        let lsb = self.state & 1;
        self.state >>= 1;
        if lsb == 1 {
            self.state ^= MASK_8;
        }
        self.state
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lfsr32 {
    state: u32,
}

impl Lfsr32 {
    pub fn new(seed: u32) -> Result<Self> {
        if seed == 0 {
            return Err(Error::InvalidArgument("LFSR seed must be nonzero".into()));
        }
        Ok(Self { state: seed })
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    #[inline]
    pub fn step(&mut self) -> u32 {
        let lsb = self.state & 1;
        self.state = (self.state >> 1) ^ (lsb.wrapping_neg() & MASK_32);
        self.state
    }

    /// Next 32 fresh bits (32 shifts).
    #[inline]
    pub fn next_word(&mut self) -> u32 {
        let mut w = 0u32;
        for _ in 0..32 {
            w = (w << 1) | (self.step() & 1);
        }
        w
    }

    /// Uniform in (-1, 1) from one register state, for p-bit comparisons.
    #[inline]
    pub fn uniform_pm1(&mut self) -> f64 {
        let x = self.step() as f64;
        (x + 0.5) / 2_147_483_648.0 - 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchGenerator {
    Lfsr32,
    Stream,
}

impl BenchGenerator {
    pub fn name(self) -> &'static str {
        match self {
            BenchGenerator::Lfsr32 => "lfsr32",
            BenchGenerator::Stream => "stream",
        }
    }
}

/// 32-bit samples drawn in roughly `seconds` of wall time.
pub fn bench_for(generator: BenchGenerator, seconds: f64, seed: u64) -> Result<(u64, f64)> {
    if !(seconds > 0.0 && seconds.is_finite()) {
        return Err(Error::InvalidArgument(
            "bench duration must be positive".into(),
        ));
    }
    const BLOCK: u64 = 1 << 16;
    let start = Instant::now();
    let mut draws = 0u64;
    let mut acc = 0u32;
    match generator {
        BenchGenerator::Lfsr32 => {
            let mut g = Lfsr32::new((seed as u32) | 1)?;
            while start.elapsed().as_secs_f64() < seconds {
                for _ in 0..BLOCK {
                    acc ^= g.next_word();
                }
                draws += BLOCK;
            }
        }
        BenchGenerator::Stream => {
            let mut g = RandomStream::new(seed, 0);
            while start.elapsed().as_secs_f64() < seconds {
                for _ in 0..BLOCK {
                    acc ^= g.next_u32();
                }
                draws += BLOCK;
            }
        }
    }
    std::hint::black_box(acc);
    Ok((draws, draws as f64 / start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_seed_rejected() {
        assert!(Lfsr8::new(0).is_err());
        assert!(Lfsr32::new(0).is_err());
    }

    #[test]
    fn lfsr8_visits_every_nonzero_state() {
        let mut r = Lfsr8::new(1).unwrap();
        let mut seen = [false; 256];
        for _ in 0..255 {
            let s = r.step();
            assert_ne!(s, 0);
            assert!(!seen[s as usize]);
            seen[s as usize] = true;
        }
        assert_eq!(r.state(), 1);
    }

    #[test]
    fn uniform_in_open_interval() {
        let mut r = Lfsr32::new(0xdead_beef).unwrap();
        for _ in 0..10_000 {
            let u = r.uniform_pm1();
            assert!(u > -1.0 && u < 1.0);
        }
    }
}
