//! Splittable random streams.
//!
//! A [`RandomStream`] is keyed by `(seed, stream_id)`. The backing generator is
//! ChaCha8 with the stream id mapped onto ChaCha's native 64-bit stream
//! counter, so distinct stream ids address disjoint keystreams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mixes several words into one stream id (splitmix64 finalizer chain).
pub fn derive_stream_id(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for &p in parts {
        h = splitmix64(h ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream sharing this seed, with an id derived from this stream's
    /// id and `parts`. Does not advance `self`.
    pub fn substream(&self, parts: &[u64]) -> RandomStream {
        let mut key = Vec::with_capacity(parts.len() + 1);
        key.push(self.stream_id);
        key.extend_from_slice(parts);
        RandomStream::new(self.seed, derive_stream_id(&key))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    /// Uniform on the open interval (0, 1), 53-bit mantissa.
    #[inline]
    pub fn uniform_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval (-1, 1); never exactly 0 or ±1.
    #[inline]
    pub fn uniform_pm1(&mut self) -> f64 {
        2.0 * self.uniform_open01() - 1.0
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Standard normal variate (Marsaglia polar method).
    pub fn standard_normal(&mut self) -> f64 {
        loop {
            let u = self.uniform_pm1();
            let v = self.uniform_pm1();
            let s = u * u + v * v;
            if s < 1.0 && s > 0.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_sequence() {
        let mut a = RandomStream::new(7, 3);
        let mut b = RandomStream::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RandomStream::new(7, 3);
        let mut b = RandomStream::new(7, 4);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn uniform_pm1_open_interval() {
        let mut r = RandomStream::new(1, 0);
        let mut sum = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let u = r.uniform_pm1();
            assert!(u > -1.0 && u < 1.0 && u != 0.0);
            sum += u;
        }
        // sd of the mean = 1/sqrt(3n)
        assert!((sum / n as f64).abs() < 4.0 / (3.0 * n as f64).sqrt());
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let mut a = RandomStream::new(11, 0);
        let mut b = RandomStream::new(11, 1);
        let n = 100_000;
        let mut c = 0.0;
        for _ in 0..n {
            c += a.uniform_pm1() * b.uniform_pm1();
        }
        // E = 0, sd = (1/3)/sqrt(n)
        assert!((c / n as f64).abs() < 4.0 / (3.0 * (n as f64).sqrt()));
    }

    #[test]
    fn normal_moments() {
        let mut r = RandomStream::new(5, 9);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }
}
