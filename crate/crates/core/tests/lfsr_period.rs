//! The 32-bit Galois LFSR has maximal period 2^32 - 1.
//!
//! The step is linear over GF(2), so the period of every nonzero state is the
//! multiplicative order of the step matrix. That order is 2^32 - 1 exactly when
//! A^(2^32-1) = I and A^((2^32-1)/q) != I for each prime q dividing 2^32 - 1.

use corrdiff::lfsr::{Lfsr32, MASK_32};

/// Column-major 32x32 matrix over GF(2): `cols[j]` is the image of bit j.
#[derive(Clone, PartialEq, Eq, Debug)]
struct Gf2([u32; 32]);

impl Gf2 {
    fn identity() -> Self {
        let mut cols = [0u32; 32];
        for (j, c) in cols.iter_mut().enumerate() {
            *c = 1 << j;
        }
        Gf2(cols)
    }

    fn apply(&self, v: u32) -> u32 {
        (0..32)
            .filter(|j| v >> j & 1 == 1)
            .fold(0, |acc, j| acc ^ self.0[j])
    }

    fn mul(&self, rhs: &Gf2) -> Gf2 {
        let mut cols = [0u32; 32];
        for (j, c) in cols.iter_mut().enumerate() {
            *c = self.apply(rhs.0[j]);
        }
        Gf2(cols)
    }

    fn pow(&self, mut e: u64) -> Gf2 {
        let mut base = self.clone();
        let mut acc = Gf2::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}

fn step_matrix() -> Gf2 {
    let mut cols = [0u32; 32];
    for (j, c) in cols.iter_mut().enumerate() {
        let mut r = Lfsr32::new(1 << j).unwrap();
        *c = r.step();
    }
    Gf2(cols)
}

#[test]
fn step_is_linear() {
    let a = step_matrix();
    for seed in [1u32, 0xdead_beef, 0x8000_0001, 0x1234_5678] {
        let mut r = Lfsr32::new(seed).unwrap();
        assert_eq!(r.step(), a.apply(seed));
    }
}

#[test]
fn period_is_maximal() {
    assert_eq!(MASK_32 >> 31, 1, "feedback must reach the top bit");
    let a = step_matrix();
    let order: u64 = (1u64 << 32) - 1;
    assert_eq!(a.pow(order), Gf2::identity());
    for q in [3u64, 5, 17, 257, 65537] {
        assert_eq!(order % q, 0);
        assert_ne!(
            a.pow(order / q),
            Gf2::identity(),
            "order divides (2^32-1)/{q}"
        );
    }
}
