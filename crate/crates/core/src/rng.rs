//! Counter-based random stream used by every stochastic routine.
//!
//! The generator is Philox4x64-10 (Salmon et al., Random123). A stream is
//! fully described by a 64-bit seed:
//!
//! * key = `[seed, 0]`
//! * block `c` (a 128-bit counter starting at 0) is `philox4x64_10([c_lo, c_hi, 0, 0], key)`
//! * the four 64-bit words of each block are consumed in order 0..4, then `c += 1`.
//!
//! Derived quantities are defined exactly so other implementations can
//! reproduce streams bit for bit:
//!
//! * `uniform()`: `(word >> 11) * 2^-53`, in `[0, 1)`
//! * `below(k)`: `(word as u128 * k as u128) >> 64`
//! * `normal()`: Box-Muller on two uniforms `u1, u2`, returning
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`; the sine branch is discarded.
//!
//! Per-task seeds come from [`derive_seed`]: the first eight bytes
//! (little-endian) of `SHA-256(master.to_le_bytes() || path)`.

use sha2::{Digest, Sha256};

const M0: u64 = 0xD2E7_470E_E14C_6C93;
const M1: u64 = 0xCA5A_8263_9512_1157;
const W0: u64 = 0x9E37_79B9_7F4A_7C15;
const W1: u64 = 0xBB67_AE85_84CA_A73B;

#[inline(always)]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// One Philox4x64 block with 10 rounds.
pub fn philox4x64_10(counter: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut x = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, x[0]);
        let (hi1, lo1) = mulhilo(M1, x[2]);
        x = [hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0];
    }
    x
}

/// Seeded Philox stream.
#[derive(Clone, Debug)]
pub struct Stream {
    key: [u64; 2],
    counter: u128,
    block: [u64; 4],
    pos: usize,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: [seed, 0],
            counter: 0,
            block: [0; 4],
            pos: 4,
        }
    }

    /// Stream for `path` under `master`; see [`derive_seed`].
    pub fn derived(master: u64, path: &str) -> Self {
        Self::new(derive_seed(master, path))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.pos == 4 {
            let c = self.counter;
            self.block = philox4x64_10([c as u64, (c >> 64) as u64, 0, 0], self.key);
            self.counter = c.wrapping_add(1);
            self.pos = 0;
        }
        let w = self.block[self.pos];
        self.pos += 1;
        w
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Integer in `0..k` by multiply-shift. `k` must be positive.
    #[inline]
    pub fn below(&mut self, k: usize) -> usize {
        debug_assert!(k > 0);
        (((self.next_u64() as u128) * (k as u128)) >> 64) as usize
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Stable per-task seed from a master seed and a task path.
pub fn derive_seed(master: u64, path: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(path.as_bytes());
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}
