//! Hierarchical, counter-based random streams.
//!
//! An [`RngStream`] is an immutable descriptor `(master_seed, path)`. Drawing
//! from it builds a fresh ChaCha8 generator whose 256-bit key is derived
//! arithmetically from the descriptor, so any substream can be materialised on
//! any thread without handing generator state around.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

/// The concrete generator handed to samplers and cost functions.
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
    path: SmallVec<[u64; 8]>,
    key: [u64; 4],
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        let mut key = [0u64; 4];
        for (w, k) in key.iter_mut().enumerate() {
            *k = mix64(master_seed ^ mix64((w as u64 + 1).wrapping_mul(GOLDEN)));
        }
        RngStream {
            master_seed,
            path: SmallVec::new(),
            key,
        }
    }

    /// Rebuilds a stream from its full descriptor.
    pub fn from_path(master_seed: u64, path: &[u64]) -> Self {
        path.iter().fold(RngStream::new(master_seed), |s, &i| s.child(i))
    }

    /// Substream `index` of this stream. Siblings with distinct indices and
    /// streams at different depths all receive distinct keys.
    pub fn child(&self, index: u64) -> Self {
        let depth = self.path.len() as u64 + 1;
        let tag = mix64(index ^ mix64(depth.wrapping_mul(GOLDEN)));
        let mut key = [0u64; 4];
        for (w, k) in key.iter_mut().enumerate() {
            let lane = mix64(tag.wrapping_add((w as u64 + 1).wrapping_mul(GOLDEN)));
            *k = mix64(self.key[w] ^ lane).wrapping_add(self.key[(w + 1) % 4]);
        }
        let mut path = self.path.clone();
        path.push(index);
        RngStream {
            master_seed: self.master_seed,
            path,
            key,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        for (chunk, k) in seed.chunks_exact_mut(8).zip(self.key.iter()) {
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("master_seed", &self.master_seed)
            .field("path", &self.path.as_slice())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn uniforms(s: &RngStream, n: usize) -> Vec<f64> {
        let mut rng = s.rng();
        (0..n).map(|_| rng.gen::<f64>()).collect()
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn same_descriptor_same_sequence() {
        let a = RngStream::new(42).child(3).child(7);
        let b = RngStream::from_path(42, &[3, 7]);
        assert_eq!(a, b);
        assert_eq!(uniforms(&a, 1000), uniforms(&b, 1000));
    }

    #[test]
    fn siblings_and_depths_differ() {
        let root = RngStream::new(1);
        let x = uniforms(&root.child(0), 16);
        assert_ne!(x, uniforms(&root.child(1), 16));
        assert_ne!(x, uniforms(&root.child(0).child(0), 16));
        assert_ne!(x, uniforms(&root, 16));
        assert_ne!(x, uniforms(&RngStream::new(2).child(0), 16));
    }

    #[test]
    fn sibling_streams_uncorrelated() {
        let root = RngStream::new(2024);
        let n = 100_000;
        let pairs = [(0, 1), (1, 2), (5, 1000), (7, 8)];
        for (i, j) in pairs {
            let r = correlation(&uniforms(&root.child(i), n), &uniforms(&root.child(j), n));
            assert!(r.abs() < 0.02, "corr({i},{j}) = {r}");
        }
        let r = correlation(&uniforms(&root.child(3), n), &uniforms(&root.child(3).child(3), n));
        assert!(r.abs() < 0.02, "parent/child corr = {r}");
    }

    #[test]
    fn descriptor_exposes_path() {
        let s = RngStream::new(9).child(4).child(2);
        assert_eq!(s.master_seed(), 9);
        assert_eq!(s.path(), &[4, 2]);
    }
}
