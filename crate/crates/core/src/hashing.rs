//! LSH primitives: seeded permutations, MinHash, Gaussian random
//! projections, `(K, L)` signature composition and densified one
//! permutation hashing (DOPH).
//!
//! Every hash object is a pure function of its seed and is immutable once
//! built, so a single instance can be shared by all threads and workers.
//!
//! Generators are pinned for reproducibility: seeds are expanded with
//! SplitMix64, projection directions are drawn from `ChaCha8Rng` through the
//! Box–Muller transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A K-tuple of hash values.
pub type Signature = Vec<u64>;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent sub-seed from a base seed and a path of indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

const PERM_ROUNDS: usize = 4;

/// A seeded bijection on `[0, universe)`.
///
/// Built from a bijection on `[0, 2^w)` (xor with a key, multiply by an odd
/// constant, xor-shift; repeated) restricted to the universe by cycle
/// walking, so no permutation array is ever materialized.
#[derive(Clone, Debug)]
pub struct Permutation {
    universe: u64,
    mask: u64,
    shift: u32,
    keys: [(u64, u64); PERM_ROUNDS],
    identity: bool,
}

impl Permutation {
    pub fn new(seed: u64, universe: u64) -> Result<Self> {
        if universe == 0 {
            return Err(Error::invalid("permutation universe must be positive"));
        }
        let bits = 64 - (universe - 1).leading_zeros();
        let mask = if bits >= 64 {
            u64::MAX
        } else {
            (1u64 << bits) - 1
        };
        let mut keys = [(0u64, 0u64); PERM_ROUNDS];
        let mut state = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
        for k in keys.iter_mut() {
            state = splitmix64(state);
            let xor_key = state & mask;
            state = splitmix64(state);
            *k = (xor_key, state | 1);
        }
        Ok(Permutation {
            universe,
            mask,
            shift: bits.div_ceil(2),
            keys,
            identity: bits == 0,
        })
    }

    /// The identity map on `[0, universe)`; a test hook that makes MinHash
    /// return the smallest element.
    pub fn identity(universe: u64) -> Self {
        Permutation {
            universe,
            mask: 0,
            shift: 1,
            keys: [(0, 1); PERM_ROUNDS],
            identity: true,
        }
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    #[inline]
    fn round_trip(&self, mut x: u64) -> u64 {
        for &(xor_key, mul) in &self.keys {
            x ^= xor_key;
            x = x.wrapping_mul(mul) & self.mask;
            x ^= x >> self.shift;
        }
        x
    }

    /// Image of `x`; `x` must lie in the universe.
    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        if self.identity {
            return x;
        }
        let mut y = self.round_trip(x);
        while y >= self.universe {
            y = self.round_trip(y);
        }
        y
    }
}

/// `h(A) = min_{a ∈ A} π(a)` for a seeded permutation `π`.
#[derive(Clone, Debug)]
pub struct MinHashFunction {
    seed: u64,
    perm: Permutation,
}

impl MinHashFunction {
    pub fn new(seed: u64, universe: u64) -> Result<Self> {
        Ok(MinHashFunction {
            seed,
            perm: Permutation::new(seed, universe)?,
        })
    }

    pub fn identity(universe: u64) -> Self {
        MinHashFunction {
            seed: 0,
            perm: Permutation::identity(universe),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn universe(&self) -> u64 {
        self.perm.universe()
    }

    pub fn minhash(&self, set: &[u32]) -> Result<u64> {
        self.minhash_iter(set.iter().map(|&x| x as u64))
    }

    pub fn minhash_iter(&self, set: impl IntoIterator<Item = u64>) -> Result<u64> {
        let universe = self.perm.universe();
        let mut best: Option<u64> = None;
        for x in set {
            if x >= universe {
                return Err(Error::invalid(format!(
                    "element {x} outside universe {universe}"
                )));
            }
            let h = self.perm.apply(x);
            best = Some(best.map_or(h, |b| b.min(h)));
        }
        best.ok_or_else(|| Error::invalid("minhash of an empty set"))
    }
}

/// `h_a(x) = a · x` with `a` drawn i.i.d. from the standard normal.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionFunction {
    direction: Vec<f64>,
}

impl ProjectionFunction {
    /// Direction number `index` of the family identified by `seed`.
    pub fn new(seed: u64, index: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[index]));
        let mut direction = Vec::with_capacity(dim + 1);
        while direction.len() < dim {
            let (z0, z1) = box_muller(&mut rng);
            direction.push(z0);
            direction.push(z1);
        }
        direction.truncate(dim);
        ProjectionFunction { direction }
    }

    pub fn from_direction(direction: Vec<f64>) -> Self {
        ProjectionFunction { direction }
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn project(&self, x: &[f32]) -> Result<f64> {
        if x.len() != self.direction.len() {
            return Err(Error::invalid(format!(
                "dimension mismatch: direction {} vs object {}",
                self.direction.len(),
                x.len()
            )));
        }
        Ok(self.project_unchecked(x))
    }

    #[inline]
    pub(crate) fn project_unchecked(&self, x: &[f32]) -> f64 {
        self.direction
            .iter()
            .zip(x)
            .map(|(&a, &v)| a * v as f64)
            .sum()
    }
}

fn box_muller(rng: &mut impl Rng) -> (f64, f64) {
    // u1 in (0, 1] keeps the logarithm finite
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Anything that maps an ID set to a per-table signature. SILK bins buckets
/// through this trait so tests can pin signatures.
pub trait SetSigner: Send + Sync {
    fn tables(&self) -> usize;
    fn signature(&self, table: usize, set: &[u32]) -> Result<Signature>;
}

/// `L` tables of `K` concatenated MinHash functions.
#[derive(Clone, Debug)]
pub struct SignatureScheme {
    k: usize,
    universe: u64,
    functions: Vec<Vec<MinHashFunction>>,
}

impl SignatureScheme {
    pub fn new(k: usize, l: usize, seed: u64, universe: u64) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(Error::invalid("K and L must both be at least 1"));
        }
        let functions = (0..l)
            .map(|table| {
                (0..k)
                    .map(|j| {
                        MinHashFunction::new(derive_seed(seed, &[table as u64, j as u64]), universe)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SignatureScheme {
            k,
            universe,
            functions,
        })
    }

    pub fn from_functions(functions: Vec<Vec<MinHashFunction>>) -> Result<Self> {
        let k = functions.first().map_or(0, |t| t.len());
        if k == 0 || functions.iter().any(|t| t.len() != k) {
            return Err(Error::invalid(
                "every table needs the same K >= 1 functions",
            ));
        }
        let universe = functions[0][0].universe();
        if functions.iter().flatten().any(|f| f.universe() != universe) {
            return Err(Error::invalid("all functions must share one universe"));
        }
        Ok(SignatureScheme {
            k,
            universe,
            functions,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.functions.len()
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    fn table_functions(&self, table: usize) -> Result<&[MinHashFunction]> {
        self.functions
            .get(table)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid(format!("table {table} out of range")))
    }

    pub fn signature_iter<I>(&self, table: usize, set: I) -> Result<Signature>
    where
        I: IntoIterator<Item = u64>,
        I::IntoIter: Clone,
    {
        let set = set.into_iter();
        self.table_functions(table)?
            .iter()
            .map(|f| f.minhash_iter(set.clone()))
            .collect()
    }
}

impl SetSigner for SignatureScheme {
    fn tables(&self) -> usize {
        self.l()
    }

    fn signature(&self, table: usize, set: &[u32]) -> Result<Signature> {
        self.table_functions(table)?
            .iter()
            .map(|f| f.minhash(set))
            .collect()
    }
}

/// Prime used to fold a bin's minimum into its output token.
const DOPH_TOKEN_PRIME: u128 = 2_147_483_647;

/// One DOPH bin after densification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DophSlot {
    /// Offset of the smallest permuted element inside the donor bin.
    pub value: u64,
    /// How many bins to the right (circularly) the value was borrowed from;
    /// 0 for a non-empty bin.
    pub borrow: u32,
}

/// Densified one permutation hashing from `[0, universe)` down to
/// `[0, dims)`.
///
/// The permuted universe is cut into `dims` contiguous ranges. A non-empty
/// bin keeps the offset of its smallest permuted element; an empty bin
/// borrows from the nearest non-empty bin to its right, wrapping around.
/// The reduced set contains one token per non-empty bin,
/// `(bin + p · value) mod dims` with `p = 2^31 - 1`, deduplicated and sorted.
/// With `dims == universe` every bin holds one element and the token is the
/// permuted element itself.
#[derive(Clone, Debug)]
pub struct DophReducer {
    seed: u64,
    dims: u32,
    perm: Permutation,
}

impl DophReducer {
    pub fn new(seed: u64, universe: u64, dims: u32) -> Result<Self> {
        Self::check(universe, dims)?;
        Ok(DophReducer {
            seed,
            dims,
            perm: Permutation::new(seed, universe)?,
        })
    }

    pub fn identity(universe: u64, dims: u32) -> Result<Self> {
        Self::check(universe, dims)?;
        Ok(DophReducer {
            seed: 0,
            dims,
            perm: Permutation::identity(universe),
        })
    }

    fn check(universe: u64, dims: u32) -> Result<()> {
        if dims == 0 || dims as u64 > universe {
            return Err(Error::invalid(format!(
                "DOPH target dimension {dims} must be in [1, {universe}]"
            )));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dims(&self) -> u32 {
        self.dims
    }

    pub fn universe(&self) -> u64 {
        self.perm.universe()
    }

    #[inline]
    fn bin_of(&self, q: u64) -> (usize, u64) {
        let d = self.perm.universe() as u128;
        let r = self.dims as u128;
        let bin = (q as u128 * r / d) as usize;
        let start = ((bin as u128 * d).div_ceil(r)) as u64;
        (bin, q - start)
    }

    fn raw_bins(&self, set: &[u32]) -> Result<Vec<Option<u64>>> {
        if set.is_empty() {
            return Err(Error::invalid("DOPH of an empty set"));
        }
        let universe = self.perm.universe();
        let mut bins: Vec<Option<u64>> = vec![None; self.dims as usize];
        for &x in set {
            if x as u64 >= universe {
                return Err(Error::invalid(format!(
                    "element {x} outside universe {universe}"
                )));
            }
            let (bin, offset) = self.bin_of(self.perm.apply(x as u64));
            let slot = &mut bins[bin];
            *slot = Some(slot.map_or(offset, |v| v.min(offset)));
        }
        Ok(bins)
    }

    /// The densified sketch: one slot per bin.
    pub fn sketch(&self, set: &[u32]) -> Result<Vec<DophSlot>> {
        let bins = self.raw_bins(set)?;
        let r = bins.len();
        let mut out = vec![
            DophSlot {
                value: 0,
                borrow: 0
            };
            r
        ];
        // sweep right-to-left twice so every empty bin sees its nearest
        // non-empty neighbour to the right, wrapping around
        let mut next: Option<(u64, usize)> = None;
        for pass in 0..2 {
            for i in (0..r).rev() {
                if let Some(v) = bins[i] {
                    next = Some((v, i + (1 - pass) * r));
                }
                if pass == 1 {
                    let (v, at) = next.expect("non-empty input has a non-empty bin");
                    out[i] = DophSlot {
                        value: v,
                        borrow: (at - i) as u32,
                    };
                }
            }
        }
        Ok(out)
    }

    /// Reduced token set over `[0, dims)`.
    pub fn reduce(&self, set: &[u32]) -> Result<Vec<u32>> {
        let bins = self.raw_bins(set)?;
        let r = self.dims as u128;
        let mut tokens: Vec<u32> = bins
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| ((i as u128 + DOPH_TOKEN_PRIME * v as u128) % r) as u32))
            .collect();
        tokens.sort_unstable();
        tokens.dedup();
        Ok(tokens)
    }
}
