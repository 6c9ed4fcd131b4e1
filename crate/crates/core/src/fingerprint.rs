//! Morgan-style circular fingerprints, Tanimoto similarity and thresholded
//! all-pairs search.

use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use thiserror::Error;

use crate::exec;
use crate::molgraph::{canonical_smiles, Molecule};

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_WIDTH: u32 = 2048;

/// Identifier of the environment-hashing scheme. Bump when hashing changes so
/// stale cache files are rejected.
pub const HASH_SCHEME: &str = "fnv1a64-morgan-v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FingerprintError {
    #[error("fingerprint width must be positive")]
    ZeroWidth,
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("similarity threshold {0} outside [0, 1)")]
    InvalidThreshold(f64),
    #[error("fingerprint cache: {0}")]
    Cache(String),
}

/// Fixed-width bit vector with a cached popcount.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: u32,
    popcount: u32,
}

impl Fingerprint {
    pub fn empty(width: u32) -> Result<Self, FingerprintError> {
        if width == 0 {
            return Err(FingerprintError::ZeroWidth);
        }
        Ok(Fingerprint {
            words: vec![0; width.div_ceil(64) as usize],
            width,
            popcount: 0,
        })
    }

    /// Build from set-bit indices; indices are reduced modulo `width`.
    pub fn from_bits(width: u32, bits: impl IntoIterator<Item = u32>) -> Result<Self, FingerprintError> {
        let mut fp = Fingerprint::empty(width)?;
        for b in bits {
            fp.set(b % width);
        }
        Ok(fp)
    }

    fn set(&mut self, bit: u32) {
        let (w, m) = ((bit / 64) as usize, 1u64 << (bit % 64));
        if self.words[w] & m == 0 {
            self.words[w] |= m;
            self.popcount += 1;
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn popcount(&self) -> u32 {
        self.popcount
    }

    pub fn contains(&self, bit: u32) -> bool {
        bit < self.width && self.words[(bit / 64) as usize] & (1u64 << (bit % 64)) != 0
    }

    pub fn ones(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.width).filter(|&b| self.contains(b))
    }

    pub fn intersection_count(&self, other: &Fingerprint) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// Little-endian packed bytes, `ceil(width / 8)` long.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.truncate(self.width.div_ceil(8) as usize);
        bytes
    }

    pub fn from_bytes(width: u32, bytes: &[u8]) -> Result<Self, FingerprintError> {
        let mut fp = Fingerprint::empty(width)?;
        if bytes.len() != width.div_ceil(8) as usize {
            return Err(FingerprintError::Cache(format!(
                "expected {} bytes for width {width}, got {}",
                width.div_ceil(8),
                bytes.len()
            )));
        }
        for (i, byte) in bytes.iter().enumerate() {
            for bit in 0..8 {
                if byte & (1 << bit) != 0 {
                    let idx = (i * 8 + bit) as u32;
                    if idx >= width {
                        return Err(FingerprintError::Cache("bit beyond width".into()));
                    }
                    fp.set(idx);
                }
            }
        }
        Ok(fp)
    }
}

struct Fnv1a(u64);

impl Fnv1a {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    fn new() -> Self {
        Fnv1a(Self::OFFSET)
    }

    fn bytes(&mut self, data: &[u8]) -> &mut Self {
        for &b in data {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
        self
    }

    fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }
}

/// 64-bit FNV-1a of a byte string.
pub fn fnv1a64(data: &[u8]) -> u64 {
    Fnv1a::new().bytes(data).0
}

/// splitmix64 finalizer. FNV alone leaves the high bits nearly unchanged by
/// trailing bytes.
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn atom_seed(mol: &Molecule, i: usize, in_ring: bool) -> u64 {
    let a = &mol.atoms()[i];
    Fnv1a::new()
        .bytes(&[
            a.atomic_number,
            mol.degree(i) as u8,
            a.formal_charge as u8,
            mol.hydrogen_count(i),
            a.aromatic as u8,
            in_ring as u8,
        ])
        .bytes(&a.isotope.unwrap_or(0).to_le_bytes())
        .0
}

/// Circular fingerprint: every atom environment up to `radius` bonds is
/// hashed and folded into a `width`-bit vector.
pub fn morgan(mol: &Molecule, radius: u32, width: u32) -> Result<Fingerprint, FingerprintError> {
    let mut fp = Fingerprint::empty(width)?;
    let in_ring = mol.ring_atoms();
    let mut current: Vec<u64> = (0..mol.atom_count())
        .map(|i| atom_seed(mol, i, in_ring[i]))
        .collect();
    for &h in &current {
        fp.set((h % width as u64) as u32);
    }
    for round in 1..=radius {
        let next: Vec<u64> = (0..mol.atom_count())
            .map(|i| {
                let mut env: Vec<(u8, u64)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, k)| (mol.bonds()[k].order.code(), current[j]))
                    .collect();
                env.sort_unstable();
                let mut h = Fnv1a::new();
                h.u64(round as u64).u64(current[i]).u64(env.len() as u64);
                for (order, inv) in env {
                    h.bytes(&[order]).u64(inv);
                }
                h.0
            })
            .collect();
        for &h in &next {
            fp.set((h % width as u64) as u32);
        }
        current = next;
    }
    Ok(fp)
}

/// `|a ∩ b| / |a ∪ b|`, defined as 1 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.width != b.width {
        return Err(FingerprintError::WidthMismatch(a.width, b.width));
    }
    Ok(tanimoto_unchecked(a, b))
}

fn tanimoto_unchecked(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let both = a.intersection_count(b);
    let union = a.popcount + b.popcount - both;
    if union == 0 {
        1.0
    } else {
        both as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarPair {
    pub i: usize,
    pub j: usize,
    pub similarity: f64,
}

fn check_pool(pool: &[Fingerprint], threshold: f64) -> Result<(), FingerprintError> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(FingerprintError::InvalidThreshold(threshold));
    }
    if let Some(first) = pool.first() {
        if let Some(bad) = pool.iter().find(|f| f.width != first.width) {
            return Err(FingerprintError::WidthMismatch(first.width, bad.width));
        }
    }
    Ok(())
}

/// Pool members sorted by popcount, used to restrict each row to the
/// popcount window admitted by `sim <= min/max`.
struct PopcountIndex {
    order: Vec<(u32, usize)>,
}

impl PopcountIndex {
    fn new(pool: &[Fingerprint]) -> Self {
        let mut order: Vec<(u32, usize)> = pool.iter().enumerate().map(|(i, f)| (f.popcount, i)).collect();
        order.sort_unstable();
        PopcountIndex { order }
    }

    fn row(&self, pool: &[Fingerprint], i: usize, threshold: f64) -> Vec<SimilarPair> {
        let pa = pool[i].popcount;
        let mut out = Vec::new();
        if pa == 0 {
            // only another empty fingerprint can exceed a threshold below 1
            let end = self.order.partition_point(|&(p, _)| p == 0);
            out.extend(self.order[..end].iter().filter(|&&(_, j)| j > i).map(|&(_, j)| SimilarPair {
                i,
                j,
                similarity: 1.0,
            }));
        } else {
            // sim > t requires t * max < min; widen by one to absorb rounding
            let lo = ((threshold * pa as f64).floor() as u32).max(1);
            let hi = if threshold > 0.0 {
                ((pa as f64 / threshold).ceil() as u64).min(u32::MAX as u64) as u32
            } else {
                u32::MAX
            };
            let start = self.order.partition_point(|&(p, _)| p < lo);
            let end = self.order.partition_point(|&(p, _)| p <= hi);
            for &(_, j) in &self.order[start..end] {
                if j <= i {
                    continue;
                }
                let s = tanimoto_unchecked(&pool[i], &pool[j]);
                if s > threshold {
                    out.push(SimilarPair { i, j, similarity: s });
                }
            }
        }
        out.sort_unstable_by_key(|p| p.j);
        out
    }
}

/// All pairs `i < j` with similarity strictly above `threshold`, sorted by
/// `(i, j)`. Runs in parallel over rows when the `parallel` feature is on.
pub fn pairwise_similar(pool: &[Fingerprint], threshold: f64) -> Result<Vec<SimilarPair>, FingerprintError> {
    check_pool(pool, threshold)?;
    let index = PopcountIndex::new(pool);
    let rows = exec::map_indices(pool.len(), |i| index.row(pool, i, threshold));
    Ok(rows.into_iter().flatten().collect())
}

/// Single-threaded [`pairwise_similar`].
pub fn pairwise_similar_sequential(
    pool: &[Fingerprint],
    threshold: f64,
) -> Result<Vec<SimilarPair>, FingerprintError> {
    check_pool(pool, threshold)?;
    let index = PopcountIndex::new(pool);
    Ok((0..pool.len()).flat_map(|i| index.row(pool, i, threshold)).collect())
}

/// Versioned on-disk fingerprint cache: canonical SMILES and base64 bitset.
pub mod cache {
    use super::*;

    pub fn header(radius: u32, width: u32) -> String {
        format!("#molforge-fpcache\tscheme={HASH_SCHEME}\tradius={radius}\twidth={width}")
    }

    pub fn write<W: Write>(
        mut out: W,
        radius: u32,
        width: u32,
        entries: &[(String, Fingerprint)],
    ) -> std::io::Result<()> {
        writeln!(out, "{}", header(radius, width))?;
        for (smiles, fp) in entries {
            writeln!(out, "{}\t{}", smiles, BASE64.encode(fp.to_bytes()))?;
        }
        Ok(())
    }

    /// Read a cache written with the same scheme, radius and width. Any
    /// mismatch in the header is reported as an error so callers recompute.
    pub fn read<R: BufRead>(
        input: R,
        radius: u32,
        width: u32,
    ) -> Result<Vec<(String, Fingerprint)>, FingerprintError> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| FingerprintError::Cache("empty cache file".into()))?
            .map_err(|e| FingerprintError::Cache(e.to_string()))?;
        if first != header(radius, width) {
            return Err(FingerprintError::Cache(format!("stale or foreign header {first:?}")));
        }
        let mut out = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| FingerprintError::Cache(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let (smiles, encoded) = line
                .split_once('\t')
                .ok_or_else(|| FingerprintError::Cache(format!("line {}: missing tab", n + 2)))?;
            let bytes = BASE64
                .decode(encoded)
                .map_err(|e| FingerprintError::Cache(format!("line {}: {e}", n + 2)))?;
            out.push((smiles.to_string(), Fingerprint::from_bytes(width, &bytes)?));
        }
        Ok(out)
    }

    /// Fingerprint every molecule and pair it with its canonical SMILES.
    pub fn build(mols: &[Molecule], radius: u32, width: u32) -> Result<Vec<(String, Fingerprint)>, FingerprintError> {
        exec::map_ordered(mols, |m| Ok((canonical_smiles(m).text, morgan(m, radius, width)?)))
            .into_iter()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse;

    fn fp(s: &str, r: u32) -> Fingerprint {
        morgan(&parse(s).unwrap(), r, DEFAULT_WIDTH).unwrap()
    }

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn single_atom_and_symmetric_ring() {
        assert_eq!(fp("C", 0).popcount(), 1);
        assert!(fp("c1ccccc1", 2).popcount() <= 3);
        let m = parse("CC(=O)Nc1ccc(O)cc1").unwrap();
        let f = morgan(&m, 2, DEFAULT_WIDTH).unwrap();
        assert!(f.popcount() as usize <= m.atom_count() * 3);
    }

    #[test]
    fn zero_width() {
        let m = parse("C").unwrap();
        assert_eq!(morgan(&m, 2, 0), Err(FingerprintError::ZeroWidth));
    }

    #[test]
    fn tanimoto_examples() {
        let a = Fingerprint::from_bits(64, [1, 2, 3]).unwrap();
        let b = Fingerprint::from_bits(64, [2, 3, 4]).unwrap();
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let c = Fingerprint::from_bits(64, [10, 11]).unwrap();
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.0);
        let e = Fingerprint::empty(64).unwrap();
        assert_eq!(tanimoto(&e, &e).unwrap(), 1.0);
        let wide = Fingerprint::empty(128).unwrap();
        assert_eq!(tanimoto(&a, &wide), Err(FingerprintError::WidthMismatch(64, 128)));
    }

    #[test]
    fn pairwise_small_pools() {
        let x = fp("CCOc1ccccc1", 2);
        assert!(pairwise_similar(std::slice::from_ref(&x), 0.6).unwrap().is_empty());
        let pairs = pairwise_similar(&[x.clone(), x.clone()], 0.6).unwrap();
        assert_eq!(pairs, vec![SimilarPair { i: 0, j: 1, similarity: 1.0 }]);
        assert!(matches!(
            pairwise_similar(std::slice::from_ref(&x), 1.0),
            Err(FingerprintError::InvalidThreshold(_))
        ));
        let narrow = Fingerprint::empty(64).unwrap();
        assert!(matches!(
            pairwise_similar(&[x, narrow], 0.5),
            Err(FingerprintError::WidthMismatch(..))
        ));
    }

    #[test]
    fn empty_fingerprints_pair_with_each_other_only() {
        let e = Fingerprint::empty(64).unwrap();
        let a = Fingerprint::from_bits(64, [1]).unwrap();
        let pairs = pairwise_similar(&[e.clone(), a, e], 0.0).unwrap();
        assert_eq!(pairs, vec![SimilarPair { i: 0, j: 2, similarity: 1.0 }]);
    }

    #[test]
    fn bytes_round_trip() {
        let a = Fingerprint::from_bits(70, [0, 9, 64, 69]).unwrap();
        assert_eq!(Fingerprint::from_bytes(70, &a.to_bytes()).unwrap(), a);
        assert!(Fingerprint::from_bytes(70, &[0xff; 9]).is_err());
    }

    #[test]
    fn cache_rejects_other_schemes() {
        let mols: Vec<_> = ["CCO", "c1ccccc1"].iter().map(|s| parse(s).unwrap()).collect();
        let entries = cache::build(&mols, 2, 256).unwrap();
        let mut buf = Vec::new();
        cache::write(&mut buf, 2, 256, &entries).unwrap();
        let back = cache::read(&buf[..], 2, 256).unwrap();
        assert_eq!(back, entries);
        assert!(cache::read(&buf[..], 1, 256).is_err());
        assert!(cache::read(&buf[..], 2, 512).is_err());
    }
}
