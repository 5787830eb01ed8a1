//! Per-block random codebooks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prob::{JointDistribution, Var};

use super::SimConfig;

pub(crate) const TX_BOOK: u64 = 1;
pub(crate) const RELAY_BOOK: u64 = 2;
pub(crate) const COMP_BOOK: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a tuple of counters into one generator seed.
pub fn stream_key(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3, |h, &p| splitmix64(h ^ splitmix64(p)))
}

pub(crate) fn keyed_rng(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(parts))
}

/// Cumulative table for inverse-transform sampling.
#[derive(Debug, Clone)]
pub(crate) struct Sampler {
    cdf: Vec<f64>,
    last: usize,
}

impl Sampler {
    pub(crate) fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        let last = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);
        Sampler { cdf, last }
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.iter().position(|&c| u < c).map_or(self.last, |i| i.min(self.last))
    }
}

/// Codeword-count exponents: each codebook has `2^e` words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedRates {
    pub n: usize,
    pub msg: u32,
    pub rand: u32,
    pub relay: u32,
    pub comp: u32,
}

fn exponent(n: usize, rate: f64) -> u32 {
    (n as f64 * rate - 1e-9).ceil().max(0.0) as u32
}

impl QuantizedRates {
    pub fn new(cfg: &SimConfig) -> Self {
        QuantizedRates {
            n: cfg.n,
            msg: exponent(cfg.n, cfg.r1),
            rand: exponent(cfg.n, cfg.r_tilde1),
            relay: exponent(cfg.n, cfg.r2),
            comp: exponent(cfg.n, cfg.r_hat),
        }
    }

    pub fn msg_count(&self) -> usize {
        1 << self.msg
    }

    pub fn rand_count(&self) -> usize {
        1 << self.rand
    }

    pub fn tx_count(&self) -> usize {
        1 << (self.msg + self.rand)
    }

    pub fn relay_count(&self) -> usize {
        1 << self.relay
    }

    pub fn comp_count(&self) -> usize {
        1 << self.comp
    }

    /// Rates actually used, `e / n`.
    pub fn rates(&self) -> [f64; 4] {
        let n = self.n as f64;
        [self.msg as f64 / n, self.rand as f64 / n, self.relay as f64 / n, self.comp as f64 / n]
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    tx: Vec<u16>,
    relay: Vec<u16>,
    comp: Vec<u16>,
}

/// Independent codebooks for each block: the binned transmitter codebook,
/// the relay codebook, and one compression codebook per relay word.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCodebooks {
    rates: QuantizedRates,
    blocks: Vec<Block>,
}

impl BlockCodebooks {
    pub fn rates(&self) -> QuantizedRates {
        self.rates
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.rates.n
    }

    /// Transmitter word for message `w` and randomization index `w_tilde`.
    pub fn tx_word(&self, block: usize, w: usize, w_tilde: usize) -> &[u16] {
        self.tx_by_index(block, w * self.rates.rand_count() + w_tilde)
    }

    pub(crate) fn tx_by_index(&self, block: usize, m: usize) -> &[u16] {
        let n = self.rates.n;
        &self.blocks[block].tx[m * n..(m + 1) * n]
    }

    pub fn relay_word(&self, block: usize, l: usize) -> &[u16] {
        let n = self.rates.n;
        &self.blocks[block].relay[l * n..(l + 1) * n]
    }

    /// Compression word `k` of the codebook attached to relay word `l`.
    pub fn comp_word(&self, block: usize, l: usize, k: usize) -> &[u16] {
        let n = self.rates.n;
        let i = l * self.rates.comp_count() + k;
        &self.blocks[block].comp[i * n..(i + 1) * n]
    }

    /// Wyner-Ziv bin of compression index `k`.
    pub fn bin(&self, k: usize) -> usize {
        k % self.rates.relay_count()
    }
}

/// Largest number of stored symbols per block.
const MAX_BLOCK_SYMBOLS: usize = 1 << 24;
const MAX_CODEBOOK_EXPONENT: u32 = 20;

pub(crate) fn check_sizes(rates: &QuantizedRates) -> Result<()> {
    for (name, e) in [
        ("transmitter", rates.msg + rates.rand),
        ("relay", rates.relay),
        ("compression", rates.comp),
    ] {
        if e > MAX_CODEBOOK_EXPONENT {
            return Err(Error::Config(format!(
                "{name} codebook would hold 2^{e} words (limit 2^{MAX_CODEBOOK_EXPONENT}); lower n or the rates"
            )));
        }
    }
    let words = rates.tx_count() + rates.relay_count() + rates.relay_count() * rates.comp_count();
    if words.saturating_mul(rates.n) > MAX_BLOCK_SYMBOLS {
        return Err(Error::Config(format!(
            "codebooks would store {} symbols per block (limit {MAX_BLOCK_SYMBOLS}); lower n or the rates",
            words.saturating_mul(rates.n)
        )));
    }
    Ok(())
}

/// Draws every codeword from its own generator keyed by
/// `(seed, block, codebook, index)`, so any word can be regenerated alone.
pub(crate) fn generate(joint: &JointDistribution, p_x1: &[f64], p_x2: &[f64], rates: QuantizedRates, blocks: usize, seed: u64) -> Result<BlockCodebooks> {
    check_sizes(&rates)?;
    let n = rates.n;
    let x1 = Sampler::new(p_x1);
    let x2 = Sampler::new(p_x2);
    let comp_law = joint.conditional(Var::Y2Hat.into(), Var::X2.into())?;
    let comp: Vec<Sampler> = (0..comp_law.given_count()).map(|g| Sampler::new(comp_law.row(g))).collect();

    let word = |sampler: &dyn Fn(&mut ChaCha8Rng, usize) -> usize, key: [u64; 4]| -> Vec<u16> {
        let mut rng = keyed_rng(&key);
        (0..n).map(|i| sampler(&mut rng, i) as u16).collect()
    };

    let mut out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let b64 = b as u64;
        let mut tx = Vec::with_capacity(rates.tx_count() * n);
        for m in 0..rates.tx_count() {
            tx.extend(word(&|r, _| x1.draw(r), [seed, b64, TX_BOOK, m as u64]));
        }
        let mut relay = Vec::with_capacity(rates.relay_count() * n);
        for l in 0..rates.relay_count() {
            relay.extend(word(&|r, _| x2.draw(r), [seed, b64, RELAY_BOOK, l as u64]));
        }
        let mut comp_words = Vec::with_capacity(rates.relay_count() * rates.comp_count() * n);
        for l in 0..rates.relay_count() {
            let carrier = &relay[l * n..(l + 1) * n];
            for k in 0..rates.comp_count() {
                let idx = (l * rates.comp_count() + k) as u64;
                comp_words.extend(word(&|r, i| comp[carrier[i] as usize].draw(r), [seed, b64, COMP_BOOK, idx]));
            }
        }
        out.push(Block { tx, relay, comp: comp_words });
    }
    Ok(BlockCodebooks { rates, blocks: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_separate_streams() {
        assert_ne!(stream_key(&[1, 2, 3]), stream_key(&[1, 3, 2]));
        assert_ne!(stream_key(&[0]), stream_key(&[0, 0]));
    }

    #[test]
    fn sampler_skips_null_symbols() {
        let s = Sampler::new(&[0.0, 1.0, 0.0]);
        let mut rng = keyed_rng(&[5]);
        assert!((0..100).all(|_| s.draw(&mut rng) == 1));
    }

    #[test]
    fn exponent_rounds_up() {
        assert_eq!(exponent(10, 0.5), 5);
        assert_eq!(exponent(10, 0.51), 6);
        assert_eq!(exponent(3, 1.0 / 3.0), 1);
        assert_eq!(exponent(7, 0.0), 0);
    }
}
