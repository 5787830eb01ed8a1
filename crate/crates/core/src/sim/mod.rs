//! Finite-blocklength simulation of the block-Markov scheme.
//!
//! Messages are sent in blocks `0..B-1`; the last block carries the fixed
//! word so that the relay's final bin index reaches Bob. The relay starts
//! from the public word 0, compresses its observation by joint typicality
//! and forwards the Wyner-Ziv bin of the chosen index in the next block.
//! Bob decodes block `b` from the outputs of blocks `b` and `b + 1`.

mod codebook;
mod equivocation;
mod typical;

pub use codebook::{stream_key, BlockCodebooks, QuantizedRates};
pub use equivocation::{exact_equivocation, exact_equivocation_observed, EquivocationEstimate};
pub use typical::TypicalityTest;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{assemble_joint, unflatten, ChannelSpec, InputDesign, JointDistribution, Var};
use codebook::{keyed_rng, Sampler};

pub(crate) const TRIAL_STREAM: u64 = 10;
pub(crate) const TRIAL_CODEBOOK: u64 = 11;
pub(crate) const EVE_STREAM: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquivocationMode {
    Off,
    ExactMicro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub blocks: usize,
    pub r1: f64,
    pub r_tilde1: f64,
    pub r2: f64,
    pub r_hat: f64,
    pub eps_typ: f64,
    pub trials: usize,
    pub seed: u64,
    pub equivocation: EquivocationMode,
    /// Number of sampled eavesdropper observations for the exact mode.
    pub eve_samples: usize,
}

impl SimConfig {
    pub fn new(n: usize, blocks: usize, r1: f64) -> Self {
        SimConfig {
            n,
            blocks,
            r1,
            r_tilde1: 0.0,
            r2: 0.0,
            r_hat: 0.0,
            eps_typ: 0.15,
            trials: 100,
            seed: 0,
            equivocation: EquivocationMode::Off,
            eve_samples: 200,
        }
    }

    pub fn quantized(&self) -> QuantizedRates {
        QuantizedRates::new(self)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 {
            return bad("blocklength n must be at least 1".into());
        }
        if self.blocks < 2 {
            return bad("the scheme needs at least 2 blocks".into());
        }
        for (name, r) in [("r1", self.r1), ("r_tilde1", self.r_tilde1), ("r2", self.r2), ("r_hat", self.r_hat)] {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("rate {name} must be finite and nonnegative, got {r}"));
            }
        }
        if self.r_hat < self.r2 {
            return bad(format!("r_hat ({}) must be at least r2 ({})", self.r_hat, self.r2));
        }
        if !(self.eps_typ >= 0.0 && self.eps_typ.is_finite()) {
            return bad(format!("typicality slack must be nonnegative, got {}", self.eps_typ));
        }
        if self.trials == 0 {
            return bad("at least one trial is required".into());
        }
        codebook::check_sizes(&self.quantized())
    }
}

/// Joint-typicality tests used by the relay and by Bob.
#[derive(Debug, Clone)]
pub struct SchemeLaws {
    /// `ŷ2` given `(x2, y2)`.
    pub relay: TypicalityTest,
    /// `(x1, ŷ2)` given `(x2, y3)`.
    pub window: TypicalityTest,
    /// `x2` given `y3`.
    pub relay_word: TypicalityTest,
}

impl SchemeLaws {
    pub fn new(joint: &JointDistribution, eps: f64) -> Result<Self> {
        use Var::*;
        Ok(SchemeLaws {
            relay: TypicalityTest::new(joint, Y2Hat.into(), X2 | Y2, eps)?,
            window: TypicalityTest::new(joint, X1 | Y2Hat, X2 | Y3, eps)?,
            relay_word: TypicalityTest::new(joint, X2.into(), Y3.into(), eps)?,
        })
    }
}

pub(crate) fn check_inputs(spec: &ChannelSpec, design: &InputDesign, cfg: &SimConfig) -> Result<JointDistribution> {
    cfg.check()?;
    let a = spec.alphabets();
    let widest = [a.x1, a.x2, a.y2, a.y3, a.z, design.comp_size].into_iter().max().unwrap_or(1);
    if widest > u16::MAX as usize + 1 {
        return Err(Error::Config(format!("alphabet of size {widest} is too large to simulate")));
    }
    assemble_joint(spec, design)
}

/// Codebooks for all `B` blocks, drawn from `cfg.seed`.
pub fn build_codebooks(spec: &ChannelSpec, design: &InputDesign, cfg: &SimConfig) -> Result<BlockCodebooks> {
    let joint = check_inputs(spec, design, cfg)?;
    codebook::generate(&joint, &design.p_x1, &design.p_x2, cfg.quantized(), cfg.blocks, cfg.seed)
}

/// Outcome of one relay compression step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelayStep {
    /// Chosen compression index, `None` when no codeword was typical.
    pub index: Option<usize>,
    /// Relay word for the next block.
    pub next: usize,
}

/// Picks the smallest compression index whose word is typical with the
/// relay's input and observation; falls back to relay word 0 on failure.
pub fn relay_encode(codebooks: &BlockCodebooks, laws: &SchemeLaws, block: usize, l: usize, y2: &[u16]) -> RelayStep {
    let x2 = codebooks.relay_word(block, l);
    let Some(classes) = laws.relay.classes(&[x2, y2]) else {
        return RelayStep { index: None, next: 0 };
    };
    let mut scratch = Vec::new();
    let found = (0..codebooks.rates().comp_count())
        .find(|&k| laws.relay.check_classes(&classes, &[codebooks.comp_word(block, l, k)], &mut scratch));
    RelayStep { index: found, next: found.map_or(0, |k| codebooks.bin(k)) }
}

/// Relay word sequence produced by a run of relay observations.
pub fn relay_path(codebooks: &BlockCodebooks, laws: &SchemeLaws, y2_words: &[&[u16]]) -> Vec<usize> {
    let mut path = vec![0];
    for (b, y2) in y2_words.iter().enumerate() {
        let l = *path.last().unwrap();
        path.push(relay_encode(codebooks, laws, b, l, y2).next);
    }
    path
}

/// Bob's decision for block `b` from `y3` of blocks `b` and `b + 1` and his
/// estimate of the relay word in block `b`. Returns the unique transmitter
/// index with a witness compression word, together with the smallest
/// witness bin as the relay word estimate for block `b + 1`.
pub fn decode_block(
    codebooks: &BlockCodebooks,
    laws: &SchemeLaws,
    block: usize,
    relay_word: usize,
    y3: &[u16],
    y3_next: &[u16],
) -> Option<(usize, usize)> {
    let rates = codebooks.rates();
    let classes = laws.window.classes(&[codebooks.relay_word(block, relay_word), y3])?;
    let next_classes = laws.relay_word.classes(&[y3_next])?;
    let mut scratch = Vec::new();
    let bin_ok: Vec<bool> = (0..rates.relay_count())
        .map(|j| laws.relay_word.check_classes(&next_classes, &[codebooks.relay_word(block + 1, j)], &mut scratch))
        .collect();
    let witnesses: Vec<usize> = (0..rates.comp_count()).filter(|&k| bin_ok[codebooks.bin(k)]).collect();
    if witnesses.is_empty() {
        return None;
    }
    let mut found = None;
    for m in 0..rates.tx_count() {
        let x1 = codebooks.tx_by_index(block, m);
        let bin = witnesses
            .iter()
            .filter(|&&k| laws.window.check_classes(&classes, &[x1, codebooks.comp_word(block, relay_word, k)], &mut scratch))
            .map(|&k| codebooks.bin(k))
            .min();
        if let Some(bin) = bin {
            if found.is_some() {
                return None;
            }
            found = Some((m, bin));
        }
    }
    found
}

/// Draws `(y2, y3, z)` per channel use.
#[derive(Debug, Clone)]
pub(crate) struct ChannelSampler {
    rows: Vec<Sampler>,
    x2: usize,
    out_sizes: [usize; 3],
}

impl ChannelSampler {
    pub(crate) fn new(spec: &ChannelSpec) -> Self {
        let a = spec.alphabets();
        let mut rows = Vec::with_capacity(a.x1 * a.x2);
        for x1 in 0..a.x1 {
            for x2 in 0..a.x2 {
                rows.push(Sampler::new(spec.row(x1, x2)));
            }
        }
        ChannelSampler { rows, x2: a.x2, out_sizes: [a.y2, a.y3, a.z] }
    }

    /// Returns `(y2, y3, z)` words.
    pub(crate) fn run<R: Rng>(&self, rng: &mut R, x1: &[u16], x2: &[u16]) -> [Vec<u16>; 3] {
        let n = x1.len();
        let mut out = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut sym = [0usize; 3];
        for i in 0..n {
            let r = self.rows[x1[i] as usize * self.x2 + x2[i] as usize].draw(rng);
            unflatten(r, &self.out_sizes, &mut sym);
            for k in 0..3 {
                out[k].push(sym[k] as u16);
            }
        }
        out
    }
}

/// One full transmission: messages, relay path and channel outputs.
#[derive(Debug, Clone)]
pub(crate) struct Transmission {
    /// Transmitter index per block (the last block sends 0).
    pub tx: Vec<usize>,
    pub relay: Vec<usize>,
    pub relay_failures: Vec<bool>,
    pub y3: Vec<Vec<u16>>,
    pub z: Vec<Vec<u16>>,
}

pub(crate) fn transmit<R: Rng>(
    codebooks: &BlockCodebooks,
    laws: &SchemeLaws,
    channel: &ChannelSampler,
    rng: &mut R,
) -> Transmission {
    let blocks = codebooks.block_count();
    let tx_count = codebooks.rates().tx_count();
    let tx: Vec<usize> = (0..blocks).map(|b| if b + 1 < blocks { rng.gen_range(0..tx_count) } else { 0 }).collect();
    let mut relay = vec![0];
    let mut relay_failures = Vec::with_capacity(blocks - 1);
    let (mut y3, mut z) = (Vec::with_capacity(blocks), Vec::with_capacity(blocks));
    for b in 0..blocks {
        let l = relay[b];
        let [y2_b, y3_b, z_b] = channel.run(rng, codebooks.tx_by_index(b, tx[b]), codebooks.relay_word(b, l));
        if b + 1 < blocks {
            let step = relay_encode(codebooks, laws, b, l, &y2_b);
            relay_failures.push(step.index.is_none());
            relay.push(step.next);
        }
        y3.push(y3_b);
        z.push(z_b);
    }
    Transmission { tx, relay, relay_failures, y3, z }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagnostics {
    pub block: usize,
    pub bob_errors: usize,
    pub relay_failures: usize,
    pub relay_word_errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Fraction of message blocks where Bob's message estimate was wrong.
    pub bob_block_error_rate: f64,
    pub relay_failure_rate: f64,
    pub equivocation: Option<EquivocationEstimate>,
    pub per_block: Vec<BlockDiagnostics>,
    pub elapsed_seconds: f64,
    pub config: SimConfig,
    pub quantized: QuantizedRates,
}

struct TrialOutcome {
    bob_errors: Vec<bool>,
    relay_failures: Vec<bool>,
    relay_word_errors: Vec<bool>,
}

fn run_trial(joint: &JointDistribution, design: &InputDesign, laws: &SchemeLaws, channel: &ChannelSampler, cfg: &SimConfig, trial: u64) -> Result<TrialOutcome> {
    let cb_seed = stream_key(&[cfg.seed, TRIAL_CODEBOOK, trial]);
    let cb = codebook::generate(joint, &design.p_x1, &design.p_x2, cfg.quantized(), cfg.blocks, cb_seed)?;
    let mut rng = keyed_rng(&[cfg.seed, TRIAL_STREAM, trial]);
    let t = transmit(&cb, laws, channel, &mut rng);
    let rand_count = cb.rates().rand_count();
    let mut bob_errors = Vec::with_capacity(cfg.blocks - 1);
    let mut relay_word_errors = Vec::with_capacity(cfg.blocks - 1);
    let mut l_hat = 0;
    for b in 0..cfg.blocks - 1 {
        relay_word_errors.push(l_hat != t.relay[b]);
        match decode_block(&cb, laws, b, l_hat, &t.y3[b], &t.y3[b + 1]) {
            Some((m, next)) => {
                bob_errors.push(m / rand_count != t.tx[b] / rand_count);
                l_hat = next;
            }
            None => {
                bob_errors.push(true);
                l_hat = 0;
            }
        }
    }
    Ok(TrialOutcome { bob_errors, relay_failures: t.relay_failures, relay_word_errors })
}

#[cfg(feature = "parallel")]
pub(crate) fn map_trials<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n as u64).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_trials<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n as u64).map(f).collect()
}

/// Monte Carlo run of the whole scheme. Each trial draws fresh codebooks,
/// messages and channel noise from streams keyed by `(seed, trial)`.
pub fn simulate_blocks(spec: &ChannelSpec, design: &InputDesign, cfg: &SimConfig) -> Result<SimResult> {
    #[cfg(not(target_arch = "wasm32"))]
    let t0 = std::time::Instant::now();
    let joint = check_inputs(spec, design, cfg)?;
    let laws = SchemeLaws::new(&joint, cfg.eps_typ)?;
    let channel = ChannelSampler::new(spec);

    let outcomes: Vec<TrialOutcome> =
        map_trials(cfg.trials, |t| run_trial(&joint, design, &laws, &channel, cfg, t)).into_iter().collect::<Result<_>>()?;

    let msg_blocks = cfg.blocks - 1;
    let mut per_block: Vec<BlockDiagnostics> = (0..msg_blocks)
        .map(|block| BlockDiagnostics { block, bob_errors: 0, relay_failures: 0, relay_word_errors: 0 })
        .collect();
    for o in &outcomes {
        for (b, d) in per_block.iter_mut().enumerate() {
            d.bob_errors += o.bob_errors[b] as usize;
            d.relay_failures += o.relay_failures[b] as usize;
            d.relay_word_errors += o.relay_word_errors[b] as usize;
        }
    }
    let total = (cfg.trials * msg_blocks) as f64;
    let bob_block_error_rate = per_block.iter().map(|d| d.bob_errors).sum::<usize>() as f64 / total;
    let relay_failure_rate = per_block.iter().map(|d| d.relay_failures).sum::<usize>() as f64 / total;

    let equivocation = match cfg.equivocation {
        EquivocationMode::Off => None,
        EquivocationMode::ExactMicro => Some(exact_equivocation(spec, design, cfg)?),
    };
    #[cfg(not(target_arch = "wasm32"))]
    let elapsed_seconds = t0.elapsed().as_secs_f64();
    #[cfg(target_arch = "wasm32")]
    let elapsed_seconds = 0.0;
    Ok(SimResult {
        bob_block_error_rate,
        relay_failure_rate,
        equivocation,
        per_block,
        elapsed_seconds,
        config: *cfg,
        quantized: cfg.quantized(),
    })
}
