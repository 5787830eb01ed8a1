//! Exact eavesdropper equivocation on micro instances.
//!
//! For a fixed set of codebooks, Eve's posterior over the message tuple is
//! computed exactly by summing over every transmitter index tuple and every
//! relay observation sequence (the relay path is a deterministic function of
//! its observations). The conditional entropy is then averaged over sampled
//! eavesdropper outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{entropy_bits, unflatten, ChannelSpec, InputDesign};

use super::codebook::{self, keyed_rng, BlockCodebooks};
use super::{check_inputs, map_trials, relay_encode, transmit, ChannelSampler, SchemeLaws, SimConfig, EVE_STREAM};

/// Relay observation sequences enumerated per run.
const MAX_RELAY_SEQUENCES: usize = 1 << 20;
/// Index tuples times relay sequences.
const MAX_STATES: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivocationEstimate {
    /// Sample mean of `H(W | Z)` in bits over the observed blocks.
    pub bits: f64,
    pub stderr: f64,
    pub samples: usize,
    /// `(B - 1) * ceil(n r1)`, the message entropy.
    pub max_bits: f64,
}

/// `H(W^{B-1} | Z^B)` with Eve observing every block.
pub fn exact_equivocation(spec: &ChannelSpec, design: &InputDesign, cfg: &SimConfig) -> Result<EquivocationEstimate> {
    exact_equivocation_observed(spec, design, cfg, cfg.blocks)
}

/// Same, with Eve observing only the first `observed` blocks.
pub fn exact_equivocation_observed(
    spec: &ChannelSpec,
    design: &InputDesign,
    cfg: &SimConfig,
    observed: usize,
) -> Result<EquivocationEstimate> {
    let joint = check_inputs(spec, design, cfg)?;
    if observed > cfg.blocks {
        return Err(Error::Config(format!("cannot observe {observed} of {} blocks", cfg.blocks)));
    }
    if cfg.eve_samples == 0 {
        return Err(Error::Config("exact equivocation needs at least one eavesdropper sample".into()));
    }
    let a = spec.alphabets();
    let rates = cfg.quantized();
    let n = cfg.n;
    let msg_blocks = cfg.blocks - 1;
    let too_big = || {
        Error::Config(format!(
            "exact equivocation state space too large for n={n}, B={}; use smaller n or fewer blocks",
            cfg.blocks
        ))
    };
    let y2_words = (a.y2 as u128).checked_pow(n as u32).ok_or_else(too_big)?;
    let y2_total = y2_words.checked_pow(msg_blocks as u32).ok_or_else(too_big)?;
    let tuples = (rates.tx_count() as u128).checked_pow(msg_blocks as u32).ok_or_else(too_big)?;
    if y2_total > MAX_RELAY_SEQUENCES as u128 || tuples.saturating_mul(y2_total) > MAX_STATES as u128 {
        return Err(too_big());
    }
    let y2_words = y2_words as usize;

    let cb = codebook::generate(&joint, &design.p_x1, &design.p_x2, rates, cfg.blocks, cfg.seed)?;
    let laws = SchemeLaws::new(&joint, cfg.eps_typ)?;
    let channel = ChannelSampler::new(spec);
    let model = EveModel::new(spec, &cb, &laws, y2_words);

    let values: Vec<f64> = map_trials(cfg.eve_samples, |s| {
        let mut rng = keyed_rng(&[cfg.seed, EVE_STREAM, s]);
        let t = transmit(&cb, &laws, &channel, &mut rng);
        model.conditional_entropy(&t.z, observed)
    });
    let samples = values.len();
    let mean = values.iter().sum::<f64>() / samples as f64;
    let stderr = if samples > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        (var / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(EquivocationEstimate { bits: mean, stderr, samples, max_bits: (msg_blocks * rates.msg as usize) as f64 })
}

struct EveModel<'a> {
    cb: &'a BlockCodebooks,
    /// `P(y2, z | x1, x2)` as `[x1][x2][y2][z]`.
    p_y2z: Vec<f64>,
    /// `P(z | x1, x2)` as `[x1][x2][z]`.
    p_z: Vec<f64>,
    dims: [usize; 4],
    /// Relay word after block `b` from word `l` and observation index.
    next: Vec<Vec<Vec<usize>>>,
    y2_seqs: Vec<Vec<u16>>,
}

impl<'a> EveModel<'a> {
    fn new(spec: &ChannelSpec, cb: &'a BlockCodebooks, laws: &SchemeLaws, y2_words: usize) -> Self {
        let a = spec.alphabets();
        let mut p_y2z = vec![0.0; a.x1 * a.x2 * a.y2 * a.z];
        let mut p_z = vec![0.0; a.x1 * a.x2 * a.z];
        for x1 in 0..a.x1 {
            for x2 in 0..a.x2 {
                for y2 in 0..a.y2 {
                    for y3 in 0..a.y3 {
                        for z in 0..a.z {
                            let p = spec.prob(x1, x2, y2, y3, z);
                            p_y2z[((x1 * a.x2 + x2) * a.y2 + y2) * a.z + z] += p;
                            p_z[(x1 * a.x2 + x2) * a.z + z] += p;
                        }
                    }
                }
            }
        }
        let n = cb.n();
        let sizes = vec![a.y2; n];
        let mut sym = vec![0usize; n];
        let y2_seqs: Vec<Vec<u16>> = (0..y2_words)
            .map(|i| {
                unflatten(i, &sizes, &mut sym);
                sym.iter().map(|&s| s as u16).collect()
            })
            .collect();
        let relay_count = cb.rates().relay_count();
        let next = (0..cb.block_count() - 1)
            .map(|b| {
                (0..relay_count)
                    .map(|l| y2_seqs.iter().map(|y2| relay_encode(cb, laws, b, l, y2).next).collect())
                    .collect()
            })
            .collect();
        EveModel { cb, p_y2z, p_z, dims: [a.x1, a.x2, a.y2, a.z], next, y2_seqs }
    }

    /// Transition weights `T[m][l][l'] = sum over y2 leading from l to l' of P(y2, z | x1(m), x2(l))`,
    /// scaled by a common constant.
    fn block_factor(&self, b: usize, z: &[u16]) -> Vec<Vec<Vec<f64>>> {
        let [_, nx2, ny2, nz] = self.dims;
        let rates = self.cb.rates();
        let mut t = vec![vec![vec![0.0; rates.relay_count()]; rates.relay_count()]; rates.tx_count()];
        let mut peak = 0.0f64;
        for (m, row) in t.iter_mut().enumerate() {
            let x1 = self.cb.tx_by_index(b, m);
            for (l, cell) in row.iter_mut().enumerate() {
                let x2 = self.cb.relay_word(b, l);
                for (yi, y2) in self.y2_seqs.iter().enumerate() {
                    let mut p = 1.0;
                    for i in 0..z.len() {
                        p *= self.p_y2z[((x1[i] as usize * nx2 + x2[i] as usize) * ny2 + y2[i] as usize) * nz + z[i] as usize];
                        if p == 0.0 {
                            break;
                        }
                    }
                    cell[self.next[b][l][yi]] += p;
                }
                peak = peak.max(cell.iter().copied().fold(0.0, f64::max));
            }
        }
        if peak > 0.0 {
            t.iter_mut().flatten().flatten().for_each(|p| *p /= peak);
        }
        t
    }

    /// `P(z | x1 = fixed word, x2(l))` for the final block, scaled.
    fn final_factor(&self, z: &[u16]) -> Vec<f64> {
        let [_, nx2, _, nz] = self.dims;
        let b = self.cb.block_count() - 1;
        let x1 = self.cb.tx_by_index(b, 0);
        let mut f: Vec<f64> = (0..self.cb.rates().relay_count())
            .map(|l| {
                let x2 = self.cb.relay_word(b, l);
                (0..z.len()).map(|i| self.p_z[(x1[i] as usize * nx2 + x2[i] as usize) * nz + z[i] as usize]).product()
            })
            .collect();
        let peak = f.iter().copied().fold(0.0, f64::max);
        if peak > 0.0 {
            f.iter_mut().for_each(|p| *p /= peak);
        }
        f
    }

    /// `H(W | z of the first `observed` blocks)` for one sampled output.
    fn conditional_entropy(&self, z: &[Vec<u16>], observed: usize) -> f64 {
        let rates = self.cb.rates();
        let blocks = self.cb.block_count();
        let msg_blocks = blocks - 1;
        // Messages in unobserved-only blocks stay uniform.
        let depth = observed.min(msg_blocks);
        let factors: Vec<_> = (0..depth).map(|b| self.block_factor(b, &z[b])).collect();
        let last = (observed == blocks).then(|| self.final_factor(&z[blocks - 1]));

        let msg_count = rates.msg_count();
        let rand_count = rates.rand_count();
        let mut posterior = vec![0.0; msg_count.pow(depth as u32)];
        let mut alpha = vec![0.0; rates.relay_count()];
        alpha[0] = 1.0;
        self.accumulate(&factors, last.as_deref(), 0, &alpha, 0, msg_count, rand_count, &mut posterior);
        let total: f64 = posterior.iter().sum();
        let known = if total > 0.0 {
            posterior.iter_mut().for_each(|p| *p /= total);
            entropy_bits(&posterior)
        } else {
            0.0
        };
        known + ((msg_blocks - depth) * rates.msg as usize) as f64
    }

    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        factors: &[Vec<Vec<Vec<f64>>>],
        last: Option<&[f64]>,
        depth: usize,
        alpha: &[f64],
        w_prefix: usize,
        msg_count: usize,
        rand_count: usize,
        posterior: &mut [f64],
    ) {
        if depth == factors.len() {
            let weight: f64 = match (last, factors.len() == self.cb.block_count() - 1) {
                (Some(f), true) => alpha.iter().zip(f).map(|(a, f)| a * f).sum(),
                _ => alpha.iter().sum(),
            };
            posterior[w_prefix] += weight;
            return;
        }
        let mut next = vec![0.0; alpha.len()];
        for (m, row) in factors[depth].iter().enumerate() {
            next.iter_mut().for_each(|p| *p = 0.0);
            for (l, &a) in alpha.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (lp, &t) in row[l].iter().enumerate() {
                    next[lp] += a * t;
                }
            }
            let w = m / rand_count;
            self.accumulate(factors, last, depth + 1, &next, w_prefix * msg_count + w, msg_count, rand_count, posterior);
        }
    }
}
