//! Conditional robust typicality.
//!
//! A tested word tuple is typical given the conditioning words when, within
//! every conditioning class `g` that occurs `c_g` times, each tested symbol
//! `t` occurs `N(g, t)` times with
//!
//! ```text
//! |N(g, t) - c_g P(t | g)| <= eps * c_g * P(t | g)
//! ```
//!
//! or, for `eps > 0`, with `N(g, t)` a nearest integer to `c_g P(t | g)`.
//! The second clause keeps rare symbol pairs from making every realistic word
//! atypical at small blocklengths; pairs of probability zero still have to be
//! absent. A class whose conditioning event has no mass is atypical.

use crate::error::Result;
use crate::prob::{ConditionalLaw, JointDistribution, VarSet};

#[derive(Debug, Clone)]
pub struct TypicalityTest {
    law: ConditionalLaw,
    eps: f64,
}

impl TypicalityTest {
    pub fn new(joint: &JointDistribution, tested: VarSet, given: VarSet, eps: f64) -> Result<Self> {
        Ok(TypicalityTest { law: joint.conditional(tested, given)?, eps })
    }

    pub fn law(&self) -> &ConditionalLaw {
        &self.law
    }

    /// Per-position class index of the conditioning words, or `None` when a
    /// class with no mass occurs.
    pub fn classes(&self, given: &[&[u16]]) -> Option<Vec<u32>> {
        let n = given.first().map_or(0, |w| w.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let g = given.iter().zip(&self.law.given_sizes).fold(0usize, |acc, (w, &s)| acc * s + w[i] as usize);
            if !self.law.defined(g) {
                return None;
            }
            out.push(g as u32);
        }
        Some(out)
    }

    /// Whether the tested words are typical given precomputed classes.
    /// `scratch` is reused between calls to avoid allocation.
    pub fn check_classes(&self, classes: &[u32], tested: &[&[u16]], scratch: &mut Vec<u32>) -> bool {
        let t_count = self.law.tested_count();
        let g_count = self.law.given_count();
        scratch.clear();
        scratch.resize(g_count * (t_count + 1), 0);
        for (i, &g) in classes.iter().enumerate() {
            let t = tested.iter().zip(&self.law.tested_sizes).fold(0usize, |acc, (w, &s)| acc * s + w[i] as usize);
            let row = g as usize * (t_count + 1);
            scratch[row] += 1;
            scratch[row + 1 + t] += 1;
        }
        for g in 0..g_count {
            let row = g * (t_count + 1);
            let c = scratch[row] as f64;
            if c == 0.0 {
                continue;
            }
            let probs = self.law.row(g);
            for (t, &p) in probs.iter().enumerate() {
                let expected = c * p;
                let dev = (scratch[row + 1 + t] as f64 - expected).abs();
                let ok = dev <= self.eps * expected || (self.eps > 0.0 && dev <= 0.5);
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    pub fn check(&self, given: &[&[u16]], tested: &[&[u16]]) -> bool {
        match self.classes(given) {
            Some(c) => self.check_classes(&c, tested, &mut Vec::new()),
            None => false,
        }
    }
}
