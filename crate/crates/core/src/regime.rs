//! Regime classification and secrecy-rate selection.
//!
//! An operating point of the scheme is the pair `(r2, r_hat)`: the relay
//! codebook rate and the compression codebook rate, so that `r_hat - r2` is
//! the Wyner-Ziv bin rate. For a given [`InfoQuantities`] record this module
//!
//! * sorts the record into one of nine leaves by a chain of strict
//!   inequalities ([`classify`]),
//! * returns the closed-form limit choice of each leaf ([`case_rate`]),
//! * scores arbitrary operating points from Bob's decoding constraints and
//!   Eve's best decoding strategy ([`evaluate_rate_point`]),
//! * and brute-forces the best operating point as an independent check
//!   ([`oracle_max_rate`]).
//!
//! All rates are in bits per channel use.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantities::InfoQuantities;

/// Default tolerance for strict inequalities.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest oracle grid accepted.
pub const MAX_ORACLE_POINTS: f64 = 1e8;

/// Allowed violation of the per-block equivocation bound before we call it a bug.
pub const EQUIVOCATION_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Leaf {
    #[serde(rename = "C1a_i")]
    C1aI,
    #[serde(rename = "C1a_ii")]
    C1aII,
    #[serde(rename = "C1b_i")]
    C1bI,
    #[serde(rename = "C1b_ii")]
    C1bII,
    #[serde(rename = "C2a_i")]
    C2aI,
    #[serde(rename = "C2a_ii")]
    C2aII,
    #[serde(rename = "C2b_i")]
    C2bI,
    #[serde(rename = "C2b_ii_A")]
    C2bIIA,
    #[serde(rename = "C2b_ii_B")]
    C2bIIB,
}

impl Leaf {
    pub const ALL: [Leaf; 9] = [
        Leaf::C1aI,
        Leaf::C1aII,
        Leaf::C1bI,
        Leaf::C1bII,
        Leaf::C2aI,
        Leaf::C2aII,
        Leaf::C2bI,
        Leaf::C2bIIA,
        Leaf::C2bIIB,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Leaf::C1aI => "C1a_i",
            Leaf::C1aII => "C1a_ii",
            Leaf::C1bI => "C1b_i",
            Leaf::C1bII => "C1b_ii",
            Leaf::C2aI => "C2a_i",
            Leaf::C2aII => "C2a_ii",
            Leaf::C2bI => "C2b_i",
            Leaf::C2bIIA => "C2b_ii_A",
            Leaf::C2bIIB => "C2b_ii_B",
        }
    }

    pub fn is_case1(self) -> bool {
        matches!(self, Leaf::C1aI | Leaf::C1aII | Leaf::C1bI | Leaf::C1bII)
    }
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Leaf {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Leaf::ALL
            .into_iter()
            .find(|l| l.label() == s)
            .ok_or_else(|| Error::Usage(format!("unknown leaf `{s}`")))
    }
}

/// A leaf returned by [`classify`]; `tie` is set when any defining
/// inequality holds only within the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeCase {
    pub leaf: Leaf,
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BobStrategy {
    /// Two-block window decoding of the message and compression index.
    #[serde(rename = "CF_SlidingWindow")]
    CfSlidingWindow,
    /// Decode the relay word from one block, then the message given it.
    #[serde(rename = "Direct_X2Decoded")]
    DirectX2Decoded,
}

impl BobStrategy {
    pub fn label(self) -> &'static str {
        match self {
            BobStrategy::CfSlidingWindow => "CF_SlidingWindow",
            BobStrategy::DirectX2Decoded => "Direct_X2Decoded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EveStrategy {
    UniqueX2,
    NonUniqueX2,
    X2AsNoise,
}

impl EveStrategy {
    pub fn label(self) -> &'static str {
        match self {
            EveStrategy::UniqueX2 => "UniqueX2",
            EveStrategy::NonUniqueX2 => "NonUniqueX2",
            EveStrategy::X2AsNoise => "X2AsNoise",
        }
    }
}

/// An operating point together with the strategies it induces and the
/// resulting secrecy rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateChoice {
    pub r2: f64,
    pub r_hat: f64,
    pub wz_bin_rate: f64,
    /// `None` when Bob has no decodable strategy at this point.
    pub bob: Option<BobStrategy>,
    pub eve: EveStrategy,
    /// Bob's achievable `r1 + r_tilde1`.
    pub sum_rate: f64,
    /// Rate of the randomization inside each message bin.
    pub r_tilde1: f64,
    pub r1: f64,
    pub secrecy_valid: bool,
    /// Margin used for strict inequalities (0 for limit choices).
    pub slack: f64,
    /// `r_tilde1` minus the per-block bound on Eve's information; nonnegative
    /// whenever Eve's rate accounting is sound.
    pub equivocation_margin: f64,
    /// For C1b_i: the rate at the literal limit `r_hat -> max{I(X2;Z|X1), I(X2;Y3)}`.
    pub literal_r1: Option<f64>,
}

struct Chain {
    tol: f64,
    tie: bool,
}

impl Chain {
    fn new(tol: f64) -> Self {
        Chain { tol, tie: false }
    }

    /// `lhs < rhs`, accepted with margin `> -tol`.
    fn lt(&mut self, lhs: f64, rhs: f64) -> bool {
        let d = rhs - lhs;
        if d.abs() <= self.tol {
            self.tie = true;
            true
        } else {
            d > 0.0
        }
    }
}

fn leaf_holds(q: &InfoQuantities, leaf: Leaf, tol: f64) -> Option<bool> {
    let c = q.i_x2_y3;
    let b = q.i_yhat_y3_x2;
    let eve_proxy = q.i_x2_z + q.wz_eve;
    let bob_proxy = c + q.wz_bob;
    let mut ch = Chain::new(tol);
    let ok = match leaf {
        Leaf::C1aI => ch.lt(eve_proxy, bob_proxy) && ch.lt(eve_proxy, c + b) && ch.lt(q.i_x2_z_x1, c + b),
        Leaf::C1aII => ch.lt(eve_proxy, bob_proxy) && ch.lt(eve_proxy, c + b) && ch.lt(c + b, q.i_x2_z_x1),
        Leaf::C1bI => ch.lt(eve_proxy, bob_proxy) && ch.lt(c + b, eve_proxy) && ch.lt(q.i_x2_z_x1, bob_proxy),
        Leaf::C1bII => ch.lt(eve_proxy, bob_proxy) && ch.lt(c + b, eve_proxy) && ch.lt(bob_proxy, q.i_x2_z_x1),
        Leaf::C2aI => ch.lt(bob_proxy, eve_proxy) && ch.lt(q.wz_eve, q.wz_bob) && ch.lt(q.wz_eve, b),
        Leaf::C2aII => ch.lt(bob_proxy, eve_proxy) && ch.lt(q.wz_eve, q.wz_bob) && ch.lt(b, q.wz_eve),
        Leaf::C2bI => ch.lt(bob_proxy, eve_proxy) && ch.lt(q.wz_bob, q.wz_eve) && ch.lt(c, q.i_x2_z),
        Leaf::C2bIIA => {
            ch.lt(bob_proxy, eve_proxy) && ch.lt(q.wz_bob, q.wz_eve) && ch.lt(q.i_x2_z, c) && ch.lt(c, q.i_x2_z_x1)
        }
        Leaf::C2bIIB => {
            ch.lt(bob_proxy, eve_proxy) && ch.lt(q.wz_bob, q.wz_eve) && ch.lt(q.i_x2_z, c) && ch.lt(q.i_x2_z_x1, c)
        }
    };
    ok.then_some(ch.tie)
}

/// Returns every leaf whose defining chain holds within `tol`. Off
/// boundaries this is exactly one leaf.
pub fn classify(q: &InfoQuantities, tol: f64) -> Result<Vec<RegimeCase>> {
    q.validate().map_err(|e| Error::Usage(format!("inconsistent information record: {e}")))?;
    Ok(Leaf::ALL
        .into_iter()
        .filter_map(|leaf| leaf_holds(q, leaf, tol).map(|tie| RegimeCase { leaf, tie }))
        .collect())
}

/// Eve's rate for resolving the transmitter's bin once the message is known,
/// given the relay codebook rate `r2`. Near a threshold the larger of the
/// competing rates is returned.
pub fn eve_rate(q: &InfoQuantities, r2: f64, tol: f64) -> (EveStrategy, f64) {
    let mut best: Option<(EveStrategy, f64)> = None;
    let mut offer = |s: EveStrategy, r: f64| {
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((s, r));
        }
    };
    if r2 < q.i_x2_z + tol {
        offer(EveStrategy::UniqueX2, q.i_x1_z_x2);
    }
    if r2 > q.i_x2_z - tol && r2 < q.i_x2_z_x1 + tol {
        offer(EveStrategy::NonUniqueX2, q.i_x1x2_z - r2);
    }
    if r2 > q.i_x2_z_x1 - tol {
        offer(EveStrategy::X2AsNoise, q.i_x1_z);
    }
    best.unwrap_or((EveStrategy::X2AsNoise, q.i_x1_z))
}

/// Bob can resolve the relay word from a single block. A zero-rate relay
/// codebook has one word and needs no decoding.
fn relay_word_decodable(q: &InfoQuantities, r2: f64, tol: f64) -> bool {
    r2 <= 0.0 || r2 < q.i_x2_y3 - tol
}

/// Bob's best decoding strategy and the largest `r1 + r_tilde1` it
/// supports, or `None` when neither strategy applies.
pub fn bob_sum_rate(q: &InfoQuantities, r2: f64, r_hat: f64, tol: f64) -> Option<(BobStrategy, f64)> {
    let a = q.i_x1_yhat_y3_x2;
    let b = q.i_yhat_y3_x2;
    let decodable = relay_word_decodable(q, r2, tol);

    let mut best: Option<(BobStrategy, f64)> = None;
    if r_hat < q.i_x2_y3 + q.wz_bob - tol || decodable {
        let s = a.min(a + b + q.i_x2_y3 - r_hat).min(a + b + r2 - r_hat);
        best = Some((BobStrategy::CfSlidingWindow, s));
    }
    if decodable {
        let s = q.i_x1_y3_x2;
        if best.is_none_or(|(_, cf)| s > cf) {
            best = Some((BobStrategy::DirectX2Decoded, s));
        }
    }
    best.filter(|&(_, s)| s > 0.0)
}

/// `r_tilde1 - (min{r2, I(X2;Z)} + I(X1;Z|X2) - min{r2, I(X2;Z|X1)})`.
///
/// The bracket is the per-block bound on what Eve learns beyond the
/// transmitter's randomization; a negative value means the bin rate is too
/// small to hide the message.
pub fn equivocation_margin(q: &InfoQuantities, r2: f64, r_tilde1: f64) -> f64 {
    r_tilde1 - (r2.min(q.i_x2_z) + q.i_x1_z_x2 - r2.min(q.i_x2_z_x1))
}

/// Errors if a choice under-randomizes against Eve.
pub fn check_equivocation_bound(choice: &RateChoice) -> Result<()> {
    if choice.equivocation_margin < -EQUIVOCATION_CHECK_TOL {
        return Err(Error::Internal(format!(
            "Eve rate accounting unsound at (r2={}, r_hat={}): margin {:.3e}",
            choice.r2, choice.r_hat, choice.equivocation_margin
        )));
    }
    Ok(())
}

/// Scores an arbitrary operating point `0 <= r2 <= r_hat`.
///
/// The point keeps the message secret if either Eve cannot resolve the relay
/// word while the compression rate exceeds her proxy constraint, or the
/// Wyner-Ziv bins are too large for her to resolve the compression index.
pub fn evaluate_rate_point(q: &InfoQuantities, r2: f64, r_hat: f64, tol: f64) -> RateChoice {
    let (eve, r_tilde1) = eve_rate(q, r2, tol);
    let bob = bob_sum_rate(q, r2, r_hat, tol);
    let mut choice = RateChoice {
        r2,
        r_hat,
        wz_bin_rate: r_hat - r2,
        bob: bob.map(|(s, _)| s),
        eve,
        sum_rate: bob.map_or(0.0, |(_, s)| s),
        r_tilde1,
        r1: 0.0,
        secrecy_valid: false,
        slack: tol,
        equivocation_margin: equivocation_margin(q, r2, r_tilde1),
        literal_r1: None,
    };
    if !(r2 >= 0.0 && r_hat >= r2) {
        return choice;
    }
    let relay_hidden = r2 > q.i_x2_z + tol && r_hat > q.i_x2_z + q.wz_eve + tol;
    let index_hidden = r_hat - r2 > q.wz_eve + tol;
    if !(relay_hidden || index_hidden) {
        return choice;
    }
    choice.secrecy_valid = true;
    if let Some((_, s)) = bob {
        choice.r1 = (s - r_tilde1).max(0.0);
    }
    debug_assert!(
        choice.equivocation_margin >= -EQUIVOCATION_CHECK_TOL || q.validate().is_err(),
        "equivocation margin {} at ({r2}, {r_hat})",
        choice.equivocation_margin
    );
    choice
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Closed-form limit choice (`epsilon -> 0`) and secrecy rate of one leaf.
///
/// For C1b_i the compression rate is clamped from below at
/// `I(X2;Z) + WZ^Eve` so that it stays inside the Case-1 interval; the
/// unclamped value is reported in [`RateChoice::literal_r1`].
pub fn case_rate(q: &InfoQuantities, leaf: Leaf, tol: f64) -> Result<RateChoice> {
    if !classify(q, tol)?.iter().any(|c| c.leaf == leaf) {
        return Err(Error::Usage(format!("record does not fall in leaf {leaf}")));
    }
    let a = q.i_x1_yhat_y3_x2;
    let b = q.i_yhat_y3_x2;
    let c = q.i_x2_y3;
    use BobStrategy::*;
    use EveStrategy::*;

    let (r2, r_hat, bob, eve, r_tilde1, sum_rate, literal) = match leaf {
        Leaf::C1aI => (c.max(q.i_x2_z_x1), c + b, CfSlidingWindow, X2AsNoise, q.i_x1_z, a, None),
        Leaf::C1aII => {
            let r = c + b;
            (r, r, CfSlidingWindow, NonUniqueX2, q.i_x1x2_z - r, a, None)
        }
        Leaf::C1bI => {
            let lit = q.i_x2_z_x1.max(c);
            let r = lit.max(q.i_x2_z + q.wz_eve);
            let literal = pos(a + c + b - lit - q.i_x1_z);
            (r, r, CfSlidingWindow, X2AsNoise, q.i_x1_z, a + c + b - r, Some(literal))
        }
        Leaf::C1bII => {
            let r = q.i_x2_z + q.wz_eve;
            (r, r, CfSlidingWindow, NonUniqueX2, q.i_x1x2_z - r, a + c + b - r, None)
        }
        Leaf::C2aI => {
            let m = c2a_i_margin(q).max(0.0);
            let r2 = c + m / 2.0;
            (r2, r2 + q.wz_eve + m / 4.0, CfSlidingWindow, UniqueX2, q.i_x1_z_x2, a, None)
        }
        Leaf::C2aII => {
            (c, c + q.wz_eve, CfSlidingWindow, UniqueX2, q.i_x1_z_x2, q.i_x1_y3_x2 + q.wz_bob - q.wz_eve, None)
        }
        Leaf::C2bI => (c, q.i_x2_z + q.wz_eve, DirectX2Decoded, UniqueX2, q.i_x1_z_x2, q.i_x1_y3_x2, None),
        Leaf::C2bIIA => (c, c + q.wz_eve, DirectX2Decoded, NonUniqueX2, q.i_x1x2_z - c, q.i_x1_y3_x2, None),
        Leaf::C2bIIB => {
            let r2 = (q.i_x2_z_x1 + c) / 2.0;
            (r2, r2 + q.wz_eve, DirectX2Decoded, X2AsNoise, q.i_x1_z, q.i_x1_y3_x2, None)
        }
    };
    Ok(RateChoice {
        r2,
        r_hat,
        wz_bin_rate: r_hat - r2,
        bob: Some(bob),
        eve,
        sum_rate,
        r_tilde1,
        r1: pos(sum_rate - r_tilde1),
        secrecy_valid: true,
        slack: 0.0,
        equivocation_margin: equivocation_margin(q, r2, r_tilde1),
        literal_r1: literal,
    })
}

/// Width of the C2a_i feasible region: the canonical interior witness sits
/// at fractions of it.
fn c2a_i_margin(q: &InfoQuantities) -> f64 {
    let c = q.i_x2_y3;
    (q.i_x2_z - c).min(q.i_yhat_y3_x2 - q.wz_eve).min((c + q.i_yhat_y3_x2) - (c + q.wz_eve))
}

/// A strictly feasible operating point `delta` away from the leaf's limit
/// choice, on the side the leaf's inequalities require.
pub fn interior_point(q: &InfoQuantities, leaf: Leaf, delta: f64) -> (f64, f64) {
    let b = q.i_yhat_y3_x2;
    let c = q.i_x2_y3;
    let (r2, r_hat) = match leaf {
        Leaf::C1aI => (c.max(q.i_x2_z_x1) + delta, c + b - delta),
        Leaf::C1aII => (c + b - 2.0 * delta, c + b - delta),
        Leaf::C1bI => {
            let r = q.i_x2_z_x1.max(c).max(q.i_x2_z + q.wz_eve) + delta;
            (r, r)
        }
        Leaf::C1bII => {
            let r = q.i_x2_z + q.wz_eve + delta;
            (r, r)
        }
        Leaf::C2aI => {
            let m = c2a_i_margin(q).max(0.0);
            (c + m / 2.0, c + m / 2.0 + q.wz_eve + m / 4.0)
        }
        Leaf::C2aII => (c + delta, c + q.wz_eve + 2.0 * delta),
        Leaf::C2bI => ((c - delta).max(0.0), q.i_x2_z + q.wz_eve + delta),
        Leaf::C2bIIA => {
            let r2 = (c - delta).max(0.0);
            (r2, r2 + q.wz_eve + 2.0 * delta)
        }
        Leaf::C2bIIB => {
            let r2 = (q.i_x2_z_x1 + c) / 2.0;
            (r2, r2 + q.wz_eve + delta)
        }
    };
    let r2 = r2.max(0.0);
    (r2, r_hat.max(r2))
}

/// Highest closed-form rate over the leaves the record falls in; ties go to
/// the earlier leaf.
pub fn best_case_rate(q: &InfoQuantities, tol: f64) -> Result<(RegimeCase, RateChoice)> {
    let mut best: Option<(RegimeCase, RateChoice)> = None;
    for case in classify(q, tol)? {
        let choice = case_rate(q, case.leaf, tol)?;
        if best.as_ref().is_none_or(|(_, b)| choice.r1 > b.r1) {
            best = Some((case, choice));
        }
    }
    best.ok_or_else(|| Error::Internal("no regime leaf matched the record".into()))
}

/// Brute-force search configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub step: f64,
    /// Defaults to `[0, I(X1,X2;Z) + WZ^Eve + WZ^Bob + 1]`.
    pub r2_range: Option<(f64, f64)>,
    pub r_hat_range: Option<(f64, f64)>,
    pub tol: f64,
}

impl OracleConfig {
    pub fn new(step: f64) -> Self {
        OracleConfig { step, r2_range: None, r_hat_range: None, tol: DEFAULT_TOL }
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig::new(0.01)
    }
}

/// Better of two points: higher `r1`, then lexicographically smaller `(r2, r_hat)`.
fn prefer(a: RateChoice, b: RateChoice) -> RateChoice {
    match a.r1.partial_cmp(&b.r1) {
        Some(Ordering::Greater) => a,
        Some(Ordering::Less) => b,
        _ => {
            let ka = (a.r2, a.r_hat);
            let kb = (b.r2, b.r_hat);
            if ka.partial_cmp(&kb) == Some(Ordering::Greater) {
                b
            } else {
                a
            }
        }
    }
}

fn critical_r2(q: &InfoQuantities, tol: f64) -> Vec<f64> {
    let bps = breakpoints(q);
    let mut out = Vec::new();
    for i in 0..bps.len() {
        for j in i..bps.len() {
            let mid = 0.5 * (bps[i] + bps[j]);
            for off in [-3.0 * tol, 0.0, 3.0 * tol] {
                out.push((mid + off).max(0.0));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn critical_r_hat(q: &InfoQuantities, r2: f64, tol: f64) -> Vec<f64> {
    let mut base = breakpoints(q);
    base.extend([r2, r2 + q.wz_eve, r2 + q.wz_bob, r2 + q.i_yhat_y3_x2]);
    let mut out = Vec::new();
    for i in 0..base.len() {
        for j in i..base.len() {
            let mid = 0.5 * (base[i] + base[j]);
            for off in [-3.0 * tol, 0.0, 3.0 * tol] {
                let h = mid + off;
                if h >= r2 {
                    out.push(h);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Thresholds at which the score of an operating point can change.
fn breakpoints(q: &InfoQuantities) -> Vec<f64> {
    let c = q.i_x2_y3;
    vec![
        0.0,
        c,
        q.i_x2_z,
        q.i_x2_z_x1,
        q.i_yhat_y3_x2,
        q.wz_bob,
        q.wz_eve,
        c + q.i_yhat_y3_x2,
        c + q.wz_bob,
        q.i_x2_z + q.wz_eve,
    ]
}

/// Exhaustive search of [`evaluate_rate_point`] over a grid plus every
/// breakpoint combination (and its `±3 tol` neighbours).
pub fn oracle_max_rate(q: &InfoQuantities, cfg: &OracleConfig) -> Result<RateChoice> {
    q.validate().map_err(|e| Error::Usage(format!("inconsistent information record: {e}")))?;
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(Error::Config(format!("oracle grid step must be positive, got {}", cfg.step)));
    }
    let default_hi = q.i_x1x2_z + q.wz_eve + q.wz_bob + 1.0;
    let (r2_lo, r2_hi) = cfg.r2_range.unwrap_or((0.0, default_hi));
    let (h_lo, h_hi) = cfg.r_hat_range.unwrap_or((0.0, default_hi));
    if !(r2_lo >= 0.0 && r2_hi >= r2_lo && h_lo >= 0.0 && h_hi >= h_lo && r2_hi.is_finite() && h_hi.is_finite()) {
        return Err(Error::Config("oracle ranges must be finite, nonnegative and ordered".into()));
    }
    let n2 = ((r2_hi - r2_lo) / cfg.step).floor() + 1.0;
    let nh = ((h_hi - h_lo) / cfg.step).floor() + 1.0;
    if n2 * nh > MAX_ORACLE_POINTS {
        return Err(Error::Config(format!(
            "oracle grid has {:.3e} points, limit is {MAX_ORACLE_POINTS:.0e}",
            n2 * nh
        )));
    }
    let (n2, nh) = (n2 as usize, nh as usize);
    let tol = cfg.tol;

    let grid_row = |i: usize| -> Option<RateChoice> {
        let r2 = r2_lo + i as f64 * cfg.step;
        (0..nh)
            .map(|j| h_lo + j as f64 * cfg.step)
            .filter(|&h| h >= r2)
            .map(|h| evaluate_rate_point(q, r2, h, tol))
            .reduce(prefer)
    };
    let critical_row = |r2: f64| -> Option<RateChoice> {
        critical_r_hat(q, r2, tol).into_iter().map(|h| evaluate_rate_point(q, r2, h, tol)).reduce(prefer)
    };
    let crit = critical_r2(q, tol);

    #[cfg(feature = "parallel")]
    let (grid, critical) = {
        use rayon::prelude::*;
        (
            (0..n2).into_par_iter().filter_map(grid_row).reduce_with(prefer),
            crit.par_iter().filter_map(|&r| critical_row(r)).reduce_with(prefer),
        )
    };
    #[cfg(not(feature = "parallel"))]
    let (grid, critical) =
        ((0..n2).filter_map(grid_row).reduce(prefer), crit.iter().filter_map(|&r| critical_row(r)).reduce(prefer));

    [grid, critical]
        .into_iter()
        .flatten()
        .reduce(prefer)
        .ok_or_else(|| Error::Internal("oracle evaluated no points".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The hand-checked Case 1(a)(i) record.
    pub(crate) fn worked_example() -> InfoQuantities {
        InfoQuantities {
            i_x2_y3: 0.5,
            i_x2_z: 0.3,
            i_x2_z_x1: 0.4,
            i_yhat_y3_x2: 0.4,
            wz_bob: 0.6,
            wz_eve: 0.5,
            i_x1_yhat_y3_x2: 0.8,
            i_x1_y3_x2: 0.5,
            i_x1_z: 0.2,
            i_x1_z_x2: 0.3,
            i_x1x2_z: 0.6,
        }
    }

    fn leaves(q: &InfoQuantities) -> Vec<Leaf> {
        classify(q, DEFAULT_TOL).unwrap().into_iter().map(|c| c.leaf).collect()
    }

    #[test]
    fn worked_example_is_c1a_i() {
        let cases = classify(&worked_example(), DEFAULT_TOL).unwrap();
        assert_eq!(cases, vec![RegimeCase { leaf: Leaf::C1aI, tie: false }]);
    }

    #[test]
    fn degenerate_relay_ties_everywhere() {
        let q = InfoQuantities::degenerate_relay(0.7, 0.2);
        let cases = classify(&q, DEFAULT_TOL).unwrap();
        assert_eq!(cases.len(), Leaf::ALL.len());
        assert!(cases.iter().all(|c| c.tie));
        for c in cases {
            let r = case_rate(&q, c.leaf, DEFAULT_TOL).unwrap();
            assert!((r.r1 - 0.5).abs() < 1e-12, "{} -> {}", c.leaf, r.r1);
        }
    }

    #[test]
    fn constructed_c2a_i_record() {
        // Not realizable, but the classifier is a pure function of the record.
        let q = InfoQuantities {
            i_x2_y3: 0.1,
            i_x2_z: 0.8,
            i_x2_z_x1: 0.9,
            i_yhat_y3_x2: 0.5,
            wz_bob: 0.6,
            wz_eve: 0.2,
            i_x1_yhat_y3_x2: 0.9,
            i_x1_y3_x2: 0.8,
            i_x1_z: 0.1,
            i_x1_z_x2: 0.2,
            i_x1x2_z: 1.0,
        };
        assert_eq!(leaves(&q), vec![Leaf::C2aI]);
        let r = case_rate(&q, Leaf::C2aI, DEFAULT_TOL).unwrap();
        assert!((r.r1 - 0.7).abs() < 1e-12);
        let (r2, h) = interior_point(&q, Leaf::C2aI, 0.0);
        assert!(r2 > q.i_x2_y3 && r2 < q.i_x2_z);
        assert!(h - r2 > q.wz_eve && h < q.i_x2_y3 + q.i_yhat_y3_x2);
        let e = evaluate_rate_point(&q, r2, h, DEFAULT_TOL);
        assert!((e.r1 - r.r1).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_record_is_a_usage_error() {
        let mut q = worked_example();
        q.i_x1x2_z = 5.0;
        assert!(matches!(classify(&q, DEFAULT_TOL), Err(Error::Usage(_))));
    }

    #[test]
    fn eve_thresholds() {
        let q = worked_example();
        assert_eq!(eve_rate(&q, 0.5, DEFAULT_TOL), (EveStrategy::X2AsNoise, 0.2));
        let (s, r) = eve_rate(&q, 0.35, DEFAULT_TOL);
        assert_eq!(s, EveStrategy::NonUniqueX2);
        assert!((r - 0.25).abs() < 1e-15);
        assert_eq!(eve_rate(&q, 0.0, DEFAULT_TOL), (EveStrategy::UniqueX2, 0.3));
    }

    #[test]
    fn eve_takes_larger_rate_at_threshold() {
        let q = worked_example();
        // At r2 = I(X2;Z) both unique and nonunique decoding give I(X1;Z|X2).
        let (_, r) = eve_rate(&q, 0.3 + 0.5e-9, DEFAULT_TOL);
        assert!((r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bob_cf_on_worked_example() {
        let q = worked_example();
        let (s, rate) = bob_sum_rate(&q, 0.5, 0.9, DEFAULT_TOL).unwrap();
        assert_eq!(s, BobStrategy::CfSlidingWindow);
        assert!((rate - 0.8).abs() < 1e-12);
    }

    #[test]
    fn bob_degenerate_relay() {
        let q = InfoQuantities::degenerate_relay(0.7, 0.2);
        let (_, s) = bob_sum_rate(&q, 0.0, 0.0, DEFAULT_TOL).unwrap();
        assert!((s - 0.7).abs() < 1e-15);
    }

    #[test]
    fn too_many_compression_words() {
        let q = worked_example();
        let h = q.i_x1_yhat_y3_x2 + q.i_yhat_y3_x2 + q.i_x2_y3 + 0.1;
        // Relay word not decodable and compression index unresolvable.
        assert_eq!(bob_sum_rate(&q, h, h, DEFAULT_TOL), None);
        // A slow relay codebook falls back to single-block decoding.
        let (s, rate) = bob_sum_rate(&q, 0.2, h, DEFAULT_TOL).unwrap();
        assert_eq!(s, BobStrategy::DirectX2Decoded);
        assert_eq!(rate, q.i_x1_y3_x2);
    }

    #[test]
    fn rate_point_on_worked_example() {
        let q = worked_example();
        let r = evaluate_rate_point(&q, 0.501, 0.899, DEFAULT_TOL);
        assert!(r.secrecy_valid);
        assert_eq!(r.bob, Some(BobStrategy::CfSlidingWindow));
        assert_eq!(r.eve, EveStrategy::X2AsNoise);
        assert!((r.r1 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn validity_gate() {
        let q = worked_example();
        // r2 below I(X2;Z) and bins smaller than WZ^Eve.
        let r = evaluate_rate_point(&q, 0.2, 0.3, DEFAULT_TOL);
        assert!(!r.secrecy_valid);
        assert_eq!(r.r1, 0.0);
    }

    #[test]
    fn wiretap_reduction_at_zero_relay_rate() {
        let q = InfoQuantities::degenerate_relay(0.7, 0.2);
        let r = evaluate_rate_point(&q, 0.0, 0.01, DEFAULT_TOL);
        assert!(r.secrecy_valid);
        assert!((r.r1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn case_rate_rejects_foreign_leaf() {
        assert!(matches!(case_rate(&worked_example(), Leaf::C2bI, DEFAULT_TOL), Err(Error::Usage(_))));
    }

    #[test]
    fn c1a_i_closed_form() {
        let r = case_rate(&worked_example(), Leaf::C1aI, DEFAULT_TOL).unwrap();
        assert!((r.r1 - 0.6).abs() < 1e-12);
        assert_eq!((r.r2, r.r_hat), (0.5, 0.9));
        check_equivocation_bound(&r).unwrap();
    }

    #[test]
    fn oracle_on_worked_example() {
        let r = oracle_max_rate(&worked_example(), &OracleConfig::new(0.01)).unwrap();
        assert!((r.r1 - 0.6).abs() <= 0.01, "{}", r.r1);
    }

    #[test]
    fn oracle_degenerate_relay() {
        let q = InfoQuantities::degenerate_relay(0.7, 0.2);
        let r = oracle_max_rate(&q, &OracleConfig::new(0.01)).unwrap();
        assert!((r.r1 - 0.5).abs() <= 0.01);
    }

    #[test]
    fn oracle_grid_limit() {
        let cfg = OracleConfig { step: 1e-5, ..OracleConfig::default() };
        assert!(matches!(oracle_max_rate(&worked_example(), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn leaf_labels_round_trip() {
        for l in Leaf::ALL {
            assert_eq!(l.label().parse::<Leaf>().unwrap(), l);
        }
    }

    #[test]
    fn random_records_hit_every_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..5000 {
            let q = InfoQuantities::sample_consistent(&mut rng);
            seen.extend(leaves(&q));
        }
        assert_eq!(seen.len(), 9, "{seen:?}");
    }
}
