//! Input-design search maximizing the secrecy rate for a fixed channel.
//!
//! Every simplex row is parameterized by unconstrained logits (the first
//! fixed at zero), so the search runs in an unconstrained space and every
//! candidate is a valid design. Each work unit runs coordinate ascent with
//! adaptive steps, then a Nelder-Mead polish, then snaps negligible
//! probabilities to exactly zero when that does not lose rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{assemble_joint, mutual_information, validate_channel, Alphabets, ChannelSpec, InputDesign, Var, VarSet};
use crate::quantities::compute_info_quantities;
use crate::regime::{best_case_rate, classify, oracle_max_rate, OracleConfig, RateChoice, RegimeCase, DEFAULT_TOL};

/// Moves must improve the objective by more than this to be accepted.
const MIN_IMPROVEMENT: f64 = 1e-13;
/// Probabilities below this are tried at zero after the search.
const SNAP_BELOW: f64 = 1e-6;
const INITIAL_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Best closed-form rate over the leaves the design falls in.
    BestCaseRate,
    /// Brute-force rate-point search at the given grid step.
    OracleRate { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop a unit once a full pass improves by less than this (bits).
    pub tol: f64,
    pub comp_size_max: usize,
    pub seed: u64,
    pub objective: Objective,
}

impl OptimizerConfig {
    /// Defaults with the compression alphabet bounded by `|X2||Y2| + 1`.
    pub fn for_alphabets(a: Alphabets) -> Self {
        OptimizerConfig {
            restarts: 6,
            max_iters: 200,
            tol: 1e-12,
            comp_size_max: a.x2 * a.y2 + 1,
            seed: 0,
            objective: Objective::BestCaseRate,
        }
    }

    fn check(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("optimizer needs at least one restart".into()));
        }
        if self.comp_size_max == 0 {
            return Err(Error::Config("compression alphabet bound must be at least 1".into()));
        }
        if let Objective::OracleRate { step } = self.objective {
            if !(step > 0.0) {
                return Err(Error::Config(format!("oracle step must be positive, got {step}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub design: InputDesign,
    pub choice: RateChoice,
    pub case: RegimeCase,
    /// `(iteration, best search score so far)` across all work units, in unit
    /// order. The score is the rate, or a negative gap while the rate is zero.
    pub trace: Vec<(usize, f64)>,
    pub wall_seconds: f64,
}

impl OptResult {
    pub fn r1(&self) -> f64 {
        self.choice.r1
    }
}

/// Softmax over logits with an implicit leading zero.
fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let m = logits.iter().copied().fold(0.0f64, f64::max);
    out[0] = (-m).exp();
    for (o, &l) in out[1..].iter_mut().zip(logits) {
        *o = (l - m).exp();
    }
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= s);
}

/// Maps a flat parameter vector to designs of a fixed shape.
#[derive(Debug, Clone, Copy)]
struct Layout {
    a: Alphabets,
    comp: usize,
    /// Relay input pinned to one symbol (only `p_x1` is free).
    pinned_x2: Option<usize>,
}

impl Layout {
    fn dim(&self) -> usize {
        match self.pinned_x2 {
            Some(_) => self.a.x1 - 1,
            None => (self.a.x1 - 1) + (self.a.x2 - 1) + self.a.x2 * self.a.y2 * (self.comp - 1),
        }
    }

    fn design(&self, theta: &[f64]) -> InputDesign {
        let a = self.a;
        let mut p_x1 = vec![0.0; a.x1];
        softmax_into(&theta[..a.x1 - 1], &mut p_x1);
        if let Some(x2) = self.pinned_x2 {
            return InputDesign::degenerate(a, p_x1, x2);
        }
        let mut rest = &theta[a.x1 - 1..];
        let mut p_x2 = vec![0.0; a.x2];
        softmax_into(&rest[..a.x2 - 1], &mut p_x2);
        rest = &rest[a.x2 - 1..];
        let mut q = vec![0.0; a.x2 * a.y2 * self.comp];
        for row in q.chunks_mut(self.comp) {
            softmax_into(&rest[..self.comp - 1], row);
            rest = &rest[self.comp - 1..];
        }
        InputDesign { p_x1, p_x2, comp_size: self.comp, q }
    }
}

fn snap_row(row: &mut [f64]) -> bool {
    let mut changed = false;
    for p in row.iter_mut() {
        if *p > 0.0 && *p < SNAP_BELOW {
            *p = 0.0;
            changed = true;
        }
    }
    if changed {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
    }
    changed
}

fn snap_design(d: &InputDesign) -> Option<InputDesign> {
    let mut s = d.clone();
    let mut changed = snap_row(&mut s.p_x1);
    changed |= snap_row(&mut s.p_x2);
    for row in s.q.chunks_mut(s.comp_size) {
        changed |= snap_row(row);
    }
    changed.then_some(s)
}

/// Result of one local search.
struct LocalBest {
    theta: Vec<f64>,
    value: f64,
    trace: Vec<f64>,
}

/// Coordinate ascent with expanding/shrinking steps followed by Nelder-Mead.
fn local_search(start: Vec<f64>, f: &dyn Fn(&[f64]) -> f64, max_iters: usize, tol: f64) -> LocalBest {
    let mut theta = start;
    let mut value = f(&theta);
    let mut trace = vec![value];
    if theta.is_empty() {
        return LocalBest { theta, value, trace };
    }
    let mut step = INITIAL_STEP;
    for _ in 0..max_iters {
        let pass_start = value;
        for i in 0..theta.len() {
            for dir in [1.0, -1.0] {
                let mut s = step;
                loop {
                    let old = theta[i];
                    theta[i] = old + dir * s;
                    let v = f(&theta);
                    if v > value + MIN_IMPROVEMENT {
                        value = v;
                        s *= 2.0;
                        if s > 64.0 {
                            break;
                        }
                    } else {
                        theta[i] = old;
                        break;
                    }
                }
            }
        }
        trace.push(value);
        if value - pass_start <= tol {
            step *= 0.5;
            if step < MIN_STEP {
                break;
            }
        }
    }
    let (t, v) = nelder_mead(&theta, value, f, max_iters * (theta.len() + 1), tol);
    if v > value + MIN_IMPROVEMENT {
        theta = t;
        value = v;
        trace.push(value);
    }
    LocalBest { theta, value, trace }
}

/// Maximizes `f` from `x0` with the standard reflect/expand/contract/shrink moves.
fn nelder_mead(x0: &[f64], f0: f64, f: &dyn Fn(&[f64]) -> f64, max_evals: usize, tol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += 0.25;
        let v = f(&x);
        pts.push((x, v));
    }
    let mut evals = n;
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    while evals < max_evals {
        // Best first; stable so equal values keep their order.
        pts.sort_by(|a, b| b.1.total_cmp(&a.1));
        if pts[0].1 - pts[n].1 <= tol {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &pts[..n] {
            centroid.iter_mut().zip(x).for_each(|(c, v)| *c += v / n as f64);
        }
        let worst = pts[n].clone();
        let reflected = combine(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr > pts[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            evals += 1;
            pts[n] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > pts[n - 1].1 {
            pts[n] = (reflected, fr);
        } else {
            let contracted = if fr > worst.1 {
                combine(&centroid, &reflected, 0.5)
            } else {
                combine(&centroid, &worst.0, 0.5)
            };
            let fc = f(&contracted);
            evals += 1;
            if fc > worst.1.max(fr) {
                pts[n] = (contracted, fc);
            } else {
                let best = pts[0].0.clone();
                for p in pts.iter_mut().skip(1) {
                    p.0 = combine(&best, &p.0, 0.5);
                    p.1 = f(&p.0);
                }
                evals += n;
            }
        }
    }
    pts.into_iter().reduce(|a, b| if b.1 > a.1 { b } else { a }).unwrap()
}

fn unit_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_start<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Secrecy rate of a design as judged by the configured objective.
pub fn design_rate(spec: &ChannelSpec, design: &InputDesign, objective: Objective) -> Result<(RegimeCase, RateChoice)> {
    let joint = assemble_joint(spec, design)?;
    let q = compute_info_quantities(&joint);
    match objective {
        Objective::BestCaseRate => best_case_rate(&q, DEFAULT_TOL),
        Objective::OracleRate { step } => {
            let choice = oracle_max_rate(&q, &OracleConfig::new(step))?;
            let case = classify(&q, DEFAULT_TOL)?
                .into_iter()
                .next()
                .ok_or_else(|| Error::Internal("no regime leaf matched the record".into()))?;
            Ok((case, choice))
        }
    }
}

struct Unit {
    layout: Layout,
    start: Option<u64>,
}

struct UnitResult {
    design: InputDesign,
    value: f64,
    trace: Vec<f64>,
}

fn run_unit(unit: &Unit, seed: u64, index: usize, cfg: &OptimizerConfig, f: &(dyn Fn(&InputDesign) -> f64 + Sync)) -> UnitResult {
    let layout = unit.layout;
    let dim = layout.dim();
    let start = match unit.start {
        None => vec![0.0; dim],
        Some(_) => random_start(&mut unit_rng(seed, index as u64), dim),
    };
    let objective = |theta: &[f64]| f(&layout.design(theta));
    let found = local_search(start, &objective, cfg.max_iters, cfg.tol);
    let mut design = layout.design(&found.theta);
    let mut value = found.value;
    let mut trace = found.trace;
    if let Some(snapped) = snap_design(&design) {
        let v = f(&snapped);
        if v >= value - 1e-12 {
            design = snapped;
            value = value.max(v);
            trace.push(value);
        }
    }
    UnitResult { design, value, trace }
}

#[cfg(feature = "parallel")]
fn map_units<T: Send>(n: usize, g: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(g).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_units<T: Send>(n: usize, g: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(g).collect()
}

/// Runs every unit and returns the best (earliest on ties) with the merged trace.
fn search(units: &[Unit], cfg: &OptimizerConfig, f: &(dyn Fn(&InputDesign) -> f64 + Sync)) -> (InputDesign, f64, Vec<(usize, f64)>) {
    let results = map_units(units.len(), |i| run_unit(&units[i], cfg.seed, i, cfg, f));
    let mut trace = Vec::new();
    let mut best: Option<(InputDesign, f64)> = None;
    let mut running = f64::NEG_INFINITY;
    for r in results {
        for v in &r.trace {
            running = running.max(*v);
            trace.push((trace.len(), running));
        }
        if best.as_ref().is_none_or(|(_, b)| r.value > *b) {
            best = Some((r.design, r.value));
        }
    }
    let (d, v) = best.expect("at least one work unit");
    (d, v, trace)
}

fn now() -> Option<std::time::Instant> {
    #[cfg(not(target_arch = "wasm32"))]
    {
        Some(std::time::Instant::now())
    }
    #[cfg(target_arch = "wasm32")]
    {
        None
    }
}

fn elapsed(t: Option<std::time::Instant>) -> f64 {
    t.map_or(0.0, |t| t.elapsed().as_secs_f64())
}

fn check_spec(spec: &ChannelSpec) -> Result<()> {
    validate_channel(spec).into_result()
}

/// The secrecy rate, or when it is clipped to zero the (negative) margin by
/// which Eve's rate exceeds Bob's, so the search still has a slope to follow.
fn search_score(c: &RateChoice) -> f64 {
    if c.r1 > 0.0 {
        c.r1
    } else {
        (c.sum_rate - c.r_tilde1).min(0.0)
    }
}

/// `restarts` wiretap searches per relay symbol. Both the full search and
/// the baseline start with these, so they explore the same starting points.
fn pinned_units(a: Alphabets, cfg: &OptimizerConfig) -> Vec<Unit> {
    let mut units = Vec::new();
    for x2 in 0..a.x2 {
        for r in 0..cfg.restarts {
            let start = (r > 0).then_some(r as u64);
            units.push(Unit { layout: Layout { a, comp: 1, pinned_x2: Some(x2) }, start });
        }
    }
    units
}

/// Searches `(P_X1, P_X2, q)` for the highest secrecy rate.
///
/// Work units are `restarts` pinned-relay wiretap searches per relay symbol, then
/// `restarts` searches for each compression alphabet size up to
/// `comp_size_max` (the first from uniform logits, the rest random). Units
/// draw from independent streams of `cfg.seed`, so the result does not
/// depend on scheduling.
pub fn optimize_design(spec: &ChannelSpec, cfg: &OptimizerConfig) -> Result<OptResult> {
    cfg.check()?;
    check_spec(spec)?;
    let t0 = now();
    let a = spec.alphabets();
    let joint_cells = |comp: usize| a.x1 * a.x2 * a.y2 * comp * a.y3 * a.z;
    if joint_cells(1) > crate::prob::MAX_JOINT_CELLS {
        return Err(Error::Config("channel alphabets exceed the joint-distribution limit".into()));
    }

    let mut units = pinned_units(a, cfg);
    for comp in 1..=cfg.comp_size_max {
        if joint_cells(comp) > crate::prob::MAX_JOINT_CELLS {
            break;
        }
        for r in 0..cfg.restarts {
            let start = (r > 0).then_some(r as u64);
            units.push(Unit { layout: Layout { a, comp, pinned_x2: None }, start });
        }
    }

    let objective = cfg.objective;
    let f = |d: &InputDesign| design_rate(spec, d, objective).map_or(f64::NEG_INFINITY, |(_, c)| search_score(&c));
    let (design, _, trace) = search(&units, cfg, &f);
    let (case, choice) = design_rate(spec, &design, objective)?;
    Ok(OptResult { design, choice, case, trace, wall_seconds: elapsed(t0) })
}

/// Best `[I(X1;Y3) - I(X1;Z)]^+` with the relay pinned to one symbol and no
/// compression; the maximum over pinned symbols and `P_X1`.
pub fn wiretap_baseline(spec: &ChannelSpec) -> Result<f64> {
    wiretap_baseline_with(spec, &OptimizerConfig::for_alphabets(spec.alphabets()))
}

pub fn wiretap_baseline_with(spec: &ChannelSpec, cfg: &OptimizerConfig) -> Result<f64> {
    Ok(wiretap_baseline_design(spec, cfg)?.1)
}

/// The maximizing degenerate design and its rate.
pub fn wiretap_baseline_design(spec: &ChannelSpec, cfg: &OptimizerConfig) -> Result<(InputDesign, f64)> {
    cfg.check()?;
    check_spec(spec)?;
    let a = spec.alphabets();
    let units = pinned_units(a, cfg);
    // The clipped rate is flat wherever Eve is ahead, so search the raw gap.
    let f = |d: &InputDesign| wiretap_gap(spec, d).unwrap_or(f64::NEG_INFINITY);
    let (design, value, _) = search(&units, cfg, &f);
    Ok((design, value.max(0.0)))
}

fn wiretap_gap(spec: &ChannelSpec, design: &InputDesign) -> Result<f64> {
    let j = assemble_joint(spec, design)?;
    let x1 = VarSet::from(Var::X1);
    let bob = mutual_information(&j, x1, Var::Y3.into(), VarSet::EMPTY)?;
    let eve = mutual_information(&j, x1, Var::Z.into(), VarSet::EMPTY)?;
    Ok(bob - eve)
}

/// `[I(X1;Y3) - I(X1;Z)]^+` under a design.
pub fn wiretap_rate(spec: &ChannelSpec, design: &InputDesign) -> Result<f64> {
    Ok(wiretap_gap(spec, design)?.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub case: RegimeCase,
    pub r1: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    /// Failure message when the generator or the optimizer failed at this point.
    pub outcome: std::result::Result<SweepPoint, String>,
}

/// Optimizes every channel of a one-parameter family. Points are independent
/// and rows come back in grid order; a failing point is reported in its row.
pub fn sweep<G>(grid: &[f64], generator: G, cfg: &OptimizerConfig) -> Vec<SweepRow>
where
    G: Fn(f64) -> Result<ChannelSpec> + Sync + Send,
{
    map_units(grid.len(), |i| {
        let param = grid[i];
        let outcome = generator(param)
            .and_then(|spec| {
                let best = optimize_design(&spec, cfg)?;
                let baseline = wiretap_baseline_with(&spec, cfg)?;
                Ok(SweepPoint { case: best.case, r1: best.r1(), baseline })
            })
            .map_err(|e| e.to_string());
        SweepRow { param, outcome }
    })
}
