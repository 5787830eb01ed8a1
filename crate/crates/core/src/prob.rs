//! Finite-alphabet probability machinery.
//!
//! The channel law `P(y2, y3, z | x1, x2)` and the free input design
//! `P(x1) P(x2) P(ŷ2 | x2, y2)` are combined into a dense six-variable joint
//! distribution. Every information functional used elsewhere in the crate is
//! an entropy combination over marginals of that joint, in bits.

use std::fmt;
use std::ops::BitOr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Largest joint distribution (number of dense cells) we are willing to build.
pub const MAX_JOINT_CELLS: usize = 1 << 24;

/// Tolerance on every "sums to one" check.
pub const PROB_TOL: f64 = 1e-9;

/// Conditioning events lighter than this are treated as impossible.
pub const NULL_MASS: f64 = 1e-15;

/// Negative mutual information down to this value is rounding noise.
pub const MI_CLAMP: f64 = 1e-12;

/// The six random variables of the relay-eavesdropper model, in joint axis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    X1,
    X2,
    Y2,
    Y2Hat,
    Y3,
    Z,
}

impl Var {
    pub const ALL: [Var; 6] = [Var::X1, Var::X2, Var::Y2, Var::Y2Hat, Var::Y3, Var::Z];

    pub fn axis(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X1 => "X1",
            Var::X2 => "X2",
            Var::Y2 => "Y2",
            Var::Y2Hat => "Y2hat",
            Var::Y3 => "Y3",
            Var::Z => "Z",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of variables, stored as a bit mask over [`Var::axis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn of(vars: &[Var]) -> Self {
        vars.iter().fold(VarSet::EMPTY, |s, &v| s | v)
    }

    pub fn contains(self, v: Var) -> bool {
        self.0 & (1 << v.axis()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersects(self, other: VarSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn iter(self) -> impl Iterator<Item = Var> {
        Var::ALL.into_iter().filter(move |v| self.contains(*v))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl From<Var> for VarSet {
    fn from(v: Var) -> Self {
        VarSet(1 << v.axis())
    }
}

impl BitOr for VarSet {
    type Output = VarSet;
    fn bitor(self, rhs: VarSet) -> VarSet {
        VarSet(self.0 | rhs.0)
    }
}

impl BitOr<Var> for VarSet {
    type Output = VarSet;
    fn bitor(self, rhs: Var) -> VarSet {
        self | VarSet::from(rhs)
    }
}

impl BitOr for Var {
    type Output = VarSet;
    fn bitor(self, rhs: Var) -> VarSet {
        VarSet::from(self) | rhs
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Var::name).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Alphabet sizes of the channel's inputs and outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabets {
    pub x1: usize,
    pub x2: usize,
    pub y2: usize,
    pub y3: usize,
    pub z: usize,
}

impl Alphabets {
    pub fn new(x1: usize, x2: usize, y2: usize, y3: usize, z: usize) -> Self {
        Alphabets { x1, x2, y2, y3, z }
    }

    /// Cells in one `(x1, x2)` row of the channel law.
    pub fn row_len(&self) -> usize {
        self.y2 * self.y3 * self.z
    }

    pub fn law_len(&self) -> usize {
        self.x1 * self.x2 * self.row_len()
    }

    fn named(&self) -> [(&'static str, usize); 5] {
        [("x1", self.x1), ("x2", self.x2), ("y2", self.y2), ("y3", self.y3), ("z", self.z)]
    }
}

/// The conditional law `P(y2, y3, z | x1, x2)`, stored row-major as
/// `[x1][x2][y2][y3][z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    alphabets: Alphabets,
    law: Vec<f64>,
}

impl ChannelSpec {
    /// Wraps a flat law. Only the shape is checked here; probability
    /// invariants are reported by [`validate_channel`].
    pub fn new(alphabets: Alphabets, law: Vec<f64>) -> Result<Self> {
        for (name, n) in alphabets.named() {
            if n == 0 {
                return Err(Error::Config(format!("alphabet `{name}` must have at least one symbol")));
            }
        }
        if law.len() != alphabets.law_len() {
            return Err(Error::Config(format!(
                "channel law has {} entries, alphabets require {}",
                law.len(),
                alphabets.law_len()
            )));
        }
        Ok(ChannelSpec { alphabets, law })
    }

    pub fn from_fn(
        alphabets: Alphabets,
        mut f: impl FnMut(usize, usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut law = Vec::with_capacity(alphabets.law_len());
        for x1 in 0..alphabets.x1 {
            for x2 in 0..alphabets.x2 {
                for y2 in 0..alphabets.y2 {
                    for y3 in 0..alphabets.y3 {
                        for z in 0..alphabets.z {
                            law.push(f(x1, x2, y2, y3, z));
                        }
                    }
                }
            }
        }
        ChannelSpec::new(alphabets, law)
    }

    pub fn alphabets(&self) -> Alphabets {
        self.alphabets
    }

    pub fn law(&self) -> &[f64] {
        &self.law
    }

    fn offset(&self, x1: usize, x2: usize) -> usize {
        (x1 * self.alphabets.x2 + x2) * self.alphabets.row_len()
    }

    /// The distribution over `(y2, y3, z)` for one input pair.
    pub fn row(&self, x1: usize, x2: usize) -> &[f64] {
        let o = self.offset(x1, x2);
        &self.law[o..o + self.alphabets.row_len()]
    }

    pub fn prob(&self, x1: usize, x2: usize, y2: usize, y3: usize, z: usize) -> f64 {
        let a = &self.alphabets;
        self.law[self.offset(x1, x2) + (y2 * a.y3 + y3) * a.z + z]
    }
}

/// Outcome of a validation pass; an empty list means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations))
        }
    }

    pub(crate) fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

fn check_simplex(report: &mut ValidationReport, location: &str, row: &[f64]) {
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() {
            report.violations.push(Violation::new(format!("{location}/{i}"), "entry is not a finite number"));
        } else if p < 0.0 {
            report
                .violations
                .push(Violation::new(format!("{location}/{i}"), "negative probability").with_magnitude(p));
        } else if p > 1.0 + PROB_TOL {
            report
                .violations
                .push(Violation::new(format!("{location}/{i}"), "probability above one").with_magnitude(p - 1.0));
        }
    }
    let total = neumaier_sum(row.iter().copied());
    if total.is_finite() && (total - 1.0).abs() > PROB_TOL {
        report.violations.push(
            Violation::new(location, format!("row sums to {total:.12} (deficit {:.3e})", 1.0 - total))
                .with_magnitude(1.0 - total),
        );
    }
}

/// Reports every violated channel invariant. Rows are located as
/// `/channel/<x1>/<x2>`, entries as `/channel/<x1>/<x2>/<y2>/<y3>/<z>`.
pub fn validate_channel(spec: &ChannelSpec) -> ValidationReport {
    let a = spec.alphabets;
    let mut report = ValidationReport::default();
    for x1 in 0..a.x1 {
        for x2 in 0..a.x2 {
            let row = spec.row(x1, x2);
            let location = format!("/channel/{x1}/{x2}");
            for (i, &p) in row.iter().enumerate() {
                let (y2, rest) = (i / (a.y3 * a.z), i % (a.y3 * a.z));
                let (y3, z) = (rest / a.z, rest % a.z);
                let at = format!("{location}/{y2}/{y3}/{z}");
                if !p.is_finite() {
                    report.violations.push(Violation::new(at, "entry is not a finite number"));
                } else if p < 0.0 {
                    report.violations.push(Violation::new(at, "negative probability").with_magnitude(p));
                }
            }
            let total = neumaier_sum(row.iter().copied());
            if total.is_finite() && (total - 1.0).abs() > PROB_TOL {
                report.violations.push(
                    Violation::new(
                        location,
                        format!("row (x1={x1}, x2={x2}) sums to {total:.12} (deficit {:.3e})", 1.0 - total),
                    )
                    .with_magnitude(1.0 - total),
                );
            }
        }
    }
    report
}

/// The free distributions `P(x1)`, `P(x2)` and the compression test channel
/// `q(ŷ2 | x2, y2)`, the latter stored row-major as `[x2][y2][ŷ2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDesign {
    pub p_x1: Vec<f64>,
    pub p_x2: Vec<f64>,
    pub comp_size: usize,
    pub q: Vec<f64>,
}

impl InputDesign {
    /// Uniform inputs and a uniform (useless) compression channel.
    pub fn uniform(alphabets: Alphabets, comp_size: usize) -> Self {
        InputDesign {
            p_x1: vec![1.0 / alphabets.x1 as f64; alphabets.x1],
            p_x2: vec![1.0 / alphabets.x2 as f64; alphabets.x2],
            comp_size,
            q: vec![1.0 / comp_size as f64; alphabets.x2 * alphabets.y2 * comp_size],
        }
    }

    /// Relay pinned to one symbol with a single-letter compression alphabet.
    pub fn degenerate(alphabets: Alphabets, p_x1: Vec<f64>, x2_symbol: usize) -> Self {
        let mut p_x2 = vec![0.0; alphabets.x2];
        p_x2[x2_symbol] = 1.0;
        InputDesign { p_x1, p_x2, comp_size: 1, q: vec![1.0; alphabets.x2 * alphabets.y2] }
    }

    pub fn q_row(&self, x2: usize, y2: usize, y2_size: usize) -> &[f64] {
        let o = (x2 * y2_size + y2) * self.comp_size;
        &self.q[o..o + self.comp_size]
    }

    /// Checks the design against the channel's alphabets.
    pub fn check_dimensions(&self, alphabets: Alphabets) -> Result<()> {
        let mismatch = |axis: &str, got: usize, want: usize| {
            Err(Error::Config(format!("design axis `{axis}` has {got} entries, channel requires {want}")))
        };
        if self.p_x1.len() != alphabets.x1 {
            return mismatch("p_x1", self.p_x1.len(), alphabets.x1);
        }
        if self.p_x2.len() != alphabets.x2 {
            return mismatch("p_x2", self.p_x2.len(), alphabets.x2);
        }
        if self.comp_size == 0 {
            return Err(Error::Config("design axis `comp_size` must be at least 1".into()));
        }
        let want = alphabets.x2 * alphabets.y2 * self.comp_size;
        if self.q.len() != want {
            return mismatch("q", self.q.len(), want);
        }
        Ok(())
    }

    /// Simplex invariants of all three components. Assumes matching dimensions.
    pub fn validate(&self, alphabets: Alphabets) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_simplex(&mut report, "/design/p_x1", &self.p_x1);
        check_simplex(&mut report, "/design/p_x2", &self.p_x2);
        for x2 in 0..alphabets.x2 {
            for y2 in 0..alphabets.y2 {
                check_simplex(&mut report, &format!("/design/q/{x2}/{y2}"), self.q_row(x2, y2, alphabets.y2));
            }
        }
        report
    }
}

/// Dense joint law over `(X1, X2, Y2, Ŷ2, Y3, Z)`, row-major in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    sizes: [usize; 6],
    data: Vec<f64>,
}

/// A marginal of the joint over a subset of variables (row-major in
/// [`Var::ALL`] order restricted to the subset).
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub vars: Vec<Var>,
    pub sizes: Vec<usize>,
    pub data: Vec<f64>,
}

impl Marginal {
    pub fn index(&self, symbols: &[usize]) -> usize {
        symbols.iter().zip(&self.sizes).fold(0, |acc, (&s, &n)| acc * n + s)
    }
}

/// `P(tested | given)` tabulated from a joint. Rows are indexed by the
/// row-major index of the given symbols, columns by the tested symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLaw {
    pub given: Vec<Var>,
    pub given_sizes: Vec<usize>,
    pub tested: Vec<Var>,
    pub tested_sizes: Vec<usize>,
    given_mass: Vec<f64>,
    table: Vec<f64>,
}

impl ConditionalLaw {
    pub fn given_count(&self) -> usize {
        self.given_mass.len()
    }

    pub fn tested_count(&self) -> usize {
        self.tested_sizes.iter().product()
    }

    /// Whether the conditioning event has usable mass.
    pub fn defined(&self, given: usize) -> bool {
        self.given_mass[given] >= NULL_MASS
    }

    pub fn prob(&self, given: usize, tested: usize) -> f64 {
        self.table[given * self.tested_count() + tested]
    }

    pub fn row(&self, given: usize) -> &[f64] {
        let t = self.tested_count();
        &self.table[given * t..(given + 1) * t]
    }
}

impl JointDistribution {
    pub fn sizes(&self) -> [usize; 6] {
        self.sizes
    }

    pub fn size_of(&self, v: Var) -> usize {
        self.sizes[v.axis()]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn prob(&self, idx: [usize; 6]) -> f64 {
        let flat = idx.iter().zip(&self.sizes).fold(0, |acc, (&i, &n)| acc * n + i);
        self.data[flat]
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.data.iter().copied())
    }

    /// Sums the joint down to the variables in `set`, with compensated
    /// accumulation per output cell.
    pub fn marginal(&self, set: VarSet) -> Marginal {
        let vars: Vec<Var> = set.iter().collect();
        let sizes: Vec<usize> = vars.iter().map(|v| self.sizes[v.axis()]).collect();
        let out_len: usize = sizes.iter().product();

        // Stride of each joint axis inside the output (0 when summed out).
        let mut stride = [0usize; 6];
        let mut s = 1;
        for v in vars.iter().rev() {
            stride[v.axis()] = s;
            s *= self.sizes[v.axis()];
        }

        let mut sum = vec![0.0; out_len];
        let mut comp = vec![0.0; out_len];
        let n = self.sizes;
        let mut flat = 0;
        for a in 0..n[0] {
            for b in 0..n[1] {
                for c in 0..n[2] {
                    for d in 0..n[3] {
                        for e in 0..n[4] {
                            let base = a * stride[0] + b * stride[1] + c * stride[2] + d * stride[3] + e * stride[4];
                            for f in 0..n[5] {
                                let t = base + f * stride[5];
                                neumaier_add(&mut sum[t], &mut comp[t], self.data[flat]);
                                flat += 1;
                            }
                        }
                    }
                }
            }
        }
        let data = sum.iter().zip(&comp).map(|(s, c)| s + c).collect();
        Marginal { vars, sizes, data }
    }

    /// Entropy in bits of the variables in `set` (zero for the empty set).
    pub fn entropy(&self, set: VarSet) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        entropy_bits(&self.marginal(set).data)
    }

    /// Tabulates `P(tested | given)`. Rows whose conditioning event has mass
    /// below [`NULL_MASS`] are left at zero and reported as undefined.
    pub fn conditional(&self, tested: VarSet, given: VarSet) -> Result<ConditionalLaw> {
        if tested.is_empty() || tested.intersects(given) {
            return Err(Error::Usage(format!("conditional law needs disjoint nonempty sets, got {tested} | {given}")));
        }
        let both = self.marginal(tested | given);
        let given_vars: Vec<Var> = given.iter().collect();
        let tested_vars: Vec<Var> = tested.iter().collect();
        let given_sizes: Vec<usize> = given_vars.iter().map(|v| self.size_of(*v)).collect();
        let tested_sizes: Vec<usize> = tested_vars.iter().map(|v| self.size_of(*v)).collect();
        let g_count: usize = given_sizes.iter().product();
        let t_count: usize = tested_sizes.iter().product();

        let mut table = vec![0.0; g_count * t_count];
        let mut g_sym = vec![0usize; given_vars.len()];
        let mut t_sym = vec![0usize; tested_vars.len()];
        let mut sym = vec![0usize; both.vars.len()];
        for (flat, &p) in both.data.iter().enumerate() {
            unflatten(flat, &both.sizes, &mut sym);
            let (mut gi, mut ti) = (0, 0);
            for (k, v) in both.vars.iter().enumerate() {
                if given.contains(*v) {
                    g_sym[gi] = sym[k];
                    gi += 1;
                } else {
                    t_sym[ti] = sym[k];
                    ti += 1;
                }
            }
            let g = flatten(&g_sym, &given_sizes);
            let t = flatten(&t_sym, &tested_sizes);
            table[g * t_count + t] = p;
        }
        let mut given_mass = vec![0.0; g_count];
        for g in 0..g_count {
            let row = &mut table[g * t_count..(g + 1) * t_count];
            let mass = neumaier_sum(row.iter().copied());
            given_mass[g] = mass;
            if mass >= NULL_MASS {
                row.iter_mut().for_each(|p| *p /= mass);
            } else {
                row.iter_mut().for_each(|p| *p = 0.0);
            }
        }
        Ok(ConditionalLaw { given: given_vars, given_sizes, tested: tested_vars, tested_sizes, given_mass, table })
    }
}

pub(crate) fn flatten(symbols: &[usize], sizes: &[usize]) -> usize {
    symbols.iter().zip(sizes).fold(0, |acc, (&s, &n)| acc * n + s)
}

pub(crate) fn unflatten(mut flat: usize, sizes: &[usize], out: &mut [usize]) {
    for k in (0..sizes.len()).rev() {
        out[k] = flat % sizes[k];
        flat /= sizes[k];
    }
}

/// Builds `J = P(x1) P(x2) P(y2,y3,z|x1,x2) q(ŷ2|x2,y2)`.
///
/// Both inputs are validated first; the result is renormalized once by its
/// compensated total so that rounding in the inputs does not accumulate.
pub fn assemble_joint(spec: &ChannelSpec, design: &InputDesign) -> Result<JointDistribution> {
    let a = spec.alphabets;
    design.check_dimensions(a)?;
    let mut report = validate_channel(spec);
    report.extend(design.validate(a));
    report.into_result()?;

    let sizes = [a.x1, a.x2, a.y2, design.comp_size, a.y3, a.z];
    let cells = sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
    match cells {
        Some(c) if c <= MAX_JOINT_CELLS => {}
        _ => {
            return Err(Error::Config(format!(
                "joint distribution {sizes:?} exceeds the {MAX_JOINT_CELLS}-cell limit"
            )))
        }
    }

    let mut data = Vec::with_capacity(cells.unwrap_or(0));
    for x1 in 0..a.x1 {
        for x2 in 0..a.x2 {
            let p_in = design.p_x1[x1] * design.p_x2[x2];
            for y2 in 0..a.y2 {
                let q = design.q_row(x2, y2, a.y2);
                for &qh in q {
                    for y3 in 0..a.y3 {
                        for z in 0..a.z {
                            data.push(p_in * spec.prob(x1, x2, y2, y3, z) * qh);
                        }
                    }
                }
            }
        }
    }
    let total = neumaier_sum(data.iter().copied());
    if !(total > 0.0) {
        return Err(Error::Internal("assembled joint has no mass".into()));
    }
    data.iter_mut().for_each(|p| *p /= total);
    Ok(JointDistribution { sizes, data })
}

/// `I(A; B | C)` in bits, via `H(A,C) + H(B,C) - H(A,B,C) - H(C)`.
pub fn mutual_information(joint: &JointDistribution, a: VarSet, b: VarSet, c: VarSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("mutual information needs nonempty A and B".into()));
    }
    if a.intersects(b) || a.intersects(c) || b.intersects(c) {
        return Err(Error::Usage(format!("variable groups overlap: {a}, {b}, {c}")));
    }
    let mut cache = EntropyCache::new(joint);
    Ok(cache.mutual_information(a, b, c))
}

/// Memoizes marginal entropies so a batch of functionals shares the work.
pub(crate) struct EntropyCache<'a> {
    joint: &'a JointDistribution,
    values: [Option<f64>; 64],
}

impl<'a> EntropyCache<'a> {
    pub(crate) fn new(joint: &'a JointDistribution) -> Self {
        EntropyCache { joint, values: [None; 64] }
    }

    pub(crate) fn entropy(&mut self, set: VarSet) -> f64 {
        let slot = &mut self.values[set.bits() as usize];
        *slot.get_or_insert_with(|| self.joint.entropy(set))
    }

    pub(crate) fn mutual_information(&mut self, a: VarSet, b: VarSet, c: VarSet) -> f64 {
        let hac = self.entropy(a | c);
        let hbc = self.entropy(b | c);
        let habc = self.entropy(a | b | c);
        let hc = self.entropy(c);
        // Pair the terms so that I(A;B|C) and I(B;A|C) round identically.
        let mi = (hac + hbc) - (habc + hc);
        debug_assert!(mi > -1e-9, "mutual information {mi} is materially negative");
        if mi < MI_CLAMP { mi.max(0.0) } else { mi }
    }
}

fn neumaier_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for x in values {
        neumaier_add(&mut s, &mut c, x);
    }
    s + c
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    neumaier_sum(probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()))
}

/// Binary entropy function in bits.
pub fn h2(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bsc_eve(flip: f64) -> ChannelSpec {
        // Y3 = X1, Z = X1 through a bit flip, relay axes trivial.
        ChannelSpec::from_fn(Alphabets::new(2, 1, 1, 2, 2), |x1, _, _, y3, z| {
            let bob = if y3 == x1 { 1.0 } else { 0.0 };
            let eve = if z == x1 { 1.0 - flip } else { flip };
            bob * eve
        })
        .unwrap()
    }

    #[test]
    fn valid_channel_has_empty_report() {
        assert!(validate_channel(&bsc_eve(0.2)).is_valid());
    }

    #[test]
    fn short_row_is_reported_by_index() {
        let a = Alphabets::new(2, 2, 1, 1, 2);
        let spec = ChannelSpec::from_fn(a, |x1, x2, _, _, z| {
            if (x1, x2) == (1, 0) { [0.5, 0.4][z] } else { 0.5 }
        })
        .unwrap();
        let report = validate_channel(&spec);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].location, "/channel/1/0");
        assert_abs_diff_eq!(report.violations[0].magnitude.unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn negative_entry_is_reported_with_index() {
        let a = Alphabets::new(1, 1, 1, 2, 2);
        let spec = ChannelSpec::new(a, vec![0.6, -0.1, 0.3, 0.2]).unwrap();
        let report = validate_channel(&spec);
        assert!(report.violations.iter().any(|v| v.location == "/channel/0/0/0/0/1" && v.magnitude == Some(-0.1)));
    }

    #[test]
    fn zero_alphabet_is_rejected() {
        assert!(matches!(ChannelSpec::new(Alphabets::new(0, 1, 1, 1, 1), vec![]), Err(Error::Config(_))));
    }

    #[test]
    fn uniform_binary_joint_is_flat() {
        let a = Alphabets::new(2, 2, 2, 2, 2);
        let spec = ChannelSpec::from_fn(a, |_, _, _, _, _| 1.0 / 8.0).unwrap();
        let j = assemble_joint(&spec, &InputDesign::uniform(a, 2)).unwrap();
        assert!(j.data().iter().all(|&p| (p - 1.0 / 64.0).abs() < 1e-15));
    }

    #[test]
    fn single_letter_compression_keeps_five_variable_joint() {
        let a = Alphabets::new(2, 2, 2, 2, 2);
        let spec = ChannelSpec::from_fn(a, |x1, x2, y2, y3, z| {
            let p = |b: usize, s: usize, f: f64| if b == s { 1.0 - f } else { f };
            p(x1, y2, 0.1) * p(x1 ^ x2, y3, 0.2) * p(x1, z, 0.3)
        })
        .unwrap();
        let design = InputDesign { p_x1: vec![0.3, 0.7], p_x2: vec![0.6, 0.4], comp_size: 1, q: vec![1.0; 4] };
        let j = assemble_joint(&spec, &design).unwrap();
        assert_eq!(j.sizes()[3], 1);
        for (x1, x2, y2, y3, z) in itertools(a) {
            let want = design.p_x1[x1] * design.p_x2[x2] * spec.prob(x1, x2, y2, y3, z);
            assert_abs_diff_eq!(j.prob([x1, x2, y2, 0, y3, z]), want, epsilon = 1e-15);
        }
    }

    fn itertools(a: Alphabets) -> Vec<(usize, usize, usize, usize, usize)> {
        let mut v = vec![];
        for x1 in 0..a.x1 {
            for x2 in 0..a.x2 {
                for y2 in 0..a.y2 {
                    for y3 in 0..a.y3 {
                        for z in 0..a.z {
                            v.push((x1, x2, y2, y3, z));
                        }
                    }
                }
            }
        }
        v
    }

    #[test]
    fn dimension_mismatch_names_axis() {
        let spec = bsc_eve(0.2);
        let mut design = InputDesign::uniform(spec.alphabets(), 1);
        design.p_x2 = vec![0.5, 0.5];
        let err = assemble_joint(&spec, &design).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("p_x2")), "{err}");
    }

    #[test]
    fn identity_channel_carries_one_bit() {
        let spec = bsc_eve(0.2);
        let j = assemble_joint(&spec, &InputDesign::uniform(spec.alphabets(), 1)).unwrap();
        let mi = mutual_information(&j, Var::X1.into(), Var::Y3.into(), VarSet::EMPTY).unwrap();
        assert_abs_diff_eq!(mi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bit_flip_eavesdropper() {
        let spec = bsc_eve(0.2);
        let j = assemble_joint(&spec, &InputDesign::uniform(spec.alphabets(), 1)).unwrap();
        let mi = mutual_information(&j, Var::X1.into(), Var::Z.into(), VarSet::EMPTY).unwrap();
        let h = -0.2 * 0.2f64.log2() - 0.8 * 0.8f64.log2();
        assert_abs_diff_eq!(mi, 1.0 - h, epsilon = 1e-12);
        assert_abs_diff_eq!(mi, 0.278071905112638, epsilon = 1e-12);
    }

    #[test]
    fn independent_output_carries_nothing() {
        let spec = ChannelSpec::from_fn(Alphabets::new(2, 1, 1, 1, 2), |_, _, _, _, _| 0.5).unwrap();
        let j = assemble_joint(&spec, &InputDesign::uniform(spec.alphabets(), 1)).unwrap();
        let mi = mutual_information(&j, Var::X1.into(), Var::Z.into(), VarSet::EMPTY).unwrap();
        assert_eq!(mi, 0.0);
    }

    #[test]
    fn overlapping_groups_are_a_usage_error() {
        let spec = bsc_eve(0.2);
        let j = assemble_joint(&spec, &InputDesign::uniform(spec.alphabets(), 1)).unwrap();
        let r = mutual_information(&j, Var::X1 | Var::Y3, Var::Y3.into(), VarSet::EMPTY);
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn conditional_recovers_compression_channel() {
        let a = Alphabets::new(2, 2, 2, 1, 1);
        let spec = ChannelSpec::from_fn(a, |x1, x2, y2, _, _| if y2 == (x1 ^ x2) { 0.9 } else { 0.1 }).unwrap();
        let design = InputDesign {
            p_x1: vec![0.5, 0.5],
            p_x2: vec![0.25, 0.75],
            comp_size: 3,
            q: vec![0.2, 0.3, 0.5, 0.1, 0.1, 0.8, 0.6, 0.4, 0.0, 1.0, 0.0, 0.0],
        };
        let j = assemble_joint(&spec, &design).unwrap();
        let law = j.conditional(Var::Y2Hat.into(), Var::X2 | Var::Y2).unwrap();
        for g in 0..4 {
            assert!(law.defined(g));
            for t in 0..3 {
                assert_abs_diff_eq!(law.prob(g, t), design.q[g * 3 + t], epsilon = 1e-12);
            }
        }
    }
}
