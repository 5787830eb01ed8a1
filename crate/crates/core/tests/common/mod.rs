#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use relsec::{Alphabets, ChannelSpec, InfoQuantities, InputDesign, Leaf};

pub fn flip(a: usize, b: usize, p: f64) -> f64 {
    if a == b {
        1.0 - p
    } else {
        p
    }
}

/// Binary input straight to Bob and Eve through independent bit flips; no relay.
pub fn wiretap_only(bob: f64, eve: f64) -> ChannelSpec {
    ChannelSpec::from_fn(Alphabets::new(2, 1, 1, 2, 2), |x1, _, _, y3, z| flip(x1, y3, bob) * flip(x1, z, eve)).unwrap()
}

/// Like [`wiretap_only`] but with a binary relay that hears only noise and
/// whose input nobody hears.
pub fn deaf_relay(bob: f64, eve: f64) -> ChannelSpec {
    ChannelSpec::from_fn(Alphabets::new(2, 2, 2, 2, 2), |x1, _, _, y3, z| 0.5 * flip(x1, y3, bob) * flip(x1, z, eve))
        .unwrap()
}

/// Binary relay that hears `X1` through a 0.1 flip. Bob receives `X1`
/// through a 0.2 flip together with a clean copy of `X2`, and Eve gets `X1`
/// through a 0.3 flip.
pub fn side_channel_relay() -> ChannelSpec {
    ChannelSpec::from_fn(Alphabets::new(2, 2, 2, 4, 2), |x1, x2, y2, y3, z| {
        let relay_to_bob = if y3 % 2 == x2 { 1.0 } else { 0.0 };
        flip(x1, y2, 0.1) * flip(x1, y3 / 2, 0.2) * relay_to_bob * flip(x1, z, 0.3)
    })
    .unwrap()
}

/// Uniform inputs; the relay forwards its observation losslessly.
pub fn forwarding_design() -> InputDesign {
    InputDesign { p_x1: vec![0.5, 0.5], p_x2: vec![0.5, 0.5], comp_size: 2, q: vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0] }
}

fn random_row<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..len).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Channel with every `(x1, x2)` row drawn from a flat Dirichlet.
pub fn random_channel<R: Rng>(rng: &mut R, a: Alphabets) -> ChannelSpec {
    let mut law = Vec::with_capacity(a.law_len());
    for _ in 0..a.x1 * a.x2 {
        law.extend(random_row(rng, a.row_len()));
    }
    ChannelSpec::new(a, law).unwrap()
}

pub fn random_design<R: Rng>(rng: &mut R, a: Alphabets, comp: usize) -> InputDesign {
    let mut q = Vec::with_capacity(a.x2 * a.y2 * comp);
    for _ in 0..a.x2 * a.y2 {
        q.extend(random_row(rng, comp));
    }
    InputDesign { p_x1: random_row(rng, a.x1), p_x2: random_row(rng, a.x2), comp_size: comp, q }
}

pub fn random_alphabets<R: Rng>(rng: &mut R, max: usize) -> Alphabets {
    let mut d = || rng.gen_range(1..=max);
    Alphabets::new(d().max(2), d(), d(), d(), d())
}

/// Joint cells `([x1, x2, y2, yhat, y3, z], p)` built by direct enumeration.
pub fn oracle_joint(spec: &ChannelSpec, d: &InputDesign) -> Vec<([usize; 6], f64)> {
    let a = spec.alphabets();
    let mut cells = Vec::new();
    for x1 in 0..a.x1 {
        for x2 in 0..a.x2 {
            for y2 in 0..a.y2 {
                for yh in 0..d.comp_size {
                    for y3 in 0..a.y3 {
                        for z in 0..a.z {
                            let p = d.p_x1[x1]
                                * d.p_x2[x2]
                                * spec.prob(x1, x2, y2, y3, z)
                                * d.q[(x2 * a.y2 + y2) * d.comp_size + yh];
                            cells.push(([x1, x2, y2, yh, y3, z], p));
                        }
                    }
                }
            }
        }
    }
    cells
}

fn project(cells: &[([usize; 6], f64)], vars: &[usize]) -> HashMap<Vec<usize>, f64> {
    let mut m = HashMap::new();
    for (idx, p) in cells {
        *m.entry(vars.iter().map(|&v| idx[v]).collect()).or_insert(0.0) += p;
    }
    m
}

/// `I(A;B|C)` in bits by summing `p(abc) log p(abc)p(c) / (p(ac)p(bc))`.
/// Variable indices follow [`oracle_joint`].
pub fn oracle_cmi(cells: &[([usize; 6], f64)], a: &[usize], b: &[usize], c: &[usize]) -> f64 {
    let cat = |xs: &[&[usize]]| xs.concat();
    let abc = project(cells, &cat(&[a, b, c]));
    let ac = project(cells, &cat(&[a, c]));
    let bc = project(cells, &cat(&[b, c]));
    let cm = project(cells, c);
    let mut total = 0.0;
    for (key, &p) in &abc {
        if p <= 0.0 {
            continue;
        }
        let (ka, rest) = key.split_at(a.len());
        let (kb, kc) = rest.split_at(b.len());
        let pac = ac[&cat(&[ka, kc])];
        let pbc = bc[&cat(&[kb, kc])];
        total += p * (p * cm[kc] / (pac * pbc)).log2();
    }
    total
}

pub const X1: usize = 0;
pub const X2: usize = 1;
pub const Y2: usize = 2;
pub const YH: usize = 3;
pub const Y3: usize = 4;
pub const Z: usize = 5;

pub fn oracle_quantities(spec: &ChannelSpec, d: &InputDesign) -> InfoQuantities {
    let j = oracle_joint(spec, d);
    let i = |a: &[usize], b: &[usize], c: &[usize]| oracle_cmi(&j, a, b, c);
    InfoQuantities {
        i_x2_y3: i(&[X2], &[Y3], &[]),
        i_x2_z: i(&[X2], &[Z], &[]),
        i_x2_z_x1: i(&[X2], &[Z], &[X1]),
        i_yhat_y3_x2: i(&[YH], &[Y3], &[X2]),
        wz_bob: i(&[YH], &[X1, Y3], &[X2]),
        wz_eve: i(&[YH], &[X1, Z], &[X2]),
        i_x1_yhat_y3_x2: i(&[X1], &[YH, Y3], &[X2]),
        i_x1_y3_x2: i(&[X1], &[Y3], &[X2]),
        i_x1_z: i(&[X1], &[Z], &[]),
        i_x1_z_x2: i(&[X1], &[Z], &[X2]),
        i_x1x2_z: i(&[X1, X2], &[Z], &[]),
    }
}

/// Binary entropy written out independently of the library.
pub fn binary_entropy(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Decision tree written as nested comparisons, returning the leaf and the
/// smallest gap among the comparisons made on the way down.
pub fn tree_leaf(q: &InfoQuantities) -> (Leaf, f64) {
    let c = q.i_x2_y3;
    let b = q.i_yhat_y3_x2;
    let mut gap = f64::INFINITY;
    let mut less = |lhs: f64, rhs: f64| {
        gap = gap.min((lhs - rhs).abs());
        lhs < rhs
    };
    let leaf = if less(q.i_x2_z + q.wz_eve, c + q.wz_bob) {
        if less(q.i_x2_z + q.wz_eve, c + b) {
            if less(q.i_x2_z_x1, c + b) { Leaf::C1aI } else { Leaf::C1aII }
        } else if less(q.i_x2_z_x1, c + q.wz_bob) {
            Leaf::C1bI
        } else {
            Leaf::C1bII
        }
    } else if less(q.wz_eve, q.wz_bob) {
        if less(q.wz_eve, b) { Leaf::C2aI } else { Leaf::C2aII }
    } else if less(c, q.i_x2_z) {
        Leaf::C2bI
    } else if less(c, q.i_x2_z_x1) {
        Leaf::C2bIIA
    } else {
        Leaf::C2bIIB
    };
    (leaf, gap)
}
