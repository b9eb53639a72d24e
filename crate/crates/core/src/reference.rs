//! Slow reference evaluations built from explicit tensor functions and
//! brute-force inner products, kept independent of the pyramid-based fast paths.

use crate::haar::{martingale, Martingale};
use crate::ops::{
    AFamily, Atom, BlockAssignment, CoeffKey, FullParaproductSpec, PartialParaproductSpec, ShiftSpec,
};
use crate::function::{GridFunction, LineFunction};
use crate::grid::{DyadicInterval, DyadicRectangle, Param, ProductGrid};

pub fn atom_line(depth: u32, i: DyadicInterval, a: Atom) -> LineFunction {
    let ind = LineFunction::indicator(depth, i);
    match a {
        Atom::Haar => LineFunction::haar(depth, i),
        Atom::Haar0 => ind.scale(i.side_length().sqrt().recip()),
        Atom::Avg => ind.scale(i.side_length().recip()),
        Atom::Box => ind,
    }
}

pub fn atom(grid: ProductGrid, i1: DyadicInterval, a1: Atom, i2: DyadicInterval, a2: Atom) -> GridFunction {
    GridFunction::tensor(&atom_line(grid.n1, i1, a1), &atom_line(grid.n2, i2, a2)).unwrap()
}

fn child(i: DyadicInterval, k: u32, t: u32) -> DyadicInterval {
    DyadicInterval::new(i.level + k, (i.index << k) + t).unwrap()
}

fn intervals(max_level: i64) -> Vec<DyadicInterval> {
    (0..=max_level)
        .flat_map(|l| (0..1u32 << l).map(move |m| DyadicInterval::new(l as u32, m).unwrap()))
        .collect()
}

/// All tuples `(t_0, …, t_n)` with `t_i < radix[i]`.
fn tuples(radix: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &r in radix {
        out = out.into_iter().flat_map(|t| (0..r).map(move |x| [t.clone(), vec![x]].concat())).collect();
    }
    out
}

pub fn shift(spec: &ShiftSpec, fs: &[GridFunction]) -> GridFunction {
    let grid = spec.grid();
    let ks = spec.complexities();
    let kinds = spec.kinds();
    let n = ks.len() - 1;
    let kmax = |m: usize| ks.iter().map(|k| k[m]).max().unwrap() as i64;
    let mut out = GridFunction::zeros(grid);
    let radix: Vec<u32> = ks.iter().map(|k| 1 << (k[0] + k[1])).collect();
    for k1 in intervals(grid.n1 as i64 - 1 - kmax(0)) {
        for k2 in intervals(grid.n2 as i64 - 1 - kmax(1)) {
            let k = DyadicRectangle::new(k1, k2);
            for t in tuples(&radix) {
                let offsets: Vec<[u32; 2]> =
                    (0..=n).map(|i| [t[i] >> ks[i][1], t[i] & ((1 << ks[i][1]) - 1)]).collect();
                let r = |i: usize| {
                    atom(
                        grid,
                        child(k1, ks[i][0], offsets[i][0]),
                        kinds[i][0],
                        child(k2, ks[i][1], offsets[i][1]),
                        kinds[i][1],
                    )
                };
                let a = spec.coefficient(&CoeffKey { k, offsets: offsets.clone() }).unwrap();
                let prod: f64 = (0..n).map(|i| fs[i].inner(&r(i)).unwrap()).product();
                out = &out + &r(n).scale(a * prod);
            }
        }
    }
    out
}

pub fn partial(spec: &PartialParaproductSpec, fs: &[GridFunction]) -> GridFunction {
    let grid = spec.grid();
    let ks = spec.complexities();
    let kinds = spec.kinds();
    let n = ks.len() - 1;
    let pslot = spec.paraproduct_slot() - 1;
    let p = spec.paraproduct_param();
    let (ds, dp) = match p {
        Param::Two => (grid.n1, grid.n2),
        Param::One => (grid.n2, grid.n1),
    };
    let kmax = *ks.iter().max().unwrap() as i64;
    let mut out = GridFunction::zeros(grid);
    for ksh in intervals(ds as i64 - 1 - kmax) {
        for kp in intervals(dp as i64 - 1) {
            let b = (1usize << kp.level) + kp.index as usize;
            let radix: Vec<u32> = ks.iter().map(|&k| 1 << k).collect();
            for t in tuples(&radix) {
                let Some(seq) = spec.sequence(ksh, &t) else { continue };
                let a = seq[b];
                let u = |i: usize| {
                    let s = (child(ksh, ks[i], t[i]), kinds[i]);
                    let q = (kp, if i == pslot { Atom::Haar } else { Atom::Avg });
                    match p {
                        Param::Two => atom(grid, s.0, s.1, q.0, q.1),
                        Param::One => atom(grid, q.0, q.1, s.0, s.1),
                    }
                };
                let prod: f64 = (0..n).map(|i| fs[i].inner(&u(i)).unwrap()).product();
                out = &out + &u(n).scale(a * prod);
            }
        }
    }
    out
}

pub fn full(spec: &FullParaproductSpec, fs: &[GridFunction]) -> GridFunction {
    let grid = spec.grid();
    let haar_slots = spec.haar_slots();
    let n = fs.len();
    let mut out = GridFunction::zeros(grid);
    for (k, a) in &spec.coefficients().coeffs {
        let u = |slot: usize| {
            let pick = |m: usize| if haar_slots[m] == slot + 1 { Atom::Haar } else { Atom::Avg };
            atom(grid, k.i1, pick(0), k.i2, pick(1))
        };
        let prod: f64 = (0..n).map(|i| fs[i].inner(&u(i)).unwrap()).product();
        out = &out + &u(n).scale(a * prod);
    }
    out
}

/// Square functions of the `A` families summed rectangle by rectangle.
pub fn a_square(family: AFamily, blocks: &BlockAssignment, fs: &[GridFunction]) -> GridFunction {
    let grid = fs[0].grid();
    let top = |m: usize, depth: u32| -> i64 {
        match blocks.0.iter().filter_map(|s| s[m]).max() {
            Some(k) => depth as i64 - 1 - k as i64,
            None => depth as i64,
        }
    };
    let (t1, t2) = (top(0, grid.n1), top(1, grid.n2));
    let value = |k: DyadicRectangle| -> f64 {
        fs.iter()
            .zip(&blocks.0)
            .map(|(f, b)| {
                let g = match *b {
                    [Some(a), Some(c)] => martingale(f, Martingale::Block(k, (a, c))).unwrap(),
                    [Some(a), None] => martingale(f, Martingale::PartialBlock(Param::One, k.i1, a)).unwrap(),
                    [None, Some(c)] => martingale(f, Martingale::PartialBlock(Param::Two, k.i2, c)).unwrap(),
                    [None, None] => f.clone(),
                };
                g.abs().average(k)
            })
            .product()
    };
    let ind = |k: DyadicRectangle| GridFunction::indicator(grid, k);
    let mut out = GridFunction::zeros(grid);
    match family {
        AFamily::A1 | AFamily::A3 => {
            for k1 in intervals(t1) {
                for k2 in intervals(t2) {
                    let k = DyadicRectangle::new(k1, k2);
                    let v = value(k);
                    let v = if family == AFamily::A1 { v * v } else { v };
                    out = &out + &ind(k).scale(v);
                }
            }
            if family == AFamily::A1 {
                out = out.map(f64::sqrt);
            }
        }
        AFamily::A2 { outer } => {
            let (to, ti) = if outer == 1 { (t1, t2) } else { (t2, t1) };
            for ko in intervals(to) {
                let mut inner = GridFunction::zeros(grid);
                for ki in intervals(ti) {
                    let k = if outer == 1 { DyadicRectangle::new(ko, ki) } else { DyadicRectangle::new(ki, ko) };
                    inner = &inner + &ind(k).scale(value(k));
                }
                out = &out + &(&inner * &inner);
            }
            out = out.map(f64::sqrt);
        }
    }
    out
}
