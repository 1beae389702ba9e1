//! Direct evaluation of the length-match term and exhaustive enumeration of
//! bead sequences.
//!
//! The normal tail is integrated numerically instead of going through erfc:
//! `P(|Z| >= x) = 2 phi(x) * integral_0^inf exp(-x u - u^2 / 2) du`.

use std::collections::HashMap;

const BEADS: [(usize, usize); 6] = [(1, 1), (1, 0), (0, 1), (2, 1), (1, 2), (2, 2)];

pub fn delta(ls: f64, lt: f64, c: f64, s2: f64) -> f64 {
    let mean = (ls + lt / c) / 2.0;
    if mean == 0.0 {
        0.0
    } else {
        (c * ls - lt) / (s2 * mean).sqrt()
    }
}

/// ln of the two-sided normal tail beyond `|z|`.
pub fn ln_two_sided_tail(z: f64) -> f64 {
    let x = z.abs();
    let upper = if x > 1.5 { 60.0 / x } else { 40.0 };
    let n = 20_000;
    let h = upper / n as f64;
    let f = |u: f64| (-x * u - u * u / 2.0).exp();
    let mut s = f(0.0) + f(upper);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = s * h / 3.0;
    let ln_phi = -x * x / 2.0 - 0.5 * (2.0 * std::f64::consts::PI).ln();
    std::f64::consts::LN_2 + ln_phi + integral.ln()
}

/// Length term of a 1-1 pair minus the 1-1 penalty.
pub fn pair_score(ls: usize, lt: usize, c: f64, s2: f64, penalty_one_one: f64) -> f64 {
    ln_two_sided_tail(delta(ls as f64, lt as f64, c, s2)) - penalty_one_one
}

pub struct BruteAligner<'a> {
    pub src: &'a [usize],
    pub tgt: &'a [usize],
    pub c: f64,
    pub s2: f64,
    /// Penalty per bead shape; shapes absent here are not allowed.
    pub penalties: HashMap<(usize, usize), f64>,
    memo: HashMap<(usize, usize), f64>,
}

impl<'a> BruteAligner<'a> {
    pub fn new(src: &'a [usize], tgt: &'a [usize], c: f64, s2: f64, penalties: HashMap<(usize, usize), f64>) -> Self {
        BruteAligner { src, tgt, c, s2, penalties, memo: HashMap::new() }
    }

    fn bead(&mut self, ls: usize, lt: usize) -> f64 {
        let (c, s2) = (self.c, self.s2);
        *self.memo.entry((ls, lt)).or_insert_with(|| -ln_two_sided_tail(delta(ls as f64, lt as f64, c, s2)))
    }

    /// Minimum total cost over every complete bead sequence, and how many
    /// sequences were visited.
    pub fn minimum(&mut self) -> (f64, u64) {
        let mut best = f64::INFINITY;
        let mut visited = 0;
        self.walk(0, 0, 0.0, &mut best, &mut visited);
        (best, visited)
    }

    fn walk(&mut self, i: usize, j: usize, acc: f64, best: &mut f64, visited: &mut u64) {
        if i == self.src.len() && j == self.tgt.len() {
            *visited += 1;
            *best = best.min(acc);
            return;
        }
        for (di, dj) in BEADS {
            let Some(&pen) = self.penalties.get(&(di, dj)) else { continue };
            if i + di > self.src.len() || j + dj > self.tgt.len() {
                continue;
            }
            let ls: usize = self.src[i..i + di].iter().sum();
            let lt: usize = self.tgt[j..j + dj].iter().sum();
            let cost = self.bead(ls, lt) + pen;
            self.walk(i + di, j + dj, acc + cost, best, visited);
        }
    }
}
