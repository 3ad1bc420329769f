//! Combinatorial ranking of strictly increasing index tuples, stored as bitmasks.

use std::sync::OnceLock;

pub const MAX_DIM: usize = 8;

/// Increasing k-tuples of `0..n` in lexicographic order, with the inverse map.
#[derive(Debug)]
pub struct Basis {
    pub masks: Vec<u16>,
    index: Vec<u16>,
}

impl Basis {
    fn build(n: usize, k: usize) -> Self {
        let mut masks = Vec::new();
        let mut tuple = Vec::with_capacity(k);
        push_combinations(0, n, k, &mut tuple, &mut masks);
        let mut index = vec![u16::MAX; 1 << n];
        for (r, &m) in masks.iter().enumerate() {
            index[m as usize] = r as u16;
        }
        Basis { masks, index }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn rank(&self, mask: u16) -> usize {
        let r = self.index[mask as usize];
        debug_assert!(r != u16::MAX);
        r as usize
    }
}

fn push_combinations(start: usize, n: usize, k: usize, tuple: &mut Vec<usize>, out: &mut Vec<u16>) {
    if tuple.len() == k {
        out.push(tuple.iter().fold(0u16, |m, &i| m | (1 << i)));
        return;
    }
    for i in start..n {
        tuple.push(i);
        push_combinations(i + 1, n, k, tuple, out);
        tuple.pop();
    }
}

static TABLES: OnceLock<Vec<Vec<Basis>>> = OnceLock::new();

/// Cached basis for `(n, k)`; requires `k <= n <= MAX_DIM`.
pub fn basis(n: usize, k: usize) -> &'static Basis {
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| (0..=n).map(|k| Basis::build(n, k)).collect())
            .collect()
    });
    &tables[n][k]
}

pub fn indices(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| mask & (1 << i) != 0)
}

/// Sign of `e^a ∧ e^b` relative to `e^(a|b)`; zero if they overlap.
pub fn merge_sign(a: u16, b: u16) -> f64 {
    if a & b != 0 {
        return 0.0;
    }
    let mut swaps = 0u32;
    for j in indices(b) {
        swaps += (a >> (j + 1)).count_ones();
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bitmask and sign of an arbitrary index sequence; `None` on a repeated index.
pub fn canonicalize(idx: &[usize]) -> Option<(u16, f64)> {
    let mut mask = 0u16;
    let mut sign = 1.0;
    for &i in idx {
        if mask & (1 << i) != 0 {
            return None;
        }
        // moving i left past every larger index already present
        if (mask >> (i + 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= 1 << i;
    }
    Some((mask, sign))
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
