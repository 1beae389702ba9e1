//! Selection by sorting everything and taking a prefix.

/// `(id, score, words)` triples.
pub type Item = (u64, f64, u64);

pub fn sorted(items: &[Item]) -> Vec<Item> {
    let mut v = items.to_vec();
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    v
}

/// Shortest prefix whose word total reaches `budget`, or everything.
pub fn budget_prefix(items: &[Item], budget: u64) -> Vec<u64> {
    let all = sorted(items);
    for k in 0..=all.len() {
        let words: u64 = all[..k].iter().map(|x| x.2).sum();
        if words >= budget {
            return all[..k].iter().map(|x| x.0).collect();
        }
    }
    all.iter().map(|x| x.0).collect()
}

/// `ceil(numer / denom / 100 * n)` best items, percentage given as a fraction.
pub fn percent_prefix(items: &[Item], numer: u64, denom: u64) -> Vec<u64> {
    let n = items.len() as u64;
    let keep = (numer * n).div_ceil(denom * 100) as usize;
    sorted(items)[..keep].iter().map(|x| x.0).collect()
}
