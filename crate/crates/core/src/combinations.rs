//! Lexicographic k-combination enumeration and binomial counts.

/// Calls `f` with every `r`-combination of `0..n` (as sorted index slices) in
/// lexicographic order. Enumeration stops early when `f` returns `false`.
/// Returns `false` iff it was stopped early.
pub fn for_each_combination<F>(n: usize, r: usize, mut f: F) -> bool
where
    F: FnMut(&[usize]) -> bool,
{
    if r > n {
        return true;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        if !f(&idx) {
            return false;
        }
        // rightmost index that can still advance
        let mut i = r;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if idx[i] < n - r + i {
                break;
            }
            if i == 0 {
                return true;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Like [`for_each_combination`] but yields the chosen elements of `items`.
pub fn for_each_subset<T: Copy, F>(items: &[T], r: usize, mut f: F) -> bool
where
    F: FnMut(&[T]) -> bool,
{
    let mut buf = Vec::with_capacity(r);
    for_each_combination(items.len(), r, |idx| {
        buf.clear();
        buf.extend(idx.iter().map(|&i| items[i]));
        f(&buf)
    })
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_in_lexicographic_order() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| {
            seen.push(c.to_vec());
            true
        });
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn counts_match_binomial() {
        for n in 0..10 {
            for r in 0..=n + 1 {
                let mut c = 0u64;
                for_each_combination(n, r, |_| {
                    c += 1;
                    true
                });
                assert_eq!(c, binomial(n as u64, r as u64), "n={n} r={r}");
            }
        }
    }

    #[test]
    fn zero_sized_combination_is_visited_once() {
        let mut c = 0;
        for_each_combination(3, 0, |s| {
            assert!(s.is_empty());
            c += 1;
            true
        });
        assert_eq!(c, 1);
    }

    #[test]
    fn early_stop() {
        let mut c = 0;
        let done = for_each_combination(10, 3, |_| {
            c += 1;
            c < 5
        });
        assert!(!done);
        assert_eq!(c, 5);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(110, 4), 5_773_185);
        assert_eq!(binomial(9, 3), 84);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(1000, 500), u64::MAX);
    }
}
