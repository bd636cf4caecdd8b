//! Exact counting helpers. All results saturate at `u128::MAX`.

pub fn factorial(n: u64) -> u128 {
    (1..=n as u128).fold(1u128, |a, b| a.saturating_mul(b))
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = match acc.checked_mul(n as u128 - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Stirling number of the second kind: partitions of `n` items into `k`
/// nonempty unlabeled blocks.
pub fn stirling2(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let mut row = vec![0u128; k as usize + 1];
    row[0] = 1;
    for i in 1..=n as usize {
        for j in (1..=k.min(i as u64) as usize).rev() {
            row[j] = (j as u128).saturating_mul(row[j]).saturating_add(row[j - 1]);
        }
        row[0] = 0;
    }
    row[k as usize]
}

/// Number of labeled partitions of `m` items into `p` parts, the first `p-1`
/// (or all `p`, unless `allow_empty_last`) nonempty.
pub fn labeled_partitions(m: u64, p: u64, allow_empty_last: bool) -> u128 {
    let full = factorial(p).saturating_mul(stirling2(m, p));
    if allow_empty_last && p >= 1 {
        full.saturating_add(factorial(p - 1).saturating_mul(stirling2(m, p - 1)))
    } else {
        full
    }
}
