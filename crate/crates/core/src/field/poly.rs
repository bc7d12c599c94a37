//! Dense polynomials over Z_p, constant term first.

/// Degree of `a`, or `None` for the zero polynomial.
pub(crate) fn degree(a: &[u32]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

/// Remainder of `a` modulo the monic polynomial `m`.
pub(crate) fn rem_monic(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let dm = degree(m).expect("modulus must be nonzero");
    debug_assert_eq!(m[dm], 1);
    let mut r: Vec<u64> = a.iter().map(|&c| u64::from(c)).collect();
    let p64 = u64::from(p);
    while let Some(dr) = degree_u64(&r) {
        if dr < dm {
            break;
        }
        let lead = r[dr];
        let shift = dr - dm;
        for (i, &mc) in m.iter().enumerate().take(dm + 1) {
            let sub = lead * u64::from(mc) % p64;
            r[shift + i] = (r[shift + i] + p64 - sub) % p64;
        }
    }
    r.truncate(dm);
    r.resize(dm, 0);
    r.into_iter().map(|c| c as u32).collect()
}

fn degree_u64(a: &[u64]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

/// Schoolbook product of `a` and `b` reduced by the monic modulus `m`.
pub(crate) fn mul_mod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let p64 = u64::from(p);
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + u64::from(ai) * u64::from(bj)) % p64;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
    rem_monic(&prod, m, p)
}

/// Returns the first monic divisor of degree `1..=deg/2`, in increasing
/// degree and lexicographic order, or `None` when `m` is irreducible.
pub(crate) fn find_divisor(m: &[u32], p: u32) -> Option<Vec<u32>> {
    let n = degree(m)?;
    for d in 1..=n / 2 {
        let count = u64::from(p).pow(d as u32);
        for idx in 0..count {
            let mut cand = digits(idx, p, d);
            cand.push(1);
            if rem_monic(m, &cand, p).iter().all(|&c| c == 0) {
                return Some(cand);
            }
        }
    }
    None
}

/// Base-`p` digits of `x`, least significant first, padded to `len`.
pub(crate) fn digits(mut x: u64, p: u32, len: usize) -> Vec<u32> {
    let p64 = u64::from(p);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((x % p64) as u32);
        x /= p64;
    }
    out
}

pub(crate) fn format(coeffs: &[u32]) -> String {
    let mut terms = Vec::new();
    for (i, &c) in coeffs.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let mono = match i {
            0 => String::new(),
            1 => "t".to_string(),
            _ => format!("t^{i}"),
        };
        let term = match (c, i) {
            (_, 0) => c.to_string(),
            (1, _) => mono,
            _ => format!("{c}{mono}"),
        };
        terms.push(term);
    }
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}
