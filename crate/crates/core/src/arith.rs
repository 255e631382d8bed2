//! Small-integer number theory used by order finding.

use num_integer::Integer;

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    result
}

/// `base^(2^l) mod m` by `l` squarings.
pub fn pow2_power_mod(base: u64, l: u32, m: u64) -> u64 {
    let mut b = base % m;
    for _ in 0..l {
        b = mul_mod(b, b, m);
    }
    b
}

/// Smallest `r >= 1` with `x^r = 1 (mod n)`, by brute force. `None` when
/// `gcd(x, n) != 1`.
pub fn multiplicative_order(x: u64, n: u64) -> Option<u64> {
    if n < 2 || gcd(x, n) != 1 {
        return None;
    }
    let x = x % n;
    let mut acc = x;
    let mut r = 1;
    while acc != 1 {
        acc = mul_mod(acc, x, n);
        r += 1;
    }
    Some(r)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Residues in `[1, n)` coprime to `n`.
pub fn units(n: u64) -> Vec<u64> {
    (1..n).filter(|&x| gcd(x, n) == 1).collect()
}

/// Bits needed to hold every residue below `n`.
pub fn register_bits(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}
