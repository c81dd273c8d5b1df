//! Modular integer arithmetic: residues, square-free parts, Kronecker symbols
//! and the Chinese remainder theorem.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An element of Z/NZ, always stored reduced into `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    /// Reduce `value` modulo `modulus`. Panics if `modulus` is zero.
    pub fn new(value: i64, modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Residue { value: reduce_i64(value, modulus), modulus }
    }

    pub fn from_u64(value: u64, modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Residue { value: value % modulus, modulus }
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.modulus
    }

    pub fn is_unit(self) -> bool {
        gcd(self.value, self.modulus) == 1
    }

    pub fn inverse(self) -> Option<Residue> {
        inv_mod(self.value, self.modulus).map(|v| Residue { value: v, modulus: self.modulus })
    }

    pub fn pow(self, e: u64) -> Residue {
        Residue { value: pow_mod(self.value, e, self.modulus), modulus: self.modulus }
    }

    fn check(self, other: Residue) {
        assert_eq!(self.modulus, other.modulus, "residues with different moduli");
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

impl Add for Residue {
    type Output = Residue;
    fn add(self, rhs: Residue) -> Residue {
        self.check(rhs);
        Residue::from_u64((self.value as u128 + rhs.value as u128) as u64 % self.modulus, self.modulus)
    }
}

impl Sub for Residue {
    type Output = Residue;
    fn sub(self, rhs: Residue) -> Residue {
        self.check(rhs);
        Residue::from_u64((self.value + self.modulus - rhs.value) % self.modulus, self.modulus)
    }
}

impl Mul for Residue {
    type Output = Residue;
    fn mul(self, rhs: Residue) -> Residue {
        self.check(rhs);
        Residue::from_u64(mul_mod(self.value, rhs.value, self.modulus), self.modulus)
    }
}

impl Neg for Residue {
    type Output = Residue;
    fn neg(self) -> Residue {
        Residue::from_u64((self.modulus - self.value) % self.modulus, self.modulus)
    }
}

/// A non-zero square-free integer together with the conductor N† of Q(√N).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SquarefreeInt {
    value: i64,
    dagger: u64,
}

impl SquarefreeInt {
    pub fn new(value: i64) -> Result<Self> {
        let dagger = n_dagger(value)?;
        Ok(SquarefreeInt { value, dagger })
    }

    pub fn value(self) -> i64 {
        self.value
    }

    pub fn dagger(self) -> u64 {
        self.dagger
    }

    /// Discriminant of Q(√N): N when N ≡ 1 mod 4, else 4N.
    pub fn field_discriminant(self) -> i64 {
        field_discriminant(self.value)
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

pub fn reduce_i64(value: i64, modulus: u64) -> u64 {
    (value as i128).rem_euclid(modulus as i128) as u64
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let e = (a as i128 % m as i128).extended_gcd(&(m as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m as i128) as u64)
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

/// Distinct prime factors of `n` in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// All positive divisors of `n` in increasing order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Primes up to and including `bound`.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut k = i * i;
            while k <= n {
                sieve[k] = false;
                k += i;
            }
        }
        i += 1;
    }
    sieve.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i as u64).collect()
}

/// Write `n = N·m²` with `N` square-free and of the same sign as `n`.
pub fn squarefree_part(n: i64) -> Result<(i64, u64)> {
    let (core, root) = squarefree_part_big(&BigInt::from(n))?;
    Ok((core.to_i64().expect("fits"), root.to_u64().expect("fits")))
}

const TRIAL_LIMIT: u64 = 1_000_000;

/// Arbitrary-precision square-free decomposition.
///
/// Trial division runs to 10⁶. A remaining cofactor below 10¹⁸ has at most two
/// prime factors, so it is either square-free or a perfect square; larger
/// cofactors that are not perfect squares are rejected.
pub fn squarefree_part_big(n: &BigInt) -> Result<(BigInt, BigInt)> {
    if n.is_zero() {
        return Err(Error::Domain("squarefree_part of zero".into()));
    }
    let mut rest = n.abs();
    let mut core = BigInt::one();
    let mut root = BigInt::one();
    let mut p = 2u64;
    while p <= TRIAL_LIMIT {
        let pb = BigInt::from(p);
        if &pb * &pb > rest {
            break;
        }
        let mut e = 0u32;
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            e += 1;
        }
        if e > 0 {
            root *= pb.pow(e / 2);
            if e % 2 == 1 {
                core *= &pb;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !rest.is_one() {
        let s = rest.sqrt();
        if &s * &s == rest {
            root *= s;
        } else if rest < BigInt::from(10u64).pow(18) || p <= TRIAL_LIMIT {
            core *= rest;
        } else {
            return Err(Error::Domain(format!("cannot certify square-free part of {n}")));
        }
    }
    if n.is_negative() {
        core = -core;
    }
    Ok((core, root))
}

/// Square-free part of a non-zero rational number `r`, i.e. the square-free
/// integer `N` with `r = N·q²` for some rational `q`.
pub fn squarefree_part_rational(r: &BigRational) -> Result<BigInt> {
    let prod = r.numer() * r.denom();
    Ok(squarefree_part_big(&prod)?.0)
}

pub fn is_squarefree(n: i64) -> bool {
    n != 0 && matches!(squarefree_part(n), Ok((_, 1)))
}

/// Discriminant of Q(√N) for square-free `N`.
pub fn field_discriminant(n: i64) -> i64 {
    if n.rem_euclid(4) == 1 {
        n
    } else {
        4 * n
    }
}

/// N† = |disc Q(√N)|: |N| if N ≡ 1 mod 4, else |4N|.
pub fn n_dagger(n: i64) -> Result<u64> {
    if !is_squarefree(n) {
        return Err(Error::Domain(format!("{n} is not a non-zero square-free integer")));
    }
    Ok(field_discriminant(n).unsigned_abs())
}

/// The Kronecker symbol (D | a).
pub fn kronecker(d: i64, a: i64) -> i32 {
    kronecker_i128(d as i128, a as i128)
}

fn kronecker_i128(mut a: i128, mut b: i128) -> i32 {
    const TAB2: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];
    if b == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let v = b.trailing_zeros();
    b >>= v;
    let mut k = if v % 2 == 1 { TAB2[(a & 7) as usize] } else { 1 };
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    loop {
        if a == 0 {
            return if b == 1 { k } else { 0 };
        }
        let v = a.trailing_zeros();
        a >>= v;
        if v % 2 == 1 {
            k *= TAB2[(b & 7) as usize];
        }
        if a & b & 2 != 0 {
            k = -k;
        }
        let r = a.abs();
        a = b % r;
        b = r;
    }
}

/// Solve x ≡ u mod M, x ≡ v mod N; the result is unique modulo lcm(M, N).
pub fn crt_pair(u: Residue, v: Residue) -> Result<Residue> {
    let (m, n) = (u.modulus() as i128, v.modulus() as i128);
    let e = m.extended_gcd(&n);
    let g = e.gcd;
    let diff = v.value() as i128 - u.value() as i128;
    if diff % g != 0 {
        return Err(Error::CrtConflict(format!("{u} and {v}")));
    }
    let l = m / g * n;
    let t = (diff / g).rem_euclid(n / g) * e.x.rem_euclid(n / g) % (n / g);
    let x = (u.value() as i128 + m * t).rem_euclid(l);
    Ok(Residue::from_u64(x as u64, l as u64))
}

/// CRT on raw values with coprime moduli.
pub fn crt_coprime(u: u64, m: u64, v: u64, n: u64) -> u64 {
    crt_pair(Residue::from_u64(u, m), Residue::from_u64(v, n))
        .expect("coprime moduli always admit a CRT solution")
        .value()
}

/// The exponent n_{E,ℓ}: 4 for ℓ = 2, 3 for ℓ = 3 and j = 0, otherwise 1.
pub fn n_exponent(j: &BigRational, ell: u64) -> u32 {
    match ell {
        2 => 4,
        3 if j.is_zero() => 3,
        _ => 1,
    }
}
