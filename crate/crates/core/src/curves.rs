//! Elliptic curves over Q: invariants, short models, quadratic twists,
//! Q-isomorphism, the twist-to-simplest solver and traces of Frobenius.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cmdata::{lookup_cm_order, Table};
use crate::error::{Error, Result};
use crate::modarith::{gcd, is_prime, n_dagger, squarefree_part_rational};

/// Largest prime accepted by [`WeierstrassCurve::ap_trace`].
pub const AP_PRIME_LIMIT: u64 = 100_000;

/// A Weierstrass model y² + a1xy + a3y = x³ + a2x² + a4x + a6 over Q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeierstrassCurve {
    ainvs: [BigInt; 5],
    c4: BigInt,
    c6: BigInt,
    disc: BigInt,
    j: BigRational,
    short_a: BigInt,
    short_b: BigInt,
}

impl WeierstrassCurve {
    pub fn from_ainvs(ainvs: [BigInt; 5]) -> Result<WeierstrassCurve> {
        let [a1, a2, a3, a4, a6] = &ainvs;
        let k = |v: i64| BigInt::from(v);
        let b2: BigInt = a1 * a1 + k(4) * a2;
        let b4: BigInt = k(2) * a4 + a1 * a3;
        let b6: BigInt = a3 * a3 + k(4) * a6;
        let b8: BigInt = a1 * a1 * a6 + k(4) * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        let c4: BigInt = &b2 * &b2 - k(24) * &b4;
        let c6: BigInt = -(&b2 * &b2 * &b2) + k(36) * &b2 * &b4 - k(216) * &b6;
        let disc: BigInt = -(&b2 * &b2 * &b8) - k(8) * &b4 * &b4 * &b4 - k(27) * &b6 * &b6 + k(9) * &b2 * &b4 * &b6;
        if disc.is_zero() {
            return Err(Error::Domain("singular Weierstrass model".into()));
        }
        let j = BigRational::new(&c4 * &c4 * &c4, disc.clone());
        let (short_a, short_b) = if a1.is_zero() && a2.is_zero() && a3.is_zero() {
            (a4.clone(), a6.clone())
        } else {
            (k(-27) * &c4, k(-54) * &c6)
        };
        Ok(WeierstrassCurve { ainvs, c4, c6, disc, j, short_a, short_b })
    }

    pub fn from_i64(ainvs: [i64; 5]) -> Result<WeierstrassCurve> {
        WeierstrassCurve::from_ainvs(ainvs.map(BigInt::from))
    }

    /// The curve y² = x³ + Ax + B.
    pub fn from_short(a: BigInt, b: BigInt) -> Result<WeierstrassCurve> {
        let z = BigInt::zero();
        WeierstrassCurve::from_ainvs([z.clone(), z.clone(), z, a, b])
    }

    pub fn ainvs(&self) -> &[BigInt; 5] {
        &self.ainvs
    }

    pub fn c4(&self) -> &BigInt {
        &self.c4
    }

    pub fn c6(&self) -> &BigInt {
        &self.c6
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.disc
    }

    pub fn j_invariant(&self) -> &BigRational {
        &self.j
    }

    /// Coefficients (A, B) of a short model isomorphic over Q.
    pub fn short_model(&self) -> (&BigInt, &BigInt) {
        (&self.short_a, &self.short_b)
    }

    /// The quadratic twist y² = x³ + N²Ax + N³B.
    pub fn quadratic_twist(&self, n: i64) -> Result<WeierstrassCurve> {
        if n == 0 {
            return Err(Error::Domain("twist by zero".into()));
        }
        let nb = BigInt::from(n);
        WeierstrassCurve::from_short(&nb * &nb * &self.short_a, &nb * &nb * &nb * &self.short_b)
    }

    /// True iff some rational u has c4' = u⁴c4 and c6' = u⁶c6.
    pub fn is_isomorphic_q(&self, other: &WeierstrassCurve) -> bool {
        if self.j != other.j {
            return false;
        }
        let ratio = |x: &BigInt, y: &BigInt| BigRational::new(y.clone(), x.clone());
        if self.c4.is_zero() {
            return other.c4.is_zero() && is_rational_power(&ratio(&self.c6, &other.c6), 6);
        }
        if self.c6.is_zero() {
            return other.c6.is_zero() && is_rational_power(&ratio(&self.c4, &other.c4), 4);
        }
        let r4 = ratio(&self.c4, &other.c4);
        let r6 = ratio(&self.c6, &other.c6);
        let u2 = &r6 / &r4;
        &u2 * &u2 == r4 && is_rational_power(&u2, 2)
    }

    /// a_p = p + 1 − #E(F_p) for a prime p of good reduction for this model.
    pub fn ap_trace(&self, p: u64) -> Result<i64> {
        if p > AP_PRIME_LIMIT {
            return Err(Error::SearchTooLarge { size: p, cap: AP_PRIME_LIMIT });
        }
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        let pb = BigInt::from(p);
        if (&self.disc % &pb).is_zero() {
            return Err(Error::BadPrime(p));
        }
        let r = |x: &BigInt| x.mod_floor(&pb).to_u64().expect("reduced") as i64;
        let [a1, a2, a3, a4, a6] = [0, 1, 2, 3, 4].map(|i| r(&self.ainvs[i]));
        let pi = p as i64;
        if p == 2 {
            let mut count = 1i64;
            for x in 0..2i64 {
                for y in 0..2i64 {
                    let lhs = y * y + a1 * x * y + a3 * y;
                    let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                    if (lhs - rhs).rem_euclid(2) == 0 {
                        count += 1;
                    }
                }
            }
            return Ok(3 - count);
        }
        let mut chi = vec![-1i8; p as usize];
        chi[0] = 0;
        for y in 1..p {
            chi[(y * y % p) as usize] = 1;
        }
        let mut sum = 0i64;
        for x in 0..pi {
            let s = (a1 * x + a3) % pi;
            let cubic = ((x * x % pi * x) + a2 * x % pi * x + a4 * x + a6) % pi;
            let d = (s * s + 4 * cubic).rem_euclid(pi);
            sum += chi[d as usize] as i64;
        }
        Ok(-sum)
    }
}

impl fmt::Display for WeierstrassCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4, a6] = &self.ainvs;
        write!(f, "[{a1},{a2},{a3},{a4},{a6}]")
    }
}

fn is_rational_power(r: &BigRational, k: u32) -> bool {
    if r.is_zero() {
        return false;
    }
    if k % 2 == 0 && r.is_negative() {
        return false;
    }
    let perfect = |x: &BigInt| {
        let a = x.abs();
        let root = a.nth_root(k);
        root.pow(k) == a
    };
    perfect(r.numer()) && perfect(r.denom())
}

/// The twist parameter N and the simplest curve E^N is isomorphic to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistDatum {
    pub n: i64,
    pub n_dagger: u64,
    pub simplest_label: String,
}

/// Find a square-free N with gcd(ℓ, N†) = 1 such that E^N is a simplest curve.
///
/// Among several valid choices the smallest |N| wins, then positive N.
pub fn twist_to_simplest(e: &WeierstrassCurve, table: &Table) -> Result<TwistDatum> {
    let order = lookup_cm_order(e.j_invariant()).ok_or(Error::NotCm)?;
    let candidates = table.simplest_curves_for(order.disc)?;
    if order.j == 0 || order.j == 1728 {
        return candidates
            .iter()
            .find(|c| c.curve().is_isomorphic_q(e))
            .map(|c| TwistDatum { n: 1, n_dagger: 1, simplest_label: c.label.clone() })
            .ok_or_else(|| {
                Error::Unsupported(format!("j = {} and the curve is not one of the simplest curves", order.j))
            });
    }
    let (a, b) = e.short_model();
    let mut best: Option<(u64, bool, TwistDatum)> = None;
    for c in candidates {
        let target = c.curve();
        let (a2, b2) = target.short_model();
        let d = BigRational::new(b2 * a, b * a2);
        let n = match squarefree_part_rational(&d)?.to_i64() {
            Some(n) => n,
            None => continue,
        };
        let dag = n_dagger(n)?;
        if gcd(order.ell, dag) != 1 {
            continue;
        }
        if !e.quadratic_twist(n)?.is_isomorphic_q(&target) {
            return Err(Error::InternalInvariant(format!("twist by {n} is not isomorphic to {}", c.label)));
        }
        let key = (n.unsigned_abs(), n < 0);
        if best.as_ref().map_or(true, |(m, s, _)| key < (*m, *s)) {
            best = Some((key.0, key.1, TwistDatum { n, n_dagger: dag, simplest_label: c.label.clone() }));
        }
    }
    best.map(|(_, _, t)| t).ok_or_else(|| Error::InternalInvariant("no admissible twist to a simplest curve".into()))
}

/// Parse `[a1,a2,a3,a4,a6]` or `[A,B]`.
pub fn parse_curve(spec: &str) -> Result<WeierstrassCurve> {
    let inner = spec.trim().trim_start_matches('[').trim_end_matches(']');
    let vals: Vec<BigInt> = inner
        .split(',')
        .map(|t| t.trim().parse::<BigInt>().map_err(|_| Error::Domain(format!("bad integer {t:?} in {spec:?}"))))
        .collect::<Result<_>>()?;
    match vals.len() {
        2 => {
            let mut it = vals.into_iter();
            WeierstrassCurve::from_short(it.next().unwrap(), it.next().unwrap())
        }
        5 => {
            let arr: [BigInt; 5] = vals.try_into().expect("length checked");
            WeierstrassCurve::from_ainvs(arr)
        }
        n => Err(Error::Domain(format!("expected 2 or 5 coefficients, got {n}"))),
    }
}

pub(crate) fn j_of_short(a: &BigInt, b: &BigInt) -> Option<BigRational> {
    let a3: BigInt = BigInt::from(4) * a * a * a;
    let den: BigInt = &a3 + BigInt::from(27) * b * b;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(BigInt::from(1728) * a3, den))
}

pub(crate) fn rational_is_integer(r: &BigRational) -> bool {
    r.denom().is_one()
}
