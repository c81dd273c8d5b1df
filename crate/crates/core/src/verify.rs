//! Independent checks of computed images: Frobenius traces and determinants,
//! the entanglement index pattern, and conjugacy versus isomorphism.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::Zero;

use crate::adelic::GaloisImageResult;
use crate::cartan::{build_cartan, build_normalizer, CartanParams};
use crate::curves::WeierstrassCurve;
use crate::error::{Error, Result};
use crate::matgl2::{
    fingerprint, gl2_order, intersect, is_conjugate, preimage_subgroup, reduce_subgroup, subgroup_index, ConjugacyMode,
    Mat2, Subgroup, DEFAULT_CONJUGACY_CAP,
};
use crate::modarith::{kronecker, primes_up_to, reduce_i64};

/// Outcome of [`frobenius_consistency`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusReport {
    pub level: u32,
    pub prime_bound: u64,
    pub primes_checked: usize,
    /// Split primes whose Frobenius element in the Cartan was located exactly.
    pub split_primes_checked: usize,
    pub classes_total: usize,
    pub classes_hit: usize,
}

impl FrobeniusReport {
    pub fn coverage(&self) -> f64 {
        if self.classes_total == 0 {
            1.0
        } else {
            self.classes_hit as f64 / self.classes_total as f64
        }
    }
}

/// For every prime p ≤ `prime_bound` not dividing M·disc(E), require an
/// element of the image with trace ≡ a_p and det ≡ p mod M.
pub fn frobenius_consistency(
    e: &WeierstrassCurve,
    image: &GaloisImageResult,
    prime_bound: u64,
) -> Result<FrobeniusReport> {
    frobenius_consistency_group(e, image.group(), &image.params, prime_bound)
}

/// [`frobenius_consistency`] for an arbitrary subgroup of N_{δ,φ}(M).
///
/// At primes that split in the CM order the Frobenius element itself is
/// pinned down inside the Cartan (up to the action of complex conjugation) and
/// its membership is checked as well.
pub fn frobenius_consistency_group(
    e: &WeierstrassCurve,
    group: &Subgroup,
    params: &CartanParams,
    prime_bound: u64,
) -> Result<FrobeniusReport> {
    let m = group.modulus();
    let set = group.elements()?;
    let all_classes: BTreeSet<(u32, u32)> = set.iter().map(|g| (g.trace(), g.det())).collect();
    let mut hit: BTreeSet<(u32, u32)> = BTreeSet::new();
    let disc = e.discriminant();
    let mut checked = 0usize;
    let mut split_checked = 0usize;
    for p in primes_up_to(prime_bound) {
        if m as u64 % p == 0 || (disc % BigInt::from(p)).is_zero() {
            continue;
        }
        checked += 1;
        let ap = e.ap_trace(p)?;
        let key = (reduce_i64(ap, m as u64) as u32, (p % m as u64) as u32);
        if !all_classes.contains(&key) {
            return Err(Error::FrobeniusMismatch {
                p,
                checked,
                detail: format!("no element with trace {} and det {} mod {m}", key.0, key.1),
            });
        }
        hit.insert(key);
        if let Some(frob) = split_frobenius(ap, p, params, m) {
            split_checked += 1;
            let conj = conjugate_in_order(&frob, params);
            if !set.contains(&frob) && !set.contains(&conj) {
                return Err(Error::FrobeniusMismatch {
                    p,
                    checked,
                    detail: format!("Frobenius {frob} is not in the image"),
                });
            }
        }
    }
    Ok(FrobeniusReport {
        level: m,
        prime_bound,
        primes_checked: checked,
        split_primes_checked: split_checked,
        classes_total: all_classes.len(),
        classes_hit: hit.len(),
    })
}

/// The Cartan element c(a, b) with a_p = 2a + bφ and b² = (a_p² − 4p)/disc,
/// for primes that split in the order.
fn split_frobenius(ap: i64, p: u64, params: &CartanParams, m: u32) -> Option<Mat2> {
    let disc = params.discriminant;
    if kronecker(disc, p as i64) != 1 {
        return None;
    }
    let num = ap * ap - 4 * p as i64;
    if num % disc != 0 {
        return None;
    }
    let b2 = num / disc;
    let b = (b2 as u64).sqrt() as i64;
    if b * b != b2 || (ap - b * params.phi) % 2 != 0 {
        return None;
    }
    let a = (ap - b * params.phi) / 2;
    Some(crate::cartan::cel(a, b, params, m))
}

/// c(a, b) ↦ c(a + bφ, −b), the other root of the same characteristic polynomial.
fn conjugate_in_order(c: &Mat2, params: &CartanParams) -> Mat2 {
    let [x, y, _, _] = c.entries().map(i64::from);
    crate::cartan::cel(x, -y, params, c.modulus())
}

/// Index pattern of the Cartan part at M = ℓⁿ·N† and at each factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntanglementReport {
    pub cartan_index: u64,
    pub ell_index: u64,
    pub dagger_index: u64,
}

/// Require [C(M) : G ∩ C(M)] = 2 while both factor-level Cartan indices are 1.
/// Returns `None` for simplest curves, which have no N† factor.
pub fn entanglement_check(image: &GaloisImageResult) -> Result<Option<EntanglementReport>> {
    if image.is_simplest {
        return Ok(None);
    }
    let params = &image.params;
    let m = image.level;
    let dag = image.twist.n_dagger as u32;
    let q = m / dag;
    let cartan = build_cartan(params, m);
    let inside = intersect(image.group(), &cartan)?;
    let cartan_index = subgroup_index(&cartan, &inside)?;
    let factor = |d: u32| -> Result<u64> { subgroup_index(&build_cartan(params, d), &reduce_subgroup(&inside, d)?) };
    let report = EntanglementReport { cartan_index, ell_index: factor(q)?, dagger_index: factor(dag)? };
    if (report.cartan_index, report.ell_index, report.dagger_index) != (2, 1, 1) {
        return Err(Error::EntanglementMismatch(format!(
            "index pattern ({}; {}, {}), expected (2; 1, 1)",
            report.cartan_index, report.ell_index, report.dagger_index
        )));
    }
    Ok(Some(report))
}

/// Outcome of [`differentiation_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferentiationReport {
    pub level: u32,
    /// `Some(true)` with a witness when a conjugator was found, `Some(false)`
    /// when exhaustive search or fingerprints rule conjugacy out, `None` when
    /// only fingerprints were available and they agree.
    pub conjugate: Option<bool>,
    pub witness: Option<Mat2>,
    pub isomorphic: bool,
}

/// Bring an image to level `m` (full preimage or reduction).
pub fn image_at_level(image: &GaloisImageResult, m: u32) -> Result<Subgroup> {
    let g = image.group();
    let level = g.modulus();
    if m % level == 0 {
        let (norm, _) = build_normalizer(&image.params, m, 1);
        preimage_subgroup(g, m, &norm)
    } else if level % m == 0 {
        reduce_subgroup(g, m)
    } else {
        Err(Error::BadLevel(format!("{m} is neither a multiple nor a divisor of {level}")))
    }
}

/// Compare conjugacy of two images at a common level with Q-isomorphism of the curves.
pub fn differentiation_check(
    e1: &WeierstrassCurve,
    i1: &GaloisImageResult,
    e2: &WeierstrassCurve,
    i2: &GaloisImageResult,
    m: u32,
) -> Result<DifferentiationReport> {
    if i1.params != i2.params {
        return Err(Error::Domain("curves have different CM orders".into()));
    }
    let g1 = image_at_level(i1, m)?;
    let g2 = image_at_level(i2, m)?;
    let isomorphic = e1.is_isomorphic_q(e2);
    let (conjugate, witness) = conjugacy_verdict(&g1, &g2)?;
    let report = DifferentiationReport { level: m, conjugate, witness, isomorphic };
    if let Some(c) = conjugate {
        if c != isomorphic {
            return Err(Error::DifferentiationMismatch(format!(
                "conjugate at {m}: {c}, isomorphic over Q: {isomorphic}"
            )));
        }
    }
    Ok(report)
}

/// Exhaustive search when |GL(2, Z/MZ)| is within the cap, fingerprints otherwise.
pub fn conjugacy_verdict(g: &Subgroup, h: &Subgroup) -> Result<(Option<bool>, Option<Mat2>)> {
    if gl2_order(g.modulus() as u64) <= DEFAULT_CONJUGACY_CAP {
        let w = is_conjugate(g, h, ConjugacyMode::FullGl2)?;
        return Ok((Some(w.is_some()), w));
    }
    if fingerprint(g)? != fingerprint(h)? {
        Ok((Some(false), None))
    } else {
        Ok((None, None))
    }
}

/// The Cartan part of an image: G ∩ C_{δ,φ}(M).
pub fn cartan_part(image: &GaloisImageResult) -> Result<Subgroup> {
    intersect(image.group(), &build_cartan(&image.params, image.level))
}

/// A subgroup that shares the Cartan part H of `image` but replaces the
/// non-Cartan coset by H·g, where g is the first element of C \ H (in key
/// order) with g² ∈ H. Used as a negative control for the Frobenius check.
pub fn perturbed_image(image: &GaloisImageResult) -> Result<Subgroup> {
    let h = cartan_part(image)?;
    let cartan = build_cartan(&image.params, image.level);
    let hset = h.elements()?;
    let g = cartan
        .elements()?
        .iter()
        .find(|g| !hset.contains(g) && hset.contains(&g.mul(g)))
        .ok_or_else(|| Error::InternalInvariant("no element of C \\ H squares into H".into()))?;
    let mut gens = h.generators().to_vec();
    gens.push(g);
    Subgroup::from_generators(image.level, gens, image.params.cartan_ambient())
}
