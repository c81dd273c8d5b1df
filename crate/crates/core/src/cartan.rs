//! Cartan subgroups C_{δ,φ}(N), their normalizers N_{δ,φ}(N), the special
//! elements c_ε and c'_ε, basis changes, and determinant-condition subgroups.

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::matgl2::{Ambient, ElementSet, Mat2, Subgroup};
use crate::modarith::{field_discriminant, gcd, inv_mod, is_squarefree, kronecker, n_dagger, reduce_i64, Residue};

/// The pair (δ, φ) attached to an imaginary quadratic order of discriminant Δ_K f².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CartanParams {
    pub delta: i64,
    pub phi: i64,
    pub discriminant: i64,
}

impl CartanParams {
    /// Parameters for an order given by its discriminant Δ_K f².
    pub fn from_discriminant(disc: i64) -> Result<CartanParams> {
        let (dk, f) = split_discriminant(disc)?;
        delta_phi(dk, f)
    }

    pub fn cartan_ambient(&self) -> Ambient {
        Ambient::Cartan { delta: self.delta, phi: self.phi }
    }

    pub fn normalizer_ambient(&self) -> Ambient {
        Ambient::Normalizer { delta: self.delta, phi: self.phi }
    }
}

/// True when `d` is the discriminant of an imaginary quadratic field.
pub fn is_fundamental_negative(d: i64) -> bool {
    if d >= 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m)
        }
        _ => false,
    }
}

/// Write a negative discriminant as Δ_K f² with Δ_K fundamental.
pub fn split_discriminant(disc: i64) -> Result<(i64, i64)> {
    if disc >= 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::Domain(format!("{disc} is not a negative discriminant")));
    }
    let mut f = 1i64;
    let mut k = 2i64;
    while k * k <= -disc {
        if disc % (k * k) == 0 && is_fundamental_negative(disc / (k * k)) {
            f = k;
        }
        k += 1;
    }
    let dk = disc / (f * f);
    if !is_fundamental_negative(dk) {
        return Err(Error::Domain(format!("{disc} is not of the form Δ_K f²")));
    }
    Ok((dk, f))
}

/// (δ, φ) from the fundamental discriminant Δ_K and the conductor f.
pub fn delta_phi(dk: i64, f: i64) -> Result<CartanParams> {
    if !is_fundamental_negative(dk) || f < 1 {
        return Err(Error::Domain(format!("({dk}, {f}) is not an imaginary quadratic order")));
    }
    let disc = dk * f * f;
    let (delta, phi) = if disc.rem_euclid(4) == 0 { (disc / 4, 0) } else { ((dk - 1) / 4 * f * f, f) };
    debug_assert_eq!(phi * phi + 4 * delta, disc);
    Ok(CartanParams { delta, phi, discriminant: disc })
}

/// c_{δ,φ}(a, b) = (a + bφ, b; δb, a).
pub fn cartan_element(a: Residue, b: Residue, params: &CartanParams) -> Mat2 {
    assert_eq!(a.modulus(), b.modulus(), "residues with different moduli");
    let n = a.modulus() as u32;
    cel(a.value() as i64, b.value() as i64, params, n)
}

pub(crate) fn cel(a: i64, b: i64, params: &CartanParams, n: u32) -> Mat2 {
    let nn = n as i64;
    let (a, b) = (a.rem_euclid(nn), b.rem_euclid(nn));
    let d = params.delta.rem_euclid(nn);
    let p = params.phi.rem_euclid(nn);
    Mat2::new(a + b * p % nn, b, d * b % nn, a, n)
}

/// det c_{δ,φ}(a, b) = a² + abφ − δb² reduced mod n.
pub fn cartan_det(a: i64, b: i64, params: &CartanParams, n: u64) -> u64 {
    let (a, b) = (a as i128, b as i128);
    let v = a * a + a * b * params.phi as i128 - params.delta as i128 * b * b;
    v.rem_euclid(n as i128) as u64
}

/// c_ε = (ε, 0; −εφ, −ε).
pub fn c_eps(params: &CartanParams, eps: i64, n: u32) -> Mat2 {
    Mat2::new(eps, 0, -eps * params.phi, -eps, n)
}

/// c'_ε = (0, ε; ε, 0).
pub fn c_prime_eps(eps: i64, n: u32) -> Mat2 {
    Mat2::new(0, eps, eps, 0, n)
}

/// Elements of C_{δ,φ}(n), enumerated over (a, b).
pub fn cartan_elements(params: &CartanParams, n: u32) -> Vec<Mat2> {
    let nn = n as u64;
    let mut out = Vec::new();
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            if gcd(cartan_det(a, b, params, nn), nn) == 1 {
                out.push(cel(a, b, params, n));
            }
        }
    }
    out
}

/// The Cartan subgroup C_{δ,φ}(n).
pub fn build_cartan(params: &CartanParams, n: u32) -> Subgroup {
    if n == 1 {
        return Subgroup::trivial(1).with_ambient(params.cartan_ambient());
    }
    let set = ElementSet::from_mats(n, cartan_elements(params, n));
    Subgroup::from_elements(set, params.cartan_ambient())
}

/// The normalizer N_{δ,φ}(n) = ⟨C_{δ,φ}(n), c_ε⟩, together with c_ε.
pub fn build_normalizer(params: &CartanParams, n: u32, eps: i64) -> (Subgroup, Mat2) {
    let c = c_eps(params, eps, n);
    if n == 1 {
        return (Subgroup::trivial(1).with_ambient(params.normalizer_ambient()), c);
    }
    let cartan = cartan_elements(params, n);
    let mut all = cartan.clone();
    all.extend(cartan.iter().map(|x| x.mul(&c)));
    (Subgroup::from_elements(ElementSet::from_mats(n, all), params.normalizer_ambient()), c)
}

/// Direction of [`basis_change`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisDirection {
    /// From the (δ, φ) basis to the (δ + φ²/4, 0) basis.
    ToPhi0,
    /// From the (δ + φ²/4, 0) basis back to the (δ, φ) basis.
    FromPhi0,
}

/// Conjugate by (1, 0; ±φ/2, 1), which exchanges C_{δ,φ} and C_{δ+φ²/4, 0}
/// at odd levels.
pub fn basis_change(m: &Mat2, direction: BasisDirection, params: &CartanParams) -> Result<Mat2> {
    let n = m.modulus();
    if n % 2 == 0 {
        return Err(Error::BadLevel(format!("basis change needs an odd level, got {n}")));
    }
    let half = inv_mod(2, n as u64).expect("odd modulus") as i64;
    let t = params.phi.rem_euclid(n as i64) * half;
    let t = match direction {
        BasisDirection::ToPhi0 => t,
        BasisDirection::FromPhi0 => -t,
    };
    let p = Mat2::new(1, 0, t, 1, n);
    Ok(p.conjugate(m).expect("unipotent matrices are invertible"))
}

/// A_N^m = {a ∈ (Z/mZ)^× : (disc Q(√N) | a) = 1}, sorted.
pub fn a_subgroup(n: i64, m: u32) -> Result<Vec<u32>> {
    let dag = n_dagger(n)?;
    if m as u64 % dag != 0 {
        return Err(Error::BadLevel(format!("{dag} does not divide {m}")));
    }
    let d = field_discriminant(n);
    let d = if n == 1 { 1 } else { d };
    Ok((0..m).filter(|&a| gcd(a as u64, m as u64) == 1 && kronecker(d, a as i64) == 1).collect())
}

/// {g ∈ cartan : det g ∈ allowed}.
pub fn det_fixed_subgroup(cartan: &Subgroup, allowed: &[u32]) -> Result<Subgroup> {
    let m = cartan.modulus() as u64;
    let set: FxHashSet<u32> = allowed.iter().map(|&a| (a as u64 % m) as u32).collect();
    if !set.contains(&((1 % m) as u32)) {
        return Err(Error::Domain("allowed determinants must contain 1".into()));
    }
    for &a in &set {
        for &b in &set {
            if !set.contains(&((a as u64 * b as u64 % m) as u32)) {
                return Err(Error::Domain("allowed determinants are not closed under multiplication".into()));
            }
        }
    }
    let keep = cartan.elements()?.iter().filter(|x| set.contains(&x.det()));
    Ok(Subgroup::from_elements(ElementSet::from_mats(cartan.modulus(), keep), cartan.ambient()))
}

/// The index-two subgroup {c_{δ,φ}(x, b) : x + bφ/2 a square unit} of
/// C_{δ,φ}(ℓⁿ) for an odd prime ℓ dividing the discriminant.
pub fn squares_cartan_subgroup(params: &CartanParams, ell: u64, n: u32) -> Result<Subgroup> {
    if ell == 2 {
        return Err(Error::BadPrime(2));
    }
    if params.discriminant % ell as i64 != 0 {
        return Err(Error::Domain(format!("{ell} does not divide {}", params.discriminant)));
    }
    if params.discriminant == -3 {
        return Err(Error::Domain("the 3-adic images for j = 0 are not of squares type".into()));
    }
    let q = ell.pow(n) as u32;
    let qq = q as u64;
    let half = inv_mod(2, qq).expect("odd level");
    let squares: FxHashSet<u64> = (1..qq).filter(|&a| gcd(a, qq) == 1).map(|a| a * a % qq).collect();
    let p = reduce_i64(params.phi, qq);
    let mut out = Vec::new();
    for x in 0..qq {
        for b in 0..qq {
            let t = (x + b * p % qq * half) % qq;
            if squares.contains(&t) {
                out.push(cel(x as i64, b as i64, params, q));
            }
        }
    }
    Ok(Subgroup::from_elements(ElementSet::from_mats(q, out), params.cartan_ambient()))
}
