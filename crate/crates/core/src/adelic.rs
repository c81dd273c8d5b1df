//! Adelic level of definition and mod-M image for CM elliptic curves over Q.

use crate::cartan::{
    a_subgroup, build_cartan, build_normalizer, c_eps, det_fixed_subgroup, squares_cartan_subgroup, CartanParams,
};
use crate::cmdata::{lookup_cm_order, CmOrder, SimplestCurve, Table};
use crate::curves::{twist_to_simplest, TwistDatum, WeierstrassCurve};
use crate::error::{Error, Result};
use crate::matgl2::{intersect, reduce_subgroup, subgroup_index, ElementSet, Mat2, Subgroup};
use crate::modarith::{divisors, field_discriminant, gcd, kronecker, n_dagger};

/// The computed image of an adelic Galois representation at a level of definition.
#[derive(Debug, Clone)]
pub struct GaloisImageResult {
    pub order: CmOrder,
    pub params: CartanParams,
    pub level: u32,
    pub generators: Vec<Mat2>,
    pub index: u64,
    pub minimal_level: u32,
    pub twist: TwistDatum,
    pub is_simplest: bool,
    group: Subgroup,
}

impl GaloisImageResult {
    /// The image as a subgroup of N_{δ,φ}(M).
    pub fn group(&self) -> &Subgroup {
        &self.group
    }
}

/// Image of a simplest curve: the full preimage of its ℓ-adic image mod ℓⁿ.
pub fn simplest_adelic_image(e: &WeierstrassCurve, table: &Table) -> Result<GaloisImageResult> {
    let rec = table.find_isomorphic(e).ok_or(Error::NotSimplest)?;
    from_simplest_record(rec)
}

fn from_simplest_record(rec: &SimplestCurve) -> Result<GaloisImageResult> {
    let order = *rec.order();
    let params = order.params();
    let level = rec.level();
    let group = rec.image();
    let (norm, _) = build_normalizer(&params, level, 1);
    let index = subgroup_index(&norm, &group)?;
    if index != order.d_e {
        return Err(Error::InternalInvariant(format!("{}: index {index}, expected {}", rec.label, order.d_e)));
    }
    let minimal_level = minimal_level_of(&group, &params, index)?;
    Ok(GaloisImageResult {
        order,
        params,
        level,
        generators: rec.generators.clone(),
        index,
        minimal_level,
        twist: TwistDatum { n: 1, n_dagger: 1, simplest_label: rec.label.clone() },
        is_simplest: true,
        group,
    })
}

fn lex_cartan(params: &CartanParams, n: u32) -> Vec<Mat2> {
    // (a, b) order: the matrix c(a, b) has a in the bottom-right entry and b top-right.
    let mut v = crate::cartan::cartan_elements(params, n);
    v.sort_by_key(|m| {
        let e = m.entries();
        (e[3], e[1])
    });
    v
}

/// Representatives, in lexicographic (a, b) order, of the non-trivial cosets
/// of `h` in the Cartan subgroup.
fn nontrivial_coset_reps(h: &Subgroup, params: &CartanParams) -> Result<Vec<Mat2>> {
    let n = h.modulus();
    let hset = h.elements()?;
    let mut reps: Vec<Mat2> = Vec::new();
    for g in lex_cartan(params, n) {
        if hset.contains(&g) {
            continue;
        }
        let fresh = reps.iter().all(|r| {
            let q = g.mul(&r.inverse().expect("unit"));
            !hset.contains(&q)
        });
        if fresh {
            reps.push(g);
        }
    }
    Ok(reps)
}

/// The candidate ⟨(g_ℓ, g_†), H_ℓ × H_†⟩, if it passes the three checks:
/// index two in C(M), full reductions at both factors, and matching
/// intersections with H_ℓ × C(N†) and C(ℓⁿ) × H_†.
pub fn glue_candidate(
    h_ell: &Subgroup,
    h_dag: &Subgroup,
    g_ell: &Mat2,
    g_dag: &Mat2,
    params: &CartanParams,
) -> Result<Option<Subgroup>> {
    let (q, d) = (h_ell.modulus(), h_dag.modulus());
    let glued = crate::matgl2::crt_glue(h_ell, h_dag, &[(*g_ell, *g_dag)])?.with_ambient(params.cartan_ambient());
    let c_q = build_cartan(params, q).order()?;
    let c_d = build_cartan(params, d).order()?;
    let set = glued.elements()?;
    if set.len() * 2 != c_q * c_d {
        return Ok(None);
    }
    let red_q = ElementSet::from_mats(q, set.iter().map(|x| x.reduce(q)));
    let red_d = ElementSet::from_mats(d, set.iter().map(|x| x.reduce(d)));
    if red_q.len() != c_q || red_d.len() != c_d {
        return Ok(None);
    }
    let (hq, hd) = (h_ell.elements()?, h_dag.elements()?);
    if set.iter().any(|x| hq.contains(&x.reduce(q)) != hd.contains(&x.reduce(d))) {
        return Ok(None);
    }
    Ok(Some(glued))
}

/// The Cartan part of the image at M = ℓⁿ·N†, glued from index-two
/// subgroups H_ℓ ⊂ C(ℓⁿ) and H_† ⊂ C(N†).
pub fn cartan_image_glued(h_ell: &Subgroup, h_dag: &Subgroup, params: &CartanParams, m: u32) -> Result<Subgroup> {
    let (q, d) = (h_ell.modulus(), h_dag.modulus());
    if q as u64 * d as u64 != m as u64 || gcd(q as u64, d as u64) != 1 {
        return Err(Error::BadLevel(format!("{m} is not {q}·{d} with coprime factors")));
    }
    for h in [h_ell, h_dag] {
        let c = build_cartan(params, h.modulus());
        if subgroup_index(&c, h)? != 2 {
            return Err(Error::Domain(format!("subgroup at level {} must have index 2 in the Cartan", h.modulus())));
        }
    }
    let reps_q = nontrivial_coset_reps(h_ell, params)?;
    let reps_d = nontrivial_coset_reps(h_dag, params)?;
    let mut survivors: Vec<Subgroup> = Vec::new();
    for gq in &reps_q {
        for gd in &reps_d {
            if let Some(c) = glue_candidate(h_ell, h_dag, gq, gd, params)? {
                let mut dup = false;
                for s in &survivors {
                    if s.same_elements(&c)? {
                        dup = true;
                    }
                }
                if !dup {
                    survivors.push(c);
                }
            }
        }
    }
    match survivors.len() {
        1 => Ok(survivors.pop().expect("one survivor")),
        k => Err(Error::InternalInvariant(format!("{k} glued candidates survived, expected exactly one"))),
    }
}

fn in_cartan_form(m: &Mat2, params: &CartanParams) -> bool {
    let n = m.modulus() as i64;
    let [x, y, z, w] = m.entries().map(i64::from);
    let (a, b) = (w, y);
    x == (a + b * params.phi).rem_euclid(n) && z == (params.delta * b).rem_euclid(n)
}

/// Lift c_ε from level ℓⁿ to M = ℓⁿ·N† and multiply by χ_N(c)·Id.
///
/// The lift uses c_1 at level N†; χ_N is evaluated on the lift through its
/// determinant mod N†.
pub fn conjugation_lift(c: &Mat2, n: i64, m: u32, params: &CartanParams) -> Result<Mat2> {
    let dag = n_dagger(n)? as u32;
    if m % dag != 0 {
        return Err(Error::BadLevel(format!("{dag} does not divide {m}")));
    }
    let other = c_eps(params, 1, dag);
    conjugation_lift_with(c, &other, n, params)
}

/// [`conjugation_lift`] with an explicit non-Cartan element `other` at level N†.
pub fn conjugation_lift_with(c: &Mat2, other: &Mat2, n: i64, params: &CartanParams) -> Result<Mat2> {
    let dag = n_dagger(n)? as u32;
    if other.modulus() != dag {
        return Err(Error::BadLevel(format!("lift partner must be at level {dag}")));
    }
    if in_cartan_form(c, params) {
        return Err(Error::Domain(format!("{c} lies in the Cartan subgroup")));
    }
    if dag == 1 {
        return Ok(*c);
    }
    let lift = Mat2::crt(c, other);
    let chi = kronecker(field_discriminant(n), (lift.det() % dag) as i64);
    Ok(lift.scale(chi as i64))
}

/// Smallest divisor d of the level with [N_{δ,φ}(d) : G mod d] = `target`.
fn minimal_level_of(group: &Subgroup, params: &CartanParams, target: u64) -> Result<u32> {
    let m = group.modulus();
    for d in divisors(m as u64) {
        let d = d as u32;
        if d == 1 && target != 1 {
            continue;
        }
        let reduced = reduce_subgroup(group, d)?;
        let (norm, _) = build_normalizer(params, d, 1);
        if subgroup_index(&norm, &reduced)? == target {
            return Ok(d);
        }
    }
    Ok(m)
}

/// Smallest divisor d of M at which the image already has its full index.
pub fn minimal_level(result: &GaloisImageResult) -> Result<u32> {
    minimal_level_of(&result.group, &result.params, result.index)
}

/// The adelic image of a CM curve over Q at a level of definition, using the
/// embedded simplest-curve table.
pub fn adelic_image(e: &WeierstrassCurve) -> Result<GaloisImageResult> {
    adelic_image_with(e, Table::embedded())
}

pub fn adelic_image_with(e: &WeierstrassCurve, table: &Table) -> Result<GaloisImageResult> {
    let order = *lookup_cm_order(e.j_invariant()).ok_or(Error::NotCm)?;
    let twist = twist_to_simplest(e, table)?;
    let rec = table
        .get(&twist.simplest_label)
        .ok_or_else(|| Error::InternalInvariant(format!("missing record {}", twist.simplest_label)))?;
    if twist.n == 1 {
        return from_simplest_record(rec);
    }
    let params = order.params();
    let q = rec.level();
    let dag = twist.n_dagger as u32;
    let m = q * dag;

    let h_ell = if order.ell == 2 {
        intersect(&rec.image(), &build_cartan(&params, q))?
    } else {
        squares_cartan_subgroup(&params, order.ell, order.n_exponent())?
    };
    let allowed = a_subgroup(twist.n, dag)?;
    let h_dag = det_fixed_subgroup(&build_cartan(&params, dag), &allowed)?;
    let cartan_part = cartan_image_glued(&h_ell, &h_dag, &params, m)?;

    let c = rec
        .generators
        .iter()
        .find(|g| !in_cartan_form(g, &params))
        .ok_or_else(|| Error::InternalInvariant(format!("{} has no generator outside the Cartan", rec.label)))?;
    let lifted = conjugation_lift(c, twist.n, m, &params)?;

    let mut generators = vec![lifted];
    generators.extend_from_slice(cartan_part.generators());
    let group = Subgroup::from_generators(m, generators.clone(), params.normalizer_ambient())?;
    let (norm, _) = build_normalizer(&params, m, 1);
    let index = subgroup_index(&norm, &group)?;
    if index != 2 {
        return Err(Error::InternalInvariant(format!("adelic index {index}, expected 2")));
    }
    let minimal_level = minimal_level_of(&group, &params, index)?;
    Ok(GaloisImageResult {
        order,
        params,
        level: m,
        generators,
        index,
        minimal_level,
        twist,
        is_simplest: false,
        group,
    })
}
