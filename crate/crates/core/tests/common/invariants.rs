//! Property checks shared by the `invariants` test target and the acceptance
//! harness. Each check returns `Err` with a description of the first failure.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cm_adelic::adelic::{cartan_image_glued, conjugation_lift_with, glue_candidate};
use cm_adelic::cartan::{
    a_subgroup, basis_change, build_cartan, build_normalizer, c_eps, cartan_det, cartan_element, cartan_elements,
    squares_cartan_subgroup, BasisDirection, CartanParams,
};
use cm_adelic::cmdata::CM_ORDERS;
use cm_adelic::matgl2::{
    closure, crt_glue, gl2_elements, intersect, preimage_subgroup, reduce_subgroup, subgroup_index, Ambient, Mat2,
    Subgroup,
};
use cm_adelic::modarith::{
    crt_pair, field_discriminant, gcd, is_squarefree, kronecker, n_dagger, prime_factors, squarefree_part, Residue,
};
use cm_adelic::verify::{cartan_part, frobenius_consistency};
use cm_adelic::{adelic_image, twist_to_simplest, GaloisImageResult, Table, WeierstrassCurve};

use super::oracle_images;

pub type CheckResult = Result<(), String>;

pub struct Check {
    pub name: &'static str,
    pub run: fn() -> CheckResult,
}

pub fn all_checks() -> Vec<Check> {
    vec![
        Check { name: "squarefree_part factorization", run: squarefree_factorization },
        Check { name: "kronecker multiplicativity", run: kronecker_multiplicative },
        Check { name: "kronecker half of units", run: kronecker_half_units },
        Check { name: "crt_pair round trip", run: crt_round_trip },
        Check { name: "closure idempotence", run: closure_idempotent },
        Check { name: "GL2 order formula", run: gl2_order_formula },
        Check { name: "preimage then reduce", run: preimage_reduce_identity },
        Check { name: "crt_glue reconstruction", run: crt_glue_reconstruction },
        Check { name: "Cartan determinant formula", run: cartan_det_formula },
        Check { name: "normalizer property", run: normalizer_property },
        Check { name: "normalizer index two", run: normalizer_index_two },
        Check { name: "basis change isomorphism", run: basis_change_isomorphism },
        Check { name: "A_N index two", run: a_subgroup_index_two },
        Check { name: "simplest index d_E", run: simplest_index },
        Check { name: "simplest 200-prime Frobenius", run: simplest_frobenius },
        Check { name: "odd simplest Cartan part is squares", run: odd_cartan_squares },
        Check { name: "twist involution", run: twist_involution },
        Check { name: "twist_to_simplest postconditions", run: twist_postconditions },
        Check { name: "2-simplest twist families", run: two_simplest_families },
        Check { name: "corpus index and factor reductions", run: corpus_index_and_factors },
        Check { name: "Cartan index equals image index", run: corpus_cartan_index },
        Check { name: "quadratic twist coherence", run: corpus_twist_coherence },
        Check { name: "minimal level divisibility", run: corpus_minimal_level },
        Check { name: "glue uniqueness", run: corpus_glue_uniqueness },
        Check { name: "conjugation lift invariance", run: corpus_lift_invariance },
        Check { name: "entanglement pattern", run: corpus_entanglement },
    ]
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn run_prop<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> CheckResult
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn all_params() -> Vec<CartanParams> {
    CM_ORDERS.iter().map(|o| o.params()).collect()
}

fn squarefree_nonzero() -> impl Strategy<Value = i64> {
    (-200i64..200).prop_filter("square-free, not 0 or 1", |&n| n != 1 && is_squarefree(n))
}

fn random_unit(n: u32) -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(0..n as i64).prop_map(move |e| Mat2::from_array(e, n)).prop_filter("unit", |m| m.is_unit())
}

// modarith

fn squarefree_factorization() -> CheckResult {
    let strat = (-1_000_000_000_000i64..=1_000_000_000_000).prop_filter("non-zero", |&n| n != 0);
    run_prop(1000, strat, |n| {
        let (core, m) = squarefree_part(n).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(core as i128 * (m as i128) * (m as i128), n as i128);
        prop_assert!(is_squarefree(core));
        Ok(())
    })
}

fn kronecker_multiplicative() -> CheckResult {
    let strat = (squarefree_nonzero(), -1_000_000i64..1_000_000, -1_000_000i64..1_000_000);
    run_prop(1000, strat, |(n, a, b)| {
        let d = field_discriminant(n);
        prop_assert_eq!(kronecker(d, a) * kronecker(d, b), kronecker(d, a * b));
        Ok(())
    })
}

fn kronecker_half_units() -> CheckResult {
    for n in -50i64..=50 {
        if n == 0 || n == 1 || !is_squarefree(n) {
            continue;
        }
        let d = field_discriminant(n);
        let m = n_dagger(n).map_err(err)?;
        let units: Vec<i64> = (1..m as i64).filter(|&a| gcd(a as u64, m) == 1).collect();
        let plus = units.iter().filter(|&&a| kronecker(d, a) == 1).count();
        ensure(2 * plus == units.len(), || format!("N = {n}: {plus} of {} units have symbol +1", units.len()))?;
    }
    Ok(())
}

fn crt_round_trip() -> CheckResult {
    let strat = (1u64..1_000_000, 1u64..1_000_000, 0u64..1_000_000_000, 0u64..1_000_000_000);
    run_prop(1000, strat, |(m, n, u, v)| {
        let g = gcd(m, n);
        let u = u % m;
        let v = (v % n) / g * g + u % g;
        let v = if v >= n { v - g } else { v };
        let x = crt_pair(Residue::from_u64(u, m), Residue::from_u64(v, n))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(x.modulus(), m / g * n);
        prop_assert_eq!(x.value() % m, u);
        prop_assert_eq!(x.value() % n, v);
        Ok(())
    })
}

// matgl2

fn closure_idempotent() -> CheckResult {
    let strat = (2u32..=12).prop_flat_map(|n| (Just(n), prop::collection::vec(random_unit(n), 1..=3)));
    run_prop(64, strat, |(n, gens)| {
        let once = closure(&gens, n).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let all: Vec<Mat2> = once.iter().collect();
        let twice = closure(&all, n).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(once.keys(), twice.keys());
        Ok(())
    })
}

fn gl2_order_formula() -> CheckResult {
    for n in 2u64..=16 {
        let mut expected = (n as f64).powi(4);
        for p in prime_factors(n) {
            let p = p as f64;
            expected *= (1.0 - 1.0 / p) * (1.0 - 1.0 / (p * p));
        }
        let got = gl2_elements(n as u32).len();
        ensure(got as f64 == expected.round(), || format!("|GL2(Z/{n})| enumerated {got}, formula {expected}"))?;
    }
    Ok(())
}

fn ambient_group(kind: u8, params: &CartanParams, n: u32) -> Subgroup {
    match kind {
        0 => Subgroup::from_elements(cm_adelic::matgl2::ElementSet::from_mats(n, gl2_elements(n)), Ambient::Gl2),
        1 => build_cartan(params, n),
        _ => build_normalizer(params, n, 1).0,
    }
}

fn preimage_reduce_identity() -> CheckResult {
    let params = all_params();
    let strat =
        (0u8..3, 0..params.len(), 2u32..=6, 2u32..=3, prop::collection::vec(any::<prop::sample::Index>(), 1..=3));
    run_prop(48, strat, move |(kind, pi, m, k, picks)| {
        let p = &params[pi];
        let n = m * k;
        if kind == 0 && n > 12 {
            return Ok(());
        }
        let small_amb = ambient_group(kind, p, m);
        let big_amb = ambient_group(kind, p, n);
        let elems = small_amb.elements().unwrap();
        let all: Vec<Mat2> = elems.iter().collect();
        let gens: Vec<Mat2> = picks.iter().map(|i| all[i.index(all.len())]).collect();
        let g = Subgroup::from_generators(m, gens, small_amb.ambient()).unwrap();
        let pre = preimage_subgroup(&g, n, &big_amb).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let back = reduce_subgroup(&pre, m).unwrap();
        prop_assert!(back.same_elements(&g).unwrap());
        prop_assert_eq!(subgroup_index(&big_amb, &pre).unwrap(), subgroup_index(&small_amb, &g).unwrap());
        Ok(())
    })
}

fn crt_glue_reconstruction() -> CheckResult {
    let pairs = [(3u32, 4u32), (4, 5), (5, 3), (7, 2), (3, 8)];
    let strat = (0..pairs.len()).prop_flat_map(move |i| {
        let (m, n) = pairs[i];
        (
            Just(m),
            Just(n),
            prop::collection::vec(random_unit(m * n), 1..=3),
            prop::collection::vec(random_unit(m), 0..=2),
        )
    });
    run_prop(48, strat, |(m, n, gens, prod_m)| {
        let g = Subgroup::from_generators(m * n, gens.clone(), Ambient::Gl2).unwrap();
        let pairs: Vec<(Mat2, Mat2)> = gens.iter().map(|x| (x.reduce(m), x.reduce(n))).collect();
        let glued = crt_glue(&Subgroup::trivial(m), &Subgroup::trivial(n), &pairs).unwrap();
        prop_assert!(glued.same_elements(&g).unwrap());
        let red = reduce_subgroup(&g, m).unwrap();
        prop_assert!(reduce_subgroup(&glued, m).unwrap().same_elements(&red).unwrap());
        let a = Subgroup::from_generators(m, prod_m, Ambient::Gl2).unwrap();
        let b = reduce_subgroup(&g, n).unwrap();
        let product = crt_glue(&a, &b, &[]).unwrap();
        prop_assert_eq!(product.order().unwrap(), a.order().unwrap() * b.order().unwrap());
        prop_assert!(reduce_subgroup(&product, m).unwrap().same_elements(&a).unwrap());
        Ok(())
    })
}

// cartan

fn cartan_det_formula() -> CheckResult {
    let strat = (2u64..5000, any::<i32>(), any::<i32>(), -200i64..200, -10i64..10);
    run_prop(1000, strat, |(n, a, b, delta, phi)| {
        let params = CartanParams { delta, phi, discriminant: phi * phi + 4 * delta };
        let m = cartan_element(Residue::new(a as i64, n), Residue::new(b as i64, n), &params);
        let (a, b) = (a as i128, b as i128);
        let expected = (a * a + a * b * phi as i128 - delta as i128 * b * b).rem_euclid(n as i128) as u32;
        prop_assert_eq!(m.det(), expected);
        prop_assert_eq!(cartan_det(a as i64, b as i64, &params, n) as u32, expected);
        Ok(())
    })
}

fn normalizer_property() -> CheckResult {
    for p in all_params() {
        for n in 2u32..=50 {
            let cartan = build_cartan(&p, n);
            let set = cartan.elements().map_err(err)?;
            for eps in [1, -1] {
                let c = c_eps(&p, eps, n);
                if let Some(x) = set.iter().find(|x| !set.contains(&c.conjugate(x).unwrap())) {
                    return Err(format!("disc {} N = {n}: c_{eps} does not normalize at {x}", p.discriminant));
                }
            }
        }
    }
    Ok(())
}

fn normalizer_index_two() -> CheckResult {
    for p in all_params() {
        for n in 3u32..=50 {
            let (norm, _) = build_normalizer(&p, n, 1);
            let idx = subgroup_index(&norm, &build_cartan(&p, n)).map_err(err)?;
            ensure(idx == 2, || format!("disc {} N = {n}: index {idx}", p.discriminant))?;
        }
    }
    Ok(())
}

fn basis_change_isomorphism() -> CheckResult {
    for p in all_params() {
        for n in (3u32..=49).step_by(2) {
            let inv4 = cm_adelic::modarith::inv_mod(4, n as u64).unwrap() as i64;
            let d0 = (p.delta + p.phi * p.phi % n as i64 * inv4).rem_euclid(n as i64);
            let target = CartanParams { delta: d0, phi: 0, discriminant: 4 * d0 };
            let src = cartan_elements(&p, n);
            let expected: BTreeSet<u64> = cartan_elements(&target, n).iter().map(|m| m.key()).collect();
            let mut image = BTreeSet::new();
            for x in &src {
                let y = basis_change(x, BasisDirection::ToPhi0, &p).map_err(err)?;
                let back = basis_change(&y, BasisDirection::FromPhi0, &p).map_err(err)?;
                ensure(back == *x, || {
                    format!("disc {} N = {n}: basis change is not invertible at {x}", p.discriminant)
                })?;
                image.insert(y.key());
            }
            ensure(image == expected, || format!("disc {} N = {n}: image is not the φ = 0 Cartan", p.discriminant))?;
            for (x, y) in src.iter().zip(src.iter().rev()).take(64) {
                let lhs = basis_change(&x.mul(y), BasisDirection::ToPhi0, &p).map_err(err)?;
                let rhs = basis_change(x, BasisDirection::ToPhi0, &p)
                    .map_err(err)?
                    .mul(&basis_change(y, BasisDirection::ToPhi0, &p).map_err(err)?);
                ensure(lhs == rhs, || format!("disc {} N = {n}: products not preserved", p.discriminant))?;
            }
        }
    }
    Ok(())
}

fn a_subgroup_index_two() -> CheckResult {
    for n in -60i64..=60 {
        if n == 0 || n == 1 || !is_squarefree(n) {
            continue;
        }
        let dag = n_dagger(n).map_err(err)?;
        for k in 1..=3u64 {
            let m = dag * k;
            let units = (1..m).filter(|&a| gcd(a, m) == 1).count();
            let sub = a_subgroup(n, m as u32).map_err(err)?;
            ensure(2 * sub.len() == units, || format!("A_{n}^{m} has {} of {units} units", sub.len()))?;
        }
    }
    Ok(())
}

// cmdata

fn simplest_index() -> CheckResult {
    let table = Table::embedded();
    ensure(table.curves().len() == 40, || format!("{} records", table.curves().len()))?;
    table.validate_images().map_err(err)?;
    for rec in table.curves() {
        let img = adelic_image(&rec.curve()).map_err(err)?;
        ensure(img.index == rec.order().d_e, || {
            format!("{}: index {}, d_E {}", rec.label, img.index, rec.order().d_e)
        })?;
    }
    Ok(())
}

fn simplest_frobenius() -> CheckResult {
    let bound = cm_adelic::modarith::primes_up_to(2000)[199];
    for rec in Table::embedded().curves() {
        let img = adelic_image(&rec.curve()).map_err(err)?;
        frobenius_consistency(&rec.curve(), &img, bound).map_err(|e| format!("{}: {e}", rec.label))?;
    }
    Ok(())
}

fn odd_cartan_squares() -> CheckResult {
    for rec in Table::embedded().curves() {
        let o = rec.order();
        if o.ell == 2 || o.disc == -3 {
            continue;
        }
        let img = adelic_image(&rec.curve()).map_err(err)?;
        let squares = squares_cartan_subgroup(&o.params(), o.ell, o.n_exponent()).map_err(err)?;
        ensure(cartan_part(&img).map_err(err)?.same_elements(&squares).map_err(err)?, || {
            format!("{}: Cartan part differs from the squares subgroup", rec.label)
        })?;
    }
    Ok(())
}

// curves

fn twist_involution() -> CheckResult {
    let strat = (-60i64..60, -60i64..60, squarefree_nonzero());
    run_prop(100, strat.prop_filter("non-singular", |(a, b, _)| 4 * a * a * a + 27 * b * b != 0), |(a, b, n)| {
        let e = WeierstrassCurve::from_short(a.into(), b.into()).unwrap();
        let t = e.quadratic_twist(n).unwrap();
        prop_assert_eq!(t.j_invariant(), e.j_invariant());
        prop_assert!(t.quadratic_twist(n).unwrap().is_isomorphic_q(&e));
        Ok(())
    })
}

fn twist_postconditions() -> CheckResult {
    let table = Table::embedded();
    for o in oracle_images() {
        let e = o.curve();
        let datum = twist_to_simplest(&e, table).map_err(err)?;
        let rec = table.get(&datum.simplest_label).ok_or_else(|| format!("{}: unknown label", o.name))?;
        ensure(gcd(rec.order().ell, datum.n_dagger) == 1, || format!("{}: ℓ divides N†", o.name))?;
        ensure(e.quadratic_twist(datum.n).map_err(err)?.is_isomorphic_q(&rec.curve()), || {
            format!("{}: E^N is not {}", o.name, rec.label)
        })?;
        ensure(e.quadratic_twist(datum.n).map_err(err)?.j_invariant() == e.j_invariant(), || {
            format!("{}: j changed", o.name)
        })?;
    }
    Ok(())
}

fn two_simplest_families() -> CheckResult {
    let table = Table::embedded();
    for rec in table.curves() {
        let o = rec.order();
        if o.ell != 2 || o.j == 1728 {
            continue;
        }
        for n in [1i64, -1, 2, -2] {
            let e = rec.curve().quadratic_twist(n).map_err(err)?;
            let datum = twist_to_simplest(&e, table).map_err(err)?;
            ensure([1, -1, 2, -2].contains(&datum.n), || format!("{}^{n}: twist parameter {}", rec.label, datum.n))?;
        }
    }
    Ok(())
}

// adelic, over the twist corpus

pub fn corpus() -> Vec<(String, WeierstrassCurve, GaloisImageResult)> {
    oracle_images()
        .into_iter()
        .map(|o| {
            let e = o.curve();
            let img = adelic_image(&e).unwrap_or_else(|err| panic!("{}: {err}", o.name));
            (o.name, e, img)
        })
        .collect()
}

fn corpus_index_and_factors() -> CheckResult {
    for (name, _, img) in corpus() {
        ensure(img.index == 2, || format!("{name}: index {}", img.index))?;
        if img.is_simplest {
            continue;
        }
        let dag = img.twist.n_dagger as u32;
        for d in [dag, img.level / dag] {
            let red = reduce_subgroup(img.group(), d).map_err(err)?;
            let (norm, _) = build_normalizer(&img.params, d, 1);
            ensure(red.same_elements(&norm).map_err(err)?, || {
                format!("{name}: reduction mod {d} is not the full normalizer")
            })?;
        }
    }
    Ok(())
}

fn corpus_cartan_index() -> CheckResult {
    for (name, _, img) in corpus() {
        let cartan = build_cartan(&img.params, img.level);
        let inside = intersect(img.group(), &cartan).map_err(err)?;
        let ci = subgroup_index(&cartan, &inside).map_err(err)?;
        ensure(ci == img.index, || format!("{name}: Cartan index {ci}, image index {}", img.index))?;
    }
    Ok(())
}

fn with_minus_one(g: &Subgroup) -> Subgroup {
    let n = g.modulus();
    cm_adelic::matgl2::join(g, &[Mat2::scalar(-1, n)]).unwrap()
}

fn corpus_twist_coherence() -> CheckResult {
    let table = Table::embedded();
    for (name, _, img) in corpus() {
        if img.is_simplest {
            continue;
        }
        let rec = table.get(&img.twist.simplest_label).unwrap();
        let q = rec.level();
        let ours = with_minus_one(&reduce_subgroup(img.group(), q).map_err(err)?);
        let theirs = with_minus_one(&rec.image());
        ensure(ours.same_elements(&theirs).map_err(err)?, || {
            format!("{name}: ⟨−Id, G mod {q}⟩ differs from the twist")
        })?;
    }
    Ok(())
}

fn corpus_minimal_level() -> CheckResult {
    for (name, _, img) in corpus() {
        let ell = img.order.ell as u32;
        ensure(img.minimal_level % ell == 0, || format!("{name}: ℓ ∤ minimal level {}", img.minimal_level))?;
        ensure(img.level % img.minimal_level == 0, || format!("{name}: minimal level ∤ {}", img.level))?;
        let pm = prime_factors(img.minimal_level as u64);
        let pl = prime_factors(img.level as u64);
        ensure(pm == pl, || format!("{name}: primes of {} differ from primes of {}", img.minimal_level, img.level))?;
    }
    Ok(())
}

fn cartan_factors(img: &GaloisImageResult) -> Result<(Subgroup, Subgroup), String> {
    let dag = img.twist.n_dagger as u32;
    let q = img.level / dag;
    let part = cartan_part(img).map_err(err)?;
    let inside = |d: u32| -> Result<Subgroup, String> {
        let full = build_cartan(&img.params, d);
        let keep = full.elements().map_err(err)?.iter().filter(|x| {
            let lift = if d == q { Mat2::crt(x, &Mat2::identity(dag)) } else { Mat2::crt(&Mat2::identity(q), x) };
            part.contains(&lift).unwrap()
        });
        Ok(Subgroup::from_elements(cm_adelic::matgl2::ElementSet::from_mats(d, keep), img.params.cartan_ambient()))
    };
    Ok((inside(q)?, inside(dag)?))
}

fn corpus_glue_uniqueness() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for (name, _, img) in corpus() {
        if img.is_simplest {
            continue;
        }
        let (h_ell, h_dag) = cartan_factors(&img)?;
        let part = cartan_part(&img).map_err(err)?;
        let glued = cartan_image_glued(&h_ell, &h_dag, &img.params, img.level).map_err(err)?;
        ensure(glued.same_elements(&part).map_err(err)?, || format!("{name}: glued Cartan differs from the image"))?;
        let outside = |h: &Subgroup| -> Vec<Mat2> {
            let hs = h.elements().unwrap();
            cartan_elements(&img.params, h.modulus()).into_iter().filter(|x| !hs.contains(x)).collect()
        };
        let (oq, od) = (outside(&h_ell), outside(&h_dag));
        for _ in 0..10 {
            let gq = oq[rng.gen_range(0..oq.len())];
            let gd = od[rng.gen_range(0..od.len())];
            let cand = glue_candidate(&h_ell, &h_dag, &gq, &gd, &img.params).map_err(err)?;
            let same = cand.map(|c| c.same_elements(&part).unwrap()).unwrap_or(false);
            ensure(same, || format!("{name}: candidate ({gq}, {gd}) does not give the image"))?;
        }
    }
    Ok(())
}

fn corpus_lift_invariance() -> CheckResult {
    let table = Table::embedded();
    for (name, _, img) in corpus() {
        if img.is_simplest {
            continue;
        }
        let rec = table.get(&img.twist.simplest_label).unwrap();
        let q = rec.level();
        let dag = img.twist.n_dagger as u32;
        let part = cartan_part(&img).map_err(err)?;
        let cartan_q = build_cartan(&img.params, q);
        let c = *rec.generators.iter().find(|g| !cartan_q.contains(g).unwrap()).unwrap();
        let (norm_dag, _) = build_normalizer(&img.params, dag, 1);
        let cartan_dag = build_cartan(&img.params, dag);
        let others: Vec<Mat2> =
            norm_dag.elements().map_err(err)?.iter().filter(|x| !cartan_dag.contains(x).unwrap()).collect();
        for other in others.iter().step_by((others.len() / 8).max(1)) {
            let lift = conjugation_lift_with(&c, other, img.twist.n, &img.params).map_err(err)?;
            let g = cm_adelic::matgl2::join(&part, &[lift]).map_err(err)?;
            ensure(g.same_elements(img.group()).map_err(err)?, || {
                format!("{name}: lift through {other} changes the group")
            })?;
        }
    }
    Ok(())
}

fn corpus_entanglement() -> CheckResult {
    for (name, _, img) in corpus() {
        let report = cm_adelic::verify::entanglement_check(&img).map_err(|e| format!("{name}: {e}"))?;
        ensure(report.is_some() != img.is_simplest, || format!("{name}: entanglement report presence"))?;
    }
    Ok(())
}
