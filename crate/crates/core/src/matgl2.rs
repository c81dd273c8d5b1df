//! Finite subgroups of GL(2, Z/NZ): closure, index, reduction and preimage
//! between levels, CRT gluing, intersection and conjugacy search.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::modarith::{crt_coprime, gcd, inv_mod, prime_factors, reduce_i64};

/// Default cap on the number of elements materialized by a closure.
pub const DEFAULT_CLOSURE_CAP: usize = 1 << 26;
/// Default cap on |GL(2, Z/NZ)| for exhaustive conjugacy search.
pub const DEFAULT_CONJUGACY_CAP: u64 = 1 << 21;
/// Largest supported modulus; entries are packed into 16 bits.
pub const MAX_MODULUS: u32 = 1 << 16;

/// A 2×2 matrix over Z/NZ, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2 {
    n: u32,
    e: [u32; 4],
}

impl Mat2 {
    pub fn new(a11: i64, a12: i64, a21: i64, a22: i64, n: u32) -> Mat2 {
        assert!((1..=MAX_MODULUS).contains(&n), "modulus {n} out of range");
        let r = |v: i64| reduce_i64(v, n as u64) as u32;
        Mat2 { n, e: [r(a11), r(a12), r(a21), r(a22)] }
    }

    pub fn from_array(e: [i64; 4], n: u32) -> Mat2 {
        Mat2::new(e[0], e[1], e[2], e[3], n)
    }

    pub fn identity(n: u32) -> Mat2 {
        Mat2::new(1, 0, 0, 1, n)
    }

    pub fn scalar(s: i64, n: u32) -> Mat2 {
        Mat2::new(s, 0, 0, s, n)
    }

    pub fn modulus(&self) -> u32 {
        self.n
    }

    pub fn entries(&self) -> [u32; 4] {
        self.e
    }

    pub fn key(&self) -> u64 {
        let [a, b, c, d] = self.e;
        (a as u64) << 48 | (b as u64) << 32 | (c as u64) << 16 | d as u64
    }

    pub fn from_key(key: u64, n: u32) -> Mat2 {
        let m = 0xffff;
        Mat2 { n, e: [(key >> 48) as u32 & m, (key >> 32) as u32 & m, (key >> 16) as u32 & m, key as u32 & m] }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        debug_assert_eq!(self.n, o.n, "modulus mismatch");
        let n = self.n as u64;
        let [a, b, c, d] = self.e.map(u64::from);
        let [e, f, g, h] = o.e.map(u64::from);
        Mat2 {
            n: self.n,
            e: [
                ((a * e + b * g) % n) as u32,
                ((a * f + b * h) % n) as u32,
                ((c * e + d * g) % n) as u32,
                ((c * f + d * h) % n) as u32,
            ],
        }
    }

    pub fn det(&self) -> u32 {
        let n = self.n as u64;
        let [a, b, c, d] = self.e.map(u64::from);
        ((a * d % n + n - b * c % n) % n) as u32
    }

    pub fn trace(&self) -> u32 {
        ((self.e[0] as u64 + self.e[3] as u64) % self.n as u64) as u32
    }

    pub fn is_unit(&self) -> bool {
        gcd(self.det() as u64, self.n as u64) == 1
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let t = inv_mod(self.det() as u64, self.n as u64)? as i64;
        let [a, b, c, d] = self.e.map(i64::from);
        Some(Mat2::new(d * t, -b * t, -c * t, a * t, self.n))
    }

    pub fn scale(&self, s: i64) -> Mat2 {
        let [a, b, c, d] = self.e.map(i64::from);
        Mat2::new(a * s, b * s, c * s, d * s, self.n)
    }

    pub fn pow(&self, mut k: u64) -> Mat2 {
        let mut acc = Mat2::identity(self.n);
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// Multiplicative order of an invertible matrix.
    pub fn order(&self) -> u64 {
        let id = Mat2::identity(self.n);
        let mut x = *self;
        let mut k = 1;
        while x != id {
            x = x.mul(self);
            k += 1;
        }
        k
    }

    /// Entrywise reduction to a divisor `m` of the modulus.
    pub fn reduce(&self, m: u32) -> Mat2 {
        debug_assert_eq!(self.n % m, 0);
        Mat2 { n: m, e: self.e.map(|v| v % m) }
    }

    /// `self · x · self⁻¹`.
    pub fn conjugate(&self, x: &Mat2) -> Option<Mat2> {
        Some(self.mul(x).mul(&self.inverse()?))
    }

    /// Apply the matrix to a column vector.
    pub fn apply(&self, v: (u32, u32)) -> (u32, u32) {
        let n = self.n as u64;
        let [a, b, c, d] = self.e.map(u64::from);
        let (x, y) = (v.0 as u64, v.1 as u64);
        (((a * x + b * y) % n) as u32, ((c * x + d * y) % n) as u32)
    }

    /// Entrywise CRT of matrices with coprime moduli.
    pub fn crt(x: &Mat2, y: &Mat2) -> Mat2 {
        let (m, n) = (x.n as u64, y.n as u64);
        assert_eq!(gcd(m, n), 1, "CRT needs coprime moduli");
        let e = [0, 1, 2, 3].map(|i| crt_coprime(x.e[i] as u64, m, y.e[i] as u64, n) as i64);
        Mat2::from_array(e, (m * n) as u32)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.e;
        write!(f, "({a},{b};{c},{d}) mod {}", self.n)
    }
}

/// The ambient group a subgroup was built inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ambient {
    Gl2,
    Cartan { delta: i64, phi: i64 },
    Normalizer { delta: i64, phi: i64 },
}

/// A materialized element set: sorted packed keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSet {
    modulus: u32,
    keys: Vec<u64>,
}

impl ElementSet {
    fn from_keys(modulus: u32, mut keys: Vec<u64>) -> ElementSet {
        keys.sort_unstable();
        keys.dedup();
        ElementSet { modulus, keys }
    }

    pub fn from_mats(modulus: u32, mats: impl IntoIterator<Item = Mat2>) -> ElementSet {
        ElementSet::from_keys(modulus, mats.into_iter().map(|m| m.key()).collect())
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn contains(&self, m: &Mat2) -> bool {
        m.n == self.modulus && self.keys.binary_search(&m.key()).is_ok()
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn iter(&self) -> impl Iterator<Item = Mat2> + '_ {
        let n = self.modulus;
        self.keys.iter().map(move |&k| Mat2::from_key(k, n))
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.modulus == other.modulus && self.iter().all(|m| other.contains(&m))
    }
}

/// Smallest subgroup of GL(2, Z/NZ) containing `gens`, with the default cap.
pub fn closure(gens: &[Mat2], n: u32) -> Result<ElementSet> {
    closure_capped(gens, n, DEFAULT_CLOSURE_CAP)
}

/// Breadth-first closure under right multiplication by the generators.
pub fn closure_capped(gens: &[Mat2], n: u32, cap: usize) -> Result<ElementSet> {
    for g in gens {
        if g.n != n {
            return Err(Error::BadLevel(format!("generator {g} is not mod {n}")));
        }
        if !g.is_unit() {
            return Err(Error::NotAUnit(g.to_string()));
        }
    }
    let id = Mat2::identity(n);
    let mut seen: FxHashSet<u64> = FxHashSet::default();
    seen.insert(id.key());
    let mut order = vec![id];
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        i += 1;
        for g in gens {
            let y = x.mul(g);
            if seen.insert(y.key()) {
                if order.len() >= cap {
                    return Err(Error::GroupTooLarge { cap });
                }
                order.push(y);
            }
        }
    }
    Ok(ElementSet::from_keys(n, seen.into_iter().collect()))
}

/// Greedy generating set of a group given as an element set.
///
/// Candidates are scanned in key order; each new generator extends the current
/// subgroup by whole right cosets.
pub fn generating_set(set: &ElementSet) -> Vec<Mat2> {
    let n = set.modulus;
    let id = Mat2::identity(n);
    let mut group: Vec<Mat2> = vec![id];
    let mut member: FxHashSet<u64> = FxHashSet::default();
    member.insert(id.key());
    let mut gens: Vec<Mat2> = Vec::new();
    for g in set.iter() {
        if member.len() == set.len() {
            break;
        }
        if member.contains(&g.key()) {
            continue;
        }
        gens.push(g);
        let base: Vec<Mat2> = group.clone();
        let mut reps = vec![g];
        for h in &base {
            let y = h.mul(&g);
            if member.insert(y.key()) {
                group.push(y);
            }
        }
        let mut k = 0;
        while k < reps.len() {
            let r = reps[k];
            k += 1;
            for s in &gens {
                let y = r.mul(s);
                if !member.contains(&y.key()) {
                    for h in &base {
                        let z = h.mul(&y);
                        if member.insert(z.key()) {
                            group.push(z);
                        }
                    }
                    reps.push(y);
                }
            }
        }
    }
    gens
}

/// A subgroup of GL(2, Z/NZ) with lazily materialized elements and generators.
#[derive(Debug)]
pub struct Subgroup {
    modulus: u32,
    ambient: Ambient,
    gens: OnceLock<Vec<Mat2>>,
    elements: OnceLock<ElementSet>,
    lock: Mutex<()>,
}

impl Clone for Subgroup {
    fn clone(&self) -> Self {
        let s = Subgroup {
            modulus: self.modulus,
            ambient: self.ambient,
            gens: OnceLock::new(),
            elements: OnceLock::new(),
            lock: Mutex::new(()),
        };
        if let Some(g) = self.gens.get() {
            let _ = s.gens.set(g.clone());
        }
        if let Some(e) = self.elements.get() {
            let _ = s.elements.set(e.clone());
        }
        s
    }
}

impl Subgroup {
    /// Subgroup generated by `gens`; every generator must be invertible mod `n`.
    pub fn from_generators(n: u32, gens: Vec<Mat2>, ambient: Ambient) -> Result<Subgroup> {
        for g in &gens {
            if g.n != n {
                return Err(Error::BadLevel(format!("generator {g} is not mod {n}")));
            }
            if !g.is_unit() {
                return Err(Error::NotAUnit(g.to_string()));
            }
        }
        let s = Subgroup::empty(n, ambient);
        let _ = s.gens.set(gens);
        Ok(s)
    }

    /// Subgroup given by its (closed) element set.
    pub fn from_elements(set: ElementSet, ambient: Ambient) -> Subgroup {
        let s = Subgroup::empty(set.modulus, ambient);
        let _ = s.elements.set(set);
        s
    }

    pub fn trivial(n: u32) -> Subgroup {
        Subgroup::from_elements(ElementSet::from_mats(n, [Mat2::identity(n)]), Ambient::Gl2)
    }

    fn empty(n: u32, ambient: Ambient) -> Subgroup {
        Subgroup { modulus: n, ambient, gens: OnceLock::new(), elements: OnceLock::new(), lock: Mutex::new(()) }
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn with_ambient(mut self, ambient: Ambient) -> Subgroup {
        self.ambient = ambient;
        self
    }

    pub fn generators(&self) -> &[Mat2] {
        if let Some(g) = self.gens.get() {
            return g;
        }
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        if self.gens.get().is_none() {
            let set = self.elements.get().expect("subgroup has elements or generators");
            let _ = self.gens.set(generating_set(set));
        }
        self.gens.get().expect("just set")
    }

    pub fn elements(&self) -> Result<&ElementSet> {
        if let Some(e) = self.elements.get() {
            return Ok(e);
        }
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        if self.elements.get().is_none() {
            let gens = self.gens.get().expect("subgroup has elements or generators");
            let set = closure(gens, self.modulus)?;
            let _ = self.elements.set(set);
        }
        Ok(self.elements.get().expect("just set"))
    }

    pub fn order(&self) -> Result<usize> {
        Ok(self.elements()?.len())
    }

    pub fn contains(&self, m: &Mat2) -> Result<bool> {
        Ok(self.elements()?.contains(m))
    }

    /// Set equality of materialized elements.
    pub fn same_elements(&self, other: &Subgroup) -> Result<bool> {
        Ok(self.modulus == other.modulus && self.elements()? == other.elements()?)
    }

    pub fn is_subgroup_of(&self, other: &Subgroup) -> Result<bool> {
        if self.modulus != other.modulus {
            return Ok(false);
        }
        let big = other.elements()?;
        Ok(self.generators().iter().all(|g| big.contains(g)))
    }
}

/// [ambient : sub], after checking that `sub` lies in `ambient`.
pub fn subgroup_index(ambient: &Subgroup, sub: &Subgroup) -> Result<u64> {
    if ambient.modulus != sub.modulus {
        return Err(Error::BadLevel(format!("moduli {} and {} differ", ambient.modulus, sub.modulus)));
    }
    if !sub.is_subgroup_of(ambient)? {
        return Err(Error::NotASubgroup("subgroup is not contained in the ambient group".into()));
    }
    Ok((ambient.order()? / sub.order()?) as u64)
}

/// Image of `g` under reduction modulo a divisor `m` of its level.
pub fn reduce_subgroup(g: &Subgroup, m: u32) -> Result<Subgroup> {
    if m == 0 || g.modulus % m != 0 {
        return Err(Error::BadLevel(format!("{m} does not divide {}", g.modulus)));
    }
    if m == g.modulus {
        return Ok(g.clone());
    }
    let gens: Vec<Mat2> = g.generators().iter().map(|x| x.reduce(m)).collect();
    Subgroup::from_generators(m, gens, g.ambient)
}

/// Full preimage of `g` (level M) inside `ambient` (level N, M | N).
pub fn preimage_subgroup(g: &Subgroup, n: u32, ambient: &Subgroup) -> Result<Subgroup> {
    let m = g.modulus;
    if n % m != 0 || ambient.modulus != n {
        return Err(Error::BadLevel(format!("{m} does not divide {n}")));
    }
    let amb = ambient.elements()?;
    let small = g.elements()?;
    let mut lift: FxHashMap<u64, Mat2> = FxHashMap::default();
    for x in amb.iter() {
        lift.entry(x.reduce(m).key()).or_insert(x);
    }
    if let Some(bad) = small.iter().find(|y| !lift.contains_key(&y.key())) {
        return Err(Error::NotASubgroup(format!("{bad} is not a reduction of the ambient group")));
    }
    let keep: Vec<Mat2> = amb.iter().filter(|x| small.contains(&x.reduce(m))).collect();
    let idm = Mat2::identity(m);
    let kernel = ElementSet::from_mats(n, keep.iter().copied().filter(|x| x.reduce(m) == idm));
    let mut gens: Vec<Mat2> = g.generators().iter().map(|y| lift[&y.key()]).collect();
    gens.extend(generating_set(&kernel));
    let s = Subgroup::empty(n, ambient.ambient);
    let _ = s.gens.set(gens);
    let _ = s.elements.set(ElementSet::from_mats(n, keep));
    Ok(s)
}

/// Glue subgroups at coprime levels M and N via entrywise CRT.
///
/// The result is generated by the CRT images of `pair_gens` together with
/// (g, Id) for the generators g of `g_m` and (Id, h) for the generators h of
/// `g_n`. Pass trivial groups to glue the pairs alone.
pub fn crt_glue(g_m: &Subgroup, g_n: &Subgroup, pair_gens: &[(Mat2, Mat2)]) -> Result<Subgroup> {
    let (m, n) = (g_m.modulus, g_n.modulus);
    if gcd(m as u64, n as u64) != 1 {
        return Err(Error::BadLevel(format!("levels {m} and {n} are not coprime")));
    }
    let (im, in_) = (Mat2::identity(m), Mat2::identity(n));
    let mut gens: Vec<Mat2> = pair_gens.iter().map(|(x, y)| Mat2::crt(x, y)).collect();
    gens.extend(g_m.generators().iter().filter(|g| **g != im).map(|g| Mat2::crt(g, &in_)));
    gens.extend(g_n.generators().iter().filter(|h| **h != in_).map(|h| Mat2::crt(&im, h)));
    let ambient = if g_m.ambient == g_n.ambient { g_m.ambient } else { Ambient::Gl2 };
    Subgroup::from_generators(m * n, gens, ambient)
}

/// Intersection of two subgroups at the same level.
pub fn intersect(g: &Subgroup, h: &Subgroup) -> Result<Subgroup> {
    if g.modulus != h.modulus {
        return Err(Error::BadLevel(format!("moduli {} and {} differ", g.modulus, h.modulus)));
    }
    let (a, b) = (g.elements()?, h.elements()?);
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let set = ElementSet::from_mats(g.modulus, small.iter().filter(|x| big.contains(x)));
    let ambient = if g.ambient == h.ambient { g.ambient } else { Ambient::Gl2 };
    Ok(Subgroup::from_elements(set, ambient))
}

/// Subgroup generated by the union of the generators of `g` and `extra`.
pub fn join(g: &Subgroup, extra: &[Mat2]) -> Result<Subgroup> {
    let mut gens = g.generators().to_vec();
    gens.extend_from_slice(extra);
    Subgroup::from_generators(g.modulus, gens, g.ambient)
}

/// |GL(2, Z/NZ)| = N⁴ ∏_{p | N} (1 − 1/p)(1 − 1/p²).
pub fn gl2_order(n: u64) -> u64 {
    let mut order = n.pow(4);
    for p in prime_factors(n) {
        order = order / p * (p - 1);
        order = order / (p * p) * (p * p - 1);
    }
    order
}

/// Every element of GL(2, Z/NZ).
pub fn gl2_elements(n: u32) -> Vec<Mat2> {
    let mut out = Vec::with_capacity(gl2_order(n as u64) as usize);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let m = Mat2 { n, e: [a, b, c, d] };
                    if m.is_unit() {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

/// Conjugation-invariant data: element count and the multiset of
/// (order, trace, det), plus the characters on stable lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub size: usize,
    pub classes: BTreeMap<(u64, u32, u32), usize>,
    pub line_characters: Vec<Vec<u32>>,
}

/// Fingerprint of a subgroup.
///
/// For every cyclic submodule of (Z/NZ)² of order N that is stable under the
/// group, the group acts on it through a character into (Z/NZ)^×; the sorted
/// image of that character is recorded. Conjugation permutes stable lines and
/// preserves the characters, so the multiset of images is an invariant.
pub fn fingerprint(g: &Subgroup) -> Result<Fingerprint> {
    let set = g.elements()?;
    let mut classes: BTreeMap<(u64, u32, u32), usize> = BTreeMap::new();
    let group_order = set.len() as u64;
    let primes = prime_factors(group_order);
    for x in set.iter() {
        let o = order_dividing(&x, group_order, &primes);
        *classes.entry((o, x.trace(), x.det())).or_default() += 1;
    }
    let n = g.modulus;
    let gens = g.generators().to_vec();
    let mut line_characters = Vec::new();
    if n > 1 {
        for v in line_representatives(n) {
            if let Some(chars) = stable_line_character(&gens, v, n) {
                line_characters.push(chars);
            }
        }
    }
    line_characters.sort();
    Ok(Fingerprint { size: set.len(), classes, line_characters })
}

/// Order of `x`, given a multiple `m` of it and the primes dividing `m`.
pub fn order_dividing(x: &Mat2, m: u64, primes: &[u64]) -> u64 {
    let id = Mat2::identity(x.n);
    let mut o = m;
    for &p in primes {
        while o % p == 0 && x.pow(o / p) == id {
            o /= p;
        }
    }
    o
}

fn units(n: u32) -> Vec<u32> {
    (1..n.max(2)).filter(|&a| gcd(a as u64, n as u64) == 1).collect()
}

/// One generator for each cyclic submodule of order N of (Z/NZ)².
fn line_representatives(n: u32) -> Vec<(u32, u32)> {
    let us = units(n);
    let mut seen: FxHashSet<(u32, u32)> = FxHashSet::default();
    let mut reps = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if gcd(gcd(x as u64, y as u64), n as u64) != 1 || seen.contains(&(x, y)) {
                continue;
            }
            reps.push((x, y));
            for &u in &us {
                let (u, nn) = (u as u64, n as u64);
                seen.insert(((u * x as u64 % nn) as u32, (u * y as u64 % nn) as u32));
            }
        }
    }
    reps
}

fn stable_line_character(gens: &[Mat2], v: (u32, u32), n: u32) -> Option<Vec<u32>> {
    let nn = n as u64;
    let mut eig = Vec::with_capacity(gens.len());
    for g in gens {
        let w = g.apply(v);
        let lambda = (0..n).find(|&l| {
            let l = l as u64;
            (l * v.0 as u64 % nn, l * v.1 as u64 % nn) == (w.0 as u64, w.1 as u64)
        })?;
        eig.push(lambda);
    }
    let mut image: FxHashSet<u32> = FxHashSet::default();
    image.insert(1 % n);
    let mut frontier = vec![1 % n];
    while let Some(a) = frontier.pop() {
        for &l in &eig {
            let b = (a as u64 * l as u64 % nn) as u32;
            if image.insert(b) {
                frontier.push(b);
            }
        }
    }
    let mut out: Vec<u32> = image.into_iter().collect();
    out.sort_unstable();
    Some(out)
}

/// How [`is_conjugate`] looks for a conjugator.
#[derive(Debug, Clone, Copy)]
pub enum ConjugacyMode {
    /// Exhaustive search over GL(2, Z/NZ), subject to the search cap.
    FullGl2,
    /// Only test the supplied candidate.
    Given(Mat2),
}

/// Find B with B·G·B⁻¹ = H, using the default search cap.
pub fn is_conjugate(g: &Subgroup, h: &Subgroup, mode: ConjugacyMode) -> Result<Option<Mat2>> {
    is_conjugate_capped(g, h, mode, DEFAULT_CONJUGACY_CAP)
}

pub fn is_conjugate_capped(g: &Subgroup, h: &Subgroup, mode: ConjugacyMode, cap: u64) -> Result<Option<Mat2>> {
    let n = g.modulus;
    if n != h.modulus {
        return Err(Error::BadLevel(format!("moduli {} and {} differ", n, h.modulus)));
    }
    let hset = h.elements()?;
    if g.order()? != hset.len() {
        return Ok(None);
    }
    let works = |b: &Mat2| -> bool {
        match b.inverse() {
            Some(bi) => g.generators().iter().all(|x| hset.contains(&b.mul(x).mul(&bi))),
            None => false,
        }
    };
    match mode {
        ConjugacyMode::Given(b) => Ok(if b.modulus() == n && works(&b) { Some(b) } else { None }),
        ConjugacyMode::FullGl2 => {
            let size = gl2_order(n as u64);
            if size > cap {
                return Err(Error::SearchTooLarge { size, cap });
            }
            if fingerprint(g)? != fingerprint(h)? {
                return Ok(None);
            }
            Ok(gl2_elements(n).into_iter().find(|b| works(b)))
        }
    }
}
