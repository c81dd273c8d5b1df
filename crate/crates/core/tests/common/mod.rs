#![allow(dead_code)]
pub mod invariants;

use cm_adelic::cartan::{build_cartan, CartanParams};
use cm_adelic::matgl2::{Mat2, Subgroup};
use cm_adelic::WeierstrassCurve;

/// One line of `tests/data/oracle_images.txt`.
#[derive(Debug, Clone)]
pub struct OracleImage {
    pub name: String,
    pub ainvs: [i64; 5],
    pub disc: i64,
    pub level: u32,
    pub order: usize,
    pub index: u64,
    pub minimal_level: u32,
    pub sigma: Mat2,
    pub cartan_gens: Vec<Mat2>,
}

impl OracleImage {
    pub fn curve(&self) -> WeierstrassCurve {
        WeierstrassCurve::from_i64(self.ainvs).expect("oracle model is non-singular")
    }

    pub fn params(&self) -> CartanParams {
        CartanParams::from_discriminant(self.disc).expect("oracle discriminant")
    }

    pub fn cartan_part(&self) -> Subgroup {
        Subgroup::from_generators(self.level, self.cartan_gens.clone(), self.params().cartan_ambient()).unwrap()
    }

    pub fn group(&self) -> Subgroup {
        let mut gens = self.cartan_gens.clone();
        gens.push(self.sigma);
        Subgroup::from_generators(self.level, gens, self.params().normalizer_ambient()).unwrap()
    }

    /// Twist parameter encoded in the name (`49.a2^-3`), or 1.
    pub fn twist(&self) -> Option<(String, i64)> {
        let (base, n) = self.name.split_once('^')?;
        Some((base.to_string(), n.parse().unwrap()))
    }
}

fn mat(s: &str, n: u32) -> Mat2 {
    let v: Vec<i64> = s.split(',').map(|x| x.parse().unwrap()).collect();
    Mat2::new(v[0], v[1], v[2], v[3], n)
}

pub fn oracle_images() -> Vec<OracleImage> {
    include_str!("../data/oracle_images.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let a: Vec<i64> = f[1].split(',').map(|x| x.parse().unwrap()).collect();
            let level: u32 = f[3].parse().unwrap();
            OracleImage {
                name: f[0].to_string(),
                ainvs: [a[0], a[1], a[2], a[3], a[4]],
                disc: f[2].parse().unwrap(),
                level,
                order: f[4].parse().unwrap(),
                index: f[5].parse().unwrap(),
                minimal_level: f[6].parse().unwrap(),
                sigma: mat(f[7], level),
                cartan_gens: f.get(8).map(|g| g.split(';').map(|m| mat(m, level)).collect()).unwrap_or_default(),
            }
        })
        .collect()
}

/// Some c in C_{δ,φ}(M) with c·g·c⁻¹ contained in `target`.
pub fn cartan_conjugator(g: &Mat2, target: &Subgroup, params: &CartanParams) -> Option<Mat2> {
    let cartan = build_cartan(params, g.modulus());
    let set = target.elements().unwrap();
    let found = cartan.elements().unwrap().iter().find(|c| set.contains(&c.conjugate(g).unwrap()));
    found
}
