//! JSON and text renderings of computed images and reports.

use std::fmt::Write;

use serde::Serialize;

use cm_adelic::cmdata::SimplestCurve;
use cm_adelic::verify::{EntanglementReport, FrobeniusReport};
use cm_adelic::{GaloisImageResult, Mat2, WeierstrassCurve};

#[derive(Debug, Serialize)]
pub struct CmJson {
    #[serde(rename = "Delta_K")]
    pub delta_k: i64,
    pub f: i64,
    pub disc: i64,
    pub j: String,
    pub ell: u64,
}

#[derive(Debug, Serialize)]
pub struct TwistJson {
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "N_dagger")]
    pub n_dagger: u64,
    pub simplest_label: String,
}

#[derive(Debug, Serialize)]
pub struct EntanglementJson {
    pub cartan_index: u64,
    pub ell_index: u64,
    pub dagger_index: u64,
}

#[derive(Debug, Serialize)]
pub struct VerifyJson {
    pub prime_bound: u64,
    pub primes_checked: usize,
    pub split_primes_checked: usize,
    pub classes_hit: usize,
    pub classes_total: usize,
    pub entanglement: Option<EntanglementJson>,
}

impl VerifyJson {
    pub fn new(frob: &FrobeniusReport, ent: Option<&EntanglementReport>) -> VerifyJson {
        VerifyJson {
            prime_bound: frob.prime_bound,
            primes_checked: frob.primes_checked,
            split_primes_checked: frob.split_primes_checked,
            classes_hit: frob.classes_hit,
            classes_total: frob.classes_total,
            entanglement: ent.map(|e| EntanglementJson {
                cartan_index: e.cartan_index,
                ell_index: e.ell_index,
                dagger_index: e.dagger_index,
            }),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ImageJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub input: String,
    pub cm: CmJson,
    pub delta: i64,
    pub phi: i64,
    pub level: u32,
    pub index: u64,
    pub minimal_level: u32,
    pub twist: TwistJson,
    pub generators: Vec<[u32; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyJson>,
}

pub fn model_string(e: &WeierstrassCurve) -> String {
    let parts: Vec<String> = e.ainvs().iter().map(|a| a.to_string()).collect();
    format!("[{}]", parts.join(","))
}

fn mat_text(m: &[u32; 4]) -> String {
    format!("({},{};{},{})", m[0], m[1], m[2], m[3])
}

impl ImageJson {
    pub fn new(
        label: Option<String>,
        e: &WeierstrassCurve,
        img: &GaloisImageResult,
        verify: Option<VerifyJson>,
    ) -> ImageJson {
        let o = &img.order;
        ImageJson {
            label,
            input: model_string(e),
            cm: CmJson { delta_k: o.delta_k, f: o.f, disc: o.disc, j: o.j.to_string(), ell: o.ell },
            delta: img.params.delta,
            phi: img.params.phi,
            level: img.level,
            index: img.index,
            minimal_level: img.minimal_level,
            twist: TwistJson {
                n: img.twist.n,
                n_dagger: img.twist.n_dagger,
                simplest_label: img.twist.simplest_label.clone(),
            },
            generators: img.generators.iter().map(Mat2::entries).collect(),
            verify,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(l) = &self.label {
            let _ = writeln!(s, "label          {l}");
        }
        let _ = writeln!(s, "model          {}", self.input);
        let _ = writeln!(
            s,
            "CM order       disc {} = {}·{}², j = {}, ℓ = {}",
            self.cm.disc, self.cm.delta_k, self.cm.f, self.cm.j, self.cm.ell
        );
        let _ = writeln!(s, "(δ, φ)         ({}, {})", self.delta, self.phi);
        let _ = writeln!(
            s,
            "twist          N = {}, N† = {}, simplest curve {}",
            self.twist.n, self.twist.n_dagger, self.twist.simplest_label
        );
        let _ = writeln!(s, "level          {}", self.level);
        let _ = writeln!(s, "index          {}", self.index);
        let _ = writeln!(s, "minimal level  {}", self.minimal_level);
        let gens: Vec<String> = self.generators.iter().map(mat_text).collect();
        let _ = writeln!(s, "generators     {}", gens.join(" "));
        if let Some(v) = &self.verify {
            let _ = writeln!(
                s,
                "frobenius      {} primes up to {} ({} split), classes hit {}/{}",
                v.primes_checked, v.prime_bound, v.split_primes_checked, v.classes_hit, v.classes_total
            );
            match &v.entanglement {
                Some(e) => {
                    let _ = writeln!(s, "entanglement   ({}; {}, {})", e.cartan_index, e.ell_index, e.dagger_index);
                }
                None => {
                    let _ = writeln!(s, "entanglement   not applicable (simplest curve)");
                }
            }
        }
        s
    }
}

#[derive(Debug, Serialize)]
pub struct TableRow {
    pub label: String,
    pub disc: i64,
    pub ell: u64,
    pub n: u32,
    pub conductor: u64,
    pub short_model: [String; 2],
    pub generators: Vec<[u32; 4]>,
}

impl From<&SimplestCurve> for TableRow {
    fn from(r: &SimplestCurve) -> TableRow {
        TableRow {
            label: r.label.clone(),
            disc: r.disc,
            ell: r.ell,
            n: r.n,
            conductor: r.conductor,
            short_model: [r.a.to_string(), r.b.to_string()],
            generators: r.generators.iter().map(Mat2::entries).collect(),
        }
    }
}

impl TableRow {
    pub fn to_text(&self) -> String {
        let gens: Vec<String> = self.generators.iter().map(mat_text).collect();
        format!(
            "{:<10} disc {:>4}  ℓ^n = {}^{}  conductor {:>5}  [{},{}]  {}",
            self.label,
            self.disc,
            self.ell,
            self.n,
            self.conductor,
            self.short_model[0],
            self.short_model[1],
            gens.join(" ")
        )
    }
}
