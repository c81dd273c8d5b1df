//! The thirteen CM orders of class number one and the embedded table of the
//! forty simplest CM curves with their ℓ-adic images.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::cartan::{build_cartan, build_normalizer, CartanParams};
use crate::curves::{j_of_short, rational_is_integer, WeierstrassCurve};
use crate::error::{Error, Result};
use crate::matgl2::{subgroup_index, Mat2, Subgroup};
use crate::modarith::n_exponent;

/// One of the thirteen imaginary quadratic orders of class number one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CmOrder {
    pub delta_k: i64,
    pub f: i64,
    pub disc: i64,
    pub j: i64,
    pub ell: u64,
    pub d_e: u64,
}

impl CmOrder {
    pub fn params(&self) -> CartanParams {
        CartanParams::from_discriminant(self.disc).expect("table discriminants are valid")
    }

    pub fn j_rational(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.j))
    }

    /// The exponent n_{E,ℓ} shared by every curve with this order.
    pub fn n_exponent(&self) -> u32 {
        n_exponent(&self.j_rational(), self.ell)
    }

    /// ℓ^{n_{E,ℓ}}.
    pub fn ell_level(&self) -> u32 {
        self.ell.pow(self.n_exponent()) as u32
    }
}

const fn order(delta_k: i64, f: i64, j: i64, ell: u64, d_e: u64) -> CmOrder {
    CmOrder { delta_k, f, disc: delta_k * f * f, j, ell, d_e }
}

/// The thirteen orders, grouped by fundamental discriminant.
pub static CM_ORDERS: [CmOrder; 13] = [
    order(-3, 1, 0, 3, 6),
    order(-3, 2, 54000, 3, 2),
    order(-3, 3, -12288000, 3, 2),
    order(-4, 1, 1728, 2, 4),
    order(-4, 2, 287496, 2, 2),
    order(-7, 1, -3375, 7, 2),
    order(-7, 2, 16581375, 7, 2),
    order(-8, 1, 8000, 2, 2),
    order(-11, 1, -32768, 11, 2),
    order(-19, 1, -884736, 19, 2),
    order(-43, 1, -884736000, 43, 2),
    order(-67, 1, -147197952000, 67, 2),
    order(-163, 1, -262537412640768000, 163, 2),
];

/// The order whose CM j-invariant equals `j`, if any.
pub fn lookup_cm_order(j: &BigRational) -> Option<&'static CmOrder> {
    if !rational_is_integer(j) {
        return None;
    }
    let j = j.numer().to_i64()?;
    CM_ORDERS.iter().find(|o| o.j == j)
}

pub fn cm_order_for_disc(disc: i64) -> Option<&'static CmOrder> {
    CM_ORDERS.iter().find(|o| o.disc == disc)
}

/// One record of the simplest-curve table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplestCurve {
    pub label: String,
    pub disc: i64,
    pub ell: u64,
    pub n: u32,
    pub a: BigInt,
    pub b: BigInt,
    pub conductor: u64,
    pub generators: Vec<Mat2>,
}

impl SimplestCurve {
    pub fn curve(&self) -> WeierstrassCurve {
        WeierstrassCurve::from_short(self.a.clone(), self.b.clone()).expect("validated at load")
    }

    pub fn level(&self) -> u32 {
        self.ell.pow(self.n) as u32
    }

    pub fn order(&self) -> &'static CmOrder {
        cm_order_for_disc(self.disc).expect("validated at load")
    }

    /// The mod ℓⁿ image as a subgroup of the normalizer.
    pub fn image(&self) -> Subgroup {
        Subgroup::from_generators(self.level(), self.generators.clone(), self.order().params().normalizer_ambient())
            .expect("validated at load")
    }
}

/// The parsed simplest-curve table.
#[derive(Debug, Clone)]
pub struct Table {
    curves: Vec<SimplestCurve>,
}

/// Raw text of the embedded table.
pub const EMBEDDED_TABLE: &str = include_str!("../data/simplest_curves.txt");

const FORMAT_LINE: &str = "format 1";

impl Table {
    /// The embedded table, parsed once.
    pub fn embedded() -> &'static Table {
        static TABLE: OnceLock<Table> = OnceLock::new();
        TABLE.get_or_init(|| Table::parse(EMBEDDED_TABLE).expect("embedded table is valid"))
    }

    /// Parse a table and check the per-record load invariants: the model has
    /// the order's j-invariant, the conductor is a power of ℓ (36 for
    /// discriminant −12), and every generator is an invertible matrix mod ℓⁿ.
    pub fn parse(text: &str) -> Result<Table> {
        let mut curves: Vec<SimplestCurve> = Vec::new();
        let mut saw_format = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::DataTable(format!("line {}: {msg}", lineno + 1));
            if !saw_format {
                if line != FORMAT_LINE {
                    return Err(err(format!("expected {FORMAT_LINE:?}")));
                }
                saw_format = true;
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 8 {
                return Err(err(format!("expected 8 columns, found {}", cols.len())));
            }
            let int = |s: &str| s.parse::<i64>().map_err(|_| err(format!("bad integer {s:?}")));
            let big = |s: &str| s.parse::<BigInt>().map_err(|_| err(format!("bad integer {s:?}")));
            let label = cols[0].to_string();
            let disc = int(cols[1])?;
            let ell = int(cols[2])? as u64;
            let n = int(cols[3])? as u32;
            let (a, b) = (big(cols[4])?, big(cols[5])?);
            let conductor = int(cols[6])? as u64;
            let ord =
                cm_order_for_disc(disc).ok_or_else(|| err(format!("{disc} is not a class-number-one discriminant")))?;
            if ord.ell != ell || ord.n_exponent() != n {
                return Err(err(format!("ell^n = {ell}^{n} does not match discriminant {disc}")));
            }
            match j_of_short(&a, &b) {
                Some(j) if j == ord.j_rational() => {}
                _ => return Err(err(format!("{label}: j-invariant of [{a},{b}] is not {}", ord.j))),
            }
            let mut c = conductor;
            while c % ell == 0 {
                c /= ell;
            }
            let conductor_ok = if disc == -12 { conductor == 36 } else { c == 1 && conductor > 1 };
            if !conductor_ok {
                return Err(err(format!("{label}: conductor {conductor} is not allowed for discriminant {disc}")));
            }
            let level = ell.pow(n) as u32;
            let mut generators = Vec::new();
            for g in cols[7].split(';') {
                let e: Vec<i64> = g.split(',').map(int).collect::<Result<_>>()?;
                if e.len() != 4 || e.iter().any(|&v| v < 0 || v >= level as i64) {
                    return Err(err(format!("{label}: bad generator {g:?}")));
                }
                let m = Mat2::new(e[0], e[1], e[2], e[3], level);
                if !m.is_unit() {
                    return Err(err(format!("{label}: generator {m} is not invertible")));
                }
                generators.push(m);
            }
            if curves.iter().any(|c| c.label == label) {
                return Err(err(format!("duplicate label {label}")));
            }
            curves.push(SimplestCurve { label, disc, ell, n, a, b, conductor, generators });
        }
        if !saw_format {
            return Err(Error::DataTable("missing format line".into()));
        }
        Ok(Table { curves })
    }

    pub fn curves(&self) -> &[SimplestCurve] {
        &self.curves
    }

    pub fn get(&self, label: &str) -> Option<&SimplestCurve> {
        self.curves.iter().find(|c| c.label == label)
    }

    /// The records with discriminant Δ_K f² = `disc`.
    pub fn simplest_curves_for(&self, disc: i64) -> Result<Vec<&SimplestCurve>> {
        if cm_order_for_disc(disc).is_none() {
            return Err(Error::Domain(format!("{disc} is not a class-number-one discriminant")));
        }
        Ok(self.curves.iter().filter(|c| c.disc == disc).collect())
    }

    /// The ℓ-adic image mod ℓⁿ of a simplest curve.
    pub fn simplest_ell_adic_image(&self, label: &str) -> Result<Subgroup> {
        self.get(label).map(|c| c.image()).ok_or_else(|| Error::Domain(format!("unknown label {label}")))
    }

    /// The table record Q-isomorphic to `e`, if any.
    pub fn find_isomorphic(&self, e: &WeierstrassCurve) -> Option<&SimplestCurve> {
        let ord = lookup_cm_order(e.j_invariant())?;
        self.curves.iter().filter(|c| c.disc == ord.disc).find(|c| c.curve().is_isomorphic_q(e))
    }

    /// Check that each image has index d_E in N_{δ,φ}(ℓⁿ) and that its Cartan
    /// part has index d_E in C_{δ,φ}(ℓⁿ).
    pub fn validate_images(&self) -> Result<()> {
        for c in &self.curves {
            let ord = c.order();
            let params = ord.params();
            let (norm, _) = build_normalizer(&params, c.level(), 1);
            let image = c.image();
            let idx = subgroup_index(&norm, &image)
                .map_err(|e| Error::DataTable(format!("{}: image is not inside the normalizer ({e})", c.label)))?;
            if idx != ord.d_e {
                return Err(Error::DataTable(format!("{}: index {idx}, expected {}", c.label, ord.d_e)));
            }
            let cartan = build_cartan(&params, c.level());
            let inside = crate::matgl2::intersect(&image, &cartan)?;
            if subgroup_index(&cartan, &inside)? != ord.d_e {
                return Err(Error::DataTable(format!("{}: Cartan part has the wrong index", c.label)));
            }
        }
        Ok(())
    }
}

/// [`Table::simplest_curves_for`] on the embedded table.
pub fn simplest_curves_for(disc: i64) -> Result<Vec<&'static SimplestCurve>> {
    Table::embedded().simplest_curves_for(disc)
}

/// [`Table::simplest_ell_adic_image`] on the embedded table.
pub fn simplest_ell_adic_image(label: &str) -> Result<Subgroup> {
    Table::embedded().simplest_ell_adic_image(label)
}
