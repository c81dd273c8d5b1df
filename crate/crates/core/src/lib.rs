//! Adelic Galois images of elliptic curves over Q with complex multiplication
//! by an order of class number one.
//!
//! The entry point is [`adelic::adelic_image`], which returns a level of
//! definition M, generators of the mod-M image inside the normalizer of a
//! Cartan subgroup of GL(2, Z/MZ), the index of the image and the minimal
//! level. The [`verify`] module checks results against traces of Frobenius.

pub mod adelic;
pub mod cartan;
pub mod cmdata;
pub mod curves;
pub mod error;
pub mod matgl2;
pub mod modarith;
pub mod verify;

pub use adelic::{adelic_image, adelic_image_with, minimal_level, GaloisImageResult};
pub use cartan::CartanParams;
pub use cmdata::{lookup_cm_order, CmOrder, SimplestCurve, Table};
pub use curves::{parse_curve, twist_to_simplest, TwistDatum, WeierstrassCurve};
pub use error::{Error, Result};
pub use matgl2::{Mat2, Subgroup};
