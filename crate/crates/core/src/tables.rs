//! Closed-form case tables for the kernel sum and the image intersection of
//! a [`FiberedProduct`], used to cross-check the generic formulas.
//!
//! Hypotheses are read on vector-space dimensions: "dim >= 0" as a positive
//! vector dimension and "dim = 0" as an empty system.

use crate::calculus::{conditions_count, evd, raw_vec_dim, FiberedProduct};

/// Sign of the `n1 k(k+1)/2` term in the third image-intersection case.
///
/// The tabulated closed form subtracts it, which is what the dimension of
/// `L_d(k^{n1})` requires. [`ThirdCaseSign::Plus`] reproduces the variant
/// with the opposite sign and exists to show that variant is wrong.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ThirdCaseSign {
    #[default]
    Minus,
    Plus,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CaseTables {
    pub third_case_sign: ThirdCaseSign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelCase {
    BothPositive,
    PlanesEmpty,
    BlowupEmpty,
    BothEmpty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageCase {
    BothKernelsPositive,
    PlaneKernelEmpty,
    BlowupKernelEmpty,
    BothKernelsEmpty,
    Otherwise,
}

fn forms(d: i64) -> i64 {
    d * (d + 3) / 2 + 1
}

fn tri(k: i64) -> i64 {
    k * (k + 1) / 2
}

/// Which kernel-sum case applies and its closed-form value.
pub fn kernel_sum_closed_form(fp: &FiberedProduct) -> (KernelCase, i64) {
    let (d, k, m, n1, n2) = (fp.d, fp.k, fp.m, fp.n1 as i64, fp.n2);
    let blowup = evd(d, k as u64 + 1, fp.n1).0 > 0;
    let planes = evd(k - 1, m, n2).0 > 0;
    let points = conditions_count(m, n2) as i64;
    match (blowup, planes) {
        (true, true) => (KernelCase::BothPositive, forms(d) - n1 * points - n1 * (k + 1)),
        (true, false) => (KernelCase::PlanesEmpty, forms(d) - n1 * (k + 1) * (k + 2) / 2),
        (false, true) => (KernelCase::BlowupEmpty, n1 * ((k - 1) * (k + 2) / 2 + 1 - points)),
        (false, false) => (KernelCase::BothEmpty, 0),
    }
}

/// Which image-intersection case applies and its closed-form value.
pub fn image_intersection_closed_form(fp: &FiberedProduct, tables: CaseTables) -> (ImageCase, i64) {
    let (d, k, m, n1, n2) = (fp.d, fp.k, fp.m, fp.n1 as i64, fp.n2);
    let plus = evd(d, k as u64 + 1, fp.n1).0;
    let base = evd(d, k as u64, fp.n1).0;
    let minus = evd(k - 1, m, n2).0;
    let twisted = evd(k, m, n2).0;
    let target = raw_vec_dim(d, m, fp.n1 * n2);
    if plus > 0 && minus > 0 {
        (ImageCase::BothKernelsPositive, n1 * (k + 1))
    } else if plus > 0 && twisted > 0 && minus == 0 {
        (ImageCase::PlaneKernelEmpty, n1 * raw_vec_dim(k, m, n2))
    } else if base > 0 && plus == 0 && minus > 0 {
        let value = match tables.third_case_sign {
            ThirdCaseSign::Minus => forms(d) - n1 * tri(k),
            ThirdCaseSign::Plus => forms(d) + n1 * tri(k),
        };
        (ImageCase::BlowupKernelEmpty, value)
    } else if plus == 0 && minus == 0 && target >= 0 {
        (ImageCase::BothKernelsEmpty, target)
    } else {
        (ImageCase::Otherwise, 0)
    }
}
