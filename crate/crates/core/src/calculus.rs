//! Integer dimension formulas for homogeneous systems `L_d(m^n)` and for the
//! fibered product of a degeneration `n = n1 * n2` twisted by `k`.
//!
//! Everything here is exact integer arithmetic. Vector-space dimensions are
//! carried as [`VecDim`]; projective dimensions are plain `i64` values that
//! bottom out at `-1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest degree, multiplicity and point count accepted by [`SystemSpec::new`].
/// Keeps every intermediate product inside `i64`.
pub const MAX_PARAMETER: u64 = 1_000_000;

/// A homogeneous linear system `L_d(m^n)`: plane curves of degree `d` with
/// multiplicity at least `m` at each of `n` general points.
///
/// A negative degree names the empty system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemSpec {
    pub d: i64,
    pub m: u64,
    pub n: u64,
}

impl SystemSpec {
    pub fn new(d: i64, m: u64, n: u64) -> Result<Self> {
        let bound = MAX_PARAMETER as i64;
        if d.abs() > bound || m > MAX_PARAMETER || n > MAX_PARAMETER {
            return Err(Error::ParameterOutOfRange { d, m, n, bound: MAX_PARAMETER });
        }
        Ok(SystemSpec { d, m, n })
    }

    /// Number of monomials of degree at most `d`, i.e. the vector-space
    /// dimension of all degree-`d` curves. Zero for negative degree.
    pub fn monomial_count(&self) -> u64 {
        if self.d < 0 {
            0
        } else {
            binom(self.d as u64 + 2, 2)
        }
    }

    /// Number of linear conditions imposed by the fat points.
    pub fn conditions(&self) -> u64 {
        conditions_count(self.m, self.n)
    }

    /// True when no condition is imposed at all.
    pub fn imposes_nothing(&self) -> bool {
        self.m == 0 || self.n == 0
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L_{}({}^{})", self.d, self.m, self.n)
    }
}

/// Dimension of a vector space of forms (projective dimension plus one).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VecDim(pub u64);

impl VecDim {
    pub const ZERO: VecDim = VecDim(0);

    pub fn value(self) -> u64 {
        self.0
    }

    /// Projective dimension, `-1` for the empty system.
    pub fn projective(self) -> i64 {
        self.0 as i64 - 1
    }

    fn clamp(raw: i64) -> VecDim {
        VecDim(raw.max(0) as u64)
    }
}

impl fmt::Display for VecDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Binomial coefficient `C(a, b)`, zero when `b > a`.
pub fn binom(a: u64, b: u64) -> u64 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 0..b {
        // exact at every step: acc * (a - i) is divisible by (i + 1)
        acc = acc * (a - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// `n * m(m+1)/2`: the number of Taylor coefficients forced to vanish.
pub fn conditions_count(m: u64, n: u64) -> u64 {
    n * (m * (m + 1) / 2)
}

/// `d(d+3)/2 + 1`, the number of degree-`d` monomials, as a signed value so
/// the recursion can evaluate it symbolically at degree `-1`.
fn forms(d: i64) -> i64 {
    d * (d + 3) / 2 + 1
}

/// Vector-space dimension of `L_d(m^n)` if every condition were independent,
/// before clamping at zero. Only meaningful for `d >= -1`.
pub(crate) fn raw_vec_dim(d: i64, m: u64, n: u64) -> i64 {
    forms(d) - conditions_count(m, n) as i64
}

/// Virtual projective dimension `d(d+3)/2 - n m(m+1)/2`.
pub fn virtual_dim(spec: SystemSpec) -> Result<i64> {
    if spec.d < 0 {
        return Err(Error::NegativeDegree(spec.d));
    }
    Ok(raw_vec_dim(spec.d, spec.m, spec.n) - 1)
}

/// Expected projective dimension `max(-1, virtual)`.
pub fn expected_proj_dim(spec: SystemSpec) -> Result<i64> {
    Ok(virtual_dim(spec)?.max(-1))
}

/// Expected vector-space dimension. Total: negative degree gives 0 and a
/// system imposing no conditions gives the full `C(d+2, 2)`.
pub fn expected_vec_dim(spec: SystemSpec) -> VecDim {
    if spec.d < 0 {
        return VecDim::ZERO;
    }
    if spec.imposes_nothing() {
        return VecDim(spec.monomial_count());
    }
    VecDim::clamp(raw_vec_dim(spec.d, spec.m, spec.n))
}

fn vec_dim(d: i64, m: u64, n: u64) -> VecDim {
    expected_vec_dim(SystemSpec { d, m, n })
}

/// The admissible twists `k` for a degeneration with `n2` points of
/// multiplicity `m` on each exceptional plane.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KSelection {
    pub candidates: Vec<i64>,
    pub m: u64,
    pub n2: u64,
}

impl KSelection {
    pub fn contains(&self, k: i64) -> bool {
        self.candidates.contains(&k)
    }
}

/// `k(k+3)/2 + 1 - n2 m(m+1)/2 >= 0`: the twisted plane system `L_k(m^{n2})`
/// has non-negative virtual vector dimension.
pub fn k_lower_ok(k: i64, m: u64, n2: u64) -> bool {
    raw_vec_dim(k, m, n2) >= 0
}

/// `(k-1)(k+2)/2 + 1 - n2 m(m+1)/2 <= 0`.
pub fn k_upper_ok(k: i64, m: u64, n2: u64) -> bool {
    raw_vec_dim(k - 1, m, n2) <= 0
}

/// All integers in the closed bracket `[k_l, k_u]` where
/// `k_l = (-3 + sqrt(1 + 4 n2 m(m+1))) / 2` and `k_u = k_l + 1`.
///
/// Membership is decided by the two integer inequalities
/// [`k_lower_ok`] and [`k_upper_ok`]; no square root is taken.
pub fn select_k(m: u64, n2: u64) -> Result<KSelection> {
    if m == 0 || n2 == 0 {
        return Err(Error::DegenerateSelection { m, n2 });
    }
    // k^2 + 3k + 2 >= n2 m(m+1) first holds near sqrt(n2 m(m+1)); walk down
    // from an overestimate so no floating point decides the answer.
    let target = n2 as i64 * (m * (m + 1)) as i64;
    let mut k = (target as f64).sqrt().ceil() as i64 + 1;
    while k > 0 && k_lower_ok(k - 1, m, n2) {
        k -= 1;
    }
    while !k_lower_ok(k, m, n2) {
        k += 1;
    }
    let mut candidates = Vec::with_capacity(2);
    while k_upper_ok(k, m, n2) {
        candidates.push(k);
        k += 1;
    }
    debug_assert!(!candidates.is_empty() && candidates.len() <= 2);
    Ok(KSelection { candidates, m, n2 })
}

/// Which of the sufficient conditions for the fibered-product dimension holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CaseLabel {
    /// Both kernel systems have non-negative virtual dimension.
    I,
    /// Plane kernel non-positive, twisted plane system non-negative.
    II,
    /// Blown-up plane kernel non-positive, `L_d(k^{n1})` non-negative.
    III,
    /// Both kernels non-positive, composite system non-negative.
    IV,
    /// Everything non-positive: the limit system is empty.
    A,
    NONE,
}

impl CaseLabel {
    /// Labels under which the limit dimension equals the expected dimension.
    pub fn is_conclusive(self) -> bool {
        self != CaseLabel::NONE
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::I => "I",
            CaseLabel::II => "II",
            CaseLabel::III => "III",
            CaseLabel::IV => "IV",
            CaseLabel::A => "A",
            CaseLabel::NONE => "NONE",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The limit of `L_d(m^{n1 n2})` on the degenerate surface: the blown-up
/// plane carries `L_d(k^{n1})`, each of the `n1` exceptional planes carries
/// `L_k(m^{n2})`, glued along the exceptional lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiberedProduct {
    pub d: i64,
    pub k: i64,
    pub m: u64,
    pub n1: u64,
    pub n2: u64,
}

impl FiberedProduct {
    pub fn new(d: i64, k: i64, m: u64, n1: u64, n2: u64) -> Result<Self> {
        if d < 0 {
            return Err(Error::NegativeDegree(d));
        }
        if k < 0 {
            return Err(Error::NegativeTwist(k));
        }
        Ok(FiberedProduct { d, k, m, n1, n2 })
    }

    /// The composite system this limit degenerates from.
    pub fn target(&self) -> SystemSpec {
        SystemSpec { d: self.d, m: self.m, n: self.n1 * self.n2 }
    }

    /// The four systems whose non-speciality the degeneration relies on, in
    /// the order `L_d((k+1)^{n1})`, `L_d(k^{n1})`, `L_{k-1}(m^{n2})`,
    /// `L_k(m^{n2})`.
    pub fn sub_systems(&self) -> [SystemSpec; 4] {
        let k = self.k as u64;
        [
            SystemSpec { d: self.d, m: k + 1, n: self.n1 },
            SystemSpec { d: self.d, m: k, n: self.n1 },
            SystemSpec { d: self.k - 1, m: self.m, n: self.n2 },
            SystemSpec { d: self.k, m: self.m, n: self.n2 },
        ]
    }

    /// `dim ker(rho_Y) + dim ker(r_1, ..., r_{n1})`: curves containing all
    /// the exceptional lines on either side.
    pub fn kernel_sum(&self) -> VecDim {
        let [plus, _, minus, _] = self.sub_systems();
        VecDim(expected_vec_dim(plus).0 + self.n1 * expected_vec_dim(minus).0)
    }

    /// Dimension of `L_d(k^{n1})` restricted to the exceptional lines.
    pub fn image_blowup(&self) -> u64 {
        let [plus, base, _, _] = self.sub_systems();
        expected_vec_dim(base).0 - expected_vec_dim(plus).0
    }

    /// Dimension of the restrictions of the `n1` plane systems to their lines.
    pub fn image_planes(&self) -> u64 {
        let [_, _, minus, twisted] = self.sub_systems();
        self.n1 * (expected_vec_dim(twisted).0 - expected_vec_dim(minus).0)
    }

    /// Dimension of the intersection of the two images inside
    /// `n1` copies of `H^0(O(k))`, assuming they meet properly.
    pub fn image_intersection(&self) -> VecDim {
        let ambient = self.n1 as i64 * (self.k + 1);
        VecDim::clamp(self.image_blowup() as i64 + self.image_planes() as i64 - ambient)
    }

    /// Dimension of the fibered product: image intersection plus both kernels.
    pub fn dim_l0(&self) -> VecDim {
        VecDim(self.kernel_sum().0 + self.image_intersection().0)
    }

    /// First satisfied condition in the order I, II, III, IV, then the
    /// all-non-positive case A, otherwise NONE.
    pub fn classify(&self) -> CaseLabel {
        let q = self.quantities();
        if q.plus >= 0 && q.minus >= 0 {
            CaseLabel::I
        } else if q.plus >= 0 && q.minus <= 0 && q.twisted >= 0 {
            CaseLabel::II
        } else if q.plus <= 0 && q.minus >= 0 && q.base >= 0 {
            CaseLabel::III
        } else if q.plus <= 0 && q.minus <= 0 && q.target >= 0 {
            CaseLabel::IV
        } else if q.plus <= 0 && q.minus <= 0 && q.target <= 0 {
            CaseLabel::A
        } else {
            CaseLabel::NONE
        }
    }

    /// Unclamped virtual vector dimensions of the systems involved.
    pub fn quantities(&self) -> VirtualQuantities {
        let (d, k, m) = (self.d, self.k, self.m);
        VirtualQuantities {
            plus: raw_vec_dim(d, (k + 1) as u64, self.n1),
            base: raw_vec_dim(d, k as u64, self.n1),
            minus: raw_vec_dim(k - 1, m, self.n2),
            twisted: raw_vec_dim(k, m, self.n2),
            target: raw_vec_dim(d, m, self.n1 * self.n2),
        }
    }
}

/// Unclamped `forms - conditions` for each system of a [`FiberedProduct`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VirtualQuantities {
    /// `L_d((k+1)^{n1})`
    pub plus: i64,
    /// `L_d(k^{n1})`
    pub base: i64,
    /// `L_{k-1}(m^{n2})`
    pub minus: i64,
    /// `L_k(m^{n2})`
    pub twisted: i64,
    /// `L_d(m^{n1 n2})`
    pub target: i64,
}

/// Convenience wrappers with the flat argument order `(d, k, m, n1, n2)`.
pub fn kernel_sum(d: i64, k: i64, m: u64, n1: u64, n2: u64) -> Result<VecDim> {
    Ok(FiberedProduct::new(d, k, m, n1, n2)?.kernel_sum())
}

pub fn image_intersection(d: i64, k: i64, m: u64, n1: u64, n2: u64) -> Result<VecDim> {
    Ok(FiberedProduct::new(d, k, m, n1, n2)?.image_intersection())
}

pub fn dim_l0(d: i64, k: i64, m: u64, n1: u64, n2: u64) -> Result<VecDim> {
    Ok(FiberedProduct::new(d, k, m, n1, n2)?.dim_l0())
}

pub fn classify_case(d: i64, k: i64, m: u64, n1: u64, n2: u64) -> Result<CaseLabel> {
    Ok(FiberedProduct::new(d, k, m, n1, n2)?.classify())
}

/// Expected vector dimension of `L_d(m^n)` by direct formula; shorthand used
/// across the crate.
pub(crate) fn evd(d: i64, m: u64, n: u64) -> VecDim {
    vec_dim(d, m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(d: i64, m: u64, n: u64) -> SystemSpec {
        SystemSpec { d, m, n }
    }

    // Counts monomials x^i y^j with i + j <= d by enumeration.
    fn count_monomials(d: i64) -> u64 {
        let mut c = 0;
        for i in 0..=d {
            for _ in 0..=(d - i) {
                c += 1;
            }
        }
        c
    }

    #[test]
    fn binom_small() {
        assert_eq!(binom(4, 2), 6);
        assert_eq!(binom(0, 0), 1);
        assert_eq!(binom(2, 3), 0);
        assert_eq!(binom(60, 30), 118_264_581_564_861_424);
    }

    #[test]
    fn monomial_count_matches_enumeration() {
        for d in 0..40 {
            assert_eq!(spec(d, 0, 0).monomial_count(), count_monomials(d));
        }
        assert_eq!(spec(-3, 1, 1).monomial_count(), 0);
    }

    #[test]
    fn virtual_dim_examples() {
        assert_eq!(virtual_dim(spec(2, 1, 5)).unwrap(), 0);
        assert_eq!(virtual_dim(spec(2, 2, 2)).unwrap(), -1);
        assert_eq!(virtual_dim(spec(8, 1, 16)).unwrap(), 28);
        assert!(matches!(virtual_dim(spec(-1, 1, 1)), Err(Error::NegativeDegree(-1))));
    }

    #[test]
    fn expected_proj_dim_examples() {
        assert_eq!(expected_proj_dim(spec(2, 2, 2)).unwrap(), -1);
        assert_eq!(expected_proj_dim(spec(4, 2, 5)).unwrap(), -1);
        assert_eq!(expected_proj_dim(spec(8, 1, 16)).unwrap(), 28);
    }

    #[test]
    fn expected_vec_dim_examples() {
        assert_eq!(expected_vec_dim(spec(4, 1, 16)), VecDim(0));
        assert_eq!(expected_vec_dim(spec(-1, 3, 4)), VecDim(0));
        assert_eq!(expected_vec_dim(spec(8, 1, 16)), VecDim(29));
        assert_eq!(expected_vec_dim(spec(3, 0, 7)), VecDim(10));
        assert_eq!(expected_vec_dim(spec(3, 5, 0)), VecDim(10));
    }

    #[test]
    fn conditions_examples() {
        assert_eq!(conditions_count(2, 5), 15);
        assert_eq!(conditions_count(0, 7), 0);
        assert_eq!(conditions_count(1, 16), 16);
    }

    #[test]
    fn select_k_examples() {
        assert_eq!(select_k(1, 4).unwrap().candidates, vec![2]);
        assert_eq!(select_k(2, 4).unwrap().candidates, vec![4]);
        assert_eq!(select_k(1, 9).unwrap().candidates, vec![3]);
        assert!(select_k(0, 4).is_err());
        assert!(select_k(3, 0).is_err());
    }

    #[test]
    fn select_k_two_candidates_on_perfect_square() {
        // 1 + 4 * 2 * 1 * 2 = 17 is not square; 1 + 4 * 3 * 1 * 2 = 25 is,
        // so k_l = 1 and k_u = 2 are both integers.
        assert_eq!(select_k(1, 3).unwrap().candidates, vec![1, 2]);
        assert_eq!(select_k(1, 2).unwrap().candidates, vec![1]);
    }

    #[test]
    fn kernel_sum_examples() {
        assert_eq!(kernel_sum(8, 2, 1, 4, 4).unwrap(), VecDim(21));
        assert_eq!(kernel_sum(4, 2, 1, 4, 4).unwrap(), VecDim(0));
        assert_eq!(kernel_sum(0, 0, 1, 4, 4).unwrap(), VecDim(0));
    }

    #[test]
    fn image_intersection_examples() {
        assert_eq!(image_intersection(8, 2, 1, 4, 4).unwrap(), VecDim(8));
        assert_eq!(image_intersection(4, 2, 1, 4, 4).unwrap(), VecDim(0));
        assert_eq!(image_intersection(2, 2, 1, 4, 4).unwrap(), VecDim(0));
    }

    #[test]
    fn dim_l0_examples() {
        assert_eq!(dim_l0(8, 2, 1, 4, 4).unwrap(), VecDim(29));
        assert_eq!(dim_l0(4, 2, 1, 4, 4).unwrap(), VecDim(0));
        assert_eq!(dim_l0(10, 4, 2, 4, 4).unwrap(), VecDim(18));
        assert_eq!(expected_vec_dim(spec(10, 2, 16)), VecDim(18));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_case(8, 2, 1, 4, 4).unwrap(), CaseLabel::II);
        assert_eq!(classify_case(4, 2, 1, 4, 4).unwrap(), CaseLabel::A);
        assert_eq!(classify_case(2, 4, 2, 4, 4).unwrap(), CaseLabel::A);
    }

    #[test]
    fn fibered_product_rejects_negative_inputs() {
        assert!(matches!(FiberedProduct::new(-1, 0, 1, 2, 2), Err(Error::NegativeDegree(-1))));
        assert!(matches!(FiberedProduct::new(3, -1, 1, 2, 2), Err(Error::NegativeTwist(-1))));
    }

    #[test]
    fn sub_systems_order() {
        let fp = FiberedProduct::new(10, 4, 2, 4, 9).unwrap();
        assert_eq!(
            fp.sub_systems(),
            [spec(10, 5, 4), spec(10, 4, 4), spec(3, 2, 9), spec(4, 2, 9)]
        );
        assert_eq!(fp.target(), spec(10, 2, 36));
    }

    #[test]
    fn spec_bounds() {
        assert!(SystemSpec::new(10, 2, 16).is_ok());
        assert!(SystemSpec::new(-2_000_000, 2, 16).is_err());
        assert!(SystemSpec::new(1, 2, MAX_PARAMETER + 1).is_err());
    }

    proptest! {
        #[test]
        fn vec_dim_is_proj_dim_plus_one(d in 0i64..200, m in 1u64..30, n in 1u64..200) {
            let s = spec(d, m, n);
            let e = expected_proj_dim(s).unwrap();
            let v = expected_vec_dim(s);
            if e >= 0 {
                prop_assert_eq!(v.0 as i64, e + 1);
            } else {
                prop_assert_eq!(v, VecDim(0));
            }
            prop_assert_eq!(v.projective(), e);
        }

        #[test]
        fn select_k_is_tight_bracket(m in 1u64..=50, n2 in 1u64..=200) {
            let sel = select_k(m, n2).unwrap();
            let c = &sel.candidates;
            prop_assert!(!c.is_empty() && c.len() <= 2);
            if c.len() == 2 {
                prop_assert_eq!(c[1], c[0] + 1);
            }
            for &k in c {
                prop_assert!(k_lower_ok(k, m, n2) && k_upper_ok(k, m, n2));
            }
            prop_assert!(!k_lower_ok(c[0] - 1, m, n2));
            prop_assert!(!k_upper_ok(c[c.len() - 1] + 1, m, n2));
        }

        #[test]
        fn restriction_monotonicity(d in 0i64..40, k in 0i64..40, m in 1u64..6, n in 1u64..40) {
            prop_assert!(evd(d, k as u64, n) >= evd(d, k as u64 + 1, n));
            prop_assert!(evd(k, m, n) >= evd(k - 1, m, n));
        }
    }
}
