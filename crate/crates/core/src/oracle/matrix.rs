use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::PrimeField;
use crate::calculus::{binom, SystemSpec};
use crate::error::{Error, Result};

/// Exponents `(i, j)` of `x^i y^j`, `i + j <= d`, ordered by total degree and
/// then by decreasing power of `x`.
pub fn monomial_basis(d: u64) -> Vec<(u64, u64)> {
    let mut basis = Vec::with_capacity(binom(d + 2, 2) as usize);
    for total in 0..=d {
        for j in 0..=total {
            basis.push((total - j, j));
        }
    }
    basis
}

/// Affine points in `[1, p-1]^2` drawn from a seeded ChaCha stream.
///
/// Trial `t` of seed `s` always yields the same points, independent of
/// which other trials run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointConfig {
    pub points: Vec<(u64, u64)>,
    pub seed: u64,
    pub trial: u32,
}

impl PointConfig {
    pub fn generate(n: u64, field: PrimeField, seed: u64, trial: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let p = field.modulus();
        let points = (0..n).map(|_| (rng.gen_range(1..p), rng.gen_range(1..p))).collect();
        PointConfig { points, seed, trial }
    }
}

/// Hasse derivative of order `(a, b)` of every basis monomial of degree at
/// most `d`, evaluated at `point`: `C(i,a) C(j,b) x^(i-a) y^(j-b)`.
pub fn hasse_row(point: (u64, u64), order: (u64, u64), d: u64, field: PrimeField) -> Vec<u64> {
    let (x, y) = (field.reduce(point.0), field.reduce(point.1));
    let xs = powers(x, d, field);
    let ys = powers(y, d, field);
    let (a, b) = order;
    monomial_basis(d)
        .into_iter()
        .map(|(i, j)| {
            if a > i || b > j {
                return 0;
            }
            let coeff = field.mul(field.reduce(binom(i, a)), field.reduce(binom(j, b)));
            field.mul(coeff, field.mul(xs[(i - a) as usize], ys[(j - b) as usize]))
        })
        .collect()
}

fn powers(x: u64, d: u64, field: PrimeField) -> Vec<u64> {
    let mut out = Vec::with_capacity(d as usize + 1);
    let mut acc = 1 % field.modulus();
    for _ in 0..=d {
        out.push(acc);
        acc = field.mul(acc, x);
    }
    out
}

/// Row-major matrix of Taylor-vanishing conditions over `GF(p)`: one row per
/// (point, derivative order `a + b < m`), one column per monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionsMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
    field: PrimeField,
}

impl ConditionsMatrix {
    pub fn from_rows(rows: Vec<Vec<u64>>, cols: usize, field: PrimeField) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged conditions matrix");
            data.extend(row.into_iter().map(|v| field.reduce(v)));
        }
        ConditionsMatrix { rows: n, cols, data, field }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn data(&self) -> &[u64] {
        &self.data
    }
}

/// Stacks [`hasse_row`] for every point and every order `a + b <= m - 1`.
pub fn build_conditions_matrix(
    spec: SystemSpec,
    config: &PointConfig,
    field: PrimeField,
) -> Result<ConditionsMatrix> {
    if spec.d < 0 {
        return Err(Error::NegativeDegree(spec.d));
    }
    check_prime(spec, field)?;
    if config.points.len() as u64 != spec.n {
        return Err(Error::PointCountMismatch { got: config.points.len(), want: spec.n });
    }
    let d = spec.d as u64;
    let cols = binom(d + 2, 2) as usize;
    let rows = spec.conditions() as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for &point in &config.points {
        for total in 0..spec.m {
            for b in 0..=total {
                data.extend(hasse_row(point, (total - b, b), d, field));
            }
        }
    }
    Ok(ConditionsMatrix { rows, cols, data, field })
}

pub(crate) fn check_prime(spec: SystemSpec, field: PrimeField) -> Result<()> {
    let p = field.modulus();
    if (spec.d >= 0 && p <= spec.d as u64) || p <= spec.m {
        return Err(Error::PrimeTooSmall { p, d: spec.d, m: spec.m });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::field::DEFAULT_PRIME;

    fn f() -> PrimeField {
        PrimeField::new(DEFAULT_PRIME).unwrap()
    }

    #[test]
    fn basis_examples() {
        assert_eq!(monomial_basis(0), vec![(0, 0)]);
        assert_eq!(monomial_basis(1), vec![(0, 0), (1, 0), (0, 1)]);
        assert_eq!(
            monomial_basis(2),
            vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        );
        for d in 0..30 {
            assert_eq!(monomial_basis(d).len() as u64, binom(d + 2, 2));
        }
    }

    #[test]
    fn hasse_row_examples() {
        assert_eq!(hasse_row((1, 1), (0, 0), 1, f()), vec![1, 1, 1]);
        assert_eq!(hasse_row((17, 23), (1, 0), 1, f()), vec![0, 1, 0]);
        // d/dx of 1, x, y, x^2, xy, y^2 at (2, 3): 0, 1, 0, 2x, y, 0
        assert_eq!(hasse_row((2, 3), (1, 0), 2, f()), vec![0, 1, 0, 4, 3, 0]);
    }

    #[test]
    fn hasse_row_has_no_factorials() {
        // second Hasse derivative in x of x^3 at (1, 1) is C(3,2) = 3, not 6
        let row = hasse_row((1, 1), (2, 0), 3, f());
        let idx = monomial_basis(3).iter().position(|&e| e == (3, 0)).unwrap();
        assert_eq!(row[idx], 3);
    }

    #[test]
    fn matrix_shapes() {
        for (d, m, n, r, c) in [(2, 1, 5, 5, 6), (2, 2, 2, 6, 6), (4, 2, 5, 15, 15)] {
            let spec = SystemSpec { d, m, n };
            let pts = PointConfig::generate(n, f(), 7, 0);
            let mat = build_conditions_matrix(spec, &pts, f()).unwrap();
            assert_eq!((mat.rows(), mat.cols()), (r, c));
        }
    }

    #[test]
    fn rejects_small_prime_and_wrong_points() {
        let small = PrimeField::new(5).unwrap();
        let spec = SystemSpec { d: 5, m: 1, n: 1 };
        let pts = PointConfig::generate(1, small, 1, 0);
        assert!(matches!(
            build_conditions_matrix(spec, &pts, small),
            Err(Error::PrimeTooSmall { p: 5, .. })
        ));
        let spec = SystemSpec { d: 3, m: 1, n: 2 };
        assert!(matches!(
            build_conditions_matrix(spec, &pts, small),
            Err(Error::PointCountMismatch { got: 1, want: 2 })
        ));
    }

    #[test]
    fn points_are_reproducible_and_in_range() {
        let a = PointConfig::generate(20, f(), 0xF47, 3);
        let b = PointConfig::generate(20, f(), 0xF47, 3);
        let c = PointConfig::generate(20, f(), 0xF47, 4);
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
        assert!(a.points.iter().all(|&(x, y)| (1..DEFAULT_PRIME).contains(&x) && (1..DEFAULT_PRIME).contains(&y)));
    }
}
