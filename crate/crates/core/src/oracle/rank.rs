use super::matrix::ConditionsMatrix;
use crate::exec::Exec;

/// Below this many entries in the trailing block, row updates stay on one
/// thread even in parallel mode.
const PARALLEL_BLOCK: usize = 1 << 14;

/// Exact rank over `GF(p)` by forward elimination.
pub fn rank_mod_p(matrix: &ConditionsMatrix, exec: Exec) -> usize {
    let field = matrix.field();
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let mut a = matrix.data().to_vec();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
            continue;
        };
        if pivot != rank {
            for c in col..cols {
                a.swap(pivot * cols + c, rank * cols + c);
            }
        }
        let inv = field.inv(a[rank * cols + col]);
        for c in col..cols {
            let idx = rank * cols + c;
            a[idx] = field.mul(a[idx], inv);
        }

        let (head, tail) = a.split_at_mut((rank + 1) * cols);
        let pivot_row = &head[rank * cols..];
        let eliminate = |row: &mut [u64]| {
            let factor = row[col];
            if factor == 0 {
                return;
            }
            for c in col..cols {
                row[c] = field.sub(row[c], field.mul(factor, pivot_row[c]));
            }
        };
        let block = tail.len() / cols.max(1) * (cols - col);
        eliminate_rows(tail, cols, eliminate, exec.is_parallel() && block >= PARALLEL_BLOCK);
        rank += 1;
    }
    rank
}

fn eliminate_rows<F>(tail: &mut [u64], cols: usize, f: F, parallel: bool)
where
    F: Fn(&mut [u64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        tail.par_chunks_mut(cols).for_each(f);
        return;
    }
    let _ = parallel;
    tail.chunks_mut(cols).for_each(f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::field::{PrimeField, DEFAULT_PRIME};

    fn field() -> PrimeField {
        PrimeField::new(DEFAULT_PRIME).unwrap()
    }

    fn mat(rows: Vec<Vec<u64>>, cols: usize) -> ConditionsMatrix {
        ConditionsMatrix::from_rows(rows, cols, field())
    }

    #[test]
    fn zero_and_identity() {
        assert_eq!(rank_mod_p(&mat(vec![vec![0; 4]; 3], 4), Exec::Sequential), 0);
        let id: Vec<Vec<u64>> = (0..6).map(|i| (0..6).map(|j| (i == j) as u64).collect()).collect();
        assert_eq!(rank_mod_p(&mat(id, 6), Exec::Sequential), 6);
        assert_eq!(rank_mod_p(&mat(vec![], 5), Exec::Sequential), 0);
    }

    #[test]
    fn dependent_rows() {
        let p = DEFAULT_PRIME;
        let rows = vec![vec![1, 2, 3], vec![2, 4, 6], vec![p - 1, p - 2, p - 3], vec![0, 1, 1]];
        assert_eq!(rank_mod_p(&mat(rows, 3), Exec::Sequential), 2);
    }

    #[test]
    fn small_prime_rank_differs_from_rationals() {
        // [[1, 1], [1, 3]] has determinant 2: full rank over Q, rank 1 mod 2
        let f2 = PrimeField::new(2).unwrap();
        let m = ConditionsMatrix::from_rows(vec![vec![1, 1], vec![1, 3]], 2, f2);
        assert_eq!(rank_mod_p(&m, Exec::Sequential), 1);
    }

    #[test]
    fn parallel_matches_sequential_on_large_block() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cols = 220;
        let mut rows: Vec<Vec<u64>> =
            (0..180).map(|_| (0..cols).map(|_| rng.gen_range(0..DEFAULT_PRIME)).collect()).collect();
        // plant 30 dependent rows
        for i in 0..30 {
            let combo: Vec<u64> = (0..cols).map(|c| (rows[i][c] * 3 + rows[i + 1][c]) % DEFAULT_PRIME).collect();
            rows.push(combo);
        }
        let m = mat(rows, cols);
        let seq = rank_mod_p(&m, Exec::Sequential);
        assert_eq!(seq, 180);
        assert_eq!(rank_mod_p(&m, Exec::Parallel), seq);
    }
}
