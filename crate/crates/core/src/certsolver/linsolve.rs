//! Exact Gauss–Jordan elimination over the Gaussian rationals.

use num_traits::{One, Zero};

use crate::polyring::GaussRational;

/// Result of reducing an augmented system `A·x = b`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub rank: usize,
    pub augmented_rank: usize,
    /// Particular solution with every free unknown set to zero, when consistent.
    pub solution: Option<Vec<GaussRational>>,
}

impl Reduction {
    pub fn nullity(&self, unknowns: usize) -> usize {
        unknowns - self.rank
    }
}

/// Reduces the augmented matrix `[A | b]` (rows of length `unknowns + 1`)
/// to reduced row-echelon form.
///
/// Pivots are taken column by column in unknown order, first nonzero row
/// below the current one; pivot rows are normalized to a unit pivot. The
/// choice is deterministic, so repeated solves give identical certificates.
pub fn solve_augmented(mut rows: Vec<Vec<GaussRational>>, unknowns: usize) -> Reduction {
    let mut pivots: Vec<usize> = Vec::new();
    let mut top = 0;
    for col in 0..unknowns {
        let Some(p) = (top..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(top, p);
        let inv = rows[top][col].inv().expect("nonzero pivot");
        if !inv.is_one() {
            for v in rows[top][col..].iter_mut() {
                if !v.is_zero() {
                    *v = &*v * &inv;
                }
            }
        }
        let pivot_row = rows[top].clone();
        let support: Vec<usize> = (col..=unknowns)
            .filter(|&c| !pivot_row[c].is_zero())
            .collect();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == top || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for &c in &support {
                let delta = &factor * &pivot_row[c];
                row[c] -= &delta;
            }
        }
        pivots.push(col);
        top += 1;
        if top == rows.len() {
            break;
        }
    }
    let rank = pivots.len();
    let inconsistent = rows[rank..].iter().any(|row| !row[unknowns].is_zero());
    let augmented_rank = rank + usize::from(inconsistent);
    let solution = (!inconsistent).then(|| {
        let mut x = vec![GaussRational::zero(); unknowns];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = rows[r][unknowns].clone();
        }
        x
    });
    Reduction {
        rank,
        augmented_rank,
        solution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: i64) -> GaussRational {
        GaussRational::from_integer(v)
    }

    #[test]
    fn unique_solution() {
        // x + y = 3, x − y = 1
        let rows = vec![vec![g(1), g(1), g(3)], vec![g(1), g(-1), g(1)]];
        let red = solve_augmented(rows, 2);
        assert_eq!(red.rank, 2);
        assert_eq!(red.solution.unwrap(), vec![g(2), g(1)]);
    }

    #[test]
    fn inconsistent_system() {
        let rows = vec![vec![g(1), g(1), g(1)], vec![g(2), g(2), g(3)]];
        let red = solve_augmented(rows, 2);
        assert_eq!(red.rank, 1);
        assert_eq!(red.augmented_rank, 2);
        assert!(red.solution.is_none());
    }

    #[test]
    fn free_variables_are_zero() {
        let rows = vec![vec![g(0), g(2), g(4)]];
        let red = solve_augmented(rows, 2);
        assert_eq!(red.nullity(2), 1);
        assert_eq!(red.solution.unwrap(), vec![g(0), g(2)]);
    }
}
