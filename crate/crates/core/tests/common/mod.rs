#![allow(dead_code)]

use pairfiber::io::{parse_count_matrix, parse_matrix};
use pairfiber::table::cell_count;
use pairfiber::{PairTable, RealPairTable};
use proptest::prelude::*;

pub fn data_path(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn observed_table() -> PairTable {
    parse_count_matrix(&std::fs::read_to_string(data_path("observed.txt")).unwrap()).unwrap()
}

pub fn printed_fit() -> RealPairTable {
    parse_matrix::<f64>(&std::fs::read_to_string(data_path("printed_fit.txt")).unwrap()).unwrap().table
}

pub fn printed_deviations() -> RealPairTable {
    parse_matrix::<f64>(&std::fs::read_to_string(data_path("printed_deviations.txt")).unwrap()).unwrap().table
}

/// Tables over 4..=max_n categories with cells in 0..=max_cell.
pub fn small_table(max_n: usize, max_cell: u64) -> impl Strategy<Value = PairTable> {
    (4usize..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec(0..=max_cell, cell_count(n))
            .prop_map(move |c| PairTable::from_cells(n, c).unwrap())
    })
}

/// Like [`small_table`] but every category has a positive margin.
pub fn positive_table(max_n: usize, max_cell: u64) -> impl Strategy<Value = PairTable> {
    (4usize..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec(1..=max_cell, cell_count(n))
            .prop_map(move |c| PairTable::from_cells(n, c).unwrap())
    })
}

/// Dense Gaussian elimination with partial pivoting; returns x with a x = b.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Newton's method on `θ_j (S - θ_j) - [j ∈ {r,s}] θ_r θ_s = u_j` with
/// `S = Σ θ`: the product-form table over all cells except the optional
/// excluded pair `(r, s)` (1-based), whose margins are `u`.
pub fn newton_fit(u: &[f64], excluded: Option<(usize, usize)>) -> Vec<f64> {
    let n = u.len();
    let ex = excluded.map(|(r, s)| (r - 1, s - 1));
    let residual = |t: &[f64]| -> Vec<f64> {
        let s: f64 = t.iter().sum();
        (0..n)
            .map(|j| {
                let mut m = t[j] * (s - t[j]);
                if let Some((r, q)) = ex {
                    if j == r || j == q {
                        m -= t[r] * t[q];
                    }
                }
                m - u[j]
            })
            .collect()
    };
    let s0: f64 = u.iter().sum::<f64>().sqrt();
    let mut theta: Vec<f64> = u.iter().map(|&x| x / s0).collect();
    for _ in 0..500 {
        let s: f64 = theta.iter().sum();
        let r = residual(&theta);
        if r.iter().all(|x| x.abs() < 1e-11 * (1.0 + s * s)) {
            break;
        }
        let mut jac: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|k| if j == k { s - theta[j] } else { theta[j] }).collect())
            .collect();
        if let Some((a, b)) = ex {
            for j in [a, b] {
                jac[j][a] -= theta[b];
                jac[j][b] -= theta[a];
            }
        }
        let step = solve(jac, r.clone());
        let norm = |t: &[f64]| residual(t).iter().map(|x| x * x).sum::<f64>();
        let base = norm(&theta);
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, d)| t - lambda * d).collect();
            if (cand.iter().all(|&t| t > 0.0) && norm(&cand) < base) || lambda < 1e-12 {
                theta = cand;
                break;
            }
            lambda *= 0.5;
        }
    }
    theta
}

/// The sorted table of a margin vector: list category k u_k times in
/// order and pair position t with position t + N.
pub fn sorted_table(u: &[u64]) -> PairTable {
    let n = u.len();
    let word: Vec<usize> = u.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat(k + 1).take(c as usize)).collect();
    let half = word.len() / 2;
    let mut t = PairTable::zeros(n).unwrap();
    for i in 0..half {
        let p = pairfiber::PairIndex::new(word[i], word[i + half], n).unwrap();
        t[p] += 1;
    }
    t
}
