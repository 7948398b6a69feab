#![allow(dead_code)]

use std::io::Write;

use gatefid::{DensityOperator, C64};

/// Writes past the test harness's output capture so the verdict line
/// shows up in a plain `cargo test` run.
pub fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("acceptance criterion {criterion} [{name}]: {tag} ({detail})\n");
    let _ = std::io::stdout().write_all(line.as_bytes());
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Nullspace dimension of {X : Xρ = ρX for every ρ}, by Gaussian
/// elimination on the equations written out entry by entry.
pub fn brute_force_commutant_dim(states: &[DensityOperator]) -> usize {
    let d = states[0].dim();
    let n = d * d;
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for rho in states {
        let m = rho.matrix();
        for a in 0..d {
            for b in 0..d {
                // (Xρ − ρX)[a][b] = Σ_c X[a][c]ρ[c][b] − ρ[a][c]X[c][b]
                let mut row = vec![C64::new(0.0, 0.0); n];
                for c in 0..d {
                    row[a * d + c] += m[(c, b)];
                    row[c * d + b] -= m[(a, c)];
                }
                rows.push(row);
            }
        }
    }
    n - rank(rows, n, 1e-9)
}

fn rank(mut rows: Vec<Vec<C64>>, n: usize, tol: f64) -> usize {
    let mut r = 0;
    for col in 0..n {
        let Some(piv) = (r..rows.len()).max_by(|&i, &j| rows[i][col].norm().total_cmp(&rows[j][col].norm())) else {
            break;
        };
        if rows[piv][col].norm() < tol {
            continue;
        }
        rows.swap(r, piv);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            let f = row[col] / pivot[col];
            if i != r && f.norm() != 0.0 {
                for (x, v) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * v;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}
