//! Independent oracles built straight from the ladder-operator matrix
//! elements, sharing no code with the crate.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type Dense = Vec<Vec<C>>;

/// Dense position and momentum matrices of the `n`-level truncation.
pub fn oracle_xp(n: usize) -> (Dense, Dense) {
    let mut x = vec![vec![C::new(0.0, 0.0); n]; n];
    let mut p = x.clone();
    for j in 0..n.saturating_sub(1) {
        let r = ((j + 1) as f64 / 2.0).sqrt();
        x[j][j + 1] = C::new(r, 0.0);
        x[j + 1][j] = C::new(r, 0.0);
        p[j][j + 1] = C::new(0.0, -r);
        p[j + 1][j] = C::new(0.0, r);
    }
    (x, p)
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![C::new(0.0, 0.0); m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            let aik = a[i][k];
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// `<v|M|v>` for a row of coefficients `v`.
pub fn expect(v: &[C], m: &Dense) -> C {
    let mut acc = C::new(0.0, 0.0);
    for (j, row) in m.iter().enumerate() {
        for (k, mjk) in row.iter().enumerate() {
            acc += v[j].conj() * mjk * v[k];
        }
    }
    acc
}

/// Objective `sum_n <x>_n^2 + <p>_n^2` over the rows of `rows`.
pub fn oracle_s(rows: &[Vec<C>]) -> f64 {
    let (x, p) = oracle_xp(rows.len());
    rows.iter()
        .map(|r| expect(r, &x).re.powi(2) + expect(r, &p).re.powi(2))
        .sum()
}

/// `sum_n <x^2 + p^2>_n`. The squares are products taken one level higher
/// and then cut back, which is the projection of the untruncated operators.
pub fn oracle_second_moment_sum(rows: &[Vec<C>]) -> f64 {
    let n = rows.len();
    let (x, p) = oracle_xp(n + 1);
    let cut = |m: Dense| -> Dense { m.into_iter().take(n).map(|r| r.into_iter().take(n).collect()).collect() };
    let x2 = cut(matmul(&x, &x));
    let p2 = cut(matmul(&p, &p));
    rows.iter().map(|r| (expect(r, &x2) + expect(r, &p2)).re).sum()
}

/// `sum_n sum_j |U_nj|^2 (j + 1/2)`.
pub fn oracle_energy_sum(rows: &[Vec<C>]) -> f64 {
    rows.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, c)| c.norm_sqr() * (j as f64 + 0.5))
                .sum::<f64>()
        })
        .sum()
}

pub fn rows_of(m: &locbasis::CMatrix64) -> Vec<Vec<C>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}
