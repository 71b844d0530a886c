use super::{output_marginal_raw, CondPmf, DistMatrix, JointPmf, Pmf};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

pub(crate) fn entropy_raw(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlogx(x)).sum::<f64>()
}

pub(crate) fn kl_raw(q: &[f64], p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in q.iter().zip(p) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc.max(0.0)
}

/// `sum_x qx(x) D(q_rows[x] || p_rows[x])`, skipping rows with `qx(x) = 0`.
pub(crate) fn cond_kl_raw(qx: &[f64], q_rows: &[Vec<f64>], p_rows: &[Vec<f64>]) -> f64 {
    let mut acc = 0.0;
    for ((&w, q), p) in qx.iter().zip(q_rows).zip(p_rows) {
        if w > 0.0 {
            acc += w * kl_raw(q, p);
        }
    }
    acc
}

/// `I(X;Y)` for `qx` pushed through `rows`.
pub(crate) fn mutual_information_raw(qx: &[f64], rows: &[Vec<f64>]) -> f64 {
    let qy = output_marginal_raw(qx, rows);
    let mut acc = entropy_raw(&qy);
    for (row, &w) in rows.iter().zip(qx) {
        if w > 0.0 {
            acc -= w * entropy_raw(row);
        }
    }
    acc.max(0.0)
}

fn same_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!("{what}: sizes {a} and {b} differ")));
    }
    Ok(())
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_raw(p.as_slice())
}

fn check_support(q: &[f64], p: &[f64], what: &str) -> Result<()> {
    match q.iter().zip(p).position(|(&a, &b)| a > 0.0 && b <= 0.0) {
        Some(i) => Err(Error::SupportMismatch(format!("{what}: letter {i} has mass only in the first argument"))),
        None => Ok(()),
    }
}

/// `D(q || p)`.
pub fn kl_divergence(q: &Pmf, p: &Pmf) -> Result<f64> {
    same_len(q.len(), p.len(), "kl_divergence")?;
    check_support(q.as_slice(), p.as_slice(), "kl_divergence")?;
    Ok(kl_raw(q.as_slice(), p.as_slice()))
}

/// `D(Q || W | qx) = sum_x qx(x) D(Q(.|x) || W(.|x))`.
pub fn cond_divergence(q: &CondPmf, w: &CondPmf, qx: &Pmf) -> Result<f64> {
    same_len(q.in_size(), w.in_size(), "cond_divergence rows")?;
    same_len(q.out_size(), w.out_size(), "cond_divergence columns")?;
    same_len(q.in_size(), qx.len(), "cond_divergence input")?;
    for x in (0..qx.len()).filter(|&x| qx[x] > 0.0) {
        check_support(q.row(x), w.row(x), &format!("cond_divergence row {x}"))?;
    }
    Ok(cond_kl_raw(qx.as_slice(), q.rows(), w.rows()))
}

pub fn mutual_information(qx: &Pmf, q: &CondPmf) -> Result<f64> {
    same_len(q.in_size(), qx.len(), "mutual_information")?;
    Ok(mutual_information_raw(qx.as_slice(), q.rows()))
}

/// Backward conditional entropy `H(X|Y)` of the joint `qx x w`.
pub fn backward_cond_entropy(qx: &Pmf, w: &CondPmf) -> Result<f64> {
    Ok((entropy(qx) - mutual_information(qx, w)?).max(0.0))
}

pub(crate) fn bhattacharyya_raw(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(&x, &y)| (x * y).sqrt()).sum();
    if s > 0.0 {
        (-s.ln()).max(0.0)
    } else {
        f64::INFINITY
    }
}

/// Pairwise `d(x, x') = -ln sum_y sqrt(W(y|x) W(y|x'))`.
pub fn bhattacharyya_matrix(w: &CondPmf) -> DistMatrix {
    let k = w.in_size();
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = bhattacharyya_raw(w.row(i), w.row(j));
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    DistMatrix(d)
}

pub(crate) fn bhatt_avg_raw(j: &[Vec<f64>], d: &[Vec<f64>]) -> f64 {
    let mut acc = 0.0;
    for (jr, dr) in j.iter().zip(d) {
        for (&p, &v) in jr.iter().zip(dr) {
            if p > 0.0 {
                acc += p * v;
            }
        }
    }
    acc
}

/// `E_J[d(X, X~)]`; zero mass on an infinite distance contributes nothing.
pub fn bhattacharyya_avg(j: &JointPmf, d: &DistMatrix) -> Result<f64> {
    let (a, b) = j.shape();
    same_len(a, d.size(), "bhattacharyya_avg rows")?;
    same_len(b, d.size(), "bhattacharyya_avg columns")?;
    Ok(bhatt_avg_raw(j.rows(), d.rows()))
}
