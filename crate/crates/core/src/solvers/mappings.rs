use crate::error::{Error, Result};
use crate::prob::{bhattacharyya_matrix, CondPmf, JointPmf, Pmf};

/// Row `x` of the geometric combination: `w^alpha qy^(1-alpha)`, normalized.
/// Returns `false` when the row has no mass.
pub(crate) fn geometric_row(w: &[f64], qy: &[f64], alpha: f64, out: &mut [f64]) -> bool {
    if alpha >= 1.0 {
        out.copy_from_slice(w);
    } else if alpha <= 0.0 {
        out.copy_from_slice(qy);
    } else {
        for ((o, &a), &b) in out.iter_mut().zip(w).zip(qy) {
            *o = if a > 0.0 && b > 0.0 {
                a.powf(alpha) * b.powf(1.0 - alpha)
            } else {
                0.0
            };
        }
    }
    normalize(out)
}

pub(crate) fn normalize(v: &mut [f64]) -> bool {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= s);
    true
}

/// Writes `softmax(logw)` into `out`, treating `-inf` as zero weight and a
/// row with `+inf` entries as uniform over them.
pub(crate) fn softmax_into(logw: &[f64], out: &mut [f64]) -> bool {
    let n_inf = logw.iter().filter(|&&l| l == f64::INFINITY).count();
    if n_inf > 0 {
        for (o, &l) in out.iter_mut().zip(logw) {
            *o = if l == f64::INFINITY { 1.0 / n_inf as f64 } else { 0.0 };
        }
        return true;
    }
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return false;
    }
    for (o, &l) in out.iter_mut().zip(logw) {
        *o = (l - m).exp();
    }
    normalize(out)
}

/// Row of the Bhattacharyya tilt `q(x~) exp(-lambda d(x, x~))`, in the log domain.
pub(crate) fn bhatt_row(q: &[f64], d: &[f64], lambda: f64, scratch: &mut [f64], out: &mut [f64]) -> bool {
    for ((s, &p), &dist) in scratch.iter_mut().zip(q).zip(d) {
        *s = if p <= 0.0 {
            f64::NEG_INFINITY
        } else if dist.is_infinite() {
            if lambda > 0.0 {
                f64::NEG_INFINITY
            } else if lambda < 0.0 {
                f64::INFINITY
            } else {
                p.ln()
            }
        } else {
            p.ln() - lambda * dist
        };
    }
    softmax_into(scratch, out)
}

/// The geometric combination mapping applied to every row of `w`.
pub fn map_geometric(w: &CondPmf, qy: &Pmf, alpha: f64) -> Result<CondPmf> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, 1]")));
    }
    if qy.len() != w.out_size() {
        return Err(Error::InvalidArgument("qy does not match the channel output alphabet".into()));
    }
    let mut rows = Vec::with_capacity(w.in_size());
    for (x, row) in w.rows().iter().enumerate() {
        let mut out = vec![0.0; row.len()];
        if !geometric_row(row, qy.as_slice(), alpha, &mut out) {
            return Err(Error::DegenerateRow { row: x });
        }
        rows.push(out);
    }
    Ok(CondPmf::from_rows_unchecked(rows))
}

/// The Bhattacharyya mapping `q(x~|x) exp(-lambda d_w(x, x~))`, row normalized.
pub fn map_bhatt(q: &CondPmf, w: &CondPmf, lambda: f64) -> Result<CondPmf> {
    let k = w.in_size();
    if q.in_size() != k || q.out_size() != k {
        return Err(Error::InvalidArgument("q must be square over the source alphabet".into()));
    }
    if lambda.is_nan() {
        return Err(Error::InvalidArgument("lambda is NaN".into()));
    }
    let d = bhattacharyya_matrix(w);
    let mut scratch = vec![0.0; k];
    let mut rows = Vec::with_capacity(k);
    for x in 0..k {
        let mut out = vec![0.0; k];
        if !bhatt_row(q.row(x), &d.rows()[x], lambda, &mut scratch, &mut out) {
            return Err(Error::DegenerateRow { row: x });
        }
        rows.push(out);
    }
    Ok(CondPmf::from_rows_unchecked(rows))
}

pub(crate) fn lump_in_place(j: &mut [Vec<f64>], target: &[f64]) -> Result<()> {
    let k = target.len();
    for col in 0..k {
        let s: f64 = j.iter().map(|r| r[col]).sum();
        if target[col] > 0.0 {
            if !(s > 0.0) {
                return Err(Error::DegenerateColumn { col });
            }
            let f = target[col] / s;
            j.iter_mut().for_each(|r| r[col] *= f);
        } else {
            j.iter_mut().for_each(|r| r[col] = 0.0);
        }
    }
    Ok(())
}

/// Lumping: rescales every column of `qxx` so the column marginal equals `target`.
pub fn map_lumping(qxx: &JointPmf, target: &Pmf) -> Result<JointPmf> {
    if qxx.shape().1 != target.len() {
        return Err(Error::InvalidArgument("target does not match the column alphabet".into()));
    }
    let mut rows = qxx.rows().to_vec();
    lump_in_place(&mut rows, target.as_slice())?;
    Ok(JointPmf::from_rows_unchecked(rows))
}

pub(crate) fn h_weights_into(px: &[f64], h1: &[f64], h2: &[f64], lambda: f64, t: f64, out: &mut [f64]) -> bool {
    let s = 1.0 + lambda + t;
    let a = (1.0 + lambda) / s;
    let mut logw = vec![0.0; px.len()];
    for x in 0..px.len() {
        logw[x] = if px[x] > 0.0 {
            a * px[x].ln() - h1[x] / s - t * h2[x] / s
        } else {
            f64::NEG_INFINITY
        };
    }
    softmax_into(&logw, out)
}

/// The prior update `P^((1+l)/(1+l+t)) exp(-(h1 + t h2)/(1+l+t))`, normalized.
pub fn map_h(px: &Pmf, h1: &[f64], h2: &[f64], lambda: f64, t: f64) -> Result<Pmf> {
    if h1.len() != px.len() || h2.len() != px.len() {
        return Err(Error::InvalidArgument("h1 and h2 must match px".into()));
    }
    if !(lambda >= 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidArgument("lambda and t must be nonnegative".into()));
    }
    for x in 0..px.len() {
        if px[x] > 0.0 && !(h1[x].is_finite() && h2[x].is_finite()) {
            return Err(Error::InvalidArgument(format!("h1/h2 not finite at letter {x}")));
        }
    }
    let mut out = vec![0.0; px.len()];
    if !h_weights_into(px.as_slice(), h1, h2, lambda, t, &mut out) {
        return Err(Error::InvalidArgument("prior update has no mass".into()));
    }
    Pmf::new(out)
}
