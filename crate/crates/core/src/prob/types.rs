use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::Pmf;
use crate::error::{Error, Result};

/// Largest number of types `enumerate_types` will produce.
pub const MAX_TYPES: u128 = 10_000_000;

/// Empirical composition of a length-`n` block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TypeDescriptor {
    counts: Vec<u32>,
}

impl TypeDescriptor {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidArgument("a type needs at least two letters".into()));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidArgument("a type needs positive blocklength".into()));
        }
        Ok(Self { counts })
    }

    /// Type of a block over `{0, .., k-1}`.
    pub fn of_block(block: &[usize], k: usize) -> Result<Self> {
        let mut counts = vec![0u32; k];
        for &x in block {
            *counts
                .get_mut(x)
                .ok_or_else(|| Error::InvalidArgument(format!("letter {x} outside alphabet of size {k}")))? += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn to_pmf(&self) -> Pmf {
        let n = self.n() as f64;
        Pmf(self.counts.iter().map(|&c| c as f64 / n).collect())
    }
}

/// `C(n + k - 1, k - 1)`, saturating at `u128::MAX`.
pub fn type_count(n: u32, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..k as u128 {
        acc = match acc.checked_mul(n as u128 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

/// All compositions of `n` into `k` parts, first coordinate descending.
pub fn enumerate_types(n: u32, k: usize) -> Result<Vec<TypeDescriptor>> {
    if k < 2 || n == 0 {
        return Err(Error::InvalidArgument(format!("need n >= 1 and k >= 2, got n = {n}, k = {k}")));
    }
    let count = type_count(n, k);
    if count > MAX_TYPES {
        return Err(Error::TooLarge {
            what: format!("types of length {n} over {k} letters"),
            count,
            limit: MAX_TYPES,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut counts = vec![0u32; k];
    fill(&mut counts, 0, n, &mut out);
    Ok(out)
}

fn fill(counts: &mut [u32], pos: usize, left: u32, out: &mut Vec<TypeDescriptor>) {
    if pos + 1 == counts.len() {
        counts[pos] = left;
        out.push(TypeDescriptor { counts: counts.to_vec() });
        return;
    }
    for c in (0..=left).rev() {
        counts[pos] = c;
        fill(counts, pos + 1, left - c, out);
    }
}

fn ln_factorial(m: u32) -> f64 {
    if m < 2 {
        0.0
    } else {
        ln_gamma(m as f64 + 1.0)
    }
}

/// `ln |T_n(t)|`, the log multinomial coefficient.
pub fn log_type_class_size(t: &TypeDescriptor) -> f64 {
    let v = ln_factorial(t.n()) - t.counts.iter().map(|&c| ln_factorial(c)).sum::<f64>();
    v.max(0.0)
}

/// `ln P(X^n in T_n(t))` for `X` i.i.d. `p`.
pub fn log_type_probability(p: &Pmf, t: &TypeDescriptor) -> Result<f64> {
    if p.len() != t.counts.len() {
        return Err(Error::InvalidArgument(format!(
            "type over {} letters, pmf over {}",
            t.counts.len(),
            p.len()
        )));
    }
    let mut acc = log_type_class_size(t);
    for (x, &c) in t.counts.iter().enumerate() {
        if c > 0 {
            if p[x] <= 0.0 {
                return Err(Error::SupportMismatch(format!("type uses letter {x} which has probability 0")));
            }
            acc += c as f64 * p[x].ln();
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ty(c: &[u32]) -> TypeDescriptor {
        TypeDescriptor::new(c.to_vec()).unwrap()
    }

    #[test]
    fn enumerates_small_cases() {
        let t = enumerate_types(2, 2).unwrap();
        assert_eq!(t, vec![ty(&[2, 0]), ty(&[1, 1]), ty(&[0, 2])]);
        assert_eq!(enumerate_types(4, 2).unwrap().len(), 5);
        assert_eq!(enumerate_types(3, 3).unwrap().len(), 10);
        assert_eq!(type_count(3, 3), 10);
    }

    #[test]
    fn guards_huge_enumerations() {
        assert!(matches!(enumerate_types(1000, 5), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn class_sizes() {
        assert_eq!(log_type_class_size(&ty(&[5, 0, 0])), 0.0);
        assert_abs_diff_eq!(log_type_class_size(&ty(&[1, 1])), 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(log_type_class_size(&ty(&[6, 6])), 924f64.ln(), epsilon = 1e-11);
    }

    #[test]
    fn type_probabilities() {
        let p = Pmf::new(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(log_type_probability(&p, &ty(&[1, 1])).unwrap(), 0.5f64.ln(), epsilon = 1e-12);
        let det = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(log_type_probability(&det, &ty(&[3, 0])).unwrap(), 0.0);
        assert!(matches!(log_type_probability(&det, &ty(&[2, 1])), Err(Error::SupportMismatch(_))));
        // C(12,3) 0.2^3 0.8^9
        let p = Pmf::new(vec![0.2, 0.8]).unwrap();
        let exact = (220.0 * 0.2f64.powi(3) * 0.8f64.powi(9)).ln();
        assert_abs_diff_eq!(log_type_probability(&p, &ty(&[3, 9])).unwrap(), exact, epsilon = 1e-11);
    }

    #[test]
    fn block_types() {
        let t = TypeDescriptor::of_block(&[0, 2, 2, 1, 2], 3).unwrap();
        assert_eq!(t.counts(), &[1, 1, 3]);
        assert_eq!(t.n(), 5);
        assert!(TypeDescriptor::of_block(&[3], 3).is_err());
    }
}
