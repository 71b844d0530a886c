use super::SolverConfig;
use crate::error::{Error, Result};

/// Search interval for [`bisect_monotone`]. Each endpoint may move outward
/// (away from the initial midpoint) until it reaches its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub lo_limit: f64,
    pub hi_limit: f64,
}

impl Bracket {
    pub fn fixed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_limit: lo,
            hi_limit: hi,
        }
    }

    pub fn expandable(lo: f64, hi: f64, lo_limit: f64, hi_limit: f64) -> Self {
        Self {
            lo,
            hi,
            lo_limit,
            hi_limit,
        }
    }
}

/// Finds `x` with `f(x) = target` for a monotone `f` (either direction).
///
/// The bracket is grown geometrically by `cfg.bracket_growth` about its
/// initial center until the target is straddled.
pub fn bisect_monotone<F>(mut f: F, target: f64, bracket: Bracket, cfg: &SolverConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let center = 0.5 * (bracket.lo + bracket.hi);
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    loop {
        if f_lo == target {
            return Ok(lo);
        }
        if f_hi == target {
            return Ok(hi);
        }
        if (f_lo - target) * (f_hi - target) < 0.0 {
            break;
        }
        let increasing = f_hi > f_lo;
        let decreasing = f_hi < f_lo;
        // Which side has to move to reach the target?
        let below = f_lo < target && f_hi < target;
        let grow_hi = (increasing && below) || (decreasing && !below) || (!increasing && !decreasing);
        let grow_lo = (increasing && !below) || (decreasing && below) || (!increasing && !decreasing);
        let mut moved = false;
        if grow_hi && hi < bracket.hi_limit {
            hi = (center + (hi - center) * cfg.bracket_growth).min(bracket.hi_limit);
            f_hi = f(hi);
            moved = true;
        }
        if grow_lo && lo > bracket.lo_limit {
            lo = (center + (lo - center) * cfg.bracket_growth).max(bracket.lo_limit);
            f_lo = f(lo);
            moved = true;
        }
        if !moved {
            return Err(Error::BracketFailure {
                lo,
                hi,
                f_lo,
                f_hi,
                target,
            });
        }
    }
    let lo_below = f_lo < target;
    for _ in 0..cfg.max_bisect_iters {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= cfg.bisect_tol * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == target {
            return Ok(mid);
        }
        if (fm < target) == lo_below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Best point found by [`maximize_concave`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcaveMax {
    pub t: f64,
    pub value: f64,
    /// Set when the search stopped early because `value >= stop_at`.
    pub reached: bool,
    /// Set when the function was still increasing at the largest `t` tried.
    pub unbounded: bool,
}

/// Golden-section maximization of a concave function on `[lo, hi]`.
///
/// Stops as soon as a value reaches `stop_at`, or as soon as concavity
/// certifies that no value can reach it. When the maximum sits at `hi` with
/// positive slope and `extend_to > hi`, the interval is doubled until the
/// slope turns or `extend_to` is passed.
pub fn maximize_concave<F>(mut f: F, lo: f64, hi: f64, extend_to: f64, tol: f64, stop_at: f64) -> Result<ConcaveMax>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut best = ConcaveMax {
        t: lo,
        value: f64::NEG_INFINITY,
        reached: false,
        unbounded: false,
    };
    let note = |t: f64, v: f64, best: &mut ConcaveMax| {
        if v > best.value {
            best.t = t;
            best.value = v;
        }
        if v >= stop_at {
            best.reached = true;
        }
    };
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    note(a, fa, &mut best);
    if best.reached {
        return Ok(best);
    }
    let mut fb = f(b)?;
    note(b, fb, &mut best);
    if best.reached {
        return Ok(best);
    }
    // Grow the interval while the function keeps increasing at its right end.
    loop {
        let h = (b - a) * 1e-3;
        let fh = f(b - h)?;
        if fh >= fb || b >= extend_to {
            if fh < fb && b >= extend_to {
                best.unbounded = true;
            }
            break;
        }
        let nb = (2.0 * b).max(b + 1.0).min(extend_to);
        let fnb = f(nb)?;
        note(nb, fnb, &mut best);
        if best.reached {
            return Ok(best);
        }
        a = b;
        fa = fb;
        b = nb;
        fb = fnb;
        if fnb <= fa {
            break;
        }
    }
    if best.unbounded {
        return Ok(best);
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    note(c, fc, &mut best);
    let mut fd = f(d)?;
    note(d, fd, &mut best);
    while !best.reached && (b - a) > tol * (1.0 + a.abs().max(b.abs())) {
        // Concavity bound on the remaining bracket.
        let (m, fm) = if fc >= fd { (c, fc) } else { (d, fd) };
        let left = if m > a { (fm - fa) / (m - a) } else { 0.0 };
        let right = if b > m { (fb - fm) / (b - m) } else { 0.0 };
        let bound = fm + (left.max(0.0) * (b - m)).max((-right).max(0.0) * (m - a));
        if stop_at.is_finite() && bound.is_finite() && bound + 1e-12 < stop_at {
            break;
        }
        if fc >= fd {
            b = d;
            fb = fd;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            note(c, fc, &mut best);
        } else {
            a = c;
            fa = fc;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            note(d, fd, &mut best);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bisects_linear_and_exponential() {
        let cfg = SolverConfig::default();
        let x = bisect_monotone(|x| x, 0.5, Bracket::fixed(0.0, 1.0), &cfg).unwrap();
        assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
        let x = bisect_monotone(|x| (-x).exp(), 0.5, Bracket::fixed(0.0, 10.0), &cfg).unwrap();
        assert_abs_diff_eq!(x, 2f64.ln(), epsilon = 1e-11);
    }

    #[test]
    fn expands_brackets_both_ways() {
        let cfg = SolverConfig::default();
        let b = Bracket::expandable(-1.0, 1.0, -1e6, 1e6);
        let x = bisect_monotone(|x| x, 300.0, b, &cfg).unwrap();
        assert_abs_diff_eq!(x, 300.0, epsilon = 1e-9);
        let x = bisect_monotone(|x| -x, 300.0, b, &cfg).unwrap();
        assert_abs_diff_eq!(x, -300.0, epsilon = 1e-9);
        let err = bisect_monotone(|x| x, 5.0, Bracket::fixed(0.0, 1.0), &cfg).unwrap_err();
        assert!(matches!(err, Error::BracketFailure { .. }));
    }

    #[test]
    fn golden_section_finds_interior_and_boundary_maxima() {
        let m = maximize_concave(|t| Ok(-(t - 0.3) * (t - 0.3)), 0.0, 1.0, 1.0, 1e-8, f64::INFINITY).unwrap();
        assert_abs_diff_eq!(m.t, 0.3, epsilon = 1e-6);
        let m = maximize_concave(|t| Ok(t), 0.0, 1.0, 1.0, 1e-8, f64::INFINITY).unwrap();
        assert_eq!(m.value, 1.0);
        let m = maximize_concave(|t| Ok(-(t - 10.0).powi(2)), 0.0, 2.0, 64.0, 1e-9, f64::INFINITY).unwrap();
        assert_abs_diff_eq!(m.t, 10.0, epsilon = 1e-5);
        let m = maximize_concave(|t| Ok(t), 1.0, 2.0, 64.0, 1e-9, f64::INFINITY).unwrap();
        assert!(m.unbounded);
        let m = maximize_concave(|t| Ok(-(t - 0.3) * (t - 0.3)), 0.0, 1.0, 1.0, 1e-8, 0.5).unwrap();
        assert!(!m.reached);
        let m = maximize_concave(|t| Ok(t), 1.0, 2.0, 64.0, 1e-9, 10.0).unwrap();
        assert!(m.reached);
    }
}
