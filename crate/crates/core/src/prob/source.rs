use serde::Deserialize;

use super::{check_probs, CondPmf, JointPmf, Pmf};
use crate::error::{Error, Result};

/// A memoryless source `P_XY = P_X x P_{Y|X}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Source {
    px: Pmf,
    pygx: CondPmf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    px: Vec<f64>,
    pygx: Vec<Vec<f64>>,
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidSource {
        path: path.into(),
        reason: reason.into(),
    }
}

impl Source {
    pub fn new(px: Pmf, pygx: CondPmf) -> Result<Self> {
        if pygx.in_size() != px.len() {
            return Err(invalid(
                "pygx",
                format!("has {} rows but px has {} letters", pygx.in_size(), px.len()),
            ));
        }
        if let Some(x) = (0..px.len()).find(|&x| px[x] <= 0.0) {
            return Err(invalid(format!("px[{x}]"), "every source letter needs positive probability"));
        }
        let k = px.len();
        let overlapping = (0..k).any(|a| {
            ((a + 1)..k).any(|b| pygx.row(a).iter().zip(pygx.row(b)).any(|(&u, &v)| u * v > 0.0))
        });
        if !overlapping {
            return Err(invalid("pygx", "channel is noiseless (no two rows share an output)"));
        }
        Ok(Self { px, pygx })
    }

    /// Parses `{"px": [...], "pygx": [[...], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSource = serde_json::from_str(text).map_err(|e| invalid("$", e.to_string()))?;
        check_probs(&raw.px).map_err(|e| invalid("px", e))?;
        let width = raw.pygx.first().map(Vec::len).unwrap_or(0);
        if raw.pygx.is_empty() {
            return Err(invalid("pygx", "no rows"));
        }
        for (x, row) in raw.pygx.iter().enumerate() {
            if row.len() != width {
                return Err(invalid(format!("pygx[{x}]"), format!("has {} entries, expected {width}", row.len())));
            }
            check_probs(row).map_err(|e| invalid(format!("pygx[{x}]"), e))?;
        }
        Self::new(Pmf(raw.px), CondPmf::from_rows_unchecked(raw.pygx))
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "px": self.px, "pygx": self.pygx.rows() }).to_string()
    }

    pub fn px(&self) -> &Pmf {
        &self.px
    }

    pub fn pygx(&self) -> &CondPmf {
        &self.pygx
    }

    pub fn x_size(&self) -> usize {
        self.px.len()
    }

    pub fn y_size(&self) -> usize {
        self.pygx.out_size()
    }

    pub fn joint(&self) -> JointPmf {
        self.pygx.joint(&self.px)
    }

    pub fn py(&self) -> Pmf {
        self.pygx.output_marginal(&self.px)
    }

    /// Checks that `qx` lives on the source alphabet.
    pub fn check_qx(&self, qx: &Pmf) -> Result<()> {
        if qx.len() != self.x_size() {
            return Err(Error::InvalidArgument(format!(
                "qx has {} letters, source has {}",
                qx.len(),
                self.x_size()
            )));
        }
        Ok(())
    }
}
