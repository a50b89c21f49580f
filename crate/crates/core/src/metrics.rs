//! Revival and recurrence quantifiers: fidelity, return probability and the
//! truncated (partial) Pólya products built from them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{inner_product, WalkState};

/// Slack allowed above 1 (and below 0) before a series value is an error.
pub const SERIES_CLAMP_TOL: f64 = 1e-12;
/// A partial value at or above `1 − UNITY_TOL` counts as having reached one.
pub const UNITY_TOL: f64 = 1e-12;

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(a: &WalkState, b: &WalkState) -> Result<f64> {
    Ok(inner_product(a, b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Probability of finding the walker at `origin`, summed over coin states.
pub fn return_probability(state: &WalkState, origin: &[i64]) -> f64 {
    state
        .get(origin)
        .map_or(0.0, |s| s.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyaKind {
    /// Built from `|⟨Ψ₀|Ψ(t)⟩|²`: full-state revival.
    Fsr,
    /// Built from `p_0(t)`: walker recurrence to the origin.
    Recurrence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyaSeries {
    pub kind: PolyaKind,
    /// `(n, 1 − Π_{t=1}^n (1 − s_t))` for `n = 1..=len`.
    pub partials: Vec<(usize, f64)>,
    /// Smallest `n` whose partial value is at least `1 − UNITY_TOL`.
    pub first_unity: Option<usize>,
}

impl PolyaSeries {
    pub fn values(&self) -> Vec<f64> {
        self.partials.iter().map(|(_, v)| *v).collect()
    }

    /// Value after the last step, `0` for an empty series.
    pub fn last(&self) -> f64 {
        self.partials.last().map_or(0.0, |(_, v)| *v)
    }

    /// `n,partial` rows with a header, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,partial\n");
        for (n, v) in &self.partials {
            let _ = writeln!(out, "{n},{v:.16e}");
        }
        out
    }
}

/// Partial products `P^{(n)} = 1 − Π_{t=1}^n (1 − s_t)`, where `series[t-1]`
/// is `s_t`.
///
/// Each factor is in `[0, 1]`, so the running product never increases and the
/// partial values are non-decreasing exactly, not just up to rounding.
pub fn partial_polya(series: &[f64], kind: PolyaKind) -> Result<PolyaSeries> {
    let mut product = 1.0;
    let mut partials = Vec::with_capacity(series.len());
    let mut first_unity = None;
    for (i, &s) in series.iter().enumerate() {
        if !(-SERIES_CLAMP_TOL..=1.0 + SERIES_CLAMP_TOL).contains(&s) {
            return Err(Error::SeriesOutOfRange { index: i, value: s });
        }
        product *= 1.0 - s.clamp(0.0, 1.0);
        let value = 1.0 - product;
        let n = i + 1;
        if first_unity.is_none() && value >= 1.0 - UNITY_TOL {
            first_unity = Some(n);
        }
        partials.push((n, value));
    }
    Ok(PolyaSeries {
        kind,
        partials,
        first_unity,
    })
}

/// Pólya number truncated after the available steps. No extrapolation is
/// attempted; `truncation` records how many steps went in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyaEstimate {
    pub kind: PolyaKind,
    pub value: f64,
    pub truncation: usize,
}

pub fn polya_estimate(series: &[f64], kind: PolyaKind) -> Result<PolyaEstimate> {
    let partial = partial_polya(series, kind)?;
    Ok(PolyaEstimate {
        kind,
        value: partial.last(),
        truncation: series.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeGeometry;
    use crate::linalg::Complex;

    fn basis(x: i64, z: usize) -> WalkState {
        let mut s = vec![Complex::new(0.0, 0.0); 2];
        s[z] = Complex::new(1.0, 0.0);
        WalkState::localized(LatticeGeometry::line(), &[x], &s).unwrap()
    }

    #[test]
    fn fidelity_basics() {
        let a = basis(0, 0);
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &basis(1, 0)).unwrap(), 0.0);
        assert_eq!(fidelity(&a, &basis(0, 1)).unwrap(), 0.0);
    }

    #[test]
    fn return_probability_basics() {
        assert_eq!(return_probability(&basis(0, 1), &[0]), 1.0);
        assert_eq!(return_probability(&basis(2, 1), &[0]), 0.0);
    }

    #[test]
    fn partial_products() {
        let p = partial_polya(&[0.0, 0.5], PolyaKind::Fsr).unwrap();
        assert_eq!(p.partials, vec![(1, 0.0), (2, 0.5)]);
        assert_eq!(p.first_unity, None);

        let p = partial_polya(&[0.1, 0.0, 1.0, 0.3], PolyaKind::Fsr).unwrap();
        assert_eq!(p.values()[2..], [1.0, 1.0]);
        assert_eq!(p.first_unity, Some(3));

        let p = partial_polya(&[0.0; 6], PolyaKind::Recurrence).unwrap();
        assert!(p.values().iter().all(|v| *v == 0.0));
        assert_eq!(p.first_unity, None);
    }

    #[test]
    fn clamp_and_range() {
        let p = partial_polya(&[1.0 + 5e-13, -5e-13], PolyaKind::Fsr).unwrap();
        assert_eq!(p.values(), vec![1.0, 1.0]);
        assert_eq!(
            partial_polya(&[0.2, 1.1], PolyaKind::Fsr),
            Err(Error::SeriesOutOfRange {
                index: 1,
                value: 1.1
            })
        );
        assert!(partial_polya(&[f64::NAN], PolyaKind::Fsr).is_err());
    }

    #[test]
    fn estimate_reports_truncation() {
        let e = polya_estimate(&[], PolyaKind::Fsr).unwrap();
        assert_eq!((e.value, e.truncation), (0.0, 0));
        let e = polya_estimate(&[0.5, 0.5], PolyaKind::Recurrence).unwrap();
        assert_eq!((e.value, e.truncation), (0.75, 2));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = partial_polya(&[0.0, 0.5], PolyaKind::Fsr).unwrap();
        let csv = p.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "n,partial");
        assert_eq!(lines[2], "2,5.0000000000000000e-1");
    }
}
