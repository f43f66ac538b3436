//! Probability metrics between finite signed lattice measures.
//!
//! Total variation uses the functional convention `sup_{|h|≤1} |P(h) − Q(h)|`,
//! i.e. the ℓ¹ distance of the weight vectors (twice the probabilist's value).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SignedLatticeMeasure;

/// Mass difference above which the Wasserstein distance is reported infinite.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[serde(alias = "tv")]
    TotalVariation,
    #[serde(alias = "w")]
    Wasserstein,
    #[serde(alias = "pt")]
    Point,
    #[serde(alias = "k")]
    Kolmogorov,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::TotalVariation,
        MetricKind::Wasserstein,
        MetricKind::Point,
        MetricKind::Kolmogorov,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::TotalVariation => "total_variation",
            MetricKind::Wasserstein => "wasserstein",
            MetricKind::Point => "point",
            MetricKind::Kolmogorov => "kolmogorov",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total_variation" | "tv" => Ok(MetricKind::TotalVariation),
            "wasserstein" | "w" => Ok(MetricKind::Wasserstein),
            "point" | "pt" => Ok(MetricKind::Point),
            "kolmogorov" | "k" => Ok(MetricKind::Kolmogorov),
            other => Err(Error::Invalid(format!("unknown metric '{other}'"))),
        }
    }
}

/// `d(P, Q)` for the requested metric.
pub fn distance(p: &SignedLatticeMeasure, q: &SignedLatticeMeasure, kind: MetricKind) -> Result<f64> {
    let diff = p.sub(q);
    match kind {
        MetricKind::TotalVariation => Ok(diff.abs_mass()),
        MetricKind::Point => Ok(diff.max_abs_weight()),
        MetricKind::Wasserstein => {
            let (mp, mq) = (p.total_mass(), q.total_mass());
            if (mp - mq).abs() > MASS_TOL {
                return Err(Error::MassMismatch { left: mp, right: mq });
            }
            Ok(cdf_differences(&diff).map(f64::abs).sum())
        }
        MetricKind::Kolmogorov => Ok(cdf_differences(&diff).fold(0.0, |a, d| a.max(d.abs()))),
    }
}

// F_P(j) − F_Q(j) over the difference window extended one site each side.
fn cdf_differences(diff: &SignedLatticeMeasure) -> impl Iterator<Item = f64> + '_ {
    let lo = diff.offset() - 1;
    let hi = diff.last_index() + 1;
    let mut acc = 0.0;
    let mut comp = 0.0;
    (lo..=hi).map(move |j| {
        // compensated running sum
        let x = diff.get(j);
        let t = acc + x;
        if f64::abs(acc) >= x.abs() {
            comp += (acc - t) + x;
        } else {
            comp += (x - t) + acc;
        }
        acc = t;
        acc + comp
    })
}

/// Upper bound on `κ(π, Z₋)`, the correction charged for mass of `π` on the
/// negative integers, relative to a Poisson reference of mean `lambda`.
pub fn kappa_bound(pi: &SignedLatticeMeasure, kind: MetricKind, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
    }
    let negative = || pi.iter().filter(|(j, _)| *j < 0);
    match kind {
        MetricKind::TotalVariation => Ok(2.0 * pi.abs_mass_negative()),
        MetricKind::Wasserstein => Ok(negative()
            .map(|(j, w)| w.abs() * (j.unsigned_abs() as f64 + lambda))
            .sum()),
        MetricKind::Point => {
            let peak = negative().fold(0.0_f64, |a, (_, w)| a.max(w.abs()));
            Ok((2.0 * std::f64::consts::E * lambda).powf(-0.5) * pi.abs_mass_negative() + peak)
        }
        MetricKind::Kolmogorov => Err(Error::UnsupportedKind("kappa bound for kolmogorov".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: &SignedLatticeMeasure, q: &SignedLatticeMeasure, k: MetricKind) -> f64 {
        distance(p, q, k).unwrap()
    }

    #[test]
    fn two_point_values() {
        let (a, b) = (SignedLatticeMeasure::dirac(0), SignedLatticeMeasure::dirac(1));
        assert_eq!(d(&a, &b, MetricKind::TotalVariation), 2.0);
        assert_eq!(d(&a, &b, MetricKind::Wasserstein), 1.0);
        assert_eq!(d(&a, &b, MetricKind::Point), 1.0);
        assert_eq!(d(&a, &b, MetricKind::Kolmogorov), 1.0);
        assert_eq!(
            d(&a, &SignedLatticeMeasure::dirac(2), MetricKind::Wasserstein),
            2.0
        );
    }

    #[test]
    fn self_distance_vanishes() {
        let p = SignedLatticeMeasure::new(-1, vec![0.2, 0.3, 0.5]);
        for k in MetricKind::ALL {
            assert_eq!(d(&p, &p, k), 0.0);
        }
    }

    #[test]
    fn wasserstein_rejects_mass_mismatch() {
        let p = SignedLatticeMeasure::new(0, vec![0.5, 0.5]);
        let q = SignedLatticeMeasure::new(0, vec![0.5, 0.4]);
        assert!(matches!(
            distance(&p, &q, MetricKind::Wasserstein),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn kappa_examples() {
        let on_zplus = SignedLatticeMeasure::new(0, vec![0.5, 0.5]);
        for k in [MetricKind::TotalVariation, MetricKind::Wasserstein, MetricKind::Point] {
            assert_eq!(kappa_bound(&on_zplus, k, 3.0).unwrap(), 0.0);
        }
        let leak = SignedLatticeMeasure::new(-1, vec![0.1, 0.5, 0.4]);
        assert!((kappa_bound(&leak, MetricKind::TotalVariation, 1.0).unwrap() - 0.2).abs() < 1e-15);
        let leak2 = SignedLatticeMeasure::new(-2, vec![0.05, 0.0, 0.95]);
        assert!((kappa_bound(&leak2, MetricKind::Wasserstein, 4.0).unwrap() - 0.3).abs() < 1e-15);
        assert!(matches!(
            kappa_bound(&leak2, MetricKind::Kolmogorov, 4.0),
            Err(Error::UnsupportedKind(_))
        ));
    }

    #[test]
    fn metric_names_round_trip() {
        for k in MetricKind::ALL {
            assert_eq!(k.as_str().parse::<MetricKind>().unwrap(), k);
        }
    }
}
