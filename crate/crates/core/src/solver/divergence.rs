use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Registered convex generators `f` with `f(1) = 0` for `D_f(p || q) = sum_x q f(p/q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FKind {
    /// `f(t) = t log2 t`; the Kullback-Leibler divergence in bits.
    #[default]
    Kl,
    /// `f(t) = |t - 1| / 2`.
    Tv,
    /// `f(t) = (sqrt t - 1)^2`; squared Hellinger distance (unnormalized).
    Hellinger,
    /// `f(t) = (t - 1)^2`; Pearson chi-squared.
    ChiSquared,
}

impl FKind {
    pub const ALL: [FKind; 4] = [FKind::Kl, FKind::Tv, FKind::Hellinger, FKind::ChiSquared];

    pub fn generator(self, t: f64) -> f64 {
        match self {
            FKind::Kl => {
                if t == 0.0 {
                    0.0
                } else {
                    t * t.log2()
                }
            }
            FKind::Tv => (t - 1.0).abs() / 2.0,
            FKind::Hellinger => (t.sqrt() - 1.0).powi(2),
            FKind::ChiSquared => (t - 1.0).powi(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FKind::Kl => "kl",
            FKind::Tv => "tv",
            FKind::Hellinger => "hellinger",
            FKind::ChiSquared => "chi-squared",
        }
    }
}

impl fmt::Display for FKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::input(format!("unregistered objective `{s}` (expected kl, tv, hellinger or chi-squared)")))
    }
}

/// `D_f(p || q)`; `q` must be strictly positive.
pub fn f_divergence(p: &[f64], q: &[f64], kind: FKind) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::input("divergence arguments have different lengths"));
    }
    if q.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::input("reference distribution must be strictly positive"));
    }
    Ok(divergence_unchecked(p, q, kind))
}

pub(crate) fn divergence_unchecked(p: &[f64], q: &[f64], kind: FKind) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| qi * kind.generator(pi / qi))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_vanish_at_one() {
        for k in FKind::ALL {
            assert_eq!(k.generator(1.0), 0.0);
        }
    }

    #[test]
    fn examples() {
        let q = [0.5, 0.5];
        for k in FKind::ALL {
            assert!(f_divergence(&q, &q, k).unwrap().abs() < 1e-15);
        }
        assert!((f_divergence(&[1.0, 0.0], &q, FKind::Kl).unwrap() - 1.0).abs() < 1e-15);
        assert!((f_divergence(&[1.0, 0.0], &q, FKind::Tv).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kl_matches_direct_sum() {
        let p: [f64; 3] = [0.2, 0.3, 0.5];
        let q: [f64; 3] = [0.4, 0.4, 0.2];
        let direct: f64 = p.iter().zip(&q).map(|(a, b)| a * (a / b).log2()).sum();
        assert!((f_divergence(&p, &q, FKind::Kl).unwrap() - direct).abs() < 1e-15);
        let tv: f64 = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!((f_divergence(&p, &q, FKind::Tv).unwrap() - tv).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_reference() {
        assert!(f_divergence(&[0.5, 0.5], &[1.0, 0.0], FKind::Kl).is_err());
        assert!(f_divergence(&[1.0], &[0.5, 0.5], FKind::Kl).is_err());
        assert!("js".parse::<FKind>().is_err());
        assert_eq!("TV".parse::<FKind>().unwrap(), FKind::Tv);
    }
}
