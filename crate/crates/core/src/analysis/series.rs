//! Error time series between trajectories.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::schemes::Trajectory;
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    H,
    V,
    DA,
}

impl Norm {
    pub fn of(&self, f: &SpectralField) -> f64 {
        match self {
            Norm::H => f.norm_h(),
            Norm::V => f.norm_v(),
            Norm::DA => f.norm_da(),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::H => "H",
            Norm::V => "V",
            Norm::DA => "DA",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(Norm::H),
            "V" | "v" => Ok(Norm::V),
            "DA" | "da" => Ok(Norm::DA),
            other => Err(Error::Config(format!("unknown norm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// True when some times of the first trajectory had to be linearly
    /// interpolated in the second.
    pub interpolated: bool,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sup` of the values at times `>= t_from`.
    pub fn sup_after(&self, t_from: f64) -> Option<f64> {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= t_from - 1e-12)
            .map(|(_, v)| *v)
            .reduce(f64::max)
    }
}

/// `norm(a(t) - b(t))` at the times of `a` that lie inside `b`'s time range.
pub fn error_series(a: &Trajectory, b: &Trajectory, norm: Norm) -> Result<DiagnosticsSeries> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Trajectory("empty trajectory".into()));
    }
    let (lo, hi) = (b.times[0], *b.times.last().expect("nonempty"));
    let mut out = DiagnosticsSeries::default();
    for (t, u) in a.times.iter().zip(&a.states) {
        let tol = 1e-9 * t.abs().max(1.0);
        if *t < lo - tol || *t > hi + tol {
            continue;
        }
        let diff = match b.index_at(*t, tol) {
            Some(j) => u - &b.states[j],
            None => {
                out.interpolated = true;
                let j = b.times.partition_point(|&s| s < *t);
                let (t0, t1) = (b.times[j - 1], b.times[j]);
                let w = (t - t0) / (t1 - t0);
                let mut v = b.states[j - 1].scaled(1.0 - w);
                v.axpy(w, &b.states[j]);
                u - &v
            }
        };
        out.times.push(*t);
        out.values.push(norm.of(&diff));
    }
    if out.is_empty() {
        return Err(Error::Trajectory("trajectories do not overlap in time".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{kolmogorov_forcing, taylor_green};
    use crate::spectral::TorusGrid;

    fn traj(g: &TorusGrid, times: &[f64], shift: Option<&SpectralField>) -> Trajectory {
        let mut t = Trajectory::new();
        for (k, &s) in times.iter().enumerate() {
            let mut u = taylor_green(g, 1, s, 0.1).unwrap();
            if let Some(w) = shift {
                u.axpy(1.0, w);
            }
            t.push(k, s, u);
        }
        t
    }

    #[test]
    fn identical_and_shifted() {
        let g = TorusGrid::new(1.0, 8).unwrap();
        let times = [0.0, 0.1, 0.2];
        let a = traj(&g, &times, None);
        let s = error_series(&a, &a, Norm::V).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
        let w = kolmogorov_forcing(&g, 1, 0.3).unwrap();
        let b = traj(&g, &times, Some(&w));
        let s = error_series(&a, &b, Norm::H).unwrap();
        for v in &s.values {
            assert!((v - w.norm_h()).abs() < 1e-14);
        }
        assert!(!s.interpolated);
        assert_eq!(s.sup_after(0.05), Some(s.values[1].max(s.values[2])));
    }

    #[test]
    fn interpolation_is_flagged_and_disjoint_ranges_rejected() {
        let g = TorusGrid::new(1.0, 8).unwrap();
        let a = traj(&g, &[0.05, 0.1], None);
        let b = traj(&g, &[0.0, 0.1], None);
        assert!(error_series(&a, &b, Norm::H).unwrap().interpolated);
        let c = traj(&g, &[1.0, 2.0], None);
        assert!(error_series(&a, &c, Norm::H).is_err());
    }
}
