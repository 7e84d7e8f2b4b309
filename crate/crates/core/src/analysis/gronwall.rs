//! Discrete Gronwall envelopes for `(1 + gamma) a_{k+1} <= a_k + b_k`.

use crate::error::{Error, Result};

fn check_gamma(gamma: f64) -> Result<()> {
    if !(1.0 + gamma > 0.0) {
        return Err(Error::Domain(format!("need 1 + gamma > 0, got gamma = {gamma}")));
    }
    Ok(())
}

/// Envelope `a_0 / (1+gamma)^m + sum_{k<m} b_k / (1+gamma)^{m-k}` for
/// `m = 0..=steps`, evaluated by the equivalent recurrence with equality.
pub fn gronwall_envelope(a0: f64, gamma: f64, b: &[f64], steps: usize) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if b.len() < steps {
        return Err(Error::Domain(format!("need {steps} forcing terms, got {}", b.len())));
    }
    let q = 1.0 / (1.0 + gamma);
    let mut out = Vec::with_capacity(steps + 1);
    let mut e = a0;
    out.push(e);
    for bk in &b[..steps] {
        e = (e + bk) * q;
        out.push(e);
    }
    Ok(out)
}

/// Same envelope for a constant forcing term.
pub fn gronwall_envelope_constant(a0: f64, gamma: f64, b: f64, steps: usize) -> Result<Vec<f64>> {
    gronwall_envelope(a0, gamma, &vec![b; steps], steps)
}

/// Closed-form bound `a_0 / (1+gamma)^m + max(sup b, 0) / gamma`, valid for
/// `gamma > 0`.
pub fn gronwall_closed_form(a0: f64, gamma: f64, sup_b: f64, m: usize) -> Result<f64> {
    check_gamma(gamma)?;
    if gamma <= 0.0 {
        return Err(Error::Domain(format!("closed form needs gamma > 0, got {gamma}")));
    }
    Ok(a0 / (1.0 + gamma).powi(m as i32) + sup_b.max(0.0) / gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_geometric_decay() {
        let e = gronwall_envelope_constant(1.0, 1.0, 0.0, 3).unwrap();
        assert_eq!(e, vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn constant_forcing_saturates() {
        let gamma = 0.1;
        let e = gronwall_envelope_constant(0.0, gamma, gamma, 400).unwrap();
        assert!((e[400] - 1.0).abs() < 1e-12);
        assert!(e.windows(2).all(|w| w[1] >= w[0]));
        assert!((gronwall_closed_form(0.0, gamma, gamma, 5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_gamma_is_rejected() {
        assert!(matches!(gronwall_envelope(1.0, -1.0, &[], 0), Err(Error::Domain(_))));
        assert!(gronwall_closed_form(1.0, -0.5, 1.0, 3).is_err());
        assert!(gronwall_envelope(1.0, 0.5, &[1.0], 2).is_err());
    }

    #[test]
    fn negative_gamma_envelope_grows() {
        let e = gronwall_envelope_constant(1.0, -0.5, 0.0, 2).unwrap();
        assert_eq!(e, vec![1.0, 2.0, 4.0]);
    }
}
