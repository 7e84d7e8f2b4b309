//! Explicit bound constants and admissibility conditions.

use crate::schemes::PhysicsParams;

/// Absolute constants that the estimates only prove to exist. All default
/// to 1 and are printed with every report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsoluteConstants {
    /// Constant in the lower bound on the nudging gain.
    pub c_beta: f64,
    /// Constant in `R_1`.
    pub c4: f64,
    /// Constant in the high-mode tail bounds `C_0`, `C_1`.
    pub c_tail: f64,
    /// Constant of the fractional-power estimate used by the postprocessing condition.
    pub c_alpha: f64,
    /// Exponent in `(1/2, 1)` of the postprocessing condition.
    pub alpha: f64,
}

impl Default for AbsoluteConstants {
    fn default() -> Self {
        Self {
            c_beta: 1.0,
            c4: 1.0,
            c_tail: 1.0,
            c_alpha: 1.0,
            alpha: 0.75,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// Grashof number `|f| / (nu^2 lambda_1)`.
    pub grashof: f64,
    pub m0: f64,
    pub m1: f64,
    /// `1 + ln(M_1 / (nu lambda_1^{1/2}))`.
    pub log_factor: f64,
    pub r1: f64,
    pub m2: f64,
    pub r2: f64,
    /// `[1 + ln(lambda_N / lambda_1)]^{1/2}`; infinite without a cutoff.
    pub l_n: f64,
    /// Constant of the `H` tail bound `|Q_N u| <= C_0 L_N / lambda_{N+1}`.
    pub tail_h: f64,
    /// Constant of the `V` tail bound `||Q_N u|| <= C_1 L_N / lambda_{N+1}^{1/2}`.
    pub tail_v: f64,
}

impl BoundConstants {
    /// Key-value pairs in report order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("grashof", self.grashof),
            ("m0", self.m0),
            ("m1", self.m1),
            ("log_factor", self.log_factor),
            ("r1", self.r1),
            ("m2", self.m2),
            ("r2", self.r2),
            ("l_n", self.l_n),
            ("tail_h", self.tail_h),
            ("tail_v", self.tail_v),
        ]
    }
}

/// Evaluates every bound constant from the physical parameters.
pub fn bound_constants(p: &PhysicsParams, abs: &AbsoluteConstants) -> BoundConstants {
    let nu = p.nu;
    let lambda1 = p.grid.lambda1();
    let f_norm = p.forcing.norm_h();
    let grashof = f_norm / (nu * nu * lambda1);
    let m0 = 2.0 * nu * grashof;
    let m1 = nu * lambda1.sqrt() * grashof;
    let log_factor = 1.0 + (m1 / (nu * lambda1.sqrt())).ln();
    let r1 = abs.c4 * m1.powi(3) * log_factor / nu;
    let bracket = m1 * log_factor.max(0.0).sqrt() / nu.sqrt() + p.beta.sqrt();
    let m2 = m1 / nu.sqrt() * bracket;
    let r2 = m1.powi(3) * log_factor / nu.powf(1.5) * bracket;
    let l_n = (1.0 + (p.cutoff.lambda_n() / lambda1).ln()).sqrt();
    let qf = p.forcing.project_high(&p.cutoff).norm_h();
    let tail_h = abs.c_tail * (qf + m1 * m1) / nu;
    let tail_v = abs.c_tail * ((qf + m1 * m1) / nu + m0 * m1 * m1 / (nu * nu));
    BoundConstants {
        grashof,
        m0,
        m1,
        log_factor,
        r1,
        m2,
        r2,
        l_n,
        tail_h,
        tail_v,
    }
}

/// Empirical interpolant constants feeding the resolution conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolantConstants {
    pub c0: f64,
    pub c_minus1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub relation: &'static str,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passes(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.pass)
    }

    /// The two conditions every stability and contraction estimate assumes.
    pub fn basic_conditions_hold(&self) -> bool {
        self.passes("gain_lower_bound") && self.passes("resolution")
    }
}

/// Evaluates the admissibility conditions; `tau` adds the step-size check.
pub fn check_conditions(
    p: &PhysicsParams,
    consts: &BoundConstants,
    interp: &InterpolantConstants,
    abs: &AbsoluteConstants,
    tau: Option<f64>,
) -> ConditionReport {
    let nu = p.nu;
    let beta = p.beta;
    let h2 = p.interpolant.h * p.interpolant.h;
    let gain_bound = abs.c_beta * consts.m1 * consts.m1 * consts.log_factor / nu;
    let alpha = abs.alpha;
    let area = p.grid.area();
    let pp_bound = (abs.c_beta * abs.c_alpha * (1.0 + 1.0 / (1.0 - alpha)) * area.powf(alpha - 0.5) * consts.m1
        / nu.powf(alpha))
    .powf(1.0 / (1.0 - alpha));
    let mut checks = vec![
        ConditionCheck {
            name: "gain_lower_bound",
            lhs: beta,
            relation: ">=",
            rhs: gain_bound,
            pass: beta >= gain_bound,
        },
        ConditionCheck {
            name: "resolution",
            lhs: interp.c0 * beta * h2,
            relation: "<=",
            rhs: nu,
            pass: interp.c0 * beta * h2 <= nu,
        },
        ConditionCheck {
            name: "gain_lower_bound_postprocessing",
            lhs: beta,
            relation: ">=",
            rhs: gain_bound.max(pp_bound),
            pass: beta >= gain_bound.max(pp_bound),
        },
        ConditionCheck {
            name: "resolution_postprocessing",
            lhs: interp.c0.max(4.0 * interp.c_minus1) * beta * h2,
            relation: "<",
            rhs: nu,
            pass: interp.c0.max(4.0 * interp.c_minus1) * beta * h2 < nu,
        },
    ];
    if let Some(tau) = tau {
        checks.push(ConditionCheck {
            name: "step_gain",
            lhs: tau * beta,
            relation: "<=",
            rhs: 1.0,
            pass: tau * beta <= 1.0,
        });
    }
    ConditionReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolants::InterpolantSpec;
    use crate::operators::kolmogorov_forcing;
    use crate::spectral::{GalerkinCutoff, TorusGrid};
    use std::f64::consts::PI;

    fn params(nu: f64, f_norm: f64, beta: f64, h: f64) -> PhysicsParams {
        let g = TorusGrid::new(2.0 * PI, 32).unwrap();
        let f = kolmogorov_forcing(&g, 2, 1.0).unwrap();
        let f = f.scaled(f_norm / f.norm_h());
        PhysicsParams::new(
            nu,
            f,
            beta,
            InterpolantSpec::new(crate::interpolants::InterpolantKind::FourierTruncation, h).unwrap(),
            GalerkinCutoff::new(&g, 50.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn textbook_values() {
        let p = params(1.0, 5.0, 1.0, 0.5);
        let c = bound_constants(&p, &AbsoluteConstants::default());
        assert!((c.grashof - 5.0).abs() < 1e-12);
        assert!((c.m0 - 10.0).abs() < 1e-12);
        assert!((c.m1 - 5.0).abs() < 1e-12);
        assert!((c.log_factor - (1.0 + 5f64.ln())).abs() < 1e-12);
        // |f| recovered from M_1
        assert!((p.nu * p.grid.lambda1().sqrt() * c.m1 - p.forcing.norm_h()).abs() < 1e-12);
        // lambda_N = 50 (1^2 + 7^2)
        assert!((c.l_n - (1.0 + 50f64.ln()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_gain_limit_of_m2() {
        let p = params(0.3, 2.0, 0.0, 0.5);
        let c = bound_constants(&p, &AbsoluteConstants::default());
        let expected = c.m1 * c.m1 * c.log_factor.sqrt() / p.nu;
        assert!((c.m2 - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn forcing_scaling() {
        let abs = AbsoluteConstants::default();
        let a = bound_constants(&params(0.2, 1.0, 1.0, 0.5), &abs);
        let b = bound_constants(&params(0.2, 3.0, 1.0, 0.5), &abs);
        assert!((b.grashof - 3.0 * a.grashof).abs() < 1e-12);
        assert!((b.m0 - 3.0 * a.m0).abs() < 1e-12);
        assert!((b.m1 - 3.0 * a.m1).abs() < 1e-12);
        assert!((b.log_factor - (a.log_factor + 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn constructed_admissible_point_passes() {
        let nu = 0.1;
        let base = params(nu, 0.05, 0.0, 1.0);
        let c = bound_constants(&base, &AbsoluteConstants::default());
        let beta = 2.0 * c.m1 * c.m1 * c.log_factor / nu;
        let h = (nu / (2.0 * beta)).sqrt();
        let p = params(nu, 0.05, beta, h);
        let interp = InterpolantConstants { c0: 1.0, c_minus1: 0.1 };
        let abs = AbsoluteConstants::default();
        let r = check_conditions(&p, &c, &interp, &abs, Some(0.5 / beta));
        assert!(r.basic_conditions_hold());
        assert!(r.passes("step_gain"));
        assert!(r.get("gain_lower_bound_postprocessing").is_some());
        let coarse = params(nu, 0.05, beta, 2.0 * h);
        assert!(!check_conditions(&coarse, &c, &interp, &abs, None).passes("resolution"));
    }
}
