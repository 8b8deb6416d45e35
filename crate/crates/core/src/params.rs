//! Scalar parameters of the degenerate wave problem.
//!
//! Two conventions coexist. The multidimensional one is driven by the metric
//! exponent `beta` and the boundary dimension `n`; the one-dimensional one is
//! driven by the exponent `alpha` of the model operator `-x^alpha d^2/dx^2`.
//! They share the frequency slope `kappa` and the threshold `t_star` under
//! `alpha = 2 beta / (beta + 2)`, but their Bessel indices differ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which set of formulas generated a [`GasGiantParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `nu = 1/2 + beta n / 4`, `kappa = 2 / (beta + 2)`.
    Multidimensional,
    /// `nu = 1 / (2 - alpha)`, `kappa = 1 - alpha / 2`.
    OneDimensional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct GasGiantParams {
    pub convention: Convention,
    pub beta: f64,
    pub n: u32,
    pub alpha: f64,
    pub nu: f64,
    pub kappa: f64,
    pub c_beta: f64,
    pub t_star: f64,
    pub trace_factor: f64,
}

impl GasGiantParams {
    /// Multidimensional constants from the metric exponent and boundary dimension.
    pub fn derive_constants(beta: f64, n: u32) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and > 0, got {beta}"
            )));
        }
        let nf = f64::from(n);
        let nu = 0.5 + beta * nf / 4.0;
        let kappa = 2.0 / (beta + 2.0);
        let t_star = beta + 2.0;
        debug_assert!((t_star - 2.0 / kappa).abs() <= 4.0 * f64::EPSILON * t_star);
        Ok(Self {
            convention: Convention::Multidimensional,
            beta,
            n,
            alpha: 2.0 * beta / (beta + 2.0),
            nu,
            kappa,
            c_beta: nu * nu - 0.25,
            t_star,
            trace_factor: (1.0 + beta * nf / 2.0) / (nu + 0.5),
        })
    }

    /// Same as [`derive_constants`](Self::derive_constants) but accepts a
    /// real-valued dimension and rejects anything that is not a non-negative
    /// integer.
    pub fn derive_constants_real(beta: f64, n: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 0.0 && n.fract() == 0.0 && n <= f64::from(u32::MAX)) {
            return Err(Error::InvalidParameter(format!(
                "n must be a non-negative integer, got {n}"
            )));
        }
        Self::derive_constants(beta, n as u32)
    }

    /// One-dimensional constants for `-x^alpha d^2/dx^2` on `(0, 1)`.
    ///
    /// `alpha = 0` is accepted: it is the Dirichlet Laplacian limit.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && (0.0..2.0).contains(&alpha)) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 2), got {alpha}"
            )));
        }
        let nu = 1.0 / (2.0 - alpha);
        let kappa = 1.0 - alpha / 2.0;
        Ok(Self {
            convention: Convention::OneDimensional,
            beta: 2.0 * alpha / (2.0 - alpha),
            n: 0,
            alpha,
            nu,
            kappa,
            c_beta: nu * nu - 0.25,
            t_star: 2.0 / kappa,
            // the 1D observation is the plain Neumann trace
            trace_factor: 1.0,
        })
    }

    /// The one-dimensional model sharing this parameter set's `kappa`.
    pub fn one_dimensional_model(&self) -> Result<Self> {
        match self.convention {
            Convention::OneDimensional => Ok(*self),
            Convention::Multidimensional => Self::from_alpha(self.alpha),
        }
    }

    pub fn require(&self, convention: Convention) -> Result<()> {
        if self.convention == convention {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "expected {convention:?} parameters, got {:?}",
                self.convention
            )))
        }
    }

    /// Weyl gap of the frequency sequence of the 1D model, `kappa * pi`.
    pub fn weyl_gap(&self) -> f64 {
        self.kappa * std::f64::consts::PI
    }
}

/// Converts a conjugated-gauge trace to the physical flux.
pub fn trace_constant_conversion(params: &GasGiantParams, conjugated_trace: f64) -> f64 {
    params.trace_factor * conjugated_trace
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    convention: Convention,
    beta: f64,
    n: u32,
    alpha: f64,
    nu: f64,
    kappa: f64,
    c_beta: f64,
    t_star: f64,
    trace_factor: f64,
}

impl TryFrom<RawParams> for GasGiantParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let derived = match raw.convention {
            Convention::Multidimensional => Self::derive_constants(raw.beta, raw.n)?,
            Convention::OneDimensional => Self::from_alpha(raw.alpha)?,
        };
        let stored = [
            raw.beta,
            raw.alpha,
            raw.nu,
            raw.kappa,
            raw.c_beta,
            raw.t_star,
            raw.trace_factor,
        ];
        let expect = [
            derived.beta,
            derived.alpha,
            derived.nu,
            derived.kappa,
            derived.c_beta,
            derived.t_star,
            derived.trace_factor,
        ];
        let consistent = stored
            .iter()
            .zip(expect.iter())
            .all(|(s, e)| (s - e).abs() <= 1e-12 * e.abs().max(1.0));
        if !consistent || raw.n != derived.n {
            return Err(Error::InvalidParameter(
                "stored derived constants disagree with beta/n/alpha".into(),
            ));
        }
        Ok(derived)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn polytropic_case() {
        for n in 0..5 {
            let p = GasGiantParams::derive_constants(2.0, n).unwrap();
            assert_eq!(p.kappa, 0.5);
            assert_eq!(p.t_star, 4.0);
            assert_eq!(p.nu, 0.5 + f64::from(n) / 2.0);
        }
    }

    #[test]
    fn n_zero_has_unit_trace_factor() {
        let p = GasGiantParams::derive_constants(2.0, 0).unwrap();
        assert_eq!(p.trace_factor, 1.0);
    }

    #[test]
    fn beta2_n2_values() {
        let p = GasGiantParams::derive_constants(2.0, 2).unwrap();
        assert_eq!(p.nu, 1.5);
        // nu^2 - 1/4 = 9/4 - 1/4
        assert_eq!(p.c_beta, 2.0);
        assert_eq!(p.alpha, 1.0);
        assert_eq!(p.trace_factor, 1.5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GasGiantParams::derive_constants(0.0, 1).is_err());
        assert!(GasGiantParams::derive_constants(-1.0, 1).is_err());
        assert!(GasGiantParams::derive_constants(f64::NAN, 1).is_err());
        assert!(GasGiantParams::derive_constants_real(1.0, 1.5).is_err());
        assert!(GasGiantParams::derive_constants_real(1.0, -1.0).is_err());
        assert!(GasGiantParams::derive_constants_real(1.0, 2.0).is_ok());
        assert!(GasGiantParams::from_alpha(2.0).is_err());
        assert!(GasGiantParams::from_alpha(-0.1).is_err());
    }

    #[test]
    fn one_dimensional_formulas() {
        let p = GasGiantParams::from_alpha(1.0).unwrap();
        assert_eq!(p.nu, 1.0);
        assert_eq!(p.kappa, 0.5);
        assert_eq!(p.t_star, 4.0);
        let p0 = GasGiantParams::from_alpha(0.0).unwrap();
        assert_eq!((p0.nu, p0.kappa), (0.5, 1.0));
    }

    #[test]
    fn convention_is_checked() {
        let p = GasGiantParams::derive_constants(1.0, 1).unwrap();
        assert!(p.require(Convention::OneDimensional).is_err());
        assert!(p.require(Convention::Multidimensional).is_ok());
    }

    #[test]
    fn json_round_trip_and_tamper_detection() {
        let p = GasGiantParams::derive_constants(1.3, 2).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: GasGiantParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let mut v: serde_json::Value = serde_json::from_str(&s).unwrap();
        v["nu"] = serde_json::json!(9.0);
        assert!(serde_json::from_value::<GasGiantParams>(v).is_err());
    }

    proptest! {
        #[test]
        fn sweep_invariants(beta in 0.1f64..10.0, n in 0u32..6) {
            let p = GasGiantParams::derive_constants(beta, n).unwrap();
            prop_assert!(p.c_beta >= 0.0);
            prop_assert!(p.kappa > 0.0 && p.kappa < 1.0);
            prop_assert!((p.t_star * p.kappa - 2.0).abs() <= 1e-14);
            prop_assert!((p.trace_factor - 2.0 * p.nu / (p.nu + 0.5)).abs() <= 1e-14);
            prop_assert!(p.trace_factor > 0.0);
        }

        #[test]
        fn beta_alpha_round_trip(beta in 0.1f64..10.0) {
            let p = GasGiantParams::derive_constants(beta, 0).unwrap();
            let q = p.one_dimensional_model().unwrap();
            prop_assert!((q.kappa - p.kappa).abs() <= 1e-15);
            prop_assert!((q.t_star - p.t_star).abs() <= 1e-12 * p.t_star);
            prop_assert!((q.beta - beta).abs() <= 1e-12 * beta);
            prop_assert_eq!(q.nu, 1.0 / (2.0 - q.alpha));
        }
    }
}
