//! Model coefficients and the parameter hypotheses behind the stability result.

use crate::error::{Error, Result};

/// Coefficients of the alarm-taxis system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Prey diffusion rate.
    pub d1: f64,
    /// Primary predator diffusion rate.
    pub d2: f64,
    /// Prey-taxis coefficient.
    pub xi: f64,
    /// Alarm-taxis coefficient.
    pub chi: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    /// Intra-species competition exponent of the secondary predator.
    pub sigma: f64,
}

impl ModelParams {
    /// Predation coefficients `b1 = 0.5, b2 = 0.4, b3 = 0.1`, which satisfy every
    /// hypothesis check, with unit growth and diffusion rates, `σ = 2` and the
    /// given taxis coefficients.
    pub fn coexistence_example(xi: f64, chi: f64) -> Self {
        ModelParams {
            d1: 1.0,
            d2: 1.0,
            xi,
            chi,
            r1: 1.0,
            r2: 1.0,
            r3: 1.0,
            b1: 0.5,
            b2: 0.4,
            b3: 0.1,
            sigma: 2.0,
        }
    }

    /// Checks that every coefficient is finite and strictly positive and that
    /// `σ > 1`. With `allow_unverified` any `σ > 0` is accepted, which covers
    /// exploratory runs outside the regime where boundedness is known.
    pub fn validate(&self, allow_unverified: bool) -> Result<()> {
        let fields = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("xi", self.xi),
            ("chi", self.chi),
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("b1", self.b1),
            ("b2", self.b2),
            ("b3", self.b3),
            ("sigma", self.sigma),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        if !allow_unverified && self.sigma <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "sigma must exceed 1 for verified runs",
            });
        }
        Ok(())
    }

    pub fn has_unit_growth_rates(&self) -> bool {
        self.r1 == 1.0 && self.r2 == 1.0 && self.r3 == 1.0
    }
}

/// Signed slack of each hypothesis check. A check passes when its margin is
/// non-negative (`b1`, `sum`) or strictly positive (`b3`, `stability`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    /// `1 - b1`
    pub b1: f64,
    /// `b1 b2 - b3`
    pub b3: f64,
    /// `1/2 - (b2 + b3)`
    pub sum: f64,
    /// `4 b2 b3 - (b1 b2 - b3)^2`
    pub stability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisReport {
    /// `b1 <= 1`
    pub h_b1: bool,
    /// `b3 < b1 b2`
    pub h_b3: bool,
    /// `b2 + b3 <= 1/2`
    pub h_sum: bool,
    /// `(b1 b2 - b3)^2 < 4 b2 b3`
    pub stability: bool,
    pub margins: Margins,
}

impl HypothesisReport {
    /// The three conditions that guarantee a positive coexistence state.
    pub fn coexistence_holds(&self) -> bool {
        self.h_b1 && self.h_b3 && self.h_sum
    }

    pub fn all_hold(&self) -> bool {
        self.coexistence_holds() && self.stability
    }

    /// `(name, passed, margin)` for each check in a fixed order.
    pub fn checks(&self) -> [(&'static str, bool, f64); 4] {
        [
            ("b1 <= 1", self.h_b1, self.margins.b1),
            ("b3 < b1*b2", self.h_b3, self.margins.b3),
            ("b2 + b3 <= 1/2", self.h_sum, self.margins.sum),
            ("(b1*b2 - b3)^2 < 4*b2*b3", self.stability, self.margins.stability),
        ]
    }
}

/// Evaluates the parameter hypotheses. Failing checks are reported, not raised.
pub fn validate_hypothesis(params: &ModelParams) -> HypothesisReport {
    let ModelParams { b1, b2, b3, .. } = *params;
    let cross = b1 * b2 - b3;
    let margins = Margins {
        b1: 1.0 - b1,
        b3: cross,
        sum: 0.5 - (b2 + b3),
        stability: 4.0 * b2 * b3 - cross * cross,
    };
    HypothesisReport {
        h_b1: margins.b1 >= 0.0,
        h_b3: margins.b3 > 0.0,
        h_sum: margins.sum >= 0.0,
        stability: margins.stability > 0.0,
        margins,
    }
}
