//! Closed-form ensemble averages.
//!
//! Every variance here is a function of the channel-summed coefficients
//! `(T̄, V̄)` and the input squeezing `r` only; the channel count cancels and
//! the displacement never enters.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::medium::{validate_medium, EnsembleCoefficients, InputState, MediumSpec};

/// Whether the incident wavefront is phase-conjugated onto output mode `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shaping {
    Shaped,
    Unshaped,
}

/// One of the four ensemble-averaged output variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    XWfs,
    XNoWfs,
    PWfs,
    PNoWfs,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [
        Quantity::XWfs,
        Quantity::XNoWfs,
        Quantity::PWfs,
        Quantity::PNoWfs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::XWfs => "x_wfs",
            Quantity::XNoWfs => "x_nowfs",
            Quantity::PWfs => "p_wfs",
            Quantity::PNoWfs => "p_nowfs",
        }
    }

    pub fn shaping(self) -> Shaping {
        match self {
            Quantity::XWfs | Quantity::PWfs => Shaping::Shaped,
            Quantity::XNoWfs | Quantity::PNoWfs => Shaping::Unshaped,
        }
    }

    pub fn evaluate(self, coef: &EnsembleCoefficients, input: &InputState) -> f64 {
        match self {
            Quantity::XWfs => variance_x_wfs(coef, input),
            Quantity::XNoWfs => variance_x_nowfs(coef, input),
            Quantity::PWfs => variance_p_wfs(coef, input),
            Quantity::PNoWfs => variance_p_nowfs(coef, input),
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| format!("unknown quantity `{s}`"))
    }
}

/// Mean transmittance, reflectance and spontaneous-emission weight of a
/// slab below laser threshold.
///
/// With `a = l/L_a` and `b = L/L_a`:
/// `T̄ = sin a / sin b`, `R̄ = sin(b − a) / sin b`, `V̄ = T̄ + R̄ − 1`.
/// `V̄` is evaluated through the product form
/// `2 sin(a/2) sin((b − a)/2) / cos(b/2)`, which is free of cancellation and
/// manifestly non-negative. A linear medium goes through
/// [`mean_coefficients_linear`].
pub fn mean_coefficients(spec: &MediumSpec) -> Result<EnsembleCoefficients> {
    let spec = validate_medium(*spec)?;
    if spec.is_linear() {
        return Ok(mean_coefficients_linear(&spec));
    }
    let b = spec.gain_ratio;
    let a = spec.gain_per_mfp();
    let sin_b = b.sin();
    Ok(EnsembleCoefficients {
        t_bar: a.sin() / sin_b,
        r_bar: (b - a).sin() / sin_b,
        v_bar: 2.0 * (0.5 * a).sin() * (0.5 * (b - a)).sin() / (0.5 * b).cos(),
    })
}

/// Passive-medium coefficients `T̄ = l/L`, `R̄ = 1 − l/L`, `V̄ = 0`; the gain
/// ratio of `spec` is ignored.
pub fn mean_coefficients_linear(spec: &MediumSpec) -> EnsembleCoefficients {
    let t_bar = 1.0 / spec.thickness_ratio;
    EnsembleCoefficients {
        t_bar,
        r_bar: 1.0 - t_bar,
        v_bar: 0.0,
    }
}

/// `2V̄ + 1 − T̄(1 − e^{-2r})`
pub fn variance_x_wfs(coef: &EnsembleCoefficients, input: &InputState) -> f64 {
    coef.coherent_baseline() - coef.t_bar * (-(-2.0 * input.squeeze_r).exp_m1())
}

/// `2V̄ + 1 + T̄(cosh 2r − 1)`
pub fn variance_x_nowfs(coef: &EnsembleCoefficients, input: &InputState) -> f64 {
    coef.coherent_baseline() + coef.t_bar * cosh_m1(2.0 * input.squeeze_r)
}

/// `2V̄ + 1 + T̄(e^{2r} − 1)`
pub fn variance_p_wfs(coef: &EnsembleCoefficients, input: &InputState) -> f64 {
    coef.coherent_baseline() + coef.t_bar * (2.0 * input.squeeze_r).exp_m1()
}

/// Random transmission phases mix both input quadratures equally, so the
/// unshaped `p̂` variance coincides with the unshaped `x̂` variance.
pub fn variance_p_nowfs(coef: &EnsembleCoefficients, input: &InputState) -> f64 {
    coef.coherent_baseline() + coef.t_bar * cosh_m1(2.0 * input.squeeze_r)
}

/// Noise removed from `x̂_b` by shaping, `T̄ sinh 2r`.
pub fn wfs_gain(coef: &EnsembleCoefficients, input: &InputState) -> f64 {
    coef.t_bar * (2.0 * input.squeeze_r).sinh()
}

/// `x̂` variance normalised by the coherent-input baseline `2V̄ + 1`.
pub fn rescaled_fluctuation(
    coef: &EnsembleCoefficients,
    input: &InputState,
    shaping: Shaping,
) -> f64 {
    let var = match shaping {
        Shaping::Shaped => variance_x_wfs(coef, input),
        Shaping::Unshaped => variance_x_nowfs(coef, input),
    };
    var / coef.coherent_baseline()
}

// cosh(x) − 1 = 2 sinh²(x/2), accurate for small x.
fn cosh_m1(x: f64) -> f64 {
    let s = (0.5 * x).sinh();
    2.0 * s * s
}

/// Shot-noise level in the `x̂ = â† + â` convention.
pub const SHOT_NOISE_LEVEL: f64 = 1.0;

/// All four ensemble-averaged variances for one medium and input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub coefficients: EnsembleCoefficients,
    pub x_wfs: f64,
    pub x_nowfs: f64,
    pub p_wfs: f64,
    pub p_nowfs: f64,
    pub coherent_baseline: f64,
    pub snl: f64,
}

impl VarianceReport {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::XWfs => self.x_wfs,
            Quantity::XNoWfs => self.x_nowfs,
            Quantity::PWfs => self.p_wfs,
            Quantity::PNoWfs => self.p_nowfs,
        }
    }

    pub fn below_snl(&self) -> bool {
        self.x_wfs < self.snl
    }
}

pub fn full_report(spec: &MediumSpec, input: &InputState) -> Result<VarianceReport> {
    let coef = mean_coefficients(spec)?;
    Ok(report_from_coefficients(&coef, input))
}

pub fn report_from_coefficients(coef: &EnsembleCoefficients, input: &InputState) -> VarianceReport {
    VarianceReport {
        coefficients: *coef,
        x_wfs: variance_x_wfs(coef, input),
        x_nowfs: variance_x_nowfs(coef, input),
        p_wfs: variance_p_wfs(coef, input),
        p_nowfs: variance_p_nowfs(coef, input),
        coherent_baseline: coef.coherent_baseline(),
        snl: SHOT_NOISE_LEVEL,
    }
}
