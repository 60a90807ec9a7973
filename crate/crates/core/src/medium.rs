//! Domain types shared by every other module.
//!
//! A random amplifying medium is described only through dimensionless
//! transport ratios: optical thickness `L/l` and amplification strength
//! `L/L_a`. Raw lengths enter through [`PhysicalUnits`] and nowhere else.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transport parameters of a random amplifying medium below laser threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    /// `L/l`, thickness in transport mean free paths.
    pub thickness_ratio: f64,
    /// `L/L_a`; zero encodes the linear (passive) medium.
    pub gain_ratio: f64,
    /// Number of transmission channels `N`.
    pub channels: usize,
}

impl MediumSpec {
    pub fn new(thickness_ratio: f64, gain_ratio: f64, channels: usize) -> Result<Self> {
        validate_medium(Self {
            thickness_ratio,
            gain_ratio,
            channels,
        })
    }

    /// Linear medium of the same thickness and channel count.
    pub fn linear(&self) -> Self {
        Self {
            gain_ratio: 0.0,
            ..*self
        }
    }

    pub fn is_linear(&self) -> bool {
        self.gain_ratio == 0.0
    }

    /// `l/L_a`, the amplification accumulated over one mean free path.
    pub fn gain_per_mfp(&self) -> f64 {
        self.gain_ratio / self.thickness_ratio
    }

    pub fn validate(self) -> Result<Self> {
        validate_medium(self)
    }
}

/// Returns `spec` unchanged iff it describes a diffusive medium below the
/// random-laser threshold.
pub fn validate_medium(spec: MediumSpec) -> Result<MediumSpec> {
    if !(spec.thickness_ratio.is_finite() && spec.thickness_ratio > 1.0) {
        return Err(Error::ThinMedium(spec.thickness_ratio));
    }
    if spec.gain_ratio.is_nan() || spec.gain_ratio >= PI {
        return Err(Error::GainAboveThreshold(spec.gain_ratio));
    }
    if spec.gain_ratio < 0.0 {
        return Err(Error::NegativeGain(spec.gain_ratio));
    }
    if spec.channels < 1 {
        return Err(Error::BadChannels(spec.channels as i64));
    }
    Ok(spec)
}

/// Product state `[D(α) S(r)|0⟩]^{⊗N}` on the left-side input modes.
///
/// Quadratures follow `x̂ = â† + â`, `p̂ = i(â† − â)`, so vacuum variance is 1.
/// The displacement shifts quadrature means but never the variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    pub squeeze_r: f64,
    pub amplitude: Complex64,
}

impl InputState {
    pub fn new(squeeze_r: f64, amplitude: Complex64) -> Result<Self> {
        if !(squeeze_r.is_finite() && squeeze_r >= 0.0) {
            return Err(Error::BadSqueezing(squeeze_r));
        }
        Ok(Self {
            squeeze_r,
            amplitude,
        })
    }

    /// Squeezed vacuum.
    pub fn squeezed(squeeze_r: f64) -> Result<Self> {
        Self::new(squeeze_r, Complex64::new(0.0, 0.0))
    }

    pub fn coherent(amplitude: Complex64) -> Self {
        Self {
            squeeze_r: 0.0,
            amplitude,
        }
    }

    /// Squeezed vacuum specified by its squeezed-quadrature variance
    /// `e^{-2r}`, which must lie in `(0, 1]`.
    pub fn from_squeezed_variance(var_x: f64) -> Result<Self> {
        if !(var_x > 0.0 && var_x <= 1.0) {
            return Err(Error::Domain {
                what: "squeezed variance e^(-2r)",
                value: var_x,
                domain: "(0, 1]",
            });
        }
        Self::squeezed(-0.5 * var_x.ln())
    }

    /// `⟨(Δx̂)²⟩ = e^{-2r}`
    pub fn x_variance(&self) -> f64 {
        (-2.0 * self.squeeze_r).exp()
    }

    /// `⟨(Δp̂)²⟩ = e^{2r}`
    pub fn p_variance(&self) -> f64 {
        (2.0 * self.squeeze_r).exp()
    }

    /// Mean quadratures `(⟨x̂⟩, ⟨p̂⟩) = (2 Re α, 2 Im α)`; displacement is
    /// applied after squeezing, so `r` does not enter.
    pub fn mean_quadratures(&self) -> (f64, f64) {
        (2.0 * self.amplitude.re, 2.0 * self.amplitude.im)
    }
}

/// Ensemble-averaged channel-summed coefficients of output mode `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCoefficients {
    /// Mean total transmittance `N·T̄_{a'b}`.
    pub t_bar: f64,
    /// Mean total reflectance `N·R̄_{b'b}`; may exceed 1 in a gain medium.
    pub r_bar: f64,
    /// Mean spontaneous-emission weight `V̄_b`.
    pub v_bar: f64,
}

impl EnsembleCoefficients {
    /// `T + R − V − 1`, zero for any physical coefficient set.
    pub fn flux_residual(&self) -> f64 {
        self.t_bar + self.r_bar - self.v_bar - 1.0
    }

    /// Output variance for a coherent-state input, `2V̄ + 1`.
    pub fn coherent_baseline(&self) -> f64 {
        2.0 * self.v_bar + 1.0
    }

    /// Per-channel mean transmittance `T̄_{a'b}`.
    pub fn per_channel_transmission(&self, channels: usize) -> f64 {
        self.t_bar / channels as f64
    }

    /// Per-channel mean reflectance `R̄_{b'b}`.
    pub fn per_channel_reflection(&self, channels: usize) -> f64 {
        self.r_bar / channels as f64
    }
}

/// Dimensional description of a medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnits {
    /// Diffusion constant `D` (length²/time).
    pub diffusion_const: f64,
    /// Amplification time `τ_a`.
    pub amp_time: f64,
    /// Transport mean free path `l`.
    pub mfp: f64,
    /// Slab thickness `L`.
    pub thickness: f64,
    /// Speed of light in the medium `c`.
    pub light_speed: f64,
}

impl PhysicalUnits {
    /// Builds the unit set with the diffusive estimate `D = c·l/3`.
    pub fn from_light_speed(light_speed: f64, mfp: f64, amp_time: f64, thickness: f64) -> Self {
        Self {
            diffusion_const: light_speed * mfp / 3.0,
            amp_time,
            mfp,
            thickness,
            light_speed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("diffusion_const", self.diffusion_const),
            ("amp_time", self.amp_time),
            ("mfp", self.mfp),
            ("thickness", self.thickness),
            ("light_speed", self.light_speed),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveUnit { name, value });
            }
        }
        Ok(())
    }

    /// Amplification length `L_a = √(D τ_a)`.
    pub fn amplification_length(&self) -> f64 {
        (self.diffusion_const * self.amp_time).sqrt()
    }
}

/// Converts physical lengths and rates to `(L/l, L/L_a)`.
///
/// The result is not validated; feed it to [`MediumSpec::new`].
pub fn units_to_spec(units: &PhysicalUnits) -> Result<(f64, f64)> {
    units.validate()?;
    Ok((
        units.thickness / units.mfp,
        units.thickness / units.amplification_length(),
    ))
}
