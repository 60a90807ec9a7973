//! Where does the shaped output reach below shot noise?
//!
//! The shaped variance `x̂_b^w` is below the shot-noise level iff
//!
//! ```text
//! sin(l/La)(1 + e^{-2r}) + 2 sin((L − l)/La) − 2 sin(L/La) < 0,
//! ```
//!
//! which is `(⟨Δx̂_b^w²⟩ − 1)·sin(L/La)`. At fixed `l/La` the boundary has the
//! closed form `L/La = arcsin M₊` ([`threshold_closed_form`]). Along a scan at
//! fixed `L/l`, `l/La` moves with the unknown, so the region boundary is found
//! by bisection on the margin itself ([`region_scan`]) and the closed form is
//! used only as a cross-check.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::analytic::{mean_coefficients_linear, variance_x_wfs, SHOT_NOISE_LEVEL};
use crate::error::{Error, Result};
use crate::medium::{validate_medium, InputState, MediumSpec};

/// Width of the band below `π` that scans refuse to enter.
pub const THRESHOLD_GUARD: f64 = 1e-6;
/// Absolute bisection tolerance on the gain variable.
pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;
/// Samples used to bracket sign changes along a gain axis.
const BRACKET_SAMPLES: usize = 512;

/// Sub-shot-noise margin for arbitrary `a = l/La`, `b = L/La` and squeezed
/// input variance `s = e^{-2r}`.
///
/// Uses `sin a + sin(b − a) − sin b = 4 sin(a/2) sin((b − a)/2) sin(b/2)`,
/// so the margin becomes `(s − 1) sin a + 8 sin(a/2) sin((b − a)/2) sin(b/2)`
/// and stays accurate when both terms are tiny.
pub fn margin_raw(a: f64, b: f64, squeezed_var: f64) -> f64 {
    (squeezed_var - 1.0) * a.sin() + 8.0 * (0.5 * a).sin() * (0.5 * (b - a)).sin() * (0.5 * b).sin()
}

/// Signed sub-shot-noise margin; negative iff the shaped `x̂` variance is
/// below the shot-noise level.
pub fn snl_condition(spec: &MediumSpec, input: &InputState) -> Result<f64> {
    let spec = validate_medium(*spec)?;
    if spec.is_linear() {
        return Err(Error::ZeroGain);
    }
    Ok(margin_raw(
        spec.gain_per_mfp(),
        spec.gain_ratio,
        input.x_variance(),
    ))
}

/// Closed-form sub-shot-noise threshold at fixed `l/La`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnlThreshold {
    /// `sin(l/La)`
    pub p: f64,
    /// `(1 − √(1 − p²))/p`
    pub m: f64,
    /// `1 + e^{-2r}`
    pub n: f64,
    pub m_plus: f64,
    pub m_minus: f64,
    /// Largest `L/La` still below shot noise, `arcsin M₊`.
    pub gain_max: f64,
}

pub fn threshold_closed_form(l_over_la: f64, input: &InputState) -> Result<SnlThreshold> {
    threshold_for_variance(l_over_la, input.x_variance())
}

/// As [`threshold_closed_form`], parametrised by the squeezed variance
/// `e^{-2r} ∈ [0, 1]` so the infinite-squeezing limit is reachable.
pub fn threshold_for_variance(l_over_la: f64, squeezed_var: f64) -> Result<SnlThreshold> {
    if !(l_over_la > 0.0 && l_over_la < FRAC_PI_2) {
        return Err(Error::Domain {
            what: "l/La",
            value: l_over_la,
            domain: "(0, pi/2)",
        });
    }
    check_squeezed_var(squeezed_var)?;
    let p = l_over_la.sin();
    // Rationalised form of (1 − √(1 − p²))/p.
    let m = p / (1.0 + (1.0 - p * p).sqrt());
    let n = 1.0 + squeezed_var;
    let root = (4.0 * m * m - n * n + 4.0).sqrt();
    let denom = 2.0 * (m * m + 1.0);
    let m_plus = (m * n + root) / denom;
    let m_minus = (m * n - root) / denom;
    Ok(SnlThreshold {
        p,
        m,
        n,
        m_plus,
        m_minus,
        gain_max: m_plus.min(1.0).asin(),
    })
}

fn check_squeezed_var(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "squeezed variance e^(-2r)",
            value: s,
            domain: "[0, 1]",
        })
    }
}

/// Plain bisection for a root of `f` in `[lo, hi]`.
///
/// Returns `None` unless `f(lo)` and `f(hi)` have strictly opposite signs.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Result of searching one gain axis for the sub-shot-noise boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySearch {
    /// First crossing from below to above shot noise, if any.
    pub gain: Option<f64>,
    /// Sign changes seen on the bracketing grid; anything other than 0 or 1
    /// breaks the single-crossing picture and is reported.
    pub sign_changes: usize,
}

fn search_axis<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> BoundarySearch {
    let step = (hi - lo) / BRACKET_SAMPLES as f64;
    let mut prev_x = lo + step;
    let mut prev = f(prev_x);
    let mut changes = 0usize;
    let mut bracket = None;
    for i in 2..=BRACKET_SAMPLES {
        let x = if i == BRACKET_SAMPLES { hi } else { lo + step * i as f64 };
        let v = f(x);
        if (prev < 0.0) != (v < 0.0) {
            changes += 1;
            if bracket.is_none() && prev < 0.0 {
                bracket = Some((prev_x, x));
            }
        }
        prev_x = x;
        prev = v;
    }
    let gain = bracket.and_then(|(a, b)| bisect(&f, a, b, BISECTION_TOL, BISECTION_MAX_ITER));
    BoundarySearch {
        gain,
        sign_changes: changes,
    }
}

/// Boundary gain `L/La` at fixed `L/l`, found by bisection of the margin over
/// `(0, π − THRESHOLD_GUARD)`.
pub fn boundary_by_bisection(thickness_ratio: f64, input: &InputState) -> Result<BoundarySearch> {
    boundary_by_bisection_for_variance(thickness_ratio, input.x_variance())
}

pub fn boundary_by_bisection_for_variance(thickness_ratio: f64, squeezed_var: f64) -> Result<BoundarySearch> {
    if !(thickness_ratio.is_finite() && thickness_ratio > 1.0) {
        return Err(Error::ThinMedium(thickness_ratio));
    }
    check_squeezed_var(squeezed_var)?;
    let f = |g: f64| margin_raw(g / thickness_ratio, g, squeezed_var);
    Ok(search_axis(f, 0.0, PI - THRESHOLD_GUARD))
}

/// Boundary gain at fixed `l/La`, by bisection over `(l/La, π − THRESHOLD_GUARD)`.
/// Independent route to the closed-form `arcsin M₊`.
pub fn boundary_at_fixed_ratio(l_over_la: f64, squeezed_var: f64) -> Result<BoundarySearch> {
    if !(l_over_la > 0.0 && l_over_la < PI - THRESHOLD_GUARD) {
        return Err(Error::Domain {
            what: "l/La",
            value: l_over_la,
            domain: "(0, pi)",
        });
    }
    check_squeezed_var(squeezed_var)?;
    let f = |g: f64| margin_raw(l_over_la, g, squeezed_var);
    Ok(search_axis(f, l_over_la, PI - THRESHOLD_GUARD))
}

/// Solves `G = arcsin M₊(G / thickness)` for the boundary gain `G` at fixed
/// `L/l` with secant steps on `G − arcsin M₊(G / thickness)`.
///
/// Only meaningful where the boundary lies below `π/2` (principal branch).
/// Returns `Ok(None)` when the iteration leaves the closed form's domain or
/// collapses onto `G = 0` (no sub-shot-noise region).
pub fn boundary_fixed_point(thickness_ratio: f64, squeezed_var: f64) -> Result<Option<f64>> {
    if !(thickness_ratio.is_finite() && thickness_ratio > 1.0) {
        return Err(Error::ThinMedium(thickness_ratio));
    }
    check_squeezed_var(squeezed_var)?;
    let map = |g: f64| -> Option<f64> {
        threshold_for_variance(g / thickness_ratio, squeezed_var)
            .ok()
            .map(|t| t.gain_max)
    };
    let h = |g: f64| map(g).map(|v| g - v);

    let mut x0 = 0.5;
    let Some(mut x1) = map(x0) else { return Ok(None) };
    let Some(mut h0) = h(x0) else { return Ok(None) };
    for _ in 0..100 {
        let Some(h1) = h(x1) else { return Ok(None) };
        if h1 == 0.0 || (x1 - x0).abs() <= 1e-15 {
            break;
        }
        let x2 = x1 - h1 * (x1 - x0) / (h1 - h0);
        if !(x2.is_finite() && x2 > 0.0) {
            return Ok(None);
        }
        (x0, h0, x1) = (x1, h1, x2);
    }
    if x1 <= 1e-9 || map(x1).is_none_or(|v| (v - x1).abs() > 1e-12) {
        return Ok(None);
    }
    Ok(Some(x1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub thickness_ratio: f64,
    pub gain_boundary: Option<f64>,
    pub sign_changes: usize,
    /// Closed-form fixed-point cross-check, where it applies.
    pub fixed_point: Option<f64>,
}

/// Sub-shot-noise map over a `(L/l, L/La)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub thickness: Vec<f64>,
    pub gain: Vec<f64>,
    /// `below_snl[i][j]` for `thickness[i]`, `gain[j]`.
    pub below_snl: Vec<Vec<bool>>,
    /// Signed margin per cell; `(x_wfs − 1)` is used in the linear column.
    pub margin: Vec<Vec<f64>>,
    pub boundary: Vec<BoundaryPoint>,
}

impl RegionScan {
    /// Rows whose margin changes sign more than once along the gain axis.
    pub fn anomalies(&self) -> impl Iterator<Item = &BoundaryPoint> {
        self.boundary.iter().filter(|b| b.sign_changes > 1)
    }

    pub fn is_empty(&self) -> bool {
        self.below_snl.iter().flatten().all(|&b| !b)
    }
}

fn check_grid(grid: &[f64], name: &'static str) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::BadGrid(name));
    }
    Ok(())
}

pub fn region_scan(thickness_grid: &[f64], gain_grid: &[f64], input: &InputState) -> Result<RegionScan> {
    check_grid(thickness_grid, "thickness")?;
    check_grid(gain_grid, "gain")?;
    let s = input.x_variance();

    let mut below = Vec::with_capacity(thickness_grid.len());
    let mut margins = Vec::with_capacity(thickness_grid.len());
    let mut boundary = Vec::with_capacity(thickness_grid.len());
    for &thick in thickness_grid {
        let mut row = Vec::with_capacity(gain_grid.len());
        let mut mrow = Vec::with_capacity(gain_grid.len());
        for &gain in gain_grid {
            let spec = validate_medium(MediumSpec {
                thickness_ratio: thick,
                gain_ratio: gain,
                channels: 1,
            })?;
            if gain > PI - THRESHOLD_GUARD {
                return Err(Error::NearThreshold(gain));
            }
            let m = if spec.is_linear() {
                variance_x_wfs(&mean_coefficients_linear(&spec), input) - SHOT_NOISE_LEVEL
            } else {
                margin_raw(spec.gain_per_mfp(), gain, s)
            };
            row.push(m < 0.0);
            mrow.push(m);
        }
        below.push(row);
        margins.push(mrow);

        let search = boundary_by_bisection_for_variance(thick, s)?;
        let fixed_point = match search.gain {
            Some(g) if g < FRAC_PI_2 => boundary_fixed_point(thick, s)?,
            _ => None,
        };
        boundary.push(BoundaryPoint {
            thickness_ratio: thick,
            gain_boundary: search.gain,
            sign_changes: search.sign_changes,
            fixed_point,
        });
    }
    Ok(RegionScan {
        thickness: thickness_grid.to_vec(),
        gain: gain_grid.to_vec(),
        below_snl: below,
        margin: margins,
        boundary,
    })
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}
