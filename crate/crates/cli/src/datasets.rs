//! Row generators for every figure dataset.
//!
//! Each generator is a pure function of its parameter struct; the CLI only
//! serialises what comes back. Parameter structs double as the manifest
//! payload, so every field that shapes the output lives here.

use serde::{Deserialize, Serialize};

use ramsq_core::analytic::{
    full_report, mean_coefficients, rescaled_fluctuation, wfs_gain, Shaping, SHOT_NOISE_LEVEL,
};
use ramsq_core::snl::{boundary_at_fixed_ratio, linspace, region_scan, threshold_for_variance};
use ramsq_core::{InputState, MediumSpec, Result};

/// Evenly spaced axis `[min, max]` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub const fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.steps)
    }
}

fn medium(thickness: f64, gain: f64) -> Result<MediumSpec> {
    // Channel count cancels from every ensemble-averaged quantity.
    MediumSpec::new(thickness, gain, 1)
}

fn squeezed(r: f64) -> Result<InputState> {
    InputState::squeezed(r)
}

// ---------------------------------------------------------------- coeffs

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffsParams {
    pub thickness_ratio: f64,
    pub gain_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffRow {
    #[serde(rename = "L_over_l")]
    pub thickness_ratio: f64,
    #[serde(rename = "L_over_La")]
    pub gain_ratio: f64,
    #[serde(rename = "T_bar")]
    pub t_bar: f64,
    #[serde(rename = "R_bar")]
    pub r_bar: f64,
    #[serde(rename = "V_bar")]
    pub v_bar: f64,
    pub constraint_residual: f64,
}

pub fn coeffs(p: &CoeffsParams) -> Result<Vec<CoeffRow>> {
    let c = mean_coefficients(&medium(p.thickness_ratio, p.gain_ratio)?)?;
    Ok(vec![CoeffRow {
        thickness_ratio: p.thickness_ratio,
        gain_ratio: p.gain_ratio,
        t_bar: c.t_bar,
        r_bar: c.r_bar,
        v_bar: c.v_bar,
        constraint_residual: c.flux_residual(),
    }])
}

// ---------------------------------------------------------------- fig2

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Params {
    pub panels: Vec<String>,
    /// Fixed `L/l` of panel a.
    pub thickness_ratio: f64,
    /// Fixed `r` of panel b.
    pub squeeze_r: f64,
    pub squeeze_axis: Axis,
    pub gain_axis: Axis,
    pub thickness_axis: Axis,
}

impl Default for Fig2Params {
    fn default() -> Self {
        Self {
            panels: vec!["a".into(), "b".into()],
            thickness_ratio: 6.0,
            squeeze_r: 1.5,
            squeeze_axis: Axis::new(0.0, 2.0, 21),
            gain_axis: Axis::new(0.0, 3.0, 31),
            thickness_axis: Axis::new(2.0, 20.0, 19),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Row {
    pub panel: String,
    #[serde(rename = "L_over_l")]
    pub thickness_ratio: f64,
    #[serde(rename = "L_over_La")]
    pub gain_ratio: f64,
    pub squeeze_r: f64,
    pub wfs_gain: f64,
}

/// Noise removed by shaping, `T̄ sinh 2r`: panel a over `(r, L/La)` at fixed
/// `L/l`, panel b over `(L/l, L/La)` at fixed `r`.
pub fn fig2(p: &Fig2Params) -> Result<Vec<Fig2Row>> {
    let mut rows = Vec::new();
    for panel in &p.panels {
        let cells: Vec<(f64, f64)> = match panel.as_str() {
            "a" => p
                .squeeze_axis
                .points()
                .into_iter()
                .map(|r| (p.thickness_ratio, r))
                .collect(),
            _ => p
                .thickness_axis
                .points()
                .into_iter()
                .map(|t| (t, p.squeeze_r))
                .collect(),
        };
        for (thick, r) in cells {
            let input = squeezed(r)?;
            for gain in p.gain_axis.points() {
                let c = mean_coefficients(&medium(thick, gain)?)?;
                rows.push(Fig2Row {
                    panel: panel.clone(),
                    thickness_ratio: thick,
                    gain_ratio: gain,
                    squeeze_r: r,
                    wfs_gain: wfs_gain(&c, &input),
                });
            }
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- curves

/// Long-format row shared by the one-dimensional curve datasets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub panel: String,
    pub x_name: String,
    pub x_param: f64,
    #[serde(rename = "L_over_l")]
    pub thickness_ratio: f64,
    #[serde(rename = "L_over_La")]
    pub gain_ratio: f64,
    pub squeeze_r: f64,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Squeeze,
    Gain,
    Thickness,
}

impl Sweep {
    fn name(self) -> &'static str {
        match self {
            Sweep::Squeeze => "squeeze_r",
            Sweep::Gain => "L_over_La",
            Sweep::Thickness => "L_over_l",
        }
    }
}

/// One curve: the swept variable plus the two held fixed.
struct CurveSpec<'a> {
    panel: &'a str,
    sweep: Sweep,
    xs: Vec<f64>,
    thickness: f64,
    gain: f64,
    squeeze: f64,
}

impl CurveSpec<'_> {
    fn points(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.xs.iter().map(move |&x| match self.sweep {
            Sweep::Squeeze => (x, self.thickness, self.gain, x),
            Sweep::Gain => (x, self.thickness, x, self.squeeze),
            Sweep::Thickness => (x, x, self.gain, self.squeeze),
        })
    }

    fn row(&self, x: f64, t: f64, g: f64, r: f64, quantity: &str, value: f64) -> CurveRow {
        CurveRow {
            panel: self.panel.to_string(),
            x_name: self.sweep.name().to_string(),
            x_param: x,
            thickness_ratio: t,
            gain_ratio: g,
            squeeze_r: r,
            quantity: quantity.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Params {
    pub panels: Vec<String>,
    /// Values of the per-panel curve parameter: `L/l` for a and d, `L/La`
    /// for b, `r` for c.
    pub curves: Option<Vec<f64>>,
    pub squeeze_axis: Axis,
    pub gain_axis: Axis,
}

impl Default for Fig3Params {
    fn default() -> Self {
        Self {
            panels: ["a", "b", "c", "d"].map(String::from).to_vec(),
            curves: None,
            squeeze_axis: Axis::new(0.0, 2.0, 41),
            gain_axis: Axis::new(0.0, 3.0, 61),
        }
    }
}

/// Rescaled fluctuations `R_θ` with and without shaping plus the coherent
/// reference line. Panel parameters: a `L/La = 2.5` vs r, b `L/l = 10` vs r,
/// c `L/l = 10` vs `L/La`, d `r = 1` vs `L/La`.
pub fn fig3(p: &Fig3Params) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for panel in &p.panels {
        let (defaults, build): (Vec<f64>, Box<dyn Fn(f64) -> CurveSpec<'static>>) = match panel.as_str() {
            "a" => (vec![10.0], Box::new(|v| CurveSpec {
                panel: "a",
                sweep: Sweep::Squeeze,
                xs: p.squeeze_axis.points(),
                thickness: v,
                gain: 2.5,
                squeeze: 0.0,
            })),
            "b" => (vec![2.5], Box::new(|v| CurveSpec {
                panel: "b",
                sweep: Sweep::Squeeze,
                xs: p.squeeze_axis.points(),
                thickness: 10.0,
                gain: v,
                squeeze: 0.0,
            })),
            "c" => (vec![1.0], Box::new(|v| CurveSpec {
                panel: "c",
                sweep: Sweep::Gain,
                xs: p.gain_axis.points(),
                thickness: 10.0,
                gain: 0.0,
                squeeze: v,
            })),
            _ => (vec![10.0], Box::new(|v| CurveSpec {
                panel: "d",
                sweep: Sweep::Gain,
                xs: p.gain_axis.points(),
                thickness: v,
                gain: 0.0,
                squeeze: 1.0,
            })),
        };
        for v in p.curves.clone().unwrap_or(defaults) {
            let curve = build(v);
            for (x, t, g, r) in curve.points() {
                let c = mean_coefficients(&medium(t, g)?)?;
                let input = squeezed(r)?;
                rows.push(curve.row(x, t, g, r, "ratio_wfs", rescaled_fluctuation(&c, &input, Shaping::Shaped)));
                rows.push(curve.row(x, t, g, r, "ratio_nowfs", rescaled_fluctuation(&c, &input, Shaping::Unshaped)));
                rows.push(curve.row(x, t, g, r, "coherent", 1.0));
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Params {
    pub panels: Vec<String>,
    pub thickness_ratio: f64,
    /// Fixed `L/La` of panel a.
    pub gain_ratio: f64,
    /// Fixed `r` of panel b.
    pub squeeze_r: f64,
    pub squeeze_axis: Axis,
    pub gain_axis: Axis,
}

impl Default for Fig4Params {
    fn default() -> Self {
        Self {
            panels: vec!["a".into(), "b".into()],
            thickness_ratio: 10.0,
            gain_ratio: 2.5,
            squeeze_r: 0.7,
            squeeze_axis: Axis::new(0.0, 2.0, 41),
            gain_axis: Axis::new(0.0, 3.0, 61),
        }
    }
}

/// All four variances and the coherent baseline: a vs r, b vs `L/La`.
pub fn fig4(p: &Fig4Params) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for panel in &p.panels {
        let curve = match panel.as_str() {
            "a" => CurveSpec {
                panel: "a",
                sweep: Sweep::Squeeze,
                xs: p.squeeze_axis.points(),
                thickness: p.thickness_ratio,
                gain: p.gain_ratio,
                squeeze: 0.0,
            },
            _ => CurveSpec {
                panel: "b",
                sweep: Sweep::Gain,
                xs: p.gain_axis.points(),
                thickness: p.thickness_ratio,
                gain: 0.0,
                squeeze: p.squeeze_r,
            },
        };
        for (x, t, g, r) in curve.points() {
            let rep = full_report(&medium(t, g)?, &squeezed(r)?)?;
            for (name, value) in [
                ("x_wfs", rep.x_wfs),
                ("x_nowfs", rep.x_nowfs),
                ("p_wfs", rep.p_wfs),
                ("p_nowfs", rep.p_nowfs),
                ("coherent", rep.coherent_baseline),
            ] {
                rows.push(curve.row(x, t, g, r, name, value));
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigXrParams {
    pub panels: Vec<String>,
    /// Gain of the amplifying series; the linear series uses 0.
    pub gain_ratio: f64,
    /// Fixed `L/l` of panel a.
    pub thickness_ratio: f64,
    /// Fixed `r` of panel b.
    pub squeeze_r: f64,
    pub squeeze_axis: Axis,
    pub thickness_axis: Axis,
}

impl Default for FigXrParams {
    fn default() -> Self {
        Self {
            panels: vec!["a".into(), "b".into()],
            gain_ratio: 1.0,
            thickness_ratio: 2.0,
            squeeze_r: 1.0,
            squeeze_axis: Axis::new(0.0, 2.0, 41),
            thickness_axis: Axis::new(1.5, 20.0, 38),
        }
    }
}

/// Amplifying vs linear, shaped vs unshaped `x̂` variance, and the shot-noise
/// line: a vs r, b vs `L/l`.
pub fn figxr(p: &FigXrParams) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for panel in &p.panels {
        let curve = match panel.as_str() {
            "a" => CurveSpec {
                panel: "a",
                sweep: Sweep::Squeeze,
                xs: p.squeeze_axis.points(),
                thickness: p.thickness_ratio,
                gain: p.gain_ratio,
                squeeze: 0.0,
            },
            _ => CurveSpec {
                panel: "b",
                sweep: Sweep::Thickness,
                xs: p.thickness_axis.points(),
                thickness: 0.0,
                gain: p.gain_ratio,
                squeeze: p.squeeze_r,
            },
        };
        for (x, t, g, r) in curve.points() {
            let input = squeezed(r)?;
            let amp = full_report(&medium(t, g)?, &input)?;
            let lin = full_report(&medium(t, 0.0)?, &input)?;
            for (name, gain, value) in [
                ("amp_nowfs", g, amp.x_nowfs),
                ("amp_wfs", g, amp.x_wfs),
                ("lin_nowfs", 0.0, lin.x_nowfs),
                ("lin_wfs", 0.0, lin.x_wfs),
                ("snl", g, SHOT_NOISE_LEVEL),
            ] {
                rows.push(curve.row(x, t, gain, r, name, value));
            }
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- snl-region

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTable {
    Boundary,
    Matrix,
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub table: RegionTable,
    /// Squeezed-quadrature variance `e^{-2r}` of the input.
    pub squeezed_variance: f64,
    pub preset: Option<String>,
    pub thickness_axis: Axis,
    pub gain_axis: Axis,
    /// `l/La` values for the closed-form threshold table.
    pub ratios: Vec<f64>,
}

/// `e^{-2r}` standing in for infinitely strong squeezing.
pub const LARGE_SQUEEZING_VARIANCE: f64 = 1e-8;

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            table: RegionTable::Boundary,
            squeezed_variance: LARGE_SQUEEZING_VARIANCE,
            preset: Some("large-squeezing".into()),
            thickness_axis: Axis::new(2.0, 20.0, 37),
            gain_axis: Axis::new(0.0, 3.1, 32),
            ratios: vec![0.05, 0.1, 0.2, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRow {
    #[serde(rename = "L_over_l")]
    pub thickness_ratio: f64,
    pub gain_boundary: Option<f64>,
    pub sign_changes: usize,
    pub fixed_point_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixRow {
    #[serde(rename = "L_over_l")]
    pub thickness_ratio: f64,
    #[serde(rename = "L_over_La")]
    pub gain_ratio: f64,
    pub margin: f64,
    pub below_snl: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    #[serde(rename = "l_over_La")]
    pub l_over_la: f64,
    pub squeezed_variance: f64,
    pub p: f64,
    pub m: f64,
    pub n: f64,
    pub m_plus: f64,
    pub m_minus: f64,
    pub gain_max: f64,
    pub gain_max_bisection: Option<f64>,
    /// Principal-branch closed form within [`BRANCH_AGREEMENT_TOL`] of the
    /// bisection root. Fails where the boundary lies above `π/2`.
    pub closed_form_agrees: bool,
}

pub const BRANCH_AGREEMENT_TOL: f64 = 1e-9;

pub enum RegionRows {
    Boundary(Vec<BoundaryRow>),
    Matrix(Vec<MatrixRow>),
    Threshold(Vec<ThresholdRow>),
}

fn input_for_variance(s: f64) -> Result<InputState> {
    InputState::from_squeezed_variance(s)
}

pub fn snl_region(p: &RegionParams) -> Result<RegionRows> {
    if p.table == RegionTable::Threshold {
        let mut rows = Vec::new();
        for &theta in &p.ratios {
            let t = threshold_for_variance(theta, p.squeezed_variance)?;
            let bis = boundary_at_fixed_ratio(theta, p.squeezed_variance)?;
            rows.push(ThresholdRow {
                l_over_la: theta,
                squeezed_variance: p.squeezed_variance,
                p: t.p,
                m: t.m,
                n: t.n,
                m_plus: t.m_plus,
                m_minus: t.m_minus,
                gain_max: t.gain_max,
                gain_max_bisection: bis.gain,
                closed_form_agrees: bis.gain.is_some_and(|g| (g - t.gain_max).abs() <= BRANCH_AGREEMENT_TOL),
            });
        }
        return Ok(RegionRows::Threshold(rows));
    }

    let input = input_for_variance(p.squeezed_variance)?;
    let scan = region_scan(&p.thickness_axis.points(), &p.gain_axis.points(), &input)?;
    Ok(match p.table {
        RegionTable::Boundary => RegionRows::Boundary(
            scan.boundary
                .iter()
                .map(|b| BoundaryRow {
                    thickness_ratio: b.thickness_ratio,
                    gain_boundary: b.gain_boundary,
                    sign_changes: b.sign_changes,
                    fixed_point_gain: b.fixed_point,
                })
                .collect(),
        ),
        _ => RegionRows::Matrix(
            scan.thickness
                .iter()
                .enumerate()
                .flat_map(|(i, &t)| {
                    let scan = &scan;
                    scan.gain.iter().enumerate().map(move |(j, &g)| MatrixRow {
                        thickness_ratio: t,
                        gain_ratio: g,
                        margin: scan.margin[i][j],
                        below_snl: scan.below_snl[i][j],
                    })
                })
                .collect(),
        ),
    })
}
