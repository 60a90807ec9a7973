//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a JSON string. The plain functions under the same
//! names with a `_json` suffix do the work and are usable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ramsq_core::analytic::{full_report, mean_coefficients};
use ramsq_core::snl::{linspace, region_scan};
use ramsq_core::{InputState, MediumSpec};

#[derive(Serialize)]
struct Coefficients {
    t_bar: f64,
    r_bar: f64,
    v_bar: f64,
    residual: f64,
}

#[derive(Serialize)]
struct Curves {
    r: Vec<f64>,
    x_wfs: Vec<f64>,
    x_nowfs: Vec<f64>,
    p_wfs: Vec<f64>,
    p_nowfs: Vec<f64>,
    coherent: f64,
}

#[derive(Serialize)]
struct Region {
    thickness: Vec<f64>,
    gain: Vec<f64>,
    below_snl: Vec<Vec<bool>>,
    boundary: Vec<Option<f64>>,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn coefficients_json(thickness: f64, gain: f64) -> Result<String, String> {
    let c = mean_coefficients(&MediumSpec::new(thickness, gain, 1).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    to_json(&Coefficients {
        t_bar: c.t_bar,
        r_bar: c.r_bar,
        v_bar: c.v_bar,
        residual: c.flux_residual(),
    })
}

pub fn variance_curves_json(thickness: f64, gain: f64, r_max: f64, steps: usize) -> Result<String, String> {
    let spec = MediumSpec::new(thickness, gain, 1).map_err(|e| e.to_string())?;
    if !(r_max.is_finite() && r_max > 0.0) || steps < 2 {
        return Err("need r_max > 0 and at least 2 steps".into());
    }
    let r = linspace(0.0, r_max, steps);
    let mut out = Curves {
        r: r.clone(),
        x_wfs: Vec::with_capacity(steps),
        x_nowfs: Vec::with_capacity(steps),
        p_wfs: Vec::with_capacity(steps),
        p_nowfs: Vec::with_capacity(steps),
        coherent: 0.0,
    };
    for &ri in &r {
        let rep = full_report(&spec, &InputState::squeezed(ri).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        out.x_wfs.push(rep.x_wfs);
        out.x_nowfs.push(rep.x_nowfs);
        out.p_wfs.push(rep.p_wfs);
        out.p_nowfs.push(rep.p_nowfs);
        out.coherent = rep.coherent_baseline;
    }
    to_json(&out)
}

pub fn snl_region_json(squeeze_r: f64, thickness_max: f64, steps: usize) -> Result<String, String> {
    if !(thickness_max.is_finite() && thickness_max > 1.5) || steps < 2 {
        return Err("need L/l max > 1.5 and at least 2 steps".into());
    }
    let input = InputState::squeezed(squeeze_r).map_err(|e| e.to_string())?;
    let thickness = linspace(1.5, thickness_max, steps);
    let gain = linspace(0.0, 3.1, steps);
    let scan = region_scan(&thickness, &gain, &input).map_err(|e| e.to_string())?;
    to_json(&Region {
        boundary: scan.boundary.iter().map(|b| b.gain_boundary).collect(),
        thickness: scan.thickness,
        gain: scan.gain,
        below_snl: scan.below_snl,
    })
}

#[wasm_bindgen]
pub fn coefficients(thickness: f64, gain: f64) -> Result<String, JsValue> {
    coefficients_json(thickness, gain).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn variance_curves(thickness: f64, gain: f64, r_max: f64, steps: usize) -> Result<String, JsValue> {
    variance_curves_json(thickness, gain, r_max, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn snl_region(squeeze_r: f64, thickness_max: f64, steps: usize) -> Result<String, JsValue> {
    snl_region_json(squeeze_r, thickness_max, steps).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn coefficients_match_core() {
        let v = parse(&coefficients_json(10.0, 2.5).unwrap());
        assert!((v["t_bar"].as_f64().unwrap() - 0.413_392_605_974_904_1).abs() < 1e-15);
        assert!(v["residual"].as_f64().unwrap().abs() < 1e-12);
    }

    #[test]
    fn curves_have_requested_length() {
        let v = parse(&variance_curves_json(10.0, 2.5, 2.0, 11).unwrap());
        assert_eq!(v["r"].as_array().unwrap().len(), 11);
        let x = v["x_wfs"].as_array().unwrap();
        assert!(x.windows(2).all(|w| w[1].as_f64() < w[0].as_f64()));
    }

    #[test]
    fn region_is_empty_without_squeezing() {
        let v = parse(&snl_region_json(0.0, 10.0, 8).unwrap());
        let cells = v["below_snl"].as_array().unwrap();
        assert!(cells.iter().flat_map(|r| r.as_array().unwrap()).all(|b| b == false));
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(coefficients_json(10.0, 3.2).is_err());
        assert!(variance_curves_json(0.5, 1.0, 2.0, 10).is_err());
        assert!(snl_region_json(-1.0, 10.0, 8).is_err());
    }
}
