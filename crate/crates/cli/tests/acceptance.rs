//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Runtime budgets are part of each verdict.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ramsq_cli::validate::{grid, oracle_sweep};
use ramsq_core::analytic::{full_report, mean_coefficients, wfs_gain, Shaping};
use ramsq_core::ensemble::{SamplerConfig, SamplerMode};
use ramsq_core::snl::{
    boundary_at_fixed_ratio, linspace, region_scan, snl_condition, threshold_for_variance,
};
use ramsq_core::{InputState, MediumSpec};

// Frozen oracle values (30-digit evaluation, see core tests).
const M_PLUS_01: f64 = 0.890_261_469_504_371_7;
const GAIN_MAX_01: f64 = 1.097_918_938_530_106_6;
const WFS_GAIN_SPOT: f64 = 1.499_317_275_507_083;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec(t: f64, g: f64) -> MediumSpec {
    MediumSpec::new(t, g, 4).unwrap()
}

fn sq(r: f64) -> InputState {
    InputState::squeezed(r).unwrap()
}

/// Standard grid plus a denser coefficient sweep.
fn coefficient_grid() -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = grid().iter().map(|p| (p.thickness_ratio, p.gain_ratio)).collect();
    for t in [1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0] {
        for g in linspace(0.0, 3.0, 31) {
            pts.push((t, g));
        }
    }
    pts
}

fn c1_conservation() -> Outcome {
    let mut worst = 0.0f64;
    for (t, g) in coefficient_grid() {
        let c = mean_coefficients(&spec(t, g)).unwrap();
        let res = c.flux_residual().abs();
        ensure(res <= 1e-12, || format!("|T+R-V-1| = {res:e} at L/l={t}, L/La={g}"))?;
        worst = worst.max(res);
    }
    Ok(format!("max residual {worst:e} <= 1e-12"))
}

fn c2_linear_limit() -> Outcome {
    let mut worst = 0.0f64;
    for t in [2.0, 5.0, 10.0, 20.0] {
        let c = mean_coefficients(&spec(t, 1e-8)).unwrap();
        let d = (c.t_bar - 1.0 / t)
            .abs()
            .max((c.r_bar - (1.0 - 1.0 / t)).abs())
            .max(c.v_bar.abs());
        ensure(d <= 1e-6, || format!("deviation {d:e} at L/l={t}"))?;
        worst = worst.max(d);
    }
    Ok(format!("max deviation {worst:e} <= 1e-6"))
}

fn c3_gain_identity() -> Outcome {
    let mut worst = 0.0f64;
    for p in grid() {
        let input = sq(p.squeeze_r);
        let rep = full_report(&spec(p.thickness_ratio, p.gain_ratio), &input).unwrap();
        let gap = rep.x_nowfs - rep.x_wfs;
        let d = (gap - rep.coefficients.t_bar * (2.0 * p.squeeze_r).sinh()).abs();
        ensure(d <= 1e-12, || format!("identity off by {d:e} at {p:?}"))?;
        ensure(p.squeeze_r == 0.0 || gap > 0.0, || format!("non-positive gap {gap} at {p:?}"))?;
        ensure(
            (wfs_gain(&rep.coefficients, &input) - gap).abs() <= 1e-12,
            || format!("wfs_gain inconsistent at {p:?}"),
        )?;
        worst = worst.max(d);
    }
    Ok(format!("max deviation {worst:e} <= 1e-12, gap > 0 for r > 0"))
}

fn c4_quadratures() -> Outcome {
    for p in grid() {
        let rep = full_report(&spec(p.thickness_ratio, p.gain_ratio), &sq(p.squeeze_r)).unwrap();
        ensure(rep.x_nowfs == rep.p_nowfs, || format!("x_nowfs != p_nowfs at {p:?}"))?;
        if p.squeeze_r > 0.0 {
            ensure(
                rep.x_wfs < rep.coherent_baseline && rep.coherent_baseline < rep.p_wfs,
                || format!("ordering broken at {p:?}: {rep:?}"),
            )?;
        }
    }
    Ok(format!("{} points: x_nowfs == p_nowfs, x_wfs < 2V+1 < p_wfs", grid().len()))
}

fn c5_oracle() -> Outcome {
    let points = grid();
    let mut summary = Vec::new();
    for mode in [SamplerMode::MeanMagnitudes, SamplerMode::ExponentialMagnitudes] {
        let cfg = SamplerConfig::new(mode, 100_000, 42);
        let samples = oracle_sweep(&points, 4, &cfg).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        let mut misses = Vec::new();
        for s in &samples {
            if !s.estimate.agrees_with(s.analytic, 3.0) {
                misses.push(format!(
                    "{:?} {} at {:?}: {} +/- {} vs {} ({:.2} sigma)",
                    mode,
                    s.quantity.name(),
                    s.point,
                    s.estimate.mean,
                    s.estimate.std_error,
                    s.analytic,
                    s.sigma()
                ));
            }
            let shaped = s.quantity.shaping() == Shaping::Shaped;
            if mode == SamplerMode::MeanMagnitudes && shaped && s.estimate.std_error != 0.0 {
                misses.push(format!("shaped {} spread {:e} at {:?}", s.quantity.name(), s.estimate.std_error, s.point));
            }
            worst = worst.max(s.sigma());
        }
        ensure(misses.is_empty(), || misses.join("; "))?;
        summary.push(format!("{mode:?} worst {worst:.2} sigma"));
    }
    Ok(format!("K=1e5 seed 42, {} points x 4 quantities: {}", points.len(), summary.join(", ")))
}

fn c6_uncertainty() -> Outcome {
    let mut worst = f64::INFINITY;
    for p in grid() {
        let rep = full_report(&spec(p.thickness_ratio, p.gain_ratio), &sq(p.squeeze_r)).unwrap();
        let prod = rep.x_wfs * rep.p_wfs;
        ensure(prod >= 1.0 - 1e-9, || format!("x_wfs * p_wfs = {prod} at {p:?}"))?;
        worst = worst.min(prod);
    }
    Ok(format!("min x_wfs * p_wfs = {worst}"))
}

fn c7_snl() -> Outcome {
    let mut checked = 0;
    for p in grid().into_iter().filter(|p| p.gain_ratio > 0.0) {
        let s = spec(p.thickness_ratio, p.gain_ratio);
        let input = sq(p.squeeze_r);
        let margin = snl_condition(&s, &input).unwrap();
        let excess = full_report(&s, &input).unwrap().x_wfs - 1.0;
        ensure((margin < 0.0) == (excess < 0.0), || format!("margin {margin} vs x_wfs-1 {excess} at {p:?}"))?;
        checked += 1;
    }
    let t = threshold_for_variance(0.1, 0.0).unwrap();
    let bis = boundary_at_fixed_ratio(0.1, 0.0).unwrap();
    let g = bis.gain.ok_or("bisection found no boundary at l/La = 0.1")?;
    ensure(bis.sign_changes == 1, || format!("{} sign changes", bis.sign_changes))?;
    ensure((t.gain_max - g).abs() <= 1e-9, || format!("closed form {} vs bisection {g}", t.gain_max))?;
    ensure((t.m_plus - M_PLUS_01).abs() <= 1e-12, || format!("M+ = {}", t.m_plus))?;
    ensure((g - GAIN_MAX_01).abs() <= 1e-9, || format!("bisection gain {g} vs oracle {GAIN_MAX_01}"))?;
    Ok(format!(
        "{checked} signs agree; l/La=0.1 n=1: M+ = {:.9}, gain_max = {:.9} (bisection {:.9})",
        t.m_plus, t.gain_max, g
    ))
}

fn c8_degeneracy() -> Outcome {
    let mut worst = 0.0f64;
    for theta in [0.05, 0.1, 0.5, 1.0] {
        let t = threshold_for_variance(theta, 1.0).unwrap();
        let d = (t.gain_max - theta).abs();
        ensure(d <= 1e-12, || format!("gain_max {} vs l/La {theta}", t.gain_max))?;
        worst = worst.max(d);
    }
    let scan = region_scan(&linspace(1.01, 50.0, 60), &linspace(0.0, 3.1, 63), &sq(0.0)).unwrap();
    ensure(scan.is_empty(), || "r = 0 region scan is not empty".into())?;
    ensure(scan.boundary.iter().all(|b| b.gain_boundary.is_none()), || "r = 0 boundary found".into())?;
    Ok(format!("max |gain_max - l/La| = {worst:e}; r = 0 region empty on 60 x 63 grid"))
}

// ---------------------------------------------------------------- datasets

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Table {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
        let headers = rdr.headers().unwrap().iter().map(String::from).collect();
        let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
        Table { headers, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.headers.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn records(&self) -> Vec<BTreeMap<&str, &str>> {
        self.rows
            .iter()
            .map(|r| self.headers.iter().map(String::as_str).zip(r.iter().map(String::as_str)).collect())
            .collect()
    }
}

fn num(rec: &BTreeMap<&str, &str>, key: &str) -> f64 {
    rec[key].parse().unwrap_or_else(|_| panic!("bad {key}: {}", rec[key]))
}

fn ramsq(dir: &Path, threads: &str, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ramsq"))
        .args(args)
        .current_dir(dir)
        .env("RAMSQ_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("ramsq {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Runs a preset into `name`, then replays the manifest's argv with a
/// different worker count and demands identical bytes and checksum.
fn emit_and_replay(dir: &Path, name: &str, args: &[&str]) -> Result<Table, String> {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", name]);
    ramsq(dir, "4", &full)?;
    let first = std::fs::read(dir.join(name)).map_err(|e| e.to_string())?;
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join(format!("{name}.manifest.json"))).unwrap()).unwrap();
    let argv: Vec<String> = manifest["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
    ramsq(dir, "1", &argv)?;
    let second = std::fs::read(dir.join(name)).unwrap();
    ensure(first == second, || format!("{name}: rerun differs"))?;
    let recorded = manifest["outputs"][0]["sha256"].as_str().unwrap();
    ensure(recorded == ramsq_cli::output::sha256_hex(&second), || format!("{name}: checksum mismatch"))?;
    let header = String::from_utf8_lossy(&first);
    let digest = manifest["params_sha256"].as_str().unwrap();
    ensure(
        header.lines().next().is_some_and(|l| l.starts_with("# ramsq") && l.ends_with(digest)),
        || format!("{name}: comment line lacks manifest checksum"),
    )?;
    Ok(Table::read(&dir.join(name)))
}

fn check_fig2(t: &Table) -> Result<(), String> {
    for r in t.records() {
        let (sr, v) = (num(&r, "squeeze_r"), num(&r, "wfs_gain"));
        ensure(v >= 0.0, || format!("fig2 negative value {r:?}"))?;
        ensure(if sr > 0.0 { v > 0.0 } else { v == 0.0 }, || format!("fig2 sign {r:?}"))?;
    }
    Ok(())
}

fn check_fig2_spot(t: &Table) -> Result<(), String> {
    let spot = t
        .records()
        .into_iter()
        .find(|r| num(r, "L_over_l") == 10.0 && num(r, "L_over_La") == 2.5)
        .ok_or("fig2 spot cell missing")?;
    let v = num(&spot, "wfs_gain");
    ensure((v - WFS_GAIN_SPOT).abs() <= 1e-12, || format!("fig2 spot {v}"))
}

type Curves = BTreeMap<(String, String, String), Vec<(f64, f64)>>;

/// Groups `(x_param, value)` by (panel, curve identity, quantity), in file order.
fn curves(t: &Table) -> Curves {
    let mut out: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for r in t.records() {
        let fixed: Vec<String> = ["L_over_l", "L_over_La", "squeeze_r"]
            .into_iter()
            .filter(|k| *k != r["x_name"])
            .map(|k| format!("{k}={}", r[k]))
            .collect();
        out.entry((r["panel"].to_string(), fixed.join(","), r["quantity"].to_string()))
            .or_default()
            .push((num(&r, "x_param"), num(&r, "value")));
    }
    out
}

fn pair<'a>(
    c: &'a Curves,
    panel: &str,
    quantity: &str,
) -> Vec<(&'a str, &'a Vec<(f64, f64)>)> {
    c.iter()
        .filter(|((p, _, q), _)| p == panel && q == quantity)
        .map(|((_, id, _), v)| (id.as_str(), v))
        .collect()
}

fn r_of(t: &Table) -> impl Fn(usize) -> f64 + '_ {
    let i = t.col("squeeze_r");
    move |row| t.rows[row][i].parse().unwrap()
}

fn check_fig3(t: &Table) -> Result<(), String> {
    let sr = r_of(t);
    let (q, v) = (t.col("quantity"), t.col("value"));
    for (i, row) in t.rows.iter().enumerate() {
        let val: f64 = row[v].parse().unwrap();
        if sr(i) == 0.0 && row[q].starts_with("ratio") {
            ensure((val - 1.0).abs() <= 1e-15, || format!("fig3 ratio at r=0: {row:?}"))?;
        }
        if row[q] == "coherent" {
            ensure(val == 1.0, || format!("fig3 coherent {row:?}"))?;
        }
    }
    let c = curves(t);
    for panel in ["a", "b", "c", "d"] {
        let shaped = pair(&c, panel, "ratio_wfs");
        let unshaped = pair(&c, panel, "ratio_nowfs");
        ensure(!shaped.is_empty() && shaped.len() == unshaped.len(), || format!("fig3 panel {panel} incomplete"))?;
        for ((id, s), (_, u)) in shaped.iter().zip(&unshaped) {
            for (a, b) in s.iter().zip(u.iter()) {
                let r_positive = !(panel == "a" || panel == "b") || a.0 > 0.0;
                if r_positive {
                    ensure(a.1 < b.1, || format!("fig3 {panel} {id}: shaped {} !< unshaped {} at x={}", a.1, b.1, a.0))?;
                }
            }
        }
    }
    Ok(())
}

fn check_fig4(t: &Table) -> Result<(), String> {
    let c = curves(t);
    for panel in ["a", "b"] {
        let get = |q| pair(&c, panel, q).into_iter().next().map(|(_, v)| v.clone()).unwrap_or_default();
        let (xw, xn, pw, pn, coh) = (get("x_wfs"), get("x_nowfs"), get("p_wfs"), get("p_nowfs"), get("coherent"));
        ensure(!xw.is_empty(), || format!("fig4 panel {panel} empty"))?;
        for i in 0..xw.len() {
            let x = xw[i].0;
            if panel == "a" && x == 0.0 {
                continue;
            }
            ensure(xw[i].1 < xn[i].1, || format!("fig4 {panel}: x_wfs !< x_nowfs at {x}"))?;
            ensure(
                xw[i].1 < coh[i].1 && coh[i].1 < pw[i].1,
                || format!("fig4 {panel}: x_wfs < coherent < p_wfs fails at {x}"),
            )?;
            ensure(xn[i].1 == pn[i].1, || format!("fig4 {panel}: x_nowfs != p_nowfs at {x}"))?;
        }
    }
    Ok(())
}

fn check_figxr(t: &Table) -> Result<(), String> {
    let c = curves(t);
    for panel in ["a", "b"] {
        let get = |q| pair(&c, panel, q).into_iter().next().map(|(_, v)| v.clone()).unwrap_or_default();
        let (aw, an, lw, ln) = (get("amp_wfs"), get("amp_nowfs"), get("lin_wfs"), get("lin_nowfs"));
        ensure(!aw.is_empty() && aw.len() == lw.len(), || format!("figxr panel {panel} incomplete"))?;
        for i in 0..aw.len() {
            let x = aw[i].0;
            ensure(aw[i].1 >= lw[i].1 && an[i].1 >= ln[i].1, || format!("figxr {panel}: amp < lin at {x}"))?;
            let r_positive = panel == "b" || x > 0.0;
            if r_positive {
                ensure(lw[i].1 < 1.0, || format!("figxr {panel}: lin_wfs {} >= 1 at {x}", lw[i].1))?;
            }
        }
        if panel == "a" {
            for series in [&aw, &lw] {
                ensure(series.windows(2).all(|w| w[1].1 < w[0].1), || "figxr a: shaped not decreasing in r".into())?;
            }
            for series in [&an, &ln] {
                ensure(series.windows(2).all(|w| w[1].1 > w[0].1), || "figxr a: unshaped not increasing in r".into())?;
            }
        }
    }
    Ok(())
}

fn check_matrix(t: &Table, squeezed_variance: f64, expect_empty: bool) -> Result<usize, String> {
    let input = InputState::from_squeezed_variance(squeezed_variance).unwrap();
    let mut marked = 0;
    for r in t.records() {
        let below = r["below_snl"] == "true";
        let rep = full_report(&spec(num(&r, "L_over_l"), num(&r, "L_over_La")), &input).unwrap();
        ensure(below == (rep.x_wfs < 1.0), || format!("matrix cell {r:?} vs x_wfs {}", rep.x_wfs))?;
        marked += below as usize;
    }
    ensure(!expect_empty || marked == 0, || format!("{marked} cells marked at r = 0"))?;
    ensure(expect_empty || marked > 0, || "large-squeezing region is empty".into())?;
    Ok(marked)
}

fn check_boundary(t: &Table, expect_empty: bool) -> Result<(), String> {
    for r in t.records() {
        ensure(r["sign_changes"] == if expect_empty { "0" } else { "1" }, || format!("boundary row {r:?}"))?;
        ensure(r["gain_boundary"].is_empty() == expect_empty, || format!("boundary row {r:?}"))?;
        if !r["fixed_point_gain"].is_empty() {
            let (a, b) = (num(&r, "gain_boundary"), num(&r, "fixed_point_gain"));
            ensure((a - b).abs() <= 1e-9, || format!("bisection {a} vs fixed point {b}"))?;
        }
    }
    Ok(())
}

fn check_threshold(t: &Table) -> Result<(), String> {
    let row = t
        .records()
        .into_iter()
        .find(|r| num(r, "l_over_La") == 0.1)
        .ok_or("threshold row l/La = 0.1 missing")?;
    let g = num(&row, "gain_max_bisection");
    // The quoted M+ carries six digits; compare to one unit in the last one.
    ensure((g.sin() - 0.890262).abs() <= 1e-6, || format!("l/La=0.1 boundary {g} vs arcsin(0.890262)"))?;
    ensure((g - num(&row, "gain_max")).abs() <= 1e-9, || "closed form vs bisection".into())
}

fn c9_datasets() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir: PathBuf = tmp.path().to_path_buf();
    check_fig2(&emit_and_replay(&dir, "fig2.csv", &["fig2"])?)?;
    check_fig2_spot(&emit_and_replay(&dir, "fig2_spot.csv", &["fig2", "--panels", "b", "--squeeze-r", "1"])?)?;
    check_fig3(&emit_and_replay(&dir, "fig3.csv", &["fig3"])?)?;
    check_fig4(&emit_and_replay(&dir, "fig4.csv", &["fig4"])?)?;
    check_figxr(&emit_and_replay(&dir, "figxr.csv", &["figxr"])?)?;
    let large = 1e-8;
    check_boundary(&emit_and_replay(&dir, "snl_boundary.csv", &["snl-region"])?, false)?;
    let marked = check_matrix(&emit_and_replay(&dir, "snl_matrix.csv", &["snl-region", "--table", "matrix"])?, large, false)?;
    check_threshold(&emit_and_replay(&dir, "snl_threshold.csv", &["snl-region", "--table", "threshold"])?)?;
    check_boundary(&emit_and_replay(&dir, "snl_coh_boundary.csv", &["snl-region", "--preset", "coherent"])?, true)?;
    check_matrix(
        &emit_and_replay(&dir, "snl_coh_matrix.csv", &["snl-region", "--preset", "coherent", "--table", "matrix"])?,
        1.0,
        true,
    )?;
    Ok(format!("10 datasets checked and replayed byte-identically; {marked} sub-shot-noise cells"))
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "conservation identity", budget: Duration::from_secs(1), run: c1_conservation },
        Criterion { id: 2, title: "linear-limit continuity", budget: Duration::from_secs(1), run: c2_linear_limit },
        Criterion { id: 3, title: "shaping-gain identity", budget: Duration::from_secs(1), run: c3_gain_identity },
        Criterion { id: 4, title: "quadrature symmetry/asymmetry", budget: Duration::from_secs(1), run: c4_quadratures },
        Criterion { id: 5, title: "oracle equivalence", budget: Duration::from_secs(60), run: c5_oracle },
        Criterion { id: 6, title: "uncertainty bound", budget: Duration::from_secs(1), run: c6_uncertainty },
        Criterion { id: 7, title: "SNL consistency", budget: Duration::from_secs(5), run: c7_snl },
        Criterion { id: 8, title: "r = 0 degeneracy", budget: Duration::from_secs(1), run: c8_degeneracy },
        Criterion { id: 9, title: "figure datasets", budget: Duration::from_secs(30), run: c9_datasets },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let verdict = match result {
            Ok(msg) if elapsed <= c.budget => Ok(msg),
            Ok(msg) => Err(format!("{msg}; over budget {:?}", c.budget)),
            Err(e) => Err(e),
        };
        match verdict {
            Ok(msg) => println!("PASS criterion {} ({}) [{:.2?}]: {msg}", c.id, c.title, elapsed),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({}) [{:.2?}]: {msg}", c.id, c.title, elapsed);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
