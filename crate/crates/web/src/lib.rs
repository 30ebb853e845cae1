//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export returns a JSON string; errors surface as JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use coded_nfv::convcode::{ConvCode, Termination};
use coded_nfv::designer::{search_gnfv, ErasureModel, FTable, SearchBudget};
use coded_nfv::estimators::{estimate_joint_pmf, exact_enum_perr, paper_formula_perr, PaperScheme};
use coded_nfv::experiment::logspace;
use coded_nfv::gf2::BitMatrix;
use coded_nfv::nfv::NfvScheme;

/// Most q points a curve request may ask for.
pub const MAX_POINTS: usize = 200;
/// Trial cap so one click cannot hang the tab.
pub const MAX_TRIALS: u64 = 200_000;

#[derive(Serialize)]
struct Curve {
    exact: Vec<f64>,
    paper: Vec<f64>,
    /// Per-server frame error rates from the joint pmf.
    server_fer: Vec<f64>,
}

#[derive(Serialize)]
struct Curves {
    p: f64,
    k: usize,
    trials: u64,
    q: Vec<f64>,
    diversity: Curve,
    coded: Curve,
}

fn curve(code: &ConvCode, scheme: &NfvScheme, kind: PaperScheme, p: f64, q: &[f64], trials: u64, seed: u64) -> Result<Curve, String> {
    let pmf = estimate_joint_pmf(code, scheme, p, trials, seed).map_err(|e| e.to_string())?;
    let mut exact = Vec::with_capacity(q.len());
    let mut paper = Vec::with_capacity(q.len());
    for &qi in q {
        exact.push(exact_enum_perr(&pmf, qi, scheme).map_err(|e| e.to_string())?.p_err);
        paper.push(paper_formula_perr(&pmf, qi, kind).map_err(|e| e.to_string())?.p_err);
    }
    Ok(Curve {
        exact,
        paper,
        server_fer: (0..3).map(|j| pmf.marginal_error(j)).collect(),
    })
}

/// P_err against q for the 3-server, 2-frame diversity and coded layouts.
#[allow(clippy::too_many_arguments)]
pub fn perr_curves_json(
    p: f64,
    k: usize,
    zero_tail: bool,
    trials: u64,
    seed: u64,
    q_lo: f64,
    q_hi: f64,
    points: usize,
) -> Result<String, String> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}"));
    }
    if !(q_lo > 0.0 && q_lo < q_hi && q_hi <= 1.0) {
        return Err("need 0 < q_lo < q_hi <= 1".into());
    }
    let termination = if zero_tail { Termination::ZeroTail } else { Termination::Unterminated };
    let code = ConvCode::standard_k7(k, termination).map_err(|e| e.to_string())?;
    let q = logspace(q_lo, q_hi, points);
    let div = NfvScheme::diversity(3, 2).map_err(|e| e.to_string())?;
    let cod = NfvScheme::coded_xor(3, 2).map_err(|e| e.to_string())?;
    let out = Curves {
        p,
        k,
        trials,
        diversity: curve(&code, &div, PaperScheme::Diversity3x2, p, &q, trials, seed)?,
        coded: curve(&code, &cod, PaperScheme::Coded3x2, p, &q, trials, seed)?,
        q,
    };
    Ok(serde_json::to_string(&out).expect("curves serialize"))
}

#[derive(Serialize)]
struct SchemeInfo {
    frames: usize,
    servers: usize,
    rank: usize,
    min_distance: usize,
    mfr: usize,
    /// 1-based servers whose removal prevents recovery.
    witness: Vec<usize>,
    column_weights: Vec<usize>,
}

/// Rank, minimum distance and MFR of a generator given as rows of 0/1
/// separated by newlines, spaces or `/`.
pub fn scheme_info_json(matrix: &str) -> Result<String, String> {
    let text: Vec<&str> = matrix
        .split(|c: char| c == '/' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    let g: BitMatrix = text.join("\n").parse().map_err(|e: coded_nfv::Error| e.to_string())?;
    let scheme = NfvScheme::new(g, "input").map_err(|e| e.to_string())?;
    let info = SchemeInfo {
        frames: scheme.n_frames(),
        servers: scheme.n_servers(),
        rank: scheme.matrix().rank(),
        min_distance: scheme.matrix().min_distance().map_err(|e| e.to_string())?,
        mfr: scheme.mfr(),
        witness: scheme.mfr_witness().into_iter().map(|j| j + 1).collect(),
        column_weights: scheme.column_weights(),
    };
    Ok(serde_json::to_string(&info).expect("info serializes"))
}

/// Ranks `frames × servers` generators under erasure probability
/// `q + (1 − q)·f(d)`; `f_values` lists `f(1), f(2), ...` comma separated.
pub fn design_json(frames: usize, servers: usize, q: f64, f_values: &str, top: usize) -> Result<String, String> {
    let values = f_values
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad f value {s:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let table = FTable::new(values).map_err(|e| e.to_string())?;
    if table.d_max() < frames {
        return Err(format!("need f(1)..f({frames}), got {} values", table.d_max()));
    }
    if servers > 8 {
        return Err("the demo searches at most 8 servers".into());
    }
    let model = ErasureModel::new(q, table).map_err(|e| e.to_string())?;
    let mut ranked = search_gnfv(frames, servers, &model, SearchBudget { max_candidates: 20_000, seed: 1 })
        .map_err(|e| e.to_string())?;
    ranked.truncate(top.max(1));
    Ok(serde_json::to_string(&ranked).expect("reports serialize"))
}

#[wasm_bindgen(js_name = perrCurves)]
#[allow(clippy::too_many_arguments)]
pub fn perr_curves(
    p: f64,
    k: usize,
    zero_tail: bool,
    trials: u32,
    seed: u32,
    q_lo: f64,
    q_hi: f64,
    points: usize,
) -> Result<String, JsError> {
    perr_curves_json(p, k, zero_tail, u64::from(trials), u64::from(seed), q_lo, q_hi, points)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = schemeInfo)]
pub fn scheme_info(matrix: &str) -> Result<String, JsError> {
    scheme_info_json(matrix).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = designSearch)]
pub fn design_search(frames: usize, servers: usize, q: f64, f_values: &str, top: usize) -> Result<String, JsError> {
    design_json(frames, servers, q, f_values, top).map_err(|e| JsError::new(&e))
}
