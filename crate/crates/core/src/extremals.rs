//! Extremal and vanishing families: the profiles that witness sharpness of
//! the constant Λ_p and the infimum-zero phenomenon.
//!
//! The extremal family is u_ε = f_η^{1/p' + s(w)ε} with κ = 1/p' + s(w)ε.
//! Substituting y = f_η turns both sides of the inequality into the same
//! one-dimensional integral, giving the closed forms
//!
//! ```text
//! ∫ |u_ε'|^p W_p        = κ^p · f_η(η)^{s ε p} / (p ε)
//! Λ_p ∫ |u_ε|^p W_p/F^p + boundary
//!                       = (Λ_p + s Λ_p^{1/p'} p ε) · f_η(η)^{s ε p} / (p ε)
//! ```
//!
//! so rhs/lhs = (Λ_p + s Λ_p^{1/p'} p ε)/κ^p independently of the weight,
//! increasing to 1 as ε ↓ 0. The gap κ^p − Λ_p − s Λ_p^{1/p'} p ε is the
//! strict convexity of x ↦ x^p at x = 1/p' and is positive for ε > 0.
//!
//! The vanishing family φ_ε̄ (P class) is 0 on [0, ε̄], the affine-in-f_η ramp
//! (f_η(ε̄) − f_η(t))/(f_η(ε̄) − f_η(η/2)) on [ε̄, η/2], and 1 on [η/2, η]; its
//! energy is exactly (f_η(ε̄) − f_η(η/2))^{1−p} → 0 as ε̄ → 0, while its Hardy
//! integral stays ≥ (f_η(η)^{1−p} − f_η(η/2)^{1−p})/(p−1) > 0.

use crate::error::{Error, Result};
use crate::inequality::{report_nct1, TestFunction};
use crate::lognum::LogNum;
use crate::quadrature::{integrate_ln, QuadOptions};
use crate::transforms::{build_transforms_with_mode, EvalMode, TransformSet};
use crate::weights::Kind;
use std::f64::consts::LN_10;

/// Ceiling on profile grid nodes; deeper concentration goes analytic-only.
const PROFILE_NODE_CAP: usize = 500_000;
/// Grids never descend below this t: the exponential weights' log-weight
/// t^(−β) must stay within f64, with two decades of headroom.
const DEPTH_FLOOR: f64 = 1e-290;
/// Target log-range of f_η for the grid walk: tail fraction e^(−13.8) ≈ 1e-6.
const TAIL_LN_TARGET: f64 = 13.8;
/// Accepted log-range: tail fraction ≤ e^(−11.5) ≈ 1e-5, still well inside
/// the 1e-4 numeric-vs-analytic budget.
const TAIL_LN_MIN: f64 = 11.5;
/// Per-step budget for the change of log f_η: the piecewise-linear profile's
/// integrals then differ from the true family's by ≲ p(p−1)h²/24 ≈ 2.4e-5.
const CURVATURE_BUDGET: f64 = 5.76e-4;
/// Grid-floor policy: at least this many nodes per decade of t.
const PTS_PER_DECADE: f64 = 64.0;
/// Numeric and analytic sharpness columns flagged when they disagree beyond
/// this relative gap.
pub const SWEEP_AGREE_TOL: f64 = 1e-4;
/// Log-range kept by the shallow fallback grid when the full capture target
/// cannot fit the node budget or the f64 depth floor: enough of the family
/// to inspect, never enough to certify, so those rows stay analytic-only.
const FALLBACK_RANGE: f64 = 500.0;
/// Bottom-endpoint probes only place the grid and grade its steps, so they
/// run at 1e-7 — far looser than the 1e-11 anchoring tolerance, which buys
/// them several extra decades of depth before f64 quantization of log w
/// stalls the quadrature.
const PROBE_REL_TOL: f64 = 1e-7;

/// A sampled extremal profile u_ε with its construction flags.
#[derive(Clone, Debug)]
pub struct ExtremalProfile {
    /// The sampled profile (piecewise linear between grid nodes).
    pub u: TestFunction,
    /// The exponent κ = 1/p' + s(w)ε of f_η.
    pub kappa: f64,
    /// P class with ε ≥ 1/p': u_ε no longer decays at 0 (still constructible).
    pub integrability_warning: bool,
    /// Whether the grid reached deep enough that the missing head of the
    /// integrals is ≤ ~1e-5 of their value; if false, only the analytic
    /// closed forms of the sharpness row are trustworthy.
    pub capture_complete: bool,
}

/// One row of the sharpness sweep: quadrature columns, closed-form columns,
/// and their agreement.
#[derive(Clone, Debug)]
pub struct SharpnessRow {
    pub epsilon: f64,
    /// Energy side ∫|u_ε'|^p W_p (numeric when available, else closed form).
    pub lhs: LogNum,
    /// Λ_p·Hardy + boundary term (numeric when available, else closed form).
    pub rhs: LogNum,
    /// rhs/lhs, in (0, 1], increasing as ε ↓ 0.
    pub ratio: f64,
    pub lhs_analytic: LogNum,
    pub rhs_analytic: LogNum,
    pub ratio_analytic: f64,
    /// κ^p − Λ_p − s·Λ_p^{1/p'}·p·ε ≥ 0, the strict-convexity slack.
    pub convexity_gap: f64,
    /// True when the numeric path could not capture the integrals in f64
    /// (grid would need > 500k nodes or t below 1e-290).
    pub analytic_only: bool,
    /// max over both sides of |numeric − analytic| / scale.
    pub discrepancy_rel: Option<f64>,
    pub discrepancy_flagged: bool,
}

/// The vanishing family φ_ε̄ with its energy (two ways) and the Hardy bound.
#[derive(Clone, Debug)]
pub struct VanishingFamily {
    pub profile: TestFunction,
    /// Quadrature value of ∫|φ'|^p W_p.
    pub energy: LogNum,
    /// (f_η(ε̄) − f_η(η/2))^{1−p}, the exact value of the same integral.
    pub energy_closed_form: LogNum,
    /// (f_η(η)^{1−p} − f_η(η/2)^{1−p})/(p−1) ≤ ∫|φ|^p W_p/F_η^p.
    pub hardy_lower_bound: LogNum,
    /// |energy − closed form| relative gap.
    pub agreement_rel: f64,
}

struct Walk {
    /// Ascending grid ending exactly at η.
    ts: Vec<f64>,
    /// Achieved |log f_η(ts[0]) − log f_η(η)|.
    range: f64,
    /// Largest consecutive log-t step (fast-gap certificate).
    max_step_lnt: f64,
    /// False when the grid is a shallow fallback: its `range` then describes
    /// what was kept, not what the capture target asked for.
    complete: bool,
}

/// Walk down from η keeping |Δ log f_η| ≤ h per step and ≥ 64 nodes per
/// decade, until the log-range target, the floor, the f64 depth limit, or
/// the node cap. P class only: walking down, log f grows, so Heun errors in
/// y = log f are damped like e^{−range} and the stepper is self-correcting.
/// (For Q the same direction amplifies errors like e^{+range} — the vanishing
/// tail is a repeller backwards — which is why Q grids use [`graded_ascent`].)
fn graded_descent(
    set: &TransformSet,
    h: f64,
    target_range: f64,
    floor: Option<f64>,
) -> Result<Walk> {
    let eta = set.params().eta;
    let decade_step = LN_10 / PTS_PER_DECADE;
    let mut t = eta;
    let mut ln_w = set.spec().eval_log_weight(t)?;
    let y0 = set.ln_f(eta)?;
    let mut y = y0;
    let mut ts = vec![eta];
    let mut range = 0.0_f64;
    let mut max_step = 0.0_f64;
    loop {
        if (range >= target_range && ts.len() >= 9) || ts.len() >= PROFILE_NODE_CAP {
            break;
        }
        // |d(log f)/d(log t)| = t / F_η, from (log f)' = s/F.
        let d1 = (t.ln() - (ln_w + y)).exp();
        let step = decade_step.min(h / d1.max(1e-300));
        if step < 1e-9 {
            break; // f_η moves faster than log-t resolution allows
        }
        let mut t_next = t * (-step).exp();
        let mut hit_floor = false;
        if let Some(fl) = floor {
            if t_next <= fl {
                t_next = fl;
                hit_floor = true;
            }
        }
        if t_next < DEPTH_FLOOR || t_next >= t {
            break;
        }
        let step_taken = (t / t_next).ln();
        let ln_w_next = set.spec().eval_log_weight(t_next)?;
        // Heun step for y = log f along log t.  Tracking the logarithm keeps
        // the walk's error additive in y, so f is followed through hundreds
        // of decades without the drift a running difference would accumulate.
        let d2 = (t_next.ln() - (ln_w_next + y + step_taken * d1)).exp();
        let y_next = y + step_taken * 0.5 * (d1 + d2);
        if !y_next.is_finite() {
            break;
        }
        y = y_next;
        range = y - y0;
        max_step = max_step.max(step_taken);
        ts.push(t_next);
        t = t_next;
        ln_w = ln_w_next;
        if hit_floor {
            break;
        }
    }
    if ts.len() < 2 {
        return Err(Error::Inconclusive(
            "profile grid collapsed to a single node".into(),
        ));
    }
    ts.reverse();
    Ok(Walk {
        ts,
        range,
        max_step_lnt: max_step,
        complete: true,
    })
}

/// Deepest usable bottom endpoint for a Q-class grid, as x = log(η/t).
struct BottomSearch {
    /// Shallowest probe with log f ≤ the capture target (within the slack).
    qualifying: Option<(f64, f64)>,
    /// Deepest probe that evaluated at all, target met or not.
    deepest: Option<(f64, f64)>,
}

/// Bracket-and-bisect on x = log(η/t) for the deepest point whose log f_η
/// probe succeeds and sits at or below `target_y`. Probes that fail count as
/// "too deep": the search then converges to the usable boundary instead.
fn find_bottom(
    probe: &dyn Fn(f64) -> Option<f64>,
    target_y: f64,
    target_range: f64,
    x_max: f64,
) -> BottomSearch {
    let mut lo_x = 0.0_f64;
    let mut hi_x: Option<f64> = None;
    let mut qualifying: Option<(f64, f64)> = None;
    let mut deepest: Option<(f64, f64)> = None;
    // March down by doubling until the target is bracketed, a probe dies, or
    // the depth floor cuts in.
    let mut x = 4.0_f64.min(x_max);
    loop {
        match probe(x) {
            Some(y) => {
                if deepest.is_none_or(|(dx, _)| x > dx) {
                    deepest = Some((x, y));
                }
                if y <= target_y {
                    qualifying = Some((x, y));
                    hi_x = Some(x);
                    break;
                }
                lo_x = x;
            }
            None => {
                hi_x = Some(x);
                break;
            }
        }
        if x >= x_max {
            break;
        }
        x = (x * 2.0).min(x_max);
    }
    let Some(mut hx) = hi_x else {
        return BottomSearch { qualifying, deepest };
    };
    // Refine until the capture overshoot is small: extra depth only costs
    // nodes (the walk re-climbs it at h per step), so a few log-units or 2%
    // of the target is cheap insurance against losing tail mass instead.
    let slack = 2.0_f64.max(0.02 * target_range);
    for _ in 0..64 {
        if qualifying.is_some_and(|(_, y)| target_y - y <= slack) || hx - lo_x <= 1e-3 {
            break;
        }
        let mid = 0.5 * (lo_x + hx);
        match probe(mid) {
            Some(y) => {
                if deepest.is_none_or(|(dx, _)| mid > dx) {
                    deepest = Some((mid, y));
                }
                if y <= target_y {
                    qualifying = Some((mid, y));
                    hx = mid;
                } else {
                    lo_x = mid;
                }
            }
            None => hx = mid,
        }
    }
    BottomSearch { qualifying, deepest }
}

/// Build a Q-class grid from the bottom up. The bottom endpoint is located
/// first by [`find_bottom`]; the walk then climbs to η with the same graded
/// Heun stepping as the descent. Ascending is the stable direction for Q:
/// local errors in y = log f are damped like e^{−range}, where the downward
/// direction would amplify them like e^{+range} and lose the vanishing tail
/// (no f64 resynchronization cadence survives the stiff exponential weights,
/// whose quadrature cannot certify anchor tolerance at the depths involved).
fn graded_ascent(set: &TransformSet, h: f64, target_range: f64) -> Result<Walk> {
    let eta = set.params().eta;
    let decade_step = LN_10 / PTS_PER_DECADE;
    let y_eta = set.ln_f(eta)?;
    let x_max = (eta / DEPTH_FLOOR).ln();
    let probe_opts = QuadOptions {
        rel_tol: PROBE_REL_TOL,
        abs_tol: 0.0,
        max_evaluations: 60_000,
        ..QuadOptions::default()
    }
    .singular(true);
    let spec = set.spec().clone();
    let inv_w = move |s: f64| spec.eval_log_weight(s).map(|l| -l).unwrap_or(f64::NAN);
    // Tabulated weights go through the anchored evaluation (their head is a
    // guarded subtraction, not a from-below integral); everything else probes
    // ∫_0^t 1/w directly at the loose tolerance.
    let direct = set.mode() == EvalMode::Quadrature
        && !matches!(set.spec().family, crate::weights::WeightFamily::UserTable(_));
    let probe = |x: f64| -> Option<f64> {
        let t = eta * (-x).exp();
        if !(t > 0.0) {
            return None;
        }
        if direct {
            integrate_ln(&inv_w, 0.0, t, &probe_opts).ok().map(|q| q.value.ln())
        } else {
            set.ln_f(t).ok()
        }
    };
    let search = find_bottom(&probe, y_eta - target_range, target_range, x_max);
    let mut complete = true;
    let mut start = search.qualifying;
    if let Some((xq, yq)) = start {
        let estimate = (y_eta - yq) / h + xq / decade_step + 16.0;
        if estimate > 0.95 * PROFILE_NODE_CAP as f64 {
            start = None;
        }
    }
    if start.is_none() {
        // Capture target unreachable (node budget or depth floor): keep a
        // shallow but still well-graded grid for inspection; the caller
        // reports the row analytic-only.
        complete = false;
        let fallback = target_range.min(FALLBACK_RANGE);
        let shallow = find_bottom(&probe, y_eta - fallback, fallback, x_max);
        start = shallow.qualifying.or(shallow.deepest).or(search.deepest);
    }
    let Some((xq, yq)) = start else {
        return Err(Error::Inconclusive(
            "no usable bottom endpoint: quadrature cannot resolve f_η anywhere below η".into(),
        ));
    };
    let mut t = eta * (-xq).exp();
    let mut y = yq;
    let mut ln_w = set.spec().eval_log_weight(t)?;
    let mut ts = vec![t];
    let mut max_step = 0.0_f64;
    while t < eta {
        let over_cap = ts.len() >= PROFILE_NODE_CAP;
        let d1 = (t.ln() - (ln_w + y)).exp();
        let step = decade_step.min(h / d1.max(1e-300));
        let mut t_next = t * step.exp();
        if over_cap || !(t_next > t) {
            // Node budget or log-t resolution exhausted mid-climb (the
            // pre-walk estimate makes this rare): close the grid at η
            // coarsely rather than emit one that never reaches it.
            max_step = max_step.max((eta / t).ln());
            ts.push(eta);
            complete = false;
            break;
        }
        if t_next >= eta {
            t_next = eta;
        }
        let step_taken = (t_next / t).ln();
        let ln_w_next = set.spec().eval_log_weight(t_next)?;
        // Heun in y = log f along log t, as in the descent.
        let d2 = (t_next.ln() - (ln_w_next + y + step_taken * d1)).exp();
        y += step_taken * 0.5 * (d1 + d2);
        if !y.is_finite() {
            return Err(Error::Inconclusive(
                "profile walk lost track of f_η while climbing".into(),
            ));
        }
        ts.push(t_next);
        max_step = max_step.max(step_taken);
        t = t_next;
        ln_w = ln_w_next;
    }
    Ok(Walk {
        ts,
        range: y_eta - yq,
        max_step_lnt: max_step,
        complete,
    })
}

/// Per-step budget h for log f_η so the sampled profile's integrals track
/// the true family's within ~2.4e-5.
fn step_budget(p: f64) -> f64 {
    (CURVATURE_BUDGET / (p * (p - 1.0))).sqrt().min(0.02)
}

/// Sample u_ε = f_η^{1/p' + s(w)ε} on a grid graded to its own concentration.
///
/// The grid walks down from η in steps that move log f_η by ≤ ~0.02 (with a
/// 64-per-decade floor) until the truncated head of the family's integrals
/// is ≤ ~1e-5 of the total; `capture_complete` records whether that depth
/// was reachable within f64 and the node budget. For P-class weights with
/// ε ≥ 1/p' the profile no longer vanishes at 0 — it is still built, with
/// `integrability_warning` set.
pub fn extremal_profile(set: &TransformSet, eps: f64) -> Result<ExtremalProfile> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("epsilon = {eps} must be in (0, inf)")));
    }
    let p = set.params().p;
    let pp = set.params().p_prime();
    let s = set.switching_sign();
    let kappa = 1.0 / pp + s * eps;
    let integrability_warning = s < 0.0 && eps >= 1.0 / pp;
    let target = TAIL_LN_TARGET / (eps * p);
    let walk = match set.class().kind {
        Kind::P => graded_descent(set, step_budget(p), target, None)?,
        Kind::Q => graded_ascent(set, step_budget(p), target)?,
    };
    let capture_complete = walk.complete && walk.range >= TAIL_LN_MIN / (eps * p);
    set.prepare_grid(&walk.ts)?;
    set.enable_fast_gaps(walk.max_step_lnt * 1.0000001);
    let us = walk
        .ts
        .iter()
        .map(|&t| Ok(LogNum::from_ln(kappa * set.ln_f(t)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtremalProfile {
        u: TestFunction::from_lognum(walk.ts, us)?,
        kappa,
        integrability_warning,
        capture_complete,
    })
}

/// Λ_p^{1/p'} = (1/p')^(p−1).
fn lambda_p_conjugate_root(p: f64) -> f64 {
    (1.0 - 1.0 / p).powf(p - 1.0)
}

fn sharpness_row(set: &TransformSet, eps: f64) -> Result<SharpnessRow> {
    let p = set.params().p;
    let lam = set.params().lambda_p();
    let lam_root = lambda_p_conjugate_root(p);
    let s = set.switching_sign();
    let prof = extremal_profile(set, eps)?;
    let kappa_pow = prof.kappa.powf(p);
    let f_eta_pow = LogNum::from_ln(s * eps * p * set.ln_f(set.params().eta)?);
    let lhs_analytic = LogNum::from_f64(kappa_pow / (p * eps)).mul(f_eta_pow);
    let rhs_analytic = LogNum::from_f64(lam / (p * eps) + s * lam_root).mul(f_eta_pow);
    let ratio_analytic = (lam + s * lam_root * p * eps) / kappa_pow;
    let convexity_gap = kappa_pow - lam - s * lam_root * p * eps;
    if !prof.capture_complete {
        return Ok(SharpnessRow {
            epsilon: eps,
            lhs: lhs_analytic,
            rhs: rhs_analytic,
            ratio: ratio_analytic,
            lhs_analytic,
            rhs_analytic,
            ratio_analytic,
            convexity_gap,
            analytic_only: true,
            discrepancy_rel: None,
            discrepancy_flagged: false,
        });
    }
    let report = report_nct1(&prof.u, set, SWEEP_AGREE_TOL)?;
    let discrepancy = report
        .lhs
        .rel_diff(lhs_analytic)
        .abs()
        .max(report.rhs.rel_diff(rhs_analytic).abs());
    Ok(SharpnessRow {
        epsilon: eps,
        lhs: report.lhs,
        rhs: report.rhs,
        ratio: report.rhs.div(report.lhs).to_f64(),
        lhs_analytic,
        rhs_analytic,
        ratio_analytic,
        convexity_gap,
        analytic_only: false,
        discrepancy_rel: Some(discrepancy),
        discrepancy_flagged: discrepancy > SWEEP_AGREE_TOL,
    })
}

/// Sweep the extremal family over a decreasing list of ε.
///
/// Each row is computed twice: by quadrature (`report_nct1` on the sampled
/// profile, on a fresh transform set so anchor caches stay row-local) and by
/// the closed forms; disagreement beyond 1e-4 relative is flagged. Rows
/// whose grids cannot capture the concentration in f64 carry the closed
/// forms only, marked `analytic_only`.
pub fn sharpness_sweep(set: &TransformSet, eps_list: &[f64]) -> Result<Vec<SharpnessRow>> {
    if eps_list.is_empty() {
        return Err(Error::BadInput("epsilon list is empty".into()));
    }
    for pair in eps_list.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::BadInput(format!(
                "epsilon list must decrease strictly, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let last = eps_list[eps_list.len() - 1];
    if !(last > 0.0) || !eps_list[0].is_finite() {
        return Err(Error::BadInput("epsilon list must be positive and finite".into()));
    }
    let p = set.params().p;
    let pp = set.params().p_prime();
    if set.switching_sign() < 0.0 && eps_list[0] >= 1.0 / (p * pp) {
        return Err(Error::Domain(format!(
            "P-class sweep needs epsilon < 1/(p·p') = {} for a positive right-hand side",
            1.0 / (p * pp)
        )));
    }
    eps_list
        .iter()
        .map(|&eps| {
            let row_set =
                build_transforms_with_mode(set.spec().clone(), *set.params(), set.mode())?;
            sharpness_row(&row_set, eps)
        })
        .collect()
}

/// Build the vanishing family φ_ε̄ (P class): zero up to ε̄, the affine-in-f_η
/// ramp to 1 at η/2, then the plateau 1 up to η.
///
/// The energy is returned both from quadrature (the ramp's exact derivative
/// integrated against W_p reduces to |D|^{−p}·∫_ε̄^{η/2} 1/w with
/// D = f_η(ε̄) − f_η(η/2)) and from the closed form D^{1−p}.
pub fn vanishing_family(set: &TransformSet, eps_bar: f64) -> Result<VanishingFamily> {
    if set.class().kind == Kind::Q {
        return Err(Error::Precondition(
            "vanishing family needs a P-class weight (f_η must blow up at 0)".into(),
        ));
    }
    let eta = set.params().eta;
    let p = set.params().p;
    if !(eps_bar > 0.0 && eps_bar < 0.5 * eta) {
        return Err(Error::Domain(format!(
            "epsilon-bar = {eps_bar} must lie in (0, eta/2) = (0, {})",
            0.5 * eta
        )));
    }
    let walk = graded_descent(set, step_budget(p), f64::INFINITY, Some(eps_bar))?;
    let mut ts = walk.ts;
    if ts[0] > eps_bar {
        return Err(Error::Inconclusive(format!(
            "profile grid hit its node cap before reaching epsilon-bar = {eps_bar:e}; \
             raise epsilon-bar"
        )));
    }
    let half = 0.5 * eta;
    if let Err(i) = ts.binary_search_by(|a| a.partial_cmp(&half).unwrap()) {
        ts.insert(i, half);
    }
    set.prepare_grid(&ts)?;
    set.enable_fast_gaps(walk.max_step_lnt * 1.0000001);
    let f_bar = LogNum::from_ln(set.ln_f(eps_bar)?);
    let f_half = LogNum::from_ln(set.ln_f(half)?);
    let f_eta = LogNum::from_ln(set.ln_f(eta)?);
    let ramp_denom = f_bar.sub(f_half);
    if !ramp_denom.is_positive() {
        return Err(Error::Inconclusive(
            "ramp denominator f_η(ε̄) − f_η(η/2) lost to cancellation".into(),
        ));
    }
    let us = ts
        .iter()
        .map(|&t| {
            if t >= half {
                Ok(LogNum::ONE)
            } else {
                Ok(f_bar.sub(LogNum::from_ln(set.ln_f(t)?)).div(ramp_denom))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let profile = TestFunction::from_lognum(ts, us)?;
    let energy_closed_form = ramp_denom.abs_pow(1.0 - p);
    let opts = QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 0.0,
        ..QuadOptions::default()
    };
    let spec = set.spec().clone();
    let inv_w = move |t: f64| spec.eval_log_weight(t).map(|l| -l).unwrap_or(f64::NAN);
    let ramp_mass = integrate_ln(&inv_w, eps_bar, half, &opts)?;
    let energy = ramp_denom.abs_pow(-p).mul(ramp_mass.value);
    let hardy_lower_bound = f_eta
        .abs_pow(1.0 - p)
        .sub(f_half.abs_pow(1.0 - p))
        .scale(1.0 / (p - 1.0));
    Ok(VanishingFamily {
        profile,
        agreement_rel: energy.rel_diff(energy_closed_form).abs(),
        energy,
        energy_closed_form,
        hardy_lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{build_transforms, EvalMode, TransformParams};
    use crate::weights::{Sign, WeightFamily, WeightSpec};

    fn qset_constant(p: f64) -> TransformSet {
        build_transforms(
            WeightSpec::new(WeightFamily::Constant, p).unwrap(),
            TransformParams::with_default_mu(p, 1.0).unwrap(),
        )
        .unwrap()
    }

    /// w = t² at p = 2 (exponent α·p' with α = 1), with the preset μ that
    /// makes f_η = 1/t exactly.
    fn pset_square(p: f64) -> TransformSet {
        let alpha = 2.0 / (p / (p - 1.0));
        build_transforms(
            WeightSpec::new(WeightFamily::Power { alpha }, p).unwrap(),
            TransformParams::power_preset(p, alpha, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn pset_exp(beta: f64, p: f64) -> TransformSet {
        build_transforms(
            WeightSpec::new(
                WeightFamily::ExpInvPow {
                    sign: Sign::Neg,
                    beta,
                },
                p,
            )
            .unwrap(),
            TransformParams::with_default_mu(p, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn profile_on_constant_weight_is_a_power_of_t() {
        // w = 1 (Q), p = 2, ε = 0.1: u_ε(t) = t^0.6.
        let set = qset_constant(2.0);
        let prof = extremal_profile(&set, 0.1).unwrap();
        assert!((prof.kappa - 0.6).abs() < 1e-15);
        assert!(!prof.integrability_warning);
        assert!(prof.capture_complete);
        let u = &prof.u;
        assert_eq!(u.eta(), 1.0);
        assert!((u.end_value().to_f64() - 1.0).abs() < 1e-14);
        let mid = u.ts().len() / 2;
        let t = u.ts()[mid];
        assert!((u.us()[mid].ln() - 0.6 * t.ln()).abs() < 1e-12);
        // Deep enough that the missing head is ≤ 1e-5 of the energy.
        assert!(u.ts()[0] < 1e-24);
    }

    #[test]
    fn profile_on_square_weight_is_inverse_power() {
        // w = t² preset (P), ε = 0.1: f_η = 1/t so u_ε(t) = (1/t)^0.4.
        let set = pset_square(2.0);
        let prof = extremal_profile(&set, 0.1).unwrap();
        assert!((prof.kappa - 0.4).abs() < 1e-15);
        let u = &prof.u;
        let mid = u.ts().len() / 2;
        let t = u.ts()[mid];
        assert!((u.us()[mid].ln() - (-0.4) * t.ln()).abs() < 1e-12);
        // Endpoint is f_η(η)^κ = μ^κ = 1^0.4.
        assert!((u.end_value().to_f64() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn integrability_warning_on_large_epsilon() {
        let set = pset_square(2.0);
        assert!(!extremal_profile(&set, 0.49).unwrap().integrability_warning);
        assert!(extremal_profile(&set, 0.5).unwrap().integrability_warning);
        assert!(extremal_profile(&set, 0.7).unwrap().integrability_warning);
    }

    #[test]
    fn analytic_ratio_matches_hand_value() {
        // p = 2, P class, ε = 0.01: (0.25 − 0.01)/0.49² = 0.999583...
        let set = pset_square(2.0);
        let rows = sharpness_sweep(&set, &[0.01]).unwrap();
        let r = &rows[0];
        assert!((r.ratio_analytic - 0.24 / 0.2401).abs() < 1e-12);
        assert!(r.convexity_gap > 0.0);
    }

    #[test]
    fn numeric_matches_analytic_on_power_weight() {
        let set = qset_constant(2.0);
        let rows = sharpness_sweep(&set, &[0.1, 0.05]).unwrap();
        for r in &rows {
            assert!(!r.analytic_only);
            assert!(!r.discrepancy_flagged, "disc = {:?}", r.discrepancy_rel);
            assert!(r.ratio > 0.9 && r.ratio <= 1.0 + SWEEP_AGREE_TOL);
            // Exact closed forms at w = 1, ε = 0.1: lhs = 1.8, rhs = 1.75.
        }
        assert!((rows[0].lhs_analytic.to_f64() - 1.8).abs() < 1e-12);
        assert!((rows[0].rhs_analytic.to_f64() - 1.75).abs() < 1e-12);
        // Ratio improves as ε decreases.
        assert!(rows[1].ratio_analytic > rows[0].ratio_analytic);
    }

    #[test]
    fn numeric_matches_analytic_on_forced_quadrature_power() {
        // Same weight family, but the transforms forced through the
        // anchored-quadrature path: exercises prepare_grid + fast gaps
        // against exactly known answers.
        let p = 2.0;
        let alpha = 2.0 / (p / (p - 1.0));
        let set = build_transforms_with_mode(
            WeightSpec::new(WeightFamily::Power { alpha }, p).unwrap(),
            TransformParams::power_preset(p, alpha, 1.0).unwrap(),
            EvalMode::Quadrature,
        )
        .unwrap();
        let rows = sharpness_sweep(&set, &[0.05]).unwrap();
        let r = &rows[0];
        assert!(!r.analytic_only);
        assert!(r.discrepancy_rel.unwrap() < 1e-4, "disc = {:?}", r.discrepancy_rel);
    }

    #[test]
    fn numeric_matches_analytic_on_exponential_weight() {
        let set = pset_exp(0.5, 2.0);
        let rows = sharpness_sweep(&set, &[0.05]).unwrap();
        let r = &rows[0];
        assert!(!r.analytic_only);
        assert!(r.discrepancy_rel.unwrap() < 1e-4, "disc = {:?}", r.discrepancy_rel);
        assert!(r.ratio > 0.95 && r.ratio <= 1.0 + SWEEP_AGREE_TOL);
        assert!(r.convexity_gap > 0.0);
    }

    #[test]
    fn numeric_matches_analytic_on_q_exponential_weight() {
        // w = e^{1/t} (Q): the vanishing tail f ≈ t²e^{−1/t} is a backwards
        // repeller, so this exercises the bottom-up grid construction.
        let set = build_transforms(
            WeightSpec::new(
                WeightFamily::ExpInvPow {
                    sign: Sign::Pos,
                    beta: 1.0,
                },
                1.5,
            )
            .unwrap(),
            TransformParams::with_default_mu(1.5, 1.0).unwrap(),
        )
        .unwrap();
        let rows = sharpness_sweep(&set, &[0.1]).unwrap();
        let r = &rows[0];
        assert!(!r.analytic_only);
        assert!(r.discrepancy_rel.unwrap() < 1e-4, "disc = {:?}", r.discrepancy_rel);
        assert!(r.ratio > 0.8 && r.ratio <= 1.0 + SWEEP_AGREE_TOL);
        assert!(r.convexity_gap > 0.0);
    }

    #[test]
    fn tiny_epsilon_goes_analytic_only() {
        // w = 1 needs t ~ e^(−13.8/(εp)): hopeless in f64 at ε = 1e-4.
        let set = qset_constant(2.0);
        let rows = sharpness_sweep(&set, &[1e-4]).unwrap();
        assert!(rows[0].analytic_only);
        assert!(rows[0].discrepancy_rel.is_none());
        assert!(rows[0].ratio > 0.999999);
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let set = qset_constant(2.0);
        assert!(matches!(
            sharpness_sweep(&set, &[]),
            Err(Error::BadInput(_))
        ));
        assert!(matches!(
            sharpness_sweep(&set, &[0.01, 0.05]),
            Err(Error::BadInput(_))
        ));
        // P class: rhs turns negative at ε ≥ 1/(p·p').
        let pset = pset_square(2.0);
        assert!(matches!(
            sharpness_sweep(&pset, &[0.3]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            extremal_profile(&set, -0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn vanishing_square_weight_hand_values() {
        // w = t² preset, p = 2, ε̄ = 1e-3: f_η = 1/t, energy = (1/ε̄ − 2)^(−1).
        let set = pset_square(2.0);
        let v = vanishing_family(&set, 1e-3).unwrap();
        assert!((v.energy_closed_form.to_f64() - 1.0 / 998.0).abs() < 1e-15);
        assert!(v.agreement_rel <= 1e-8, "agreement = {}", v.agreement_rel);
        // Hardy bound: (f(1)^(−1) − f(1/2)^(−1))/1 = 1 − 1/2.
        assert!((v.hardy_lower_bound.to_f64() - 0.5).abs() < 1e-9);
        // Shape: 0 at ε̄, 1 from η/2 on.
        assert!(v.profile.us()[0].is_zero());
        assert_eq!(v.profile.support_floor(), 1e-3);
        assert!(!v.profile.improper_tail());
        assert!((v.profile.end_value().to_f64() - 1.0).abs() < 1e-15);
        let ts = v.profile.ts();
        let i_half = ts.partition_point(|&t| t < 0.5);
        assert_eq!(ts[i_half], 0.5);
        assert!((v.profile.us()[i_half].to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vanishing_energy_decreases_dyadically() {
        let set = pset_square(2.0);
        let energies: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&eb| vanishing_family(&set, eb).unwrap().energy_closed_form.to_f64())
            .collect();
        assert!(energies[1] < energies[0] && energies[2] < energies[1]);
    }

    #[test]
    fn vanishing_rejects_q_class_and_bad_eps() {
        let qset = qset_constant(2.0);
        assert!(matches!(
            vanishing_family(&qset, 0.1),
            Err(Error::Precondition(_))
        ));
        let pset = pset_square(2.0);
        assert!(matches!(
            vanishing_family(&pset, 0.6),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            vanishing_family(&pset, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn vanishing_exponential_weight_against_frozen_integrals() {
        // w = e^{−1/t}, p = 2, μ = 1, ε̄ = 0.1:
        // f(0.1) = 1 + ∫_0.1^1 e^{1/s} ds and f(0.5) = 1 + ∫_0.5^1 e^{1/s} ds
        // with the integrals frozen from an independent 60-digit evaluation.
        let set = build_transforms(
            WeightSpec::new(
                WeightFamily::ExpInvPow {
                    sign: Sign::Neg,
                    beta: 1.0,
                },
                2.0,
            )
            .unwrap(),
            TransformParams::with_default_mu(2.0, 1.0).unwrap(),
        )
        .unwrap();
        let v = vanishing_family(&set, 0.1).unwrap();
        let f_bar: f64 = 1.0 + 290.405_560_773_309_215_9;
        let f_half: f64 = 1.0 + 2.082_870_318_639_673_529_658;
        let expected = (f_bar - f_half).powi(-1);
        assert!(
            (v.energy_closed_form.to_f64() - expected).abs() / expected < 1e-9,
            "energy = {}, expected = {}",
            v.energy_closed_form.to_f64(),
            expected
        );
        assert!(v.agreement_rel <= 1e-8);
    }
}
