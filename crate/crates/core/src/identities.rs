//! Proof-level machinery checks for the substitution u = g_η·v.
//!
//! With v = |u|/g_η, X = p'·F_η·(v'/v)·s(w), z = v^{p/2} and φ = z/√G_η the
//! five pointwise identities
//!
//! ```text
//! (4.13) |g_η'|^{p-1} g_η W_p = 1
//! (4.14) p v^p |g_η'|^p X W_p = s(w)·(v^p)'
//! (4.15) v^p |g_η'|^p W_p = Λ_p u^p W_p / F_η^p
//! (4.16) v^p |g_η'|^p X² W_p = (4p'/p²) |(v^{p/2})'|² F_η
//! (4.17) v^p |g_η'|^p |X|^p W_p = (p')^{p-1} |v'|^p F_η^{p-1}
//! ```
//!
//! cancel exactly; this module verifies them at arbitrary grid points, checks
//! the boundary exchange ∫(v^p)' = Λ_p^{1/p'}|u(η)|^p/f_η(η)^{p−1}, estimates
//! the elementary convexity constants c(p) in |1+X|^p − 1 − pX ≥ c(p)·|X|^q
//! (resp. the two-piece threshold form for 1 < p < 2), verifies the A/B
//! branch bounds, the ground-state inequality |z'|²F ≥ −½(φ²)' + v^p/(4FG²)
//! on arbitrary segment sets, the assembled remainder inequality, and the
//! admissibility consequence ∫u^p W_p t/F^p ≤ K²·∫u^p W_p/(F^p G²).
//!
//! Derivatives of v^p, v^{p/2} use the chain rule with the exact per-segment
//! slope of the piecewise-linear v, making every identity exact up to
//! rounding; the fundamental-theorem checks instead telescope the exact nodal
//! increments of v^p and φ².

use crate::error::{Error, Result};
use crate::inequality::{
    assemble_report, hardy_weighted, remainder_weighted, seg_integral, InequalityReport,
    TestFunction,
};
use crate::lognum::{LogNum, LogSum};
use crate::transforms::{lambda_p, p_prime, TransformSet};

/// Residual magnitude regarded as "exact up to rounding" in identity sweeps.
pub const IDENTITY_REL_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Elementary convexity constants (Lemma-level building block)
// ---------------------------------------------------------------------------

/// Denominator branch for the elementary lower bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementaryBranch {
    /// (|1+X|^p − 1 − pX)/|X|^q with 2 ≤ q ≤ p (needs p ≥ 2).
    PowerQ { q: f64 },
    /// Two-piece denominator M^{p−2}X² for |X| ≤ M, |X|^p beyond (1 < p ≤ 2).
    Threshold { m: f64 },
}

/// Estimated infimum of the elementary convexity ratio.
#[derive(Clone, Copy, Debug)]
pub struct ElementaryConstant {
    pub p: f64,
    pub branch: ElementaryBranch,
    /// inf over the X grid, the analytic endpoints, and local refinement.
    pub c_estimate: f64,
    /// Where the infimum was attained (±∞ for an asymptotic endpoint).
    pub argmin_x: f64,
}

/// |1+x|^p − 1 − px, computed to avoid cancellation near x = 0.
fn convexity_numerator(p: f64, x: f64) -> f64 {
    if x > -1.0 {
        (p * x.ln_1p()).exp_m1() - p * x
    } else {
        (-(1.0 + x)).powf(p) - 1.0 - p * x
    }
}

fn branch_ratio(p: f64, branch: ElementaryBranch, x: f64) -> f64 {
    let num = convexity_numerator(p, x);
    let den = match branch {
        ElementaryBranch::PowerQ { q } => x.abs().powf(q),
        ElementaryBranch::Threshold { m } => {
            if x.abs() <= m {
                m.powf(p - 2.0) * x * x
            } else {
                x.abs().powf(p)
            }
        }
    };
    num / den
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Estimate c(p): inf of the convexity ratio over a dense grid
/// (linear on [−2, 2] at step 10⁻⁴, log-spaced |X| ∈ [2, 10⁴] both signs),
/// the analytic X → 0 and |X| → ∞ endpoints, and golden-section refinement
/// around the three smallest grid values.
pub fn elementary_lower_bound(p: f64, branch: ElementaryBranch) -> Result<ElementaryConstant> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("exponent p = {p} violates 1 < p < inf")));
    }
    match branch {
        ElementaryBranch::PowerQ { q } => {
            if p < 2.0 - 1e-12 {
                return Err(Error::Domain(format!(
                    "power branch needs p ≥ 2 (got p = {p})"
                )));
            }
            if !(q >= 2.0 - 1e-12 && q <= p + 1e-12) {
                return Err(Error::Domain(format!("q = {q} violates 2 ≤ q ≤ p = {p}")));
            }
        }
        ElementaryBranch::Threshold { m } => {
            if p > 2.0 + 1e-12 {
                return Err(Error::Domain(format!(
                    "threshold branch needs 1 < p ≤ 2 (got p = {p})"
                )));
            }
            if !(m >= 1.0) {
                return Err(Error::Domain(format!("threshold M = {m} must be ≥ 1")));
            }
        }
    }

    // Candidate grid.
    let mut xs: Vec<f64> = Vec::with_capacity(44_500);
    let n_lin = 40_000;
    for i in 0..=n_lin {
        xs.push(-2.0 + 4.0 * i as f64 / n_lin as f64);
    }
    let n_log = 2_000;
    let (lo, hi) = (2.0_f64.ln(), 1e4_f64.ln());
    for i in 0..=n_log {
        let r = (lo + (hi - lo) * i as f64 / n_log as f64).exp();
        xs.push(r);
        xs.push(-r);
    }
    xs.retain(|x| x.abs() > 1e-12);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let ratio = |x: f64| branch_ratio(p, branch, x);
    let vals: Vec<f64> = xs.iter().map(|&x| ratio(x)).collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());

    let mut best = (xs[order[0]], vals[order[0]]);
    for &i in order.iter().take(3) {
        let a = if i > 0 { xs[i - 1] } else { xs[i] - 1e-4 };
        let b = if i + 1 < xs.len() { xs[i + 1] } else { xs[i] + 1e-4 };
        let (x, v) = golden_min(&ratio, a, b);
        if v < best.1 {
            best = (x, v);
        }
    }

    // Analytic endpoints.
    match branch {
        ElementaryBranch::PowerQ { q } => {
            if (q - 2.0).abs() < 1e-9 && p * (p - 1.0) / 2.0 < best.1 {
                best = (0.0, p * (p - 1.0) / 2.0);
            }
            if (q - p).abs() < 1e-9 && 1.0 < best.1 {
                best = (f64::INFINITY, 1.0);
            }
        }
        ElementaryBranch::Threshold { m } => {
            let at_zero = p * (p - 1.0) / (2.0 * m.powf(p - 2.0));
            if at_zero < best.1 {
                best = (0.0, at_zero);
            }
            if 1.0 < best.1 {
                best = (f64::INFINITY, 1.0);
            }
        }
    }

    if !(best.1 > 0.0) {
        return Err(Error::Inconclusive(format!(
            "convexity ratio estimate {} is not positive (p = {p})",
            best.1
        )));
    }
    Ok(ElementaryConstant { p, branch, c_estimate: best.1, argmin_x: best.0 })
}

// ---------------------------------------------------------------------------
// Substitution frame
// ---------------------------------------------------------------------------

/// The v-space view of a test function: v = |u|/g_η at the nodes, interpolated
/// linearly in between (so u is read as g_η·v off the nodes), with the A/B
/// partition at threshold M.
pub struct SubstitutionFrame<'a> {
    set: &'a TransformSet,
    ts: Vec<f64>,
    v: Vec<LogNum>,
    m: f64,
}

/// The five pointwise identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdentityId {
    I413,
    I414,
    I415,
    I416,
    I417,
}

impl IdentityId {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityId::I413 => "4.13",
            IdentityId::I414 => "4.14",
            IdentityId::I415 => "4.15",
            IdentityId::I416 => "4.16",
            IdentityId::I417 => "4.17",
        }
    }

    pub const ALL: [IdentityId; 5] =
        [IdentityId::I413, IdentityId::I414, IdentityId::I415, IdentityId::I416, IdentityId::I417];
}

/// Build the frame. Takes |u| (the inequalities only see magnitudes); v = 0
/// nodes are assigned to the A side.
pub fn substitution_frame<'a>(
    u: &TestFunction,
    set: &'a TransformSet,
    m: f64,
) -> Result<SubstitutionFrame<'a>> {
    if !(m > 1.0) {
        return Err(Error::Domain(format!("partition threshold M = {m} must exceed 1")));
    }
    let eta = set.params().eta;
    if ((u.eta() - eta) / eta).abs() > 1e-9 {
        return Err(Error::BadInput(format!(
            "test function ends at {} but the transform set has eta = {eta}",
            u.eta()
        )));
    }
    set.prepare_grid(u.ts())?;
    let pp = p_prime(set.params().p);
    let mut v = Vec::with_capacity(u.ts().len());
    for (&t, &ui) in u.ts().iter().zip(u.us()) {
        if ui.is_zero() {
            v.push(LogNum::ZERO);
        } else {
            let ln_g = (pp.ln() + set.ln_f(t)?) / pp;
            v.push(LogNum::from_ln(ui.ln_abs() - ln_g));
        }
    }
    Ok(SubstitutionFrame { set, ts: u.ts().to_vec(), v, m })
}

/// Everything the identities need at one point t.
struct PointData {
    v: LogNum,
    v_slope: LogNum,
    /// X = p'·F·(v'/v)·s(w); zero when v = 0.
    x: LogNum,
    ln_g: f64,
    ln_gprime_abs: f64,
    ln_w: f64,
    ln_f_cap: f64,
}

impl<'a> SubstitutionFrame<'a> {
    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn v(&self) -> &[LogNum] {
        &self.v
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn set(&self) -> &TransformSet {
        self.set
    }

    fn n_segments(&self) -> usize {
        self.ts.len() - 1
    }

    fn slope(&self, seg: usize) -> LogNum {
        self.v[seg + 1].sub(self.v[seg]).scale(1.0 / (self.ts[seg + 1] - self.ts[seg]))
    }

    /// Segment containing t; at interior nodes the left segment wins.
    fn segment_of(&self, t: f64) -> Result<usize> {
        let n = self.ts.len();
        if !(t >= self.ts[0] && t <= self.ts[n - 1]) {
            return Err(Error::BadInput(format!(
                "t = {t} lies outside the grid [{}, {}]",
                self.ts[0],
                self.ts[n - 1]
            )));
        }
        let k = self.ts.partition_point(|&s| s < t);
        Ok(k.saturating_sub(1).min(n - 2))
    }

    fn v_at(&self, seg: usize, t: f64) -> LogNum {
        let th = (t - self.ts[seg]) / (self.ts[seg + 1] - self.ts[seg]);
        self.v[seg].lerp(self.v[seg + 1], th)
    }

    fn point_data(&self, t: f64) -> Result<PointData> {
        let seg = self.segment_of(t)?;
        let p = self.set.params().p;
        let pp = p_prime(p);
        let ln_w = self.set.spec().eval_log_weight(t)?;
        let ln_f = self.set.ln_f(t)?;
        let ln_f_cap = ln_w + ln_f;
        let ln_g = (pp.ln() + ln_f) / pp;
        // |g'| = (p' f)^{−1/p} / w.
        let ln_gprime_abs = -(pp.ln() + ln_f) / p - ln_w;
        let v = self.v_at(seg, t);
        let v_slope = self.slope(seg);
        let x = if v.is_zero() {
            LogNum::ZERO
        } else {
            LogNum::from_ln(pp.ln() + ln_f_cap + v_slope.ln_abs() - v.ln_abs())
                .scale(v_slope.signum() as f64 * v.signum() as f64 * self.set.switching_sign())
        };
        Ok(PointData { v, v_slope, x, ln_g, ln_gprime_abs, ln_w, ln_f_cap })
    }

    /// X at a node (right-segment slope; last node uses its left segment).
    pub fn x_at_node(&self, i: usize) -> Result<LogNum> {
        let t = *self
            .ts
            .get(i)
            .ok_or_else(|| Error::BadInput(format!("node index {i} out of range")))?;
        let seg = if i == self.ts.len() - 1 { i - 1 } else { i };
        if self.v[i].is_zero() {
            return Ok(LogNum::ZERO);
        }
        let pp = p_prime(self.set.params().p);
        let ln_f_cap = self.set.ln_f_cap(t)?;
        let slope = self.slope(seg);
        Ok(LogNum::from_ln(pp.ln() + ln_f_cap + slope.ln_abs() - self.v[i].ln_abs())
            .scale(slope.signum() as f64 * self.v[i].signum() as f64 * self.set.switching_sign()))
    }

    /// Node mask for the A side: p'·F·|v'| ≤ M·v, with v = 0 nodes on A.
    pub fn a_mask(&self) -> Result<Vec<bool>> {
        (0..self.ts.len())
            .map(|i| {
                if self.v[i].is_zero() {
                    return Ok(true);
                }
                Ok(self.x_at_node(i)?.abs().to_f64() <= self.m)
            })
            .collect()
    }

    pub fn b_mask(&self) -> Result<Vec<bool>> {
        Ok(self.a_mask()?.into_iter().map(|a| !a).collect())
    }
}

// ---------------------------------------------------------------------------
// Pointwise identities
// ---------------------------------------------------------------------------

fn rel_residual(lhs: LogNum, rhs: LogNum) -> f64 {
    if lhs.is_zero() && rhs.is_zero() {
        return 0.0;
    }
    let scale = lhs.abs().max_value(rhs.abs());
    lhs.sub(rhs).div(scale).to_f64()
}

/// Signed relative residual of one identity at t (left-segment rule at
/// nodes). Identities whose two sides disagree by convention at v = 0
/// (|X|^p and, for p < 2, the z-derivative) are skipped with an
/// `Inconclusive` notice.
pub fn verify_pointwise_identity(
    frame: &SubstitutionFrame,
    id: IdentityId,
    t: f64,
) -> Result<f64> {
    let p = frame.set.params().p;
    let pp = p_prime(p);
    let s = frame.set.switching_sign();
    let d = frame.point_data(t)?;
    let skip = |what: &str| {
        Err(Error::Inconclusive(format!(
            "v = 0 at t = {t}: identity {} has no well-defined {what} there; point skipped",
            id.as_str()
        )))
    };
    match id {
        IdentityId::I413 => {
            // |g'|^{p−1} g W_p = 1.
            let lhs = LogNum::from_ln(
                (p - 1.0) * d.ln_gprime_abs + d.ln_g + (p - 1.0) * d.ln_w,
            );
            Ok(rel_residual(lhs, LogNum::ONE))
        }
        IdentityId::I414 => {
            // p v^p |g'|^p X W_p = s(w)·(v^p)' with (v^p)' = p v^{p−1} v'.
            if d.v.is_zero() {
                return Ok(0.0);
            }
            let base = p.ln() + p * d.v.ln_abs() + p * d.ln_gprime_abs + (p - 1.0) * d.ln_w;
            let lhs = d.x.mul(LogNum::from_ln(base));
            let rhs = LogNum::from_ln(p.ln() + (p - 1.0) * d.v.ln_abs() + d.v_slope.ln_abs())
                .scale(d.v_slope.signum() as f64 * s);
            Ok(rel_residual(lhs, rhs))
        }
        IdentityId::I415 => {
            // v^p |g'|^p W_p = Λ_p u^p W_p / F^p with u = g v.
            if d.v.is_zero() {
                return Ok(0.0);
            }
            let lhs =
                LogNum::from_ln(p * d.v.ln_abs() + p * d.ln_gprime_abs + (p - 1.0) * d.ln_w);
            let rhs = LogNum::from_ln(
                lambda_p(p).ln() + p * (d.ln_g + d.v.ln_abs()) + (p - 1.0) * d.ln_w
                    - p * d.ln_f_cap,
            );
            Ok(rel_residual(lhs, rhs))
        }
        IdentityId::I416 => {
            // v^p |g'|^p X² W_p = (4p'/p²)|(v^{p/2})'|² F.
            if d.v.is_zero() {
                if p >= 2.0 {
                    return Ok(0.0);
                }
                return skip("z-derivative (v^{p/2-1} diverges)");
            }
            let lhs = LogNum::from_ln(
                p * d.v.ln_abs() + p * d.ln_gprime_abs + (p - 1.0) * d.ln_w
                    + 2.0 * d.x.ln_abs(),
            );
            let chain = (p / 2.0).ln() + (p / 2.0 - 1.0) * d.v.ln_abs() + d.v_slope.ln_abs();
            let rhs = LogNum::from_ln(
                (4.0 * pp / (p * p)).ln() + 2.0 * chain + d.ln_f_cap,
            );
            Ok(rel_residual(lhs, rhs))
        }
        IdentityId::I417 => {
            // v^p |g'|^p |X|^p W_p = (p')^{p−1} |v'|^p F^{p−1}.
            if d.v.is_zero() {
                if d.v_slope.is_zero() {
                    return Ok(0.0);
                }
                return skip("ratio |X|^p·v^p (X := 0 convention breaks it)");
            }
            let lhs = LogNum::from_ln(
                p * d.v.ln_abs() + p * d.ln_gprime_abs + (p - 1.0) * d.ln_w
                    + p * d.x.ln_abs(),
            );
            let rhs = if d.v_slope.is_zero() {
                LogNum::ZERO
            } else {
                LogNum::from_ln(
                    (p - 1.0) * pp.ln() + p * d.v_slope.ln_abs() + (p - 1.0) * d.ln_f_cap,
                )
            };
            Ok(rel_residual(lhs, rhs))
        }
    }
}

/// Batch sweep of one identity over all interior nodes and segment midpoints.
pub struct IdentitySweep {
    pub id: IdentityId,
    /// (t, signed relative residual) at every evaluated point.
    pub residuals: Vec<(f64, f64)>,
    /// Points skipped because v = 0 makes the identity ill-defined there.
    pub skipped: Vec<f64>,
    pub worst_abs: f64,
}

pub fn identity_sweep(frame: &SubstitutionFrame, id: IdentityId) -> Result<IdentitySweep> {
    let mut points = Vec::new();
    for k in 0..frame.n_segments() {
        points.push(0.5 * (frame.ts[k] + frame.ts[k + 1]));
        if k > 0 {
            points.push(frame.ts[k]);
        }
    }
    let mut residuals = Vec::with_capacity(points.len());
    let mut skipped = Vec::new();
    let mut worst: f64 = 0.0;
    for t in points {
        match verify_pointwise_identity(frame, id, t) {
            Ok(r) => {
                worst = worst.max(r.abs());
                residuals.push((t, r));
            }
            Err(Error::Inconclusive(_)) => skipped.push(t),
            Err(e) => return Err(e),
        }
    }
    Ok(IdentitySweep { id, residuals, skipped, worst_abs: worst })
}

// ---------------------------------------------------------------------------
// Boundary exchange (fundamental theorem)
// ---------------------------------------------------------------------------

/// A two-sided (equality) check.
#[derive(Clone, Debug)]
pub struct EqualityCheck {
    pub id: &'static str,
    pub lhs: LogNum,
    pub rhs: LogNum,
    pub residual: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// ∫ (v^p)' dt over the grid (exact nodal increments of v^p) against the
/// closed form Λ_p^{1/p'}|u(η)|^p/f_η(η)^{p−1}. Needs v to vanish at the left
/// grid end (fundamental-theorem hypothesis).
pub fn boundary_integral_check(frame: &SubstitutionFrame) -> Result<EqualityCheck> {
    if !frame.v[0].is_zero() {
        return Err(Error::Precondition(
            "boundary exchange needs u (hence v) to vanish at the left grid end".into(),
        ));
    }
    let p = frame.set.params().p;
    let pp = p_prime(p);
    let mut lhs = LogNum::ZERO;
    let mut peak = LogNum::ZERO;
    for k in 0..frame.n_segments() {
        let inc = frame.v[k + 1].abs_pow(p).sub(frame.v[k].abs_pow(p));
        lhs = lhs.add(inc);
        peak = peak.max_value(frame.v[k + 1].abs_pow(p));
    }
    let eta = frame.set.params().eta;
    let vn = *frame.v.last().unwrap();
    let rhs = if vn.is_zero() {
        LogNum::ZERO
    } else {
        let ln_f_eta = frame.set.ln_f(eta)?;
        let ln_g_eta = (pp.ln() + ln_f_eta) / pp;
        // u(η) = g(η)·v(η).
        LogNum::from_ln(
            lambda_p(p).ln() / pp + p * (ln_g_eta + vn.ln_abs()) - (p - 1.0) * ln_f_eta,
        )
    };
    // The residual is measured against the largest nodal v^p: when both sides
    // vanish, the lhs still carries the telescoping's rounding residue.
    let scale = lhs.abs().max_value(rhs.abs()).max_value(peak);
    let residual = if scale.is_zero() { 0.0 } else { lhs.sub(rhs).div(scale).to_f64() };
    Ok(EqualityCheck {
        id: "4.21",
        lhs,
        rhs,
        residual,
        pass: residual.abs() <= IDENTITY_REL_TOL,
        notes: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Branch bounds (A/B partition)
// ---------------------------------------------------------------------------

/// Pointwise branch bounds at interior nodes and midpoints:
/// on A: |u'|^p W_p ≤ Λ_p (1+M)^p u^p W_p / F^p;
/// on B: |u'|^p W_p ≤ 2^p Λ_p^{−1/p'} |v'|^p F^{p−1}.
#[derive(Clone, Debug)]
pub struct BranchBoundCheck {
    pub checked_a: usize,
    pub checked_b: usize,
    /// Points where v = 0 exactly (kinks of |u|); the bounds hold a.e. and
    /// are not evaluated there.
    pub skipped: usize,
    /// Worst (bound − lhs)/bound over each side; negative means a violation.
    pub worst_margin_a: f64,
    pub worst_margin_b: f64,
    pub pass: bool,
}

pub fn branch_bounds_check(frame: &SubstitutionFrame) -> Result<BranchBoundCheck> {
    let p = frame.set.params().p;
    let pp = p_prime(p);
    let m = frame.m;
    let mut points = Vec::new();
    for k in 0..frame.n_segments() {
        points.push(0.5 * (frame.ts[k] + frame.ts[k + 1]));
        if k > 0 {
            points.push(frame.ts[k]);
        }
    }
    let mut out = BranchBoundCheck {
        checked_a: 0,
        checked_b: 0,
        skipped: 0,
        worst_margin_a: f64::INFINITY,
        worst_margin_b: f64::INFINITY,
        pass: true,
    };
    for t in points {
        let d = frame.point_data(t)?;
        if d.v.is_zero() {
            out.skipped += 1;
            continue;
        }
        // |u'| = |g'|·v·|1+X|.
        let one_plus_x = LogNum::ONE.add(d.x);
        let lhs_ln = p * (d.ln_gprime_abs + d.v.ln_abs() + one_plus_x.ln_abs())
            + (p - 1.0) * d.ln_w;
        // margin = 1 − lhs/bound; negative means the bound is violated.
        let margin;
        if d.x.abs().to_f64() <= m {
            // A side: (1+M)^p v^p/(p' F).
            let bound_ln = p * (1.0 + m).ln() + p * d.v.ln_abs() - pp.ln() - d.ln_f_cap;
            margin = 1.0 - (lhs_ln - bound_ln).exp();
            out.checked_a += 1;
            out.worst_margin_a = out.worst_margin_a.min(margin);
        } else {
            let bound_ln = p * 2.0_f64.ln()
                + (p - 1.0) * pp.ln()
                + p * d.v_slope.ln_abs()
                + (p - 1.0) * d.ln_f_cap;
            margin = 1.0 - (lhs_ln - bound_ln).exp();
            out.checked_b += 1;
            out.worst_margin_b = out.worst_margin_b.min(margin);
        }
        if margin < -1e-9 {
            out.pass = false;
        }
    }
    if out.checked_a == 0 {
        out.worst_margin_a = 0.0;
    }
    if out.checked_b == 0 {
        out.worst_margin_b = 0.0;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Ground state inequality (appendix lemma)
// ---------------------------------------------------------------------------

/// Check |z'|² F ≥ −½(φ²)' + v^p/(4 F G²) integrated over a segment set.
///
/// `s_mask` selects segments (length = node count − 1); `None` means the full
/// grid, in which case the fundamental-theorem term is replaced by its closed
/// boundary form −Λ_p^{1/p'}|u(η)|^p/(2 μ f_η(η)^{p−1}) (requires v = 0 at the
/// left end). For p < 2 segments whose right endpoint has v = 0 are dropped
/// from both sides (the z-derivative integrand is endpoint-singular there);
/// this only removes matching contributions and keeps the check sound.
pub fn ground_state_check(
    frame: &SubstitutionFrame,
    s_mask: Option<&[bool]>,
    rel_tol: f64,
) -> Result<InequalityReport> {
    let p = frame.set.params().p;
    let n_seg = frame.n_segments();
    if let Some(mask) = s_mask {
        if mask.len() != n_seg {
            return Err(Error::BadInput(format!(
                "segment mask has length {} but the grid has {} segments",
                mask.len(),
                n_seg
            )));
        }
    }
    let full = s_mask.is_none();
    if full && !frame.v[0].is_zero() {
        return Err(Error::Precondition(
            "full-grid ground-state check needs v = 0 at the left grid end".into(),
        ));
    }

    let set = frame.set;
    let mut grad = LogSum::new();
    let mut pot = LogSum::new();
    let mut ftc = LogNum::ZERO;
    let mut notes = Vec::new();
    let mut dropped = 0usize;
    for k in 0..n_seg {
        if let Some(mask) = s_mask {
            if !mask[k] {
                continue;
            }
        }
        let (t0, t1) = (frame.ts[k], frame.ts[k + 1]);
        let (v0, v1) = (frame.v[k], frame.v[k + 1]);
        let slope = frame.slope(k);
        if p < 2.0 && v1.is_zero() && !slope.is_zero() {
            dropped += 1;
            continue;
        }
        // FTC increment of φ² = v^p/G at the nodes.
        let phi2 = |i: usize| -> Result<LogNum> {
            let vi = frame.v[i];
            if vi.is_zero() {
                return Ok(LogNum::ZERO);
            }
            let g = set.g_cap(frame.ts[i])?;
            Ok(LogNum::from_ln(p * vi.ln_abs() - g.ln()))
        };
        ftc = ftc.add(phi2(k + 1)?.sub(phi2(k)?));
        // Potential ¼ ∫ v^p/(F G²).
        let pot_seg = seg_integral(t0, t1, false, &|t| {
            let vt = frame.v_at(k, t);
            if vt.is_zero() {
                return Ok(f64::NEG_INFINITY);
            }
            let g = set.g_cap(t)?;
            Ok(p * vt.ln_abs() - set.ln_f_cap(t)? - 2.0 * g.ln())
        })?;
        if !pot_seg.is_zero() {
            pot.add_ln(pot_seg.ln());
        }
        // Gradient ∫ |z'|² F with z' = (p/2) v^{p/2−1} v'.
        if slope.is_zero() {
            continue;
        }
        let singular = p < 2.0 && v0.is_zero();
        let grad_seg = seg_integral(t0, t1, singular, &|t| {
            let vt = frame.v_at(k, t);
            let v_part = if (p - 2.0).abs() < 1e-15 {
                0.0
            } else if vt.is_zero() {
                // p > 2 only (p < 2 singular endpoints are substituted away,
                // and the quadrature never sits exactly on the endpoint).
                f64::NEG_INFINITY
            } else {
                (p - 2.0) * vt.ln_abs()
            };
            Ok(2.0 * ((p / 2.0).ln() + slope.ln_abs()) + v_part + set.ln_f_cap(t)?)
        })?;
        if !grad_seg.is_zero() {
            grad.add_ln(grad_seg.ln());
        }
    }
    if dropped > 0 {
        notes.push(format!(
            "{dropped} segment(s) with a vanishing right endpoint dropped (p < 2 endpoint singularity)"
        ));
    }

    let (id, ftc_term): (&'static str, LogNum) = if full {
        let eta = set.params().eta;
        let mu = set.params().mu;
        let pp = p_prime(p);
        let vn = *frame.v.last().unwrap();
        let boundary = if vn.is_zero() {
            LogNum::ZERO
        } else {
            let ln_f_eta = set.ln_f(eta)?;
            let ln_g_eta = (pp.ln() + ln_f_eta) / pp;
            LogNum::from_ln(
                lambda_p(p).ln() / pp + p * (ln_g_eta + vn.ln_abs())
                    - (p - 1.0) * ln_f_eta
                    - (2.0 * mu).ln(),
            )
            .neg()
        };
        ("4.32'", boundary)
    } else {
        ("8.1", ftc.scale(-0.5))
    };
    Ok(assemble_report(
        id,
        vec![("gradient_energy", grad.value())],
        vec![("ftc_boundary", ftc_term), ("ground_potential", pot.value().scale(0.25))],
        rel_tol,
        false,
        notes,
    ))
}

// ---------------------------------------------------------------------------
// Assembled remainder inequality
// ---------------------------------------------------------------------------

/// The assembled consequence of the identities and the elementary bound:
/// E ≥ Λ_p H + s(w)·[v^p]₀^η + remainder, with the remainder
/// d(p)∫|z'|²F for p ≥ 2 and c(p)∫min(M^{p−2}X², |X|^p)·v^p|g'|^p W_p for
/// 1 < p < 2 (the two-piece bound is the pointwise min). All terms evaluate
/// in v-space, the boundary term as the exact nodal increment.
pub fn assembled_remainder_check(
    frame: &SubstitutionFrame,
    rel_tol: f64,
) -> Result<InequalityReport> {
    let set = frame.set;
    let p = set.params().p;
    let pp = p_prime(p);
    let s = set.switching_sign();
    let n_seg = frame.n_segments();

    let mut energy = LogSum::new();
    let mut hardy = LogSum::new();
    for k in 0..n_seg {
        let (t0, t1) = (frame.ts[k], frame.ts[k + 1]);
        let (v0, v1) = (frame.v[k], frame.v[k + 1]);
        let slope = frame.slope(k);
        if v0.is_zero() && v1.is_zero() {
            continue;
        }
        // |u'| = |s·|g'|·v + g·v'| (robust at v = 0).
        let e_seg = seg_integral(t0, t1, false, &|t| {
            let vt = frame.v_at(k, t);
            let ln_w = set.spec().eval_log_weight(t)?;
            let ln_f = set.ln_f(t)?;
            let ln_g = (pp.ln() + ln_f) / pp;
            let ln_gp = -(pp.ln() + ln_f) / p - ln_w;
            let term1 = if vt.is_zero() {
                LogNum::ZERO
            } else {
                LogNum::from_ln(ln_gp + vt.ln_abs()).scale(s * vt.signum() as f64)
            };
            let term2 = if slope.is_zero() {
                LogNum::ZERO
            } else {
                LogNum::from_ln(ln_g + slope.ln_abs()).scale(slope.signum() as f64)
            };
            let du = term1.add(term2);
            if du.is_zero() {
                return Ok(f64::NEG_INFINITY);
            }
            Ok(p * du.ln_abs() + (p - 1.0) * ln_w)
        })?;
        if !e_seg.is_zero() {
            energy.add_ln(e_seg.ln());
        }
        // Λ_p H in v-space: ∫ v^p/(p' F).
        let h_seg = seg_integral(t0, t1, false, &|t| {
            let vt = frame.v_at(k, t);
            if vt.is_zero() {
                return Ok(f64::NEG_INFINITY);
            }
            Ok(p * vt.ln_abs() - pp.ln() - set.ln_f_cap(t)?)
        })?;
        if !h_seg.is_zero() {
            hardy.add_ln(h_seg.ln());
        }
    }

    let mut exchange = LogNum::ZERO;
    for k in 0..n_seg {
        exchange = exchange.add(frame.v[k + 1].abs_pow(p).sub(frame.v[k].abs_pow(p)));
    }
    let exchange = exchange.scale(s);

    let mut notes = Vec::new();
    let (id, remainder): (&'static str, LogNum) = if p >= 2.0 {
        let c = elementary_lower_bound(p, ElementaryBranch::PowerQ { q: 2.0 })?.c_estimate;
        let d = c * 4.0 * pp / (p * p);
        notes.push(format!("d(p) = {d:.6e} from c(p) = {c:.6e}"));
        let mut grad = LogSum::new();
        for k in 0..n_seg {
            let slope = frame.slope(k);
            if slope.is_zero() {
                continue;
            }
            let seg = seg_integral(frame.ts[k], frame.ts[k + 1], false, &|t| {
                let vt = frame.v_at(k, t);
                let v_part = if (p - 2.0).abs() < 1e-15 {
                    0.0
                } else if vt.is_zero() {
                    f64::NEG_INFINITY
                } else {
                    (p - 2.0) * vt.ln_abs()
                };
                Ok(2.0 * ((p / 2.0).ln() + slope.ln_abs()) + v_part + set.ln_f_cap(t)?)
            })?;
            if !seg.is_zero() {
                grad.add_ln(seg.ln());
            }
        }
        ("4.22", grad.value().scale(d))
    } else {
        let c = elementary_lower_bound(p, ElementaryBranch::Threshold { m: frame.m })?.c_estimate;
        let mfac_ln = (p - 2.0) * frame.m.ln();
        notes.push(format!("c(p; M = {}) = {c:.6e}", frame.m));
        let mut rem = LogSum::new();
        for k in 0..n_seg {
            let slope = frame.slope(k);
            if slope.is_zero() {
                continue;
            }
            let seg = seg_integral(frame.ts[k], frame.ts[k + 1], false, &|t| {
                let vt = frame.v_at(k, t);
                let ln_f_cap = set.ln_f_cap(t)?;
                let ln_x_core = pp.ln() + ln_f_cap + slope.ln_abs();
                // v^p·min(M^{p−2}X², |X|^p)/(p'F) with X = ±p'F v'/v.
                let branch_a = if vt.is_zero() {
                    f64::INFINITY
                } else {
                    mfac_ln + 2.0 * ln_x_core + (p - 2.0) * vt.ln_abs()
                };
                let branch_b = p * ln_x_core;
                Ok(branch_a.min(branch_b) - pp.ln() - ln_f_cap)
            })?;
            if !seg.is_zero() {
                rem.add_ln(seg.ln());
            }
        }
        ("4.23", rem.value().scale(c))
    };

    Ok(assemble_report(
        id,
        vec![("energy", energy.value())],
        vec![("hardy", hardy.value()), ("boundary_exchange", exchange), ("gradient_remainder", remainder)],
        rel_tol,
        false,
        notes,
    ))
}

// ---------------------------------------------------------------------------
// Weighted-t bound (admissibility consequence)
// ---------------------------------------------------------------------------

/// ∫ u^p W_p t/F^p dt ≤ K²·∫ u^p W_p/(F^p G²) dt for admissible weights,
/// plus the pointwise driver t ≤ K²/G(t)² at every grid node.
/// `k` overrides the probe's witness when given.
pub fn weighted_t_bound_check(
    u: &TestFunction,
    set: &TransformSet,
    k: Option<f64>,
    rel_tol: f64,
) -> Result<InequalityReport> {
    let params = *set.params();
    let probe = set.spec().check_admissible(params.eta, params.mu)?;
    if !probe.admissible {
        return Err(Error::Precondition(
            "weighted-t bound needs an admissible weight (√t·G_η bounded)".into(),
        ));
    }
    let kk = k.unwrap_or_else(|| probe.constant.expect("admissible probe carries a witness"));
    set.prepare_grid(u.ts())?;
    let mut notes = vec![format!("witness K = {kk:.6e}")];
    let mut pointwise_ok = true;
    for &t in u.ts() {
        let g = set.g_cap(t)?;
        if t * g * g > kk * kk * (1.0 + 1e-9) {
            pointwise_ok = false;
            notes.push(format!("pointwise t ≤ K²/G² fails at t = {t}: t·G² = {}", t * g * g));
        }
    }
    let h_t = hardy_weighted(u, set, true)?;
    let j = remainder_weighted(u, set, false)?;
    let mut report = assemble_report(
        "4.9",
        vec![("remainder_capped", j.scale(kk * kk))],
        vec![("t_weighted_hardy", h_t)],
        rel_tol,
        u.improper_tail(),
        notes,
    );
    report.pass = report.pass && pointwise_ok;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{build_transforms, TransformParams};
    use crate::weights::{Sign, WeightFamily, WeightSpec};

    fn unit_set(p: f64) -> TransformSet {
        let spec = WeightSpec::new(WeightFamily::Constant, p).unwrap();
        build_transforms(spec, TransformParams::new(p, 1.0, 1.0).unwrap()).unwrap()
    }

    fn sqrt_decay_set(p: f64) -> TransformSet {
        let spec =
            WeightSpec::new(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 0.5 }, p).unwrap();
        build_transforms(spec, TransformParams::new(p, 1.0, 1.0).unwrap()).unwrap()
    }

    fn linear_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    fn wiggly(ts: &[f64]) -> TestFunction {
        let us: Vec<f64> = ts
            .iter()
            .enumerate()
            .map(|(i, &t)| if i == 0 { 0.0 } else { (4.0 * t).sin().abs() * t + 0.2 * t * t })
            .collect();
        TestFunction::new(ts, &us).unwrap()
    }

    #[test]
    fn elementary_constant_exact_for_quadratic_case() {
        let c = elementary_lower_bound(2.0, ElementaryBranch::PowerQ { q: 2.0 }).unwrap();
        assert!((c.c_estimate - 1.0).abs() <= 1e-9, "c = {}", c.c_estimate);
    }

    #[test]
    fn elementary_constant_cubic_case_hits_interior_argmin() {
        // (|1+X|³ − 1 − 3X)/X² has infimum 3/2 at X = −2.
        let c = elementary_lower_bound(3.0, ElementaryBranch::PowerQ { q: 2.0 }).unwrap();
        assert!((c.c_estimate - 1.5).abs() <= 1e-6, "c = {}", c.c_estimate);
        assert!((c.argmin_x + 2.0).abs() <= 1e-4, "argmin = {}", c.argmin_x);
    }

    #[test]
    fn elementary_constant_threshold_case() {
        // Frozen grid-search oracle: p = 1.5, M = 2 → ≈ 0.42290374, at X = 2
        // (the seam of the two pieces).
        let c = elementary_lower_bound(1.5, ElementaryBranch::Threshold { m: 2.0 }).unwrap();
        assert!((c.c_estimate - 0.4229037447142885).abs() <= 1e-8, "c = {}", c.c_estimate);
        assert!((c.argmin_x - 2.0).abs() <= 1e-4);
    }

    #[test]
    fn elementary_constant_validates_branches() {
        assert!(elementary_lower_bound(1.5, ElementaryBranch::PowerQ { q: 2.0 }).is_err());
        assert!(elementary_lower_bound(3.0, ElementaryBranch::PowerQ { q: 4.0 }).is_err());
        assert!(elementary_lower_bound(3.0, ElementaryBranch::Threshold { m: 2.0 }).is_err());
        assert!(elementary_lower_bound(1.5, ElementaryBranch::Threshold { m: 0.5 }).is_err());
    }

    #[test]
    fn frame_of_identity_function_has_unit_x() {
        // u(t) = t, w = 1, p = 2: v = √(t/2), X ≡ 1 in the continuum.
        let set = unit_set(2.0);
        let ts = linear_grid(0.2, 1.0, 400);
        let u = TestFunction::sample(&ts, |t| t).unwrap();
        let frame = substitution_frame(&u, &set, 2.0).unwrap();
        for k in (0..frame.n_segments()).step_by(37) {
            let tm = 0.5 * (frame.ts()[k] + frame.ts()[k + 1]);
            let d = frame.point_data(tm).unwrap();
            assert!((d.x.to_f64() - 1.0).abs() <= 1e-3, "X = {} at t = {tm}", d.x.to_f64());
        }
        assert!(frame.a_mask().unwrap().iter().all(|&a| a));
    }

    #[test]
    fn frame_of_ground_profile_is_degenerate() {
        // u = g_η: v ≡ 1, X ≡ 0, all nodes on A; I416 has both sides zero.
        let set = unit_set(2.0);
        let ts = linear_grid(0.1, 1.0, 30);
        let u = TestFunction::sample(&ts, |t| (2.0 * t).sqrt()).unwrap();
        let frame = substitution_frame(&u, &set, 2.0).unwrap();
        for v in frame.v() {
            assert!((v.to_f64() - 1.0).abs() <= 1e-12);
        }
        assert!(frame.x_at_node(3).unwrap().abs().to_f64() <= 1e-9);
        assert!(frame.a_mask().unwrap().iter().all(|&a| a));
        let r = verify_pointwise_identity(&frame, IdentityId::I416, 0.55).unwrap();
        assert!(r.abs() <= 1e-9);
    }

    #[test]
    fn identity_413_exact_on_constant_weight() {
        let set = unit_set(2.0);
        let ts = linear_grid(0.1, 1.0, 10);
        let u = TestFunction::sample(&ts, |t| t).unwrap();
        let frame = substitution_frame(&u, &set, 2.0).unwrap();
        let r = verify_pointwise_identity(&frame, IdentityId::I413, 0.5).unwrap();
        assert!(r.abs() <= 1e-13, "residual {r}");
    }

    #[test]
    fn all_identities_tiny_residual_on_nondoubling_weight() {
        for p in [1.5, 2.0, 3.0] {
            let set = sqrt_decay_set(p);
            let ts = linear_grid(0.05, 1.0, 40);
            let u = wiggly(&ts);
            let frame = substitution_frame(&u, &set, 2.0).unwrap();
            for id in IdentityId::ALL {
                let sweep = identity_sweep(&frame, id).unwrap();
                assert!(
                    sweep.worst_abs <= IDENTITY_REL_TOL,
                    "p = {p}, id {}: worst {}",
                    id.as_str(),
                    sweep.worst_abs
                );
            }
        }
    }

    #[test]
    fn boundary_exchange_normalized_endpoint() {
        // u(η) = g_η(η): both sides are exactly 1.
        let set = unit_set(2.0);
        let ts = linear_grid(0.1, 1.0, 20);
        let g_eta = 2.0_f64.sqrt();
        let mut us: Vec<f64> = ts.iter().map(|&t| t * g_eta).collect();
        us[0] = 0.0;
        let u = TestFunction::new(&ts, &us).unwrap();
        let frame = substitution_frame(&u, &set, 2.0).unwrap();
        let check = boundary_integral_check(&frame).unwrap();
        assert!((check.lhs.to_f64() - 1.0).abs() <= 1e-12);
        assert!((check.rhs.to_f64() - 1.0).abs() <= 1e-12);
        assert!(check.pass);
    }

    #[test]
    fn boundary_exchange_zero_endpoint_and_precondition() {
        let set = sqrt_decay_set(1.5);
        let ts = linear_grid(0.05, 1.0, 30);
        let us: Vec<f64> = ts.iter().map(|&t| (t - 0.05) * (1.0 - t)).collect();
        let u = TestFunction::new(&ts, &us).unwrap();
        let frame = substitution_frame(&u, &set, 2.0).unwrap();
        let check = boundary_integral_check(&frame).unwrap();
        assert!(check.rhs.is_zero());
        // The telescoped lhs carries only rounding residue.
        assert!(check.lhs.abs().to_f64() <= 1e-12, "lhs = {:?}", check.lhs);
        assert!(check.pass);
        let improper = TestFunction::sample(&ts, |t| t + 0.1).unwrap();
        let frame2 = substitution_frame(&improper, &set, 2.0).unwrap();
        assert!(matches!(boundary_integral_check(&frame2), Err(Error::Precondition(_))));
    }

    #[test]
    fn boundary_exchange_random_profile_small_residual() {
        let set = sqrt_decay_set(2.0);
        let ts = linear_grid(0.05, 1.0, 50);
        let u = wiggly(&ts);
        let frame = substitution_frame(&u, &set, 2.0).unwrap();
        let check = boundary_integral_check(&frame).unwrap();
        assert!(check.residual.abs() <= 1e-6, "residual {}", check.residual);
    }

    #[test]
    fn branch_bounds_hold_pointwise() {
        for p in [1.5, 2.0, 3.0] {
            let set = sqrt_decay_set(p);
            let ts = linear_grid(0.05, 1.0, 40);
            let u = wiggly(&ts);
            let frame = substitution_frame(&u, &set, 1.5).unwrap();
            let check = branch_bounds_check(&frame).unwrap();
            assert!(check.pass, "p = {p}: margins {} / {}", check.worst_margin_a, check.worst_margin_b);
            assert!(check.checked_a + check.checked_b > 0);
        }
    }

    #[test]
    fn ground_state_on_ground_profile_has_nonpositive_rhs() {
        let set = unit_set(2.0);
        let ts = linear_grid(0.1, 1.0, 30);
        let u = TestFunction::sample(&ts, |t| (2.0 * t).sqrt()).unwrap();
        let frame = substitution_frame(&u, &set, 2.0).unwrap();
        let mask = vec![true; 30];
        let r = ground_state_check(&frame, Some(&mask), 1e-6).unwrap();
        // v is constant up to rounding, so the gradient energy is pure noise.
        assert!(r.lhs.abs().to_f64() <= 1e-20, "lhs = {:?}", r.lhs);
        assert!(r.rhs.is_negative(), "rhs = {:?}", r.rhs);
        assert!(r.pass);
    }

    #[test]
    fn ground_state_zero_function_zero_slack() {
        let set = unit_set(2.0);
        let ts = linear_grid(0.1, 1.0, 10);
        let u = TestFunction::new(&ts, &vec![0.0; 11]).unwrap();
        let frame = substitution_frame(&u, &set, 2.0).unwrap();
        let r = ground_state_check(&frame, None, 1e-6).unwrap();
        assert!(r.slack.is_zero());
        assert!(r.pass);
    }

    #[test]
    fn ground_state_full_grid_on_nondoubling_weight() {
        for p in [1.5, 2.0, 3.0] {
            let set = sqrt_decay_set(p);
            let ts = linear_grid(0.05, 1.0, 40);
            let u = wiggly(&ts);
            let frame = substitution_frame(&u, &set, 2.0).unwrap();
            let r = ground_state_check(&frame, None, 1e-6).unwrap();
            assert_eq!(r.inequality_id, "4.32'");
            assert!(r.pass, "p = {p}: slack_rel = {}", r.slack_rel);
            // Partial masks hold too.
            let mask: Vec<bool> = (0..40).map(|k| k % 3 != 0).collect();
            let rm = ground_state_check(&frame, Some(&mask), 1e-6).unwrap();
            assert_eq!(rm.inequality_id, "8.1");
            assert!(rm.pass, "p = {p} masked: slack_rel = {}", rm.slack_rel);
        }
    }

    #[test]
    fn assembled_remainder_holds_across_exponents() {
        for p in [1.5, 2.0, 3.0] {
            for set in [unit_set(p), sqrt_decay_set(p)] {
                let ts = linear_grid(0.05, 1.0, 40);
                let u = wiggly(&ts);
                let frame = substitution_frame(&u, &set, 2.0).unwrap();
                let r = assembled_remainder_check(&frame, 1e-6).unwrap();
                assert!(
                    r.pass,
                    "p = {p}, id {}: slack_rel = {}",
                    r.inequality_id,
                    r.slack_rel
                );
                assert_eq!(r.inequality_id, if p >= 2.0 { "4.22" } else { "4.23" });
            }
        }
    }

    #[test]
    fn weighted_t_bound_on_admissible_weight() {
        let set = sqrt_decay_set(2.0);
        let ts = linear_grid(0.05, 1.0, 40);
        let u = wiggly(&ts);
        let r = weighted_t_bound_check(&u, &set, None, 1e-6).unwrap();
        assert!(r.pass, "slack_rel = {}", r.slack_rel);
        assert!(r.slack_rel >= 0.0);
        // Zero function: both sides vanish.
        let z = TestFunction::new(&[0.1, 1.0], &[0.0, 0.0]).unwrap();
        let rz = weighted_t_bound_check(&z, &set, None, 1e-6).unwrap();
        assert!(rz.slack.is_zero());
    }

    #[test]
    fn weighted_t_bound_rejects_inadmissible_weight() {
        let spec =
            WeightSpec::new(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 1.0 }, 2.0).unwrap();
        let set = build_transforms(spec, TransformParams::new(2.0, 1.0, 1.0).unwrap()).unwrap();
        let ts = linear_grid(0.1, 1.0, 10);
        let u = TestFunction::sample(&ts, |t| t).unwrap();
        assert!(matches!(
            weighted_t_bound_check(&u, &set, None, 1e-6),
            Err(Error::Precondition(_))
        ));
    }
}
