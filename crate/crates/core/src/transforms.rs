//! The transform quadruple (f_η, F_η, G_η, g_η) of a classified weight.
//!
//! For a weight `w` on (0, η] with parameters p, η, μ:
//!
//! ```text
//! P class:  f_η(t) = μ + ∫_t^η 1/w           (decreasing in t, f_η(η) = μ)
//! Q class:  f_η(t) = ∫_0^t 1/w               (increasing, from 0)
//! F_η = w · f_η          the Hardy-potential denominator, liminf_0 F = 0
//! G_η(t) = μ + ∫_t^η 1/F_η                   (≥ μ, non-increasing)
//! g_η = (p' f_η)^{1/p'}                      the substitution profile
//! ```
//!
//! all frozen to their t = η values on [η, ∞) (for F_η the live weight still
//! multiplies the frozen bracket). G_η never needs a nested quadrature: from
//! (log f_η)' = s(w)/F_η it has the closed log forms
//! `G_η = log f_η − log μ + μ` (P) and `G_η = log f_η(η) − log f_η(t) + μ`
//! (Q), which this module uses throughout.
//!
//! Cumulative integrals of 1/w are evaluated through a thread-safe anchor
//! cache: each query integrates only the gap to the nearest previously
//! evaluated point, so a whole grid costs one pass. Values are held as
//! log f_η; for exponential weights f_η leaves f64 range from t ≈ 1/700.
//!
//! Precision envelope: log F_η = log w + log f_η incurs cancellation error
//! ≈ |log w(t)| · 2⁻⁵². For `e^{±1/t}`-type weights that is ~1e-10 relative
//! at t = 1e-6 and grows like 1/t below; F_η-dependent checks keep their
//! grids above t = 1e-6. (f_η, G_η, g_η have no such cancellation.)

use crate::error::{Error, Result};
use crate::lognum::{LogNum, LogSum};
use crate::quadrature::{integrate_ln, probe_divergence, QuadOptions, Verdict};
use crate::weights::{Kind, WeightFamily, WeightSpec};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Anchor-cache insertion ceiling: keeps dense sweeps from growing the map
/// without bound (≈ 80 MB at the cap). Queries beyond it still evaluate
/// correctly, integrating from the nearest retained anchor.
const ANCHOR_CAP: usize = 1 << 20;

/// Acceptance gate for the certified gap increment in [`TransformSet::prepare_grid`]:
/// the Richardson pair must agree to this relative error or the gap falls
/// back to the adaptive rule. Accumulated f values inherit at most the worst
/// per-gap increment error (f is the sum of its gap increments, so relative
/// errors average, not add), keeping prepared anchors at ~3e-10 even across
/// half a million gaps.
const PREP_INC_TOL: f64 = 3e-10;

/// Conjugate exponent p' = p/(p−1).
pub fn p_prime(p: f64) -> f64 {
    p / (p - 1.0)
}

/// The sharp one-dimensional Hardy constant Λ_p = (1/p')^p = ((p−1)/p)^p.
pub fn lambda_p(p: f64) -> f64 {
    ((p - 1.0) / p).powf(p)
}

/// The power-weight Hardy constant Λ_{α,p} = |1/p' − α|^p.
pub fn lambda_alpha_p(alpha: f64, p: f64) -> f64 {
    ((p - 1.0) / p - alpha).abs().powf(p)
}

#[derive(Clone, Copy, Debug)]
pub struct TransformParams {
    pub p: f64,
    pub eta: f64,
    pub mu: f64,
}

impl TransformParams {
    pub fn new(p: f64, eta: f64, mu: f64) -> Result<TransformParams> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("exponent p = {p} violates 1 < p < inf")));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("eta = {eta} must be in (0, inf)")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("mu = {mu} must be in (0, inf)")));
        }
        Ok(TransformParams { p, eta, mu })
    }

    /// Default μ = 1.
    pub fn with_default_mu(p: f64, eta: f64) -> Result<TransformParams> {
        TransformParams::new(p, eta, 1.0)
    }

    /// The power-weight preset coupling: for w = t^γ with γ = α·p' > 1,
    /// μ = η^(1−γ)/(γ−1) makes f_η(t) = t^(1−γ)/(γ−1) and F_η(t) = t/(γ−1)
    /// exactly.
    pub fn power_preset(p: f64, alpha: f64, eta: f64) -> Result<TransformParams> {
        let gamma = alpha * p_prime(p);
        if gamma <= 1.0 {
            return Err(Error::Domain(format!(
                "power preset needs alpha > 1/p' (gamma = {gamma} <= 1)"
            )));
        }
        TransformParams::new(p, eta, eta.powf(1.0 - gamma) / (gamma - 1.0))
    }

    pub fn p_prime(&self) -> f64 {
        p_prime(self.p)
    }

    pub fn lambda_p(&self) -> f64 {
        lambda_p(self.p)
    }
}

/// Which member of the quadruple to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformFn {
    /// f_η
    SmallF,
    /// F_η = w·f_η
    CapF,
    /// G_η
    CapG,
    /// g_η = (p' f_η)^{1/p'}
    SmallG,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    ClosedForm,
    Quadrature,
}

impl EvalMode {
    pub fn label(self) -> &'static str {
        match self {
            EvalMode::ClosedForm => "closed_form",
            EvalMode::Quadrature => "quadrature",
        }
    }
}

/// Immutable bundle of the transform quadruple for one (weight, p, η, μ).
pub struct TransformSet {
    spec: WeightSpec,
    class: crate::weights::WeightClass,
    params: TransformParams,
    mode: EvalMode,
    /// log f_η(η): the plateau value of f_η.
    ln_f_eta: f64,
    /// Write-once-per-point cache of (t bits → log f_η(t)).
    anchors: Mutex<BTreeMap<u64, f64>>,
    /// Last anchor gap served: (t_lo, t_hi, log f at the class's anchor end —
    /// t_hi for P, t_lo for Q). Quadrature nodes cluster inside one prepared
    /// segment, so this memo answers most queries without touching the map.
    gap_memo: Mutex<(f64, f64, f64)>,
    /// Bits of the fast-gap width in log t (0.0 = disabled); see
    /// [`TransformSet::enable_fast_gaps`].
    fast_gap_lnt: AtomicU64,
    opts: QuadOptions,
}

/// Build the quadruple, classifying the weight on the way. Closed forms are
/// selected for the plain power families; everything else integrates.
pub fn build_transforms(spec: WeightSpec, params: TransformParams) -> Result<TransformSet> {
    let mode = if spec.power_exponent().is_some() {
        EvalMode::ClosedForm
    } else {
        EvalMode::Quadrature
    };
    build_transforms_with_mode(spec, params, mode)
}

/// As [`build_transforms`] but with the evaluation mode forced — lets tests
/// cross-check quadrature against the power closed forms.
pub fn build_transforms_with_mode(
    spec: WeightSpec,
    params: TransformParams,
    mode: EvalMode,
) -> Result<TransformSet> {
    let class = spec.classify(params.eta)?;
    build_with_class(spec, params, mode, class)
}

/// Internal build for the admissibility probe itself: classifies the kind
/// only, leaving the class's `admissible` field pessimistic. Evaluation of
/// the quadruple never reads that field, and going through the full
/// [`WeightSpec::classify`] here would recurse for tabulated weights (their
/// classification runs the admissibility probe, which needs G_η).
pub(crate) fn build_for_probe(spec: WeightSpec, params: TransformParams) -> Result<TransformSet> {
    let (kind, limit_at_zero) = spec.kind_and_limit(params.eta)?;
    let class = crate::weights::WeightClass {
        kind,
        switching_sign: kind.switching_sign(),
        limit_at_zero,
        admissible: false,
        admissibility_constant: None,
    };
    let mode = if spec.power_exponent().is_some() {
        EvalMode::ClosedForm
    } else {
        EvalMode::Quadrature
    };
    build_with_class(spec, params, mode, class)
}

fn build_with_class(
    spec: WeightSpec,
    params: TransformParams,
    mode: EvalMode,
    class: crate::weights::WeightClass,
) -> Result<TransformSet> {
    if spec.p != params.p {
        return Err(Error::BadInput(format!(
            "weight spec carries p = {} but params carry p = {}",
            spec.p, params.p
        )));
    }
    if mode == EvalMode::ClosedForm && spec.power_exponent().is_none() {
        return Err(Error::BadInput(
            "closed-form mode exists only for constant/power weights".into(),
        ));
    }
    let opts = QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 0.0, // value scales are arbitrary; only relative error means anything
        ..QuadOptions::default()
    };
    let mut anchors = BTreeMap::new();
    let ln_f_eta = match (class.kind, mode) {
        (Kind::P, _) => params.mu.ln(),
        (Kind::Q, EvalMode::ClosedForm) => {
            let gamma = spec.power_exponent().unwrap();
            (1.0 - gamma) * params.eta.ln() - (1.0 - gamma).ln()
        }
        (Kind::Q, EvalMode::Quadrature) => match &spec.family {
            WeightFamily::UserTable(table) => {
                // No data below the table floor: seed the head integral by
                // probe extrapolation at a point a few probe levels up.
                let t_base = (table.t_min() * 4.0_f64.powi(7)).min(params.eta);
                let levels = ((t_base / table.t_min()).ln() / 4.0_f64.ln()).floor() as usize;
                let inv_w = {
                    let spec = spec.clone();
                    move |s: f64| spec.eval_log_weight(s).map(|l| -l).unwrap_or(f64::NAN)
                };
                let probe = probe_divergence(&inv_w, t_base, levels.max(6))?;
                let base_ln = match probe.verdict {
                    Verdict::Convergent { value } => value.ln(),
                    _ => {
                        return Err(Error::Inconclusive(
                            "head integral of 1/w not summable from table data".into(),
                        ))
                    }
                };
                anchors.insert(t_base.to_bits(), base_ln);
                if t_base == params.eta {
                    base_ln
                } else {
                    let gap = integrate_ln(&inv_w, t_base, params.eta, &opts)?;
                    LogNum::from_ln(base_ln).add(gap.value).ln()
                }
            }
            _ => {
                let inv_w = {
                    let spec = spec.clone();
                    move |s: f64| spec.eval_log_weight(s).map(|l| -l).unwrap_or(f64::NAN)
                };
                integrate_ln(&inv_w, 0.0, params.eta, &opts.singular(true))?
                    .value
                    .ln()
            }
        },
    };
    anchors.insert(params.eta.to_bits(), ln_f_eta);
    Ok(TransformSet {
        spec,
        class,
        params,
        mode,
        ln_f_eta,
        anchors: Mutex::new(anchors),
        gap_memo: Mutex::new((f64::NAN, f64::NAN, f64::NAN)),
        fast_gap_lnt: AtomicU64::new(0),
        opts,
    })
}

/// ln(f(anchor) + ∫_lo^hi 1/w) by a single Simpson pass. Only used across
/// gaps the caller has certified as narrow; relative error of the increment
/// is O((Δ log-integrand)⁴), ≈ 1e-12 at the gap widths prepared grids emit.
fn simpson_gap_add(spec: &WeightSpec, ln_fa: f64, lo: f64, hi: f64) -> Result<f64> {
    let sixth = (hi - lo) / 6.0;
    if sixth <= 0.0 {
        return Ok(ln_fa);
    }
    let mut s = LogSum::new();
    s.add_ln(sixth.ln() - spec.eval_log_weight(lo)?);
    s.add_ln((4.0 * sixth).ln() - spec.eval_log_weight(0.5 * (lo + hi))?);
    s.add_ln(sixth.ln() - spec.eval_log_weight(hi)?);
    Ok(LogNum::from_ln(ln_fa).add(s.value()).ln())
}

impl TransformSet {
    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn class(&self) -> &crate::weights::WeightClass {
        &self.class
    }

    pub fn params(&self) -> &TransformParams {
        &self.params
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    /// Switching sign s(w) as a float: −1 (P) or +1 (Q).
    pub fn switching_sign(&self) -> f64 {
        f64::from(self.class.switching_sign)
    }

    /// log f_η(t) (plateau included).
    pub fn ln_f(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("transform evaluated at t = {t}, needs t > 0")));
        }
        if t >= self.params.eta {
            return Ok(self.ln_f_eta);
        }
        match self.mode {
            EvalMode::ClosedForm => Ok(self.ln_f_closed(t)),
            EvalMode::Quadrature => self.ln_f_anchored(t),
        }
    }

    fn ln_f_closed(&self, t: f64) -> f64 {
        let gamma = self.spec.power_exponent().expect("closed form is power-only");
        let (eta, mu) = (self.params.eta, self.params.mu);
        if gamma > 1.0 {
            // f = μ + (t^(1−γ) − η^(1−γ))/(γ−1); t^(1−γ) can exceed f64.
            let a = LogNum::from_ln((1.0 - gamma) * t.ln());
            let b = LogNum::from_ln((1.0 - gamma) * eta.ln());
            LogNum::from_f64(mu)
                .add(a.sub(b).scale(1.0 / (gamma - 1.0)))
                .ln()
        } else if gamma == 1.0 {
            (mu + (eta / t).ln()).ln()
        } else {
            (1.0 - gamma) * t.ln() - (1.0 - gamma).ln()
        }
    }

    fn ln_f_anchored(&self, t: f64) -> Result<f64> {
        self.ln_f_anchored_impl(t, false)
    }

    fn ln_f_anchored_impl(&self, t: f64, force_anchor: bool) -> Result<f64> {
        let fast_gap = if force_anchor {
            0.0
        } else {
            f64::from_bits(self.fast_gap_lnt.load(Ordering::Relaxed))
        };
        if fast_gap > 0.0 {
            let (lo, hi, ln_fa) = *self.gap_memo.lock().unwrap();
            if lo < t && t < hi && (hi / lo).ln() <= fast_gap {
                return match self.class.kind {
                    Kind::P => simpson_gap_add(&self.spec, ln_fa, t, hi),
                    Kind::Q => simpson_gap_add(&self.spec, ln_fa, lo, t),
                };
            }
        }
        let mut anchors = self.anchors.lock().unwrap();
        if let Some(&v) = anchors.get(&t.to_bits()) {
            return Ok(v);
        }
        let inv_w = |s: f64| self.spec.eval_log_weight(s).map(|l| -l).unwrap_or(f64::NAN);
        let value = match self.class.kind {
            Kind::P => {
                // f(t) = f(anchor) + ∫_t^anchor 1/w, nearest anchor above.
                let (&bits, &ln_fa) = anchors
                    .range(t.to_bits()..)
                    .next()
                    .expect("η anchor always present");
                let ta = f64::from_bits(bits);
                if (ta / t).ln() <= fast_gap {
                    if let Some((&lb, _)) = anchors.range(..t.to_bits()).next_back() {
                        *self.gap_memo.lock().unwrap() = (f64::from_bits(lb), ta, ln_fa);
                    }
                    return simpson_gap_add(&self.spec, ln_fa, t, ta);
                }
                let gap = integrate_ln(&inv_w, t, ta, &self.opts)?;
                LogNum::from_ln(ln_fa).add(gap.value).ln()
            }
            Kind::Q => {
                if let Some((&bits, &ln_fa)) = anchors.range(..=t.to_bits()).next_back() {
                    // f(t) = f(anchor) + ∫_anchor^t 1/w, nearest anchor below.
                    let ta = f64::from_bits(bits);
                    if (t / ta).ln() <= fast_gap {
                        if let Some((&hb, _)) = anchors.range(t.to_bits()..).next() {
                            *self.gap_memo.lock().unwrap() = (ta, f64::from_bits(hb), ln_fa);
                        }
                        return simpson_gap_add(&self.spec, ln_fa, ta, t);
                    }
                    let gap = integrate_ln(&inv_w, ta, t, &self.opts)?;
                    LogNum::from_ln(ln_fa).add(gap.value).ln()
                } else if matches!(self.spec.family, WeightFamily::UserTable(_)) {
                    // Below the seeded base anchor: subtract the gap from it.
                    // Guarded: if the gap eats the anchor value, the data
                    // cannot resolve f(t).
                    let (&bits, &ln_fa) = anchors.range(..).next().expect("base anchor");
                    let ta = f64::from_bits(bits);
                    let gap = integrate_ln(&inv_w, t, ta, &self.opts)?;
                    let f = LogNum::from_ln(ln_fa).sub(gap.value);
                    if f.is_zero() || f.ln_abs() < ln_fa - 34.5 {
                        return Err(Error::Inconclusive(format!(
                            "table head integral at t = {t:e} lost to cancellation; \
                             tabulate deeper or query larger t"
                        )));
                    }
                    f.ln()
                } else {
                    integrate_ln(&inv_w, 0.0, t, &self.opts.singular(true))?
                        .value
                        .ln()
                }
            }
        };
        if force_anchor || anchors.len() < ANCHOR_CAP {
            anchors.insert(t.to_bits(), value);
        }
        Ok(value)
    }

    /// G_η(t) as a plain value (G is at most ~log-of-everything, so f64
    /// holds it even where f_η itself overflows).
    pub fn g_cap(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("transform evaluated at t = {t}, needs t > 0")));
        }
        if t >= self.params.eta {
            return Ok(self.params.mu);
        }
        let ln_f = self.ln_f(t)?;
        let diff = match self.class.kind {
            Kind::P => ln_f - self.params.mu.ln(),
            Kind::Q => self.ln_f_eta - ln_f,
        };
        // Chained-anchor noise can push diff fractionally below 0 near η.
        Ok(self.params.mu + diff.max(0.0))
    }

    /// Evaluate one member of the quadruple; values are returned in log
    /// space because f_η, F_η, g_η overflow f64 for the exponential weights.
    pub fn eval(&self, which: TransformFn, t: f64) -> Result<LogNum> {
        Ok(match which {
            TransformFn::SmallF => LogNum::from_ln(self.ln_f(t)?),
            TransformFn::CapF => {
                LogNum::from_ln(self.spec.eval_log_weight(t)? + self.ln_f(t)?)
            }
            TransformFn::CapG => LogNum::from_f64(self.g_cap(t)?),
            TransformFn::SmallG => {
                let pp = self.params.p_prime();
                LogNum::from_ln((pp.ln() + self.ln_f(t)?) / pp)
            }
        })
    }

    /// log F_η(t) — see the module docs for the precision envelope.
    pub fn ln_f_cap(&self, t: f64) -> Result<f64> {
        Ok(self.spec.eval_log_weight(t)? + self.ln_f(t)?)
    }

    /// Pre-fill the anchor cache along an ascending grid. Nodes are anchored
    /// unconditionally — the fast-gap shortcut never skips them. Consecutive
    /// nodes are chained by the certified Simpson increment when its error
    /// gate passes (a few weight evaluations per gap), and by the adaptive
    /// rule from the nearest anchor otherwise, so preparing the half-million
    /// node grids of a deep sharpness row costs fractions of a second.
    pub fn prepare_grid(&self, ts: &[f64]) -> Result<()> {
        if self.mode == EvalMode::ClosedForm {
            return Ok(());
        }
        // Chain in the class's integration direction: downward for P (f is
        // accumulated toward 0), upward for Q (accumulated toward η).
        let order: Box<dyn Iterator<Item = &f64>> = match self.class.kind {
            Kind::P => Box::new(ts.iter().rev()),
            Kind::Q => Box::new(ts.iter()),
        };
        let mut prev: Option<(f64, f64)> = None;
        for &t in order {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Domain(format!(
                    "transform evaluated at t = {t}, needs t > 0"
                )));
            }
            if t >= self.params.eta {
                continue; // plateau: the η anchor is always present
            }
            if let Some(&v) = self.anchors.lock().unwrap().get(&t.to_bits()) {
                prev = Some((t, v));
                continue;
            }
            let mut chained = None;
            if let Some((tp, ln_fp)) = prev {
                let (lo, hi) = match self.class.kind {
                    Kind::P => (t, tp),
                    Kind::Q => (tp, t),
                };
                if lo < hi {
                    if let Some(inc) = self.certified_inc(lo, hi)? {
                        chained = Some(LogNum::from_ln(ln_fp).add(inc).ln());
                    }
                }
            }
            let value = match chained {
                Some(v) => {
                    self.anchors.lock().unwrap().insert(t.to_bits(), v);
                    v
                }
                None => self.ln_f_anchored_impl(t, true)?,
            };
            prev = Some((t, value));
        }
        Ok(())
    }

    /// ∫_lo^hi 1/w by a five-node composite Simpson pair, accepted only when
    /// the embedded coarse/fine comparison certifies the increment to
    /// [`PREP_INC_TOL`]; `None` sends the caller to the adaptive rule. The
    /// accepted value carries the Richardson correction (fine − coarse)/15,
    /// pushing the residual to O((Δ log 1/w)⁶) across the gap.
    fn certified_inc(&self, lo: f64, hi: f64) -> Result<Option<LogNum>> {
        let q = 0.25 * (hi - lo);
        let nodes = [lo, lo + q, lo + 2.0 * q, lo + 3.0 * q, hi];
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Ok(None); // gap below f64 spacing: nothing to integrate
        }
        let mut ln = [0.0_f64; 5];
        for (l, &t) in ln.iter_mut().zip(&nodes) {
            *l = -self.spec.eval_log_weight(t)?;
        }
        let simpson = |width: f64, l0: f64, lm: f64, l1: f64| -> LogNum {
            let sixth = width / 6.0;
            LogNum::from_ln(sixth.ln() + l0)
                .add(LogNum::from_ln((4.0 * sixth).ln() + lm))
                .add(LogNum::from_ln(sixth.ln() + l1))
        };
        let half = 0.5 * (hi - lo);
        let coarse = simpson(hi - lo, ln[0], ln[2], ln[4]);
        let fine = simpson(half, ln[0], ln[1], ln[2]).add(simpson(half, ln[2], ln[3], ln[4]));
        let gap = fine.sub(coarse);
        if gap.is_zero() || gap.ln_abs() - 15.0_f64.ln() <= fine.ln_abs() + PREP_INC_TOL.ln() {
            return Ok(Some(fine.add(gap.scale(1.0 / 15.0))));
        }
        Ok(None)
    }

    /// Let queries within `max_lnt_gap` (in log t) of an existing anchor
    /// evaluate their gap integral by a single Simpson pass instead of the
    /// adaptive rule. Sound only when the caller guarantees the integrand
    /// 1/w varies by a bounded factor (≲ e^0.1) across any gap that narrow —
    /// true for grids from [`TransformSet::prepare_grid`] whose steps were
    /// graded so that log f moves ≤ ~0.02 per step. Pass 0.0 to disable.
    pub fn enable_fast_gaps(&self, max_lnt_gap: f64) {
        assert!(
            max_lnt_gap >= 0.0 && max_lnt_gap.is_finite(),
            "fast-gap width must be finite and >= 0"
        );
        self.fast_gap_lnt.store(max_lnt_gap.to_bits(), Ordering::Relaxed);
    }
}

/// One row of the derivative-identity check.
#[derive(Clone, Debug)]
pub struct DerivativeRow {
    pub t: f64,
    pub identity: &'static str,
    pub finite_difference: f64,
    pub analytic: f64,
    pub rel_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct DerivativeCheck {
    pub rows: Vec<DerivativeRow>,
    pub worst_rel: f64,
    pub pass: bool,
    /// Set when the check cannot run (tabulated weights carry no certified
    /// smoothness).
    pub skipped: Option<String>,
}

/// Check the four derivative identities of the quadruple against centered
/// finite differences at each grid point:
///
/// ```text
/// (log f_η)' = s(w)/F_η      G_η' = −1/F_η
/// (log G_η)' = −1/(F_η G_η)  (G_η^{−1})' = +1/(F_η G_η²)
/// ```
pub fn check_derivative_identities(
    set: &TransformSet,
    grid: &[f64],
    tol: f64,
) -> Result<DerivativeCheck> {
    if matches!(set.spec().family, WeightFamily::UserTable(_)) {
        return Ok(DerivativeCheck {
            rows: Vec::new(),
            worst_rel: 0.0,
            pass: true,
            skipped: Some(
                "tabulated weight: smoothness not certifiable from samples, \
                 derivative identities skipped"
                    .into(),
            ),
        });
    }
    let eta = set.params().eta;
    let s = set.switching_sign();
    let mut rows = Vec::with_capacity(grid.len() * 4);
    let mut worst: f64 = 0.0;
    for &t in grid {
        if !(t > 0.0 && t < eta) {
            return Err(Error::Domain(format!(
                "derivative grid point {t} outside (0, eta)"
            )));
        }
        let mut h = 1e-4 * t;
        if t + h >= eta {
            h = 0.5 * (eta - t);
        }
        let inv_f_cap = LogNum::from_ln(-set.ln_f_cap(t)?);
        let g_cap = set.g_cap(t)?;
        let (lf_m, lf_p) = (set.ln_f(t - h)?, set.ln_f(t + h)?);
        let (g_m, g_p) = (set.g_cap(t - h)?, set.g_cap(t + h)?);
        let checks: [(&'static str, f64, f64); 4] = [
            ("dlogf", (lf_p - lf_m) / (2.0 * h), inv_f_cap.scale(s).to_f64()),
            ("dG", (g_p - g_m) / (2.0 * h), -inv_f_cap.to_f64()),
            (
                "dlogG",
                (g_p.ln() - g_m.ln()) / (2.0 * h),
                -inv_f_cap.to_f64() / g_cap,
            ),
            (
                "dinvG",
                (1.0 / g_p - 1.0 / g_m) / (2.0 * h),
                inv_f_cap.to_f64() / (g_cap * g_cap),
            ),
        ];
        for (identity, fd, an) in checks {
            let scale = fd.abs().max(an.abs());
            let rel = if scale == 0.0 { 0.0 } else { (fd - an).abs() / scale };
            worst = worst.max(rel);
            rows.push(DerivativeRow {
                t,
                identity,
                finite_difference: fd,
                analytic: an,
                rel_residual: rel,
                pass: rel <= tol,
            });
        }
    }
    Ok(DerivativeCheck {
        pass: rows.iter().all(|r| r.pass),
        rows,
        worst_rel: worst,
        skipped: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Sign;

    fn spec(family: WeightFamily, p: f64) -> WeightSpec {
        WeightSpec::new(family, p).unwrap()
    }

    fn close_ln(got_ln: f64, want: f64, tol: f64) {
        let want_ln = want.ln();
        assert!(
            (got_ln - want_ln).abs() < tol,
            "log values differ: {got_ln} vs {want_ln}"
        );
    }

    #[test]
    fn constant_weight_is_the_identity_transform() {
        // w = 1 (Q): f = t, F = t, G = μ + log(η/t), g = (p' t)^{1/p'}.
        let set = build_transforms(
            spec(WeightFamily::Constant, 2.0),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        close_ln(set.ln_f(0.3).unwrap(), 0.3, 1e-12);
        close_ln(set.ln_f_cap(0.3).unwrap(), 0.3, 1e-12);
        assert!((set.g_cap(0.25).unwrap() - (1.0 + 4.0_f64.ln())).abs() < 1e-12);
        let g = set.eval(TransformFn::SmallG, 0.5).unwrap().to_f64();
        assert!((g - 1.0).abs() < 1e-12); // √(2·0.5)
    }

    #[test]
    fn power_preset_reproduces_the_worked_example() {
        // p = 2, α = 1 → w = t², preset μ = 1 at η = 1: f = 1/t, F = t,
        // G = 1 + log(1/t).
        let params = TransformParams::power_preset(2.0, 1.0, 1.0).unwrap();
        assert!((params.mu - 1.0).abs() < 1e-15);
        let set = build_transforms(spec(WeightFamily::Power { alpha: 1.0 }, 2.0), params).unwrap();
        assert_eq!(set.mode(), EvalMode::ClosedForm);
        close_ln(set.ln_f(0.25).unwrap(), 4.0, 1e-12);
        close_ln(set.ln_f_cap(0.5).unwrap(), 0.5, 1e-12);
        assert!((set.g_cap(0.1).unwrap() - (1.0 + 10.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn critical_power_has_the_log_bracket() {
        // α = 1/p' (γ = 1): F = t(μ + log(η/t)).
        let set = build_transforms(
            spec(WeightFamily::Power { alpha: 0.5 }, 2.0),
            TransformParams::new(2.0, 1.0, 0.7).unwrap(),
        )
        .unwrap();
        let want = 0.3 * (0.7 + (1.0_f64 / 0.3).ln());
        close_ln(set.ln_f_cap(0.3).unwrap(), want, 1e-12);
    }

    #[test]
    fn closed_form_and_quadrature_agree_for_powers() {
        for alpha in [0.25, 0.5, 1.0, 1.5] {
            let params = TransformParams::new(2.0, 1.0, 1.0).unwrap();
            let w = WeightFamily::Power { alpha };
            let closed = build_transforms(spec(w.clone(), 2.0), params).unwrap();
            let quad =
                build_transforms_with_mode(spec(w, 2.0), params, EvalMode::Quadrature).unwrap();
            for i in 0..20 {
                let t = 1e-3_f64 * 1000.0_f64.powf(i as f64 / 19.0);
                let a = closed.ln_f(t).unwrap();
                let b = quad.ln_f(t).unwrap();
                assert!(
                    (a - b).abs() < 1e-8,
                    "alpha {alpha}, t {t}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn exponential_tail_integrals_match_oracles() {
        // P: w = e^{-1/t}, μ = 1, η = 1: f(t) = 1 + ∫_t^1 e^{1/s} ds.
        // Oracle values from an independent arbitrary-precision integrator.
        let set = build_transforms(
            spec(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 1.0 }, 2.0),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        close_ln(set.ln_f(0.5).unwrap(), 1.0 + 2.082870318639674, 1e-9);
        close_ln(set.ln_f(0.05).unwrap(), 1.0 + 1357393.716731087, 1e-9);
        // Deep probe: log f(1e-3) ≈ log(1 + e^{986.1865}) = 986.1865...
        assert!((set.ln_f(1e-3).unwrap() - 986.186493456776858).abs() < 1e-6);

        // Q: w = e^{1/t}: f(t) = ∫_0^t e^{-1/s} ds.
        let set = build_transforms(
            spec(WeightFamily::ExpInvPow { sign: Sign::Pos, beta: 1.0 }, 2.0),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        close_ln(set.ln_f(0.5).unwrap(), 0.0187671309102452264, 1e-9);
        close_ln(set.ln_f(1.0).unwrap(), 0.148495506775922048, 1e-9);
        assert!((set.ln_f(1e-3).unwrap() - (-1013.8175065725574)).abs() < 1e-6);
    }

    #[test]
    fn exact_antiderivative_family() {
        // w = t² e^{1/t} (Q): ∫_0^t s^{-2} e^{-1/s} ds = e^{-1/t} exactly,
        // so log f = -1/t and F = t² exactly.
        let set = build_transforms(
            spec(
                WeightFamily::PowerTimesExp { alpha: 1.0, sign: Sign::Pos, beta: 1.0 },
                2.0,
            ),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!((set.ln_f(0.1).unwrap() - (-10.0)).abs() < 1e-9);
        assert!((set.ln_f_cap(0.01).unwrap() - 2.0 * 0.01_f64.ln()).abs() < 1e-8);

        // w = t² e^{-1/t} (P): f(t) = μ + e^{1/t} − e^{1/η}.
        let set = build_transforms(
            spec(
                WeightFamily::PowerTimesExp { alpha: 1.0, sign: Sign::Neg, beta: 1.0 },
                2.0,
            ),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let want = 1.0 + (1.0_f64 / 0.05).exp() - 1.0_f64.exp();
        close_ln(set.ln_f(0.05).unwrap(), want, 1e-9);
    }

    #[test]
    fn exponential_asymptotics_f_cap_over_t_squared() {
        // F/t² → 1 as t → 0 for w = e^{±1/t}; frozen oracle values at 1e-3.
        let p_set = build_transforms(
            spec(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 1.0 }, 2.0),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let ratio_ln = p_set.ln_f_cap(1e-3).unwrap() - 2.0 * 1e-3_f64.ln();
        assert!((ratio_ln.exp() - 1.002006024120725).abs() < 1e-6, "{}", ratio_ln.exp());
        let q_set = build_transforms(
            spec(WeightFamily::ExpInvPow { sign: Sign::Pos, beta: 1.0 }, 2.0),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let ratio_ln = q_set.ln_f_cap(1e-3).unwrap() - 2.0 * 1e-3_f64.ln();
        assert!((ratio_ln.exp() - 0.998005976119285).abs() < 1e-6, "{}", ratio_ln.exp());
    }

    #[test]
    fn plateaus_freeze_at_eta() {
        let set = build_transforms(
            spec(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 0.5 }, 2.0),
            TransformParams::new(2.0, 0.5, 0.8).unwrap(),
        )
        .unwrap();
        assert_eq!(set.g_cap(1.0).unwrap(), 0.8);
        assert_eq!(set.ln_f(0.5).unwrap(), set.ln_f(2.3).unwrap());
        // F keeps the live weight against the frozen bracket.
        let expect = set.spec().eval_log_weight(1.0).unwrap() + set.ln_f(0.5).unwrap();
        assert_eq!(set.ln_f_cap(1.0).unwrap(), expect);
    }

    #[test]
    fn g_log_form_matches_direct_quadrature() {
        // G = μ + ∫_t^η 1/F: the closed log form must agree with brute force.
        let set = build_transforms(
            spec(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 0.5 }, 2.0),
            TransformParams::new(2.0, 1.0, 0.8).unwrap(),
        )
        .unwrap();
        for t in [0.2, 0.6] {
            let direct = crate::quadrature::integrate(
                &|s: f64| -set.ln_f_cap(s).unwrap(),
                t,
                1.0,
                &QuadOptions::with_rel_tol(1e-11),
            )
            .unwrap();
            let want = 0.8 + direct.value;
            let got = set.g_cap(t).unwrap();
            assert!((got - want).abs() < 1e-8 * want, "t {t}: {got} vs {want}");
        }
    }

    #[test]
    fn f_cap_vanishes_at_the_origin() {
        // liminf F = 0: deep probes must collapse relative to F(η).
        for family in [
            WeightFamily::Constant,
            WeightFamily::Power { alpha: 1.0 },
            WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 1.0 },
            WeightFamily::ExpInvPow { sign: Sign::Pos, beta: 0.5 },
        ] {
            let set = build_transforms(
                spec(family, 2.0),
                TransformParams::new(2.0, 1.0, 1.0).unwrap(),
            )
            .unwrap();
            let deep = set.ln_f_cap(1e-6).unwrap();
            let top = set.ln_f_cap(1.0).unwrap();
            assert!(deep < top - 10.0_f64.ln(), "{:?}", set.spec().family);
        }
    }

    #[test]
    fn derivative_identities_hold() {
        let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        // Exact closed forms: residual is pure finite-difference truncation.
        let set = build_transforms(
            spec(WeightFamily::Power { alpha: 1.0 }, 2.0),
            TransformParams::power_preset(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let report = check_derivative_identities(&set, &grid, 1e-6).unwrap();
        assert!(report.pass, "worst {}", report.worst_rel);
        assert!(report.worst_rel < 1e-7);
        // Quadrature mode, admissible exponential weight.
        let set = build_transforms(
            spec(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 0.5 }, 2.0),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let report = check_derivative_identities(&set, &[0.1, 0.4, 0.8], 1e-6).unwrap();
        assert!(report.pass, "worst {}", report.worst_rel);
    }

    #[test]
    fn table_weights_skip_derivative_checks() {
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = 1e-9_f64 * (1e9_f64).powf(i as f64 / 199.0);
                (t, -t.ln())
            })
            .collect();
        let table = crate::weights::WeightTable::new(&pts).unwrap();
        let set = build_transforms(
            spec(WeightFamily::UserTable(table), 2.0),
            TransformParams::new(2.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let report = check_derivative_identities(&set, &[0.5], 1e-6).unwrap();
        assert!(report.pass && report.skipped.is_some());
        // The transform itself still evaluates: w = 1/t → f = t²/2.
        close_ln(set.ln_f(0.5).unwrap(), 0.125, 1e-6);
    }

    #[test]
    fn admissibility_probe_needs_transforms() {
        // Full-circle check now that transforms exist: the probe verdicts
        // match the analytic admissibility rules.
        let not_adm = spec(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 1.0 }, 2.0)
            .check_admissible(1.0, 1.0)
            .unwrap();
        assert!(!not_adm.admissible && not_adm.violation.is_some());
        let adm = spec(WeightFamily::ExpInvPow { sign: Sign::Neg, beta: 0.5 }, 2.0)
            .check_admissible(1.0, 1.0)
            .unwrap();
        assert!(adm.admissible);
        let k = adm.constant.unwrap();
        // Witness bounds every probe.
        assert!(adm.probes.iter().all(|&(_, q)| q <= k));
        let q_adm = spec(WeightFamily::ExpInvPow { sign: Sign::Pos, beta: 0.5 }, 2.0)
            .check_admissible(1.0, 1.0)
            .unwrap();
        assert!(q_adm.admissible);
        let pw = spec(WeightFamily::Power { alpha: 1.0 }, 2.0)
            .check_admissible(1.0, 1.0)
            .unwrap();
        assert!(pw.admissible);
    }

    #[test]
    fn plain_constants() {
        assert!((p_prime(2.0) - 2.0).abs() < 1e-15);
        assert!((p_prime(1.5) - 3.0).abs() < 1e-15);
        assert!((lambda_p(2.0) - 0.25).abs() < 1e-15);
        assert!((lambda_p(3.0) - 8.0 / 27.0).abs() < 1e-15);
        assert!((lambda_alpha_p(0.0, 2.0) - 0.25).abs() < 1e-15);
        assert!((lambda_alpha_p(1.0, 2.0) - 0.25).abs() < 1e-15);
    }
}
