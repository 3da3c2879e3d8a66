//! Weight families on (0, η] and their classification.
//!
//! A weight is a positive C¹ function `w` on (0, ∞) with a (possibly
//! infinite) limit at 0. Everything downstream keys off one dichotomy at the
//! origin:
//!
//! - class **P**: `1/w` is *not* integrable on (0, η)  — switching sign −1;
//! - class **Q**: `1/w` *is* integrable on (0, η)      — switching sign +1.
//!
//! The class decides the shape of the transform `f_η` (tail vs. head
//! integral of `1/w`) and whether the inequality's boundary term is a credit
//! or a cost. A weight is *admissible* when its tail integral respects an
//! `e^{±K/√t}` envelope — equivalently, `√t · G_η(t)` stays bounded — which
//! is what the remainder-term theorems additionally require. `e^{±1/√t}`
//! are admissible; `e^{±1/t}` are not.
//!
//! All evaluation is in log space: `e^{1/t}` overflows `f64` from `t ≈ 1/700`
//! on, and the built-in families exist precisely to probe that regime.

use crate::error::{Error, Result};
use crate::quadrature::{probe_divergence, Verdict};
use crate::transforms::{TransformFn, TransformParams};

/// Sign of the exponent in the exponential weight families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Neg => -1.0,
            Sign::Pos => 1.0,
        }
    }

    pub fn from_i64(v: i64) -> Result<Sign> {
        match v {
            -1 => Ok(Sign::Neg),
            1 => Ok(Sign::Pos),
            other => Err(Error::BadInput(format!(
                "sign must be -1 or 1, got {other}"
            ))),
        }
    }
}

/// Tabulated weight: strictly increasing abscissae with log-values,
/// interpolated linearly in (log t, log w).
#[derive(Clone, Debug)]
pub struct WeightTable {
    ts: Vec<f64>,
    ln_ws: Vec<f64>,
}

impl WeightTable {
    /// Build from `(t, log w)` samples.
    pub fn new(points: &[(f64, f64)]) -> Result<WeightTable> {
        if points.len() < 2 {
            return Err(Error::BadInput("weight table needs >= 2 points".into()));
        }
        let mut ts = Vec::with_capacity(points.len());
        let mut ln_ws = Vec::with_capacity(points.len());
        for &(t, ln_w) in points {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::BadInput(format!("table abscissa {t} not in (0, inf)")));
            }
            if !ln_w.is_finite() {
                return Err(Error::BadInput(format!("table log-value {ln_w} not finite")));
            }
            if let Some(&prev) = ts.last() {
                if t <= prev {
                    return Err(Error::BadInput(
                        "table abscissae must be strictly increasing".into(),
                    ));
                }
            }
            ts.push(t);
            ln_ws.push(ln_w);
        }
        Ok(WeightTable { ts, ln_ws })
    }

    pub fn t_min(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    fn ln_w(&self, t: f64) -> Result<f64> {
        if t < self.t_min() || t > self.t_max() {
            return Err(Error::Domain(format!(
                "t = {t:e} outside table range [{:e}, {:e}]; tabulated weights are not extrapolated",
                self.t_min(),
                self.t_max()
            )));
        }
        let i = match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return Ok(self.ln_ws[i]),
            Err(i) => i - 1, // t > ts[0] here, so i >= 1
        };
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let th = (t.ln() - t0.ln()) / (t1.ln() - t0.ln());
        Ok(self.ln_ws[i] * (1.0 - th) + self.ln_ws[i + 1] * th)
    }
}

/// The built-in weight families plus user tables.
#[derive(Clone, Debug)]
pub enum WeightFamily {
    /// w = 1.
    Constant,
    /// w = t^(α·p'): the exponent is parametrized by α so the critical value
    /// sits at α = 1/p' for every p.
    Power { alpha: f64 },
    /// w = exp(sign · t^(−β)), β > 0: degenerates (−) or blows up (+) at 0
    /// in infinite order; non-doubling.
    ExpInvPow { sign: Sign, beta: f64 },
    /// w = t^(α·p') · exp(sign · t^(−β)).
    PowerTimesExp { alpha: f64, sign: Sign, beta: f64 },
    /// Tabulated weight; classification is numerical.
    UserTable(WeightTable),
}

/// A weight family paired with the Lebesgue exponent it will be used with.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub family: WeightFamily,
    pub p: f64,
}

/// P/Q verdict with the derived switching data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    P,
    Q,
}

impl Kind {
    pub fn switching_sign(self) -> i8 {
        match self {
            Kind::P => -1,
            Kind::Q => 1,
        }
    }
}

/// Behaviour of w(t) as t → 0+.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LimitAtZero {
    Zero,
    Finite(f64),
    Infinite,
}

#[derive(Clone, Debug)]
pub struct WeightClass {
    pub kind: Kind,
    /// −1 for P, +1 for Q.
    pub switching_sign: i8,
    pub limit_at_zero: LimitAtZero,
    /// Whether the weight obeys the √t-envelope; analytic for built-in
    /// families (exponential families: β ≤ 1/2), probe-based for tables.
    pub admissible: bool,
    /// Witness constant from [`WeightSpec::check_admissible`]; `None` until
    /// the probe has run.
    pub admissibility_constant: Option<f64>,
}

/// Result of the √t·G_η boundedness probe.
#[derive(Clone, Debug)]
pub struct AdmissibilityProbe {
    pub admissible: bool,
    /// Witness K (5% above the largest probe) when admissible.
    pub constant: Option<f64>,
    /// (t, √t·G_η(t)) at the dyadic probe points.
    pub probes: Vec<(f64, f64)>,
    /// First probe exceeding 10× the first one, when not admissible.
    pub violation: Option<(f64, f64)>,
}

impl WeightSpec {
    pub fn new(family: WeightFamily, p: f64) -> Result<WeightSpec> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "exponent p = {p} violates 1 < p < inf"
            )));
        }
        if let WeightFamily::ExpInvPow { beta, .. } | WeightFamily::PowerTimesExp { beta, .. } =
            &family
        {
            if !(*beta > 0.0) || !beta.is_finite() {
                return Err(Error::Domain(format!("beta = {beta} must be > 0")));
            }
        }
        if let WeightFamily::Power { alpha } | WeightFamily::PowerTimesExp { alpha, .. } = &family {
            if !alpha.is_finite() {
                return Err(Error::Domain("alpha must be finite".into()));
            }
        }
        Ok(WeightSpec { family, p })
    }

    /// Conjugate exponent p' = p/(p−1).
    pub fn p_prime(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// The plain power exponent γ = α·p' where the family has one.
    pub fn power_exponent(&self) -> Option<f64> {
        match &self.family {
            WeightFamily::Constant => Some(0.0),
            WeightFamily::Power { alpha } => Some(alpha * self.p_prime()),
            _ => None,
        }
    }

    /// log w(t), exact per family.  The exponential factor saturates at
    /// ±1e300: beyond that w is outside every finite representation, and the
    /// saturated value keeps downstream log-space sums and divergence
    /// verdicts exact (e^(−1e300) contributes nothing; +1e300 still reads as
    /// divergent mass).
    pub fn eval_log_weight(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("weight evaluated at t = {t}, needs t > 0")));
        }
        let ln = match &self.family {
            WeightFamily::Constant => 0.0,
            WeightFamily::Power { alpha } => alpha * self.p_prime() * t.ln(),
            WeightFamily::ExpInvPow { sign, beta } => {
                (sign.as_f64() * t.powf(-beta)).clamp(-1e300, 1e300)
            }
            WeightFamily::PowerTimesExp { alpha, sign, beta } => {
                alpha * self.p_prime() * t.ln()
                    + (sign.as_f64() * t.powf(-beta)).clamp(-1e300, 1e300)
            }
            WeightFamily::UserTable(table) => table.ln_w(t)?,
        };
        if !ln.is_finite() {
            return Err(Error::Domain(format!(
                "log-weight overflows f64 at t = {t:e} (|log w| > 1.8e308)"
            )));
        }
        Ok(ln)
    }

    /// log of the doubling ratio w(2t)/w(t). Doubling weights keep this
    /// bounded in t; the exponential families grow without bound as t → 0.
    pub fn doubling_ln_ratio(&self, t: f64) -> Result<f64> {
        Ok(self.eval_log_weight(2.0 * t)? - self.eval_log_weight(t)?)
    }

    /// P/Q classification: is 1/w integrable at the origin?
    ///
    /// Analytic for the built-in families; numerical (three-way, erring on
    /// the side of `Inconclusive`) for tables. The verdict is independent of
    /// η; η only bounds the probe range for tables.
    pub fn classify(&self, eta: f64) -> Result<WeightClass> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("eta = {eta} must be in (0, inf)")));
        }
        let (kind, limit_at_zero) = self.kind_and_limit(eta)?;
        let admissible = match &self.family {
            WeightFamily::Constant | WeightFamily::Power { .. } => true,
            WeightFamily::ExpInvPow { beta, .. }
            | WeightFamily::PowerTimesExp { beta, .. } => *beta <= 0.5,
            WeightFamily::UserTable(_) => self.check_admissible(eta, 1.0)?.admissible,
        };
        Ok(WeightClass {
            kind,
            switching_sign: kind.switching_sign(),
            limit_at_zero,
            admissible,
            admissibility_constant: None,
        })
    }

    pub(crate) fn kind_and_limit(&self, eta: f64) -> Result<(Kind, LimitAtZero)> {
        Ok(match &self.family {
            WeightFamily::Constant => (Kind::Q, LimitAtZero::Finite(1.0)),
            WeightFamily::Power { alpha } => {
                let gamma = alpha * self.p_prime();
                let kind = if gamma >= 1.0 { Kind::P } else { Kind::Q };
                let limit = if gamma > 0.0 {
                    LimitAtZero::Zero
                } else if gamma == 0.0 {
                    LimitAtZero::Finite(1.0)
                } else {
                    LimitAtZero::Infinite
                };
                (kind, limit)
            }
            WeightFamily::ExpInvPow { sign, .. } | WeightFamily::PowerTimesExp { sign, .. } => {
                // The exponential factor dominates any power at the origin.
                match sign {
                    Sign::Neg => (Kind::P, LimitAtZero::Zero),
                    Sign::Pos => (Kind::Q, LimitAtZero::Infinite),
                }
            }
            WeightFamily::UserTable(table) => {
                if eta > table.t_max() {
                    return Err(Error::Domain(format!(
                        "eta = {eta} beyond table range (max t = {})",
                        table.t_max()
                    )));
                }
                // Probe depth limited by the table floor: the probe must not
                // query below t_min.
                let levels = ((eta / table.t_min()).ln() / 4.0_f64.ln()).floor() as usize;
                let levels = levels.min(12);
                if levels < 6 {
                    return Err(Error::Inconclusive(format!(
                        "table covers only {} probe levels below eta (need 6): \
                         cannot test integrability of 1/w at 0",
                        levels
                    )));
                }
                let inv_w = |s: f64| -> f64 {
                    // Inside probe range by construction of `levels`.
                    -table.ln_w(s).expect("probe stays within table range")
                };
                let probe = probe_divergence(&inv_w, eta, levels)?;
                let kind = match probe.verdict {
                    Verdict::Divergent => Kind::P,
                    Verdict::Convergent { .. } => Kind::Q,
                    Verdict::Inconclusive => {
                        return Err(Error::Inconclusive(
                            "integrability of 1/w at 0 undecided at probe depth; \
                             deepen the table or classify analytically"
                                .into(),
                        ))
                    }
                };
                let limit = match kind {
                    // 1/w non-integrable with a limit existing forces w → 0.
                    Kind::P => LimitAtZero::Zero,
                    Kind::Q => {
                        let lo = table.ln_ws[0];
                        let trend_up = table.ln_ws.len() >= 2 && lo > table.ln_ws[1];
                        if trend_up && lo > 20.0 {
                            LimitAtZero::Infinite
                        } else {
                            // Best available estimate: the deepest sample.
                            LimitAtZero::Finite(lo.exp())
                        }
                    }
                };
                (kind, limit)
            }
        })
    }

    /// Probe admissibility: √t·G_η(t) sampled on t = η·2^{−j}, j = 1..=40.
    ///
    /// Declared non-admissible at the first probe exceeding 10× the first
    /// one; otherwise admissible with witness K = 1.5 × the largest probe.
    /// Between dyadic samples √t grows by at most √2 while G_η only shrinks,
    /// so sup √t·G_η ≤ √2 × the probe maximum: the 1.5 factor makes the
    /// pointwise bound t ≤ K²/G_η(t)² sound on the whole probed range, not
    /// just at the sampled points. The witness is tied to the μ used here.
    pub fn check_admissible(&self, eta: f64, mu: f64) -> Result<AdmissibilityProbe> {
        let params = TransformParams::new(self.p, eta, mu)?;
        // The probe-internal build skips the admissibility round trip that
        // classify() performs for tables (it only needs f_η, hence the kind).
        let set = crate::transforms::build_for_probe(self.clone(), params)?;
        let mut probes = Vec::new();
        let mut q1 = f64::NAN;
        let table_floor = match &self.family {
            WeightFamily::UserTable(t) => t.t_min(),
            _ => 0.0,
        };
        for j in 1..=40 {
            let t = eta * 0.5_f64.powi(j);
            if t < table_floor {
                if j < 10 {
                    return Err(Error::Inconclusive(
                        "table too shallow for an admissibility verdict (need 10 dyadic levels)"
                            .into(),
                    ));
                }
                break;
            }
            let g_cap = set.eval(TransformFn::CapG, t)?.to_f64();
            let q = t.sqrt() * g_cap;
            probes.push((t, q));
            if j == 1 {
                q1 = q;
            } else if q >= 10.0 * q1 {
                return Ok(AdmissibilityProbe {
                    admissible: false,
                    constant: None,
                    probes,
                    violation: Some((t, q)),
                });
            }
        }
        let max = probes.iter().map(|&(_, q)| q).fold(0.0_f64, f64::max);
        Ok(AdmissibilityProbe {
            admissible: true,
            constant: Some(1.5 * max),
            probes,
            violation: None,
        })
    }
}
