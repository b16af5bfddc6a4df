//! Closed-form tail bounds and measurement counts.
//!
//! Tail bounds control `P(‖I − W_m‖_∞ > t)` for the empirical Gram matrix
//! `W_m` of `m` draws. The measurement counts follow by setting
//! `t = 1/(2s)` and asking the tail to be at most `η`.

use crate::error::{Error, Result};

/// Correction term of the Markov-chain concentration envelope,
/// `h(x) = ½ (√(1 + x) − (1 − x/2))`.
pub fn h(x: f64) -> f64 {
    0.5 * ((1.0 + x).sqrt() - (1.0 - 0.5 * x))
}

fn check_common(n: f64, l: f64, m: f64, t: f64) -> Result<()> {
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::Domain(format!("dimension {n} must be at least 1")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Domain(format!("L = {l} must be positive")));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("m = {m} must be non-negative")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("deviation t = {t} must be positive")));
    }
    Ok(())
}

fn check_gap(gap: f64) -> Result<()> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::Domain(format!("spectral gap {gap} outside (0, 1]")));
    }
    Ok(())
}

/// Union bound over the `n(n+1)/2` entries of a Hermitian deviation, each
/// controlled by Bernstein's inequality for iid draws:
/// `n(n+1) exp(−m t² / (2L² + 2Lt/3))`.
pub fn bernstein_bound(n: f64, l: f64, m: f64, t: f64) -> Result<f64> {
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    check_common(n, l, m, t)?;
    Ok(n * (n + 1.0) * (-m * t * t / (2.0 * l * l + 2.0 * l * t / 3.0)).exp())
}

/// Same union bound for a reversible chain started at stationarity:
/// `n(n+1) e^{ε/5} exp(−m t² ε / (12 L²))`, valid for `0 < t ≤ 1`.
pub fn lezaud_bound(n: f64, l: f64, m: f64, t: f64, gap: f64) -> Result<f64> {
    check_common(n, l, m, t)?;
    check_gap(gap)?;
    if t > 1.0 {
        return Err(Error::Domain(format!("deviation t = {t} above 1 is outside the chain bound")));
    }
    Ok(n * (n + 1.0) * (gap / 5.0).exp() * (-m * t * t * gap / (12.0 * l * l)).exp())
}

/// One-sided envelope for a single centred function with `‖f‖_∞ ≤ 1` and
/// variance at most `b²`, started from a law with norm `n_q`:
/// `e^{ε/5} N_q exp(−m t² ε / (4 b² (1 + h(5t/b²))))`.
pub fn lezaud_envelope(m: f64, t: f64, gap: f64, b: f64, n_q: f64) -> Result<f64> {
    check_gap(gap)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("deviation t = {t} outside (0, 1]")));
    }
    if !(b > 0.0) || !(n_q >= 1.0) || !(m >= 0.0) {
        return Err(Error::Domain(format!("invalid envelope parameters b = {b}, N_q = {n_q}, m = {m}")));
    }
    let denom = 4.0 * b * b * (1.0 + h(5.0 * t / (b * b)));
    Ok((gap / 5.0).exp() * n_q * (-m * t * t * gap / denom).exp())
}

/// Deviation level at which the expectation-based argument gives a tail of
/// one half: `4L √(2 ln(2n²) / m)`.
pub fn juditsky_t(n: f64, l: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::Domain("m must be positive".into()));
    }
    check_common(n, l, m, 1.0)?;
    Ok(4.0 * l * (2.0 * (2.0 * n * n).ln() / m).sqrt())
}

/// Ceiling that tolerates round-off just above an integer.
fn ceil_count(x: f64) -> Result<u64> {
    if !x.is_finite() || x > 9.0e15 {
        return Err(Error::Numerical(format!("measurement count {x} is not representable")));
    }
    let r = x.round();
    let c = if (x - r).abs() <= 1e-12 * r.abs().max(1.0) { r } else { x.ceil() };
    Ok((c as u64).max(1))
}

fn check_count(l: f64, s: u32, n: f64, eta: f64) -> Result<()> {
    if s == 0 {
        return Err(Error::Domain("sparsity must be at least 1".into()));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Domain(format!("L = {l} must be positive")));
    }
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::Domain(format!("dimension {n} must be at least 1")));
    }
    // η = 1 is admitted so the formal example n = e, η = 1 evaluates.
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("failure probability {eta} outside (0, 1]")));
    }
    Ok(())
}

/// `⌈5 L² s² log(n²/η)⌉` iid draws.
pub fn min_measurements_iid(l: f64, s: u32, n: f64, eta: f64) -> Result<u64> {
    check_count(l, s, n, eta)?;
    let s = s as f64;
    ceil_count(5.0 * l * l * s * s * (n * n / eta).ln())
}

/// `⌈12 L² s² log(2n²/η) / ε⌉` chain steps.
pub fn min_measurements_markov(l: f64, s: u32, n: f64, eta: f64, gap: f64) -> Result<u64> {
    check_count(l, s, n, eta)?;
    check_gap(gap)?;
    let s = s as f64;
    ceil_count(12.0 * l * l * s * s * (2.0 * n * n / eta).ln() / gap)
}

/// Parameters of a bound evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub n: f64,
    pub l: f64,
    pub s: u32,
    pub eta: f64,
    pub t: f64,
    /// Spectral gap of the chain, when one is involved.
    pub gap: Option<f64>,
    pub m: f64,
}

/// Every closed-form quantity for one parameter set. Quantities outside
/// their domain are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub bernstein: f64,
    pub lezaud: Option<f64>,
    pub m_min_iid: u64,
    pub m_min_markov: Option<u64>,
    /// `h(5t)`, the term the chain bound absorbs into its constant.
    pub h_5t: f64,
    /// `h(1)` and `h(5)`, the latter bounding `h(5t)` over `t ≤ 1`.
    pub h_1: f64,
    pub h_5: f64,
    /// Single-entry envelope with `b = N_q = 1`.
    pub envelope: Option<f64>,
    pub juditsky_t: Option<f64>,
    pub n_q: f64,
    pub b: f64,
}

impl BoundReport {
    pub fn compute(inputs: BoundInputs) -> Result<Self> {
        let BoundInputs { n, l, s, eta, t, gap, m } = inputs;
        let chain = |f: &dyn Fn(f64) -> Result<f64>| -> Result<Option<f64>> {
            match gap {
                Some(g) if t <= 1.0 => f(g).map(Some),
                Some(g) => check_gap(g).map(|_| None),
                None => Ok(None),
            }
        };
        let m_min_markov = match gap {
            Some(g) => Some(min_measurements_markov(l, s, n, eta, g)?),
            None => None,
        };
        Ok(Self {
            inputs,
            bernstein: bernstein_bound(n, l, m, t)?,
            lezaud: chain(&|g| lezaud_bound(n, l, m, t, g))?,
            m_min_iid: min_measurements_iid(l, s, n, eta)?,
            m_min_markov,
            h_5t: h(5.0 * t),
            h_1: h(1.0),
            h_5: h(5.0),
            envelope: chain(&|g| lezaud_envelope(m, t, g, 1.0, 1.0))?,
            juditsky_t: if m > 0.0 { Some(juditsky_t(n, l, m)?) } else { None },
            n_q: 1.0,
            b: 1.0,
        })
    }

    /// `key = value` lines; absent quantities print as `na`.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "na".to_string(), |x| format!("{x:e}"));
        let i = &self.inputs;
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("n", format!("{}", i.n));
        put("L", format!("{}", i.l));
        put("s", i.s.to_string());
        put("eta", format!("{}", i.eta));
        put("t", format!("{}", i.t));
        put("gap", i.gap.map_or_else(|| "na".into(), |g| format!("{g}")));
        put("m", format!("{}", i.m));
        put("bernstein_tail", format!("{:e}", self.bernstein));
        put("markov_tail", opt(self.lezaud));
        put("m_min_iid", self.m_min_iid.to_string());
        put("m_min_markov", self.m_min_markov.map_or_else(|| "na".into(), |v| v.to_string()));
        put("h_5t", format!("{}", self.h_5t));
        put("h_1", format!("{}", self.h_1));
        put("h_5", format!("{}", self.h_5));
        put("entry_envelope", opt(self.envelope));
        put("juditsky_t", opt(self.juditsky_t));
        put("n_q", format!("{}", self.n_q));
        put("b", format!("{}", self.b));
        out
    }
}
