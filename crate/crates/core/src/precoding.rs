//! Multicast precoding in feed space: collapse each served cluster to an
//! equivalent channel row, compute regularised least-squares (MMSE)
//! weights through a Hermitian solve, normalise transmit power, and
//! evaluate per-user SINRs.
//!
//! Channel rows are noise-normalised upstream, so the SINR denominator is
//! `1 + interference` and the MMSE regulariser defaults to `1 / p` for a
//! per-stream power `p`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_hermitian, CMat};

/// Transmit-side processing choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precoder {
    /// No precoding: each feed carries its own beam's stream unmodified.
    None,
    /// MMSE weights with every feed (row) scaled to unit norm, keeping
    /// each amplifier at its per-feed power.
    Pac,
    /// MMSE weights scaled by one global factor so the total transmit
    /// power matches the feed count.
    Spc,
}

impl std::fmt::Display for Precoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precoder::None => "none",
            Precoder::Pac => "pac",
            Precoder::Spc => "spc",
        })
    }
}

impl std::str::FromStr for Precoder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Precoder::None),
            "pac" => Ok(Precoder::Pac),
            "spc" => Ok(Precoder::Spc),
            other => Err(Error::config(format!(
                "unknown precoder `{other}` (expected none|pac|spc)"
            ))),
        }
    }
}

/// Mean of the member channel rows — the single row that stands in for a
/// multicast cluster when the precoder is computed.
pub fn equivalent_channel(rows: &[&[Complex64]]) -> Result<Vec<Complex64>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::numerical("equivalent channel of an empty cluster"))?;
    let mut mean = vec![Complex64::new(0.0, 0.0); first.len()];
    for row in rows {
        assert_eq!(row.len(), mean.len(), "member rows differ in length");
        for (m, c) in mean.iter_mut().zip(*row) {
            *m += c;
        }
    }
    let scale = 1.0 / rows.len() as f64;
    for m in &mut mean {
        *m *= scale;
    }
    Ok(mean)
}

/// Regularised least-squares precoder `(H^H H + diag(alpha))^-1 H^H`
/// computed via a Hermitian positive-definite solve (never an explicit
/// inverse).
///
/// `h_eq` holds one equivalent-channel row per served stream (streams x
/// feeds); `alpha` has one strictly positive entry per feed. The result
/// maps stream symbols to feed signals (feeds x streams).
pub fn mmse_precoder(h_eq: &CMat, alpha: &[f64]) -> Result<CMat> {
    let n_feeds = h_eq.n_cols();
    if alpha.len() != n_feeds {
        return Err(Error::config(format!(
            "regulariser length {} does not match feed count {n_feeds}",
            alpha.len()
        )));
    }
    if let Some(bad) = alpha.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::config(format!(
            "regulariser entries must be strictly positive, got {bad}"
        )));
    }
    let mut a = h_eq.gram();
    for (i, &al) in alpha.iter().enumerate() {
        a[(i, i)] += Complex64::new(al, 0.0);
    }
    solve_hermitian(&a, &h_eq.hermitian())
}

/// Per-feed power normalisation: every row of `w` is scaled to unit norm.
pub fn normalize_per_feed(w: &CMat) -> Result<CMat> {
    let mut out = w.clone();
    for i in 0..out.n_rows() {
        let norm = out.row(i).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::numerical(format!(
                "cannot normalise all-zero feed row {i}"
            )));
        }
        for c in out.row_mut(i) {
            *c /= norm;
        }
    }
    Ok(out)
}

/// Total power normalisation: `w` scaled by `sqrt(n_feeds / trace(W W^H))`
/// so the summed feed power equals the feed count.
pub fn normalize_total_power(w: &CMat) -> Result<CMat> {
    let total = w.squared_frobenius();
    if !(total > 0.0) {
        return Err(Error::numerical("cannot normalise an all-zero precoder"));
    }
    let scale = (w.n_rows() as f64 / total).sqrt();
    let mut out = w.clone();
    for i in 0..out.n_rows() {
        for c in out.row_mut(i) {
            *c *= scale;
        }
    }
    Ok(out)
}

/// SINR of a user with channel row `h` when stream `stream` is intended
/// for it: `p |h w_s|^2 / (1 + sum_{l != s} p |h w_l|^2)`.
pub fn user_sinr(h: &[Complex64], w: &CMat, stream: usize, p: f64) -> f64 {
    assert_eq!(
        h.len(),
        w.n_rows(),
        "channel row length must match feed count"
    );
    let mut signal = 0.0;
    let mut interference = 0.0;
    for l in 0..w.n_cols() {
        let gain = p * dot(h, &w.col(l)).norm_sqr();
        if l == stream {
            signal = gain;
        } else {
            interference += gain;
        }
    }
    signal / (1.0 + interference)
}

/// SINR without precoding (each feed carries its beam's stream): the
/// channel row itself plays the role of the weight columns.
pub fn no_precoding_sinr(h: &[Complex64], beam: usize, p: f64) -> f64 {
    let mut interference = 0.0;
    for (l, c) in h.iter().enumerate() {
        if l != beam {
            interference += p * c.norm_sqr();
        }
    }
    p * h[beam].norm_sqr() / (1.0 + interference)
}
