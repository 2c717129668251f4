//! Rate-distortion analytics: BD metrics over PSNR or mAP curves, relative
//! rate of scalable codecs, empirical rho estimation, and break-even
//! frequency with an independent numeric oracle.
//!
//! Quality axes are interchangeable by design: a curve is (bits per pixel,
//! quality) with the quality kind carried alongside, whether that is PSNR in
//! dB or a detector's mAP in percent. This module never computes task
//! accuracy itself; mAP curves arrive as data through the CSV interface.

mod bd;
mod csv;

pub use bd::{bd_metrics, mean_log_rate_diff, BdMethod};
pub use csv::{load_rd_csv, load_records_csv, save_rd_csv};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("quality kind mismatch: candidate is {candidate:?}, anchor is {anchor:?}")]
    KindMismatch {
        candidate: QualityKind,
        anchor: QualityKind,
    },
    #[error("curve {label:?} has {got} points, need at least 4")]
    TooFewPoints { label: String, got: usize },
    #[error("curve {label:?}: {what} at point {index}")]
    CurveOrder {
        label: String,
        what: &'static str,
        index: usize,
    },
    #[error("curve {curve:?}: quality must be strictly increasing for BD interpolation (point {index})")]
    QualityNotStrictlyIncreasing { curve: String, index: usize },
    #[error("quality ranges do not overlap (lo {lo}, hi {hi})")]
    DisjointQuality { lo: f64, hi: f64 },
    #[error("rate ranges do not overlap (log10 lo {lo}, hi {hi})")]
    DisjointRate { lo: f64, hi: f64 },
    #[error("unknown BD method {0:?}, expected \"piecewise_cubic\" or \"cubic_fit\"")]
    UnknownMethod(String),
    #[error("unknown quality kind {0:?}, expected \"PSNR\", \"mAP\", or \"mAP@50\"")]
    UnknownKind(String),
    #[error("unknown rho convention {0:?}, expected \"total_over_base\" or \"enh_over_base\"")]
    UnknownConvention(String),
    #[error("enhancement frequency {0} outside [0, 1]")]
    FrequencyRange(f64),
    #[error("reference rate {0} must be positive")]
    ReferenceRate(f64),
    #[error("record rates must be positive, got base {base}, enh {enh}")]
    RecordRate { base: f64, enh: f64 },
    #[error("record list is empty")]
    EmptyRecords,
    #[error("break-even crossover undefined: bdr_base equals rho * bdr_total")]
    UndefinedCrossover,
    #[error("{path}: row {row}: {msg}")]
    Csv {
        path: std::path::PathBuf,
        row: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QualityKind {
    #[serde(rename = "PSNR")]
    Psnr,
    #[serde(rename = "mAP")]
    Map,
    #[serde(rename = "mAP@50")]
    Map50,
}

impl QualityKind {
    pub fn name(self) -> &'static str {
        match self {
            QualityKind::Psnr => "PSNR",
            QualityKind::Map => "mAP",
            QualityKind::Map50 => "mAP@50",
        }
    }
}

impl std::str::FromStr for QualityKind {
    type Err = AnalysisError;
    fn from_str(s: &str) -> Result<Self, AnalysisError> {
        match s {
            "PSNR" | "psnr" => Ok(QualityKind::Psnr),
            "mAP" | "map" => Ok(QualityKind::Map),
            "mAP@50" | "map@50" | "map50" => Ok(QualityKind::Map50),
            other => Err(AnalysisError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub rate_bpp: f64,
    pub quality: f64,
}

/// A validated rate-quality curve: at least four points, strictly
/// increasing rate, non-decreasing quality.
#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
    label: String,
    kind: QualityKind,
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(
        label: impl Into<String>,
        kind: QualityKind,
        points: Vec<RdPoint>,
    ) -> Result<Self, AnalysisError> {
        let label = label.into();
        if points.len() < 4 {
            return Err(AnalysisError::TooFewPoints {
                label,
                got: points.len(),
            });
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.rate_bpp.is_finite() && p.rate_bpp > 0.0) {
                return Err(AnalysisError::CurveOrder {
                    label,
                    what: "rate must be positive and finite",
                    index: i,
                });
            }
            if !p.quality.is_finite() {
                return Err(AnalysisError::CurveOrder {
                    label,
                    what: "quality must be finite",
                    index: i,
                });
            }
        }
        for i in 1..points.len() {
            if points[i].rate_bpp <= points[i - 1].rate_bpp {
                return Err(AnalysisError::CurveOrder {
                    label,
                    what: "rate must be strictly increasing",
                    index: i,
                });
            }
            if points[i].quality < points[i - 1].quality {
                return Err(AnalysisError::CurveOrder {
                    label,
                    what: "quality must be non-decreasing",
                    index: i,
                });
            }
        }
        Ok(RdCurve {
            label,
            kind,
            points,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> QualityKind {
        self.kind
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    pub(crate) fn qualities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.quality).collect()
    }

    pub(crate) fn log_rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate_bpp.log10()).collect()
    }
}

/// One operating point of a scalable codec: per-layer rates plus the
/// qualities each layer delivers (task metric for the base, PSNR for the
/// enhancement).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalableRdRecord {
    pub base_rate: f64,
    pub enh_rate: f64,
    pub base_quality: f64,
    pub enh_quality: f64,
}

impl ScalableRdRecord {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.base_rate > 0.0 && self.enh_rate > 0.0 {
            Ok(())
        } else {
            Err(AnalysisError::RecordRate {
                base: self.base_rate,
                enh: self.enh_rate,
            })
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.base_rate + self.enh_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdReport {
    pub bd_rate_percent: f64,
    pub bd_quality_delta: f64,
    /// Quality range the BD-Rate integration used.
    pub overlap_interval: (f64, f64),
    pub method: BdMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoConvention {
    TotalOverBase,
    EnhOverBase,
}

impl RhoConvention {
    pub fn name(self) -> &'static str {
        match self {
            RhoConvention::TotalOverBase => "total_over_base",
            RhoConvention::EnhOverBase => "enh_over_base",
        }
    }
}

impl std::str::FromStr for RhoConvention {
    type Err = AnalysisError;
    fn from_str(s: &str) -> Result<Self, AnalysisError> {
        match s {
            "total_over_base" | "total-over-base" | "total" => Ok(RhoConvention::TotalOverBase),
            "enh_over_base" | "enh-over-base" | "enh" => Ok(RhoConvention::EnhOverBase),
            other => Err(AnalysisError::UnknownConvention(other.to_string())),
        }
    }
}

/// Relative rate of a scalable codec against a traditional codec's rate,
/// with the "smaller than 1 means the scalable codec is preferable" verdict
/// surfaced alongside the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeRate {
    pub value: f64,
    pub scalable_preferable: bool,
}

fn check_frequency(f_h: f64) -> Result<(), AnalysisError> {
    if (0.0..=1.0).contains(&f_h) {
        Ok(())
    } else {
        Err(AnalysisError::FrequencyRange(f_h))
    }
}

/// Relative rate of a scalable codec versus a traditional codec of rate
/// `reference_rate`, at enhancement frequency `f_h`:
/// `(1-f)*Rb/R + f*(Rb+Re)/R`.
pub fn relative_rate(
    f_h: f64,
    record: &ScalableRdRecord,
    reference_rate: f64,
) -> Result<RelativeRate, AnalysisError> {
    check_frequency(f_h)?;
    if !(reference_rate > 0.0) {
        return Err(AnalysisError::ReferenceRate(reference_rate));
    }
    let value = (1.0 - f_h) * (record.base_rate / reference_rate)
        + f_h * (record.total_rate() / reference_rate);
    Ok(RelativeRate {
        value,
        scalable_preferable: value < 1.0,
    })
}

/// Expected rate of a scalable codec at enhancement frequency `f_h`:
/// `(1-f)*Rb + f*(Rb+Re)`. Affine in `f_h`; this is the numerator and
/// denominator of the scalable-versus-scalable relative rate.
pub fn expected_rate(f_h: f64, record: &ScalableRdRecord) -> f64 {
    (1.0 - f_h) * record.base_rate + f_h * record.total_rate()
}

/// Relative rate of one scalable codec against another: the ratio of their
/// expected rates at the same enhancement frequency.
pub fn relative_rate_scalable(
    f_h: f64,
    candidate: &ScalableRdRecord,
    anchor: &ScalableRdRecord,
) -> Result<f64, AnalysisError> {
    check_frequency(f_h)?;
    Ok(expected_rate(f_h, candidate) / expected_rate(f_h, anchor))
}

/// Empirical rho from measured anchor records, using average rates.
pub fn estimate_rho(
    records: &[ScalableRdRecord],
    convention: RhoConvention,
) -> Result<f64, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyRecords);
    }
    let n = records.len() as f64;
    let mean_base: f64 = records.iter().map(|r| r.base_rate).sum::<f64>() / n;
    let mean_enh: f64 = records.iter().map(|r| r.enh_rate).sum::<f64>() / n;
    Ok(match convention {
        RhoConvention::TotalOverBase => (mean_base + mean_enh) / mean_base,
        RhoConvention::EnhOverBase => mean_enh / mean_base,
    })
}

/// Closed-form break-even frequency with its in-range flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakEvenValue {
    pub f_star: f64,
    /// False means one codec dominates at every frequency in [0, 1].
    pub in_range: bool,
}

/// `f* = BDR_base / (BDR_base - rho * BDR_total)`. Both BD-rates must use
/// the same unit (the formula is scale-invariant, so fractions and percent
/// both work) and rho must follow the total-over-base convention for
/// consistency with the scalable relative rate.
pub fn break_even_closed_form(
    bdr_base: f64,
    bdr_total: f64,
    rho: f64,
) -> Result<BreakEvenValue, AnalysisError> {
    let denom = bdr_base - rho * bdr_total;
    if denom == 0.0 {
        return Err(AnalysisError::UndefinedCrossover);
    }
    let f_star = bdr_base / denom;
    Ok(BreakEvenValue {
        f_star,
        in_range: (0.0..=1.0).contains(&f_star),
    })
}

/// Outcome of the numeric break-even search on a record pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BreakEvenOutcome {
    /// The relative rate crosses 1 inside [0, 1].
    Root { f_star: f64 },
    /// Candidate is cheaper at every frequency; boundary value 1.
    CandidateDominates,
    /// Anchor is cheaper at every frequency; boundary value 0.
    AnchorDominates,
    /// The codecs have equal expected rate at every frequency.
    AlwaysEqual,
}

impl BreakEvenOutcome {
    /// The break-even frequency, with dominance mapped to its boundary.
    pub fn f_star(&self) -> f64 {
        match *self {
            BreakEvenOutcome::Root { f_star } => f_star,
            BreakEvenOutcome::CandidateDominates => 1.0,
            BreakEvenOutcome::AnchorDominates => 0.0,
            BreakEvenOutcome::AlwaysEqual => f64::NAN,
        }
    }
}

/// Independent oracle: solve `relative_rate_scalable(f) = 1` by bisection to
/// 1e-12, reporting dominance when no crossing exists.
pub fn break_even_numeric(
    candidate: &ScalableRdRecord,
    anchor: &ScalableRdRecord,
) -> BreakEvenOutcome {
    let h = |f: f64| expected_rate(f, candidate) / expected_rate(f, anchor) - 1.0;
    let h0 = h(0.0);
    let h1 = h(1.0);
    if h0 == 0.0 && h1 == 0.0 {
        return BreakEvenOutcome::AlwaysEqual;
    }
    if h0 == 0.0 {
        return BreakEvenOutcome::Root { f_star: 0.0 };
    }
    if h1 == 0.0 {
        return BreakEvenOutcome::Root { f_star: 1.0 };
    }
    if h0 < 0.0 && h1 < 0.0 {
        return BreakEvenOutcome::CandidateDominates;
    }
    if h0 > 0.0 && h1 > 0.0 {
        return BreakEvenOutcome::AnchorDominates;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let lo_sign = h0 < 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if (h(mid) < 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    BreakEvenOutcome::Root {
        f_star: 0.5 * (lo + hi),
    }
}

/// Break-even analysis of two scalable codecs, as emitted by the CLI.
/// BD-rates are in percent; `f_star` comes from the closed form (absent when
/// the codecs are always equal) and the oracle fields record the bisection
/// cross-check on records synthesized from `(bdr_base, bdr_total, rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakEvenReport {
    pub f_star: Option<f64>,
    pub in_range: bool,
    pub always_equal: bool,
    pub rho: f64,
    pub rho_convention: RhoConvention,
    pub bdr_base_percent: f64,
    pub bdr_total_percent: f64,
    pub oracle_f_star: Option<f64>,
    pub oracle_agrees: bool,
}

/// Assemble a [`BreakEvenReport`]: closed form plus the numeric oracle run
/// on the synthetic record pair `anchor = (1, rho - 1)`,
/// `candidate = (1 + bdr_base, rho * (1 + bdr_total) - (1 + bdr_base))`,
/// which realizes exactly the given BD-rates and rho.
pub fn break_even_report(
    bdr_base_percent: f64,
    bdr_total_percent: f64,
    rho: f64,
    convention: RhoConvention,
) -> Result<BreakEvenReport, AnalysisError> {
    if bdr_base_percent == 0.0 && bdr_total_percent == 0.0 {
        return Ok(BreakEvenReport {
            f_star: None,
            in_range: false,
            always_equal: true,
            rho,
            rho_convention: convention,
            bdr_base_percent,
            bdr_total_percent,
            oracle_f_star: None,
            oracle_agrees: true,
        });
    }
    let closed = break_even_closed_form(bdr_base_percent, bdr_total_percent, rho)?;
    let b = bdr_base_percent / 100.0;
    let t = bdr_total_percent / 100.0;
    let anchor = ScalableRdRecord {
        base_rate: 1.0,
        enh_rate: rho - 1.0,
        base_quality: 0.0,
        enh_quality: 0.0,
    };
    let candidate = ScalableRdRecord {
        base_rate: 1.0 + b,
        enh_rate: rho * (1.0 + t) - (1.0 + b),
        base_quality: 0.0,
        enh_quality: 0.0,
    };
    let outcome = break_even_numeric(&candidate, &anchor);
    let oracle_agrees = match outcome {
        BreakEvenOutcome::Root { f_star } => (f_star - closed.f_star).abs() <= 1e-6,
        BreakEvenOutcome::CandidateDominates | BreakEvenOutcome::AnchorDominates => {
            !closed.in_range
        }
        BreakEvenOutcome::AlwaysEqual => false,
    };
    Ok(BreakEvenReport {
        f_star: Some(closed.f_star),
        in_range: closed.in_range,
        always_equal: false,
        rho,
        rho_convention: convention,
        bdr_base_percent,
        bdr_total_percent,
        oracle_f_star: match outcome {
            BreakEvenOutcome::AlwaysEqual => None,
            other => Some(other.f_star()),
        },
        oracle_agrees,
    })
}
