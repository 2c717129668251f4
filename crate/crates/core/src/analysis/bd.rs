//! Bjøntegaard-delta metrics over rate-quality curves.
//!
//! BD-Rate interpolates `log10(rate)` as a function of quality on the
//! quality overlap of the two curves, integrates the difference, and maps
//! the mean log-rate gap back to a percentage. BD-quality swaps the axes.
//! The default interpolant is a piecewise monotone cubic (Fritsch-Carlson
//! PCHIP) through all points, per modern codec common-test practice; the
//! classic least-squares cubic polynomial fit is available as the alternate
//! method. Both satisfy bd(A, A) = (0, 0) exactly and the log-domain
//! shift/antisymmetry laws.

use serde::{Deserialize, Serialize};

use super::{AnalysisError, BdReport, RdCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BdMethod {
    PiecewiseCubic,
    CubicFit,
}

impl BdMethod {
    pub fn name(self) -> &'static str {
        match self {
            BdMethod::PiecewiseCubic => "piecewise_cubic",
            BdMethod::CubicFit => "cubic_fit",
        }
    }
}

impl std::str::FromStr for BdMethod {
    type Err = AnalysisError;
    fn from_str(s: &str) -> Result<Self, AnalysisError> {
        match s {
            "piecewise_cubic" | "piecewise-cubic" | "piecewise" => Ok(BdMethod::PiecewiseCubic),
            "cubic_fit" | "cubic-fit" | "cubic" => Ok(BdMethod::CubicFit),
            other => Err(AnalysisError::UnknownMethod(other.to_string())),
        }
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson monotone slopes.
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` strictly increasing, at least 3 points (curves guarantee 4).
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Pchip { x, y, d }
    }

    /// Integral over `[lo, hi]`, which must lie within the knot span.
    fn integrate(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        let mut total = 0.0;
        for i in 0..self.x.len() - 1 {
            let a = self.x[i].max(lo);
            let b = self.x[i + 1].min(hi);
            if a >= b {
                continue;
            }
            total += self.segment_integral(i, a, b);
        }
        total
    }

    fn segment_integral(&self, i: usize, a: f64, b: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let f = |x: f64| -> f64 {
            let t = (x - self.x[i]) / h;
            let t2 = t * t;
            let t3 = t2 * t;
            let t4 = t3 * t;
            let i00 = t4 / 2.0 - t3 + t;
            let i10 = t4 / 4.0 - 2.0 * t3 / 3.0 + t2 / 2.0;
            let i01 = -t4 / 2.0 + t3;
            let i11 = t4 / 4.0 - t3 / 3.0;
            h * (self.y[i] * i00
                + h * self.d[i] * i10
                + self.y[i + 1] * i01
                + h * self.d[i + 1] * i11)
        };
        f(b) - f(a)
    }
}

/// Three-point one-sided slope estimate with the usual shape-preserving
/// clamps.
fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if sign(d) != sign(m0) {
        0.0
    } else if sign(m0) != sign(m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Least-squares cubic polynomial in a centered, scaled abscissa.
struct CubicFit {
    coeff: [f64; 4],
    center: f64,
    scale: f64,
}

impl CubicFit {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let center = x.iter().sum::<f64>() / x.len() as f64;
        let scale = x
            .iter()
            .map(|&v| (v - center).abs())
            .fold(0.0f64, f64::max)
            .max(1e-30);
        let u: Vec<f64> = x.iter().map(|&v| (v - center) / scale).collect();
        // Normal equations for degree 3.
        let mut moments = [0.0f64; 7];
        let mut rhs = [0.0f64; 4];
        for (ui, yi) in u.iter().zip(y) {
            let mut p = 1.0;
            for (k, m) in moments.iter_mut().enumerate() {
                *m += p;
                if k < 4 {
                    rhs[k] += yi * p;
                }
                p *= ui;
            }
        }
        let mut a = [[0.0f64; 5]; 4];
        for (j, row) in a.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().take(4).enumerate() {
                *cell = moments[j + k];
            }
            row[4] = rhs[j];
        }
        let coeff = solve4(&mut a);
        CubicFit {
            coeff,
            center,
            scale,
        }
    }

    fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let f = |x: f64| -> f64 {
            let u = (x - self.center) / self.scale;
            let [c0, c1, c2, c3] = self.coeff;
            self.scale * (c0 * u + c1 * u * u / 2.0 + c2 * u * u * u / 3.0 + c3 * u * u * u * u / 4.0)
        };
        f(hi) - f(lo)
    }
}

/// Gaussian elimination with partial pivoting on a 4x5 augmented system.
fn solve4(a: &mut [[f64; 5]; 4]) -> [f64; 4] {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..4 {
            let factor = a[row][col] / a[col][col];
            for k in col..5 {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    let mut x = [0.0f64; 4];
    for row in (0..4).rev() {
        let mut acc = a[row][4];
        for k in row + 1..4 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Mean of `y(x)` over `[lo, hi]` for one curve's `(x, y)` samples.
fn mean_over(method: BdMethod, x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let integral = match method {
        BdMethod::PiecewiseCubic => Pchip::new(x.to_vec(), y.to_vec()).integrate(lo, hi),
        BdMethod::CubicFit => CubicFit::new(x, y).integrate(lo, hi),
    };
    integral / (hi - lo)
}

fn require_strictly_increasing(values: &[f64], label: &str) -> Result<(), AnalysisError> {
    for (i, pair) in values.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(AnalysisError::QualityNotStrictlyIncreasing {
                curve: label.to_string(),
                index: i + 1,
            });
        }
    }
    Ok(())
}

/// Mean gap in `log10(rate)` at matched quality over the quality overlap.
/// Exposed for the antisymmetry invariant; `bd_metrics` exponentiates it.
pub fn mean_log_rate_diff(
    candidate: &RdCurve,
    anchor: &RdCurve,
    method: BdMethod,
) -> Result<f64, AnalysisError> {
    let (c_q, a_q) = (candidate.qualities(), anchor.qualities());
    require_strictly_increasing(&c_q, candidate.label())?;
    require_strictly_increasing(&a_q, anchor.label())?;
    let lo = c_q[0].max(a_q[0]);
    let hi = c_q[c_q.len() - 1].min(a_q[a_q.len() - 1]);
    if lo >= hi {
        return Err(AnalysisError::DisjointQuality { lo, hi });
    }
    let c_mean = mean_over(method, &c_q, &candidate.log_rates(), lo, hi);
    let a_mean = mean_over(method, &a_q, &anchor.log_rates(), lo, hi);
    Ok(c_mean - a_mean)
}

/// BD-Rate (percent) and BD-quality (same unit as the curves' quality axis)
/// of `candidate` against `anchor`.
pub fn bd_metrics(
    candidate: &RdCurve,
    anchor: &RdCurve,
    method: BdMethod,
) -> Result<BdReport, AnalysisError> {
    if candidate.kind() != anchor.kind() {
        return Err(AnalysisError::KindMismatch {
            candidate: candidate.kind(),
            anchor: anchor.kind(),
        });
    }
    let mean_diff = mean_log_rate_diff(candidate, anchor, method)?;
    let bd_rate_percent = 100.0 * (10f64.powf(mean_diff) - 1.0);

    let (c_q, a_q) = (candidate.qualities(), anchor.qualities());
    let overlap = (c_q[0].max(a_q[0]), c_q[c_q.len() - 1].min(a_q[a_q.len() - 1]));

    // Quality delta at matched rate, integrated over the log-rate overlap.
    let (c_r, a_r) = (candidate.log_rates(), anchor.log_rates());
    let lo_r = c_r[0].max(a_r[0]);
    let hi_r = c_r[c_r.len() - 1].min(a_r[a_r.len() - 1]);
    if lo_r >= hi_r {
        return Err(AnalysisError::DisjointRate { lo: lo_r, hi: hi_r });
    }
    let c_mean = mean_over(method, &c_r, &c_q, lo_r, hi_r);
    let a_mean = mean_over(method, &a_r, &a_q, lo_r, hi_r);

    Ok(BdReport {
        bd_rate_percent,
        bd_quality_delta: c_mean - a_mean,
        overlap_interval: overlap,
        method,
    })
}
