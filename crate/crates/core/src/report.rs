//! Sample grids, least-squares first-integral fits and verdicts.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Default relative tolerance for first-integral verdicts.
pub const DEFAULT_FIRST_INTEGRAL_TOL: f64 = 1e-7;

/// The two regimes of the optimality conditions: `[t1, t2 - tau]` carries
/// advanced terms, `[t2 - tau, t2]` does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "u8")]
pub enum Region {
    Advanced,
    Terminal,
}

impl From<Region> for u8 {
    fn from(r: Region) -> u8 {
        match r {
            Region::Advanced => 1,
            Region::Terminal => 2,
        }
    }
}

impl Region {
    pub fn number(self) -> u8 {
        self.into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// One fit per smooth segment (or per region, for first integrals that
    /// are asserted region-wide).
    Regional,
    /// One polynomial over the whole of `[t1, t2]`.
    Global,
}

/// Sampling configuration shared by every pointwise check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    /// Approximate total number of interior sample points.
    pub points: usize,
    /// Relative tolerance of verdicts.
    pub tolerance: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            points: 200,
            tolerance: DEFAULT_FIRST_INTEGRAL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    /// Index into the effective-breakpoint segments.
    pub segment: usize,
    pub region: Region,
}

/// Interior sample points, `points` in total spread by segment length, each
/// placed at the midpoint of an equal sub-cell so that breakpoints are
/// never sampled.
pub fn sample_points(breaks: &[f64], junction: f64, points: usize) -> Vec<SamplePoint> {
    let span = breaks.last().copied().unwrap_or(0.0) - breaks.first().copied().unwrap_or(0.0);
    let exclusion = 1e-7 * span;
    let mut out = Vec::with_capacity(points + 2 * breaks.len());
    for (segment, w) in breaks.windows(2).enumerate() {
        let len = w[1] - w[0];
        let count = ((points as f64 * len / span).round() as usize).max(2);
        if len / (2.0 * count as f64) <= exclusion {
            continue;
        }
        let region = if w[1] <= junction + 1e-12 * span {
            Region::Advanced
        } else {
            Region::Terminal
        };
        out.extend((0..count).map(|k| SamplePoint {
            t: w[0] + (k as f64 + 0.5) * len / count as f64,
            segment,
            region,
        }));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub region: Region,
    pub value: Vec<f64>,
}

/// Least-squares polynomial of degree `degree` per component, with
/// coefficients in the raw variable `t` (`p(t) = c0 + c1 t + ...`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    /// `[component][power]`
    pub coefficients: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub max_dev: f64,
}

pub fn fit_polynomial(samples: &[&Sample], degree: usize) -> PolyFit {
    let dim = samples.first().map_or(0, |s| s.value.len());
    let count = samples.len().max(1) as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|i| samples.iter().map(|s| s.value[i]).sum::<f64>() / count)
        .collect();
    if degree == 0 || samples.len() <= degree {
        let max_dev = samples
            .iter()
            .flat_map(|s| s.value.iter().zip(&mean).map(|(v, c)| (v - c).abs()))
            .fold(0.0, f64::max);
        return PolyFit {
            coefficients: mean.iter().map(|&c| vec![c]).collect(),
            mean,
            max_dev,
        };
    }
    let lo = samples.iter().map(|s| s.t).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.t).fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
    let basis = DMatrix::from_fn(samples.len(), degree + 1, |r, c| {
        ((samples[r].t - center) / half).powi(c as i32)
    });
    let svd = basis.clone().svd(true, true);
    let mut coefficients = Vec::with_capacity(dim);
    let mut max_dev = 0.0f64;
    for i in 0..dim {
        let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.value[i]));
        let scaled = svd.solve(&rhs, 1e-14).expect("SVD was computed with U and V");
        let residual = &basis * &scaled - &rhs;
        max_dev = max_dev.max(residual.amax());
        coefficients.push(unscale(scaled.as_slice(), center, half));
    }
    PolyFit {
        coefficients,
        mean,
        max_dev,
    }
}

/// Converts `sum a_k ((t - c)/w)^k` to `sum b_k t^k`.
fn unscale(scaled: &[f64], center: f64, half: f64) -> Vec<f64> {
    let n = scaled.len();
    let mut out = vec![0.0; n];
    for (k, &a) in scaled.iter().enumerate() {
        let factor = a / half.powi(k as i32);
        // (t - c)^k = sum_j C(k, j) t^j (-c)^(k - j)
        let mut binom = 1.0;
        for (j, o) in out.iter_mut().enumerate().take(k + 1) {
            *o += factor * binom * (-center).powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentFit {
    pub interval: [f64; 2],
    pub region: Region,
    /// Sample mean per component; the fitted constant when the fit is
    /// constant.
    pub constant: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<Vec<Vec<f64>>>,
    pub max_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionFit {
    pub region: Region,
    pub constant: Vec<f64>,
    pub max_dev: f64,
    pub segments: Vec<SegmentFit>,
}

/// Fitted constants (or polynomials) of a quantity that should be a first
/// integral, with a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstIntegralReport {
    pub quantity: String,
    pub mode: FitMode,
    pub regions: Vec<RegionFit>,
    /// Present for global fits: `p(t)` per component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<Vec<Vec<f64>>>,
    pub max_deviation: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub failing_segments: Vec<[f64; 2]>,
    #[serde(skip)]
    pub samples: Vec<Sample>,
}

impl FirstIntegralReport {
    pub fn region(&self, region: Region) -> Option<&RegionFit> {
        self.regions.iter().find(|r| r.region == region)
    }

    /// Segment fits of one region, in time order.
    pub fn segment_constants(&self, region: Region) -> Vec<f64> {
        self.region(region)
            .map(|r| r.segments.iter().map(|s| s.constant[0]).collect())
            .unwrap_or_default()
    }
}

/// What the verdict is judged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    /// Each smooth segment separately.
    PerSegment,
    /// Each region as a whole.
    PerRegion,
    /// One polynomial across all samples.
    Global,
}

/// Groups `samples` by segment and region and fits each group.
pub(crate) fn assemble(
    quantity: &str,
    breaks: &[f64],
    points: &[SamplePoint],
    samples: Vec<Sample>,
    degree: usize,
    criterion: Criterion,
    tolerance: f64,
) -> FirstIntegralReport {
    let scale = samples
        .iter()
        .flat_map(|s| s.value.iter())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let threshold = tolerance * scale;
    let mut regions = Vec::new();
    let mut failing = Vec::new();
    for region in [Region::Advanced, Region::Terminal] {
        let in_region: Vec<&Sample> = samples.iter().filter(|s| s.region == region).collect();
        if in_region.is_empty() {
            continue;
        }
        let region_fit = fit_polynomial(&in_region, degree);
        let mut segments = Vec::new();
        let mut seg_ids: Vec<usize> = points
            .iter()
            .filter(|p| p.region == region)
            .map(|p| p.segment)
            .collect();
        seg_ids.dedup();
        for seg in seg_ids {
            let group: Vec<&Sample> = points
                .iter()
                .zip(&samples)
                .filter(|(p, _)| p.segment == seg)
                .map(|(_, s)| s)
                .collect();
            let fit = fit_polynomial(&group, degree);
            let interval = [breaks[seg], breaks[seg + 1]];
            if criterion == Criterion::PerSegment && fit.max_dev > threshold {
                failing.push(interval);
            }
            segments.push(SegmentFit {
                interval,
                region,
                constant: fit.mean.clone(),
                polynomial: (degree > 0).then(|| fit.coefficients.clone()),
                max_dev: fit.max_dev,
            });
        }
        if criterion == Criterion::PerRegion && region_fit.max_dev > threshold {
            failing.extend(
                segments
                    .iter()
                    .filter(|s| {
                        s.constant
                            .iter()
                            .zip(&region_fit.mean)
                            .any(|(a, b)| (a - b).abs() > threshold)
                            || s.max_dev > threshold
                    })
                    .map(|s| s.interval),
            );
        }
        regions.push(RegionFit {
            region,
            constant: region_fit.mean,
            max_dev: region_fit.max_dev,
            segments,
        });
    }
    let (polynomial, max_deviation, holds) = match criterion {
        Criterion::Global => {
            let all: Vec<&Sample> = samples.iter().collect();
            let fit = fit_polynomial(&all, degree);
            if fit.max_dev > threshold {
                // blame segments whose samples stray from the global fit
                for seg in regions.iter().flat_map(|r| &r.segments) {
                    let bad = samples
                        .iter()
                        .filter(|s| s.t > seg.interval[0] && s.t < seg.interval[1])
                        .any(|s| {
                            s.value
                                .iter()
                                .zip(&fit.coefficients)
                                .any(|(v, c)| (v - eval_poly(c, s.t)).abs() > threshold)
                        });
                    if bad {
                        failing.push(seg.interval);
                    }
                }
            }
            (Some(fit.coefficients), fit.max_dev, fit.max_dev <= threshold)
        }
        Criterion::PerRegion => {
            let dev = regions.iter().map(|r| r.max_dev).fold(0.0, f64::max);
            (None, dev, dev <= threshold)
        }
        Criterion::PerSegment => {
            let dev = regions
                .iter()
                .flat_map(|r| &r.segments)
                .map(|s| s.max_dev)
                .fold(0.0, f64::max);
            (None, dev, dev <= threshold)
        }
    };
    FirstIntegralReport {
        quantity: quantity.to_string(),
        mode: if criterion == Criterion::Global {
            FitMode::Global
        } else {
            FitMode::Regional
        },
        regions,
        polynomial,
        max_deviation,
        scale,
        tolerance,
        verdict: Verdict::from_bool(holds),
        failing_segments: failing,
        samples,
    }
}

pub fn eval_poly(coefficients: &[f64], t: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Pointwise residual of a condition that should vanish identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub quantity: String,
    pub points: usize,
    pub max_abs: f64,
    pub worst_t: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(skip)]
    pub samples: Vec<Sample>,
}

impl ResidualReport {
    pub(crate) fn new(quantity: &str, samples: Vec<Sample>, scale: f64, tolerance: f64) -> Self {
        let (max_abs, worst_t) = samples
            .iter()
            // a NaN residual must not pass as small
            .flat_map(|s| s.value.iter().map(move |v| (if v.is_nan() { f64::INFINITY } else { v.abs() }, s.t)))
            .fold((-1.0, f64::NAN), |acc, (v, t)| if v > acc.0 { (v, t) } else { acc });
        let max_abs = max_abs.max(0.0);
        let scale = scale.max(1.0);
        ResidualReport {
            quantity: quantity.to_string(),
            points: samples.len(),
            max_abs,
            worst_t,
            scale,
            tolerance,
            verdict: Verdict::from_bool(max_abs <= tolerance * scale),
            samples,
        }
    }
}
