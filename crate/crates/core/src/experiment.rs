//! Reproducible experiment suites producing comma-separated rows.
//!
//! Column orders are fixed; each suite's first row is its header.
//!
//! * `uniform-cost`: `suite,n,d,q,payload_bytes,bits_per_point,lower_bits_per_point,theory_bits_per_point,raw_bytes,container_bytes`
//! * `prediction-gain`: `suite,dataset,n,d,q,off_bytes,on_bytes,gain_percent`
//! * `linearity`: `suite,n,d,q,encode_ms,decode_ms,encode_ratio`

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::codec::{decode, encode};
use crate::config::CodecConfig;
use crate::cost::{CostReport, SEPARATION_BITS_PER_POINT};
use crate::error::{invalid, Error, Result};
use crate::generate::{DatasetSpec, Generator};
use crate::points::BoundsSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    UniformCost,
    PredictionGain,
    Linearity,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::UniformCost, Suite::PredictionGain, Suite::Linearity];

    pub fn id(self) -> &'static str {
        match self {
            Suite::UniformCost => "uniform-cost",
            Suite::PredictionGain => "prediction-gain",
            Suite::Linearity => "linearity",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Suite::UniformCost => &[
                "suite",
                "n",
                "d",
                "q",
                "payload_bytes",
                "bits_per_point",
                "lower_bits_per_point",
                "theory_bits_per_point",
                "raw_bytes",
                "container_bytes",
            ],
            Suite::PredictionGain => &["suite", "dataset", "n", "d", "q", "off_bytes", "on_bytes", "gain_percent"],
            Suite::Linearity => &["suite", "n", "d", "q", "encode_ms", "decode_ms", "encode_ratio"],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.id() == s)
            .ok_or_else(|| invalid(format!("unknown suite '{s}' (expected uniform-cost, prediction-gain or linearity)")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub n: u64,
    pub d: usize,
    pub report: CostReport,
}

impl CostRow {
    pub fn lower_bits_per_point(&self) -> f64 {
        f64::from(self.report.q) - (self.n as f64).log2()
    }

    pub fn csv(&self) -> String {
        let r = &self.report;
        format!(
            "uniform-cost,{},{},{},{},{:.4},{:.4},{:.4},{},{}",
            self.n,
            self.d,
            r.q,
            r.payload_bits / 8,
            r.bits_per_point(),
            self.lower_bits_per_point(),
            r.theoretical_bits_per_point(),
            r.raw_bytes(),
            r.container_bytes
        )
    }
}

pub const UNIFORM_COST_SIZES: [usize; 4] = [1 << 8, 1 << 10, 1 << 12, 1 << 14];

/// Uniform data in 2-D at 16 bits per axis.
pub fn uniform_cost(seed: u64) -> Result<Vec<CostRow>> {
    let bounds = BoundsSpec::uniform(2, 16)?;
    UNIFORM_COST_SIZES
        .iter()
        .map(|&n| {
            let points = DatasetSpec::new(Generator::Uniform, n, bounds.clone(), seed).generate()?;
            let bytes = encode(&points, &CodecConfig::default())?;
            Ok(CostRow { n: n as u64, d: 2, report: CostReport::from_container(&points, &bytes)? })
        })
        .collect()
}

/// Upper end of the accepted cost band: the model bound plus half a bit.
pub fn cost_band(n: u64, q: u32) -> (f64, f64) {
    let lower = f64::from(q) - (n as f64).log2();
    (lower, lower + SEPARATION_BITS_PER_POINT + 0.5)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainRow {
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub q: u32,
    pub off_bytes: usize,
    pub on_bytes: usize,
}

impl GainRow {
    pub fn gain_percent(&self) -> f64 {
        (1.0 - self.on_bytes as f64 / self.off_bytes as f64) * 100.0
    }

    pub fn csv(&self) -> String {
        format!(
            "prediction-gain,{},{},{},{},{},{},{:.3}",
            self.dataset,
            self.n,
            self.d,
            self.q,
            self.off_bytes,
            self.on_bytes,
            self.gain_percent()
        )
    }
}

pub fn gain_row(dataset: &str, spec: &DatasetSpec) -> Result<GainRow> {
    let points = spec.generate()?;
    let off = encode(&points, &CodecConfig::default())?;
    let on = encode(&points, &CodecConfig::default().with_prediction(true))?;
    Ok(GainRow {
        dataset: dataset.into(),
        n: points.len(),
        d: spec.bounds.dim(),
        q: spec.bounds.total_bits(),
        off_bytes: off.len(),
        on_bytes: on.len(),
    })
}

/// The clustered mixture and two uniform controls, all with 8192 points.
pub fn prediction_gain(seed: u64) -> Result<Vec<GainRow>> {
    let b2 = BoundsSpec::uniform(2, 12)?;
    let b3 = BoundsSpec::uniform(3, 10)?;
    Ok(vec![
        gain_row("gaussian-mixture", &DatasetSpec::new(Generator::mixture(), 8192, b2.clone(), seed))?,
        gain_row("uniform", &DatasetSpec::new(Generator::Uniform, 8192, b2, seed))?,
        gain_row("uniform-3d", &DatasetSpec::new(Generator::Uniform, 8192, b3, seed))?,
    ])
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    pub n: usize,
    pub d: usize,
    pub q: u32,
    pub encode_ms: f64,
    pub decode_ms: f64,
    /// Encode time relative to the first row.
    pub encode_ratio: f64,
}

impl TimingRow {
    pub fn csv(&self) -> String {
        format!(
            "linearity,{},{},{},{:.3},{:.3},{:.3}",
            self.n, self.d, self.q, self.encode_ms, self.decode_ms, self.encode_ratio
        )
    }
}

/// Best-of-`repeats` encode and decode times for uniform 2-D data at 16 bits
/// per axis.
pub fn linearity(sizes: &[usize], repeats: usize, seed: u64) -> Result<Vec<TimingRow>> {
    let bounds = BoundsSpec::uniform(2, 16)?;
    let config = CodecConfig::default();
    let mut rows: Vec<TimingRow> = Vec::new();
    for &n in sizes {
        let points = DatasetSpec::new(Generator::Uniform, n, bounds.clone(), seed).generate()?;
        let (mut enc_best, mut dec_best) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..repeats.max(1) {
            let t = Instant::now();
            let bytes = encode(&points, &config)?;
            enc_best = enc_best.min(t.elapsed().as_secs_f64() * 1e3);
            let t = Instant::now();
            let back = decode(&bytes)?;
            dec_best = dec_best.min(t.elapsed().as_secs_f64() * 1e3);
            debug_assert_eq!(back.len(), n);
        }
        let encode_ratio = rows.first().map_or(1.0, |r| enc_best / r.encode_ms);
        rows.push(TimingRow { n, d: 2, q: 32, encode_ms: enc_best, decode_ms: dec_best, encode_ratio });
    }
    Ok(rows)
}

pub const LINEARITY_SIZES: [usize; 2] = [1 << 14, 1 << 16];

/// Runs a suite and returns its CSV lines, header first.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<String>> {
    let mut lines = vec![suite.columns().join(",")];
    match suite {
        Suite::UniformCost => lines.extend(uniform_cost(seed)?.iter().map(CostRow::csv)),
        Suite::PredictionGain => lines.extend(prediction_gain(seed)?.iter().map(GainRow::csv)),
        Suite::Linearity => lines.extend(linearity(&LINEARITY_SIZES, 3, seed)?.iter().map(TimingRow::csv)),
    }
    Ok(lines)
}
