use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ber::{measure_ber, BerCount, Scheme, StopRule};
use crate::channel::{ChannelConfig, InitialPhase, DEFAULT_REFERENCE_BANDWIDTH_HZ, DEFAULT_SYMBOL_RATE_HZ};
use crate::modem::BITS_PER_SYMBOL;
use crate::rng;
use crate::{Error, Result};

/// Linewidths evaluated in the full-scale study (Hz).
pub const STUDY_LINEWIDTHS_HZ: [f64; 7] = [10e3, 100e3, 200e3, 500e3, 1e6, 2e6, 3e6];

/// Hard-decision FEC threshold (7% overhead).
pub const DEFAULT_FEC_THRESHOLD: f64 = 3.8e-3;

/// A BER-vs-OSNR grid for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Name of the evaluated model, used as a column tag.
    pub model_tag: String,
    pub linewidths_hz: Vec<f64>,
    pub osnr_db: Vec<f64>,
    pub stop: StopRule,
    pub fec_threshold: f64,
    pub symbol_rate_hz: f64,
    pub reference_bandwidth_hz: f64,
    pub initial_phase: InitialPhase,
    pub seed: u64,
}

impl SweepSpec {
    /// Default stop rule and channel. `stop.min_bits` starts at 0 and must be
    /// raised to at least one block (4·N bits) before the spec validates.
    pub fn new(model_tag: impl Into<String>, linewidths_hz: Vec<f64>, osnr_db: Vec<f64>, seed: u64) -> Self {
        Self {
            model_tag: model_tag.into(),
            linewidths_hz,
            osnr_db,
            stop: StopRule::default(),
            fec_threshold: DEFAULT_FEC_THRESHOLD,
            symbol_rate_hz: DEFAULT_SYMBOL_RATE_HZ,
            reference_bandwidth_hz: DEFAULT_REFERENCE_BANDWIDTH_HZ,
            initial_phase: InitialPhase::Zero,
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite());
        if self.linewidths_hz.is_empty() || !sorted(&self.linewidths_hz) {
            return Err(Error::InvalidArgument(
                "linewidths must be non-empty, finite and strictly increasing".into(),
            ));
        }
        if self.osnr_db.is_empty() || !sorted(&self.osnr_db) {
            return Err(Error::InvalidArgument(
                "OSNR grid must be non-empty, finite and strictly increasing".into(),
            ));
        }
        if self.stop.min_bits < (BITS_PER_SYMBOL * n) as u64 {
            return Err(Error::InvalidArgument(format!(
                "min_bits {} is below 4·N = {}",
                self.stop.min_bits,
                BITS_PER_SYMBOL * n
            )));
        }
        if !(self.fec_threshold > 0.0 && self.fec_threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fec_threshold {}",
                self.fec_threshold
            )));
        }
        self.stop.validate(n)?;
        self.channel(self.linewidths_hz[0], self.osnr_db[0]).validate()
    }

    fn channel(&self, linewidth_hz: f64, osnr_db: f64) -> ChannelConfig {
        ChannelConfig {
            linewidth_hz,
            symbol_rate_hz: self.symbol_rate_hz,
            reference_bandwidth_hz: self.reference_bandwidth_hz,
            osnr_db: Some(osnr_db),
            use_ofdm_transforms: true,
            initial_phase: self.initial_phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub linewidth_hz: f64,
    pub osnr_db: f64,
    #[serde(flatten)]
    pub count: BerCount,
    pub confidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub block_len: usize,
    /// `points[i][j]` is linewidth `i` at OSNR `j`.
    pub points: Vec<Vec<SweepPoint>>,
    /// Per linewidth; `None` when the threshold is never reached.
    pub required_osnr_db: Vec<Option<f64>>,
}

impl SweepResult {
    /// BER curve of linewidth index `i`.
    pub fn curve(&self, i: usize) -> Vec<CurvePoint> {
        self.points[i]
            .iter()
            .map(|p| CurvePoint {
                osnr_db: p.osnr_db,
                ber: p.count.ber,
                bits: p.count.bits,
            })
            .collect()
    }
}

/// Measures every (linewidth, OSNR) point. Points run in parallel, each on
/// its own random stream, so the result does not depend on scheduling.
pub fn ber_osnr_sweep(scheme: Scheme<'_>, n: usize, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate(n)?;
    let cols = spec.osnr_db.len();
    let grid: Vec<(usize, usize)> = (0..spec.linewidths_hz.len())
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .collect();
    let flat = grid
        .par_iter()
        .map(|&(i, j)| {
            let (lw, osnr) = (spec.linewidths_hz[i], spec.osnr_db[j]);
            let mut r = rng::stream(spec.seed, rng::sweep_stream(i, j));
            measure_ber(scheme, n, &spec.channel(lw, osnr), &spec.stop, &mut r)
                .map(|count| SweepPoint {
                    linewidth_hz: lw,
                    osnr_db: osnr,
                    confidence: count.confidence_note(),
                    count,
                })
                .map_err(|e| Error::SweepPoint {
                    linewidth_hz: lw,
                    osnr_db: osnr,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<Vec<SweepPoint>> = flat.chunks(cols).map(<[_]>::to_vec).collect();
    let mut result = SweepResult {
        spec: spec.clone(),
        block_len: n,
        points,
        required_osnr_db: Vec::new(),
    };
    result.required_osnr_db = (0..spec.linewidths_hz.len())
        .map(|i| match result.curve(i).as_slice() {
            [only] => Ok((only.ber <= spec.fec_threshold).then_some(only.osnr_db)),
            curve => required_osnr(curve, spec.fec_threshold),
        })
        .collect::<Result<_>>()?;
    Ok(result)
}

/// One point of a BER curve; `bits` is only used to stand in for zero BER.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub osnr_db: f64,
    pub ber: f64,
    pub bits: u64,
}

/// OSNR at which the curve first reaches `threshold`, interpolating
/// `log10(BER)` linearly in dB between the two points around the crossing.
/// A zero BER counts as `1/(3·bits)`.
pub fn required_osnr(curve: &[CurvePoint], threshold: f64) -> Result<Option<f64>> {
    if curve.len() < 2 {
        return Err(Error::InvalidArgument(
            "a BER curve needs at least two points".into(),
        ));
    }
    if curve.windows(2).any(|w| !(w[0].osnr_db < w[1].osnr_db)) {
        return Err(Error::InvalidArgument("BER curve is not sorted by OSNR".into()));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold}")));
    }
    let log_ber = |p: &CurvePoint| -> Result<f64> {
        if !(0.0..=1.0).contains(&p.ber) {
            return Err(Error::InvalidArgument(format!(
                "BER {} at {} dB",
                p.ber, p.osnr_db
            )));
        }
        if p.ber > 0.0 {
            Ok(p.ber.log10())
        } else if p.bits > 0 {
            Ok((1.0 / (3.0 * p.bits as f64)).log10())
        } else {
            Err(Error::InvalidArgument(format!(
                "zero BER with no bits at {} dB",
                p.osnr_db
            )))
        }
    };
    if curve[0].ber <= threshold {
        return Ok(Some(curve[0].osnr_db));
    }
    let target = threshold.log10();
    for w in curve.windows(2) {
        if w[1].ber <= threshold {
            let (y0, y1) = (log_ber(&w[0])?, log_ber(&w[1])?);
            let t = if y1 == y0 { 1.0 } else { (target - y0) / (y1 - y0) };
            return Ok(Some(
                w[0].osnr_db + t.clamp(0.0, 1.0) * (w[1].osnr_db - w[0].osnr_db),
            ));
        }
    }
    Ok(None)
}

/// Compact linewidth tag: `10e3 → "10k"`, `1e6 → "1M"`, `2.5e5 → "250k"`.
pub fn linewidth_label(hz: f64) -> String {
    let (value, suffix) = if hz >= 1e9 {
        (hz / 1e9, "G")
    } else if hz >= 1e6 {
        (hz / 1e6, "M")
    } else if hz >= 1e3 {
        (hz / 1e3, "k")
    } else {
        (hz, "")
    };
    let rounded = (value * 1e6).round() / 1e6;
    format!("{rounded}{suffix}")
}
