use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autoencoder::AeModel;
use crate::channel::{Channel, ChannelConfig};
use crate::modem::{count_bit_errors, demap_16qam, gen_random_bits, map_16qam, BitBlock, BITS_PER_SYMBOL};
use crate::nn::{Mode, RealBatch};
use crate::signal::{c2r, r2c};
use crate::{Error, Result};

/// When a Monte-Carlo BER point stops.
///
/// Simulation continues until `target_errors` errors or `max_bits` bits have
/// been seen, but never stops before `min_bits`. Bits are drawn in batches of
/// `blocks_per_batch` blocks; the last batch is shortened so the bit count
/// does not pass `max(min_bits, max_bits)` by more than one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub target_errors: u64,
    pub min_bits: u64,
    pub max_bits: u64,
    pub blocks_per_batch: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            target_errors: 100,
            min_bits: 0,
            max_bits: 10_000_000,
            blocks_per_batch: 64,
        }
    }
}

impl StopRule {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.blocks_per_batch == 0 {
            return Err(Error::InvalidArgument("blocks_per_batch must be >= 1".into()));
        }
        if self.max_bits == 0 {
            return Err(Error::InvalidArgument("max_bits must be >= 1".into()));
        }
        if self.min_bits < (BITS_PER_SYMBOL * n) as u64 && self.min_bits != 0 {
            return Err(Error::InvalidArgument(format!(
                "min_bits {} is below one block ({} bits)",
                self.min_bits,
                BITS_PER_SYMBOL * n
            )));
        }
        Ok(())
    }

    fn done(&self, bits: u64, errors: u64) -> bool {
        bits >= self.min_bits && (errors >= self.target_errors || bits >= self.max_bits)
    }
}

/// What sits between the bits and the channel.
#[derive(Debug, Clone, Copy)]
pub enum Scheme<'a> {
    /// Trained (or untrained) encoder and decoder, both in inference mode.
    Autoencoder(&'a AeModel),
    /// 16-QAM symbols sent as they are, with no phase-noise mitigation.
    PlainQam,
}

impl Scheme<'_> {
    fn encode(&self, x: &RealBatch) -> Result<RealBatch> {
        match self {
            Scheme::Autoencoder(m) => m.encoder_forward(x, Mode::Inference),
            Scheme::PlainQam => Ok(x.clone()),
        }
    }

    fn decode(&self, r: &RealBatch) -> Result<RealBatch> {
        match self {
            Scheme::Autoencoder(m) => m.decoder_forward(r, Mode::Inference),
            Scheme::PlainQam => Ok(r.clone()),
        }
    }
}

/// One measured BER point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerCount {
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
}

impl BerCount {
    /// Short description of the estimate's reliability.
    pub fn confidence_note(&self) -> String {
        if self.errors == 0 {
            // Rule of three: 95% upper bound with no observed errors.
            format!(
                "no errors in {} bits; BER < {:.2e} at 95%",
                self.bits,
                3.0 / self.bits as f64
            )
        } else {
            format!(
                "{} errors; relative standard error {:.1}%",
                self.errors,
                100.0 / (self.errors as f64).sqrt()
            )
        }
    }
}

/// Monte-Carlo BER of `scheme` over `channel` (block length `n`):
/// bits → 16-QAM → encoder → channel → decoder → hard decisions.
pub fn measure_ber<R: Rng + ?Sized>(
    scheme: Scheme<'_>,
    n: usize,
    channel: &ChannelConfig,
    stop: &StopRule,
    rng: &mut R,
) -> Result<BerCount> {
    if let Scheme::Autoencoder(m) = scheme {
        if m.block_len() != n {
            return Err(Error::Dimension(format!(
                "model block length {} does not match {n}",
                m.block_len()
            )));
        }
    }
    stop.validate(n)?;
    let channel = Channel::new(*channel, n)?;
    let bits_per_block = (BITS_PER_SYMBOL * n) as u64;
    let budget = stop.max_bits.max(stop.min_bits);
    let (mut bits, mut errors) = (0u64, 0u64);
    while !stop.done(bits, errors) {
        let remaining = budget.saturating_sub(bits).div_ceil(bits_per_block).max(1);
        let blocks = (stop.blocks_per_batch as u64).min(remaining) as usize;
        let tx = gen_random_bits(blocks * bits_per_block as usize, rng)?;
        let symbols = map_16qam(&tx);
        let rows: Vec<f64> = symbols.chunks_exact(n).flat_map(c2r).collect();
        let x = RealBatch::new(blocks, 2 * n, rows)?;
        let w = scheme.encode(&x)?;
        let (r, _) = channel.forward(&w, rng)?;
        let x_hat = scheme.decode(&r)?;
        let mut decided = Vec::with_capacity(tx.len());
        for row in 0..blocks {
            decided.extend_from_slice(demap_16qam(&r2c(x_hat.row(row))?).bits());
        }
        let (e, _) = count_bit_errors(&tx, &BitBlock::new(decided)?)?;
        bits += tx.len() as u64;
        errors += e;
    }
    Ok(BerCount {
        bits,
        errors,
        ber: errors as f64 / bits as f64,
    })
}
