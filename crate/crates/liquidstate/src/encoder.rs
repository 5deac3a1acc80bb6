//! Cosine-rank latency encoding: maps a phase frame to a sparse binary
//! spike matrix with one row per (cell, channel) pair and one column per
//! 1 ms time bin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{PhaseFrame, FRAME_COLS, FRAME_ROWS};

/// Encoder parameters.
///
/// `amplitude` is the number of discrete 1 ms time bins per window;
/// `coding_n` is the number of phase-shifted cosine channels per cell and
/// multiplies the input-neuron count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodingConfig {
    pub amplitude: u32,
    pub coding_n: u32,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            amplitude: 30,
            coding_n: 2,
        }
    }
}

impl EncodingConfig {
    pub fn new(amplitude: u32, coding_n: u32) -> Result<Self> {
        let cfg = Self {
            amplitude,
            coding_n,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitude < 2 {
            return Err(Error::InvalidConfig(format!(
                "amplitude must be >= 2, got {}",
                self.amplitude
            )));
        }
        if self.coding_n < 1 {
            return Err(Error::InvalidConfig("coding_n must be >= 1".into()));
        }
        Ok(())
    }

    /// Rows of the encoded matrix for one 19x10 frame.
    pub fn encoded_rows(&self) -> usize {
        FRAME_ROWS * FRAME_COLS * self.coding_n as usize
    }
}

/// Binary spike matrix of shape `(p*q*n, A)` with at most one spike per row.
///
/// Stored as one optional bin index per row, which makes the one-spike-per-row
/// invariant structural. Columns are 1 ms bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSpikes {
    bins: Vec<Option<u16>>,
    n_bins: u32,
}

impl EncodedSpikes {
    /// Builds a spike matrix from per-row bin indices.
    pub fn from_spike_bins(bins: Vec<Option<u16>>, n_bins: u32) -> Result<Self> {
        for (row, bin) in bins.iter().enumerate() {
            if let Some(b) = bin {
                if u32::from(*b) >= n_bins {
                    return Err(Error::OutOfRange(format!(
                        "row {row}: bin {b} outside [0, {})",
                        n_bins
                    )));
                }
            }
        }
        Ok(Self { bins, n_bins })
    }

    pub fn rows(&self) -> usize {
        self.bins.len()
    }

    /// Number of time bins (columns).
    pub fn n_bins(&self) -> u32 {
        self.n_bins
    }

    /// The spike bin of one row, if the row spikes at all.
    pub fn spike_bin(&self, row: usize) -> Option<u16> {
        self.bins[row]
    }

    pub fn spike_bins(&self) -> &[Option<u16>] {
        &self.bins
    }

    pub fn is_set(&self, row: usize, col: u32) -> bool {
        self.bins[row] == Some(col as u16)
    }

    /// Total number of ones in the matrix.
    pub fn count_ones(&self) -> usize {
        self.bins.iter().filter(|b| b.is_some()).count()
    }

    /// Row indices spiking in each bin, indexed by bin.
    pub fn rows_by_bin(&self) -> Vec<Vec<u32>> {
        let mut by_bin = vec![Vec::new(); self.n_bins as usize];
        for (row, bin) in self.bins.iter().enumerate() {
            if let Some(b) = bin {
                by_bin[*b as usize].push(row as u32);
            }
        }
        by_bin
    }
}

/// Spike bin for one phase value on one cosine channel.
///
/// `y = 0.5 * A * (cos(x + pi*i/n) + 1)` is clipped to `[0, A-1]` and
/// truncated to an integer bin; a row stays silent exactly when the clipped
/// value is zero, which is the encoding's sparsity mechanism.
pub fn spike_time(x: f64, channel: u32, cfg: &EncodingConfig) -> Result<Option<u32>> {
    if !(0.0..=std::f64::consts::PI).contains(&x) {
        return Err(Error::OutOfRange(format!("phase {x} outside [0, pi]")));
    }
    if channel >= cfg.coding_n {
        return Err(Error::OutOfRange(format!(
            "channel {channel} outside [0, {})",
            cfg.coding_n
        )));
    }
    Ok(spike_time_unchecked(x, channel, cfg))
}

#[inline]
fn spike_time_unchecked(x: f64, channel: u32, cfg: &EncodingConfig) -> Option<u32> {
    let a = f64::from(cfg.amplitude);
    let shift = std::f64::consts::PI * f64::from(channel) / f64::from(cfg.coding_n);
    let y = 0.5 * a * ((x + shift).cos() + 1.0);
    let clipped = y.clamp(0.0, a - 1.0);
    if clipped == 0.0 {
        None
    } else {
        Some(clipped.trunc() as u32)
    }
}

/// Encodes a full phase frame.
///
/// Cell `(j, k)` on channel `i` owns row `(j*q + k)*n + i`; its column is
/// [`spike_time`] of the cell's phase. Pure and deterministic.
pub fn encode(frame: &PhaseFrame, cfg: &EncodingConfig) -> Result<EncodedSpikes> {
    cfg.validate()?;
    let n = cfg.coding_n as usize;
    let mut bins = vec![None; FRAME_ROWS * FRAME_COLS * n];
    for j in 0..FRAME_ROWS {
        for k in 0..FRAME_COLS {
            let x = frame.phase(j, k);
            for i in 0..cfg.coding_n {
                let row = (j * FRAME_COLS + k) * n + i as usize;
                bins[row] = spike_time_unchecked(x, i, cfg).map(|b| b as u16);
            }
        }
    }
    Ok(EncodedSpikes {
        bins,
        n_bins: cfg.amplitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{
        normalize_to_phase, NormalizationMode, PostureLabel, PressureFrame, FRAME_CELLS,
    };
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg(a: u32, n: u32) -> EncodingConfig {
        EncodingConfig::new(a, n).unwrap()
    }

    fn phase_frame_fill(value: f64) -> PhaseFrame {
        PhaseFrame::new([[value; FRAME_COLS]; FRAME_ROWS]).unwrap()
    }

    #[test]
    fn spike_time_examples() {
        let c30 = cfg(30, 2);
        // cos(pi) = -1 -> y = 0 -> silent
        assert_eq!(spike_time(PI, 0, &c30).unwrap(), None);
        // cos(0) = 1 -> y = 30 clipped to 29
        assert_eq!(spike_time(0.0, 0, &c30).unwrap(), Some(29));
        // channel shifted by pi/2: cos(pi) = -1 -> silent
        assert_eq!(spike_time(PI / 2.0, 1, &c30).unwrap(), None);
        // cos(pi/2) = 0 -> y = 15
        assert_eq!(spike_time(PI / 2.0, 0, &c30).unwrap(), Some(15));
    }

    #[test]
    fn spike_time_rejects_bad_inputs() {
        let c = cfg(30, 2);
        assert!(spike_time(-0.1, 0, &c).is_err());
        assert!(spike_time(PI + 0.1, 0, &c).is_err());
        assert!(spike_time(1.0, 2, &c).is_err());
    }

    #[test]
    fn encode_shapes() {
        let frame = phase_frame_fill(1.0);
        let e2 = encode(&frame, &cfg(30, 2)).unwrap();
        assert_eq!(e2.rows(), 380);
        assert_eq!(e2.n_bins(), 30);
        let e1 = encode(&frame, &cfg(30, 1)).unwrap();
        assert_eq!(e1.rows(), 190);
    }

    #[test]
    fn encode_all_pi_frame_silences_channel_zero_only() {
        // At x = pi the unshifted cosine bottoms out, so channel 0 is
        // silent; shifted channels still see cos(pi + shift) > -1.
        let frame = phase_frame_fill(PI);
        let e = encode(&frame, &cfg(30, 1)).unwrap();
        assert_eq!(e.count_ones(), 0);

        let e = encode(&frame, &cfg(30, 2)).unwrap();
        assert_eq!(e.count_ones(), FRAME_CELLS);
        for row in 0..e.rows() {
            let channel = row % 2;
            assert_eq!(e.spike_bin(row).is_some(), channel == 1, "row {row}");
        }
    }

    #[test]
    fn encode_single_active_cell() {
        let mut phases = [[PI; FRAME_COLS]; FRAME_ROWS];
        phases[0][0] = 0.0;
        let frame = PhaseFrame::new(phases).unwrap();
        let e = encode(&frame, &cfg(30, 1)).unwrap();
        assert_eq!(e.count_ones(), 1);
        assert_eq!(e.spike_bin(0), Some(29));
        assert!(e.is_set(0, 29));
    }

    #[test]
    fn encode_matches_per_cell_reevaluation() {
        // Brute-force oracle: recompute every (cell, channel) bin directly
        // from the formula and compare against the assembled matrix.
        let mut values = [[0u16; FRAME_COLS]; FRAME_ROWS];
        let mut v = 13u32;
        for row in &mut values {
            for cell in row.iter_mut() {
                v = (v * 421 + 17) % 1024;
                *cell = v as u16;
            }
        }
        let frame = PressureFrame::new(values, 1, PostureLabel::Upright).unwrap();
        let phases = normalize_to_phase(&frame, NormalizationMode::FixedRange);
        let c = cfg(30, 2);
        let encoded = encode(&phases, &c).unwrap();

        for j in 0..FRAME_ROWS {
            for k in 0..FRAME_COLS {
                for i in 0..2u32 {
                    let x = phases.phase(j, k);
                    let y = 0.5 * 30.0 * ((x + PI * f64::from(i) / 2.0).cos() + 1.0);
                    let clipped = y.clamp(0.0, 29.0);
                    let expected = if clipped == 0.0 {
                        None
                    } else {
                        Some(clipped.trunc() as u16)
                    };
                    let row = (j * FRAME_COLS + k) * 2 + i as usize;
                    assert_eq!(encoded.spike_bin(row), expected, "cell ({j},{k}) ch {i}");
                }
            }
        }
    }

    #[test]
    fn channel_coverage_on_adc_grid() {
        // Channel 0 is silent only for the maximal phase; channel 1 fires for
        // every 10-bit value because x = pi/2 never lands on the grid.
        let c = cfg(30, 2);
        for v in 0..=1023u32 {
            let x = f64::from(v) / 1023.0 * PI;
            let ch0 = spike_time(x, 0, &c).unwrap();
            let ch1 = spike_time(x, 1, &c).unwrap();
            assert_eq!(ch0.is_some(), v != 1023, "v = {v}");
            assert!(ch1.is_some(), "v = {v}");
        }
        // Exact boundary phases.
        assert_eq!(spike_time(PI, 0, &c).unwrap(), None);
        assert_eq!(spike_time(PI / 2.0, 1, &c).unwrap(), None);
    }

    #[test]
    fn rows_by_bin_indexes_every_spike() {
        let mut phases = [[PI; FRAME_COLS]; FRAME_ROWS];
        phases[0][0] = 0.0;
        phases[3][4] = 1.2;
        let frame = PhaseFrame::new(phases).unwrap();
        let e = encode(&frame, &cfg(30, 2)).unwrap();
        let by_bin = e.rows_by_bin();
        let total: usize = by_bin.iter().map(Vec::len).sum();
        assert_eq!(total, e.count_ones());
        for (bin, rows) in by_bin.iter().enumerate() {
            for &row in rows {
                assert!(e.is_set(row as usize, bin as u32));
            }
        }
    }

    #[test]
    fn from_spike_bins_rejects_out_of_range_bin() {
        assert!(EncodedSpikes::from_spike_bins(vec![Some(30)], 30).is_err());
        assert!(EncodedSpikes::from_spike_bins(vec![Some(29), None], 30).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(EncodingConfig::new(1, 2).is_err());
        assert!(EncodingConfig::new(30, 0).is_err());
        assert!(EncodingConfig::new(2, 1).is_ok());
    }

    proptest! {
        #[test]
        fn sparsity_bound(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut phases = [[0.0; FRAME_COLS]; FRAME_ROWS];
            for row in &mut phases {
                for p in row.iter_mut() {
                    *p = rng.gen_range(0.0..=PI);
                }
            }
            let frame = PhaseFrame::new(phases).unwrap();
            let c = cfg(30, 2);
            let e = encode(&frame, &c).unwrap();
            prop_assert!(e.count_ones() <= c.encoded_rows());
        }

        #[test]
        fn monotonic_latency_channel0(x1 in 0.0..PI, x2 in 0.0..PI) {
            let c = cfg(30, 1);
            let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
            if let (Some(t_lo), Some(t_hi)) =
                (spike_time(lo, 0, &c).unwrap(), spike_time(hi, 0, &c).unwrap())
            {
                // lower phase (lower pressure) never fires earlier
                prop_assert!(t_lo >= t_hi);
            }
        }

        #[test]
        fn encode_is_deterministic(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut phases = [[0.0; FRAME_COLS]; FRAME_ROWS];
            for row in &mut phases {
                for p in row.iter_mut() {
                    *p = rng.gen_range(0.0..=PI);
                }
            }
            let frame = PhaseFrame::new(phases).unwrap();
            let c = cfg(30, 2);
            prop_assert_eq!(encode(&frame, &c).unwrap(), encode(&frame, &c).unwrap());
        }
    }
}
