//! Greyscale image output for frames, spike trains, and reservoir rasters.
//!
//! Everything here writes binary PGM (`P5`, maxval 255), which any image
//! viewer and most plotting tools open directly. Images are built in memory
//! as a [`GreyImage`] so tests can inspect pixels without touching disk.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::encoder::EncodedSpikes;
use crate::error::{Error, Result};
use crate::frames::{PressureFrame, FRAME_COLS, FRAME_ROWS, MAX_ADC};
use crate::reservoir::SpikeRaster;

/// Row-major 8-bit greyscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreyImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GreyImage {
    /// Solid image of the given fill value. Width and height must be nonzero.
    pub fn new(width: usize, height: usize, fill: u8) -> Result<GreyImage> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be nonzero, got {width}x{height}"
            )));
        }
        Ok(GreyImage {
            width,
            height,
            pixels: vec![fill; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }

    /// Nearest-neighbour upscale by an integer factor.
    pub fn scaled(&self, factor: usize) -> Result<GreyImage> {
        if factor == 0 {
            return Err(Error::InvalidInput("scale factor must be nonzero".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let mut out = GreyImage::new(self.width * factor, self.height * factor, 0)?;
        for r in 0..out.height {
            for c in 0..out.width {
                out.set(r, c, self.get(r / factor, c / factor));
            }
        }
        Ok(out)
    }

    /// Writes the image as binary PGM.
    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let ctx = path.display().to_string();
        let file = File::create(path).map_err(|e| Error::io_context(ctx.clone(), e))?;
        let mut w = BufWriter::new(file);
        let header = format!("P5\n{} {}\n255\n", self.width, self.height);
        w.write_all(header.as_bytes())
            .and_then(|_| w.write_all(&self.pixels))
            .and_then(|_| w.flush())
            .map_err(|e| Error::io_context(ctx, e))
    }
}

/// Renders a pressure frame as a heatmap: black at zero pressure, white at
/// full scale. One pixel per sensor cell before scaling.
pub fn frame_heatmap(frame: &PressureFrame) -> GreyImage {
    let mut img = GreyImage::new(FRAME_COLS, FRAME_ROWS, 0).expect("static dims");
    for r in 0..FRAME_ROWS {
        for c in 0..FRAME_COLS {
            let v = frame.value(r, c) as u32;
            img.set(r, c, ((v * 255 + MAX_ADC as u32 / 2) / MAX_ADC as u32) as u8);
        }
    }
    img
}

/// Renders an encoded spike matrix as a bitmap: black marks on white, one
/// pixel per (input row, time bin) cell.
pub fn spike_bitmap(spikes: &EncodedSpikes) -> GreyImage {
    let mut img = GreyImage::new(spikes.n_bins().max(1) as usize, spikes.rows().max(1), 255)
        .expect("nonzero dims");
    for row in 0..spikes.rows() {
        if let Some(bin) = spikes.spike_bin(row) {
            img.set(row, bin as usize, 0);
        }
    }
    img
}

/// Renders a reservoir raster as a bitmap with one row per neuron and one
/// column per millisecond step; black marks spikes.
pub fn raster_bitmap(raster: &SpikeRaster) -> GreyImage {
    let mut img =
        GreyImage::new(raster.n_steps().max(1), raster.n_neurons().max(1), 255)
            .expect("nonzero dims");
    for n in 0..raster.n_neurons() {
        for t in raster.spike_times(n) {
            img.set(n, t, 0);
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::PostureLabel;

    #[test]
    fn pgm_bytes_have_expected_header_and_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let mut img = GreyImage::new(3, 2, 7).unwrap();
        img.set(1, 2, 200);
        img.save_pgm(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..9], b"P5\n3 2\n25");
        let payload = &bytes[bytes.len() - 6..];
        assert_eq!(payload, &[7, 7, 7, 7, 7, 200]);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(GreyImage::new(0, 4, 0).is_err());
        assert!(GreyImage::new(4, 0, 0).is_err());
    }

    #[test]
    fn heatmap_maps_adc_range_onto_full_grey_range() {
        let mut values = [[0u16; FRAME_COLS]; FRAME_ROWS];
        values[0][0] = MAX_ADC;
        values[5][3] = MAX_ADC / 2;
        let frame = PressureFrame::new(values, 1, PostureLabel::Upright).unwrap();
        let img = frame_heatmap(&frame);
        assert_eq!(img.width(), FRAME_COLS);
        assert_eq!(img.height(), FRAME_ROWS);
        assert_eq!(img.get(0, 0), 255);
        assert_eq!(img.get(18, 9), 0);
        let mid = img.get(5, 3);
        assert!((126..=128).contains(&mid), "midscale mapped to {mid}");
    }

    #[test]
    fn spike_bitmap_marks_exactly_the_spiking_cells() {
        let spikes =
            EncodedSpikes::from_spike_bins(vec![Some(0), None, Some(4)], 5).unwrap();
        let img = spike_bitmap(&spikes);
        assert_eq!((img.width(), img.height()), (5, 3));
        let black: Vec<(usize, usize)> = (0..img.height())
            .flat_map(|r| (0..img.width()).map(move |c| (r, c)))
            .filter(|&(r, c)| img.get(r, c) == 0)
            .collect();
        assert_eq!(black, vec![(0, 0), (2, 4)]);
    }

    #[test]
    fn scaling_replicates_pixels() {
        let mut img = GreyImage::new(2, 1, 10).unwrap();
        img.set(0, 1, 99);
        let big = img.scaled(3).unwrap();
        assert_eq!((big.width(), big.height()), (6, 3));
        assert_eq!(big.get(0, 0), 10);
        assert_eq!(big.get(2, 2), 10);
        assert_eq!(big.get(2, 3), 99);
        assert_eq!(big.get(0, 5), 99);
        assert!(img.scaled(0).is_err());
    }

    #[test]
    fn raster_bitmap_is_neurons_by_steps() {
        use crate::reservoir::SpikeRaster;
        let mut raster = SpikeRaster::new(4, 6);
        raster.mark(2, 5);
        raster.mark(0, 1);
        let img = raster_bitmap(&raster);
        assert_eq!((img.width(), img.height()), (6, 4));
        assert_eq!(img.get(2, 5), 0);
        assert_eq!(img.get(0, 1), 0);
        assert_eq!(img.get(3, 3), 255);
    }
}
