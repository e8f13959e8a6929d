//! Wavelet scalograms of guided-wave records.

mod cwt;
mod image;

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::codec::{Reader, Writer};
use crate::error::{Error, FormatError, Result};
use crate::wavegen::{Label, TimeSeriesRecord};

pub use cwt::{
    cwt, cwt_with, morse_filter, morse_peak, CoefficientMatrix, CwtForm, WaveletParams,
    MIN_RECORD_LEN, MORSE_PEAK_GAIN,
};
pub use image::{colormap, flatten, resample, to_image, ImageTensor, LEVELS};

/// Record → scalogram image in one step.
pub fn scalogram(
    rec: &TimeSeriesRecord,
    params: &WaveletParams,
    height: usize,
    width: usize,
    channels: usize,
) -> Result<ImageTensor> {
    to_image(&cwt(rec, params)?, height, width, channels)
}

/// Labelled images sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCorpus {
    pub images: Vec<ImageTensor>,
    pub labels: Vec<Label>,
}

impl ImageCorpus {
    pub fn new(images: Vec<ImageTensor>, labels: Vec<Label>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "image corpus labels",
                expected: images.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = images.first() {
            if let Some(bad) = images.iter().find(|i| i.shape() != first.shape()) {
                return Err(Error::invalid(format!(
                    "corpus mixes image shapes {:?} and {:?}",
                    first.shape(),
                    bad.shape()
                )));
            }
        }
        Ok(Self { images, labels })
    }

    /// Scalograms of `records`, computed in parallel; order is preserved.
    pub fn from_records<'a, I>(records: I, params: &WaveletParams, height: usize, width: usize, channels: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TimeSeriesRecord>,
    {
        let recs: Vec<&TimeSeriesRecord> = records.into_iter().collect();
        let images = recs
            .par_iter()
            .map(|r| scalogram(r, params, height, width, channels))
            .collect::<Result<Vec<_>>>()?;
        let labels = recs.iter().map(|r| r.label).collect();
        Self::new(images, labels)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn shape(&self) -> Option<(usize, usize, usize)> {
        self.images.first().map(|i| i.shape())
    }

    /// Sub-corpus with the given label.
    pub fn filter(&self, label: Label) -> Self {
        let (images, labels) = self
            .images
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l == label)
            .map(|(i, l)| (i.clone(), *l))
            .unzip();
        Self { images, labels }
    }

    /// Concatenation of `self` and `other` (shapes must agree).
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut images = self.images.clone();
        images.extend(other.images.iter().cloned());
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().copied());
        Self::new(images, labels)
    }

    /// One flattened row per image.
    pub fn flattened(&self) -> Vec<Vec<f64>> {
        self.images.iter().map(|i| i.flatten()).collect()
    }

    /// Little-endian layout: `u32` count, `u16` height, `u16` width, `u8`
    /// channels, then per image a `u8` label code and `h·w·c` level bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (h, w, c) = self.shape().unwrap_or((0, 0, 1));
        let (h16, w16) = (
            u16::try_from(h).map_err(|_| Error::invalid("image height exceeds u16"))?,
            u16::try_from(w).map_err(|_| Error::invalid("image width exceeds u16"))?,
        );
        let mut out = Writer::new();
        out.u32(self.images.len() as u32);
        out.u16(h16);
        out.u16(w16);
        out.u8(c as u8);
        for (img, label) in self.images.iter().zip(&self.labels) {
            out.u8(label.code());
            out.bytes(&img.levels());
        }
        Ok(out.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        let header = |e: FormatError| FormatError::MalformedHeader(format!("image corpus header: {e}"));
        let count = r.u32().map_err(header)? as usize;
        let h = r.u16().map_err(header)? as usize;
        let w = r.u16().map_err(header)? as usize;
        let c = r.u8().map_err(header)? as usize;
        if count > 0 && (h == 0 || w == 0 || !(c == 1 || c == 3)) {
            return Err(FormatError::MalformedHeader(format!("image shape {h}x{w}x{c}")));
        }
        let mut images = Vec::with_capacity(count.min(1 << 16));
        let mut labels = Vec::with_capacity(count.min(1 << 16));
        for i in 0..count {
            let code = r.u8()?;
            labels.push(
                Label::from_code(code)
                    .ok_or_else(|| FormatError::Schema(format!("image {i}: label code {code}")))?,
            );
            let levels = r.take(h * w * c)?;
            images.push(
                ImageTensor::from_levels(h, w, c, levels)
                    .map_err(|e| FormatError::Schema(format!("image {i}: {e}")))?,
            );
        }
        r.finish()?;
        Ok(Self { images, labels })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|source| Error::Format {
            path: path.to_path_buf(),
            source,
        })
    }
}
