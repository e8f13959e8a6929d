use serde::{Deserialize, Serialize};

use super::cwt::CoefficientMatrix;
use crate::error::{Error, Result};

/// Number of intensity levels in a quantized image.
pub const LEVELS: usize = 256;

/// Height × width × channels intensities in `[0, 1]`, row-major with the
/// channel index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if !(channels == 1 || channels == 3) {
            return Err(Error::invalid(format!("channels must be 1 or 3, got {channels}")));
        }
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::DimensionMismatch {
                context: "image pixels",
                expected: height * width * channels,
                got: pixels.len(),
            });
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    pub fn from_levels(height: usize, width: usize, channels: usize, levels: &[u8]) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            levels.iter().map(|&l| l as f64 / 255.0).collect(),
        )
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    /// Nearest 8-bit level of every pixel.
    pub fn levels(&self) -> Vec<u8> {
        self.pixels.iter().map(|v| (v * 255.0).round() as u8).collect()
    }

    /// Whether every pixel is exactly one of the 256 levels `k/255`.
    pub fn is_quantized(&self) -> bool {
        self.pixels
            .iter()
            .all(|v| ((v * 255.0).round() / 255.0) == *v)
    }

    /// Row-major flattening (row, column, channel).
    pub fn flatten(&self) -> Vec<f64> {
        self.pixels.clone()
    }

    /// Inverse of [`ImageTensor::flatten`].
    pub fn reshape(flat: Vec<f64>, height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, flat)
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }
}

pub fn flatten(img: &ImageTensor) -> Vec<f64> {
    img.flatten()
}

/// Separable triangle-filter weights mapping `src` samples onto `dst`
/// samples with pixel-center alignment. When shrinking, the filter support
/// widens by the reduction factor so every source sample contributes.
fn triangle_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    let support = scale.max(1.0);
    (0..dst)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale;
            let lo = ((center - support).floor().max(0.0)) as usize;
            let hi = ((center + support).ceil() as usize).min(src);
            let mut w: Vec<(usize, f64)> = (lo..hi)
                .filter_map(|j| {
                    let d = ((j as f64 + 0.5) - center).abs() / support;
                    (d < 1.0).then_some((j, 1.0 - d))
                })
                .collect();
            if w.is_empty() {
                let j = (center.floor() as usize).min(src - 1);
                w.push((j, 1.0));
            }
            let total: f64 = w.iter().map(|(_, v)| v).sum();
            w.iter_mut().for_each(|(_, v)| *v /= total);
            w
        })
        .collect()
}

/// Bilinear (triangle-filter) resampling of a `rows × cols` grid.
pub fn resample(values: &[f64], rows: usize, cols: usize, out_rows: usize, out_cols: usize) -> Vec<f64> {
    let wc = triangle_weights(cols, out_cols);
    let wr = triangle_weights(rows, out_rows);
    let mut tmp = vec![0.0; rows * out_cols];
    for r in 0..rows {
        let src = &values[r * cols..(r + 1) * cols];
        for (c, w) in wc.iter().enumerate() {
            tmp[r * out_cols + c] = w.iter().map(|&(j, k)| src[j] * k).sum();
        }
    }
    let mut out = vec![0.0; out_rows * out_cols];
    for (r, w) in wr.iter().enumerate() {
        for c in 0..out_cols {
            out[r * out_cols + c] = w.iter().map(|&(j, k)| tmp[j * out_cols + c] * k).sum();
        }
    }
    out
}

/// 256-entry RGB lookup table used for three-channel images.
///
/// Entry `k` with `x = k / 255` is `round(255 · clamp(1.5 − |4x − c|, 0, 1))`
/// with `c = 3, 2, 1` for red, green and blue: dark blue through cyan,
/// yellow and red.
pub fn colormap() -> [[u8; 3]; LEVELS] {
    let mut lut = [[0u8; 3]; LEVELS];
    for (k, entry) in lut.iter_mut().enumerate() {
        let x = k as f64 / 255.0;
        for (ch, c) in [3.0, 2.0, 1.0].iter().enumerate() {
            let v = (1.5 - (4.0 * x - c).abs()).clamp(0.0, 1.0);
            entry[ch] = (v * 255.0).round() as u8;
        }
    }
    lut
}

/// Scalogram image: |coefficients| resampled to `height × width`, min–max
/// normalized to `[0, 1]` and quantized to 256 levels. Row 0 holds the
/// smallest scale (highest frequency). A matrix of constant magnitude
/// yields an all-zero image.
pub fn to_image(cm: &CoefficientMatrix, height: usize, width: usize, channels: usize) -> Result<ImageTensor> {
    if !(channels == 1 || channels == 3) {
        return Err(Error::invalid(format!("channels must be 1 or 3, got {channels}")));
    }
    if height == 0 || width == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    let mag = cm.magnitude();
    let grid = resample(&mag, cm.n_scales(), cm.n_times(), height, width);
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let levels: Vec<u8> = if hi > lo {
        grid.iter()
            .map(|v| (((v - lo) / (hi - lo)) * 255.0).round() as u8)
            .collect()
    } else {
        vec![0; grid.len()]
    };
    if channels == 1 {
        return ImageTensor::from_levels(height, width, 1, &levels);
    }
    let lut = colormap();
    let rgb: Vec<u8> = levels.iter().flat_map(|&l| lut[l as usize]).collect();
    ImageTensor::from_levels(height, width, 3, &rgb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CoefficientMatrix {
        let v = (0..rows * cols)
            .map(|i| Complex64::new(f(i / cols, i % cols), 0.0))
            .collect();
        CoefficientMatrix::from_parts(v, (1..=rows).map(|a| a as f64).collect(), cols, 1.0).unwrap()
    }

    #[test]
    fn flatten_is_row_major() {
        let img = ImageTensor::new(2, 2, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(flatten(&img), vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn flatten_length_256_square() {
        let img = ImageTensor::zeros(256, 256, 1).unwrap();
        assert_eq!(flatten(&img).len(), 65_536);
    }

    #[test]
    fn zero_coefficients_give_zero_image() {
        let img = to_image(&matrix(8, 40, |_, _| 0.0), 16, 16, 1).unwrap();
        assert!(img.pixels().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn paper_shape_has_196608_values() {
        let cm = matrix(64, 512, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let img = to_image(&cm, 256, 256, 3).unwrap();
        assert_eq!(img.shape(), (256, 256, 3));
        assert_eq!(img.pixels().len(), 196_608);
        assert!(img.is_quantized());
    }

    #[test]
    fn hot_cell_lands_on_nearest_output_pixel() {
        // 8 → 16 upsampling: source cell (5, 2) covers output rows/cols 10..12, 4..6.
        let cm = matrix(8, 8, |r, c| if (r, c) == (5, 2) { 3.0 } else { 0.0 });
        let img = to_image(&cm, 16, 16, 1).unwrap();
        let levels = img.levels();
        let hot: Vec<(usize, usize)> = (0..256)
            .filter(|i| levels[*i] == 255)
            .map(|i| (i / 16, i % 16))
            .collect();
        assert!(!hot.is_empty());
        for (r, c) in hot {
            assert!((10..12).contains(&r) && (4..6).contains(&c), "({r},{c})");
        }
    }

    #[test]
    fn colormap_is_fixed() {
        let lut = colormap();
        assert_eq!(lut[0], [0, 0, 128]);
        assert_eq!(lut[255], [128, 0, 0]);
        assert_eq!(lut[128], [130, 255, 126]);
        assert_eq!(lut[64], [0, 129, 255]);
    }

    #[test]
    fn bad_channel_count_is_rejected() {
        assert!(to_image(&matrix(4, 20, |_, _| 1.0), 4, 4, 2).is_err());
    }
}
