//! Planar floating-point raster.

use std::fmt;

use crate::error::{Error, Result};

/// Rec.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// An `height × width × channels` raster with values in `[0, 1]`.
///
/// Samples are stored channel-planar: plane `c` occupies
/// `data[c*h*w .. (c+1)*h*w]`, each plane row-major.
#[derive(Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} samples", height * width * channels),
                found: format!("{} samples", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data"));
        }
        if data.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::invalid("image samples must lie in [0, 1]"));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds an image from arbitrary finite samples, clamping into `[0, 1]`.
    pub fn from_clamped(height: usize, width: usize, channels: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data"));
        }
        data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Image::new(height, width, channels, data)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        check_dims(height, width, channels)?;
        Image::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Evaluates `f(channel, y, x)` at every sample; results are clamped.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(height, width, channels)?;
        let mut data = Vec::with_capacity(height * width * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Image::from_clamped(height, width, channels, data)
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

    /// Pixels per plane.
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn get(&self, channel: usize, y: usize, x: usize) -> f64 {
        self.data[channel * self.plane_len() + y * self.width + x]
    }

    /// Applies `f` to every sample, clamping the result into `[0, 1]`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        let data = self.data.iter().map(|&v| f(v).clamp(0.0, 1.0)).collect();
        self.with_data(data)
    }

    /// Luminance plane: the single channel for gray images, Rec.601 luma for RGB.
    pub fn luminance(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.data.clone();
        }
        let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
        (0..self.plane_len())
            .map(|i| LUMA_WEIGHTS[0] * r[i] + LUMA_WEIGHTS[1] * g[i] + LUMA_WEIGHTS[2] * b[i])
            .collect()
    }

    /// Mirrors every row.
    pub fn flip_horizontal(&self) -> Image {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.channels {
            let p = self.plane(c);
            for y in 0..self.height {
                let row = &p[y * self.width..(y + 1) * self.width];
                data.extend(row.iter().rev());
            }
        }
        self.with_data(data)
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: shape_string(self.shape()),
                found: shape_string(other.shape()),
            })
        }
    }

    /// Same dimensions, new samples. Caller guarantees length and range.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> Image {
        debug_assert_eq!(data.len(), self.data.len());
        Image {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
        }
    }
}

pub(crate) fn shape_string((h, w, c): (usize, usize, usize)) -> String {
    format!("{h}x{w}x{c}")
}

fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(format!("image dimensions must be positive, got {height}x{width}")));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::invalid(format!("images have 1 or 3 channels, got {channels}")));
    }
    Ok(())
}
