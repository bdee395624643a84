use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// How per-pixel Sobel responses are turned into gradient energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EnergyMode {
    /// `Gx² + Gy²`
    #[default]
    Squared,
    /// `sqrt(Gx² + Gy²)`
    Magnitude,
}

/// Row-major grayscale raster with intensities in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Returns `None` when `data.len() != width * height`.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == width * height).then_some(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        GrayImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_luma8(width: usize, height: usize, bytes: &[u8]) -> Option<Self> {
        Self::new(width, height, bytes.iter().map(|&b| b as f64).collect())
    }

    /// Interleaved RGB bytes converted with luma weights 0.299/0.587/0.114.
    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != width * height * 3 {
            return None;
        }
        let data = bytes
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sum of intensities over `[x0, x1) × [y0, y1)`.
    pub fn region_sum(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
        let mut total = 0.0;
        for y in y0..y1 {
            total += self.data[y * self.width + x0..y * self.width + x1].iter().sum::<f64>();
        }
        total
    }

    /// Per-pixel gradient energy from the 3×3 Sobel pair, replicating edge
    /// pixels at the borders.
    pub fn gradient_energy(&self, mode: EnergyMode) -> GrayImage {
        let (w, h) = (self.width, self.height);
        let mut out = vec![0.0; w * h];
        if w == 0 || h == 0 {
            return GrayImage {
                width: w,
                height: h,
                data: out,
            };
        }
        let at = |x: isize, y: isize| -> f64 {
            let cx = x.clamp(0, w as isize - 1) as usize;
            let cy = y.clamp(0, h as isize - 1) as usize;
            self.data[cy * w + cx]
        };
        for y in 0..h as isize {
            for x in 0..w as isize {
                let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                    - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
                let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                    - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
                let sq = gx * gx + gy * gy;
                out[y as usize * w + x as usize] = match mode {
                    EnergyMode::Squared => sq,
                    EnergyMode::Magnitude => libm::sqrt(sq),
                };
            }
        }
        GrayImage {
            width: w,
            height: h,
            data: out,
        }
    }
}
