use rand::Rng;

use crate::error::{Error, Result};

/// Dense channel-major `channels x height x width` integer volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor3 {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<i64>,
}

impl Tensor3 {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor3 {
            channels,
            height,
            width,
            data: vec![0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch {
                expected: format!(
                    "{} elements ({channels}x{height}x{width})",
                    channels * height * width
                ),
                found: format!("{} elements", data.len()),
            });
        }
        Ok(Tensor3 {
            channels,
            height,
            width,
            data,
        })
    }

    /// Uniform values in `lo..=hi`, skipping zero when `nonzero` is set.
    pub fn random<R: Rng>(
        rng: &mut R,
        shape: (usize, usize, usize),
        lo: i64,
        hi: i64,
        nonzero: bool,
    ) -> Self {
        let n = shape.0 * shape.1 * shape.2;
        let data = (0..n).map(|_| sample(rng, lo, hi, nonzero)).collect();
        Tensor3 {
            channels: shape.0,
            height: shape.1,
            width: shape.2,
            data,
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> i64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: i64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }
}

/// Convolution weights, `out_ch x in_ch x k_h x k_w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Weights {
    out_ch: usize,
    in_ch: usize,
    k_h: usize,
    k_w: usize,
    data: Vec<i64>,
}

impl Weights {
    pub fn zeros(out_ch: usize, in_ch: usize, k_h: usize, k_w: usize) -> Self {
        Weights {
            out_ch,
            in_ch,
            k_h,
            k_w,
            data: vec![0; out_ch * in_ch * k_h * k_w],
        }
    }

    pub fn from_vec(shape: (usize, usize, usize, usize), data: Vec<i64>) -> Result<Self> {
        let (out_ch, in_ch, k_h, k_w) = shape;
        if data.len() != out_ch * in_ch * k_h * k_w {
            return Err(Error::ShapeMismatch {
                expected: format!("{} weights", out_ch * in_ch * k_h * k_w),
                found: format!("{} weights", data.len()),
            });
        }
        Ok(Weights {
            out_ch,
            in_ch,
            k_h,
            k_w,
            data,
        })
    }

    pub fn random<R: Rng>(
        rng: &mut R,
        shape: (usize, usize, usize, usize),
        lo: i64,
        hi: i64,
        nonzero: bool,
    ) -> Self {
        let n = shape.0 * shape.1 * shape.2 * shape.3;
        let data = (0..n).map(|_| sample(rng, lo, hi, nonzero)).collect();
        Weights::from_vec(shape, data).expect("length matches shape")
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.out_ch, self.in_ch, self.k_h, self.k_w)
    }

    #[inline]
    pub fn get(&self, o: usize, i: usize, ky: usize, kx: usize) -> i64 {
        self.data[((o * self.in_ch + i) * self.k_h + ky) * self.k_w + kx]
    }

    #[inline]
    pub fn set(&mut self, o: usize, i: usize, ky: usize, kx: usize, v: i64) {
        self.data[((o * self.in_ch + i) * self.k_h + ky) * self.k_w + kx] = v;
    }
}

fn sample<R: Rng>(rng: &mut R, lo: i64, hi: i64, nonzero: bool) -> i64 {
    loop {
        let v = rng.gen_range(lo..=hi);
        if !nonzero || v != 0 || (lo == 0 && hi == 0) {
            return v;
        }
    }
}
