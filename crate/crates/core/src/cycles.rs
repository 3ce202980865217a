//! Closed-form cycle counts for one layer on one array.
//!
//! All arithmetic is exact integer math. Two AR rules coexist:
//! kernel-sized windows (im2col) pack rows continuously, larger windows
//! tile whole input channels.

use crate::error::{Error, Result};
use crate::model::{ArraySpec, LayerSpec, WindowShape};

/// `num_pw * ar_cycles * ac_cycles = total`, all at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CycleBreakdown {
    pub num_pw: u64,
    pub ar_cycles: u64,
    pub ac_cycles: u64,
    pub total: u64,
}

impl CycleBreakdown {
    pub fn new(num_pw: u64, ar_cycles: u64, ac_cycles: u64) -> Self {
        CycleBreakdown {
            num_pw,
            ar_cycles,
            ac_cycles,
            total: num_pw * ar_cycles * ac_cycles,
        }
    }
}

/// Parallel-window positions along one axis.
fn positions_along(ifm: usize, pw: usize, k: usize) -> u64 {
    debug_assert!(k <= pw && pw <= ifm);
    ((ifm - pw).div_ceil(pw - k + 1) + 1) as u64
}

/// Origins of the parallel windows along one axis, stepping by
/// `pw - k + 1` with the last one clamped to the IFM boundary.
pub fn window_origins(ifm: usize, pw: usize, k: usize) -> Vec<usize> {
    let step = pw - k + 1;
    let n = positions_along(ifm, pw, k) as usize;
    (0..n).map(|j| (j * step).min(ifm - pw)).collect()
}

/// Number of parallel-window positions covering the IFM.
pub fn num_parallel_windows(layer: &LayerSpec, window: WindowShape) -> u64 {
    positions_along(layer.ifm_w(), window.pw_w, layer.k_w())
        * positions_along(layer.ifm_h(), window.pw_h, layer.k_h())
}

/// Kernel-sized windows inside one parallel window (NW_P).
pub fn windows_per_pw(layer: &LayerSpec, window: WindowShape) -> usize {
    (window.pw_w - layer.k_w() + 1) * (window.pw_h - layer.k_h() + 1)
}

/// Whole input channels of `window` that fit in the array rows, clamped to `in_ch`.
pub fn tiled_ic(array: &ArraySpec, window: WindowShape, in_ch: usize) -> Result<usize> {
    let fit = array.rows() / window.area();
    if fit == 0 {
        return Err(Error::InfeasibleWindow {
            window,
            reason: format!(
                "window area {} exceeds {} array rows",
                window.area(),
                array.rows()
            ),
        });
    }
    Ok(fit.min(in_ch))
}

/// Output channels whose duplicated kernels fit in the array columns, clamped to `out_ch`.
pub fn tiled_oc(array: &ArraySpec, layer: &LayerSpec, window: WindowShape) -> Result<usize> {
    let nw = windows_per_pw(layer, window);
    let fit = array.cols() / nw;
    if fit == 0 {
        return Err(Error::InfeasibleWindow {
            window,
            reason: format!(
                "{nw} duplicated kernels exceed {} array columns",
                array.cols()
            ),
        });
    }
    Ok(fit.min(layer.out_ch()))
}

pub fn ar_cycles_tiled(in_ch: usize, ic_tile: usize) -> u64 {
    in_ch.div_ceil(ic_tile) as u64
}

pub fn ac_cycles_tiled(out_ch: usize, oc_tile: usize) -> u64 {
    out_ch.div_ceil(oc_tile) as u64
}

/// Full-channel cost of `window` with rows and columns packed continuously.
/// With `window == kernel` this is the im2col cost.
pub fn packed_cycles(layer: &LayerSpec, array: &ArraySpec, window: WindowShape) -> CycleBreakdown {
    let ar = (window.area() * layer.in_ch()).div_ceil(array.rows());
    let ac = (layer.out_ch() * windows_per_pw(layer, window)).div_ceil(array.cols());
    CycleBreakdown::new(num_parallel_windows(layer, window), ar as u64, ac as u64)
}

pub fn im2col_cycles(layer: &LayerSpec, array: &ArraySpec) -> CycleBreakdown {
    packed_cycles(layer, array, layer.kernel())
}

/// Channel-tiled cost of a variable window.
pub fn vw_cycles(
    layer: &LayerSpec,
    array: &ArraySpec,
    window: WindowShape,
) -> Result<CycleBreakdown> {
    layer.validate_window(window)?;
    let ic_t = tiled_ic(array, window, layer.in_ch())?;
    let oc_t = tiled_oc(array, layer, window)?;
    Ok(CycleBreakdown::new(
        num_parallel_windows(layer, window),
        ar_cycles_tiled(layer.in_ch(), ic_t),
        ac_cycles_tiled(layer.out_ch(), oc_t),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(r: usize, c: usize) -> ArraySpec {
        ArraySpec::new(r, c).unwrap()
    }

    fn sq(ifm: usize, k: usize, ic: usize, oc: usize) -> LayerSpec {
        LayerSpec::square("t", ifm, k, ic, oc).unwrap()
    }

    /// Brute force: slide origins by the PW stride, clamp, dedupe.
    fn enumerate_positions(ifm: usize, pw: usize, k: usize) -> usize {
        let step = pw - k + 1;
        let mut seen = std::collections::BTreeSet::new();
        let mut o = 0;
        loop {
            seen.insert(o.min(ifm - pw));
            if o + pw >= ifm {
                break;
            }
            o += step;
        }
        seen.len()
    }

    #[test]
    fn parallel_window_counts() {
        let l = sq(224, 3, 3, 64);
        assert_eq!(num_parallel_windows(&l, WindowShape::new(4, 4)), 12321);
        assert_eq!(enumerate_positions(224, 4, 3).pow(2), 12321);
        assert_eq!(num_parallel_windows(&l, WindowShape::new(3, 3)), 49284);
        let r = sq(112, 7, 3, 64);
        assert_eq!(num_parallel_windows(&r, WindowShape::new(10, 8)), 1431);
        assert_eq!(
            enumerate_positions(112, 10, 7) * enumerate_positions(112, 8, 7),
            1431
        );
    }

    #[test]
    fn origins_are_clamped() {
        assert_eq!(window_origins(7, 4, 3), vec![0, 2, 3]);
        assert_eq!(window_origins(6, 4, 3), vec![0, 2]);
        assert_eq!(window_origins(5, 5, 3), vec![0]);
    }

    #[test]
    fn tiled_channels() {
        let a = arr(512, 512);
        assert_eq!(tiled_ic(&a, WindowShape::new(4, 3), 128).unwrap(), 42);
        assert_eq!(tiled_ic(&a, WindowShape::new(4, 4), 64).unwrap(), 32);
        assert_eq!(tiled_ic(&a, WindowShape::new(10, 3), 3).unwrap(), 3);

        assert_eq!(
            tiled_oc(&a, &sq(56, 3, 128, 256), WindowShape::new(4, 3)).unwrap(),
            256
        );
        assert_eq!(
            tiled_oc(&a, &sq(56, 3, 128, 128), WindowShape::new(4, 4)).unwrap(),
            128
        );
        assert_eq!(
            tiled_oc(&arr(512, 256), &sq(56, 3, 42, 96), WindowShape::new(4, 4)).unwrap(),
            64
        );
    }

    #[test]
    fn tile_cycles() {
        assert_eq!(ar_cycles_tiled(128, 42), 4);
        assert_eq!(ar_cycles_tiled(3, 3), 1);
        assert_eq!(ar_cycles_tiled(512, 42), 13);
        assert_eq!(ac_cycles_tiled(256, 256), 1);
        assert_eq!(ac_cycles_tiled(96, 64), 2);
        assert_eq!(ac_cycles_tiled(512, 256), 2);
    }

    #[test]
    fn im2col_examples() {
        let a = arr(512, 512);
        assert_eq!(
            im2col_cycles(&sq(112, 3, 128, 128), &a),
            CycleBreakdown::new(12100, 3, 1)
        );
        assert_eq!(
            im2col_cycles(&sq(7, 3, 512, 512), &a),
            CycleBreakdown::new(25, 9, 1)
        );
        assert_eq!(im2col_cycles(&sq(3, 3, 1, 1), &arr(9, 1)).total, 1);
    }

    #[test]
    fn vw_examples() {
        let a = arr(512, 512);
        let b = vw_cycles(&sq(14, 3, 256, 256), &a, WindowShape::new(4, 3)).unwrap();
        assert_eq!(b, CycleBreakdown::new(72, 7, 1));
        assert_eq!(b.total, 504);
        let b = vw_cycles(&sq(224, 3, 3, 64), &a, WindowShape::new(10, 3)).unwrap();
        assert_eq!(b, CycleBreakdown::new(6216, 1, 1));
        let err = vw_cycles(&sq(5, 3, 1, 1), &arr(9, 1), WindowShape::new(4, 4)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleWindow { .. }));
    }

    #[test]
    fn infeasible_columns() {
        let err = tiled_oc(&arr(64, 3), &sq(8, 3, 1, 1), WindowShape::new(4, 4)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleWindow { .. }));
    }
}
