//! Functional crossbar simulator.
//!
//! Runs a plan's layout as a sequence of vector-matrix products and checks it
//! against a direct convolution.

mod layout;
mod tensor;

pub use layout::{
    build_layout, build_submatrix_layout, ArrayLayout, ColTag, KernelIndex, LayoutCycle, RowTag,
};
pub use tensor::{Tensor3, Weights};

use crate::cycles::window_origins;
use crate::error::{Error, Result};
use crate::model::{ArraySpec, LayerSpec, MappingPlan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutcome {
    pub ofm: Tensor3,
    /// Vector-matrix steps executed.
    pub measured_cycles: u64,
}

fn check_shapes(layer: &LayerSpec, ifm: &Tensor3, weights: &Weights) -> Result<()> {
    let want_ifm = (layer.in_ch(), layer.ifm_h(), layer.ifm_w());
    if ifm.shape() != want_ifm {
        return Err(Error::ShapeMismatch {
            expected: format!("ifm {want_ifm:?}"),
            found: format!("{:?}", ifm.shape()),
        });
    }
    let want_w = (layer.out_ch(), layer.in_ch(), layer.k_h(), layer.k_w());
    if weights.shape() != want_w {
        return Err(Error::ShapeMismatch {
            expected: format!("weights {want_w:?}"),
            found: format!("{:?}", weights.shape()),
        });
    }
    Ok(())
}

pub fn simulate(
    layer: &LayerSpec,
    array: &ArraySpec,
    plan: &MappingPlan,
    ifm: &Tensor3,
    weights: &Weights,
) -> Result<SimOutcome> {
    let layout = build_layout(layer, array, plan)?;
    simulate_layout(layer, &layout, ifm, weights)
}

/// Executes an already built (possibly modified) layout.
///
/// For each parallel-window position, every cycle drives the window's rows
/// and reads out the column sums; sums of the same column across AR cycles
/// accumulate digitally. Clamped edge windows recompute some outputs, which
/// must agree with the value already written.
pub fn simulate_layout(
    layer: &LayerSpec,
    layout: &ArrayLayout,
    ifm: &Tensor3,
    weights: &Weights,
) -> Result<SimOutcome> {
    check_shapes(layer, ifm, weights)?;
    layer.validate_window(layout.window)?;
    let window = layout.window;
    let nx = window.pw_w - layer.k_w() + 1;
    let ny = window.pw_h - layer.k_h() + 1;
    let (ofm_h, ofm_w) = (layer.ofm_h(), layer.ofm_w());

    let mut ofm = Tensor3::zeros(layer.out_ch(), ofm_h, ofm_w);
    let mut written = vec![false; layer.out_ch() * ofm_h * ofm_w];
    let mut acc = vec![0i64; layer.out_ch() * ny * nx];
    let mut input = Vec::new();
    let mut measured = 0u64;

    let xs = window_origins(layer.ifm_w(), window.pw_w, layer.k_w());
    let ys = window_origins(layer.ifm_h(), window.pw_h, layer.k_h());
    for &oy in &ys {
        for &ox in &xs {
            acc.iter_mut().for_each(|v| *v = 0);
            for cyc in &layout.cycles {
                input.clear();
                input.extend(cyc.rows.iter().map(|r| ifm.get(r.ch, oy + r.y, ox + r.x)));
                let n_cols = cyc.cols.len();
                for (c, col) in cyc.cols.iter().enumerate() {
                    let mut sum = 0i64;
                    for (r, &v) in input.iter().enumerate() {
                        if let Some(k) = cyc.cells[r * n_cols + c] {
                            sum += v * weights.get(
                                k.out_ch as usize,
                                k.in_ch as usize,
                                k.ky as usize,
                                k.kx as usize,
                            );
                        }
                    }
                    acc[(col.out_ch * ny + col.dy) * nx + col.dx] += sum;
                }
                measured += 1;
            }
            for o in 0..layer.out_ch() {
                for dy in 0..ny {
                    for dx in 0..nx {
                        let (y, x) = (oy + dy, ox + dx);
                        let v = acc[(o * ny + dy) * nx + dx];
                        let idx = (o * ofm_h + y) * ofm_w + x;
                        if written[idx] {
                            let prev = ofm.get(o, y, x);
                            if prev != v {
                                return Err(Error::OverlapConflict {
                                    channel: o,
                                    y,
                                    x,
                                    first: prev,
                                    second: v,
                                });
                            }
                        } else {
                            written[idx] = true;
                            ofm.set(o, y, x, v);
                        }
                    }
                }
            }
        }
    }
    debug_assert!(written.iter().all(|&w| w), "every output is produced");
    Ok(SimOutcome {
        ofm,
        measured_cycles: measured,
    })
}

/// Direct stride-1 valid cross-correlation.
pub fn reference_conv(ifm: &Tensor3, weights: &Weights) -> Result<Tensor3> {
    let (ic, ih, iw) = ifm.shape();
    let (oc, wic, kh, kw) = weights.shape();
    if ic != wic || kh > ih || kw > iw || kh == 0 || kw == 0 {
        return Err(Error::ShapeMismatch {
            expected: format!("weights (_, {ic}, <= {ih}, <= {iw})"),
            found: format!("{:?}", weights.shape()),
        });
    }
    let (oh, ow) = (ih - kh + 1, iw - kw + 1);
    let mut out = Tensor3::zeros(oc, oh, ow);
    for o in 0..oc {
        for y in 0..oh {
            for x in 0..ow {
                let mut s = 0i64;
                for i in 0..ic {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            s += ifm.get(i, y + ky, x + kx) * weights.get(o, i, ky, kx);
                        }
                    }
                }
                out.set(o, y, x, s);
            }
        }
    }
    Ok(out)
}

/// Seeded random IFM and weights for `layer`, values in `-4..=4` without
/// zeros so any misplaced cell changes some output.
pub fn random_operands(layer: &LayerSpec, seed: u64) -> (Tensor3, Weights) {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ifm = Tensor3::random(
        &mut rng,
        (layer.in_ch(), layer.ifm_h(), layer.ifm_w()),
        -4,
        4,
        true,
    );
    let weights = Weights::random(
        &mut rng,
        (layer.out_ch(), layer.in_ch(), layer.k_h(), layer.k_w()),
        -4,
        4,
        true,
    );
    (ifm, weights)
}

/// Used-cell ratios over every AR x AC cycle of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationReport {
    pub per_cycle: Vec<f64>,
    pub mean_pct: f64,
    pub peak_pct: f64,
}

impl UtilizationReport {
    pub fn from_layout(layout: &ArrayLayout) -> Self {
        let total = layout.array.cells() as f64;
        let per_cycle: Vec<f64> = layout
            .cycles
            .iter()
            .map(|c| c.used_cells() as f64 / total)
            .collect();
        let mean = per_cycle.iter().sum::<f64>() / per_cycle.len() as f64;
        let peak = per_cycle.iter().copied().fold(0.0, f64::max);
        UtilizationReport {
            per_cycle,
            mean_pct: mean * 100.0,
            peak_pct: peak * 100.0,
        }
    }
}

pub fn utilization(
    layer: &LayerSpec,
    array: &ArraySpec,
    plan: &MappingPlan,
) -> Result<UtilizationReport> {
    Ok(UtilizationReport::from_layout(&build_layout(
        layer, array, plan,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappers::{plan_im2col, plan_sdk, plan_vwsdk};
    use crate::model::{Method, RowPacking, WindowShape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arr(r: usize, c: usize) -> ArraySpec {
        ArraySpec::new(r, c).unwrap()
    }

    fn vw_plan(layer: &LayerSpec, array: &ArraySpec, w: WindowShape) -> MappingPlan {
        let b = crate::cycles::vw_cycles(layer, array, w).unwrap();
        MappingPlan {
            method: Method::VwSdk,
            packing: RowPacking::ChannelTiled,
            window: w,
            ic_tile: crate::cycles::tiled_ic(array, w, layer.in_ch()).unwrap(),
            oc_tile: crate::cycles::tiled_oc(array, layer, w).unwrap(),
            windows_per_pw: crate::cycles::windows_per_pw(layer, w),
            num_pw: b.num_pw,
            ar_cycles: b.ar_cycles,
            ac_cycles: b.ac_cycles,
            total_cycles: b.total,
        }
    }

    #[test]
    fn sdk_layout_pattern() {
        let l = LayerSpec::square("t", 4, 3, 1, 1).unwrap();
        let a = arr(16, 4);
        let layout = build_layout(&l, &a, &vw_plan(&l, &a, WindowShape::new(4, 4))).unwrap();
        assert_eq!(layout.cycles.len(), 1);
        let c = &layout.cycles[0];
        assert_eq!((c.rows.len(), c.cols.len()), (16, 4));
        for col in 0..4 {
            assert_eq!(c.used_in_column(col), 9);
        }
        assert_eq!(layout.total_placements(), 9 * 4);
    }

    #[test]
    fn im2col_layout_single_cycle() {
        let l = LayerSpec::square("t", 6, 3, 4, 5).unwrap();
        let a = arr(64, 8);
        let layout = build_layout(&l, &a, &plan_im2col(&l, &a)).unwrap();
        assert_eq!(layout.cycles.len(), 1);
        assert_eq!(layout.cycles[0].cols.len(), 5);
        assert_eq!(layout.cycles[0].rows.len(), 36);
        assert_eq!(layout.cycles[0].used_cells(), 36 * 5);
    }

    #[test]
    fn tiled_layout_column_counts() {
        let l = LayerSpec::square("res4", 14, 3, 256, 256).unwrap();
        let a = arr(512, 512);
        let (p, _) = plan_vwsdk(&l, &a);
        let layout = build_layout(&l, &a, &p).unwrap();
        assert_eq!(layout.cycles.len(), 7);
        for cyc in &layout.cycles {
            let ch = cyc.rows.len() / 12;
            for col in [0, 255, 511] {
                assert_eq!(cyc.used_in_column(col), 9 * ch);
            }
        }
        assert_eq!(layout.total_placements(), 9 * 256 * 256 * 2);
    }

    #[test]
    fn reference_conv_basics() {
        let ones = Tensor3::from_vec(1, 3, 3, vec![1; 9]).unwrap();
        let k = Weights::from_vec((1, 1, 3, 3), vec![1; 9]).unwrap();
        assert_eq!(reference_conv(&ones, &k).unwrap().as_slice(), &[9]);

        let ifm = Tensor3::from_vec(1, 4, 4, (0..16).collect()).unwrap();
        let mut k = Weights::zeros(1, 1, 2, 2);
        k.set(0, 0, 1, 0, 1);
        let out = reference_conv(&ifm, &k).unwrap();
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(out.get(0, y, x), ifm.get(0, y + 1, x));
            }
        }
        assert!(reference_conv(&ifm, &Weights::zeros(1, 2, 2, 2)).is_err());
    }

    #[test]
    fn simulate_matches_reference_all_methods() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = LayerSpec::new("t", 9, 7, 3, 2, 3, 4).unwrap();
        let a = arr(20, 6);
        let ifm = Tensor3::random(&mut rng, (3, 7, 9), -5, 5, false);
        let w = Weights::random(&mut rng, (4, 3, 2, 3), -5, 5, false);
        let want = reference_conv(&ifm, &w).unwrap();
        for p in [plan_im2col(&l, &a), plan_sdk(&l, &a), plan_vwsdk(&l, &a).0] {
            let out = simulate(&l, &a, &p, &ifm, &w).unwrap();
            assert_eq!(out.ofm, want, "{p:?}");
            assert_eq!(out.measured_cycles, p.total_cycles);
        }
    }

    #[test]
    fn zero_weights_give_zero_ofm() {
        let l = LayerSpec::square("t", 5, 3, 2, 2).unwrap();
        let a = arr(8, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ifm = Tensor3::random(&mut rng, (2, 5, 5), -9, 9, false);
        let out = simulate(
            &l,
            &a,
            &plan_im2col(&l, &a),
            &ifm,
            &Weights::zeros(2, 2, 3, 3),
        )
        .unwrap();
        assert!(out.ofm.as_slice().iter().all(|&v| v == 0));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let l = LayerSpec::square("t", 5, 3, 2, 2).unwrap();
        let a = arr(8, 4);
        let err = simulate(
            &l,
            &a,
            &plan_im2col(&l, &a),
            &Tensor3::zeros(1, 5, 5),
            &Weights::zeros(2, 2, 3, 3),
        );
        assert!(matches!(err, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn submatrix_duplication_matches_reference() {
        let l = LayerSpec::square("t", 6, 3, 2, 3).unwrap();
        let a = arr(128, 16);
        let layout = build_submatrix_layout(&l, &a, WindowShape::new(4, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ifm = Tensor3::random(&mut rng, (2, 6, 6), -4, 4, false);
        let w = Weights::random(&mut rng, (3, 2, 3, 3), -4, 4, false);
        let out = simulate_layout(&l, &layout, &ifm, &w).unwrap();
        assert_eq!(out.ofm, reference_conv(&ifm, &w).unwrap());
        // no shared rows: every used cell is in a distinct (row, column block)
        assert_eq!(layout.cycles[0].used_cells(), 18 * 4 * 3);
        assert_eq!(layout.cycles[0].rows.len(), 4 * 18);
        assert!(build_submatrix_layout(&l, &arr(64, 16), WindowShape::new(4, 4)).is_err());
    }

    #[test]
    fn utilization_anchor() {
        let l = LayerSpec::square("vgg5", 56, 3, 128, 256).unwrap();
        let a = arr(512, 512);
        let (p, _) = plan_vwsdk(&l, &a);
        assert_eq!(
            (p.window, p.ic_tile, p.oc_tile),
            (WindowShape::new(4, 3), 42, 256)
        );
        let u = utilization(&l, &a, &p).unwrap();
        assert!((u.peak_pct - 73.828125).abs() < 1e-9);
        assert_eq!(u.per_cycle.len(), 4);

        let u = utilization(&l, &a, &plan_im2col(&l, &a)).unwrap();
        assert!((u.peak_pct - 50.0).abs() < 1e-9);
        assert!((u.mean_pct - 37.5).abs() < 1e-9);
    }

    #[test]
    fn exact_fit_is_full() {
        let l = LayerSpec::square("fit", 5, 3, 4, 8).unwrap();
        let a = arr(36, 8);
        let u = utilization(&l, &a, &plan_im2col(&l, &a)).unwrap();
        assert_eq!(u.per_cycle, vec![1.0]);
        assert_eq!(u.mean_pct, 100.0);
    }

    #[test]
    fn dump_marks_cells() {
        let l = LayerSpec::square("t", 4, 3, 1, 1).unwrap();
        let a = arr(16, 4);
        let d = build_layout(&l, &a, &vw_plan(&l, &a, WindowShape::new(4, 4)))
            .unwrap()
            .dump();
        assert!(d.starts_with("cycle 0"));
        assert_eq!(d.lines().nth(1), Some("#..."));
        assert_eq!(d.matches('#').count(), 36);
    }
}
