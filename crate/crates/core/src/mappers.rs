//! Planners: the im2col baseline, the square-window SDK baseline, the
//! variable-window search and an exhaustive oracle used for verification.

use crate::cycles::{
    ac_cycles_tiled, ar_cycles_tiled, im2col_cycles, num_parallel_windows, packed_cycles, tiled_ic,
    tiled_oc, vw_cycles, windows_per_pw, CycleBreakdown,
};
use crate::error::{Error, Result};
use crate::model::{
    ArraySpec, LayerSpec, MappingPlan, Method, NetworkSpec, RowPacking, WindowShape,
};

/// Default enumeration budget for [`plan_oracle`], in scored tuples.
pub const DEFAULT_ORACLE_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Candidate {
    Feasible(CycleBreakdown),
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub window: WindowShape,
    pub candidate: Candidate,
}

/// Every shape visited by [`plan_vwsdk`], im2col seed first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchTrace {
    pub entries: Vec<TraceEntry>,
    pub plan: MappingPlan,
}

impl SearchTrace {
    pub fn min_total(&self) -> Option<u64> {
        self.entries
            .iter()
            .filter_map(|e| match e.candidate {
                Candidate::Feasible(b) => Some(b.total),
                Candidate::Infeasible => None,
            })
            .min()
    }
}

fn packed_plan(
    method: Method,
    layer: &LayerSpec,
    array: &ArraySpec,
    window: WindowShape,
) -> MappingPlan {
    let b = packed_cycles(layer, array, window);
    let nw = windows_per_pw(layer, window);
    MappingPlan {
        method,
        packing: RowPacking::Continuous,
        window,
        // whole channels that fit one cycle; at least one even when rows split a channel
        ic_tile: (array.rows() / window.area()).clamp(1, layer.in_ch()),
        oc_tile: (array.cols() / nw).clamp(1, layer.out_ch()),
        windows_per_pw: nw,
        num_pw: b.num_pw,
        ar_cycles: b.ar_cycles,
        ac_cycles: b.ac_cycles,
        total_cycles: b.total,
    }
}

fn tiled_plan(
    method: Method,
    layer: &LayerSpec,
    window: WindowShape,
    ic_tile: usize,
    oc_tile: usize,
) -> MappingPlan {
    let b = CycleBreakdown::new(
        num_parallel_windows(layer, window),
        ar_cycles_tiled(layer.in_ch(), ic_tile),
        ac_cycles_tiled(layer.out_ch(), oc_tile),
    );
    MappingPlan {
        method,
        packing: RowPacking::ChannelTiled,
        window,
        ic_tile,
        oc_tile,
        windows_per_pw: windows_per_pw(layer, window),
        num_pw: b.num_pw,
        ar_cycles: b.ar_cycles,
        ac_cycles: b.ac_cycles,
        total_cycles: b.total,
    }
}

pub fn plan_im2col(layer: &LayerSpec, array: &ArraySpec) -> MappingPlan {
    packed_plan(Method::Im2col, layer, array, layer.kernel())
}

/// Square-window SDK with full channels.
///
/// A window grown by `d` on both axes is admissible only if its AR and AC
/// cycles stay within im2col's. The cheapest admissible window wins, ties
/// going to the smaller one.
pub fn plan_sdk(layer: &LayerSpec, array: &ArraySpec) -> MappingPlan {
    let base = im2col_cycles(layer, array);
    let mut best = packed_plan(Method::Sdk, layer, array, layer.kernel());
    let max_d = (layer.ifm_w() - layer.k_w()).min(layer.ifm_h() - layer.k_h());
    for d in 1..=max_d {
        let window = WindowShape::new(layer.k_w() + d, layer.k_h() + d);
        let b = packed_cycles(layer, array, window);
        if b.ar_cycles <= base.ar_cycles
            && b.ac_cycles <= base.ac_cycles
            && b.total < best.total_cycles
        {
            best = packed_plan(Method::Sdk, layer, array, window);
        }
    }
    best
}

/// Variable-window search.
///
/// Seeds the minimum with im2col, then scans windows width-major starting
/// at `(k_w + 1, k_h)`; only a strictly smaller total replaces the incumbent.
pub fn plan_vwsdk(layer: &LayerSpec, array: &ArraySpec) -> (MappingPlan, SearchTrace) {
    let seed = im2col_cycles(layer, array);
    let mut entries = vec![TraceEntry {
        window: layer.kernel(),
        candidate: Candidate::Feasible(seed),
    }];
    let mut best = packed_plan(Method::VwSdk, layer, array, layer.kernel());

    let (mut pw_w, mut pw_h) = (layer.k_w(), layer.k_h());
    loop {
        pw_w += 1;
        if pw_w > layer.ifm_w() {
            pw_w = layer.k_w();
            pw_h += 1;
            if pw_h > layer.ifm_h() {
                break;
            }
        }
        let window = WindowShape::new(pw_w, pw_h);
        let candidate = match vw_cycles(layer, array, window) {
            Ok(b) => {
                if best.total_cycles > b.total {
                    // vw_cycles succeeded, so both tiles are feasible
                    let ic_t = tiled_ic(array, window, layer.in_ch()).expect("feasible");
                    let oc_t = tiled_oc(array, layer, window).expect("feasible");
                    best = tiled_plan(Method::VwSdk, layer, window, ic_t, oc_t);
                }
                Candidate::Feasible(b)
            }
            Err(_) => Candidate::Infeasible,
        };
        entries.push(TraceEntry { window, candidate });
    }

    let trace = SearchTrace {
        entries,
        plan: best.clone(),
    };
    (best, trace)
}

/// Counts the tuples [`plan_oracle`] would score.
pub fn oracle_candidates(layer: &LayerSpec, array: &ArraySpec) -> u64 {
    let mut n = 1u64;
    for pw_h in layer.k_h()..=layer.ifm_h() {
        for pw_w in layer.k_w()..=layer.ifm_w() {
            let w = WindowShape::new(pw_w, pw_h);
            if let (Ok(ic), Ok(oc)) = (tiled_ic(array, w, layer.in_ch()), tiled_oc(array, layer, w))
            {
                n += (ic * oc) as u64;
            }
        }
    }
    n
}

/// Exhaustive search over every window and every channel tile up to the
/// maximum that fits. Independent of the scan in [`plan_vwsdk`]; scored tiles
/// are not assumed maximal.
pub fn plan_oracle(layer: &LayerSpec, array: &ArraySpec, budget: u64) -> Result<MappingPlan> {
    let candidates = oracle_candidates(layer, array);
    if candidates > budget {
        return Err(Error::OracleBudget { candidates, budget });
    }
    let mut best = packed_plan(Method::VwSdk, layer, array, layer.kernel());
    for pw_h in layer.k_h()..=layer.ifm_h() {
        for pw_w in layer.k_w()..=layer.ifm_w() {
            let window = WindowShape::new(pw_w, pw_h);
            let (Ok(max_ic), Ok(max_oc)) = (
                tiled_ic(array, window, layer.in_ch()),
                tiled_oc(array, layer, window),
            ) else {
                continue;
            };
            let num_pw = num_parallel_windows(layer, window);
            for ic in (1..=max_ic).rev() {
                for oc in (1..=max_oc).rev() {
                    let total = num_pw
                        * layer.in_ch().div_ceil(ic) as u64
                        * layer.out_ch().div_ceil(oc) as u64;
                    if total < best.total_cycles {
                        best = tiled_plan(Method::VwSdk, layer, window, ic, oc);
                    }
                }
            }
        }
    }
    Ok(best)
}

pub fn plan(layer: &LayerSpec, array: &ArraySpec, method: Method) -> MappingPlan {
    match method {
        Method::Im2col => plan_im2col(layer, array),
        Method::Sdk => plan_sdk(layer, array),
        Method::VwSdk => plan_vwsdk(layer, array).0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkPlan {
    pub method: Method,
    pub array: ArraySpec,
    /// One plan per layer, in network order.
    pub layers: Vec<(String, MappingPlan)>,
    pub total_cycles: u64,
}

pub fn plan_network(net: &NetworkSpec, array: &ArraySpec, method: Method) -> Result<NetworkPlan> {
    let mut layers = Vec::with_capacity(net.layers().len());
    let mut total = 0u64;
    for layer in net.layers() {
        let p = plan(layer, array, method);
        p.check(layer).map_err(|e| e.in_layer(layer.name()))?;
        total += p.total_cycles;
        layers.push((layer.name().to_owned(), p));
    }
    Ok(NetworkPlan {
        method,
        array: *array,
        layers,
        total_cycles: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a512() -> ArraySpec {
        ArraySpec::new(512, 512).unwrap()
    }

    fn sq(ifm: usize, k: usize, ic: usize, oc: usize) -> LayerSpec {
        LayerSpec::square("t", ifm, k, ic, oc).unwrap()
    }

    #[test]
    fn im2col_plans() {
        assert_eq!(
            plan_im2col(&sq(224, 3, 64, 64), &a512()).total_cycles,
            98568
        );
        assert_eq!(plan_im2col(&sq(112, 7, 3, 64), &a512()).total_cycles, 11236);
        let tiny = plan_im2col(&sq(3, 3, 1, 1), &ArraySpec::new(9, 1).unwrap());
        assert_eq!(tiny.total_cycles, 1);
        assert_eq!(tiny.window, WindowShape::new(3, 3));
    }

    #[test]
    fn sdk_plans() {
        let p = plan_sdk(&sq(112, 3, 128, 128), &a512());
        assert_eq!((p.window, p.total_cycles), (WindowShape::new(3, 3), 36300));
        let p = plan_sdk(&sq(224, 3, 64, 64), &a512());
        assert_eq!((p.window, p.total_cycles), (WindowShape::new(4, 4), 24642));
        let p = plan_sdk(&sq(112, 7, 3, 64), &a512());
        assert_eq!((p.window, p.total_cycles), (WindowShape::new(8, 8), 2809));
    }

    #[test]
    fn vwsdk_plans() {
        let (p, trace) = plan_vwsdk(&sq(14, 3, 256, 256), &a512());
        assert_eq!(
            (p.window, p.ic_tile, p.oc_tile),
            (WindowShape::new(4, 3), 42, 256)
        );
        assert_eq!(trace.min_total(), Some(p.total_cycles));
        assert_eq!(trace.entries[0].window, WindowShape::new(3, 3));
        // seed + every (w, h) except the kernel itself
        assert_eq!(trace.entries.len(), 1 + 12 * 12 - 1);

        assert_eq!(
            plan_vwsdk(&sq(224, 3, 3, 64), &a512()).0.window,
            WindowShape::new(10, 3)
        );
        let (p, _) = plan_vwsdk(&sq(28, 3, 256, 512), &a512());
        assert_eq!(p.window, WindowShape::new(3, 3));
        assert_eq!(p.packing, RowPacking::Continuous);
    }

    #[test]
    fn scan_order_breaks_ties() {
        let (p, trace) = plan_vwsdk(&sq(224, 3, 3, 64), &a512());
        let t10x3 = trace
            .entries
            .iter()
            .find(|e| e.window == WindowShape::new(10, 3))
            .unwrap();
        let t3x10 = trace
            .entries
            .iter()
            .find(|e| e.window == WindowShape::new(3, 10))
            .unwrap();
        assert_eq!(t10x3.candidate, t3x10.candidate);
        assert_eq!(p.window, WindowShape::new(10, 3));
    }

    #[test]
    fn oracle_edge_cases() {
        let l = sq(3, 3, 2, 2);
        let p = plan_oracle(&l, &a512(), DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(p, plan_im2col(&l, &a512()).clone_with_method(Method::VwSdk));
        assert!(matches!(
            plan_oracle(&sq(224, 3, 64, 64), &a512(), 1000),
            Err(Error::OracleBudget { .. })
        ));
    }

    impl MappingPlan {
        fn clone_with_method(&self, method: Method) -> MappingPlan {
            MappingPlan {
                method,
                ..self.clone()
            }
        }
    }

    #[test]
    fn rectangular_kernel_sdk_grows_both_axes() {
        let l = LayerSpec::new("r", 12, 9, 3, 1, 2, 4).unwrap();
        let p = plan_sdk(&l, &a512());
        assert_eq!(p.window.pw_w - 3, p.window.pw_h - 1);
        p.check(&l).unwrap();
    }
}
