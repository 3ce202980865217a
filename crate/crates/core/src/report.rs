//! Table and CSV rendering of plans, sweeps and utilization.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;

use crate::error::Result;
use crate::mappers::{plan_network, NetworkPlan};
use crate::model::{ArraySpec, LayerSpec, MappingPlan, Method, NetworkSpec};
use crate::sim::utilization;

/// Speedup of `cycles` over the im2col baseline.
pub fn speedup(im2col_cycles: u64, cycles: u64) -> f64 {
    im2col_cycles as f64 / cycles as f64
}

pub fn fmt_speedup(x: f64) -> String {
    format!("{x:.2}")
}

/// One CSV record per (layer, method).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanRecord {
    pub name: String,
    pub method: String,
    pub pw_w: usize,
    pub pw_h: usize,
    pub ic_t: usize,
    pub oc_t: usize,
    pub num_pw: u64,
    pub ar: u64,
    pub ac: u64,
    pub cycles: u64,
    pub speedup: String,
}

impl PlanRecord {
    pub fn new(name: &str, plan: &MappingPlan, im2col_cycles: u64) -> Self {
        PlanRecord {
            name: name.to_owned(),
            method: plan.method.to_string(),
            pw_w: plan.window.pw_w,
            pw_h: plan.window.pw_h,
            ic_t: plan.ic_tile,
            oc_t: plan.oc_tile,
            num_pw: plan.num_pw,
            ar: plan.ar_cycles,
            ac: plan.ac_cycles,
            cycles: plan.total_cycles,
            speedup: fmt_speedup(speedup(im2col_cycles, plan.total_cycles)),
        }
    }
}

/// Per-layer plans for every method on one array.
#[derive(Debug, Clone)]
pub struct NetworkReport {
    pub network: String,
    pub array: ArraySpec,
    pub layers: Vec<LayerSpec>,
    /// Indexed like [`Method::ALL`].
    pub plans: Vec<NetworkPlan>,
}

impl NetworkReport {
    pub fn build(net: &NetworkSpec, array: &ArraySpec) -> Result<Self> {
        let plans = Method::ALL
            .iter()
            .map(|&m| plan_network(net, array, m))
            .collect::<Result<_>>()?;
        Ok(NetworkReport {
            network: net.name().to_owned(),
            array: *array,
            layers: net.layers().to_vec(),
            plans,
        })
    }

    pub fn for_method(&self, method: Method) -> &NetworkPlan {
        &self.plans[Method::ALL
            .iter()
            .position(|&m| m == method)
            .expect("all methods planned")]
    }

    pub fn total(&self, method: Method) -> u64 {
        self.for_method(method).total_cycles
    }

    pub fn records(&self) -> Vec<PlanRecord> {
        let base = self.for_method(Method::Im2col);
        let mut out = Vec::new();
        for (i, (name, im2col)) in base.layers.iter().enumerate() {
            for np in &self.plans {
                out.push(PlanRecord::new(name, &np.layers[i].1, im2col.total_cycles));
            }
        }
        out
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "network {} on {} array", self.network, self.array);
        let _ = writeln!(
            s,
            "{:<8} {:>14} {:>10} {:>16} {:>10} {:>16} {:>10} {:>8}",
            "layer", "kernel", "im2col", "sdk", "cycles", "vwsdk", "cycles", "speedup"
        );
        let im = self.for_method(Method::Im2col);
        let sdk = self.for_method(Method::Sdk);
        let vw = self.for_method(Method::VwSdk);
        for i in 0..im.layers.len() {
            let (name, ip) = &im.layers[i];
            let layer = &self.layers[i];
            let sp = &sdk.layers[i].1;
            let vp = &vw.layers[i].1;
            let _ = writeln!(
                s,
                "{:<8} {:>14} {:>10} {:>16} {:>10} {:>16} {:>10} {:>8}",
                name,
                format!("{}x{}x{}", ip.window, layer.in_ch(), layer.out_ch()),
                ip.total_cycles,
                shape_label(sp),
                sp.total_cycles,
                shape_label(vp),
                vp.total_cycles,
                fmt_speedup(speedup(ip.total_cycles, vp.total_cycles))
            );
        }
        let _ = writeln!(
            s,
            "total    {:>14} {:>10} {:>16} {:>10} {:>16} {:>10} {:>8}",
            "",
            im.total_cycles,
            "",
            sdk.total_cycles,
            "",
            vw.total_cycles,
            fmt_speedup(speedup(im.total_cycles, vw.total_cycles))
        );
        let _ = writeln!(
            s,
            "speedup vs im2col: sdk {} vwsdk {}; vwsdk vs sdk {}",
            fmt_speedup(speedup(im.total_cycles, sdk.total_cycles)),
            fmt_speedup(speedup(im.total_cycles, vw.total_cycles)),
            fmt_speedup(speedup(sdk.total_cycles, vw.total_cycles))
        );
        s
    }
}

fn shape_label(p: &MappingPlan) -> String {
    format!("{}x{}x{}", p.window, p.ic_tile, p.oc_tile)
}

pub fn write_csv<W: io::Write, T: Serialize>(records: &[T], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub rows: usize,
    pub cols: usize,
    pub method: String,
    pub cycles: u64,
    pub speedup: String,
}

pub fn sweep(net: &NetworkSpec, arrays: &[ArraySpec]) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::new();
    for array in arrays {
        let report = NetworkReport::build(net, array)?;
        let base = report.total(Method::Im2col);
        for m in Method::ALL {
            out.push(SweepRecord {
                rows: array.rows(),
                cols: array.cols(),
                method: m.to_string(),
                cycles: report.total(m),
                speedup: fmt_speedup(speedup(base, report.total(m))),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilizationRecord {
    pub name: String,
    pub method: String,
    pub cycles_per_position: u64,
    pub mean_pct: String,
    pub peak_pct: String,
}

pub fn utilization_table(net: &NetworkSpec, array: &ArraySpec) -> Result<Vec<UtilizationRecord>> {
    let report = NetworkReport::build(net, array)?;
    let mut out = Vec::new();
    for (i, layer) in net.layers().iter().enumerate() {
        for np in &report.plans {
            let plan = &np.layers[i].1;
            let u = utilization(layer, array, plan).map_err(|e| e.in_layer(layer.name()))?;
            out.push(UtilizationRecord {
                name: layer.name().to_owned(),
                method: plan.method.to_string(),
                cycles_per_position: plan.ar_cycles * plan.ac_cycles,
                mean_pct: format!("{:.1}", u.mean_pct),
                peak_pct: format!("{:.1}", u.peak_pct),
            });
        }
    }
    Ok(out)
}
