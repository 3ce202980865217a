//! Domain vocabulary: layers, arrays, parallel windows and resolved plans.
//!
//! Every constructor validates its invariants, so downstream code can take
//! these values at face value.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::cycles::CycleBreakdown;
use crate::error::{Error, Result};

/// One convolutional layer (stride 1, no padding).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    name: String,
    ifm_w: usize,
    ifm_h: usize,
    k_w: usize,
    k_h: usize,
    in_ch: usize,
    out_ch: usize,
}

impl LayerSpec {
    pub fn new(
        name: impl Into<String>,
        ifm_w: usize,
        ifm_h: usize,
        k_w: usize,
        k_h: usize,
        in_ch: usize,
        out_ch: usize,
    ) -> Result<Self> {
        let layer = LayerSpec {
            name: name.into(),
            ifm_w,
            ifm_h,
            k_w,
            k_h,
            in_ch,
            out_ch,
        };
        validate_layer(layer)
    }

    /// Square IFM and square kernel.
    pub fn square(
        name: impl Into<String>,
        ifm: usize,
        k: usize,
        in_ch: usize,
        out_ch: usize,
    ) -> Result<Self> {
        Self::new(name, ifm, ifm, k, k, in_ch, out_ch)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn ifm_w(&self) -> usize {
        self.ifm_w
    }
    pub fn ifm_h(&self) -> usize {
        self.ifm_h
    }
    pub fn k_w(&self) -> usize {
        self.k_w
    }
    pub fn k_h(&self) -> usize {
        self.k_h
    }
    pub fn in_ch(&self) -> usize {
        self.in_ch
    }
    pub fn out_ch(&self) -> usize {
        self.out_ch
    }

    pub fn kernel(&self) -> WindowShape {
        WindowShape::new(self.k_w, self.k_h)
    }

    pub fn ofm_w(&self) -> usize {
        self.ifm_w - self.k_w + 1
    }
    pub fn ofm_h(&self) -> usize {
        self.ifm_h - self.k_h + 1
    }

    /// Number of kernel-sized windows sliding over the IFM.
    pub fn window_count(&self) -> u64 {
        (self.ofm_w() * self.ofm_h()) as u64
    }

    pub fn validate_window(&self, window: WindowShape) -> Result<WindowShape> {
        validate_window(self, window)
    }
}

/// Checks every [`LayerSpec`] invariant, naming the first one violated.
pub fn validate_layer(layer: LayerSpec) -> Result<LayerSpec> {
    let fail = |msg: String| Err(Error::InvalidLayer(format!("`{}`: {msg}", layer.name)));
    if layer.k_w == 0 || layer.k_h == 0 {
        return fail(format!(
            "kernel {}x{} has a zero side",
            layer.k_w, layer.k_h
        ));
    }
    if layer.k_w > layer.ifm_w || layer.k_h > layer.ifm_h {
        return fail(format!(
            "kernel {}x{} exceeds IFM {}x{}",
            layer.k_w, layer.k_h, layer.ifm_w, layer.ifm_h
        ));
    }
    if layer.in_ch == 0 {
        return fail("in_ch must be at least 1".into());
    }
    if layer.out_ch == 0 {
        return fail("out_ch must be at least 1".into());
    }
    Ok(layer)
}

/// Checks `kernel <= window <= ifm` on both axes.
pub fn validate_window(layer: &LayerSpec, window: WindowShape) -> Result<WindowShape> {
    let invalid = |reason: String| Err(Error::InvalidWindow { window, reason });
    if window.pw_w < layer.k_w || window.pw_h < layer.k_h {
        return invalid(format!("smaller than kernel {}x{}", layer.k_w, layer.k_h));
    }
    if window.pw_w > layer.ifm_w || window.pw_h > layer.ifm_h {
        return invalid(format!("exceeds IFM {}x{}", layer.ifm_w, layer.ifm_h));
    }
    Ok(window)
}

/// Crossbar geometry. Any positive size is accepted, powers of two are not required.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArraySpec {
    rows: usize,
    cols: usize,
}

impl ArraySpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArray(format!(
                "{rows}x{cols}: rows and cols must be at least 1"
            )));
        }
        Ok(ArraySpec { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }
}

impl fmt::Display for ArraySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for ArraySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (rows, cols) =
            parse_pair(s).ok_or_else(|| Error::InvalidArray(format!("`{s}` is not RxC")))?;
        ArraySpec::new(rows, cols)
    }
}

/// A candidate parallel window, `pw_w x pw_h` IFM elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowShape {
    pub pw_w: usize,
    pub pw_h: usize,
}

impl WindowShape {
    pub const fn new(pw_w: usize, pw_h: usize) -> Self {
        WindowShape { pw_w, pw_h }
    }

    pub fn area(&self) -> usize {
        self.pw_w * self.pw_h
    }
}

impl fmt::Display for WindowShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.pw_w, self.pw_h)
    }
}

impl FromStr for WindowShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_pair(s)
            .map(|(w, h)| WindowShape::new(w, h))
            .ok_or_else(|| format!("`{s}` is not WxH"))
    }
}

/// Parses `AxB` (also accepts `X` as separator).
pub(crate) fn parse_pair(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.trim().split_once(['x', 'X'])?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Im2col,
    Sdk,
    VwSdk,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Im2col, Method::Sdk, Method::VwSdk];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Im2col => "im2col",
            Method::Sdk => "sdk",
            Method::VwSdk => "vwsdk",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "im2col" => Ok(Method::Im2col),
            "sdk" => Ok(Method::Sdk),
            "vwsdk" | "vw-sdk" => Ok(Method::VwSdk),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// How weight rows and output columns are split across AR/AC cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowPacking {
    /// Full channels; the flattened `(channel, y, x)` rows and
    /// `(out_channel, dy, dx)` columns are cut into array-sized chunks.
    Continuous,
    /// Whole channel tiles of `ic_tile` inputs and `oc_tile` outputs per cycle.
    ChannelTiled,
}

/// A fully resolved mapping of one layer onto one array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MappingPlan {
    pub method: Method,
    pub packing: RowPacking,
    pub window: WindowShape,
    /// Input channels mapped per AR cycle.
    pub ic_tile: usize,
    /// Output channels mapped per AC cycle.
    pub oc_tile: usize,
    pub windows_per_pw: usize,
    pub num_pw: u64,
    pub ar_cycles: u64,
    pub ac_cycles: u64,
    pub total_cycles: u64,
}

impl MappingPlan {
    pub fn breakdown(&self) -> CycleBreakdown {
        CycleBreakdown {
            num_pw: self.num_pw,
            ar_cycles: self.ar_cycles,
            ac_cycles: self.ac_cycles,
            total: self.total_cycles,
        }
    }

    /// Re-checks the plan invariants against `layer`.
    pub fn check(&self, layer: &LayerSpec) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasiblePlan(m));
        validate_window(layer, self.window)?;
        if self.total_cycles != self.num_pw * self.ar_cycles * self.ac_cycles {
            return bad(format!(
                "total {} != {} * {} * {}",
                self.total_cycles, self.num_pw, self.ar_cycles, self.ac_cycles
            ));
        }
        if !(1..=layer.in_ch()).contains(&self.ic_tile) {
            return bad(format!(
                "ic_tile {} outside 1..={}",
                self.ic_tile,
                layer.in_ch()
            ));
        }
        if !(1..=layer.out_ch()).contains(&self.oc_tile) {
            return bad(format!(
                "oc_tile {} outside 1..={}",
                self.oc_tile,
                layer.out_ch()
            ));
        }
        let nw = (self.window.pw_w - layer.k_w() + 1) * (self.window.pw_h - layer.k_h() + 1);
        if self.windows_per_pw != nw {
            return bad(format!("windows_per_pw {} != {nw}", self.windows_per_pw));
        }
        Ok(())
    }
}

/// An ordered list of uniquely named layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    name: String,
    layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>) -> Result<Self> {
        let name = name.into();
        if layers.is_empty() {
            return Err(Error::InvalidNetwork(format!("`{name}` has no layers")));
        }
        let mut seen = HashSet::new();
        for layer in &layers {
            if !seen.insert(layer.name()) {
                return Err(Error::InvalidNetwork(format!(
                    "`{name}`: duplicate layer name `{}`",
                    layer.name()
                )));
            }
        }
        Ok(NetworkSpec { name, layers })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_table_layers() {
        assert!(LayerSpec::square("vgg1", 224, 3, 3, 64).is_ok());
        assert!(LayerSpec::square("res5", 7, 3, 512, 512).is_ok());
    }

    #[test]
    fn rejects_kernel_larger_than_ifm() {
        let err = LayerSpec::square("tiny", 2, 3, 1, 1).unwrap_err();
        assert!(err.to_string().contains("exceeds IFM"), "{err}");
    }

    #[test]
    fn rejects_zero_dims() {
        assert!(LayerSpec::new("a", 5, 5, 0, 3, 1, 1).is_err());
        assert!(LayerSpec::square("b", 5, 3, 0, 1).is_err());
        assert!(LayerSpec::square("c", 5, 3, 1, 0).is_err());
        assert!(ArraySpec::new(0, 512).is_err());
        assert!(ArraySpec::new(512, 0).is_err());
        assert!("0x512".parse::<ArraySpec>().is_err());
    }

    #[test]
    fn window_bounds() {
        let l56 = LayerSpec::square("l", 56, 3, 128, 256).unwrap();
        assert!(l56.validate_window(WindowShape::new(4, 3)).is_ok());
        let l5 = LayerSpec::square("l", 5, 3, 1, 1).unwrap();
        assert!(l5.validate_window(WindowShape::new(3, 3)).is_ok());
        assert!(matches!(
            l5.validate_window(WindowShape::new(6, 3)),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(l5.validate_window(WindowShape::new(2, 3)).is_err());
    }

    #[test]
    fn rectangular_ifm() {
        let l = LayerSpec::new("r", 9, 5, 3, 2, 1, 1).unwrap();
        assert_eq!((l.ofm_w(), l.ofm_h()), (7, 4));
        assert!(l.validate_window(WindowShape::new(9, 5)).is_ok());
        assert!(l.validate_window(WindowShape::new(5, 9)).is_err());
    }

    #[test]
    fn network_invariants() {
        let a = LayerSpec::square("a", 8, 3, 1, 1).unwrap();
        assert!(NetworkSpec::new("n", vec![]).is_err());
        assert!(NetworkSpec::new("n", vec![a.clone(), a.clone()]).is_err());
        assert!(NetworkSpec::new("n", vec![a]).is_ok());
    }

    #[test]
    fn parses_pairs() {
        assert_eq!(
            "512x256".parse::<ArraySpec>().unwrap(),
            ArraySpec::new(512, 256).unwrap()
        );
        assert_eq!(
            "4X3".parse::<WindowShape>().unwrap(),
            WindowShape::new(4, 3)
        );
        assert!("4by3".parse::<WindowShape>().is_err());
        assert_eq!("VWSDK".parse::<Method>().unwrap(), Method::VwSdk);
    }
}
