//! Explicit per-cycle weight placement on the crossbar.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ArraySpec, LayerSpec, MappingPlan, RowPacking, WindowShape};

/// One kernel weight `W[out_ch][in_ch][ky][kx]` programmed into a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KernelIndex {
    pub out_ch: u32,
    pub in_ch: u32,
    pub ky: u16,
    pub kx: u16,
}

/// Input element driven onto a row, relative to the parallel-window origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowTag {
    pub ch: usize,
    pub y: usize,
    pub x: usize,
}

/// Output element produced by a column: kernel offset `(dy, dx)` inside the
/// parallel window and its output channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColTag {
    pub dy: usize,
    pub dx: usize,
    pub out_ch: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutCycle {
    pub ar_index: usize,
    pub ac_index: usize,
    pub rows: Vec<RowTag>,
    pub cols: Vec<ColTag>,
    /// Row-major `rows.len() x cols.len()`; cells outside this block are unused.
    pub cells: Vec<Option<KernelIndex>>,
}

impl LayoutCycle {
    pub fn cell(&self, row: usize, col: usize) -> Option<KernelIndex> {
        if row >= self.rows.len() || col >= self.cols.len() {
            return None;
        }
        self.cells[row * self.cols.len() + col]
    }

    pub fn cell_mut(&mut self, row: usize, col: usize) -> Option<&mut Option<KernelIndex>> {
        if row >= self.rows.len() || col >= self.cols.len() {
            return None;
        }
        let n = self.cols.len();
        self.cells.get_mut(row * n + col)
    }

    pub fn used_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn used_in_column(&self, col: usize) -> usize {
        (0..self.rows.len())
            .filter(|&r| self.cell(r, col).is_some())
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayLayout {
    pub array: ArraySpec,
    pub window: WindowShape,
    /// AR-major: cycle `a * ac + c`.
    pub cycles: Vec<LayoutCycle>,
}

impl ArrayLayout {
    pub fn total_placements(&self) -> usize {
        self.cycles.iter().map(LayoutCycle::used_cells).sum()
    }

    /// Text grid per cycle over the used block: `#` holds a weight, `.` is unused.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (n, cyc) in self.cycles.iter().enumerate() {
            let _ = writeln!(
                s,
                "cycle {n} (ar {}, ac {}): {} rows x {} cols of {}, {} cells used",
                cyc.ar_index,
                cyc.ac_index,
                cyc.rows.len(),
                cyc.cols.len(),
                self.array,
                cyc.used_cells()
            );
            for r in 0..cyc.rows.len() {
                let line: String = (0..cyc.cols.len())
                    .map(|c| if cyc.cell(r, c).is_some() { '#' } else { '.' })
                    .collect();
                s.push_str(&line);
                s.push('\n');
            }
        }
        s
    }
}

fn kernel_at(layer: &LayerSpec, row: RowTag, col: ColTag) -> Option<KernelIndex> {
    let ky = row.y.checked_sub(col.dy)?;
    let kx = row.x.checked_sub(col.dx)?;
    (ky < layer.k_h() && kx < layer.k_w()).then_some(KernelIndex {
        out_ch: col.out_ch as u32,
        in_ch: row.ch as u32,
        ky: ky as u16,
        kx: kx as u16,
    })
}

fn fill(layer: &LayerSpec, rows: &[RowTag], cols: &[ColTag]) -> Vec<Option<KernelIndex>> {
    let mut cells = Vec::with_capacity(rows.len() * cols.len());
    for &r in rows {
        cells.extend(cols.iter().map(|&c| kernel_at(layer, r, c)));
    }
    cells
}

fn window_rows(window: WindowShape, channels: std::ops::Range<usize>) -> Vec<RowTag> {
    let mut rows = Vec::with_capacity(channels.len() * window.area());
    for ch in channels {
        for y in 0..window.pw_h {
            for x in 0..window.pw_w {
                rows.push(RowTag { ch, y, x });
            }
        }
    }
    rows
}

fn window_offsets(layer: &LayerSpec, window: WindowShape) -> impl Iterator<Item = (usize, usize)> {
    let nx = window.pw_w - layer.k_w() + 1;
    let ny = window.pw_h - layer.k_h() + 1;
    (0..ny).flat_map(move |dy| (0..nx).map(move |dx| (dy, dx)))
}

fn assemble(
    layer: &LayerSpec,
    array: &ArraySpec,
    plan: &MappingPlan,
    row_tiles: Vec<Vec<RowTag>>,
    col_tiles: Vec<Vec<ColTag>>,
) -> Result<ArrayLayout> {
    if row_tiles.len() as u64 != plan.ar_cycles || col_tiles.len() as u64 != plan.ac_cycles {
        return Err(Error::InfeasiblePlan(format!(
            "layout needs {}x{} AR/AC cycles, plan states {}x{}",
            row_tiles.len(),
            col_tiles.len(),
            plan.ar_cycles,
            plan.ac_cycles
        )));
    }
    let mut cycles = Vec::with_capacity(row_tiles.len() * col_tiles.len());
    for (a, rows) in row_tiles.iter().enumerate() {
        if rows.len() > array.rows() {
            return Err(Error::InfeasiblePlan(format!(
                "AR cycle {a} needs {} rows, array has {}",
                rows.len(),
                array.rows()
            )));
        }
        for (c, cols) in col_tiles.iter().enumerate() {
            if cols.len() > array.cols() {
                return Err(Error::InfeasiblePlan(format!(
                    "AC cycle {c} needs {} columns, array has {}",
                    cols.len(),
                    array.cols()
                )));
            }
            cycles.push(LayoutCycle {
                ar_index: a,
                ac_index: c,
                cells: fill(layer, rows, cols),
                rows: rows.clone(),
                cols: cols.clone(),
            });
        }
    }
    Ok(ArrayLayout {
        array: *array,
        window: plan.window,
        cycles,
    })
}

/// Places the weights of `plan` cycle by cycle.
///
/// Channel-tiled plans give each AR cycle `ic_tile` whole input channels of
/// the parallel window and each AC cycle `oc_tile` output channels, duplicated
/// and shifted for every kernel offset. Continuous plans cut the flattened
/// rows and columns into array-sized chunks.
pub fn build_layout(
    layer: &LayerSpec,
    array: &ArraySpec,
    plan: &MappingPlan,
) -> Result<ArrayLayout> {
    plan.check(layer)?;
    let window = plan.window;
    let (row_tiles, col_tiles) = match plan.packing {
        RowPacking::ChannelTiled => {
            let row_tiles = (0..layer.in_ch())
                .step_by(plan.ic_tile)
                .map(|lo| window_rows(window, lo..(lo + plan.ic_tile).min(layer.in_ch())))
                .collect();
            let col_tiles = (0..layer.out_ch())
                .step_by(plan.oc_tile)
                .map(|lo| {
                    let hi = (lo + plan.oc_tile).min(layer.out_ch());
                    window_offsets(layer, window)
                        .flat_map(|(dy, dx)| (lo..hi).map(move |out_ch| ColTag { dy, dx, out_ch }))
                        .collect()
                })
                .collect();
            (row_tiles, col_tiles)
        }
        RowPacking::Continuous => {
            let rows = window_rows(window, 0..layer.in_ch());
            let cols: Vec<ColTag> = (0..layer.out_ch())
                .flat_map(|out_ch| {
                    window_offsets(layer, window).map(move |(dy, dx)| ColTag { dy, dx, out_ch })
                })
                .collect();
            (
                rows.chunks(array.rows()).map(<[_]>::to_vec).collect(),
                cols.chunks(array.cols()).map(<[_]>::to_vec).collect(),
            )
        }
    };
    assemble(layer, array, plan, row_tiles, col_tiles)
}

/// Sub-matrix duplication: every duplicated kernel gets its own block of
/// rows, so inputs shared between windows are driven more than once.
/// Single cycle; the whole layer must fit.
pub fn build_submatrix_layout(
    layer: &LayerSpec,
    array: &ArraySpec,
    window: WindowShape,
) -> Result<ArrayLayout> {
    layer.validate_window(window)?;
    let offsets: Vec<_> = window_offsets(layer, window).collect();
    let block = layer.k_w() * layer.k_h() * layer.in_ch();
    let (n_rows, n_cols) = (offsets.len() * block, offsets.len() * layer.out_ch());
    if n_rows > array.rows() || n_cols > array.cols() {
        return Err(Error::InfeasiblePlan(format!(
            "sub-matrix duplication of {} kernels needs {n_rows}x{n_cols}, array is {array}",
            offsets.len()
        )));
    }
    let mut rows = Vec::with_capacity(n_rows);
    for &(dy, dx) in &offsets {
        for ch in 0..layer.in_ch() {
            for ky in 0..layer.k_h() {
                for kx in 0..layer.k_w() {
                    rows.push(RowTag {
                        ch,
                        y: dy + ky,
                        x: dx + kx,
                    });
                }
            }
        }
    }
    let cols: Vec<ColTag> = offsets
        .iter()
        .flat_map(|&(dy, dx)| (0..layer.out_ch()).map(move |out_ch| ColTag { dy, dx, out_ch }))
        .collect();
    let mut cells = vec![None; n_rows * n_cols];
    for (r, row) in rows.iter().enumerate() {
        let owner = r / block;
        for (c, col) in cols.iter().enumerate() {
            if c / layer.out_ch() == owner {
                cells[r * n_cols + c] = kernel_at(layer, *row, *col);
            }
        }
    }
    Ok(ArrayLayout {
        array: *array,
        window,
        cycles: vec![LayoutCycle {
            ar_index: 0,
            ac_index: 0,
            rows,
            cols,
            cells,
        }],
    })
}
