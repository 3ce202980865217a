//! `netplan` command-line front end.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::mappers::{plan, plan_vwsdk, Candidate};
use crate::model::{ArraySpec, LayerSpec, Method, WindowShape};
use crate::netfile;
use crate::report::{self, fmt_speedup, speedup, NetworkReport};
use crate::sim::{build_layout, random_operands, reference_conv, simulate_layout, Tensor3};

#[derive(Debug, Parser)]
#[command(
    name = "netplan",
    version,
    about = "Plan and verify CNN weight mappings on PIM crossbar arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan a single layer.
    Plan {
        #[command(flatten)]
        layer: LayerArgs,
        #[arg(long, value_parser = parse_array)]
        array: ArraySpec,
        #[arg(long, value_enum, default_value_t = MethodArg::Vwsdk)]
        method: MethodArg,
        /// Print the full search trace.
        #[arg(long)]
        verbose: bool,
        /// Print the per-cycle cell grid of each plan.
        #[arg(long)]
        dump_layout: bool,
    },
    /// Plan every layer of a network file with all methods.
    Network {
        file: PathBuf,
        #[arg(long, value_parser = parse_array)]
        array: ArraySpec,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Network speedups over several array sizes, as CSV.
    Sweep {
        file: PathBuf,
        #[arg(long = "array", value_parser = parse_array, value_delimiter = ',', required = true)]
        arrays: Vec<ArraySpec>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Simulate a layer on random tensors and compare against direct convolution.
    Verify {
        #[command(flatten)]
        layer: LayerArgs,
        #[arg(long, value_parser = parse_array)]
        array: ArraySpec,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Clear the first used cell of cycle 0 before simulating.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Per-layer mean and peak array utilization for every method.
    Utilization {
        file: PathBuf,
        #[arg(long, value_parser = parse_array)]
        array: ArraySpec,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct LayerArgs {
    /// IFM size, WxH.
    #[arg(long, value_parser = parse_window)]
    pub ifm: WindowShape,
    /// Kernel size, WxH.
    #[arg(long, value_parser = parse_window)]
    pub kernel: WindowShape,
    #[arg(long)]
    pub ic: usize,
    #[arg(long)]
    pub oc: usize,
    #[arg(long, default_value = "layer")]
    pub name: String,
}

impl LayerArgs {
    fn to_layer(&self) -> crate::Result<LayerSpec> {
        LayerSpec::new(
            self.name.clone(),
            self.ifm.pw_w,
            self.ifm.pw_h,
            self.kernel.pw_w,
            self.kernel.pw_h,
            self.ic,
            self.oc,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Im2col,
    Sdk,
    Vwsdk,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Im2col => vec![Method::Im2col],
            MethodArg::Sdk => vec![Method::Sdk],
            MethodArg::Vwsdk => vec![Method::VwSdk],
            MethodArg::All => Method::ALL.to_vec(),
        }
    }
}

fn parse_array(s: &str) -> Result<ArraySpec, String> {
    s.parse::<ArraySpec>().map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> Result<WindowShape, String> {
    s.parse()
}

/// Runs one command. `Ok(false)` means the command completed but reported a failure.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<bool> {
    match cli.command {
        Command::Plan {
            layer,
            array,
            method,
            verbose,
            dump_layout,
        } => {
            let layer = layer.to_layer()?;
            cmd_plan(&layer, &array, method, verbose, dump_layout, out)?;
            Ok(true)
        }
        Command::Network { file, array, csv } => {
            let net = netfile::load(&file)?;
            let report = NetworkReport::build(&net, &array)?;
            out.write_all(report.render_table().as_bytes())?;
            if let Some(path) = csv {
                write_csv_file(&path, &report.records())?;
            }
            Ok(true)
        }
        Command::Sweep { file, arrays, csv } => {
            let net = netfile::load(&file)?;
            let records = report::sweep(&net, &arrays)?;
            match csv {
                Some(path) => write_csv_file(&path, &records)?,
                None => report::write_csv(&records, &mut *out)?,
            }
            Ok(true)
        }
        Command::Verify {
            layer,
            array,
            method,
            seed,
            inject_fault,
        } => {
            let layer = layer.to_layer()?;
            cmd_verify(&layer, &array, method, seed, inject_fault, out)
        }
        Command::Utilization { file, array, csv } => {
            let net = netfile::load(&file)?;
            let records = report::utilization_table(&net, &array)?;
            writeln!(out, "network {} on {} array", net.name(), array)?;
            writeln!(
                out,
                "{:<8} {:<7} {:>8} {:>8} {:>8}",
                "layer", "method", "cycles", "mean%", "peak%"
            )?;
            for r in &records {
                writeln!(
                    out,
                    "{:<8} {:<7} {:>8} {:>8} {:>8}",
                    r.name, r.method, r.cycles_per_position, r.mean_pct, r.peak_pct
                )?;
            }
            if let Some(path) = csv {
                write_csv_file(&path, &records)?;
            }
            Ok(true)
        }
    }
}

fn write_csv_file<T: serde::Serialize>(
    path: &std::path::Path,
    records: &[T],
) -> anyhow::Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    report::write_csv(records, f).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_plan(
    layer: &LayerSpec,
    array: &ArraySpec,
    method: MethodArg,
    verbose: bool,
    dump_layout: bool,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let base = plan(layer, array, Method::Im2col).total_cycles;
    for m in method.methods() {
        let p = plan(layer, array, m);
        let mut s = String::new();
        let _ = writeln!(s, "method   {}", p.method);
        let _ = writeln!(s, "window   {}", p.window);
        let _ = writeln!(s, "ic_t     {}", p.ic_tile);
        let _ = writeln!(s, "oc_t     {}", p.oc_tile);
        let _ = writeln!(s, "nw_p     {}", p.windows_per_pw);
        let _ = writeln!(s, "num_pw   {}", p.num_pw);
        let _ = writeln!(s, "ar       {}", p.ar_cycles);
        let _ = writeln!(s, "ac       {}", p.ac_cycles);
        let _ = writeln!(s, "cycles   {}", p.total_cycles);
        let _ = writeln!(s, "speedup  {}", fmt_speedup(speedup(base, p.total_cycles)));
        out.write_all(s.as_bytes())?;
        if verbose && m == Method::VwSdk {
            let (_, trace) = plan_vwsdk(layer, array);
            writeln!(out, "trace ({} candidates)", trace.entries.len())?;
            for e in &trace.entries {
                match e.candidate {
                    Candidate::Feasible(b) => writeln!(
                        out,
                        "  {:>7} num_pw={} ar={} ac={} cycles={}",
                        e.window.to_string(),
                        b.num_pw,
                        b.ar_cycles,
                        b.ac_cycles,
                        b.total
                    )?,
                    Candidate::Infeasible => {
                        writeln!(out, "  {:>7} infeasible", e.window.to_string())?
                    }
                }
            }
        }
        if dump_layout {
            out.write_all(build_layout(layer, array, &p)?.dump().as_bytes())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_verify(
    layer: &LayerSpec,
    array: &ArraySpec,
    method: MethodArg,
    seed: u64,
    inject_fault: bool,
    out: &mut dyn Write,
) -> anyhow::Result<bool> {
    let (ifm, weights) = random_operands(layer, seed);
    let want = reference_conv(&ifm, &weights)?;
    let mut all_ok = true;

    for m in method.methods() {
        let p = plan(layer, array, m);
        let mut layout = build_layout(layer, array, &p)?;
        let mut fault = None;
        if inject_fault {
            let cyc = &mut layout.cycles[0];
            let n_cols = cyc.cols.len();
            let Some(idx) = cyc.cells.iter().position(Option::is_some) else {
                bail!("no used cell to corrupt");
            };
            cyc.cells[idx] = None;
            fault = Some((idx / n_cols, idx % n_cols));
        }
        let label = format!(
            "{m:<7} window {:<6} ar {} ac {}",
            p.window.to_string(),
            p.ar_cycles,
            p.ac_cycles
        );
        let result = simulate_layout(layer, &layout, &ifm, &weights);
        let verdict = match &result {
            Ok(o) if o.ofm == want && o.measured_cycles <= p.total_cycles => None,
            Ok(o) if o.ofm == want => Some(format!(
                "measured cycles {} exceed analytic {}",
                o.measured_cycles, p.total_cycles
            )),
            Ok(o) => Some(first_mismatch(&o.ofm, &want)),
            Err(e) => Some(e.to_string()),
        };
        let measured = result.as_ref().map(|o| o.measured_cycles).ok();
        match verdict {
            None => writeln!(
                out,
                "PASS {label} cycles measured {} analytic {}",
                measured.unwrap_or(0),
                p.total_cycles
            )?,
            Some(why) => {
                all_ok = false;
                write!(out, "FAIL {label}: {why}")?;
                if let Some((r, c)) = fault {
                    write!(out, " (injected fault at cycle 0 row {r} col {c})")?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(all_ok)
}

fn first_mismatch(got: &Tensor3, want: &Tensor3) -> String {
    let (c, h, w) = want.shape();
    for o in 0..c {
        for y in 0..h {
            for x in 0..w {
                if got.get(o, y, x) != want.get(o, y, x) {
                    return format!(
                        "ofm[{o}][{y}][{x}] = {} expected {}",
                        got.get(o, y, x),
                        want.get(o, y, x)
                    );
                }
            }
        }
    }
    "outputs differ".into()
}
