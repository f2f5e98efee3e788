//! Plain CSV export and import with round-trip float formatting.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::error::{invalid, Result};
use crate::spectrum::{unfolded_energy, Spectrum};
use crate::stats::{SpacingHistogram, StatCurve};

pub const SPECTRUM_HEADER: &str = "p,l,value";
pub const UNFOLDED_HEADER: &str = "p,l,value,unfolded";
pub const CURVE_HEADER: &str = "x,mean,stderr";
pub const HISTOGRAM_HEADER: &str = "bin_left,bin_right,density";

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_spectrum<W: Write>(out: &mut W, s: &Spectrum) -> io::Result<()> {
    writeln!(out, "{SPECTRUM_HEADER}")?;
    for lv in s.levels() {
        writeln!(out, "{},{},{}", lv.p, lv.l, fmt_f64(lv.value))?;
    }
    Ok(())
}

pub fn write_unfolded<W: Write>(out: &mut W, s: &Spectrum) -> io::Result<()> {
    let root = s.params().sqrt_two_beta();
    writeln!(out, "{UNFOLDED_HEADER}")?;
    for lv in s.levels() {
        writeln!(
            out,
            "{},{},{},{}",
            lv.p,
            lv.l,
            fmt_f64(lv.value),
            fmt_f64(unfolded_energy(lv.value, root))
        )?;
    }
    Ok(())
}

pub fn write_curve<W: Write>(out: &mut W, c: &StatCurve) -> io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    let spread = c.spread();
    let mut line = String::new();
    for (i, (x, y)) in c.points().enumerate() {
        line.clear();
        let _ = write!(line, "{},{},", fmt_f64(x), fmt_f64(y));
        if let Some(s) = spread {
            line.push_str(&fmt_f64(s[i]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Histogram rows, with the bin-averaged `exp(-s)` when `with_reference`.
pub fn write_histogram<W: Write>(
    out: &mut W,
    h: &SpacingHistogram,
    with_reference: bool,
) -> io::Result<()> {
    if with_reference {
        writeln!(out, "{HISTOGRAM_HEADER},reference")?;
    } else {
        writeln!(out, "{HISTOGRAM_HEADER}")?;
    }
    let reference = h.exponential_reference();
    for (i, (d, e)) in h.density.iter().zip(h.bin_edges.windows(2)).enumerate() {
        write!(out, "{},{},{}", fmt_f64(e[0]), fmt_f64(e[1]), fmt_f64(*d))?;
        if with_reference {
            write!(out, ",{}", fmt_f64(reference[i]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a curve written by [`write_curve`]; extra columns are ignored.
pub fn read_curve<R: BufRead>(input: R) -> Result<StatCurve> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| invalid("empty curve file"))?
        .map_err(|e| invalid(format!("read error: {e}")))?;
    let columns: Vec<&str> = header.trim().split(',').collect();
    if columns.len() < 2 || columns[0] != "x" || columns[1] != "mean" {
        return Err(invalid(format!("unexpected curve header '{header}'")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut spread = Vec::new();
    let mut has_spread = columns.get(2) == Some(&"stderr");
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| invalid(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let num = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .ok_or_else(|| invalid(format!("line {}: missing column {i}", n + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| invalid(format!("line {}: {e}", n + 2)))
        };
        xs.push(num(0)?);
        ys.push(num(1)?);
        if has_spread {
            match fields.get(2).map(|s| s.trim()) {
                Some(s) if !s.is_empty() => spread.push(num(2)?),
                _ => has_spread = false,
            }
        }
    }
    StatCurve::new(xs, ys, has_spread.then_some(spread))
}
