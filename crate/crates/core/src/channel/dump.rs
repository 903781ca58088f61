//! Plain-text channel dump.
//!
//! ```text
//! dfris-channels 1
//! M N K
//! G <rows> <cols>
//! <re> <im>            one line per entry, row-major
//! h <k> <len> 1
//! ...
//! g_t <len> 1
//! ...
//! g_r <len> 1
//! ...
//! ```
//!
//! Values are written with 17 significant digits so a dump reads back
//! bit-identically.

use std::io::{BufRead, Write};

use super::ChannelSet;
use crate::{CMatrix, CVector, Error, Result, C64};

const MAGIC: &str = "dfris-channels 1";

fn io_err(e: std::io::Error) -> Error {
    Error::Domain(format!("channel dump I/O: {e}"))
}

fn write_block<W: Write>(w: &mut W, label: &str, m: &CMatrix) -> std::io::Result<()> {
    writeln!(w, "{label} {} {}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            writeln!(w, "{:.16e} {:.16e}", z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn write_channel_dump<W: Write>(channels: &ChannelSet, mut w: W) -> Result<()> {
    let col = |v: &CVector| CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    (|| -> std::io::Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(
            w,
            "{} {} {}",
            channels.n_elements(),
            channels.n_antennas(),
            channels.n_users()
        )?;
        write_block(&mut w, "G", &channels.g_bs_ris)?;
        for (k, h) in channels.h_users.iter().enumerate() {
            write_block(&mut w, &format!("h {k}"), &col(h))?;
        }
        write_block(&mut w, "g_t", &col(&channels.g_t))?;
        write_block(&mut w, "g_r", &col(&channels.g_r))?;
        Ok(())
    })()
    .map_err(io_err)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(io_err(e)),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Domain(format!("channel dump line {}: {msg}", self.line_no))
    }

    fn read_block(&mut self, label: &str) -> Result<CMatrix> {
        let header = self.next_line()?;
        let rest = header
            .strip_prefix(label)
            .ok_or_else(|| self.err(&format!("expected block `{label}`")))?;
        let dims: Vec<usize> = rest
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| self.err("bad block dimensions")))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(self.err("block header needs two dimensions"));
        };
        let mut m = CMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let line = self.next_line()?;
                let mut it = line.split_whitespace().map(str::parse::<f64>);
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(re)), Some(Ok(im)), None) => m[(r, c)] = C64::new(re, im),
                    _ => return Err(self.err("expected `<re> <im>`")),
                }
            }
        }
        Ok(m)
    }
}

pub fn read_channel_dump<R: BufRead>(r: R) -> Result<ChannelSet> {
    let mut lines = Lines {
        inner: r.lines(),
        line_no: 0,
    };
    if lines.next_line()?.trim() != MAGIC {
        return Err(lines.err("missing dump header"));
    }
    let dims_line = lines.next_line()?;
    let dims: Vec<usize> = dims_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| lines.err("bad dimensions")))
        .collect::<Result<_>>()?;
    let [m, n, k] = dims[..] else {
        return Err(lines.err("expected `M N K`"));
    };
    let g_bs_ris = lines.read_block("G")?;
    if g_bs_ris.shape() != (m, n) {
        return Err(lines.err("G does not match declared dimensions"));
    }
    let as_vec = |b: CMatrix| CVector::from_column_slice(b.as_slice());
    let h_users = (0..k)
        .map(|i| lines.read_block(&format!("h {i}")).map(as_vec))
        .collect::<Result<Vec<_>>>()?;
    let g_t = as_vec(lines.read_block("g_t")?);
    let g_r = as_vec(lines.read_block("g_r")?);
    let set = ChannelSet {
        g_bs_ris,
        h_users,
        g_t,
        g_r,
    };
    set.validate()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, LinkPathLoss, ScenarioGeometry};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dump_round_trips_bit_exact(seed in any::<u64>(), m in 1usize..12, n in 1usize..5, k in 2usize..5) {
            let g = ScenarioGeometry::default_layout(n, m, k);
            let set = generate_channels(&g, &LinkPathLoss::default(), seed).unwrap();
            let mut buf = Vec::new();
            write_channel_dump(&set, &mut buf).unwrap();
            let back = read_channel_dump(buf.as_slice()).unwrap();
            prop_assert_eq!(back, set);
        }
    }

    #[test]
    fn truncated_dump_reports_line() {
        let g = ScenarioGeometry::default_layout(2, 2, 2);
        let set = generate_channels(&g, &LinkPathLoss::default(), 1).unwrap();
        let mut buf = Vec::new();
        write_channel_dump(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        let err = read_channel_dump(cut.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 6"), "{err}");
    }
}
