//! CSV and PGM emission. CSV is the contract of record: floats print with
//! 9 significant digits in a fixed format so identical configs produce
//! byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_csv<const N: usize>(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = [f64; N]>,
) -> io::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}")?;
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                w.write_all(b",")?;
            }
            w.write_all(fmt_float(*v).as_bytes())?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Binary 8-bit grayscale PGM ("P5"). Rows run along the field axis,
/// ascending downward; values are min-max normalized and the bounds are
/// recorded in a header comment.
pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> io::Result<()> {
    assert_eq!(values.len(), width * height, "matrix dimensions mismatch");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 0.0;
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write!(
        w,
        "P5\n# amin={} amax={}\n{} {}\n255\n",
        fmt_float(lo),
        fmt_float(hi),
        width,
        height
    )?;
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let bytes: Vec<u8> = values
        .iter()
        .map(|&v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    w.write_all(&bytes)?;
    w.flush()
}
