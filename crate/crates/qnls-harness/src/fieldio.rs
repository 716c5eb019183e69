//! Field file formats.
//!
//! Binary (`.qfld`), little-endian throughout:
//!
//! | offset | size | content                          |
//! |--------|------|----------------------------------|
//! | 0      | 4    | magic bytes `QFLD`               |
//! | 4      | 4    | format version, u32 (currently 1)|
//! | 8      | 8    | half_length, f64                 |
//! | 16     | 8    | n_points, u64                    |
//! | 24     | 16n  | samples: (Re u_j, Im u_j) as f64 |
//!
//! Text (any other extension): `# qnls-field v1` header, a
//! `# half_length=<L> n_points=<n>` line, then CSV rows `x,re,im`.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use num_complex::Complex64;
use qnls::{Field, Grid};

const MAGIC: &[u8; 4] = b"QFLD";
const VERSION: u32 = 1;

pub fn write_field(path: &Path, field: &Field) -> anyhow::Result<()> {
    if path.extension().is_some_and(|e| e == "qfld") {
        write_binary(path, field)
    } else {
        write_csv(path, field)
    }
}

pub fn read_field(path: &Path) -> anyhow::Result<Field> {
    if path.extension().is_some_and(|e| e == "qfld") {
        read_binary(path)
    } else {
        read_csv(path)
    }
}

fn write_binary(path: &Path, field: &Field) -> anyhow::Result<()> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(24 + 16 * g.n_points());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&g.half_length().to_le_bytes());
    buf.extend_from_slice(&(g.n_points() as u64).to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn read_binary(path: &Path) -> anyhow::Result<Field> {
    let mut file =
        std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut header = [0u8; 24];
    file.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        bail!("{}: not a field file (bad magic)", path.display());
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        bail!(
            "{}: unsupported field format version {version} (expected {VERSION})",
            path.display()
        );
    }
    let half_length = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let n = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
    let grid = Grid::new(half_length, n).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut data = vec![0u8; 16 * n];
    file.read_exact(&mut data)?;
    let values = data
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Field::new(grid, values).map_err(|e| anyhow::anyhow!("{e}"))
}

fn write_csv(path: &Path, field: &Field) -> anyhow::Result<()> {
    let g = field.grid();
    let mut out = String::new();
    out.push_str("# qnls-field v1\n");
    out.push_str(&format!(
        "# half_length={} n_points={}\n",
        g.half_length(),
        g.n_points()
    ));
    out.push_str("x,re,im\n");
    for (j, v) in field.values().iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", g.point(j), v.re, v.im));
    }
    let mut f =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

fn read_csv(path: &Path) -> anyhow::Result<Field> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let first = lines.next().unwrap_or_default();
    if first.trim() != "# qnls-field v1" {
        bail!(
            "{}: unknown field file header {first:?} (expected '# qnls-field v1')",
            path.display()
        );
    }
    let meta = lines.next().unwrap_or_default();
    let mut half_length = None;
    let mut n_points = None;
    for token in meta.trim_start_matches('#').split_whitespace() {
        if let Some(v) = token.strip_prefix("half_length=") {
            half_length = v.parse::<f64>().ok();
        }
        if let Some(v) = token.strip_prefix("n_points=") {
            n_points = v.parse::<usize>().ok();
        }
    }
    let (Some(l), Some(n)) = (half_length, n_points) else {
        bail!("{}: missing half_length/n_points metadata", path.display());
    };
    let grid = Grid::new(l, n).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut values = Vec::with_capacity(n);
    for line in lines {
        if line.starts_with('#') || line.starts_with('x') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            bail!("{}: malformed row {line:?}", path.display());
        }
        values.push(Complex64::new(cols[1].parse()?, cols[2].parse()?));
    }
    if values.len() != n {
        bail!(
            "{}: expected {n} samples, found {}",
            path.display(),
            values.len()
        );
    }
    Field::new(grid, values).map_err(|e| anyhow::anyhow!("{e}"))
}
