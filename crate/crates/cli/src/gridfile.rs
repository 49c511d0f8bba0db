//! Grid and table files.
//!
//! A grid file starts with `# key = value` header lines and ends the header
//! with `# end`. The text body has one `y x value` row per sample, rows of
//! the grid outermost, each number with 17 significant digits. The binary
//! body holds the row and column counts as little-endian `u64`, then the
//! values as little-endian `f64` in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use spdc_cavity::grid::{Axis, Coordinates, SpectralGrid};

use crate::error::{io, CliError, Result};

pub const FORMAT_VERSION: &str = "1";
const END: &str = "# end";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Binary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Binary => "bin",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Binary => "binary",
        }
    }
}

/// Metadata written into every header.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub quantity: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub header: Vec<(String, String)>,
    pub format: Format,
    pub x: Axis,
    pub y: Axis,
    pub values: Array2<f64>,
}

impl GridFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn axis_names(coords: Coordinates) -> (&'static str, &'static str) {
    match coords {
        Coordinates::SignalIdler => ("omega_s", "omega_i"),
        Coordinates::SumDifference => ("omega_plus", "omega_minus"),
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn common_header(kind: &str, p: &Provenance) -> Vec<(String, String)> {
    vec![
        ("file".into(), kind.into()),
        ("format_version".into(), FORMAT_VERSION.into()),
        ("generator".into(), format!("spdc-cavity {}", env!("CARGO_PKG_VERSION"))),
        ("config_hash".into(), p.config_hash.clone()),
        ("quantity".into(), p.quantity.clone()),
    ]
}

fn header_text(header: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in header {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s.push_str(END);
    s.push('\n');
    s
}

pub fn write_grid(grid: &SpectralGrid<f64>, path: &Path, format: Format, p: &Provenance) -> Result<()> {
    let (ny, nx) = grid.values.dim();
    let (xn, yn) = axis_names(grid.coords);
    let mut header = common_header("grid", p);
    for (tag, name, axis) in [("x", xn, &grid.x), ("y", yn, &grid.y)] {
        header.push((tag.into(), name.into()));
        header.push((format!("{tag}_units"), "rad/s".into()));
        header.push((format!("{tag}_min"), num(axis.start())));
        header.push((format!("{tag}_max"), num(axis.end())));
        header.push((format!("{tag}_step"), num(axis.step())));
        header.push((format!("{tag}_count"), axis.len().to_string()));
    }
    header.push(("rows".into(), ny.to_string()));
    header.push(("columns".into(), nx.to_string()));
    header.push(("body".into(), format.name().into()));
    let mut out = header_text(&header).into_bytes();
    match format {
        Format::Text => {
            let xs = grid.x.values();
            let ys = grid.y.values();
            for ((r, c), v) in grid.values.indexed_iter() {
                out.extend_from_slice(format!("{} {} {}\n", num(ys[r]), num(xs[c]), num(*v)).as_bytes());
            }
        }
        Format::Binary => {
            out.extend_from_slice(&(ny as u64).to_le_bytes());
            out.extend_from_slice(&(nx as u64).to_le_bytes());
            for v in grid.values.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(io(path))
}

fn split_header<'a>(path: &Path, bytes: &'a [u8]) -> Result<(Vec<(String, String)>, &'a [u8])> {
    let bad = |message: String| CliError::Format {
        path: path.into(),
        message,
    };
    let mut header = Vec::new();
    let mut rest = bytes;
    loop {
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("header is not terminated by '# end'".into()))?;
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| bad("header is not UTF-8".into()))?;
        rest = &rest[nl + 1..];
        if line == END {
            return Ok((header, rest));
        }
        let kv = line
            .strip_prefix("# ")
            .and_then(|l| l.split_once(" = "))
            .ok_or_else(|| bad(format!("malformed header line '{line}'")))?;
        header.push((kv.0.to_string(), kv.1.to_string()));
    }
}

pub fn read_grid(path: &Path) -> Result<GridFile> {
    let bytes = fs::read(path).map_err(io(path))?;
    let bad = |message: String| CliError::Format {
        path: path.into(),
        message,
    };
    let (header, body) = split_header(path, &bytes)?;
    let field = |key: &str| -> Result<&str> {
        header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| bad(format!("header has no '{key}'")))
    };
    let float = |key: &str| -> Result<f64> { field(key)?.parse().map_err(|_| bad(format!("'{key}' is not a number"))) };
    let count = |key: &str| -> Result<usize> { field(key)?.parse().map_err(|_| bad(format!("'{key}' is not a count"))) };
    let axis = |tag: &str| -> Result<Axis> {
        Axis::new(float(&format!("{tag}_min"))?, float(&format!("{tag}_step"))?, count(&format!("{tag}_count"))?)
            .map_err(|e| bad(e.to_string()))
    };
    let (x, y) = (axis("x")?, axis("y")?);
    let (ny, nx) = (count("rows")?, count("columns")?);
    if ny != y.len() || nx != x.len() {
        return Err(bad(format!(
            "rows × columns {ny} × {nx} do not match axis counts {} × {}",
            y.len(),
            x.len()
        )));
    }
    let (format, values) = match field("body")? {
        "text" => {
            let text = std::str::from_utf8(body).map_err(|_| bad("text body is not UTF-8".into()))?;
            let mut values = Vec::with_capacity(nx * ny);
            for (k, line) in text.lines().enumerate() {
                let v = line
                    .split_whitespace()
                    .nth(2)
                    .ok_or_else(|| bad(format!("body row {k} has fewer than 3 columns")))?;
                values.push(v.parse::<f64>().map_err(|_| bad(format!("body row {k}: '{v}' is not a number")))?);
            }
            (Format::Text, values)
        }
        "binary" => {
            if body.len() < 16 {
                return Err(bad("binary body is shorter than its dimensions".into()));
            }
            let dim = |k: usize| u64::from_le_bytes(body[8 * k..8 * k + 8].try_into().expect("8 bytes")) as usize;
            if (dim(0), dim(1)) != (ny, nx) {
                return Err(bad(format!(
                    "binary dimensions {} × {} disagree with the header {ny} × {nx}",
                    dim(0),
                    dim(1)
                )));
            }
            let data = &body[16..];
            if data.len() != 8 * nx * ny {
                return Err(bad(format!("binary body holds {} bytes, expected {}", data.len(), 8 * nx * ny)));
            }
            let values = data
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            (Format::Binary, values)
        }
        other => return Err(bad(format!("unknown body encoding '{other}'"))),
    };
    if values.len() != nx * ny {
        return Err(bad(format!("body holds {} values, expected {}", values.len(), nx * ny)));
    }
    let values = Array2::from_shape_vec((ny, nx), values).map_err(|e| bad(e.to_string()))?;
    Ok(GridFile {
        header,
        format,
        x,
        y,
        values,
    })
}

/// Writes a whitespace-separated table with the common header and a
/// `columns` entry naming each column.
pub fn write_table(path: &Path, columns: &[&str], rows: &[Vec<f64>], p: &Provenance) -> Result<()> {
    let mut header = common_header("table", p);
    header.push(("columns".into(), columns.join(" ")));
    header.push(("rows".into(), rows.len().to_string()));
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(io(path))?);
    let mut body = header_text(&header);
    for row in rows {
        body.push_str(&row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "));
        body.push('\n');
    }
    f.write_all(body.as_bytes()).map_err(io(path))?;
    f.flush().map_err(io(path))
}

/// Reads a table written by [`write_table`]: header pairs and numeric rows.
pub fn read_table(path: &Path) -> Result<(Vec<(String, String)>, Vec<Vec<f64>>)> {
    let bytes = fs::read(path).map_err(io(path))?;
    let (header, body) = split_header(path, &bytes)?;
    let text = std::str::from_utf8(body).map_err(|_| CliError::Format {
        path: path.into(),
        message: "table body is not UTF-8".into(),
    })?;
    let rows = text
        .lines()
        .map(|l| {
            l.split_whitespace()
                .map(|v| {
                    v.parse().map_err(|_| CliError::Format {
                        path: path.into(),
                        message: format!("'{v}' is not a number"),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn provenance() -> Provenance {
        Provenance {
            config_hash: "abc".into(),
            quantity: "test".into(),
        }
    }

    fn grid(values: Vec<f64>, nx: usize, ny: usize) -> SpectralGrid<f64> {
        SpectralGrid::new(
            Axis::new(2.3e15, 1.7e11, nx).unwrap(),
            Axis::new(2.1e15, 3.1e11, ny).unwrap(),
            Coordinates::SignalIdler,
            Array2::from_shape_vec((ny, nx), values).unwrap(),
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn binary_round_trip_is_bitwise(
            nx in 2usize..9,
            ny in 2usize..9,
            seed in proptest::collection::vec(any::<f64>(), 64),
        ) {
            let values: Vec<f64> = seed.into_iter().take(nx * ny).collect();
            let g = grid(values, nx, ny);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("g.bin");
            write_grid(&g, &path, Format::Binary, &provenance()).unwrap();
            let back = read_grid(&path).unwrap();
            for (a, b) in g.values.iter().zip(back.values.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back.x, g.x);
            prop_assert_eq!(back.y, g.y);
        }

        #[test]
        fn text_round_trip_within_one_ulp(
            values in proptest::collection::vec(-1e300f64..1e300, 12),
        ) {
            let g = grid(values, 4, 3);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("g.txt");
            write_grid(&g, &path, Format::Text, &provenance()).unwrap();
            let back = read_grid(&path).unwrap();
            for (a, b) in g.values.iter().zip(back.values.iter()) {
                prop_assert!((a.to_bits() as i64 - b.to_bits() as i64).abs() <= 1);
            }
        }
    }

    #[test]
    fn header_carries_axes_and_hash() {
        let g = grid((0..6).map(f64::from).collect(), 3, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        write_grid(&g, &path, Format::Text, &provenance()).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(back.get("config_hash"), Some("abc"));
        assert_eq!(back.get("x"), Some("omega_s"));
        assert_eq!(back.get("x_count"), Some("3"));
        assert_eq!(back.get("y_units"), Some("rad/s"));
        let text = fs::read_to_string(&path).unwrap();
        let first = text.lines().find(|l| !l.starts_with('#')).unwrap();
        let cols: Vec<&str> = first.split(' ').collect();
        assert_eq!(cols.len(), 3);
        // `y x value`, 17 significant digits.
        assert_eq!(cols[0], "2.1000000000000000e15");
        assert_eq!(cols[1], "2.3000000000000000e15");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = grid(vec![1.0; 6], 3, 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        write_grid(&g, &path, Format::Binary, &provenance()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_grid(&path), Err(CliError::Format { .. })));
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        let rows = vec![vec![1.0, 2.5e-13], vec![0.1, 3.0]];
        write_table(&path, &["a", "b"], &rows, &provenance()).unwrap();
        let (header, back) = read_table(&path).unwrap();
        assert_eq!(back, rows);
        assert!(header.contains(&("columns".to_string(), "a b".to_string())));
    }
}
