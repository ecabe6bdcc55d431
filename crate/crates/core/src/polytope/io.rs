//! Plain-text point clouds.
//!
//! Format: a header line `n N seed`, then N lines of n whitespace-separated
//! floats. Floats are written with the shortest round-trip representation,
//! so write/read is lossless.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn write_point_cloud(path: &Path, n: usize, seed: u64, points: &[f64]) -> io::Result<()> {
    assert!(n > 0 && points.len() % n == 0);
    let count = points.len() / n;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{n} {count} {seed}")?;
    for p in points.chunks_exact(n) {
        let mut line = String::new();
        for (k, v) in p.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

fn bad(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

/// Returns (n, seed, flat points).
pub fn read_point_cloud(path: &Path) -> io::Result<(usize, u64, Vec<f64>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines.next().ok_or_else(|| bad("empty point cloud file".into()))??;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(format!("bad header {header:?}: expected `n N seed`")))?;
    let count: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(format!("bad header {header:?}: expected `n N seed`")))?;
    let seed: u64 = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(format!("bad header {header:?}: expected `n N seed`")))?;
    if parts.next().is_some() {
        return Err(bad(format!("bad header {header:?}: trailing tokens")));
    }
    if n == 0 {
        return Err(bad("dimension must be positive".into()));
    }
    let mut points = Vec::with_capacity(count * n);
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = points.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| bad(format!("line {}: bad float {tok:?}", row + 2)))?;
            points.push(v);
        }
        if points.len() - before != n {
            return Err(bad(format!("line {}: expected {n} coordinates, got {}", row + 2, points.len() - before)));
        }
    }
    if points.len() != count * n {
        return Err(bad(format!("expected {count} points, found {}", points.len() / n)));
    }
    Ok((n, seed, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_clouds_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.txt");
        let pts = vec![0.1, -2.5e-17, 3.0, f64::MIN_POSITIVE, 1.0 / 3.0, -7.25];
        write_point_cloud(&path, 3, 99, &pts).unwrap();
        let (n, seed, got) = read_point_cloud(&path).unwrap();
        assert_eq!((n, seed), (3, 99));
        assert_eq!(got, pts);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "2 2 7\n1.0 2.0\n3.0\n").unwrap();
        assert!(read_point_cloud(&path).is_err());
        std::fs::write(&path, "not a header\n").unwrap();
        assert!(read_point_cloud(&path).is_err());
        std::fs::write(&path, "2 3 7\n1 2\n3 4\n").unwrap();
        assert!(read_point_cloud(&path).is_err());
    }
}
