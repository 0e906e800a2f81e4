//! Snapshot and CSV persistence.
//!
//! Spectral snapshots are text: `#key=value` metadata lines, then rows
//! `n1,n2,n3,re_cplus,im_cplus,re_cminus,im_cminus`. Grid snapshots are raw
//! little-endian `f64` component blocks with a `.meta` sidecar.
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GridField, Mode, SpectralField, Support, WaveVector};
use crate::vec3::Vec3;
use crate::BOX_LENGTH;

pub const SPECTRAL_FORMAT: &str = "helical-v1";
pub const GRID_FORMAT: &str = "grid-v1";
const SPECTRAL_HEADER: &str = "n1,n2,n3,re_cplus,im_cplus,re_cminus,im_cminus";

pub type Metadata = Vec<(String, String)>;

fn meta_value<'a>(meta: &'a Metadata, key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn parse_meta_line(line: &str) -> Result<(String, String)> {
    let body = line.trim_start_matches('#').trim();
    let (k, v) = body
        .split_once('=')
        .ok_or_else(|| Error::Format(format!("metadata line without '=': {line}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

pub fn write_spectral<W: Write>(mut w: W, field: &SpectralField, extra: &Metadata) -> Result<()> {
    writeln!(w, "#format={SPECTRAL_FORMAT}")?;
    writeln!(w, "#box={BOX_LENGTH}")?;
    writeln!(w, "#storage=halfspace")?;
    for (k, v) in extra {
        writeln!(w, "#{k}={v}")?;
    }
    writeln!(w, "{SPECTRAL_HEADER}")?;
    for m in field.modes() {
        let [a, b, c] = m.k.0;
        writeln!(
            w,
            "{a},{b},{c},{},{},{},{}",
            m.plus.re, m.plus.im, m.minus.re, m.minus.im
        )?;
    }
    Ok(())
}

pub fn read_spectral<R: BufRead>(r: R) -> Result<(SpectralField, Metadata)> {
    let mut meta = Metadata::new();
    let mut modes = Vec::new();
    let mut seen = BTreeSet::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            meta.push(parse_meta_line(line)?);
            continue;
        }
        if line == SPECTRAL_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(Error::Format(format!(
                "line {}: expected 7 fields, found {}",
                no + 1,
                f.len()
            )));
        }
        let bad = |what: &str| Error::Format(format!("line {}: bad {what}", no + 1));
        let mut k = [0i32; 3];
        for i in 0..3 {
            k[i] = f[i].parse().map_err(|_| bad("wave number"))?;
        }
        let mut c = [0.0f64; 4];
        for i in 0..4 {
            c[i] = f[3 + i].parse().map_err(|_| bad("amplitude"))?;
            if !c[i].is_finite() {
                return Err(bad("amplitude"));
            }
        }
        let k = WaveVector(k);
        if !seen.insert(k) {
            return Err(Error::Format(format!(
                "line {}: duplicate wave vector {:?}",
                no + 1,
                k.0
            )));
        }
        modes.push(Mode {
            k,
            plus: Complex64::new(c[0], c[1]),
            minus: Complex64::new(c[2], c[3]),
        });
    }
    match meta_value(&meta, "format") {
        Some(SPECTRAL_FORMAT) => {}
        Some(other) => return Err(Error::Format(format!("unsupported format '{other}'"))),
        None => return Err(Error::Format("missing format metadata".into())),
    }
    if let Some(b) = meta_value(&meta, "box") {
        let l: f64 = b
            .parse()
            .map_err(|_| Error::Format(format!("bad box length '{b}'")))?;
        if (l - BOX_LENGTH).abs() > 1e-12 {
            return Err(Error::Format(format!("box length {l} differs from 2π")));
        }
    }
    let field = SpectralField::from_modes(modes).map_err(|e| Error::Format(e.to_string()))?;
    Ok((field, meta))
}

pub fn save_spectral(path: &Path, field: &SpectralField, extra: &Metadata) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_spectral(&mut w, field, extra)?;
    w.flush()?;
    Ok(())
}

pub fn load_spectral(path: &Path) -> Result<(SpectralField, Metadata)> {
    read_spectral(BufReader::new(File::open(path)?))
}

/// Sidecar path `<path>.meta`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn save_grid(path: &Path, grid: &GridField, extra: &Metadata) -> Result<()> {
    let mut m = BufWriter::new(File::create(sidecar(path))?);
    writeln!(m, "format={GRID_FORMAT}")?;
    writeln!(m, "N={}", grid.n())?;
    writeln!(m, "box={BOX_LENGTH}")?;
    match grid.support() {
        Support::Torus => writeln!(m, "support=torus")?,
        Support::Ball { center, radius } => writeln!(
            m,
            "support=ball {} {} {} {}",
            center[0], center[1], center[2], radius
        )?,
    }
    writeln!(m, "components=x,y,z")?;
    writeln!(m, "index=(iz*N+iy)*N+ix")?;
    writeln!(m, "encoding=f64le")?;
    for (k, v) in extra {
        writeln!(m, "{k}={v}")?;
    }
    m.flush()?;
    let mut w = BufWriter::new(File::create(path)?);
    for c in grid.components() {
        for x in c {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_grid(path: &Path) -> Result<(GridField, Metadata)> {
    let text = std::fs::read_to_string(sidecar(path))?;
    let meta = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_meta_line)
        .collect::<Result<Metadata>>()?;
    if meta_value(&meta, "format") != Some(GRID_FORMAT) {
        return Err(Error::Format("sidecar lacks format=grid-v1".into()));
    }
    let n: usize = meta_value(&meta, "N")
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Format("sidecar lacks a valid N".into()))?;
    let support = match meta_value(&meta, "support").unwrap_or("torus") {
        "torus" => Support::Torus,
        s => {
            let nums: Vec<f64> = s
                .strip_prefix("ball")
                .ok_or_else(|| Error::Format(format!("unknown support '{s}'")))?
                .split_whitespace()
                .map(|x| {
                    x.parse()
                        .map_err(|_| Error::Format(format!("bad support '{s}'")))
                })
                .collect::<Result<_>>()?;
            if nums.len() != 4 {
                return Err(Error::Format(format!("bad support '{s}'")));
            }
            Support::Ball {
                center: Vec3::new(nums[0], nums[1], nums[2]),
                radius: nums[3],
            }
        }
    };
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let len = n * n * n;
    if bytes.len() != 3 * len * 8 {
        return Err(Error::Format(format!(
            "expected {} bytes for N={n}, found {}",
            3 * len * 8,
            bytes.len()
        )));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = [
        vals[..len].to_vec(),
        vals[len..2 * len].to_vec(),
        vals[2 * len..].to_vec(),
    ];
    Ok((GridField::new(n, data, support)?, meta))
}

/// A snapshot of either kind.
#[derive(Debug, Clone)]
pub enum Snapshot {
    Spectral(SpectralField, Metadata),
    Grid(GridField, Metadata),
}

/// Loads a grid snapshot when a sidecar exists, a spectral one otherwise.
pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    if sidecar(path).exists() {
        let (g, m) = load_grid(path)?;
        Ok(Snapshot::Grid(g, m))
    } else {
        let (f, m) = load_spectral(path)?;
        Ok(Snapshot::Spectral(f, m))
    }
}

/// Writes a CSV with the given header; values use shortest round-trip formatting.
pub fn write_csv<W: Write, R: AsRef<[f64]>>(
    mut w: W,
    header: &str,
    rows: impl IntoIterator<Item = R>,
) -> Result<()> {
    writeln!(w, "{header}")?;
    for r in rows {
        let line: Vec<String> = r.as_ref().iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_csv<R: AsRef<[f64]>>(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = R>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(&mut w, header, rows)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_powerlaw;

    #[test]
    fn spectral_round_trip_is_exact() {
        let f = random_powerlaw(5.0 / 3.0, 1.0, 0.4, 5, 11).unwrap();
        let mut buf = Vec::new();
        write_spectral(&mut buf, &f, &vec![("seed".into(), "11".into())]).unwrap();
        let (g, meta) = read_spectral(&buf[..]).unwrap();
        assert_eq!(f, g);
        assert_eq!(meta_value(&meta, "seed"), Some("11"));
    }

    #[test]
    fn malformed_snapshots_rejected() {
        let head = "#format=helical-v1\n";
        for body in [
            "1,0,0,1,0\n",
            "1,0,0,a,0,0,0\n",
            "-1,0,0,1,0,0,0\n",
            "1,0,0,1,0,0,0\n1,0,0,1,0,0,0\n",
            "0,0,0,1,0,0,0\n",
        ] {
            let text = format!("{head}{body}");
            assert!(
                matches!(read_spectral(text.as_bytes()), Err(Error::Format(_))),
                "{body}"
            );
        }
        assert!(matches!(
            read_spectral("1,0,0,1,0,0,0\n".as_bytes()),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read_spectral("#format=other\n".as_bytes()),
            Err(Error::Format(_))
        ));
    }
}
