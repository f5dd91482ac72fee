//! On-disk formats: one HDF5 file per acquisition, comma-separated text
//! matrices and a SHA-256 manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::SubDataset;

pub const DATASET_KEY: &str = "acc";
pub const MANIFEST_NAME: &str = "manifest.json";
pub const STAGING_DIR: &str = ".staging";

/// `accXXXXX-YZ.h5` with the global acquisition index.
pub fn file_name(index: usize, code: SubDataset) -> String {
    format!("acc{index:05}-{}.h5", code.suffix())
}

pub fn parse_file_name(name: &str) -> Option<(usize, SubDataset)> {
    let stem = name.strip_prefix("acc")?.strip_suffix(".h5")?;
    let (idx, suffix) = stem.split_once('-')?;
    if idx.len() != 5 || !idx.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((idx.parse().ok()?, SubDataset::from_suffix(suffix)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccFile {
    /// m/s²; missing samples are NaN.
    pub samples: Vec<f32>,
    /// Hz
    pub fs: f64,
    pub index: u64,
}

/// Writes one record as 32-bit floats. Object timestamps are disabled so
/// identical inputs give identical bytes.
pub fn write_acceleration(path: &Path, samples: &[f64], fs: f64, index: usize) -> Result<()> {
    let data: Vec<f32> = samples.iter().map(|&v| v as f32).collect();
    let file = hdf5::File::with_options()
        .with_fcpl(|p| p.obj_track_times(false))
        .create(path)?;
    let ds = file
        .new_dataset::<f32>()
        .obj_track_times(false)
        .shape([data.len()])
        .create(DATASET_KEY)?;
    ds.write(&data)?;
    ds.new_attr::<f64>().create("fs")?.write_scalar(&fs)?;
    ds.new_attr::<u64>().create("index")?.write_scalar(&(index as u64))?;
    file.close()?;
    Ok(())
}

pub fn read_acceleration(path: &Path) -> Result<AccFile> {
    let malformed = |reason: String| Error::Malformed {
        path: path.to_owned(),
        reason,
    };
    let file = hdf5::File::open(path).map_err(|e| malformed(e.to_string()))?;
    let ds = file.dataset(DATASET_KEY).map_err(|e| malformed(e.to_string()))?;
    let samples: Vec<f32> = ds.read_raw().map_err(|e| malformed(e.to_string()))?;
    let fs = ds.attr("fs").and_then(|a| a.read_scalar::<f64>()).map_err(|e| malformed(e.to_string()))?;
    let index = ds
        .attr("index")
        .and_then(|a| a.read_scalar::<u64>())
        .map_err(|e| malformed(e.to_string()))?;
    Ok(AccFile { samples, fs, index })
}

/// Writes through a staging file in `dir/.staging` and renames into place,
/// so a crash never leaves a truncated record under its final name.
pub fn write_acceleration_atomic(dir: &Path, name: &str, samples: &[f64], fs: f64, index: usize) -> Result<PathBuf> {
    let staging = dir.join(STAGING_DIR);
    fs::create_dir_all(&staging)?;
    let tmp = staging.join(name);
    write_acceleration(&tmp, samples, fs, index)?;
    let dest = dir.join(name);
    fs::rename(&tmp, &dest)?;
    Ok(dest)
}

/// Comma-separated matrix with a header row.
pub fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses column `name` as numbers.
    pub fn numeric(&self, name: &str, path: &Path) -> Result<Vec<f64>> {
        let c = self.column(name).ok_or_else(|| Error::Malformed {
            path: path.to_owned(),
            reason: format!("missing column {name}"),
        })?;
        self.rows
            .iter()
            .map(|r| {
                r[c].parse::<f64>().map_err(|e| Error::Malformed {
                    path: path.to_owned(),
                    reason: format!("column {name}: {e}"),
                })
            })
            .collect()
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, rows })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Relative path → SHA-256 of every artifact in an output directory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, String>,
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        let name = entry.file_name();
        if name == STAGING_DIR || (dir == root && name == MANIFEST_NAME) {
            continue;
        }
        if entry.file_type()?.is_dir() {
            walk(root, &path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

impl Manifest {
    pub fn build(root: &Path) -> Result<Self> {
        let mut paths = Vec::new();
        walk(root, root, &mut paths)?;
        let files = paths
            .iter()
            .map(|p| Ok((relative(root, p), sha256_file(p)?)))
            .collect::<Result<_>>()?;
        Ok(Self { files })
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        fs::write(root.join(MANIFEST_NAME), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(root: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(root.join(MANIFEST_NAME))?)?)
    }

    /// Every listed file exists with a matching checksum.
    pub fn verify(&self, root: &Path) -> Result<()> {
        for (rel, sum) in &self.files {
            let path = root.join(rel);
            if !path.exists() {
                return Err(Error::Malformed {
                    path,
                    reason: "listed in manifest but missing".into(),
                });
            }
            if &sha256_file(&path)? != sum {
                return Err(Error::ChecksumMismatch(path));
            }
        }
        Ok(())
    }
}
