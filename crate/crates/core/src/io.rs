//! JSON file formats for instances, solutions and point sets.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! written file re-reads to bit-identical values.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assignment::Perm;
use crate::error::{dim_err, invalid, Error, Result};
use crate::matrix::DenseMatrix;
use crate::model::{PointSets, SimilarityTensor, Solution};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub i: usize,
    pub j: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    pub blocks: Vec<BlockEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    pub perms: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub sets: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<i64>>>,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(invalid!(
            "unsupported format_version {v}, expected {FORMAT_VERSION}"
        ));
    }
    Ok(())
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("file types always serialize");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn perms_to_rows(s: &Solution) -> Vec<Vec<usize>> {
    s.perms().iter().map(|p| p.as_slice().to_vec()).collect()
}

fn rows_to_solution(rows: Vec<Vec<usize>>, n: usize, m: usize) -> Result<Solution> {
    if rows.len() != n {
        return Err(dim_err!("{} permutations listed, expected {n}", rows.len()));
    }
    let perms = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != m {
                return Err(dim_err!(
                    "permutation {i} has length {}, expected {m}",
                    r.len()
                ));
            }
            Perm::new(r).map_err(|e| invalid!("permutation {i}: {e}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Solution::new(perms)
}

impl InstanceFile {
    pub fn from_tensor(t: &SimilarityTensor, truth: Option<&Solution>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            n: t.n(),
            m: t.m(),
            blocks: t
                .upper_blocks()
                .map(|((i, j), b)| BlockEntry {
                    i,
                    j,
                    rows: b.to_rows(),
                })
                .collect(),
            truth: truth.map(perms_to_rows),
        }
    }

    /// Validated tensor and optional embedded truth. With `strict_range`,
    /// entries outside [0, 1] are rejected.
    pub fn into_parts(self, strict_range: bool) -> Result<(SimilarityTensor, Option<Solution>)> {
        check_version(self.format_version)?;
        let (n, m) = (self.n, self.m);
        if n == 0 || m == 0 {
            return Err(invalid!("instance needs n >= 1 and m >= 1"));
        }
        let expected = n * (n - 1) / 2;
        if self.blocks.len() != expected {
            return Err(invalid!(
                "{} blocks present, expected {expected}",
                self.blocks.len()
            ));
        }
        let mut slots: Vec<Option<DenseMatrix>> = vec![None; expected];
        let mut seen = HashSet::new();
        for b in self.blocks {
            if b.i >= b.j || b.j >= n {
                return Err(invalid!(
                    "block ({}, {}) is not a pair i < j < {n}",
                    b.i,
                    b.j
                ));
            }
            if !seen.insert((b.i, b.j)) {
                return Err(invalid!("block ({}, {}) listed twice", b.i, b.j));
            }
            if b.rows.len() != m || b.rows.iter().any(|r| r.len() != m) {
                return Err(dim_err!("block ({}, {}) is not {m}x{m}", b.i, b.j));
            }
            let mat = DenseMatrix::from_rows(&b.rows)?;
            slots[crate::model::pair_index(n, b.i, b.j)] = Some(mat);
        }
        let blocks = slots
            .into_iter()
            .map(|b| b.expect("every pair was seen exactly once"))
            .collect();
        let t = SimilarityTensor::new(n, m, blocks)?;
        if strict_range {
            t.validate_unit_range()?;
        }
        let truth = self.truth.map(|r| rows_to_solution(r, n, m)).transpose()?;
        Ok((t, truth))
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse(text, "instance file")
    }
}

impl SolutionFile {
    pub fn from_solution(s: &Solution) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            n: s.n(),
            m: s.m(),
            perms: perms_to_rows(s),
        }
    }

    pub fn into_solution(self) -> Result<Solution> {
        check_version(self.format_version)?;
        rows_to_solution(self.perms, self.n, self.m)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse(text, "solution file")
    }
}

impl PointsFile {
    pub fn from_points(ps: &PointSets, labels: Option<Vec<Vec<i64>>>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            n: ps.n(),
            m: ps.m(),
            d: ps.d(),
            sets: ps.sets().to_vec(),
            labels,
        }
    }

    /// Point sets plus the truth implied by labels, if present. Slot s of set
    /// i holds the element carrying the s-th smallest label.
    pub fn into_parts(self) -> Result<(PointSets, Option<Solution>)> {
        check_version(self.format_version)?;
        let (n, m, d) = (self.n, self.m, self.d);
        if self.sets.len() != n {
            return Err(dim_err!(
                "{} sets listed, expected n = {n}",
                self.sets.len()
            ));
        }
        for (i, set) in self.sets.iter().enumerate() {
            if set.len() != m {
                return Err(dim_err!(
                    "set {i} has {} points, expected m = {m}",
                    set.len()
                ));
            }
            if let Some(p) = set.iter().position(|pt| pt.len() != d) {
                return Err(dim_err!(
                    "point {p} of set {i} does not have d = {d} coordinates"
                ));
            }
        }
        let ps = PointSets::new(self.sets)?;
        let truth = self.labels.map(|l| labels_to_truth(&l, n, m)).transpose()?;
        Ok((ps, truth))
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse(text, "points file")
    }
}

fn labels_to_truth(labels: &[Vec<i64>], n: usize, m: usize) -> Result<Solution> {
    if labels.len() != n || labels.iter().any(|r| r.len() != m) {
        return Err(dim_err!("labels must be an {n}x{m} array"));
    }
    let mut classes = labels[0].clone();
    classes.sort_unstable();
    if classes.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid!("labels of set 0 repeat a class"));
    }
    let perms = labels
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut sorted = row.clone();
            sorted.sort_unstable();
            if sorted != classes {
                return Err(invalid!(
                    "labels of set {i} are not the same classes as set 0"
                ));
            }
            let map = classes
                .iter()
                .map(|c| row.iter().position(|x| x == c).expect("class is present"))
                .collect();
            Perm::new(map)
        })
        .collect::<Result<Vec<_>>>()?;
    Solution::new(perms)
}

pub fn read_instance(
    path: &Path,
    strict_range: bool,
) -> Result<(SimilarityTensor, Option<Solution>)> {
    InstanceFile::parse(&read_text(path)?)?.into_parts(strict_range)
}

pub fn write_instance(path: &Path, t: &SimilarityTensor, truth: Option<&Solution>) -> Result<()> {
    write_text(path, &InstanceFile::from_tensor(t, truth).to_json())
}

pub fn read_solution(path: &Path) -> Result<Solution> {
    SolutionFile::parse(&read_text(path)?)?.into_solution()
}

pub fn write_solution(path: &Path, s: &Solution) -> Result<()> {
    write_text(path, &SolutionFile::from_solution(s).to_json())
}

pub fn read_points(path: &Path) -> Result<(PointSets, Option<Solution>)> {
    PointsFile::parse(&read_text(path)?)?.into_parts()
}

/// Serializes records with a header row.
pub fn csv_string<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}
