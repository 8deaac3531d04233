//! CSS code model: validation, the alist interchange format, generalized
//! bicycle construction, and structural reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{self, SparseBitMatrix};

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("column count mismatch: hx has {hx} columns, hz has {hz}")]
    ColumnMismatch { hx: usize, hz: usize },
    #[error("hx row {x_row} and hz row {z_row} overlap on an odd number of qubits")]
    NotOrthogonal { x_row: usize, z_row: usize },
    #[error("invalid circulant spec: {0}")]
    InvalidCirculant(String),
    #[error("alist: {0}")]
    Alist(#[from] AlistError),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlistError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unexpected end of input while reading {0}")]
    Truncated(&'static str),
    #[error("invalid token {0:?}")]
    Token(String),
    #[error("{section} index {index} out of range (1..={bound})")]
    IndexOutOfRange {
        section: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("duplicate index {index} in {section} list {list}")]
    Duplicate {
        section: &'static str,
        list: usize,
        index: usize,
    },
    #[error("column and row sections disagree")]
    Inconsistent,
}

/// A CSS code given by `hx` (X-checks) and `hz` (Z-checks) with `hx·hzᵀ = 0`.
#[derive(Debug, Clone)]
pub struct CssCode {
    pub name: String,
    hx: SparseBitMatrix,
    hz: SparseBitMatrix,
    rank_hx: usize,
    rank_hz: usize,
}

impl CssCode {
    pub fn new(name: impl Into<String>, hx: SparseBitMatrix, hz: SparseBitMatrix) -> Result<Self, CodeError> {
        if hx.cols() != hz.cols() {
            return Err(CodeError::ColumnMismatch {
                hx: hx.cols(),
                hz: hz.cols(),
            });
        }
        let product = hx.mul_transpose(&hz).expect("column counts checked");
        if let Some((x_row, row)) = product.row_supports().iter().enumerate().find(|(_, r)| !r.is_empty()) {
            return Err(CodeError::NotOrthogonal { x_row, z_row: row[0] });
        }
        let rank_hx = gf2::rank(&hx);
        let rank_hz = gf2::rank(&hz);
        Ok(CssCode {
            name: name.into(),
            hx,
            hz,
            rank_hx,
            rank_hz,
        })
    }

    pub fn hx(&self) -> &SparseBitMatrix {
        &self.hx
    }

    pub fn hz(&self) -> &SparseBitMatrix {
        &self.hz
    }

    /// Number of physical qubits.
    pub fn n(&self) -> usize {
        self.hx.cols()
    }

    /// Number of logical qubits, `n - rank(hx) - rank(hz)`.
    pub fn k(&self) -> usize {
        self.n() - self.rank_hx - self.rank_hz
    }

    pub fn m_x(&self) -> usize {
        self.hx.rows()
    }

    pub fn m_z(&self) -> usize {
        self.hz.rows()
    }

    pub fn rank_hx(&self) -> usize {
        self.rank_hx
    }

    pub fn rank_hz(&self) -> usize {
        self.rank_hz
    }
}

pub fn new_css(hx: SparseBitMatrix, hz: SparseBitMatrix) -> Result<CssCode, CodeError> {
    CssCode::new("", hx, hz)
}

/// Supports of two circulant blocks of size `size`. Entry `(i, j)` of the
/// circulant generated by `support` is 1 iff `(j - i) mod size ∈ support`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CirculantSpec {
    pub size: usize,
    pub a_support: Vec<usize>,
    pub b_support: Vec<usize>,
}

impl CirculantSpec {
    pub fn validate(&self) -> Result<(), CodeError> {
        if self.size == 0 {
            return Err(CodeError::InvalidCirculant("size must be positive".into()));
        }
        for (label, support) in [("a", &self.a_support), ("b", &self.b_support)] {
            if support.is_empty() {
                return Err(CodeError::InvalidCirculant(format!("{label}_support is empty")));
            }
            if let Some(&bad) = support.iter().find(|&&s| s >= self.size) {
                return Err(CodeError::InvalidCirculant(format!(
                    "{label}_support offset {bad} not below size {}",
                    self.size
                )));
            }
            let mut sorted = support.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != support.len() {
                return Err(CodeError::InvalidCirculant(format!("{label}_support has repeated offsets")));
            }
        }
        Ok(())
    }
}

pub fn circulant(size: usize, support: &[usize]) -> SparseBitMatrix {
    let rows = (0..size)
        .map(|i| support.iter().map(|&s| (i + s) % size).collect())
        .collect();
    SparseBitMatrix::new(size, size, rows).expect("circulant offsets validated")
}

/// Generalized bicycle code `hx = [A, B]`, `hz = [Bᵀ, Aᵀ]`.
pub fn gb_construct(spec: &CirculantSpec) -> Result<CssCode, CodeError> {
    spec.validate()?;
    let a = circulant(spec.size, &spec.a_support);
    let b = circulant(spec.size, &spec.b_support);
    let hx = a.hstack(&b).expect("same block size");
    let hz = b.transpose().hstack(&a.transpose()).expect("same block size");
    let mut code = CssCode::new("", hx, hz)?;
    code.name = format!("GB[[{},{}]]", code.n(), code.k());
    Ok(code)
}

fn next_number<'a>(tokens: &mut impl Iterator<Item = &'a str>, what: &'static str) -> Result<usize, AlistError> {
    let tok = tokens.next().ok_or(AlistError::Truncated(what))?;
    tok.parse().map_err(|_| AlistError::Token(tok.to_string()))
}

/// Reads one adjacency list of `degree` entries, skipping zero padding.
fn read_list<'a>(
    tokens: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>,
    degree: usize,
    bound: usize,
    section: &'static str,
    list: usize,
) -> Result<Vec<usize>, AlistError> {
    let mut out = Vec::with_capacity(degree);
    while out.len() < degree {
        let idx = next_number(tokens, section)?;
        if idx == 0 {
            continue;
        }
        if idx > bound {
            return Err(AlistError::IndexOutOfRange {
                section,
                index: idx,
                bound,
            });
        }
        out.push(idx - 1);
    }
    out.sort_unstable();
    if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
        return Err(AlistError::Duplicate {
            section,
            list,
            index: w[0] + 1,
        });
    }
    Ok(out)
}

/// Parses a MacKay alist matrix. Zero entries used as padding are ignored.
pub fn load_alist(text: &str) -> Result<SparseBitMatrix, AlistError> {
    let mut tokens = text.split_whitespace().peekable();
    let header = |e: AlistError| match e {
        AlistError::Truncated(_) | AlistError::Token(_) => AlistError::Header(e.to_string()),
        other => other,
    };
    let cols = next_number(&mut tokens, "header").map_err(header)?;
    let rows = next_number(&mut tokens, "header").map_err(header)?;
    let _max_col = next_number(&mut tokens, "header").map_err(header)?;
    let _max_row = next_number(&mut tokens, "header").map_err(header)?;
    let col_deg = (0..cols)
        .map(|_| next_number(&mut tokens, "column degrees").map_err(header))
        .collect::<Result<Vec<_>, _>>()?;
    let row_deg = (0..rows)
        .map(|_| next_number(&mut tokens, "row degrees").map_err(header))
        .collect::<Result<Vec<_>, _>>()?;
    if col_deg.iter().sum::<usize>() != row_deg.iter().sum::<usize>() {
        return Err(AlistError::Header("column and row degree totals differ".into()));
    }
    if let Some(&d) = col_deg.iter().find(|&&d| d > rows) {
        return Err(AlistError::Header(format!("column degree {d} exceeds {rows} rows")));
    }
    if let Some(&d) = row_deg.iter().find(|&&d| d > cols) {
        return Err(AlistError::Header(format!("row degree {d} exceeds {cols} columns")));
    }

    let col_lists = col_deg
        .iter()
        .enumerate()
        .map(|(c, &d)| read_list(&mut tokens, d, rows, "column", c + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let row_lists = row_deg
        .iter()
        .enumerate()
        .map(|(r, &d)| read_list(&mut tokens, d, cols, "row", r + 1))
        .collect::<Result<Vec<_>, _>>()?;
    for tok in tokens {
        if tok != "0" {
            return Err(AlistError::Token(tok.to_string()));
        }
    }

    let m = SparseBitMatrix::new(rows, cols, row_lists).map_err(|_| AlistError::Inconsistent)?;
    if m.col_supports() != col_lists.as_slice() {
        return Err(AlistError::Inconsistent);
    }
    Ok(m)
}

/// Writes canonical alist: 1-based indices, ascending, no zero padding.
pub fn write_alist(m: &SparseBitMatrix) -> String {
    let col_w = m.col_weights();
    let row_w = m.row_weights();
    let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    writeln!(out, "{} {}", m.cols(), m.rows()).unwrap();
    writeln!(
        out,
        "{} {}",
        col_w.iter().max().copied().unwrap_or(0),
        row_w.iter().max().copied().unwrap_or(0)
    )
    .unwrap();
    writeln!(out, "{}", join(&mut col_w.iter().copied())).unwrap();
    writeln!(out, "{}", join(&mut row_w.iter().copied())).unwrap();
    for col in m.col_supports() {
        writeln!(out, "{}", join(&mut col.iter().map(|r| r + 1))).unwrap();
    }
    for row in m.row_supports() {
        writeln!(out, "{}", join(&mut row.iter().map(|c| c + 1))).unwrap();
    }
    out
}

pub fn read_alist_file(path: &Path) -> Result<SparseBitMatrix, CodeError> {
    let text = fs::read_to_string(path).map_err(|source| CodeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(load_alist(&text)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatrixStats {
    pub rows: usize,
    pub cols: usize,
    /// weight -> number of rows with that weight
    pub row_weights: BTreeMap<usize, usize>,
    pub col_weights: BTreeMap<usize, usize>,
    pub has_4_cycles: bool,
}

impl MatrixStats {
    pub fn of(m: &SparseBitMatrix) -> Self {
        let histogram = |ws: Vec<usize>| {
            let mut h = BTreeMap::new();
            for w in ws {
                *h.entry(w).or_insert(0) += 1;
            }
            h
        };
        MatrixStats {
            rows: m.rows(),
            cols: m.cols(),
            row_weights: histogram(m.row_weights()),
            col_weights: histogram(m.col_weights()),
            has_4_cycles: has_4_cycles(m),
        }
    }
}

/// True iff two rows share at least two columns.
pub fn has_4_cycles(m: &SparseBitMatrix) -> bool {
    let mut shared = vec![0u32; m.rows()];
    let mut touched = Vec::new();
    for r in 0..m.rows() {
        for &c in m.row(r) {
            for &r2 in m.col(c) {
                if r2 > r {
                    if shared[r2] == 0 {
                        touched.push(r2);
                    }
                    shared[r2] += 1;
                    if shared[r2] >= 2 {
                        return true;
                    }
                }
            }
        }
        for &r2 in &touched {
            shared[r2] = 0;
        }
        touched.clear();
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeReport {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub m_x: usize,
    pub m_z: usize,
    pub rank_hx: usize,
    pub rank_hz: usize,
    pub hx: MatrixStats,
    pub hz: MatrixStats,
}

pub fn code_report(code: &CssCode) -> CodeReport {
    CodeReport {
        name: code.name.clone(),
        n: code.n(),
        k: code.k(),
        m_x: code.m_x(),
        m_z: code.m_z(),
        rank_hx: code.rank_hx(),
        rank_hz: code.rank_hz(),
        hx: MatrixStats::of(code.hx()),
        hz: MatrixStats::of(code.hz()),
    }
}

/// One code entry of a manifest file. Matrix paths are resolved relative to
/// the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestEntry {
    Files {
        name: String,
        hx_path: PathBuf,
        hz_path: PathBuf,
    },
    Gb {
        name: String,
        gb: CirculantSpec,
    },
}

impl ManifestEntry {
    pub fn name(&self) -> &str {
        match self {
            ManifestEntry::Files { name, .. } | ManifestEntry::Gb { name, .. } => name,
        }
    }

    pub fn load(&self, base_dir: &Path) -> Result<CssCode, CodeError> {
        let mut code = match self {
            ManifestEntry::Files { hx_path, hz_path, .. } => {
                let hx = read_alist_file(&base_dir.join(hx_path))?;
                let hz = read_alist_file(&base_dir.join(hz_path))?;
                CssCode::new("", hx, hz)?
            }
            ManifestEntry::Gb { gb, .. } => gb_construct(gb)?,
        };
        code.name = self.name().to_string();
        Ok(code)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestFile {
    One(ManifestEntry),
    Many(Vec<ManifestEntry>),
}

/// Reads a manifest holding one entry or an array of entries.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CodeError> {
    let text = fs::read_to_string(path).map_err(|source| CodeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parsed: ManifestFile =
        serde_json::from_str(&text).map_err(|e| CodeError::Manifest(format!("{}: {e}", path.display())))?;
    Ok(match parsed {
        ManifestFile::One(e) => vec![e],
        ManifestFile::Many(v) => v,
    })
}

/// Loads a code from `path` or `path#name`. Without a name the manifest must
/// contain exactly one entry.
pub fn load_code_ref(reference: &str) -> Result<CssCode, CodeError> {
    let (path, name) = match reference.rsplit_once('#') {
        Some((p, n)) => (Path::new(p), Some(n)),
        None => (Path::new(reference), None),
    };
    let entries = read_manifest(path)?;
    let entry = match name {
        Some(n) => entries
            .iter()
            .find(|e| e.name() == n)
            .ok_or_else(|| CodeError::Manifest(format!("no entry named {n:?} in {}", path.display())))?,
        None if entries.len() == 1 => &entries[0],
        None => {
            return Err(CodeError::Manifest(format!(
                "{} has {} entries; select one with #name",
                path.display(),
                entries.len()
            )))
        }
    };
    entry.load(path.parent().unwrap_or(Path::new(".")))
}
