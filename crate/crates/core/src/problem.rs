//! Problem instances: seeded generation, JSON problem files, CSV export.
//!
//! A problem file is one JSON object:
//!
//! ```json
//! { "format": "nonuniform-ot-problem", "version": 1, "dim": 1,
//!   "x1": [...], "x2": [...], "u": [...], "v": [...] }
//! ```
//!
//! In 2D the object also carries `y1` and `y2`, and `u`, `v` are nested
//! arrays with `u[k][i]` the mass at `(x1[k], y1[i])`. Floats are written in
//! shortest round-trip form, so loading a saved file reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::mesh::{
    chebyshev_nodes, derive_seed, random_measure, random_measure_2d, random_sorted_nodes, Grid2D, Measure,
    Measure2D, Mesh1D,
};

pub const FORMAT_TAG: &str = "nonuniform-ot-problem";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Problem1D {
    pub x: Mesh1D,
    pub y: Mesh1D,
    pub u: Measure,
    pub v: Measure,
}

/// Source and target grids share the shape `(N, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem2D {
    pub source: Grid2D,
    pub target: Grid2D,
    pub u: Measure2D,
    pub v: Measure2D,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    OneD(Problem1D),
    TwoD(Problem2D),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Chebyshev,
    Random,
}

/// What to generate. In 1D, `n` source and `m` target nodes; in 2D, both
/// grids are `n × m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub dim: u8,
    pub n: usize,
    pub m: usize,
    pub nodes: NodeKind,
    pub seed: u64,
}

impl GenSpec {
    pub fn one_d(nodes: NodeKind, n: usize, seed: u64) -> Self {
        Self { dim: 1, n, m: n, nodes, seed }
    }

    pub fn two_d(n: usize, m: usize, seed: u64) -> Self {
        Self { dim: 2, n, m, nodes: NodeKind::Random, seed }
    }
}

fn make_nodes(kind: NodeKind, n: usize, seed: u64) -> Result<Mesh1D> {
    match kind {
        NodeKind::Chebyshev => chebyshev_nodes(n),
        NodeKind::Random => random_sorted_nodes(n, seed),
    }
}

fn check_size(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig(format!("{what} must be at least 1")));
    }
    Ok(())
}

/// Builds the instance for `spec`. Node lists use seed streams 0..4 and
/// weights streams 4 and 5 of [`derive_seed`].
pub fn generate(spec: &GenSpec) -> Result<Problem> {
    check_size(spec.n, "n")?;
    check_size(spec.m, "m")?;
    let s = |stream| derive_seed(spec.seed, stream);
    match spec.dim {
        1 => Ok(Problem::OneD(Problem1D {
            x: make_nodes(spec.nodes, spec.n, s(0))?,
            y: make_nodes(spec.nodes, spec.m, s(1))?,
            u: random_measure(spec.n, s(4))?,
            v: random_measure(spec.m, s(5))?,
        })),
        2 => Ok(Problem::TwoD(Problem2D {
            source: Grid2D::new(make_nodes(spec.nodes, spec.n, s(0))?, make_nodes(spec.nodes, spec.m, s(2))?),
            target: Grid2D::new(make_nodes(spec.nodes, spec.n, s(1))?, make_nodes(spec.nodes, spec.m, s(3))?),
            u: random_measure_2d(spec.n, spec.m, s(4))?,
            v: random_measure_2d(spec.n, spec.m, s(5))?,
        })),
        d => Err(Error::InvalidConfig(format!("dim must be 1 or 2, got {d}"))),
    }
}

/// Keeps the node lists of `problem` and draws fresh weights from `seed`.
pub fn reweight(problem: &Problem, seed: u64) -> Result<Problem> {
    let s = |stream| derive_seed(seed, stream);
    Ok(match problem {
        Problem::OneD(p) => Problem::OneD(Problem1D {
            u: random_measure(p.x.len(), s(4))?,
            v: random_measure(p.y.len(), s(5))?,
            ..p.clone()
        }),
        Problem::TwoD(p) => {
            let (n, m) = p.source.shape();
            Problem::TwoD(Problem2D {
                u: random_measure_2d(n, m, s(4))?,
                v: random_measure_2d(n, m, s(5))?,
                ..p.clone()
            })
        }
    })
}

impl Problem {
    pub fn dim(&self) -> u8 {
        match self {
            Problem::OneD(_) => 1,
            Problem::TwoD(_) => 2,
        }
    }

    /// `(N, M)`: node counts in 1D, grid shape in 2D.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Problem::OneD(p) => (p.x.len(), p.y.len()),
            Problem::TwoD(p) => p.source.shape(),
        }
    }

    /// Number of support points on the source side.
    pub fn size(&self) -> usize {
        let (n, m) = self.shape();
        match self {
            Problem::OneD(_) => n,
            Problem::TwoD(_) => n * m,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&ProblemFile::from(self)).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_problem()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// Node and weight columns, one support point per line:
    /// `side,index,x,weight` in 1D and `side,k,i,x,y,weight` in 2D, with
    /// `side` either `source` or `target`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Problem::OneD(p) => {
                out.push_str("side,index,x,weight\n");
                for (side, mesh, w) in [("source", &p.x, &p.u), ("target", &p.y, &p.v)] {
                    for (i, (x, m)) in mesh.nodes().iter().zip(w.weights()).enumerate() {
                        let _ = writeln!(out, "{side},{i},{x:?},{m:?}");
                    }
                }
            }
            Problem::TwoD(p) => {
                out.push_str("side,k,i,x,y,weight\n");
                for (side, grid, w) in [("source", &p.source, &p.u), ("target", &p.target, &p.v)] {
                    let (n, m) = grid.shape();
                    for i in 0..m {
                        for k in 0..n {
                            let (x, y) = (grid.x().nodes()[k], grid.y().nodes()[i]);
                            let _ = writeln!(out, "{side},{k},{i},{x:?},{y:?},{:?}", w.weights()[[k, i]]);
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<Problem> {
    Problem::from_json(&fs::read_to_string(path)?)
}

pub fn save_problem(problem: &Problem, path: impl AsRef<Path>) -> Result<()> {
    problem.save(path)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Weights {
    Flat(Vec<f64>),
    Grid(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    format: String,
    version: u32,
    dim: u8,
    x1: Vec<f64>,
    x2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y2: Option<Vec<f64>>,
    u: Weights,
    v: Weights,
}

fn grid_rows(w: &Measure2D) -> Weights {
    Weights::Grid(w.weights().rows().into_iter().map(|r| r.to_vec()).collect())
}

impl From<&Problem> for ProblemFile {
    fn from(p: &Problem) -> Self {
        match p {
            Problem::OneD(p) => ProblemFile {
                format: FORMAT_TAG.into(),
                version: FORMAT_VERSION,
                dim: 1,
                x1: p.x.nodes().to_vec(),
                x2: p.y.nodes().to_vec(),
                y1: None,
                y2: None,
                u: Weights::Flat(p.u.weights().to_vec()),
                v: Weights::Flat(p.v.weights().to_vec()),
            },
            Problem::TwoD(p) => ProblemFile {
                format: FORMAT_TAG.into(),
                version: FORMAT_VERSION,
                dim: 2,
                x1: p.source.x().nodes().to_vec(),
                x2: p.target.x().nodes().to_vec(),
                y1: Some(p.source.y().nodes().to_vec()),
                y2: Some(p.target.y().nodes().to_vec()),
                u: grid_rows(&p.u),
                v: grid_rows(&p.v),
            },
        }
    }
}

fn flat(w: Weights, name: &str) -> Result<Vec<f64>> {
    match w {
        Weights::Flat(v) => Ok(v),
        Weights::Grid(_) => Err(Error::Parse(format!("`{name}` must be a flat list in 1D"))),
    }
}

fn grid(w: Weights, n: usize, m: usize, name: &str) -> Result<Measure2D> {
    let rows = match w {
        Weights::Grid(rows) => rows,
        Weights::Flat(_) => return Err(Error::Parse(format!("`{name}` must be a nested list in 2D"))),
    };
    check_len(n, rows.len())?;
    let mut a = Array2::zeros((n, m));
    for (k, row) in rows.iter().enumerate() {
        check_len(m, row.len())?;
        for (i, &w) in row.iter().enumerate() {
            a[[k, i]] = w;
        }
    }
    Measure2D::new(a)
}

impl ProblemFile {
    fn into_problem(self) -> Result<Problem> {
        if self.format != FORMAT_TAG {
            return Err(Error::Parse(format!("unknown format tag `{}`", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported version {}", self.version)));
        }
        match self.dim {
            1 => {
                if self.y1.is_some() || self.y2.is_some() {
                    return Err(Error::Parse("`y1`/`y2` are only valid in 2D".into()));
                }
                let x = Mesh1D::new(self.x1)?;
                let y = Mesh1D::new(self.x2)?;
                let u = flat(self.u, "u")?;
                let v = flat(self.v, "v")?;
                check_len(x.len(), u.len())?;
                check_len(y.len(), v.len())?;
                Ok(Problem::OneD(Problem1D { x, y, u: Measure::new(u)?, v: Measure::new(v)? }))
            }
            2 => {
                let (Some(y1), Some(y2)) = (self.y1, self.y2) else {
                    return Err(Error::Parse("2D problems need `y1` and `y2`".into()));
                };
                let source = Grid2D::new(Mesh1D::new(self.x1)?, Mesh1D::new(y1)?);
                let target = Grid2D::new(Mesh1D::new(self.x2)?, Mesh1D::new(y2)?);
                let (n, m) = source.shape();
                let (tn, tm) = target.shape();
                check_len(n, tn)?;
                check_len(m, tm)?;
                let u = grid(self.u, n, m, "u")?;
                let v = grid(self.v, n, m, "v")?;
                Ok(Problem::TwoD(Problem2D { source, target, u, v }))
            }
            d => Err(Error::Parse(format!("dim must be 1 or 2, got {d}"))),
        }
    }
}
