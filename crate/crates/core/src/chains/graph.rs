use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Neighbourhood on the k-space lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connectivity::Four => "4",
            Connectivity::Eight => "8",
        })
    }
}

impl FromStr for Connectivity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "4" | "four" => Ok(Connectivity::Four),
            "8" | "eight" => Ok(Connectivity::Eight),
            other => Err(Error::Parse(format!("connectivity `{other}` is not 4 or 8"))),
        }
    }
}

/// Undirected adjacency over k-space sites.
///
/// Sites are raw k-space indices (DC at 0). Adjacency is measured on the
/// physical frequency lattice: index `k` sits at centred coordinate
/// `(k + len/2) mod len` on each axis, and two sites are adjacent when those
/// coordinates differ by one step. Frequencies `-1` and `0` are therefore
/// neighbours, while the Nyquist edge does not wrap.
#[derive(Clone, Debug)]
pub struct GridGraph {
    rows: usize,
    cols: usize,
    connectivity: Option<Connectivity>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl GridGraph {
    pub fn new(rows: usize, cols: usize, connectivity: Connectivity) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("empty grid".into()));
        }
        let steps: &[(isize, isize)] = match connectivity {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
        };
        let mut g = Self {
            rows,
            cols,
            connectivity: Some(connectivity),
            offsets: Vec::with_capacity(rows * cols + 1),
            targets: Vec::with_capacity(rows * cols * steps.len()),
        };
        g.offsets.push(0);
        for site in 0..rows * cols {
            for &d in steps {
                if let Some(t) = g.step(site, d) {
                    g.targets.push(t);
                }
            }
            g.offsets.push(g.targets.len());
        }
        Ok(g)
    }

    /// Arbitrary undirected graph from neighbour lists; must be symmetric.
    pub fn from_adjacency(lists: Vec<Vec<usize>>) -> Result<Self> {
        let n = lists.len();
        if n == 0 {
            return Err(Error::Dimension("empty graph".into()));
        }
        for (i, l) in lists.iter().enumerate() {
            for &j in l {
                if j >= n || j == i {
                    return Err(Error::Validation(format!("bad edge {i} -> {j}")));
                }
                if !lists[j].contains(&i) {
                    return Err(Error::Validation(format!("edge {i} -> {j} has no reverse")));
                }
            }
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        for l in lists {
            targets.extend(l);
            offsets.push(targets.len());
        }
        Ok(Self {
            rows: 1,
            cols: n,
            connectivity: None,
            offsets,
            targets,
        })
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `None` for graphs built from explicit adjacency.
    pub fn connectivity(&self) -> Option<Connectivity> {
        self.connectivity
    }

    #[inline]
    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.targets[self.offsets[site]..self.offsets[site + 1]]
    }

    /// Position of the first edge of `site` in the flattened edge list.
    #[inline]
    pub(crate) fn edge_offset(&self, site: usize) -> usize {
        self.offsets[site]
    }

    #[inline]
    pub fn degree(&self, site: usize) -> usize {
        self.offsets[site + 1] - self.offsets[site]
    }

    /// Centred lattice coordinate of a site.
    #[inline]
    pub fn position(&self, site: usize) -> (isize, isize) {
        let (r, c) = (site / self.cols, site % self.cols);
        (
            ((r + self.rows / 2) % self.rows) as isize,
            ((c + self.cols / 2) % self.cols) as isize,
        )
    }

    fn site_at(&self, pos: (isize, isize)) -> Option<usize> {
        let (pr, pc) = pos;
        if pr < 0 || pc < 0 || pr >= self.rows as isize || pc >= self.cols as isize {
            return None;
        }
        let r = (pr as usize + self.rows - self.rows / 2) % self.rows;
        let c = (pc as usize + self.cols - self.cols / 2) % self.cols;
        Some(r * self.cols + c)
    }

    /// Site reached by moving `delta` in centred coordinates, if on the grid.
    #[inline]
    pub fn step(&self, site: usize, delta: (isize, isize)) -> Option<usize> {
        if delta == (0, 0) {
            return None;
        }
        let (r, c) = self.position(site);
        self.site_at((r + delta.0, c + delta.1))
    }

    /// Displacement from `from` to `to` in centred coordinates.
    #[inline]
    pub fn displacement(&self, from: usize, to: usize) -> (isize, isize) {
        let (a, b) = (self.position(from), self.position(to));
        (b.0 - a.0, b.1 - a.1)
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).contains(&b)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == n
    }
}
