//! Offline table of optimal `(K*, T*)` over a `(σ, ε)` grid.
//!
//! Rows are indexed by `σ`, columns by `log10(1/ε)`. Off-grid queries use
//! bilinear interpolation in those coordinates; the interpolated order is
//! rounded up and the period to the nearest integer. Coefficients are never
//! stored: callers re-fit them at the returned `(K, T)`.
//!
//! Text format (whitespace separated, LF line endings):
//!
//! ```text
//! R 255
//! sigma 15 30 50 70
//! logeps 1 2 3 4 5
//! K <one line per sigma, one integer per logeps>
//! T <same layout>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::approx::{default_k_max, optimize_parameters};
use crate::kernels::{sample_range_kernel, RangeKernelSpec};
use crate::{Error, Result};

/// Interpolation weights this close to 0 or 1 snap to the grid node.
const NODE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    range: u32,
    sigmas: Vec<f64>,
    logeps: Vec<f64>,
    /// `k[i][j]` for `sigmas[i]`, `logeps[j]`.
    k: Vec<Vec<u32>>,
    t: Vec<Vec<u32>>,
}

/// A grid cell where the `K*` or `T*` trend departs from the expected
/// direction (`K*` nonincreasing and `T*` nondecreasing in `σ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendViolation {
    pub sigma_index: usize,
    pub logeps_index: usize,
    pub quantity: char,
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::validation(format!("{name} grid needs at least 2 entries")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(format!("{name} grid has non-finite entries")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation(format!("{name} grid must be strictly ascending")));
    }
    Ok(())
}

/// `log10(1/ε)`.
pub fn log_inverse_eps(eps: f64) -> f64 {
    -eps.log10()
}

impl LookupTable {
    pub fn new(range: u32, sigmas: Vec<f64>, logeps: Vec<f64>, k: Vec<Vec<u32>>, t: Vec<Vec<u32>>) -> Result<Self> {
        if range == 0 {
            return Err(Error::validation("R must be positive"));
        }
        check_grid("sigma", &sigmas)?;
        check_grid("log10(1/eps)", &logeps)?;
        for (name, table) in [("K", &k), ("T", &t)] {
            if table.len() != sigmas.len() || table.iter().any(|row| row.len() != logeps.len()) {
                return Err(Error::validation(format!(
                    "{name} table shape does not match the {}x{} grid",
                    sigmas.len(),
                    logeps.len()
                )));
            }
            if table.iter().flatten().any(|&v| v == 0) {
                return Err(Error::validation(format!("{name} table entries must be positive")));
            }
        }
        Ok(Self {
            range,
            sigmas,
            logeps,
            k,
            t,
        })
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn logeps(&self) -> &[f64] {
        &self.logeps
    }

    /// Stored `(K*, T*)` at node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (u32, u32) {
        (self.k[i][j], self.t[i][j])
    }

    /// Interpolated `(K, T)` for a Gaussian range kernel with parameters
    /// `(σ, ε)`. Queries outside the grid are rejected.
    pub fn query(&self, sigma: f64, eps: f64) -> Result<(u32, u32)> {
        if !(eps > 0.0) {
            return Err(Error::validation(format!("eps must be positive, got {eps}")));
        }
        let le = log_inverse_eps(eps);
        let (i, fx) = locate(&self.sigmas, sigma)
            .ok_or_else(|| Error::Range(format!("sigma = {sigma} outside the table grid")))?;
        let (j, fy) = locate(&self.logeps, le)
            .ok_or_else(|| Error::Range(format!("eps = {eps:e} outside the table grid")))?;
        let lerp = |table: &[Vec<u32>]| -> f64 {
            let at = |a: usize, b: usize| table[a][b] as f64;
            let mut v = (1.0 - fx) * (1.0 - fy) * at(i, j);
            if fx > 0.0 {
                v += fx * (1.0 - fy) * at(i + 1, j);
            }
            if fy > 0.0 {
                v += (1.0 - fx) * fy * at(i, j + 1);
            }
            if fx > 0.0 && fy > 0.0 {
                v += fx * fy * at(i + 1, j + 1);
            }
            v
        };
        let k = (lerp(&self.k) - NODE_SNAP).ceil().max(1.0) as u32;
        let t = lerp(&self.t).round().max(1.0) as u32;
        Ok((k, t))
    }

    /// Cells where `K*` increases or `T*` decreases with `σ` at fixed `ε`.
    pub fn trend_violations(&self) -> Vec<TrendViolation> {
        let mut out = Vec::new();
        for i in 1..self.sigmas.len() {
            for j in 0..self.logeps.len() {
                if self.k[i][j] > self.k[i - 1][j] {
                    out.push(TrendViolation { sigma_index: i, logeps_index: j, quantity: 'K' });
                }
                if self.t[i][j] < self.t[i - 1][j] {
                    out.push(TrendViolation { sigma_index: i, logeps_index: j, quantity: 'T' });
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "R {}", self.range);
        let _ = writeln!(s, "sigma {}", join(&self.sigmas));
        let _ = writeln!(s, "logeps {}", join(&self.logeps));
        for (tag, table) in [("K", &self.k), ("T", &self.t)] {
            for row in table {
                let cells: Vec<String> = row.iter().map(u32::to_string).collect();
                let _ = writeln!(s, "{tag} {}", cells.join(" "));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        let mut next = |tag: &str| -> Result<(usize, Vec<&str>)> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected `{tag}` line")))?;
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some(t) if t == tag => Ok((n, toks.collect())),
                Some(t) => Err(Error::parse(n, format!("expected `{tag}`, found `{t}`"))),
                None => Err(Error::parse(n, format!("expected `{tag}` line, found blank line"))),
            }
        };

        let (n, r) = next("R")?;
        let range = match r.as_slice() {
            [v] => v.parse::<u32>().map_err(|_| Error::parse(n, format!("bad R value {v:?}")))?,
            _ => return Err(Error::parse(n, "R line takes exactly one integer")),
        };
        let floats = |n: usize, toks: Vec<&str>| -> Result<Vec<f64>> {
            toks.iter()
                .map(|t| t.parse::<f64>().map_err(|_| Error::parse(n, format!("bad number {t:?}"))))
                .collect()
        };
        let (n, toks) = next("sigma")?;
        let sigmas = floats(n, toks)?;
        let (n, toks) = next("logeps")?;
        let logeps = floats(n, toks)?;

        let mut rows = |tag: &str| -> Result<Vec<Vec<u32>>> {
            (0..sigmas.len())
                .map(|_| {
                    let (n, toks) = next(tag)?;
                    if toks.len() != logeps.len() {
                        return Err(Error::parse(
                            n,
                            format!("expected {} entries, found {}", logeps.len(), toks.len()),
                        ));
                    }
                    toks.iter()
                        .map(|t| t.parse::<u32>().map_err(|_| Error::parse(n, format!("bad integer {t:?}"))))
                        .collect()
                })
                .collect()
        };
        let k = rows("K")?;
        let t = rows("T")?;
        drop(rows);
        if let Some((n, line)) = next_nonblank(&mut lines) {
            return Err(Error::parse(n, format!("unexpected trailing content {line:?}")));
        }
        LookupTable::new(range, sigmas, logeps, k, t).map_err(|e| Error::parse(0, e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn next_nonblank<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Option<(usize, &'a str)> {
    lines.find(|(_, l)| !l.trim().is_empty())
}

/// Cell index and fractional position of `x` in an ascending grid.
fn locate(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let slack = NODE_SNAP * (hi - lo);
    if !(x >= lo - slack && x <= hi + slack) {
        return None;
    }
    let x = x.clamp(lo, hi);
    let i = grid.windows(2).position(|w| x <= w[1]).unwrap_or(grid.len() - 2);
    let mut f = (x - grid[i]) / (grid[i + 1] - grid[i]);
    if f < NODE_SNAP {
        f = 0.0;
    }
    if f > 1.0 - NODE_SNAP {
        f = 1.0;
    }
    Some((i, f))
}

/// Runs the order/period search for every `(σ, ε)` cell of a Gaussian range
/// kernel. `epsilons` must be strictly decreasing (so `log10(1/ε)` ascends).
pub fn build_lut(sigmas: &[f64], epsilons: &[f64], range: u32, t_max: u32) -> Result<LookupTable> {
    check_grid("sigma", sigmas)?;
    if sigmas.iter().any(|&s| s <= 0.0) {
        return Err(Error::validation("sigma values must be positive"));
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::validation("eps values must lie in (0, 1)"));
    }
    let logeps: Vec<f64> = epsilons.iter().map(|&e| log_inverse_eps(e)).collect();
    check_grid("log10(1/eps)", &logeps)?;

    let k_max = default_k_max(range);
    let cells: Vec<(usize, usize)> = (0..sigmas.len())
        .flat_map(|i| (0..epsilons.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<(u32, u32)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let (sigma, eps) = (sigmas[i], epsilons[j]);
            let b = sample_range_kernel(&RangeKernelSpec::gaussian(sigma, range))?;
            optimize_parameters(&b, eps, t_max, k_max)
                .map(|r| (r.k_star as u32, r.t_star))
                .map_err(|e| Error::LutCell {
                    sigma,
                    eps,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    let width = epsilons.len();
    let k = results.chunks(width).map(|row| row.iter().map(|c| c.0).collect()).collect();
    let t = results.chunks(width).map(|row| row.iter().map(|c| c.1).collect()).collect();
    LookupTable::new(range, sigmas.to_vec(), logeps, k, t)
}
