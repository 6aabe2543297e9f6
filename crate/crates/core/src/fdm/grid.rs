use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::game::BoxDomain;
use crate::{Error, Result};

/// How values between stored time slices are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeInterp {
    #[default]
    Linear,
    Nearest,
}

/// Values on a uniform tensor grid at a sequence of stored times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub lower: Vec<f64>,
    pub spacing: Vec<f64>,
    /// Nodes per axis; values are row-major with the last axis fastest.
    pub shape: Vec<usize>,
    /// Step of the time integrator that produced the grid.
    pub dt: f64,
    /// Ascending.
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
}

/// Interpolated value, time derivative, gradient and row-major Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct GridJet {
    pub v: f64,
    pub dv_dt: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

const SNAP_TOL: f64 = 1e-9;

impl TimeGrid {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.spacing).zip(&self.shape).map(|((l, h), n)| l + h * (*n as f64 - 1.0)).collect()
    }

    pub fn extents(&self) -> BoxDomain {
        BoxDomain { lower: self.lower.clone(), upper: self.upper() }
    }

    fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for k in (0..d.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.shape[k + 1];
        }
        s
    }

    /// Coordinates of the node with multi-index `idx`.
    pub fn node(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(k, &i)| self.lower[k] + self.spacing[k] * i as f64).collect()
    }

    /// Coordinates of every node in storage order.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        let mut out = Vec::with_capacity(self.node_count());
        for _ in 0..self.node_count() {
            out.push(self.node(&idx));
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < self.shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    /// Index of the stored slice at time `t`, if any.
    pub fn slice_index(&self, t: f64) -> Option<usize> {
        let scale = self.times.last().map_or(1.0, |v| v.abs().max(1.0));
        self.times.iter().position(|s| (s - t).abs() <= 1e-12 * scale)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.lower.len() != d || self.spacing.len() != d || self.shape.iter().any(|n| *n < 2) {
            return Err(Error::Parse("grid needs >= 2 nodes per axis and consistent axes".into()));
        }
        if self.times.is_empty() || self.times.len() != self.slices.len() || self.slices.iter().any(|s| s.len() != self.node_count()) {
            return Err(Error::Parse("grid slices do not match the shape".into()));
        }
        if self.times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parse("grid times must be strictly ascending".into()));
        }
        Ok(())
    }

    /// Cell lower corner and fractional offsets for `x`.
    fn locate(&self, x: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        let mut cell = Vec::with_capacity(x.len());
        let mut frac = Vec::with_capacity(x.len());
        for k in 0..x.len() {
            let s = (x[k] - self.lower[k]) / self.spacing[k];
            let top = (self.shape[k] - 1) as f64;
            if !(s >= -SNAP_TOL && s <= top + SNAP_TOL) {
                return Err(Error::OutOfRange(format!("x[{k}] = {} outside the grid", x[k])));
            }
            let s = s.clamp(0.0, top);
            let i = (s.floor() as usize).min(self.shape[k] - 2);
            cell.push(i);
            frac.push(s - i as f64);
        }
        Ok((cell, frac))
    }

    /// Bracketing slices and the weight of the upper one.
    fn bracket(&self, t: f64, mode: TimeInterp) -> Result<(usize, usize, f64)> {
        let (t0, t1) = (self.times[0], *self.times.last().unwrap());
        let tol = 1e-12 * t1.abs().max(1.0);
        if !(t >= t0 - tol && t <= t1 + tol) {
            return Err(Error::OutOfRange(format!("t = {t} outside [{t0}, {t1}]")));
        }
        if self.times.len() == 1 {
            return Ok((0, 0, 0.0));
        }
        let k = self.times.partition_point(|s| *s <= t).clamp(1, self.times.len() - 1) - 1;
        let w = ((t - self.times[k]) / (self.times[k + 1] - self.times[k])).clamp(0.0, 1.0);
        Ok(match mode {
            TimeInterp::Linear => (k, k + 1, w),
            TimeInterp::Nearest => {
                let j = if w < 0.5 { k } else { k + 1 };
                (j, j, 0.0)
            }
        })
    }

    fn corner_weights(&self, cell: &[usize], frac: &[f64]) -> Vec<(usize, f64)> {
        let d = self.dim();
        let strides = self.strides();
        (0..1usize << d)
            .map(|mask| {
                let mut flat = 0;
                let mut w = 1.0;
                for k in 0..d {
                    let up = (mask >> k) & 1 == 1;
                    flat += (cell[k] + up as usize) * strides[k];
                    w *= if up { frac[k] } else { 1.0 - frac[k] };
                }
                (flat, w)
            })
            .collect()
    }

    fn spatial(&self, slice: &[f64], corners: &[(usize, f64)]) -> f64 {
        corners.iter().map(|(i, w)| w * slice[*i]).sum()
    }

    /// Neighbour of flat node `i` along axis `k`, mirrored at the boundary.
    fn neighbour(&self, idx: &[usize], strides: &[usize], flat: usize, k: usize, up: bool) -> usize {
        let n = self.shape[k];
        let j = idx[k];
        let target = match (up, j) {
            (true, j) if j + 1 < n => j + 1,
            (true, _) => n - 2,
            (false, 0) => 1,
            (false, j) => j - 1,
        };
        flat - j * strides[k] + target * strides[k]
    }

    /// Central-difference gradient and Hessian at a node, with mirrored ghost
    /// values outside the grid.
    pub fn node_derivatives(&self, slice: &[f64], idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        let c = slice[flat];
        for k in 0..d {
            let h = self.spacing[k];
            let (p, m) = (self.neighbour(idx, &strides, flat, k, true), self.neighbour(idx, &strides, flat, k, false));
            grad[k] = (slice[p] - slice[m]) / (2.0 * h);
            hess[k * d + k] = (slice[p] - 2.0 * c + slice[m]) / (h * h);
            for l in k + 1..d {
                let mut acc = 0.0;
                for (sk, uk) in [(1.0, true), (-1.0, false)] {
                    let nk = self.neighbour(idx, &strides, flat, k, uk);
                    let mut idx_k = idx.to_vec();
                    idx_k[k] = (nk / strides[k]) % self.shape[k];
                    for (sl, ul) in [(1.0, true), (-1.0, false)] {
                        acc += sk * sl * slice[self.neighbour(&idx_k, &strides, nk, l, ul)];
                    }
                }
                let v = acc / (4.0 * h * self.spacing[l]);
                hess[k * d + l] = v;
                hess[l * d + k] = v;
            }
        }
        (grad, hess)
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let strides = self.strides();
        strides
            .iter()
            .map(|s| {
                let i = flat / s;
                flat %= s;
                i
            })
            .collect()
    }

    /// Stencil derivatives interpolated to `(t, x)`; `∂ₜ` comes from the
    /// difference of the bracketing slices.
    pub fn jet(&self, t: f64, x: &[f64]) -> Result<GridJet> {
        let (cell, frac) = self.locate(x)?;
        let corners = self.corner_weights(&cell, &frac);
        let (k0, k1, w) = self.bracket(t, TimeInterp::Linear)?;
        let d = self.dim();
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        for (k, wt) in [(k0, 1.0 - w), (k1, w)] {
            for (flat, wc) in &corners {
                let (g, h) = self.node_derivatives(&self.slices[k], &self.unflatten(*flat));
                grad.iter_mut().zip(&g).for_each(|(a, b)| *a += wt * wc * b);
                hess.iter_mut().zip(&h).for_each(|(a, b)| *a += wt * wc * b);
            }
        }
        let v0 = self.spatial(&self.slices[k0], &corners);
        let v1 = self.spatial(&self.slices[k1], &corners);
        let dv_dt = if k1 > k0 { (v1 - v0) / (self.times[k1] - self.times[k0]) } else { 0.0 };
        Ok(GridJet { v: (1.0 - w) * v0 + w * v1, dv_dt, grad, hess })
    }
}

/// Multilinear interpolation in space and `mode` in time.
pub fn interpolate(grid: &TimeGrid, t: f64, x: &[f64], mode: TimeInterp) -> Result<f64> {
    let (cell, frac) = grid.locate(x)?;
    let corners = grid.corner_weights(&cell, &frac);
    let (k0, k1, w) = grid.bracket(t, mode)?;
    let v0 = grid.spatial(&grid.slices[k0], &corners);
    if w == 0.0 {
        return Ok(v0);
    }
    Ok((1.0 - w) * v0 + w * grid.spatial(&grid.slices[k1], &corners))
}

/// Sub-grid covering `target`. Bounds off the node lattice are snapped to the
/// nearest node; the flag reports whether that happened.
pub fn restrict_to_target(grid: &TimeGrid, target: &BoxDomain) -> Result<(TimeGrid, bool)> {
    let d = grid.dim();
    if target.dim() != d {
        return Err(Error::Dimension { expected: d, got: target.dim() });
    }
    target.validate()?;
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    let mut snapped = false;
    for k in 0..d {
        let h = grid.spacing[k];
        let top = (grid.shape[k] - 1) as f64;
        let (sl, su) = ((target.lower[k] - grid.lower[k]) / h, (target.upper[k] - grid.lower[k]) / h);
        if sl < -SNAP_TOL || su > top + SNAP_TOL {
            return Err(Error::OutOfRange(format!("target axis {k} exceeds the grid")));
        }
        let (il, iu) = (sl.round().max(0.0), su.round().min(top));
        snapped |= (il - sl).abs() > SNAP_TOL || (iu - su).abs() > SNAP_TOL;
        if iu <= il {
            return Err(Error::OutOfRange(format!("target axis {k} covers fewer than two nodes")));
        }
        lo.push(il as usize);
        hi.push(iu as usize);
    }
    let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, u)| u - l + 1).collect();
    let lower: Vec<f64> = (0..d).map(|k| grid.lower[k] + grid.spacing[k] * lo[k] as f64).collect();
    let strides = grid.strides();
    let sub = TimeGrid { lower, spacing: grid.spacing.clone(), shape: shape.clone(), dt: grid.dt, times: grid.times.clone(), slices: Vec::new() };
    let picks: Vec<usize> = (0..sub.node_count())
        .map(|f| sub.unflatten(f).iter().enumerate().map(|(k, i)| (i + lo[k]) * strides[k]).sum())
        .collect();
    let slices = grid.slices.iter().map(|s| picks.iter().map(|&i| s[i]).collect()).collect();
    Ok((TimeGrid { slices, ..sub }, snapped))
}

fn join(v: &[impl std::fmt::LowerExp]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

/// CSV: header rows `axes`, `lower`, `spacing`, `shape`, `dt`, then for every
/// slice a `t,<time>` row followed by one row of values per leading index.
pub fn write_grid_csv<W: Write>(grid: &TimeGrid, mut w: W) -> Result<()> {
    let last = *grid.shape.last().unwrap_or(&1);
    writeln!(w, "axes,{}", grid.dim())?;
    writeln!(w, "lower,{}", join(&grid.lower))?;
    writeln!(w, "spacing,{}", join(&grid.spacing))?;
    writeln!(w, "shape,{}", grid.shape.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","))?;
    writeln!(w, "dt,{:e}", grid.dt)?;
    for (t, s) in grid.times.iter().zip(&grid.slices) {
        writeln!(w, "t,{t:e}")?;
        for row in s.chunks(last) {
            writeln!(w, "{}", join(row))?;
        }
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(line: &str, key: &str) -> Result<Vec<T>> {
    let mut it = line.trim().split(',');
    if it.next() != Some(key) {
        return Err(Error::Parse(format!("expected `{key}` row, got `{line}`")));
    }
    it.map(|s| s.parse().map_err(|_| Error::Parse(format!("bad value `{s}` in `{key}` row")))).collect()
}

pub fn read_grid_csv<R: BufRead>(r: R) -> Result<TimeGrid> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> { lines.next().ok_or_else(|| Error::Parse("truncated grid file".into()))?.map_err(Error::from) };
    let axes: Vec<usize> = parse_list(&next()?, "axes")?;
    let lower: Vec<f64> = parse_list(&next()?, "lower")?;
    let spacing: Vec<f64> = parse_list(&next()?, "spacing")?;
    let shape: Vec<usize> = parse_list(&next()?, "shape")?;
    let dt: Vec<f64> = parse_list(&next()?, "dt")?;
    if axes.len() != 1 || shape.len() != axes[0] || dt.len() != 1 {
        return Err(Error::Parse("inconsistent grid header".into()));
    }
    let rows: usize = shape[..shape.len() - 1].iter().product();
    let mut times = Vec::new();
    let mut slices = Vec::new();
    loop {
        let line = match next() {
            Ok(l) if l.trim().is_empty() => continue,
            Ok(l) => l,
            Err(Error::Parse(_)) => break,
            Err(e) => return Err(e),
        };
        let t: Vec<f64> = parse_list(&line, "t")?;
        if t.len() != 1 {
            return Err(Error::Parse("bad time row".into()));
        }
        let mut values = Vec::with_capacity(rows * shape[shape.len() - 1]);
        for _ in 0..rows {
            for s in next()?.trim().split(',') {
                values.push(s.parse::<f64>().map_err(|_| Error::Parse(format!("bad grid value `{s}`")))?);
            }
        }
        times.push(t[0]);
        slices.push(values);
    }
    let grid = TimeGrid { lower, spacing, shape, dt: dt[0], times, slices };
    grid.validate()?;
    Ok(grid)
}

const MAGIC: &[u8; 8] = b"FDMGRID1";

pub fn write_grid_binary<W: Write>(grid: &TimeGrid, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for k in 0..grid.dim() {
        w.write_all(&(grid.shape[k] as u64).to_le_bytes())?;
        w.write_all(&grid.lower[k].to_le_bytes())?;
        w.write_all(&grid.spacing[k].to_le_bytes())?;
    }
    w.write_all(&grid.dt.to_le_bytes())?;
    w.write_all(&(grid.times.len() as u64).to_le_bytes())?;
    for (t, s) in grid.times.iter().zip(&grid.slices) {
        w.write_all(&t.to_le_bytes())?;
        for v in s {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_grid_binary<R: Read>(mut r: R) -> Result<TimeGrid> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a binary grid file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut u64_ = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    if d == 0 || d > 16 {
        return Err(Error::Parse(format!("implausible grid dimension {d}")));
    }
    let (mut shape, mut lower, mut spacing) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..d {
        shape.push(u64_(&mut r)? as usize);
        lower.push(f64::from_bits(u64_(&mut r)?));
        spacing.push(f64::from_bits(u64_(&mut r)?));
    }
    let dt = f64::from_bits(u64_(&mut r)?);
    let n_slices = u64_(&mut r)? as usize;
    let nodes: usize = shape.iter().product();
    let (mut times, mut slices) = (Vec::with_capacity(n_slices), Vec::with_capacity(n_slices));
    for _ in 0..n_slices {
        times.push(f64::from_bits(u64_(&mut r)?));
        let mut s = Vec::with_capacity(nodes);
        for _ in 0..nodes {
            s.push(f64::from_bits(u64_(&mut r)?));
        }
        slices.push(s);
    }
    let grid = TimeGrid { lower, spacing, shape, dt, times, slices };
    grid.validate()?;
    Ok(grid)
}
