//! Tabulated functions of `(t, x)` on uniform tensor grids with multilinear
//! interpolation.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ValueField;

/// Uniformly spaced knots `lo, …, hi` (`n ≥ 1`; a single knot needs `lo == hi`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !(lo <= hi) || (n == 1) != (lo == hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::arg(format!("bad axis [{lo}, {hi}] with {n} knots")));
        }
        Ok(Self { lo, hi, n })
    }

    /// Axis with spacing as close as possible to `step`.
    pub fn with_step(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if hi == lo {
            return Self::new(lo, hi, 1);
        }
        let n = ((hi - lo) / step).round().max(1.0) as usize + 1;
        Self::new(lo, hi, n)
    }

    pub fn step(&self) -> f64 {
        if self.n > 1 {
            (self.hi - self.lo) / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    #[inline]
    pub fn knot(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1).max(1) as f64
        }
    }

    pub fn knots(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.knot(i)).collect()
    }

    /// Cell index and fractional position, after clamping into the window.
    /// Positions within 1e-9 of a knot snap to it.
    #[inline]
    pub fn locate(&self, v: f64) -> (usize, f64) {
        if self.n == 1 {
            return (0, 0.0);
        }
        let last = (self.n - 1) as f64;
        let pos = ((v - self.lo) / (self.hi - self.lo) * last).clamp(0.0, last);
        let r = pos.round();
        let pos = if (pos - r).abs() < 1e-9 { r } else { pos };
        let i = (pos.floor() as usize).min(self.n - 2);
        (i, pos - i as f64)
    }

    /// Index of the knot nearest to `v`.
    pub fn nearest(&self, v: f64) -> usize {
        if self.n == 1 {
            return 0;
        }
        let pos = (v - self.lo) / (self.hi - self.lo) * (self.n - 1) as f64;
        (pos.round().max(0.0) as usize).min(self.n - 1)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo - 1e-12 && v <= self.hi + 1e-12
    }
}

/// Time axis plus one axis per state coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub time: Axis,
    pub space: Vec<Axis>,
}

impl GridSpec {
    pub fn new(time: Axis, space: Vec<Axis>) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::arg("grid needs at least one space axis"));
        }
        Ok(Self { time, space })
    }

    /// One-dimensional grid `[t0, t1] × [x0, x1]`.
    pub fn uniform_1d(t0: f64, t1: f64, n_t: usize, x0: f64, x1: f64, n_x: usize) -> Result<Self> {
        Self::new(Axis::new(t0, t1, n_t)?, vec![Axis::new(x0, x1, n_x)?])
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn len(&self) -> usize {
        self.time.n * self.space_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn space_len(&self) -> usize {
        self.space.iter().map(|a| a.n).product()
    }

    /// `(t, x)` of flat node index `k` (time-major).
    pub fn node(&self, k: usize) -> (f64, Vec<f64>) {
        let sl = self.space_len();
        let ti = k / sl;
        let mut rem = k % sl;
        let mut x = vec![0.0; self.dim()];
        for (d, a) in self.space.iter().enumerate().rev() {
            x[d] = a.knot(rem % a.n);
            rem /= a.n;
        }
        (self.time.knot(ti), x)
    }

    pub fn time_index(&self, k: usize) -> usize {
        k / self.space_len()
    }
}

/// Behaviour outside the space window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutOfWindow {
    Clamp,
    Constant(f64),
}

/// Values on a [`GridSpec`], evaluated by multilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
    policy: OutOfWindow,
}

impl GridFunction {
    pub fn from_values(spec: GridSpec, values: Vec<f64>, policy: OutOfWindow) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::arg(format!("{} values for {} nodes", values.len(), spec.len())));
        }
        Ok(Self { spec, values, policy })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let n = spec.len();
        Self { spec, values: vec![0.0; n], policy: OutOfWindow::Clamp }
    }

    /// Tabulates `f` at every node, in parallel.
    pub fn tabulate<F>(spec: GridSpec, policy: OutOfWindow, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Sync,
    {
        let values = (0..spec.len())
            .into_par_iter()
            .map(|k| {
                let (t, x) = spec.node(k);
                f(t, &x)
            })
            .collect();
        Self { spec, values, policy }
    }

    /// Fallible tabulation; the first error in node order is returned.
    pub fn try_tabulate<F>(spec: GridSpec, policy: OutOfWindow, f: F) -> Result<Self>
    where
        F: Fn(usize, f64, &[f64]) -> Result<f64> + Sync,
    {
        let values: Result<Vec<f64>> = (0..spec.len())
            .into_par_iter()
            .map(|k| {
                let (t, x) = spec.node(k);
                f(k, t, &x)
            })
            .collect();
        Ok(Self { spec, values: values?, policy })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn policy(&self) -> OutOfWindow {
        self.policy
    }

    pub fn with_policy(mut self, policy: OutOfWindow) -> Self {
        self.policy = policy;
        self
    }

    /// Stored value at time knot `ti` and space multi-index `xi`.
    pub fn at(&self, ti: usize, xi: &[usize]) -> f64 {
        let mut k = ti;
        for (a, &i) in self.spec.space.iter().zip(xi) {
            k = k * a.n + i;
        }
        self.values[k]
    }

    pub fn in_window(&self, x: &[f64]) -> bool {
        self.spec.space.iter().zip(x).all(|(a, &v)| a.contains(v))
    }

    /// Multilinear interpolation in `(t, x)`.
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        if let OutOfWindow::Constant(c) = self.policy {
            if !self.in_window(x) {
                return c;
            }
        }
        let (ti, ft) = self.spec.time.locate(t);
        if self.spec.space.len() == 1 {
            let a = &self.spec.space[0];
            let (xi, fx) = a.locate(x[0]);
            let n = a.n;
            let v = &self.values;
            let base = ti * n + xi;
            let x1 = if n > 1 { 1 } else { 0 };
            let t1 = if self.spec.time.n > 1 { n } else { 0 };
            let lo = lerp(v[base], v[base + x1], fx);
            if ft == 0.0 {
                return lo;
            }
            let hi = lerp(v[base + t1], v[base + t1 + x1], fx);
            return lerp(lo, hi, ft);
        }
        self.eval_general(ti, ft, x)
    }

    fn eval_general(&self, ti: usize, ft: f64, x: &[f64]) -> f64 {
        let d = self.spec.dim();
        let cells: Vec<(usize, f64)> = self.spec.space.iter().zip(x).map(|(a, &v)| a.locate(v)).collect();
        let mut acc = 0.0;
        for corner in 0..(1usize << (d + 1)) {
            let dt = corner & 1;
            let mut w = if dt == 1 { ft } else { 1.0 - ft };
            if w == 0.0 {
                continue;
            }
            let mut k = (ti + dt).min(self.spec.time.n - 1);
            for (j, a) in self.spec.space.iter().enumerate() {
                let bit = (corner >> (j + 1)) & 1;
                let (i, f) = cells[j];
                w *= if bit == 1 { f } else { 1.0 - f };
                k = k * a.n + (i + bit).min(a.n - 1);
            }
            if w != 0.0 {
                acc += w * self.values[k];
            }
        }
        acc
    }

    /// Pointwise map into a new grid function on the same spec.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec.clone(), values: self.values.iter().map(|&v| f(v)).collect(), policy: self.policy }
    }

    /// Pointwise combination of two grid functions on the same spec.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::arg("grid specs differ"));
        }
        Ok(Self {
            spec: self.spec.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            policy: self.policy,
        })
    }

    /// Largest absolute nodewise difference.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| (a - b).abs())?.values.iter().fold(0.0, |m, &v| m.max(v)))
    }

    /// Writes `t,x,value` rows (`t,x1,…,xd,value` when d > 1).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let d = self.spec.dim();
        let mut header = vec!["t".to_string()];
        if d == 1 {
            header.push("x".into());
        } else {
            header.extend((1..=d).map(|i| format!("x{i}")));
        }
        header.push("value".into());
        wr.write_record(&header)?;
        for (k, v) in self.values.iter().enumerate() {
            let (t, x) = self.spec.node(k);
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|c| c.to_string()));
            row.push(v.to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a table written by [`GridFunction::write_csv`]. Knots must be
    /// uniform and rows complete.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().from_reader(r);
        let width = rd.headers()?.len();
        if width < 3 {
            return Err(Error::arg("grid csv needs t, x…, value columns"));
        }
        let d = width - 2;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let row: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| Error::arg(format!("bad number in grid csv: {e}")))?);
        }
        let axis = |col: usize| -> Result<Axis> {
            let mut v: Vec<f64> = rows.iter().map(|r| r[col]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            let a = Axis::new(v[0], v[v.len() - 1], v.len())?;
            for (i, &k) in v.iter().enumerate() {
                if (a.knot(i) - k).abs() > 1e-9 * (1.0 + k.abs()) {
                    return Err(Error::arg("grid csv knots are not uniform"));
                }
            }
            Ok(a)
        };
        if rows.is_empty() {
            return Err(Error::arg("grid csv has no rows"));
        }
        let time = axis(0)?;
        let space: Result<Vec<Axis>> = (1..=d).map(axis).collect();
        let spec = GridSpec::new(time, space?)?;
        if rows.len() != spec.len() {
            return Err(Error::arg("grid csv is missing nodes"));
        }
        let mut values = vec![f64::NAN; spec.len()];
        for r in &rows {
            let mut k = spec.time.nearest(r[0]);
            for (j, a) in spec.space.iter().enumerate() {
                k = k * a.n + a.nearest(r[j + 1]);
            }
            values[k] = r[d + 1];
        }
        Self::from_values(spec, values, OutOfWindow::Clamp)
    }
}

impl ValueField for GridFunction {
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.eval(t, x)
    }
}

#[inline]
fn lerp(a: f64, b: f64, f: f64) -> f64 {
    if f == 0.0 {
        a
    } else if f == 1.0 {
        b
    } else {
        a + (b - a) * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridFunction {
        let spec = GridSpec::uniform_1d(0.0, 1.0, 11, 0.0, 5.0, 51).unwrap();
        GridFunction::tabulate(spec, OutOfWindow::Clamp, |t, x| (t * 3.0).sin() + x[0] * x[0])
    }

    #[test]
    fn knots_are_exact() {
        let g = sample();
        for ti in 0..11 {
            for xi in 0..51 {
                let t = g.spec().time.knot(ti);
                let x = g.spec().space[0].knot(xi);
                assert_eq!(g.eval(t, &[x]), g.at(ti, &[xi]));
                assert_eq!(g.eval(t, &[x]), (t * 3.0).sin() + x * x);
            }
        }
    }

    #[test]
    fn bilinear_is_exact_for_bilinear() {
        let spec = GridSpec::uniform_1d(0.0, 1.0, 3, -1.0, 1.0, 4).unwrap();
        let g = GridFunction::tabulate(spec, OutOfWindow::Clamp, |t, x| 1.0 + 2.0 * t - x[0] + 3.0 * t * x[0]);
        let (t, x) = (0.37, 0.123);
        assert!((g.eval(t, &[x]) - (1.0 + 2.0 * t - x + 3.0 * t * x)).abs() < 1e-14);
    }

    #[test]
    fn clamp_and_constant_policies() {
        let g = sample();
        assert_eq!(g.eval(0.0, &[-3.0]), g.eval(0.0, &[0.0]));
        assert_eq!(g.eval(0.0, &[9.0]), g.eval(0.0, &[5.0]));
        let c = g.clone().with_policy(OutOfWindow::Constant(-1.0));
        assert_eq!(c.eval(0.0, &[9.0]), -1.0);
        assert_eq!(c.eval(0.0, &[5.0]), 25.0);
    }

    #[test]
    fn two_dimensional_interpolation() {
        let spec = GridSpec::new(
            Axis::new(0.0, 1.0, 3).unwrap(),
            vec![Axis::new(0.0, 1.0, 5).unwrap(), Axis::new(-1.0, 1.0, 3).unwrap()],
        )
        .unwrap();
        let f = |t: f64, x: &[f64]| 1.0 + t + 2.0 * x[0] - x[1] + t * x[0] * x[1];
        let g = GridFunction::tabulate(spec, OutOfWindow::Clamp, f);
        let (t, x) = (0.3, [0.61, -0.2]);
        assert!((g.eval(t, &x) - f(t, &x)).abs() < 1e-14);
        assert_eq!(g.eval(0.5, &[0.25, 0.0]), f(0.5, &[0.25, 0.0]));
    }

    #[test]
    fn csv_round_trip() {
        let g = sample();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,value\n"));
        assert!(!text.contains('\r'));
        let h = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(g.spec().time.n, h.spec().time.n);
        assert!(g.max_abs_diff(&h).unwrap() < 1e-12);
    }
}
