//! Sampled time series recorded by the kernel, and CSV export.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Every recorded signal, in storage order. The first sixteen form the
/// standard export set.
pub const TRACE_COLUMNS: [&str; 31] = [
    "t",
    "v_w",
    "omega",
    "omega_ref",
    "v_dc",
    "v_c",
    "v_c_ref",
    "i_l",
    "d_s",
    "m_mag",
    "p_ref",
    "p_grid",
    "i_alpha",
    "i_beta",
    "v_grid_alpha",
    "energy_residual",
    // controller internals and audit signals
    "m_alpha",
    "m_beta",
    "i_l_ref",
    "i_dc",
    "i_rect",
    "lambda",
    "p_turbine",
    "p_loss",
    "p_gen_loss",
    "v_grid_beta",
    "w_turbine",
    "w_grid",
    "w_loss",
    "w_gen_loss",
    "grid_fault",
];

pub const STANDARD_COLUMNS: usize = 16;

pub(crate) fn column_index(name: &str) -> Option<usize> {
    TRACE_COLUMNS.iter().position(|c| *c == name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace<T> {
    /// Time between samples, s.
    pub sample_period: T,
    data: Vec<Vec<T>>,
}

impl<T: Scalar> Trace<T> {
    pub fn new(sample_period: T) -> Self {
        Self { sample_period, data: vec![Vec::new(); TRACE_COLUMNS.len()] }
    }

    pub(crate) fn push(&mut self, row: &[T; TRACE_COLUMNS.len()]) {
        for (col, &v) in self.data.iter_mut().zip(row.iter()) {
            col.push(v);
        }
    }

    pub(crate) fn column_mut(&mut self, name: &str) -> &mut Vec<T> {
        &mut self.data[column_index(name).expect("known column")]
    }

    pub fn len(&self) -> usize {
        self.data[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Option<&[T]> {
        column_index(name).map(|i| self.data[i].as_slice())
    }

    /// Column by name; panics on an unknown name.
    pub fn col(&self, name: &str) -> &[T] {
        self.column(name).unwrap_or_else(|| panic!("unknown trace column {name}"))
    }

    pub fn time(&self) -> &[T] {
        &self.data[0]
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: T) -> usize {
        self.time().partition_point(|&x| x < t)
    }

    /// Row range covering `[t0, t1)`.
    pub fn window(&self, t0: T, t1: T) -> std::ops::Range<usize> {
        self.index_at(t0)..self.index_at(t1)
    }

    /// Mean of a column over the final `fraction` of the samples.
    pub fn tail_mean(&self, name: &str, fraction: f64) -> Option<T> {
        let c = self.column(name)?;
        if c.is_empty() {
            return None;
        }
        let n = ((c.len() as f64 * fraction).ceil() as usize).clamp(1, c.len());
        let tail = &c[c.len() - n..];
        Some(tail.iter().copied().sum::<T>() / T::from_usize(n).unwrap())
    }

    /// Writes the named columns (all standard ones when `columns` is empty)
    /// with a `#` comment line first.
    pub fn write_csv<W: Write>(&self, mut w: W, columns: &[String], comment: &str) -> Result<()> {
        let names: Vec<&str> = if columns.is_empty() {
            TRACE_COLUMNS[..STANDARD_COLUMNS].to_vec()
        } else {
            columns.iter().map(String::as_str).collect()
        };
        let idx = names
            .iter()
            .map(|n| column_index(n).ok_or_else(|| Error::Validation(format!("unknown trace column '{n}'"))))
            .collect::<Result<Vec<_>>>()?;
        writeln!(w, "# {comment}")?;
        writeln!(w, "{}", names.join(","))?;
        let mut line = String::new();
        for r in 0..self.len() {
            line.clear();
            for (k, &c) in idx.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push_str(&format_sig(self.data[c][r].as_f64()));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Nine significant digits, fixed-point in the usual range and
/// exponent form for very large or very small magnitudes.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let e: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if !(-5..15).contains(&e) {
        return sci;
    }
    let decimals = (8 - e).max(0) as usize;
    format!("{x:.decimals$}")
}
