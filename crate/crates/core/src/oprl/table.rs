use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Mat2C;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum KernelValues {
    Matrix(Vec<Mat2C>),
    Scalar(Vec<C64>),
}

impl KernelValues {
    pub fn len(&self) -> usize {
        match self {
            Self::Matrix(v) => v.len(),
            Self::Scalar(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Kernel samples on a grid of `(z, w)` pairs, with the point, scale and
/// index they were taken at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub model: String,
    pub xi: f64,
    pub scale: f64,
    pub index: f64,
    pub grid: Vec<(C64, C64)>,
    pub values: KernelValues,
}

impl KernelTable {
    pub fn new(
        model: impl Into<String>,
        xi: f64,
        scale: f64,
        index: f64,
        grid: Vec<(C64, C64)>,
        values: KernelValues,
    ) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if !(scale > 0.0) {
            return Err(Error::Domain(format!(
                "table scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            model: model.into(),
            xi,
            scale,
            index,
            grid,
            values,
        })
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["re_z", "im_z", "re_w", "im_w"];
        match self.values {
            KernelValues::Matrix(_) => cols.extend([
                "re_k11", "im_k11", "re_k12", "im_k12", "re_k21", "im_k21", "re_k22", "im_k22",
            ]),
            KernelValues::Scalar(_) => cols.extend(["re_k", "im_k"]),
        }
        cols.join(",")
    }

    /// CSV with one row per grid point. Numbers use the shortest
    /// representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for (i, (z, w)) in self.grid.iter().enumerate() {
            let mut row: Vec<f64> = vec![z.re, z.im, w.re, w.im];
            match &self.values {
                KernelValues::Matrix(v) => {
                    for e in v[i].entries() {
                        row.extend([e.re, e.im]);
                    }
                }
                KernelValues::Scalar(v) => row.extend([v[i].re, v[i].im]),
            }
            let line: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

/// Shortest round-trip decimal form of `x` (at most 17 significant digits).
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}
