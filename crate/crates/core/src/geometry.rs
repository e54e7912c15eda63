//! Planar domains, trap arrays and uniform sampling. All lengths are meters.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance.
pub fn distance(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// Axis-aligned rectangular study region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Domain {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let finite = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite());
        if !finite || xmax <= xmin || ymax <= ymin {
            return Err(Error::InvalidArgument(format!(
                "degenerate domain [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(Self {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    /// Square `[0, side] x [0, side]`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new(0.0, side, 0.0, side)
    }

    /// Bounding box of the traps grown by `buffer` on every side.
    pub fn around_traps(traps: &TrapArray, buffer: f64) -> Result<Self> {
        if !(buffer >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative buffer {buffer}")));
        }
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in traps.iter() {
            xmin = xmin.min(t.x);
            xmax = xmax.max(t.x);
            ymin = ymin.min(t.y);
            ymax = ymax.max(t.y);
        }
        Self::new(xmin - buffer, xmax + buffer, ymin - buffer, ymax + buffer)
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }
    pub fn xmax(&self) -> f64 {
        self.xmax
    }
    pub fn ymin(&self) -> f64 {
        self.ymin
    }
    pub fn ymax(&self) -> f64 {
        self.ymax
    }
    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }
    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Draws a point uniformly over the rectangle.
    pub fn uniform_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        Point::new(
            self.xmin + u * self.width(),
            self.ymin + v * self.height(),
        )
    }
}

/// Free-function form of [`Domain::uniform_sample`].
pub fn uniform_sample<R: Rng + ?Sized>(domain: &Domain, rng: &mut R) -> Point {
    domain.uniform_sample(rng)
}

/// Ordered trap locations. Trap `j` (0-based here) is trap `j + 1` in
/// capture records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapArray {
    traps: Vec<Point>,
}

impl TrapArray {
    pub fn new(traps: Vec<Point>) -> Result<Self> {
        if traps.is_empty() {
            return Err(Error::InvalidArgument("trap array is empty".into()));
        }
        if let Some(p) = traps.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite trap location ({}, {})",
                p.x, p.y
            )));
        }
        Ok(Self { traps })
    }

    /// `rows x cols` grid with the given spacing, row-major, centered on
    /// `center`. Columns run along x, rows along y.
    pub fn grid(rows: usize, cols: usize, spacing: f64, center: Point) -> Result<Self> {
        if rows == 0 || cols == 0 || !(spacing > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "trap grid needs rows, cols >= 1 and spacing > 0 (got {rows}, {cols}, {spacing})"
            )));
        }
        let x0 = center.x - 0.5 * (cols - 1) as f64 * spacing;
        let y0 = center.y - 0.5 * (rows - 1) as f64 * spacing;
        let traps = (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| Point::new(x0 + c as f64 * spacing, y0 + r as f64 * spacing))
            })
            .collect();
        Self::new(traps)
    }

    pub fn len(&self) -> usize {
        self.traps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traps.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.traps.iter()
    }

    pub fn as_slice(&self) -> &[Point] {
        &self.traps
    }

    /// Trap by 1-based id.
    pub fn get(&self, trap_id: usize) -> Option<Point> {
        trap_id
            .checked_sub(1)
            .and_then(|j| self.traps.get(j))
            .copied()
    }

    pub fn check_inside(&self, domain: &Domain) -> Result<()> {
        match self.traps.iter().position(|t| !domain.contains(*t)) {
            Some(j) => Err(Error::InvalidArgument(format!(
                "trap {} lies outside the domain",
                j + 1
            ))),
            None => Ok(()),
        }
    }

    /// Reads `trap_id,x,y`. Ids must be exactly `1..=J` in any order.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        check_header(path, reader.headers()?, &["trap_id", "x", "y"])?;
        let mut rows: Vec<(usize, Point)> = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = k as u64 + 2;
            let id: usize = parse_field(path, line, &rec, 0)?;
            let x: f64 = parse_field(path, line, &rec, 1)?;
            let y: f64 = parse_field(path, line, &rec, 2)?;
            rows.push((id, Point::new(x, y)));
        }
        rows.sort_by_key(|r| r.0);
        for (k, (id, _)) in rows.iter().enumerate() {
            if *id != k + 1 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    message: format!("trap ids must be 1..=J without gaps; expected {} found {id}", k + 1),
                });
            }
        }
        Self::new(rows.into_iter().map(|r| r.1).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["trap_id", "x", "y"])?;
        for (j, t) in self.traps.iter().enumerate() {
            w.write_record(&[(j + 1).to_string(), t.x.to_string(), t.y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let ok = found.len() == expected.len()
        && found.iter().zip(expected).all(|(f, e)| f.trim() == *e);
    if ok {
        Ok(())
    } else {
        Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        })
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: u64,
    rec: &csv::StringRecord,
    col: usize,
) -> Result<T> {
    let raw = rec.get(col).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("missing column {}", col + 1),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse `{raw}` in column {}", col + 1),
    })
}
