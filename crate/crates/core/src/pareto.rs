//! Bi-objective primitives: objective points, Pareto dominance, non-dominated
//! set maintenance and criterion-space boxes.
//!
//! The first objective (opening cost) is integer-valued, the second
//! (risk-adjusted uncovered demand) is a rational computed in floating point.
//! Dominance between points is exact; front maintenance treats two `f2`
//! values within [`F2_TOL`] as equal so that floating noise cannot split a
//! tie into two entries.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Absolute tolerance for comparing second-objective values.
pub const F2_TOL: f64 = 1e-6;

/// A point in criterion space: `f1` is the total opening cost, `f2` the
/// risk-adjusted uncovered demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectivePoint {
    pub f1: i64,
    pub f2: f64,
}

impl ObjectivePoint {
    pub fn new(f1: i64, f2: f64) -> Self {
        Self { f1, f2 }
    }

    /// Pareto dominance: at least as good in both objectives and strictly
    /// better in one. Identical points do not dominate each other.
    pub fn dominates(&self, other: &ObjectivePoint) -> bool {
        self.f1 <= other.f1
            && self.f2 <= other.f2
            && (self.f1 < other.f1 || self.f2 < other.f2)
    }

    /// Weak dominance with the `f2` tolerance, used for front maintenance:
    /// `self` is at least as good as `other` up to `F2_TOL` in `f2`.
    fn weakly_dominates_tol(&self, other: &ObjectivePoint) -> bool {
        self.f1 <= other.f1 && self.f2 <= other.f2 + F2_TOL
    }
}

/// A non-dominated objective point together with the first-stage decision
/// that attains it (`y[j]` = candidate `j` open).
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEntry {
    pub point: ObjectivePoint,
    pub y: Vec<bool>,
}

impl FrontEntry {
    pub fn new(point: ObjectivePoint, y: Vec<bool>) -> Self {
        Self { point, y }
    }

    /// Open/closed string in candidate index order, e.g. `0110`.
    pub fn y_bits(&self) -> String {
        self.y.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Mutually non-dominated entries, sorted by strictly increasing `f1` and
/// strictly decreasing `f2`. Ties at equal `(f1, f2)` keep the first-found
/// entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoFront {
    entries: Vec<FrontEntry>,
}

impl ParetoFront {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[FrontEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = ObjectivePoint> + '_ {
        self.entries.iter().map(|e| e.point)
    }

    /// Inserts `e` unless it is dominated by (or duplicates, at `F2_TOL`
    /// resolution) an existing entry; removes entries `e` dominates.
    /// Returns true when the front changed.
    pub fn insert(&mut self, e: FrontEntry) -> bool {
        let p = e.point;
        if self
            .entries
            .iter()
            .any(|old| old.point.weakly_dominates_tol(&p))
        {
            return false;
        }
        self.entries.retain(|old| !p.weakly_dominates_tol(&old.point));
        let pos = self
            .entries
            .partition_point(|old| old.point.f1 < p.f1);
        self.entries.insert(pos, e);
        true
    }

    /// Componentwise worst point over the front, the hypervolume reference.
    pub fn nadir(&self) -> Result<ObjectivePoint> {
        if self.entries.is_empty() {
            return Err(Error::EmptyFront);
        }
        let f1 = self.entries.iter().map(|e| e.point.f1).max().unwrap();
        let f2 = self
            .entries
            .iter()
            .map(|e| e.point.f2)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(ObjectivePoint::new(f1, f2))
    }

    /// Set equality at `F2_TOL` resolution: same length, pointwise equal f1
    /// and f2 within tolerance (both fronts are sorted by construction).
    pub fn same_points(&self, other: &ParetoFront) -> bool {
        self.len() == other.len()
            && self
                .entries
                .iter()
                .zip(other.entries.iter())
                .all(|(a, b)| {
                    a.point.f1 == b.point.f1 && (a.point.f2 - b.point.f2).abs() <= F2_TOL
                })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("f1,f2,y_bits\n");
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.point.f1, e.point.f2, e.y_bits()).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<ParetoFront> {
        let f = std::fs::File::open(path)?;
        Self::from_reader(BufReader::new(f))
    }

    pub fn from_reader(r: impl Read) -> Result<ParetoFront> {
        let reader = BufReader::new(r);
        let mut entries = Vec::new();
        let mut width = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 {
                if line.trim() != "f1,f2,y_bits" {
                    return Err(Error::parse(lineno, "expected header `f1,f2,y_bits`"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let f1 = parts
                .next()
                .and_then(|t| t.trim().parse::<i64>().ok())
                .ok_or_else(|| Error::parse(lineno, "bad f1 field"))?;
            let f2 = parts
                .next()
                .and_then(|t| t.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::parse(lineno, "bad f2 field"))?;
            let bits = parts
                .next()
                .ok_or_else(|| Error::parse(lineno, "missing y_bits field"))?
                .trim();
            if bits.is_empty() || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::parse(lineno, "y_bits must be a non-empty 0/1 string"));
            }
            match width {
                None => width = Some(bits.len()),
                Some(w) if w != bits.len() => {
                    return Err(Error::DimensionMismatch(format!(
                        "y_bits width {} at line {} differs from {}",
                        bits.len(),
                        lineno,
                        w
                    )))
                }
                _ => {}
            }
            let y = bits.chars().map(|c| c == '1').collect();
            entries.push((lineno, FrontEntry::new(ObjectivePoint::new(f1, f2), y)));
        }
        let mut front = ParetoFront::new();
        for (lineno, e) in entries {
            if !front.insert(e) {
                return Err(Error::parse(lineno, "entry is dominated or duplicated"));
            }
        }
        Ok(front)
    }
}

/// Axis-aligned rectangle in criterion space, spanned by its top-left
/// (low f1, high f2) and bottom-right (high f1, low f2) corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionBox {
    pub top: ObjectivePoint,
    pub bottom: ObjectivePoint,
}

impl CriterionBox {
    pub fn new(top: ObjectivePoint, bottom: ObjectivePoint) -> Result<Self> {
        if top.f1 > bottom.f1 || bottom.f2 > top.f2 {
            return Err(Error::BadReferencePoint(format!(
                "box corners out of order: top ({}, {}), bottom ({}, {})",
                top.f1, top.f2, bottom.f1, bottom.f2
            )));
        }
        Ok(Self { top, bottom })
    }

    pub fn area(&self) -> f64 {
        (self.bottom.f1 - self.top.f1) as f64 * (self.top.f2 - self.bottom.f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(f1: i64, f2: f64) -> ObjectivePoint {
        ObjectivePoint::new(f1, f2)
    }

    fn entry(f1: i64, f2: f64) -> FrontEntry {
        FrontEntry::new(pt(f1, f2), vec![false])
    }

    #[test]
    fn dominates_examples() {
        assert!(pt(1, 2.0).dominates(&pt(2, 3.0)));
        assert!(!pt(1, 2.0).dominates(&pt(1, 2.0)));
        assert!(!pt(1, 3.0).dominates(&pt(3, 1.0)));
        assert!(!pt(3, 1.0).dominates(&pt(1, 3.0)));
        // equal f1, strictly better f2
        assert!(pt(1, 1.0).dominates(&pt(1, 2.0)));
    }

    #[test]
    fn insert_keeps_mutually_nondominated() {
        let mut front = ParetoFront::new();
        assert!(front.insert(entry(1, 3.0)));
        assert!(front.insert(entry(3, 1.0)));
        assert!(front.insert(entry(2, 2.0)));
        let pts: Vec<_> = front.points().collect();
        assert_eq!(pts, vec![pt(1, 3.0), pt(2, 2.0), pt(3, 1.0)]);
    }

    #[test]
    fn insert_rejects_dominated() {
        let mut front = ParetoFront::new();
        front.insert(entry(1, 3.0));
        front.insert(entry(3, 1.0));
        assert!(!front.insert(entry(2, 4.0)));
        assert_eq!(front.len(), 2);
    }

    #[test]
    fn insert_dominator_replaces() {
        let mut front = ParetoFront::new();
        front.insert(entry(2, 2.0));
        assert!(front.insert(entry(1, 1.0)));
        let pts: Vec<_> = front.points().collect();
        assert_eq!(pts, vec![pt(1, 1.0)]);
    }

    #[test]
    fn insert_duplicate_keeps_first() {
        let mut front = ParetoFront::new();
        let mut first = entry(2, 2.0);
        first.y = vec![true];
        front.insert(first.clone());
        let mut second = entry(2, 2.0 + F2_TOL / 2.0);
        second.y = vec![false];
        assert!(!front.insert(second));
        assert_eq!(front.entries()[0].y, vec![true]);
    }

    #[test]
    fn nadir_examples() {
        let mut front = ParetoFront::new();
        front.insert(entry(1, 3.0));
        front.insert(entry(3, 1.0));
        assert_eq!(front.nadir().unwrap(), pt(3, 3.0));

        let mut single = ParetoFront::new();
        single.insert(entry(5, 5.0));
        assert_eq!(single.nadir().unwrap(), pt(5, 5.0));

        let mut three = ParetoFront::new();
        three.insert(entry(1, 9.0));
        three.insert(entry(2, 4.0));
        three.insert(entry(7, 0.0));
        assert_eq!(three.nadir().unwrap(), pt(7, 9.0));

        assert!(matches!(
            ParetoFront::new().nadir(),
            Err(Error::EmptyFront)
        ));
    }

    #[test]
    fn csv_round_trip() {
        let mut front = ParetoFront::new();
        front.insert(FrontEntry::new(pt(0, 12.5), vec![false, false]));
        front.insert(FrontEntry::new(pt(5000, 3.0), vec![true, false]));
        let csv = front.to_csv_string();
        let back = ParetoFront::from_reader(csv.as_bytes()).unwrap();
        assert_eq!(front, back);
        assert_eq!(back.to_csv_string(), csv);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(matches!(
            ParetoFront::from_reader("nope\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let bad = "f1,f2,y_bits\n1,2.0,01\n2,1.0,011\n";
        assert!(matches!(
            ParetoFront::from_reader(bad.as_bytes()),
            Err(Error::DimensionMismatch(_))
        ));
        let dominated = "f1,f2,y_bits\n1,2.0,01\n2,3.0,10\n";
        assert!(matches!(
            ParetoFront::from_reader(dominated.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn box_area() {
        let b = CriterionBox::new(pt(0, 10.0), pt(4, 2.0)).unwrap();
        assert_eq!(b.area(), 32.0);
        assert!(CriterionBox::new(pt(4, 2.0), pt(0, 10.0)).is_err());
    }
}
