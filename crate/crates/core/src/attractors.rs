use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::AttractorId;

/// Points found on each attractor, in the full state space of the system.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttractorStore {
    points: BTreeMap<AttractorId, Vec<Vec<f64>>>,
}

impl AttractorStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: AttractorId, point: &[f64]) {
        self.points.entry(id).or_default().push(point.to_vec());
    }

    pub fn get(&self, id: AttractorId) -> Option<&[Vec<f64>]> {
        self.points.get(&id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = AttractorId> + '_ {
        self.points.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AttractorId, &[Vec<f64>])> {
        self.points.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_points(&self) -> usize {
        self.points.values().map(Vec::len).sum()
    }

    /// Checks that IDs run 1..=n with no gaps and that all points share one dimension.
    pub fn validate(&self) -> Result<()> {
        let mut dim = None;
        for (n, (&id, pts)) in self.points.iter().enumerate() {
            if id as usize != n + 1 {
                return Err(Error::Consistency(format!(
                    "attractor ids must be consecutive from 1, found {id} at position {}",
                    n + 1
                )));
            }
            if pts.is_empty() {
                return Err(Error::Consistency(format!("attractor {id} has no points")));
            }
            for p in pts {
                match dim {
                    None => dim = Some(p.len()),
                    Some(d) if d != p.len() => {
                        return Err(Error::Consistency("attractor points differ in dimension".into()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Nearest attractor to `point` with its Euclidean distance. Ties go to
    /// the smallest ID.
    pub fn nearest(&self, point: &[f64]) -> Option<(AttractorId, f64)> {
        let mut best: Option<(AttractorId, f64)> = None;
        for (&id, pts) in &self.points {
            for p in pts {
                let d2: f64 = p.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
                if best.map_or(true, |(_, b)| d2 < b) {
                    best = Some((id, d2));
                }
            }
        }
        best.map(|(id, d2)| (id, d2.sqrt()))
    }

    /// Per-coordinate `(min, max)` of the points of one attractor.
    pub fn extent(&self, id: AttractorId) -> Option<Vec<(f64, f64)>> {
        let pts = self.points.get(&id)?;
        let first = pts.first()?;
        let mut ext: Vec<(f64, f64)> = first.iter().map(|&v| (v, v)).collect();
        for p in pts {
            for (e, &v) in ext.iter_mut().zip(p) {
                e.0 = e.0.min(v);
                e.1 = e.1.max(v);
            }
        }
        Some(ext)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_prefers_lower_id_on_ties() {
        let mut s = AttractorStore::new();
        s.push(1, &[1.0, 0.0]);
        s.push(2, &[-1.0, 0.0]);
        assert_eq!(s.nearest(&[0.0, 0.0]), Some((1, 1.0)));
        assert_eq!(s.nearest(&[-0.5, 0.0]).unwrap().0, 2);
    }

    #[test]
    fn validate_ids() {
        let mut s = AttractorStore::new();
        s.push(1, &[0.0]);
        s.push(3, &[0.0]);
        assert!(s.validate().is_err());
        s.push(2, &[1.0]);
        s.validate().unwrap();
        assert_eq!(s.extent(2).unwrap(), vec![(1.0, 1.0)]);
    }
}
