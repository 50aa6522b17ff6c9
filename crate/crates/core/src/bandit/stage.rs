use super::arm::ArmTable;
use super::heap::IndexedMaxHeap;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-stage aggregates over the non-center vertices:
/// `U(d_{v,S}) = min_s U(d_{v,s})`, `L(d_{v,S}) = min_s L(d_{v,s})` and the
/// estimate `min_s dhat_{v,s}`, each kept in an indexed max-heap.
///
/// A vertex is *resolved* when its two aggregates coincide. On equal `U` the
/// heap prefers unresolved vertices, which is what lets exact ties terminate.
#[derive(Debug, Clone)]
pub struct StageState<T> {
    centers: Vec<usize>,
    is_center: Vec<bool>,
    upper: Vec<T>,
    lower: Vec<T>,
    estimate: Vec<T>,
    u_heap: IndexedMaxHeap<(T, bool)>,
    l_heap: IndexedMaxHeap<T>,
    est_heap: IndexedMaxHeap<T>,
}

impl<T: Real> StageState<T> {
    /// Starts with one center; every other vertex has unbounded aggregates until refreshed.
    pub fn new(n: usize, first_center: usize) -> Result<Self> {
        if first_center >= n {
            return Err(Error::IndexOutOfBounds {
                index: first_center,
                len: n,
            });
        }
        let mut st = Self {
            centers: Vec::new(),
            is_center: vec![false; n],
            upper: vec![T::infinity(); n],
            lower: vec![T::neg_infinity(); n],
            estimate: vec![T::zero(); n],
            u_heap: IndexedMaxHeap::new(n),
            l_heap: IndexedMaxHeap::new(n),
            est_heap: IndexedMaxHeap::new(n),
        };
        for v in 0..n {
            st.push_keys(v);
        }
        st.add_center(first_center)?;
        Ok(st)
    }

    fn push_keys(&mut self, v: usize) {
        let unresolved = !(self.upper[v] == self.lower[v]);
        self.u_heap.set(v, (self.upper[v], unresolved));
        self.l_heap.set(v, self.lower[v]);
        self.est_heap.set(v, self.estimate[v]);
    }

    /// Promotes `c` to a center. Callers refresh the other vertices as the new arms get pulled.
    pub fn add_center(&mut self, c: usize) -> Result<()> {
        let n = self.is_center.len();
        if c >= n {
            return Err(Error::IndexOutOfBounds { index: c, len: n });
        }
        if self.is_center[c] {
            return Err(Error::invalid(format!("{c} is already a center")));
        }
        self.is_center[c] = true;
        self.centers.push(c);
        self.u_heap.remove(c);
        self.l_heap.remove(c);
        self.est_heap.remove(c);
        Ok(())
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn is_center(&self, v: usize) -> bool {
        self.is_center[v]
    }

    pub fn num_remaining(&self) -> usize {
        self.u_heap.len()
    }

    /// Non-center vertices in increasing order.
    pub fn remaining(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.is_center.len()).filter(|&v| !self.is_center[v])
    }

    /// Recomputes `v`'s aggregates from its arms against the current centers.
    pub fn refresh(&mut self, v: usize, arms: &ArmTable<T>) {
        debug_assert!(!self.is_center[v]);
        let mut u = T::infinity();
        let mut l = T::infinity();
        let mut e = T::infinity();
        for pos in 0..self.centers.len() {
            let a = arms.get(v, pos);
            let (al, au) = a.raw_bounds();
            u = u.min(au);
            l = l.min(al);
            e = e.min(a.estimate());
        }
        self.upper[v] = u;
        self.lower[v] = l;
        self.estimate[v] = e;
        self.push_keys(v);
    }

    pub fn upper(&self, v: usize) -> T {
        self.upper[v]
    }

    pub fn lower(&self, v: usize) -> T {
        self.lower[v]
    }

    pub fn estimate(&self, v: usize) -> T {
        self.estimate[v]
    }

    pub fn is_resolved(&self, v: usize) -> bool {
        self.upper[v] == self.lower[v]
    }

    /// `v^L = argmax_v L(d_{v,S})`.
    pub fn leader(&self) -> Option<usize> {
        self.l_heap.top().map(|(v, _)| v)
    }

    /// `argmax_v U(d_{v,S})`, unresolved vertices first on ties.
    pub fn best_upper(&self) -> Option<usize> {
        self.u_heap.top().map(|(v, _)| v)
    }

    pub fn best_upper_excluding(&self, v: usize) -> Option<usize> {
        self.u_heap.top_excluding(v).map(|(w, _)| w)
    }

    /// `argmax_v min_s dhat_{v,s}`.
    pub fn best_estimate(&self) -> Option<usize> {
        self.est_heap.top().map(|(v, _)| v)
    }

    /// `max_{v != v^L} U(d_{v,S}) - L(d_{v^L,S})`; `-inf` with a single remaining vertex.
    pub fn margin(&self) -> T {
        let Some(vl) = self.leader() else {
            return T::neg_infinity();
        };
        match self.u_heap.top_excluding(vl) {
            Some((_, (u, _))) => u - self.lower[vl],
            None => T::neg_infinity(),
        }
    }

    /// The separation test: `L(d_{v^L,S}) > max_{v != v^L} U(d_{v,S})`, or equality
    /// between two resolved vertices (an exact tie, settled by the lower index).
    pub fn should_stop(&self) -> bool {
        let Some(vl) = self.leader() else {
            return true;
        };
        match self.u_heap.top_excluding(vl) {
            None => true,
            Some((_, (u, unresolved))) => {
                let l = self.lower[vl];
                l > u || (l >= u && !unresolved && self.is_resolved(vl))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::ci::{CiConfig, CiFamily, RewardKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_leader(st: &StageState<f64>) -> usize {
        let mut best = None;
        for v in st.remaining() {
            if best.is_none_or(|(_, l)| st.lower(v) > l) {
                best = Some((v, st.lower(v)));
            }
        }
        best.unwrap().0
    }

    fn naive_max_upper_excluding(st: &StageState<f64>, x: usize) -> Option<(f64, bool)> {
        let mut best: Option<(f64, bool)> = None;
        for v in st.remaining().filter(|&v| v != x) {
            let key = (st.upper(v), !st.is_resolved(v));
            if best.is_none_or(|b| key > b) {
                best = Some(key);
            }
        }
        best
    }

    #[test]
    fn single_vertex_single_center() {
        let cfg = CiConfig::new(CiFamily::IteratedLog, 0.01, RewardKind::Bounded).unwrap();
        let mut arms = ArmTable::new(2, 1, None);
        let mut st = StageState::new(2, 0).unwrap();
        arms.get_mut(1, 0).update(0.5, &cfg).unwrap();
        st.refresh(1, &arms);
        let (l, u) = arms.bounds(1, 0).unwrap();
        assert_eq!((st.lower(1), st.upper(1)), (l, u));
        assert!(st.should_stop());
    }

    #[test]
    fn heap_aggregates_match_naive_after_random_updates() {
        let n = 40;
        let k = 4;
        let cfg = CiConfig::kl_racing_default(0.01, RewardKind::Bounded).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut arms = ArmTable::new(n, k, None);
        let mut st = StageState::new(n, 0).unwrap();
        let mut updates = 0;
        while updates < 10_000 {
            if st.centers().len() < k && rng.random::<f64>() < 0.0005 {
                let c = st.leader().unwrap();
                st.add_center(c).unwrap();
                let rest: Vec<usize> = st.remaining().collect();
                for w in rest {
                    st.refresh(w, &arms);
                }
            }
            let v = rng.random_range(0..n);
            if st.is_center(v) {
                continue;
            }
            let pos = rng.random_range(0..st.centers().len());
            let arm = arms.get_mut(v, pos);
            if rng.random::<f64>() < 0.01 {
                arm.set_exact((rng.random_range(0..8) as f64) / 8.0);
            } else if !arm.is_exact() {
                arm.update((rng.random_range(0..8) as f64) / 8.0, &cfg)
                    .unwrap();
            }
            st.refresh(v, &arms);
            updates += 1;

            for w in st.remaining() {
                let mut u = f64::INFINITY;
                let mut l = f64::INFINITY;
                for p in 0..st.centers().len() {
                    let (al, au) = arms.get(w, p).raw_bounds();
                    u = u.min(au);
                    l = l.min(al);
                }
                assert_eq!((st.upper(w), st.lower(w)), (u, l));
            }
            let vl = st.leader().unwrap();
            assert_eq!(vl, naive_leader(&st));
            let got = st
                .best_upper_excluding(vl)
                .map(|w| (st.upper(w), !st.is_resolved(w)));
            assert_eq!(got, naive_max_upper_excluding(&st, vl));
        }
    }

    #[test]
    fn adding_a_center_cannot_raise_aggregates() {
        let cfg = CiConfig::new(CiFamily::IteratedLog, 0.01, RewardKind::Bounded).unwrap();
        let mut arms = ArmTable::new(3, 2, None);
        let mut st = StageState::new(3, 0).unwrap();
        for v in 1..3 {
            arms.get_mut(v, 0).update(0.6, &cfg).unwrap();
            st.refresh(v, &arms);
        }
        let before = (st.upper(2), st.lower(2));
        st.add_center(1).unwrap();
        arms.get_mut(2, 1).update(0.1, &cfg).unwrap();
        st.refresh(2, &arms);
        assert!(st.upper(2) <= before.0 && st.lower(2) <= before.1);
    }

    #[test]
    fn exact_ties_stop_on_lowest_index() {
        let mut arms = ArmTable::<f64>::new(4, 1, None);
        let mut st = StageState::new(4, 0).unwrap();
        for (v, d) in [(1, 0.5), (2, 0.7), (3, 0.7)] {
            arms.get_mut(v, 0).set_exact(d);
            st.refresh(v, &arms);
        }
        assert!(st.should_stop());
        assert_eq!(st.leader(), Some(2));
    }
}
