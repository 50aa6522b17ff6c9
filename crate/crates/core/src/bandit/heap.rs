/// Binary max-heap over vertex ids `0..capacity` with in-place key updates.
///
/// Ordering is by key, then by lower id, so the top is deterministic under ties.
#[derive(Debug, Clone)]
pub struct IndexedMaxHeap<K> {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
    keys: Vec<Option<K>>,
}

impl<K: PartialOrd + Copy> IndexedMaxHeap<K> {
    pub fn new(capacity: usize) -> Self {
        Self {
            heap: Vec::with_capacity(capacity),
            pos: vec![None; capacity],
            keys: vec![None; capacity],
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.pos[id].is_some()
    }

    pub fn key(&self, id: usize) -> Option<K> {
        self.keys[id]
    }

    fn better(&self, a: usize, b: usize) -> bool {
        let (ka, kb) = (self.keys[a].unwrap(), self.keys[b].unwrap());
        ka > kb || (!(kb > ka) && a < b)
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = Some(i);
        self.pos[self.heap[j]] = Some(j);
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.better(self.heap[i], self.heap[parent]) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < self.heap.len() && self.better(self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < self.heap.len() && self.better(self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    /// Inserts `id` or changes its key.
    pub fn set(&mut self, id: usize, key: K) {
        self.keys[id] = Some(key);
        match self.pos[id] {
            Some(i) => {
                self.sift_up(i);
                self.sift_down(self.pos[id].unwrap());
            }
            None => {
                self.heap.push(id);
                let i = self.heap.len() - 1;
                self.pos[id] = Some(i);
                self.sift_up(i);
            }
        }
    }

    pub fn remove(&mut self, id: usize) {
        let Some(i) = self.pos[id] else { return };
        let last = self.heap.len() - 1;
        self.swap(i, last);
        self.heap.pop();
        self.pos[id] = None;
        self.keys[id] = None;
        if i < self.heap.len() {
            self.sift_up(i);
            self.sift_down(self.pos[self.heap[i]].unwrap());
        }
    }

    pub fn top(&self) -> Option<(usize, K)> {
        self.heap.first().map(|&id| (id, self.keys[id].unwrap()))
    }

    /// The best entry other than the top: the better of the root's children.
    pub fn second(&self) -> Option<(usize, K)> {
        let pick = match (self.heap.get(1), self.heap.get(2)) {
            (Some(&a), Some(&b)) => Some(if self.better(a, b) { a } else { b }),
            (Some(&a), None) => Some(a),
            _ => None,
        };
        pick.map(|id| (id, self.keys[id].unwrap()))
    }

    /// Best entry whose id differs from `exclude`.
    pub fn top_excluding(&self, exclude: usize) -> Option<(usize, K)> {
        match self.top() {
            Some((id, _)) if id == exclude => self.second(),
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(keys: &[Option<f64>], exclude: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (id, k) in keys.iter().enumerate() {
            if Some(id) == exclude {
                continue;
            }
            if let Some(k) = *k {
                if best.is_none_or(|(_, b)| k > b) {
                    best = Some((id, k));
                }
            }
        }
        best
    }

    #[test]
    fn matches_linear_scan_under_random_updates() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut h = IndexedMaxHeap::new(n);
        let mut shadow = vec![None; n];
        for _ in 0..10_000 {
            let id = rng.random_range(0..n);
            if rng.random::<f64>() < 0.1 {
                h.remove(id);
                shadow[id] = None;
            } else {
                // Coarse keys force plenty of ties.
                let k = (rng.random_range(0..20) as f64) / 4.0;
                h.set(id, k);
                shadow[id] = Some(k);
            }
            assert_eq!(h.top(), naive(&shadow, None));
            if let Some((t, _)) = h.top() {
                assert_eq!(h.second(), naive(&shadow, Some(t)));
            }
            let ex = rng.random_range(0..n);
            assert_eq!(h.top_excluding(ex), naive(&shadow, Some(ex)));
        }
    }

    #[test]
    fn tuple_keys_break_ties_by_flag() {
        let mut h = IndexedMaxHeap::new(3);
        h.set(0, (1.0, false));
        h.set(2, (1.0, true));
        h.set(1, (0.5, true));
        assert_eq!(h.top().unwrap().0, 2);
    }
}
