/// Binary indexed tree over non-negative weights with prefix-sum search.
#[derive(Clone, Debug)]
pub(crate) struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
    updates: usize,
}

impl Fenwick {
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut f = Self { tree: vec![0.0; values.len() + 1], values, updates: 0 };
        f.rebuild();
        f
    }

    fn rebuild(&mut self) {
        let n = self.values.len();
        self.tree.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let idx = i + 1;
            self.tree[idx] += self.values[i];
            let parent = idx + (idx & idx.wrapping_neg());
            if parent <= n {
                let v = self.tree[idx];
                self.tree[parent] += v;
            }
        }
        self.updates = 0;
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let delta = value - self.values[i];
        self.values[i] = value;
        let mut idx = i + 1;
        while idx < self.tree.len() {
            self.tree[idx] += delta;
            idx += idx & idx.wrapping_neg();
        }
        self.updates += 1;
        // Incremental updates drift; rebuild from the exact values now and then.
        if self.updates > 4 * self.values.len().max(64) {
            self.rebuild();
        }
    }

    pub fn total(&self) -> f64 {
        let mut idx = self.values.len();
        let mut s = 0.0;
        while idx > 0 {
            s += self.tree[idx];
            idx -= idx & idx.wrapping_neg();
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`, skipping
    /// zero-weight entries.
    pub fn find(&self, target: f64) -> usize {
        let n = self.values.len();
        let mut pos = 0;
        let mut rem = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        // Rounding can land past the end or on an empty slot.
        let mut i = pos.min(n - 1);
        while i > 0 && self.values[i] <= 0.0 {
            i -= 1;
        }
        while self.values[i] <= 0.0 && i + 1 < n {
            i += 1;
        }
        i
    }
}
