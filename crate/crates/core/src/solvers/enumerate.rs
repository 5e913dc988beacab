//! Odometer over labelings with a fixed prefix.

/// Walks every labeling in `[0, k)^n` whose first `fixed` entries stay 0,
/// in lexicographic order with the last sample varying fastest.
pub(crate) struct Odometer {
    labels: Vec<usize>,
    k: usize,
    fixed: usize,
    started: bool,
}

impl Odometer {
    pub fn new(n: usize, k: usize, fixed: usize) -> Self {
        Self {
            labels: vec![0; n],
            k,
            fixed: fixed.min(n),
            started: false,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Advances to the next labeling, recording `(sample, old, new)` for every
    /// changed entry. The first call yields the all-zero labeling with no
    /// changes. Returns false once exhausted.
    pub fn advance(&mut self, changes: &mut Vec<(usize, usize, usize)>) -> bool {
        changes.clear();
        if !self.started {
            self.started = true;
            return true;
        }
        let mut p = self.labels.len();
        while p > self.fixed {
            p -= 1;
            let old = self.labels[p];
            if old + 1 < self.k {
                self.labels[p] = old + 1;
                changes.push((p, old, old + 1));
                return true;
            }
            if old != 0 {
                self.labels[p] = 0;
                changes.push((p, old, 0));
            }
        }
        false
    }
}
