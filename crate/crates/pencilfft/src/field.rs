//! Rank-local field storage.

/// One allocation per rank serving every stage of a plan.
///
/// The buffer holds two equally sized banks. Transforms read lines from the
/// active bank and write to the spare, then the banks swap; topology switches
/// work in place on the active bank (send payloads are captured before the
/// destination region is reset). Capacity must cover the largest rank-local
/// extent over all stages.
pub struct FieldBuffer {
    data: Vec<f64>,
    capacity: usize,
    active: usize,
}

impl FieldBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { data: vec![0.0; 2 * capacity], capacity, active: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn active(&self) -> &[f64] {
        let s = self.active * self.capacity;
        &self.data[s..s + self.capacity]
    }

    pub fn active_mut(&mut self) -> &mut [f64] {
        let s = self.active * self.capacity;
        &mut self.data[s..s + self.capacity]
    }

    /// (active, spare), both full capacity.
    pub fn banks_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let (a, b) = self.data.split_at_mut(self.capacity);
        if self.active == 0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn swap_banks(&mut self) {
        self.active ^= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banks_swap_without_copying() {
        let mut f = FieldBuffer::new(4);
        f.active_mut()[0] = 1.0;
        {
            let (active, spare) = f.banks_mut();
            assert_eq!(active[0], 1.0);
            spare[0] = 2.0;
        }
        f.swap_banks();
        assert_eq!(f.active()[0], 2.0);
        f.swap_banks();
        assert_eq!(f.active()[0], 1.0);
    }
}
