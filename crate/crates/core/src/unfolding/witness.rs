/// Breadth-first enumeration of finite digit strings with digits below
/// `cap`: by length, then lexicographically. Every proper prefix of a
/// string comes earlier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WitnessEnumeration {
    pub cap: u64,
}

impl WitnessEnumeration {
    pub fn new(cap: u64) -> Self {
        assert!(cap >= 1, "digit cap must be positive");
        WitnessEnumeration { cap }
    }

    /// The string with the given index.
    pub fn get(&self, mut index: u64) -> Vec<u64> {
        let mut len = 0u32;
        let mut block = 1u64;
        while index >= block {
            index -= block;
            len += 1;
            block = block.checked_mul(self.cap).expect("witness index out of range");
        }
        let mut digits = vec![0; len as usize];
        for d in digits.iter_mut().rev() {
            *d = index % self.cap;
            index /= self.cap;
        }
        digits
    }

    /// Index of a string, or `None` if a digit reaches the cap.
    pub fn index_of(&self, w: &[u64]) -> Option<u64> {
        if w.iter().any(|&d| d >= self.cap) {
            return None;
        }
        let mut offset = 0u64;
        let mut block = 1u64;
        for _ in 0..w.len() {
            offset += block;
            block *= self.cap;
        }
        Some(offset + w.iter().fold(0u64, |acc, &d| acc * self.cap + d))
    }
}
