/// Fixed-size bitset of visited node ids.
#[derive(Debug, Clone)]
pub(crate) struct Visited {
    bits: Vec<u64>,
}

impl Visited {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            bits: vec![0; n.div_ceil(64)],
        }
    }

    /// Marks `id`; returns true if it was not marked before.
    #[inline]
    pub(crate) fn insert(&mut self, id: u32) -> bool {
        let (word, bit) = ((id / 64) as usize, id % 64);
        let mask = 1u64 << bit;
        let fresh = self.bits[word] & mask == 0;
        self.bits[word] |= mask;
        fresh
    }

    #[inline]
    pub(crate) fn contains(&self, id: u32) -> bool {
        self.bits[(id / 64) as usize] & (1u64 << (id % 64)) != 0
    }

    /// Lowest unmarked id at or after `from`, below `n`.
    pub(crate) fn first_unvisited(&self, from: u32, n: usize) -> Option<u32> {
        let mut id = from as usize;
        while id < n {
            let word = self.bits[id / 64] >> (id % 64);
            if word == u64::MAX >> (id % 64) {
                id = (id / 64 + 1) * 64;
                continue;
            }
            let skip = (!word).trailing_zeros() as usize;
            id += skip;
            return (id < n).then_some(id as u32);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_scan() {
        let mut v = Visited::new(130);
        assert!(v.insert(0));
        assert!(!v.insert(0));
        for i in 1..70 {
            v.insert(i);
        }
        assert_eq!(v.first_unvisited(0, 130), Some(70));
        v.insert(129);
        for i in 70..129 {
            v.insert(i);
        }
        assert_eq!(v.first_unvisited(0, 130), None);
        assert!(v.contains(129));
    }
}
