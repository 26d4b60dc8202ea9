use rand::RngCore;

use crate::rng::uniform_index;

const ABSENT: u32 = u32::MAX;

/// Subset of `0..universe` with O(1) insert, remove and uniform sampling.
///
/// Members live densely in `items`; `slots[x]` is the position of `x` in
/// `items` or `ABSENT`. Removal swaps the last member into the hole.
#[derive(Clone, Debug)]
pub struct IndexedSet {
    items: Vec<u32>,
    slots: Vec<u32>,
}

impl IndexedSet {
    pub fn new(universe: usize) -> Self {
        assert!(universe < ABSENT as usize, "universe too large for u32 indices");
        Self { items: Vec::new(), slots: vec![ABSENT; universe] }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.slots[x] != ABSENT
    }

    /// Returns false if `x` was already present.
    pub fn insert(&mut self, x: usize) -> bool {
        if self.contains(x) {
            return false;
        }
        self.slots[x] = self.items.len() as u32;
        self.items.push(x as u32);
        true
    }

    /// Returns false if `x` was absent.
    pub fn remove(&mut self, x: usize) -> bool {
        let slot = self.slots[x];
        if slot == ABSENT {
            return false;
        }
        let last = self.items.pop().expect("non-empty when a slot is occupied");
        if last as usize != x {
            self.items[slot as usize] = last;
            self.slots[last as usize] = slot;
        }
        self.slots[x] = ABSENT;
        true
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.items.is_empty() {
            None
        } else {
            Some(self.items[uniform_index(rng, self.items.len())] as usize)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&x| x as usize)
    }
}
