/// Set of node indices with O(1) insert, remove, membership and uniform
/// sampling (dense array plus position map).
#[derive(Clone, Debug)]
pub struct IndexedSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl IndexedSet {
    pub fn new(universe: usize) -> Self {
        assert!(universe < ABSENT as usize, "universe too large for u32 indices");
        IndexedSet {
            items: Vec::new(),
            pos: vec![ABSENT; universe],
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.pos[i] != ABSENT
    }

    pub fn insert(&mut self, i: usize) -> bool {
        if self.contains(i) {
            return false;
        }
        self.pos[i] = self.items.len() as u32;
        self.items.push(i as u32);
        true
    }

    pub fn remove(&mut self, i: usize) -> bool {
        let p = self.pos[i];
        if p == ABSENT {
            return false;
        }
        let last = self.items.pop().expect("non-empty when member present");
        if last as usize != i {
            self.items[p as usize] = last;
            self.pos[last as usize] = p;
        }
        self.pos[i] = ABSENT;
        true
    }

    pub fn set(&mut self, i: usize, member: bool) {
        if member {
            self.insert(i);
        } else {
            self.remove(i);
        }
    }

    /// Element at dense position `k`, `k < len()`.
    pub fn get(&self, k: usize) -> usize {
        self.items[k] as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&i| i as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn behaves_like_a_set() {
        let mut s = IndexedSet::new(50);
        let mut model = BTreeSet::new();
        let mut x = 17usize;
        for _ in 0..2000 {
            x = (x * 37 + 11) % 50;
            if x % 3 == 0 {
                assert_eq!(s.remove(x), model.remove(&x));
            } else {
                assert_eq!(s.insert(x), model.insert(x));
            }
            assert_eq!(s.len(), model.len());
            let got: BTreeSet<_> = s.iter().collect();
            assert_eq!(got, model);
        }
    }
}
