use std::cmp::Ordering;
use std::sync::Arc;

/// One entry of a partial answer: the tuple chosen at relation position
/// `level`, which is member `slot` (0-based) of its group. Earlier positions
/// are reached through `prev`, so partial answers that share a prefix share
/// its links.
#[derive(Debug)]
pub struct Link {
    pub tuple: u32,
    pub slot: u32,
    pub level: u32,
    pub prev: Option<Arc<Link>>,
}

/// A partial answer waiting in the frontier, with the weight of its best
/// completion and the root tuple of that completion, which settles most
/// equal-weight comparisons without walking the links.
#[derive(Debug)]
pub struct Candidate<W> {
    pub head: Link,
    pub prio: W,
    pub root: u32,
}

/// A binary min-heap ordered by a comparator supplied per call, so ties can be
/// broken using data the heap does not own.
#[derive(Debug)]
pub struct Heap<T> {
    data: Vec<T>,
}

impl<T> Default for Heap<T> {
    fn default() -> Self {
        Heap { data: Vec::new() }
    }
}

impl<T> Heap<T> {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn push(&mut self, item: T, cmp: &mut impl FnMut(&T, &T) -> Ordering) {
        self.data.push(item);
        let mut i = self.data.len() - 1;
        while i > 0 {
            let p = (i - 1) / 2;
            if cmp(&self.data[i], &self.data[p]) != Ordering::Less {
                break;
            }
            self.data.swap(i, p);
            i = p;
        }
    }

    /// Removes the minimum. The hole left at the top is walked down to a
    /// leaf along smaller children, and the last element is sifted up from
    /// there, which takes about half the comparisons of a plain sift-down.
    pub fn pop(&mut self, cmp: &mut impl FnMut(&T, &T) -> Ordering) -> Option<T> {
        let last = self.data.pop()?;
        if self.data.is_empty() {
            return Some(last);
        }
        let n = self.data.len();
        let mut hole = 0;
        loop {
            let l = 2 * hole + 1;
            if l >= n {
                break;
            }
            let c = if l + 1 < n && cmp(&self.data[l + 1], &self.data[l]) == Ordering::Less {
                l + 1
            } else {
                l
            };
            self.data.swap(hole, c);
            hole = c;
        }
        let top = std::mem::replace(&mut self.data[hole], last);
        while hole > 0 {
            let p = (hole - 1) / 2;
            if cmp(&self.data[hole], &self.data[p]) != Ordering::Less {
                break;
            }
            self.data.swap(hole, p);
            hole = p;
        }
        Some(top)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_sorts() {
        let mut h = Heap::default();
        let mut cmp = |a: &i32, b: &i32| a.cmp(b);
        for x in [5, 1, 4, 1, 5, 9, 2, 6, 5, 3] {
            h.push(x, &mut cmp);
        }
        let mut out = Vec::new();
        while let Some(x) = h.pop(&mut cmp) {
            out.push(x);
        }
        assert_eq!(out, [1, 1, 2, 3, 4, 5, 5, 5, 6, 9]);
    }

    #[test]
    fn heap_with_external_tiebreak() {
        let names = ["b", "a", "c"];
        let mut h = Heap::default();
        let mut cmp = |x: &(u8, usize), y: &(u8, usize)| x.0.cmp(&y.0).then(names[x.1].cmp(names[y.1]));
        h.push((1, 0), &mut cmp);
        h.push((1, 1), &mut cmp);
        h.push((0, 2), &mut cmp);
        assert_eq!(h.pop(&mut cmp), Some((0, 2)));
        assert_eq!(h.pop(&mut cmp), Some((1, 1)));
    }
}
