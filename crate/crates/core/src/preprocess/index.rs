use rustc_hash::FxHashMap;

use crate::model::relation::Relation;
use crate::value::Value;

const NO_GROUP: u32 = u32::MAX;

/// Child tuples of one tree edge grouped by their join key.
///
/// Groups are stored contiguously: group `g` is
/// `members[offsets[g]..offsets[g + 1]]`. Every parent tuple records the
/// group its own key selects, if any.
#[derive(Clone, Debug, Default)]
pub struct JoinIndex {
    keys: FxHashMap<Vec<Value>, u32>,
    offsets: Vec<u32>,
    members: Vec<u32>,
    parent_group: Vec<u32>,
}

impl JoinIndex {
    /// Groups the tuples of `child` accepted by `alive` on `key_cols`, in a
    /// single pass. Group and member order follow first appearance.
    pub fn build(child: &Relation, key_cols: &[usize], alive: impl Fn(usize) -> bool) -> Self {
        let mut keys: FxHashMap<Vec<Value>, u32> = FxHashMap::default();
        let mut gid = vec![NO_GROUP; child.len()];
        let mut sizes: Vec<u32> = Vec::new();
        let mut buf: Vec<Value> = Vec::with_capacity(key_cols.len());
        for (t, g) in gid.iter_mut().enumerate() {
            if !alive(t) {
                continue;
            }
            let tuple = child.tuple(t);
            buf.clear();
            buf.extend(key_cols.iter().map(|&c| tuple[c].clone()));
            let id = match keys.get(buf.as_slice()) {
                Some(&id) => id,
                None => {
                    let id = sizes.len() as u32;
                    keys.insert(buf.clone(), id);
                    sizes.push(0);
                    id
                }
            };
            sizes[id as usize] += 1;
            *g = id;
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0u32);
        for s in &sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        let mut fill = offsets.clone();
        let mut members = vec![0u32; *offsets.last().unwrap() as usize];
        for (t, &g) in gid.iter().enumerate() {
            if g != NO_GROUP {
                members[fill[g as usize] as usize] = t as u32;
                fill[g as usize] += 1;
            }
        }
        JoinIndex {
            keys,
            offsets,
            members,
            parent_group: Vec::new(),
        }
    }

    /// The group whose key is `key`.
    pub fn lookup(&self, key: &[Value]) -> Option<u32> {
        self.keys.get(key).copied()
    }

    pub fn group_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn group(&self, g: u32) -> &[u32] {
        &self.members[self.offsets[g as usize] as usize..self.offsets[g as usize + 1] as usize]
    }

    /// Group selected by a parent tuple.
    pub fn group_of(&self, parent_tuple: u32) -> Option<u32> {
        match self.parent_group.get(parent_tuple as usize) {
            Some(&g) if g != NO_GROUP => Some(g),
            _ => None,
        }
    }

    /// Members of the group selected by a parent tuple (empty if none).
    pub fn matches(&self, parent_tuple: u32) -> &[u32] {
        self.group_of(parent_tuple).map_or(&[], |g| self.group(g))
    }

    /// Where the group selected by a parent tuple sits in `members()`.
    pub fn span(&self, parent_tuple: u32) -> std::ops::Range<usize> {
        self.group_of(parent_tuple)
            .map_or(0..0, |g| self.offsets[g as usize] as usize..self.offsets[g as usize + 1] as usize)
    }

    /// All grouped child tuples, group after group.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// Child tuples in some group.
    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub(crate) fn set_parent_groups(&mut self, groups: Vec<u32>) {
        self.parent_group = groups;
    }

    pub(crate) fn groups_mut(&mut self) -> impl Iterator<Item = &mut [u32]> {
        let offsets = &self.offsets;
        let mut rest: &mut [u32] = &mut self.members;
        offsets.windows(2).map(move |w| {
            let (head, tail) = std::mem::take(&mut rest).split_at_mut((w[1] - w[0]) as usize);
            rest = tail;
            head
        })
    }
}

pub(crate) const fn no_group() -> u32 {
    NO_GROUP
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn groups(ix: &JoinIndex, child: &Relation) -> Vec<(Vec<Value>, Vec<Vec<Value>>)> {
        let mut out: Vec<_> = ix
            .keys
            .iter()
            .map(|(k, &g)| (k.clone(), ix.group(g).iter().map(|&t| child.tuple(t as usize).to_vec()).collect()))
            .collect();
        out.sort();
        out
    }

    fn ints(vs: &[i64]) -> Vec<Value> {
        vs.iter().map(|&v| Value::Int(v)).collect()
    }

    #[test]
    fn s_grouped_on_x1() {
        let db = fixtures::example_database();
        let s = db.get("S").unwrap();
        let ix = JoinIndex::build(s, &[0], |_| true);
        assert_eq!(
            groups(&ix, s),
            vec![
                (ints(&[0]), vec![ints(&[0, 1])]),
                (ints(&[1]), vec![ints(&[1, 1]), ints(&[1, 2])]),
                (ints(&[2]), vec![ints(&[2, 3]), ints(&[2, 5])]),
            ]
        );
    }

    #[test]
    fn u_grouped_on_x4() {
        let db = fixtures::example_database();
        let u = db.get("U").unwrap();
        let ix = JoinIndex::build(u, &[0], |_| true);
        let g = groups(&ix, u);
        assert_eq!(g[0], (ints(&[2]), vec![ints(&[2, 1]), ints(&[2, 2])]));
        assert_eq!(g[1], (ints(&[3]), vec![ints(&[3, 8]), ints(&[3, 9])]));
    }

    #[test]
    fn empty_child() {
        let r = Relation::from_ints::<2>("E", &[]);
        let ix = JoinIndex::build(&r, &[0], |_| true);
        assert_eq!(ix.group_count(), 0);
        assert_eq!(ix.matches(0), &[] as &[u32]);
    }

    #[test]
    fn dead_tuples_are_left_out() {
        let db = fixtures::example_database();
        let s = db.get("S").unwrap();
        let ix = JoinIndex::build(s, &[0], |t| t != 0);
        assert_eq!(ix.group_count(), 2);
        assert_eq!(ix.member_count(), 4);
    }
}
