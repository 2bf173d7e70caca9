use std::cmp::Ordering;
use std::sync::Arc;

use crate::enumerate::frontier::{Candidate, Heap, Link};
use crate::preprocess::{Aggregate, Prepared};

#[derive(Debug)]
enum Frontier<W> {
    Stack(Vec<Candidate<W>>),
    Queue(Heap<Candidate<W>>),
}

/// Walks the join tree top-down, one answer per call.
///
/// A popped partial answer is completed by taking the first member of every
/// remaining group. Its alternatives are then pushed: the next member at the
/// position it was popped at, and the second member at every position it was
/// completed through. With a stack this is a depth-first traversal in group
/// order; with a priority queue keyed by best-completion weight, answers come
/// out by weight.
#[derive(Debug)]
pub struct Engine<A: Aggregate> {
    prep: Arc<Prepared<A::W>>,
    frontier: Frontier<A::W>,
    chosen: Vec<u32>,
    slot: Vec<u32>,
    chain: Vec<Option<Arc<Link>>>,
    /// `(start, len)` of the group each position draws from, into `members`.
    span: Vec<(usize, usize)>,
    /// Best-completion weights laid out like the group members, so a member
    /// and the next one are read from the same place.
    member_opt: Vec<Vec<A::W>>,
    scratch: (Vec<u32>, Vec<u32>),
    emitted: u64,
    verify: bool,
    prio_mismatches: u64,
}

impl<A: Aggregate> Engine<A> {
    /// Depth-first enumeration in group order.
    pub fn stack(prep: Arc<Prepared<A::W>>) -> Self {
        Self::start(prep, Frontier::Stack(Vec::new()))
    }

    /// Ranked enumeration by best-completion weight.
    pub fn queue(prep: Arc<Prepared<A::W>>) -> Self {
        Self::start(prep, Frontier::Queue(Heap::default()))
    }

    fn start(prep: Arc<Prepared<A::W>>, frontier: Frontier<A::W>) -> Self {
        let l = prep.plan.len();
        let member_opt = (0..l)
            .map(|pos| {
                let members = match &prep.index[pos] {
                    None => &prep.root[..],
                    Some(ix) => ix.members(),
                };
                members.iter().map(|&t| prep.opt[pos][t as usize].clone().expect("grouped tuples are alive")).collect()
            })
            .collect();
        let mut e: Engine<A> = Engine {
            span: vec![(0, 0); l],
            member_opt,
            frontier,
            chosen: vec![0; l],
            slot: vec![0; l],
            chain: vec![None; l],
            scratch: (Vec::with_capacity(l), Vec::with_capacity(l)),
            emitted: 0,
            verify: false,
            prio_mismatches: 0,
            prep,
        };
        if let Some(&first) = e.prep.root.first() {
            let prio: A::W = e.opt(0, first).clone();
            e.push(Candidate {
                head: Link {
                    tuple: first,
                    slot: 0,
                    level: 0,
                    prev: None,
                },
                prio,
                root: first,
            });
        }
        e
    }

    pub fn prepared(&self) -> &Arc<Prepared<A::W>> {
        &self.prep
    }

    /// Recompute every pushed priority from scratch and count disagreements
    /// with the incremental value.
    pub fn set_verify(&mut self, on: bool) {
        self.verify = on;
    }

    pub fn prio_mismatches(&self) -> u64 {
        self.prio_mismatches
    }

    pub fn frontier_len(&self) -> usize {
        match &self.frontier {
            Frontier::Stack(s) => s.len(),
            Frontier::Queue(h) => h.len(),
        }
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Partial answers in the frontier as `(tuple per position, priority)`.
    pub fn frontier_entries(&self) -> Vec<(Vec<u32>, A::W)> {
        let cands: Vec<&Candidate<A::W>> = match &self.frontier {
            Frontier::Stack(s) => s.iter().collect(),
            Frontier::Queue(h) => h.iter().collect(),
        };
        cands
            .into_iter()
            .map(|c| {
                let mut tuples = vec![0; c.head.level as usize + 1];
                let mut cur = Some(&c.head);
                while let Some(l) = cur {
                    tuples[l.level as usize] = l.tuple;
                    cur = l.prev.as_deref();
                }
                (tuples, c.prio.clone())
            })
            .collect()
    }

    fn opt(&self, pos: usize, t: u32) -> &A::W {
        self.prep.opt[pos][t as usize].as_ref().expect("grouped tuples are alive")
    }

    fn group_span(&self, pos: usize) -> (usize, usize) {
        match self.prep.plan.nodes[pos].parent {
            None => (0, self.prep.root.len()),
            Some(p) => {
                let r = self.prep.index[pos].as_ref().expect("non-root index").span(self.chosen[p]);
                (r.start, r.len())
            }
        }
    }

    fn member(&self, pos: usize, i: usize) -> u32 {
        match &self.prep.index[pos] {
            None => self.prep.root[i],
            Some(ix) => ix.members()[i],
        }
    }

    fn push(&mut self, c: Candidate<A::W>) {
        match &mut self.frontier {
            Frontier::Stack(s) => s.push(c),
            Frontier::Queue(h) => {
                let (prep, ranks) = (&self.prep, &self.prep.tie_rank);
                let (a, b) = &mut self.scratch;
                h.push(c, &mut |x, y| compare::<A>(prep, ranks, x, y, a, b));
            }
        }
    }

    fn pop(&mut self) -> Option<Candidate<A::W>> {
        match &mut self.frontier {
            Frontier::Stack(s) => s.pop(),
            Frontier::Queue(h) => {
                let (prep, ranks) = (&self.prep, &self.prep.tie_rank);
                let (a, b) = &mut self.scratch;
                h.pop(&mut |x, y| compare::<A>(prep, ranks, x, y, a, b))
            }
        }
    }

    /// Weight of the best completion after swapping the tuple at `pos` for
    /// `new`, from scratch: own weights of the positions before it, `new`'s
    /// best subtree, and the best subtrees hanging off earlier positions.
    pub(crate) fn rederive_prio(&self, pos: usize, new: u32) -> A::W {
        let nodes = &self.prep.plan.nodes;
        let mut acc = self.opt(pos, new).clone();
        for k in 0..pos {
            acc = A::combine(&acc, &self.prep.weight[k][self.chosen[k] as usize]);
        }
        for c in pos + 1..nodes.len() {
            if nodes[c].parent.is_some_and(|p| p < pos) {
                acc = A::combine(&acc, self.opt(c, self.chosen[c]));
            }
        }
        acc
    }

    /// Priority after replacing the member at `old` of position `pos`'s
    /// group by the one at `new` (indexes into `member_opt`).
    fn prio_after_swap(&mut self, total: &A::W, pos: usize, old: usize, new: usize, tuple: u32) -> A::W {
        let opt = &self.member_opt[pos];
        match A::swap(total, &opt[old], &opt[new]) {
            Some(p) => {
                if self.verify && A::cmp(&p, &self.rederive_prio(pos, tuple)) != Ordering::Equal {
                    self.prio_mismatches += 1;
                }
                p
            }
            None => self.rederive_prio(pos, tuple),
        }
    }

    /// The next answer as one tuple id per position, with its weight.
    pub fn next_answer(&mut self) -> Option<(&[u32], A::W)> {
        let cand = self.pop()?;
        let l = self.prep.plan.len();
        let r = cand.head.level as usize;
        let mut cur = Some(&cand.head);
        while let Some(link) = cur {
            let lv = link.level as usize;
            self.chosen[lv] = link.tuple;
            self.slot[lv] = link.slot;
            cur = link.prev.as_deref();
        }
        for i in r..l {
            let sp = self.group_span(i);
            self.span[i] = sp;
            if i > r {
                self.chosen[i] = self.member(i, sp.0);
                self.slot[i] = 0;
            }
        }
        // Links are only needed up to the last position that has a variant.
        let Some(last) = (r..l).rev().find(|&i| self.span[i].1 > self.slot[i] as usize + 1) else {
            self.emitted += 1;
            return Some((&self.chosen, cand.prio));
        };
        if last > r {
            let h = &cand.head;
            self.chain[r] = Some(Arc::new(Link {
                tuple: h.tuple,
                slot: h.slot,
                level: h.level,
                prev: h.prev.clone(),
            }));
        }
        for i in r + 1..last {
            self.chain[i] = Some(Arc::new(Link {
                tuple: self.chosen[i],
                slot: 0,
                level: i as u32,
                prev: self.chain[i - 1].clone(),
            }));
        }
        for i in r..=last {
            let (start, len) = self.span[i];
            let slot = self.slot[i] as usize;
            if slot + 1 >= len {
                continue;
            }
            let next = self.member(i, start + slot + 1);
            let prio = self.prio_after_swap(&cand.prio, i, start + slot, start + slot + 1, next);
            let prev = if i == r {
                cand.head.prev.clone()
            } else {
                self.chain[i - 1].clone()
            };
            let root = if i == 0 { next } else { self.chosen[0] };
            self.push(Candidate {
                head: Link {
                    tuple: next,
                    slot: slot as u32 + 1,
                    level: i as u32,
                    prev,
                },
                prio,
                root,
            });
        }
        for c in &mut self.chain[r..last] {
            *c = None;
        }
        self.emitted += 1;
        Some((&self.chosen, cand.prio))
    }
}

/// Completes a partial answer with first group members.
fn representative<W>(prep: &Prepared<W>, head: &Link, out: &mut Vec<u32>) {
    let l = prep.plan.len();
    out.clear();
    out.resize(l, 0);
    let mut cur = Some(head);
    while let Some(link) = cur {
        out[link.level as usize] = link.tuple;
        cur = link.prev.as_deref();
    }
    for i in head.level as usize + 1..l {
        let p = prep.plan.nodes[i].parent.expect("non-root");
        out[i] = prep.index[i].as_ref().expect("non-root index").matches(out[p])[0];
    }
}

/// Priority first; equal priorities are ordered by the answers the two
/// candidates would produce, compared on the variables each position
/// introduces.
fn compare<A: Aggregate>(
    prep: &Prepared<A::W>,
    ranks: &[Vec<u32>],
    x: &Candidate<A::W>,
    y: &Candidate<A::W>,
    a: &mut Vec<u32>,
    b: &mut Vec<u32>,
) -> Ordering {
    A::cmp(&x.prio, &y.prio).then_with(|| {
        // Most ties are settled at the root without walking the links.
        let o = ranks[0][x.root as usize].cmp(&ranks[0][y.root as usize]);
        if o.is_ne() {
            return o;
        }
        representative(prep, &x.head, a);
        representative(prep, &y.head, b);
        (1..ranks.len())
            .map(|i| ranks[i][a[i] as usize].cmp(&ranks[i][b[i] as usize]))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}
