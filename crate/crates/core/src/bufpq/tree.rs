//! Buffer tree with branching factor `l = lambda * M / B`.
//!
//! Internal nodes have between `l/4` and `l` children (the root may have
//! fewer) and `c - 1` routing keys kept in secondary memory; child `i` holds
//! the records in `(key[i-1], key[i]]` (with equal keys, a record equal to
//! `key[i-1]` may also sit in child `i`). Leaves hold a sorted run of between
//! `lB/4` and `lB` records. Every node has a buffer of records still on
//! their way down; a buffer is full once it holds `lB` records.
//!
//! Node metadata (child lists, parent links, array handles) plays the role
//! of pointers and is not charged. Keys, buffers and leaf contents are
//! moved only by block transfers.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{ArenaBuf, BlockReader, BlockWriter, ExtArray, Machine};
use crate::selection::{selection_sort, Order};

pub type NodeId = usize;

#[derive(Debug, Clone)]
struct Node<T> {
    parent: Option<NodeId>,
    /// Empty for leaves.
    children: Vec<NodeId>,
    /// `children.len() - 1` routing keys (internal nodes only).
    keys: ExtArray<T>,
    buffer: ExtArray<T>,
    /// `buffer[sorted_from..]` is sorted.
    sorted_from: usize,
    /// Sorted contents (leaves only).
    items: ExtArray<T>,
    /// Largest item of a leaf, kept with the node's pointers.
    leaf_max: Option<T>,
    leaf: bool,
}

impl<T: Copy> Node<T> {
    fn new_leaf(b: usize, parent: Option<NodeId>) -> Self {
        Node {
            parent,
            children: Vec::new(),
            keys: ExtArray::new(b),
            buffer: ExtArray::new(b),
            sorted_from: 0,
            items: ExtArray::new(b),
            leaf_max: None,
            leaf: true,
        }
    }

    fn new_internal(b: usize, parent: Option<NodeId>, children: Vec<NodeId>, keys: ExtArray<T>) -> Self {
        Node {
            parent,
            children,
            keys,
            buffer: ExtArray::new(b),
            sorted_from: 0,
            items: ExtArray::new(b),
            leaf_max: None,
            leaf: false,
        }
    }
}

/// Counters and worst observed per-emptying cost ratios.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeStats {
    pub emptyings: u64,
    pub leaf_merges: u64,
    pub splits: u64,
    pub fuses: u64,
    pub shares: u64,
    pub leaves_removed: u64,
    /// Max over full-buffer emptyings of reads / (lambda^2 M/B + lambda X/B).
    pub empty_read_ratio: f64,
    /// Max over full-buffer emptyings of writes / (lambda M/B + X/B).
    pub empty_write_ratio: f64,
}

#[derive(Debug)]
pub struct BufferTree<T> {
    nodes: Vec<Option<Node<T>>>,
    root: NodeId,
    /// Partially filled last block of the root buffer.
    root_tail: ArenaBuf<T>,
    scratch: ArenaBuf<T>,
    b: usize,
    l: usize,
    lb: usize,
    lambda: usize,
    m: usize,
    /// Records per selection pass when sorting a buffer prefix.
    work: usize,
    size: usize,
    pub stats: TreeStats,
}

/// Appends a sorted run to the end of one node's buffer, completing its
/// partial last block first.
struct Appender<T> {
    node: NodeId,
    buffer: ExtArray<T>,
    block: ArenaBuf<T>,
}

impl<T: Copy + Ord> BufferTree<T> {
    /// An empty tree. Requires `l = lambda M / B >= 4` and `M / B` even.
    pub fn new(m: &mut Machine) -> Result<Self> {
        let cfg = *m.config();
        let l = cfg.fanout();
        if l < 4 {
            return Err(Error::Config("buffer tree needs lambda * M / B >= 4"));
        }
        if (cfg.m / cfg.b) % 2 != 0 {
            return Err(Error::Config("buffer tree needs an even number of blocks in M"));
        }
        let root_tail = m.alloc(cfg.b)?;
        let scratch = m.alloc(cfg.b)?;
        Ok(BufferTree {
            nodes: alloc::vec![Some(Node::new_leaf(cfg.b, None))],
            root: 0,
            root_tail,
            scratch,
            b: cfg.b,
            l,
            lb: l * cfg.b,
            lambda: cfg.lambda,
            m: cfg.m,
            work: cfg.m / 2,
            size: 0,
            stats: TreeStats::default(),
        })
    }

    /// Releases the tree's resident blocks.
    pub fn close(self, m: &mut Machine) {
        m.free(self.root_tail);
        m.free(self.scratch);
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn fanout(&self) -> usize {
        self.l
    }

    fn node(&self, id: NodeId) -> &Node<T> {
        self.nodes[id].as_ref().expect("live node")
    }

    fn node_mut(&mut self, id: NodeId) -> &mut Node<T> {
        self.nodes[id].as_mut().expect("live node")
    }

    fn add_node(&mut self, n: Node<T>) -> NodeId {
        self.nodes.push(Some(n));
        self.nodes.len() - 1
    }

    fn is_full(&self, id: NodeId) -> bool {
        let n = self.node(id);
        let extra = if id == self.root { self.root_tail.len() } else { 0 };
        n.buffer.len() + extra >= self.lb
    }

    /// Appends `x` to the root buffer, emptying buffers as they fill.
    pub fn insert(&mut self, m: &mut Machine, x: T) -> Result<()> {
        self.size += 1;
        self.root_tail.push(x);
        if self.root_tail.len() == self.b {
            self.flush_root_tail(m)?;
        }
        if self.is_full(self.root) {
            self.flush_root_tail(m)?;
            self.cascade(m, None)?;
        }
        Ok(())
    }

    fn flush_root_tail(&mut self, m: &mut Machine) -> Result<()> {
        if self.root_tail.is_empty() {
            return Ok(());
        }
        let root = self.root;
        let b = self.b;
        let mut buffer = core::mem::replace(&mut self.node_mut(root).buffer, ExtArray::new(b));
        m.extend(&mut buffer, &self.root_tail, &mut self.scratch)?;
        self.root_tail.clear();
        let n = self.node_mut(root);
        n.sorted_from = buffer.len();
        n.buffer = buffer;
        Ok(())
    }

    /// Empties full buffers top-down (first phase), then merges every full
    /// leaf into its contents, splitting as needed (second phase). With
    /// `forced`, that node is emptied (or merged, for a leaf) even if it is
    /// not full.
    fn cascade(&mut self, m: &mut Machine, forced: Option<NodeId>) -> Result<()> {
        let start = forced.unwrap_or(self.root);
        if start == self.root {
            self.flush_root_tail(m)?;
        }
        let mut queue = VecDeque::new();
        let mut full_leaves = Vec::new();
        if self.node(start).leaf {
            full_leaves.push(start);
        } else {
            queue.push_back(start);
        }
        let mut first = true;
        while let Some(u) = queue.pop_front() {
            let go = (first && forced.is_some()) || self.is_full(u);
            first = false;
            if !go {
                continue;
            }
            for c in self.empty_internal(m, u)? {
                if self.node(c).leaf {
                    full_leaves.push(c);
                } else {
                    queue.push_back(c);
                }
            }
        }
        for leaf in full_leaves {
            let alive = self.nodes[leaf].is_some();
            if alive && (forced == Some(leaf) || self.is_full(leaf)) {
                self.merge_leaf(m, leaf)?;
            }
        }
        Ok(())
    }

    /// Splits `buf` after the first `lB` records (or at the start of its
    /// sorted suffix, if later), rounded up to a block boundary, and sorts
    /// the first part. Returns the two sorted pieces.
    fn sort_prefix(&mut self, m: &mut Machine, mut buf: ExtArray<T>, sorted_from: usize) -> Result<(ExtArray<T>, ExtArray<T>)> {
        let x = buf.len();
        let p = x.min(self.lb).max(sorted_from.min(x));
        let p_blocks = p.div_ceil(self.b);
        let tail = if p_blocks * self.b >= x {
            ExtArray::new(self.b)
        } else {
            buf.split_off_blocks(p_blocks)
        };
        let sorted = selection_sort(m, &buf, self.work, Order::Ascending, usize::MAX)?;
        Ok((sorted, tail))
    }

    /// Empties the buffer of internal node `u` into its children. Returns
    /// the children whose buffers became full.
    fn empty_internal(&mut self, m: &mut Machine, u: NodeId) -> Result<Vec<NodeId>> {
        let (buf, sf) = {
            let b = self.b;
            let n = self.node_mut(u);
            let buf = core::mem::replace(&mut n.buffer, ExtArray::new(b));
            let sf = n.sorted_from;
            n.sorted_from = 0;
            (buf, sf)
        };
        let x = buf.len();
        if x == 0 {
            return Ok(Vec::new());
        }
        self.stats.emptyings += 1;
        let before = m.counters();
        let (prefix, tail) = self.sort_prefix(m, buf, sf)?;
        let children = self.node(u).children.clone();
        let keys = self.node(u).keys.clone();

        let mut a = BlockReader::new(m, &prefix)?;
        let mut t = BlockReader::new(m, &tail)?;
        let mut k = BlockReader::new(m, &keys)?;
        let mut j = 0;
        let mut upper = k.next(m)?;
        let mut app: Option<Appender<T>> = None;
        let mut touched = Vec::new();
        loop {
            let r = match (a.peek(m)?, t.peek(m)?) {
                (None, None) => break,
                (Some(p), None) => {
                    a.next(m)?;
                    p
                }
                (None, Some(q)) => {
                    t.next(m)?;
                    q
                }
                (Some(p), Some(q)) => {
                    if p < q {
                        a.next(m)?;
                        p
                    } else {
                        t.next(m)?;
                        q
                    }
                }
            };
            while upper.is_some_and(|key| r > key) {
                if let Some(ap) = app.take() {
                    self.finish_append(m, ap)?;
                }
                j += 1;
                upper = k.next(m)?;
            }
            if app.is_none() {
                app = Some(self.start_append(m, children[j])?);
                touched.push(children[j]);
            }
            let ap = app.as_mut().expect("active appender");
            ap.block.push(r);
            if ap.block.len() == self.b {
                m.append_block(&mut ap.buffer, &ap.block)?;
                ap.block.clear();
            }
        }
        if let Some(ap) = app.take() {
            self.finish_append(m, ap)?;
        }
        a.finish(m);
        t.finish(m);
        k.finish(m);

        if x >= self.lb {
            let used = m.counters().since(&before);
            let lam = self.lambda as f64;
            let mb = self.m as f64 / self.b as f64;
            let xb = x as f64 / self.b as f64;
            let rr = used.block_reads as f64 / (lam * lam * mb + lam * xb);
            let wr = used.block_writes as f64 / (lam * mb + xb);
            self.stats.empty_read_ratio = self.stats.empty_read_ratio.max(rr);
            self.stats.empty_write_ratio = self.stats.empty_write_ratio.max(wr);
        }
        Ok(touched.into_iter().filter(|&c| self.is_full(c)).collect())
    }

    fn start_append(&mut self, m: &mut Machine, child: NodeId) -> Result<Appender<T>> {
        let b = self.b;
        let n = self.node_mut(child);
        let mut buffer = core::mem::replace(&mut n.buffer, ExtArray::new(b));
        n.sorted_from = buffer.len();
        let mut block = m.alloc(b)?;
        let partial = buffer.len() % b;
        if partial != 0 {
            let last = buffer.num_blocks() - 1;
            m.read_block(&buffer, last, &mut block)?;
            buffer.truncate(last * b);
        }
        Ok(Appender {
            node: child,
            buffer,
            block,
        })
    }

    fn finish_append(&mut self, m: &mut Machine, mut ap: Appender<T>) -> Result<()> {
        if !ap.block.is_empty() {
            m.append_block(&mut ap.buffer, &ap.block)?;
        }
        m.free(ap.block);
        self.node_mut(ap.node).buffer = ap.buffer;
        Ok(())
    }

    /// Merges the buffer of leaf `id` into its items. A result larger than
    /// `lB` is cut into `ceil(2X / lB)` leaves of nearly equal size.
    fn merge_leaf(&mut self, m: &mut Machine, id: NodeId) -> Result<()> {
        let (buf, sf, items) = {
            let b = self.b;
            let n = self.node_mut(id);
            let buf = core::mem::replace(&mut n.buffer, ExtArray::new(b));
            let items = core::mem::replace(&mut n.items, ExtArray::new(b));
            let sf = n.sorted_from;
            n.sorted_from = 0;
            (buf, sf, items)
        };
        if buf.is_empty() {
            self.node_mut(id).items = items;
            return Ok(());
        }
        self.stats.leaf_merges += 1;
        let (prefix, tail) = self.sort_prefix(m, buf, sf)?;
        let x = prefix.len() + tail.len() + items.len();
        let k = if x <= self.lb { 1 } else { (2 * x).div_ceil(self.lb) };

        let mut readers = [
            BlockReader::new(m, &prefix)?,
            BlockReader::new(m, &tail)?,
            BlockReader::new(m, &items)?,
        ];
        let mut pieces = Vec::with_capacity(k);
        let mut maxima = Vec::with_capacity(k);
        for i in 0..k {
            let want = x / k + usize::from(i < x % k);
            let mut w = BlockWriter::new(m)?;
            for _ in 0..want {
                let mut best: Option<(usize, T)> = None;
                for (ri, r) in readers.iter_mut().enumerate() {
                    if let Some(v) = r.peek(m)? {
                        if best.is_none_or(|(_, bv)| v < bv) {
                            best = Some((ri, v));
                        }
                    }
                }
                let (ri, v) = best.expect("merge inputs hold x records");
                readers[ri].next(m)?;
                w.push(m, v)?;
            }
            maxima.push(w.last());
            pieces.push(w.finish(m)?);
        }
        for r in readers {
            r.finish(m);
        }

        let mut pieces = pieces.into_iter();
        {
            let n = self.node_mut(id);
            n.items = pieces.next().expect("at least one piece");
            n.leaf_max = maxima[0];
        }
        if k > 1 {
            let parent = self.node(id).parent;
            let mut new_ids = Vec::with_capacity(k - 1);
            for (i, p) in pieces.enumerate() {
                let mut leaf = Node::new_leaf(self.b, parent);
                leaf.items = p;
                leaf.leaf_max = maxima[i + 1];
                new_ids.push(self.add_node(leaf));
            }
            let seps: Vec<T> = maxima[..k - 1].iter().map(|v| v.expect("pieces are non-empty")).collect();
            self.stats.splits += (k - 1) as u64;
            self.insert_siblings(m, id, &new_ids, &seps)?;
        }
        Ok(())
    }

    /// Places `new_ids` right after `id` under `id`'s parent, with `seps[i]`
    /// separating the `i`-th and `(i+1)`-th of `[id, new_ids..]`. Grows a new
    /// root when `id` is the root and splits an overfull parent.
    fn insert_siblings(&mut self, m: &mut Machine, id: NodeId, new_ids: &[NodeId], seps: &[T]) -> Result<()> {
        match self.node(id).parent {
            None => {
                let mut children = alloc::vec![id];
                children.extend_from_slice(new_ids);
                let keys = m.write_all(seps)?;
                let root = self.add_node(Node::new_internal(self.b, None, children, keys));
                self.node_mut(id).parent = Some(root);
                for &c in new_ids {
                    self.node_mut(c).parent = Some(root);
                }
                self.root = root;
                Ok(())
            }
            Some(p) => {
                let pos = self.child_pos(p, id);
                let mut keys = m.read_all(&self.node(p).keys)?;
                let mut grown = m.alloc::<T>(keys.len() + seps.len())?;
                grown.extend_from_slice(&keys[..pos]);
                grown.extend_from_slice(seps);
                grown.extend_from_slice(&keys[pos..]);
                keys.clear();
                m.free(keys);
                let new_keys = m.write_all(&grown)?;
                m.free(grown);
                for &c in new_ids {
                    self.node_mut(c).parent = Some(p);
                }
                let n = self.node_mut(p);
                n.keys = new_keys;
                let tail: Vec<NodeId> = n.children.split_off(pos + 1);
                n.children.extend_from_slice(new_ids);
                n.children.extend(tail);
                if self.node(p).children.len() > self.l {
                    self.split_internal(m, p)?;
                }
                Ok(())
            }
        }
    }

    fn child_pos(&self, parent: NodeId, child: NodeId) -> usize {
        self.node(parent)
            .children
            .iter()
            .position(|&c| c == child)
            .expect("child is listed under its parent")
    }

    /// Splits internal node `u` with more than `l` children into
    /// `ceil(2c / l)` nodes of nearly equal fan-out.
    fn split_internal(&mut self, m: &mut Machine, u: NodeId) -> Result<()> {
        let c = self.node(u).children.len();
        let k = (2 * c).div_ceil(self.l);
        let keys = m.read_all(&self.node(u).keys)?;
        let children = core::mem::take(&mut self.node_mut(u).children);
        let mut groups = Vec::with_capacity(k);
        let mut group_keys = Vec::with_capacity(k);
        let mut seps = Vec::with_capacity(k - 1);
        let mut start = 0;
        for i in 0..k {
            let size = c / k + usize::from(i < c % k);
            let end = start + size;
            groups.push(children[start..end].to_vec());
            group_keys.push(keys[start..end - 1].to_vec());
            if end < c {
                seps.push(keys[end - 1]);
            }
            start = end;
        }
        m.free(keys);
        let (buf, sf) = {
            let b = self.b;
            let n = self.node_mut(u);
            (core::mem::replace(&mut n.buffer, ExtArray::new(b)), n.sorted_from)
        };
        let mut bufs = self.partition_buffer(m, &buf, &seps)?.into_iter();

        let parent = self.node(u).parent;
        let mut groups = groups.into_iter();
        let mut group_keys = group_keys.into_iter();
        let first_keys = m.write_all(&group_keys.next().expect("k >= 2"))?;
        {
            let b0 = bufs.next().expect("k >= 2");
            let n = self.node_mut(u);
            n.children = groups.next().expect("k >= 2");
            n.keys = first_keys;
            n.sorted_from = if b0.len() == buf.len() { sf } else { b0.len() };
            n.buffer = b0;
        }
        let mut new_ids = Vec::with_capacity(k - 1);
        for ((g, gk), gb) in groups.zip(group_keys).zip(bufs) {
            let keys = m.write_all(&gk)?;
            let mut node = Node::new_internal(self.b, parent, g, keys);
            node.sorted_from = gb.len();
            node.buffer = gb;
            let id = self.add_node(node);
            let kids = self.node(id).children.clone();
            for c in kids {
                self.node_mut(c).parent = Some(id);
            }
            new_ids.push(id);
        }
        self.stats.splits += (k - 1) as u64;
        self.insert_siblings(m, u, &new_ids, &seps)
    }

    /// Splits a buffer by the separators: piece `i` gets the records in
    /// `(seps[i-1], seps[i]]`. Order within each piece is preserved.
    fn partition_buffer(&mut self, m: &mut Machine, buf: &ExtArray<T>, seps: &[T]) -> Result<Vec<ExtArray<T>>> {
        if buf.is_empty() {
            return Ok((0..=seps.len()).map(|_| ExtArray::new(self.b)).collect());
        }
        // one pass per piece keeps a single output block resident
        let mut out = Vec::with_capacity(seps.len() + 1);
        for i in 0..=seps.len() {
            let mut w = BlockWriter::new(m)?;
            let mut r = BlockReader::new(m, buf)?;
            while let Some(v) = r.next(m)? {
                let lo_ok = i == 0 || v > seps[i - 1];
                let hi_ok = i == seps.len() || v <= seps[i];
                if lo_ok && hi_ok {
                    w.push(m, v)?;
                }
            }
            r.finish(m);
            out.push(w.finish(m)?);
        }
        Ok(out)
    }

    /// Empties every buffer on the root-to-leftmost-leaf path, merges the
    /// leftmost leaf and removes it. Returns its sorted contents and their
    /// maximum.
    pub fn take_leftmost_leaf(&mut self, m: &mut Machine) -> Result<(ExtArray<T>, Option<T>)> {
        if self.size == 0 {
            return Err(Error::EmptyQueue);
        }
        self.flush_root_tail(m)?;
        let mut u = self.root;
        loop {
            let leaf = self.node(u).leaf;
            if !self.node(u).buffer.is_empty() {
                self.cascade(m, Some(u))?;
            }
            if leaf {
                break;
            }
            u = self.node(u).children[0];
        }
        self.stats.leaves_removed += 1;
        let (items, max) = {
            let b = self.b;
            let n = self.node_mut(u);
            (core::mem::replace(&mut n.items, ExtArray::new(b)), n.leaf_max.take())
        };
        self.size -= items.len();
        self.remove_leftmost_child_chain(m, u)?;
        Ok((items, max))
    }

    /// Removes node `u`, the leftmost child of its parent, and repairs the
    /// fan-out of its ancestors.
    fn remove_leftmost_child_chain(&mut self, m: &mut Machine, u: NodeId) -> Result<()> {
        let Some(p) = self.node(u).parent else {
            // the root leaf: the tree is now empty
            self.nodes[u] = None;
            self.root = self.add_node(Node::new_leaf(self.b, None));
            return Ok(());
        };
        debug_assert_eq!(self.node(p).children[0], u);
        self.nodes[u] = None;
        let b = self.b;
        let keys = core::mem::replace(&mut self.node_mut(p).keys, ExtArray::new(b));
        let mut kv = m.read_all(&keys)?;
        let rest: Vec<T> = kv.iter().skip(1).copied().collect();
        kv.clear();
        m.free(kv);
        let new_keys = m.write_all(&rest)?;
        {
            let n = self.node_mut(p);
            n.children.remove(0);
            n.keys = new_keys;
        }
        self.rebalance(m, p)
    }

    fn min_fanout(&self) -> usize {
        (self.l / 4).max(1)
    }

    /// Restores the fan-out of `p` after it lost its leftmost child.
    fn rebalance(&mut self, m: &mut Machine, p: NodeId) -> Result<()> {
        let cp = self.node(p).children.len();
        let Some(gp) = self.node(p).parent else {
            match cp {
                0 => {
                    self.nodes[p] = None;
                    self.root = self.add_node(Node::new_leaf(self.b, None));
                }
                1 => {
                    let child = self.node(p).children[0];
                    debug_assert!(self.node(p).buffer.is_empty());
                    self.nodes[p] = None;
                    self.node_mut(child).parent = None;
                    self.root = child;
                }
                _ => {}
            }
            return Ok(());
        };
        if cp == 0 {
            debug_assert!(self.node(p).buffer.is_empty());
            return self.remove_leftmost_child_chain(m, p);
        }
        if cp >= self.min_fanout() {
            return Ok(());
        }
        let pos = self.child_pos(gp, p);
        if pos + 1 >= self.node(gp).children.len() {
            return Ok(());
        }
        let s = self.node(gp).children[pos + 1];
        let cs = self.node(s).children.len();
        let gkeys = m.read_all(&self.node(gp).keys)?;
        let sep = gkeys[pos];
        if cp + cs <= self.l {
            self.stats.fuses += 1;
            let pk = m.read_all(&self.node(p).keys)?;
            let sk = m.read_all(&self.node(s).keys)?;
            let mut joined = m.alloc::<T>(pk.len() + 1 + sk.len())?;
            joined.extend_from_slice(&pk);
            joined.push(sep);
            joined.extend_from_slice(&sk);
            m.free(pk);
            m.free(sk);
            let keys = m.write_all(&joined)?;
            m.free(joined);
            let mut gk = m.alloc::<T>(gkeys.len() - 1)?;
            gk.extend(gkeys.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, &k)| k));
            m.free(gkeys);
            let new_gkeys = m.write_all(&gk)?;
            m.free(gk);

            let snode = self.nodes[s].take().expect("live sibling");
            for &c in &snode.children {
                self.node_mut(c).parent = Some(p);
            }
            let b = self.b;
            let pbuf = core::mem::replace(&mut self.node_mut(p).buffer, ExtArray::new(b));
            let (buffer, sorted_from) = if pbuf.is_empty() {
                (snode.buffer, snode.sorted_from)
            } else {
                let mut joined = pbuf;
                self.append_stream(m, &mut joined, &snode.buffer)?;
                let len = joined.len();
                (joined, len)
            };
            {
                let n = self.node_mut(p);
                n.children.extend_from_slice(&snode.children);
                n.keys = keys;
                n.buffer = buffer;
                n.sorted_from = sorted_from;
            }
            {
                let g = self.node_mut(gp);
                g.children.remove(pos + 1);
                g.keys = new_gkeys;
            }
            self.rebalance(m, gp)
        } else {
            self.stats.shares += 1;
            let t = (cp + cs) / 2 - cp;
            let pk = m.read_all(&self.node(p).keys)?;
            let sk = m.read_all(&self.node(s).keys)?;
            let new_sep = sk[t - 1];
            let mut pj = m.alloc::<T>(pk.len() + t)?;
            pj.extend_from_slice(&pk);
            pj.push(sep);
            pj.extend_from_slice(&sk[..t - 1]);
            let pkeys = m.write_all(&pj)?;
            let skeys = m.write_all(&sk[t..])?;
            m.free(pj);
            m.free(pk);
            m.free(sk);
            let mut gk = gkeys;
            gk[pos] = new_sep;
            let new_gkeys = m.write_all(&gk)?;
            m.free(gk);

            let moved: Vec<NodeId> = self.node_mut(s).children.drain(..t).collect();
            for &c in &moved {
                self.node_mut(c).parent = Some(p);
            }
            let b = self.b;
            let sbuf = core::mem::replace(&mut self.node_mut(s).buffer, ExtArray::new(b));
            let mut parts = self.partition_buffer(m, &sbuf, &[new_sep])?.into_iter();
            let low = parts.next().expect("two parts");
            let high = parts.next().expect("two parts");
            let b = self.b;
            let pbuf = core::mem::replace(&mut self.node_mut(p).buffer, ExtArray::new(b));
            let low = if pbuf.is_empty() {
                low
            } else {
                let mut joined = pbuf;
                self.append_stream(m, &mut joined, &low)?;
                joined
            };
            {
                let n = self.node_mut(p);
                n.children.extend(moved);
                n.keys = pkeys;
                n.sorted_from = low.len();
                n.buffer = low;
            }
            {
                let n = self.node_mut(s);
                n.keys = skeys;
                n.sorted_from = high.len();
                n.buffer = high;
            }
            self.node_mut(gp).keys = new_gkeys;
            Ok(())
        }
    }

    /// Appends `src` to `dst` one block at a time.
    fn append_stream(&mut self, m: &mut Machine, dst: &mut ExtArray<T>, src: &ExtArray<T>) -> Result<()> {
        let mut stage = m.alloc::<T>(self.b)?;
        for i in 0..src.num_blocks() {
            m.read_block(src, i, &mut stage)?;
            m.extend(dst, &stage, &mut self.scratch)?;
        }
        m.free(stage);
        Ok(())
    }

    /// Height of the tree (a lone leaf has height 1).
    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut u = self.root;
        while !self.node(u).leaf {
            u = self.node(u).children[0];
            h += 1;
        }
        h
    }

    /// Checks the structural invariants without charging transfers:
    /// uniform leaf depth, fan-out bounds, parent links, sorted leaves,
    /// routing-key consistency and the record count. For tests only.
    pub fn check_invariants(&self) -> core::result::Result<(), &'static str> {
        let mut count = self.root_tail.len();
        let mut leaf_depth = None;
        let mut stack = alloc::vec![(self.root, 1usize, None::<T>, None::<T>)];
        while let Some((u, d, lo, hi)) = stack.pop() {
            let n = self.node(u);
            count += n.buffer.len();
            let in_range = |v: &T| lo.is_none_or(|l| *v >= l) && hi.is_none_or(|h| *v <= h);
            if !n.buffer.inspect().iter().all(in_range) {
                return Err("buffer record outside its subtree range");
            }
            if !crate::model::is_sorted(&n.buffer.inspect()[n.sorted_from.min(n.buffer.len())..]) {
                return Err("buffer suffix not sorted");
            }
            if n.leaf {
                count += n.items.len();
                if !crate::model::is_sorted(n.items.inspect()) {
                    return Err("leaf items not sorted");
                }
                if !n.items.inspect().iter().all(in_range) {
                    return Err("leaf item outside its range");
                }
                if n.items.inspect().last().copied() != n.leaf_max {
                    return Err("stale leaf maximum");
                }
                if n.items.len() > self.lb {
                    return Err("leaf overfull");
                }
                match leaf_depth {
                    None => leaf_depth = Some(d),
                    Some(x) if x != d => return Err("leaves at different depths"),
                    _ => {}
                }
            } else {
                let c = n.children.len();
                if c > self.l {
                    return Err("node has too many children");
                }
                if u != self.root && c < self.min_fanout() {
                    return Err("node has too few children");
                }
                if u == self.root && c < 2 {
                    return Err("internal root with fewer than two children");
                }
                let keys = n.keys.inspect();
                if keys.len() + 1 != c || !crate::model::is_sorted(keys) {
                    return Err("routing keys inconsistent");
                }
                for (i, &ch) in n.children.iter().enumerate() {
                    if self.node(ch).parent != Some(u) {
                        return Err("broken parent link");
                    }
                    let clo = if i == 0 { lo } else { Some(keys[i - 1]) };
                    let chi = if i + 1 == c { hi } else { Some(keys[i]) };
                    stack.push((ch, d + 1, clo, chi));
                }
            }
        }
        if count != self.size {
            return Err("record count mismatch");
        }
        Ok(())
    }

    /// All records held by the tree, uncharged. For tests only.
    pub fn inspect_all(&self) -> Vec<T> {
        let mut v: Vec<T> = self.root_tail.to_vec();
        for n in self.nodes.iter().flatten() {
            v.extend_from_slice(n.buffer.inspect());
            v.extend_from_slice(n.items.inspect());
        }
        v
    }

    /// Smallest record in the tree, uncharged. For tests only.
    pub fn inspect_min(&self) -> Option<T> {
        self.inspect_all().into_iter().min()
    }
}
