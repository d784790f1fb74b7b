//! Huffman coding of the vocabulary for hierarchical softmax.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// Per-word codes and inner-node paths, both ordered from the root down.
///
/// Inner nodes are numbered `0..len-1` in creation order, so the root is
/// the last one. Bit `0` at a node means the branch taken with probability
/// `sigmoid(inner . hidden)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTree {
    codes: Vec<Vec<u8>>,
    paths: Vec<Vec<u32>>,
}

impl HuffmanTree {
    /// Standard two-smallest merge. Ties go to the lower node id; leaves
    /// keep their word ids and merged nodes are numbered after them.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n = counts.len();
        if n < 2 {
            return Err(Error::Structure(format!(
                "hierarchical softmax needs at least 2 words, got {n}"
            )));
        }
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
            counts.iter().enumerate().map(|(id, &c)| Reverse((c, id))).collect();
        let mut parent = vec![0usize; 2 * n - 1];
        let mut bit = vec![0u8; 2 * n - 1];
        for next in n..2 * n - 1 {
            let Reverse((c0, first)) = heap.pop().expect("heap holds at least two nodes");
            let Reverse((c1, second)) = heap.pop().expect("heap holds at least two nodes");
            parent[first] = next;
            parent[second] = next;
            bit[first] = 0;
            bit[second] = 1;
            heap.push(Reverse((c0 + c1, next)));
        }
        let root = 2 * n - 2;
        let mut codes = Vec::with_capacity(n);
        let mut paths = Vec::with_capacity(n);
        for leaf in 0..n {
            let mut code = Vec::new();
            let mut path = Vec::new();
            let mut node = leaf;
            while node != root {
                code.push(bit[node]);
                node = parent[node];
                path.push((node - n) as u32);
            }
            code.reverse();
            path.reverse();
            codes.push(code);
            paths.push(path);
        }
        Ok(HuffmanTree { codes, paths })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn inner_nodes(&self) -> usize {
        self.codes.len().saturating_sub(1)
    }

    pub fn code(&self, word: u32) -> &[u8] {
        &self.codes[word as usize]
    }

    pub fn path(&self, word: u32) -> &[u32] {
        &self.paths[word as usize]
    }
}

pub fn build_huffman(vocab: &Vocabulary) -> Result<HuffmanTree> {
    let counts: Vec<u64> = vocab.entries().iter().map(|e| e.count).collect();
    HuffmanTree::from_counts(&counts)
}
