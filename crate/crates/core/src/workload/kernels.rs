//! Instrumented benchmark kernels.
//!
//! Each kernel executes a classic desk-scale algorithm on seeded input and
//! records every evaluation of its conditional branches (loop back-edges
//! and comparison branches) as a branch event. Synthetic pcs are allocated
//! per static branch site from a per-kernel base address with stride 4,
//! mimicking instruction layout.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counter::Outcome;
use crate::error::{Error, Result};
use crate::workload::BranchEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelName {
    Bubblesort,
    Floatmm,
    Intmm,
    Oscar,
    Perm,
    Puzzle,
    Queens,
    Quicksort,
    Realmm,
    Towers,
    Treesort,
}

impl KernelName {
    pub const ALL: [KernelName; 11] = [
        KernelName::Bubblesort,
        KernelName::Floatmm,
        KernelName::Intmm,
        KernelName::Oscar,
        KernelName::Perm,
        KernelName::Puzzle,
        KernelName::Queens,
        KernelName::Quicksort,
        KernelName::Realmm,
        KernelName::Towers,
        KernelName::Treesort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelName::Bubblesort => "bubblesort",
            KernelName::Floatmm => "floatmm",
            KernelName::Intmm => "intmm",
            KernelName::Oscar => "oscar",
            KernelName::Perm => "perm",
            KernelName::Puzzle => "puzzle",
            KernelName::Queens => "queens",
            KernelName::Quicksort => "quicksort",
            KernelName::Realmm => "realmm",
            KernelName::Towers => "towers",
            KernelName::Treesort => "treesort",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u64
    }

    /// Per-kernel synthetic code base; branch site `s` lives at
    /// `base + 4 * s`. Bases carry an odd per-kernel stagger so distinct
    /// kernels do not collide onto the same indices of every
    /// power-of-two table.
    pub fn base_address(self) -> u64 {
        ((self.index() + 1) << 20) + self.index() * 0x8c
    }

    /// Default problem scale: large enough for several time slices,
    /// small enough that the full roster runs in seconds.
    pub fn default_size(self) -> u32 {
        match self {
            KernelName::Bubblesort => 256,
            KernelName::Floatmm | KernelName::Intmm | KernelName::Realmm => 32,
            KernelName::Oscar => 4096,
            KernelName::Perm => 7,
            KernelName::Puzzle => 15,
            KernelName::Queens => 8,
            KernelName::Quicksort => 2048,
            KernelName::Towers => 15,
            KernelName::Treesort => 2048,
        }
    }

    /// Inclusive size bounds accepted by `gen_kernel_trace`.
    pub fn size_bounds(self) -> (u32, u32) {
        match self {
            KernelName::Bubblesort => (2, 4096),
            KernelName::Floatmm | KernelName::Intmm | KernelName::Realmm => (2, 128),
            KernelName::Oscar => (4, 8192),
            KernelName::Perm => (1, 9),
            KernelName::Puzzle => (4, 20),
            KernelName::Queens => (1, 12),
            KernelName::Quicksort => (2, 16384),
            KernelName::Towers => (1, 20),
            KernelName::Treesort => (2, 65536),
        }
    }
}

impl FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelName::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown kernel name '{s}'")))
    }
}

impl fmt::Display for KernelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A kernel instance; identical (name, size, seed) yields a bit-identical
/// trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSpec {
    pub name: KernelName,
    pub size: u32,
    pub seed: u64,
}

impl KernelSpec {
    pub fn new(name: KernelName, seed: u64) -> Self {
        KernelSpec {
            name,
            size: name.default_size(),
            seed,
        }
    }
}

/// Collects branch events while a kernel runs.
pub(crate) struct Recorder {
    base: u64,
    pub(crate) events: Vec<BranchEvent>,
}

impl Recorder {
    pub(crate) fn new(base: u64) -> Self {
        Recorder {
            base,
            events: Vec::new(),
        }
    }

    /// Record one evaluation of the branch at static site `site` and pass
    /// the condition through.
    #[inline]
    pub(crate) fn branch(&mut self, site: u64, taken: bool) -> bool {
        self.events.push(BranchEvent {
            pc: self.base + 4 * site,
            outcome: Outcome::from_taken(taken),
        });
        taken
    }
}

/// Run the named kernel and return its recorded branch sequence.
pub fn gen_kernel_trace(spec: &KernelSpec) -> Result<Vec<BranchEvent>> {
    let (lo, hi) = spec.name.size_bounds();
    if spec.size < lo || spec.size > hi {
        return Err(Error::config(format!(
            "kernel {} size {} outside supported range {lo}..={hi}",
            spec.name, spec.size
        )));
    }
    if spec.name == KernelName::Oscar && !spec.size.is_power_of_two() {
        return Err(Error::config(format!(
            "kernel oscar size {} must be a power of two",
            spec.size
        )));
    }

    let mut rec = Recorder::new(spec.name.base_address());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.size as usize;
    match spec.name {
        KernelName::Bubblesort => {
            let mut data: Vec<u32> = (0..n as u32).collect();
            data.shuffle(&mut rng);
            bubblesort(&mut data, &mut rec);
        }
        KernelName::Intmm => {
            let a: Vec<i64> = (0..n * n).map(|_| rng.gen_range(-100..=100)).collect();
            let b: Vec<i64> = (0..n * n).map(|_| rng.gen_range(-100..=100)).collect();
            matmul(&a, &b, n, &mut rec, |x, y, acc| acc + x * y);
        }
        KernelName::Floatmm => {
            let a: Vec<f32> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f32> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            matmul(&a, &b, n, &mut rec, |x, y, acc| acc + x * y);
        }
        KernelName::Realmm => {
            let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            matmul(&a, &b, n, &mut rec, |x, y, acc| acc + x * y);
        }
        KernelName::Oscar => {
            let mut re: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut im: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            fft(&mut re, &mut im, &mut rec);
        }
        KernelName::Perm => {
            let mut items: Vec<u32> = (0..n as u32).collect();
            let mut visited = 0u64;
            permute(&mut items, 0, &mut visited, &mut rec);
        }
        KernelName::Puzzle => {
            let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=100)).collect();
            let target: u64 = weights.iter().sum::<u64>() / 2;
            let mut solutions = 0u64;
            subset_search(&weights, 0, 0, target, &mut solutions, &mut rec);
        }
        KernelName::Queens => {
            let mut positions = vec![usize::MAX; n];
            let mut solutions = 0u64;
            queens(&mut positions, 0, &mut solutions, &mut rec);
        }
        KernelName::Quicksort => {
            let mut data: Vec<u32> = (0..n).map(|_| rng.gen()).collect();
            let hi = data.len() as isize - 1;
            quicksort(&mut data, 0, hi, &mut rec);
        }
        KernelName::Towers => {
            let mut moves = 0u64;
            hanoi(n as u32, &mut moves, &mut rec);
        }
        KernelName::Treesort => {
            let values: Vec<u32> = (0..n).map(|_| rng.gen()).collect();
            treesort(&values, &mut rec);
        }
    }
    Ok(rec.events)
}

// --- bubblesort -----------------------------------------------------------

pub(crate) const BUBBLE_OUTER: u64 = 0;
pub(crate) const BUBBLE_INNER: u64 = 1;
pub(crate) const BUBBLE_SWAP: u64 = 2;

pub(crate) fn bubblesort(data: &mut [u32], rec: &mut Recorder) {
    let n = data.len();
    let mut i = 0;
    while rec.branch(BUBBLE_OUTER, i + 1 < n) {
        let mut j = 0;
        while rec.branch(BUBBLE_INNER, j < n - 1 - i) {
            if rec.branch(BUBBLE_SWAP, data[j] > data[j + 1]) {
                data.swap(j, j + 1);
            }
            j += 1;
        }
        i += 1;
    }
}

// --- matrix multiply (intmm / floatmm / realmm) ---------------------------

const MM_ROW: u64 = 0;
const MM_COL: u64 = 1;
const MM_DOT: u64 = 2;

fn matmul<T: Copy + Default>(
    a: &[T],
    b: &[T],
    n: usize,
    rec: &mut Recorder,
    mul_add: impl Fn(T, T, T) -> T,
) -> Vec<T> {
    let mut out = vec![T::default(); n * n];
    let mut i = 0;
    while rec.branch(MM_ROW, i < n) {
        let mut j = 0;
        while rec.branch(MM_COL, j < n) {
            let mut acc = T::default();
            let mut k = 0;
            while rec.branch(MM_DOT, k < n) {
                acc = mul_add(a[i * n + k], b[k * n + j], acc);
                k += 1;
            }
            out[i * n + j] = acc;
            j += 1;
        }
        i += 1;
    }
    out
}

// --- oscar (iterative radix-2 FFT) ----------------------------------------

const FFT_REV_OUTER: u64 = 0;
const FFT_REV_SWAP: u64 = 1;
const FFT_STAGE: u64 = 2;
const FFT_GROUP: u64 = 3;
const FFT_BFLY: u64 = 4;

fn fft(re: &mut [f64], im: &mut [f64], rec: &mut Recorder) {
    let n = re.len();
    let bits = n.trailing_zeros();

    let mut i = 0;
    while rec.branch(FFT_REV_OUTER, i < n) {
        let j = (i as u64).reverse_bits() >> (64 - bits) as u64;
        let j = j as usize;
        if rec.branch(FFT_REV_SWAP, j > i) {
            re.swap(i, j);
            im.swap(i, j);
        }
        i += 1;
    }

    let mut len = 2;
    while rec.branch(FFT_STAGE, len <= n) {
        let angle = -2.0 * std::f64::consts::PI / len as f64;
        let (w_re, w_im) = (angle.cos(), angle.sin());
        let mut start = 0;
        while rec.branch(FFT_GROUP, start < n) {
            let (mut cur_re, mut cur_im) = (1.0f64, 0.0f64);
            let mut k = 0;
            while rec.branch(FFT_BFLY, k < len / 2) {
                let even = start + k;
                let odd = start + k + len / 2;
                let t_re = cur_re * re[odd] - cur_im * im[odd];
                let t_im = cur_re * im[odd] + cur_im * re[odd];
                re[odd] = re[even] - t_re;
                im[odd] = im[even] - t_im;
                re[even] += t_re;
                im[even] += t_im;
                let next_re = cur_re * w_re - cur_im * w_im;
                cur_im = cur_re * w_im + cur_im * w_re;
                cur_re = next_re;
                k += 1;
            }
            start += len;
        }
        len <<= 1;
    }
}

// --- perm (recursive permutation enumeration) -----------------------------

const PERM_DONE: u64 = 0;
const PERM_LOOP: u64 = 1;

fn permute(items: &mut [u32], k: usize, visited: &mut u64, rec: &mut Recorder) {
    if rec.branch(PERM_DONE, k == items.len()) {
        *visited += 1;
        return;
    }
    let mut i = k;
    while rec.branch(PERM_LOOP, i < items.len()) {
        items.swap(k, i);
        permute(items, k + 1, visited, rec);
        items.swap(k, i);
        i += 1;
    }
}

// --- puzzle (subset-sum backtracking) --------------------------------------

const PUZZLE_DONE: u64 = 0;
const PUZZLE_HIT: u64 = 1;
const PUZZLE_PRUNE: u64 = 2;
const PUZZLE_TAKE: u64 = 3;

fn subset_search(
    weights: &[u64],
    depth: usize,
    sum: u64,
    target: u64,
    solutions: &mut u64,
    rec: &mut Recorder,
) {
    if rec.branch(PUZZLE_HIT, sum == target) {
        *solutions += 1;
    }
    if rec.branch(PUZZLE_DONE, depth == weights.len()) {
        return;
    }
    if rec.branch(PUZZLE_PRUNE, sum > target) {
        return;
    }
    // data-dependent ordering: try the heavier direction first
    if rec.branch(PUZZLE_TAKE, weights[depth].is_multiple_of(2)) {
        subset_search(weights, depth + 1, sum + weights[depth], target, solutions, rec);
        subset_search(weights, depth + 1, sum, target, solutions, rec);
    } else {
        subset_search(weights, depth + 1, sum, target, solutions, rec);
        subset_search(weights, depth + 1, sum + weights[depth], target, solutions, rec);
    }
}

// --- queens (recursive backtracking) ---------------------------------------

const QUEENS_DONE: u64 = 0;
const QUEENS_ROW: u64 = 1;
const QUEENS_SCAN: u64 = 2;
const QUEENS_HIT: u64 = 3;
const QUEENS_SAFE: u64 = 4;

fn queens(positions: &mut [usize], col: usize, solutions: &mut u64, rec: &mut Recorder) {
    let n = positions.len();
    if rec.branch(QUEENS_DONE, col == n) {
        *solutions += 1;
        return;
    }
    let mut row = 0;
    while rec.branch(QUEENS_ROW, row < n) {
        let mut safe = true;
        let mut k = 0;
        while rec.branch(QUEENS_SCAN, k < col && safe) {
            let other = positions[k];
            let conflict =
                other == row || (col - k) == row.abs_diff(other);
            if rec.branch(QUEENS_HIT, conflict) {
                safe = false;
            }
            k += 1;
        }
        if rec.branch(QUEENS_SAFE, safe) {
            positions[col] = row;
            queens(positions, col + 1, solutions, rec);
            positions[col] = usize::MAX;
        }
        row += 1;
    }
}

// --- quicksort --------------------------------------------------------------

const QS_REC: u64 = 0;
const QS_LOOP: u64 = 1;
const QS_CMP: u64 = 2;

fn quicksort(data: &mut [u32], lo: isize, hi: isize, rec: &mut Recorder) {
    if rec.branch(QS_REC, lo >= hi) {
        return;
    }
    let pivot = data[hi as usize];
    let mut i = lo;
    let mut j = lo;
    while rec.branch(QS_LOOP, j < hi) {
        if rec.branch(QS_CMP, data[j as usize] < pivot) {
            data.swap(i as usize, j as usize);
            i += 1;
        }
        j += 1;
    }
    data.swap(i as usize, hi as usize);
    quicksort(data, lo, i - 1, rec);
    quicksort(data, i + 1, hi, rec);
}

// --- towers -----------------------------------------------------------------

const HANOI_BASE: u64 = 0;

fn hanoi(n: u32, moves: &mut u64, rec: &mut Recorder) {
    if rec.branch(HANOI_BASE, n == 0) {
        return;
    }
    hanoi(n - 1, moves, rec);
    *moves += 1;
    hanoi(n - 1, moves, rec);
}

// --- treesort ----------------------------------------------------------------

const TREE_DESCEND: u64 = 0;
const TREE_LEFT: u64 = 1;
const TREE_WALK: u64 = 2;

struct TreeNode {
    value: u32,
    left: Option<usize>,
    right: Option<usize>,
}

fn treesort(values: &[u32], rec: &mut Recorder) -> Vec<u32> {
    let mut arena: Vec<TreeNode> = Vec::with_capacity(values.len());
    for &value in values {
        let node = TreeNode {
            value,
            left: None,
            right: None,
        };
        if arena.is_empty() {
            rec.branch(TREE_DESCEND, false);
            arena.push(node);
            continue;
        }
        let mut cur = 0usize;
        loop {
            let go_left = rec.branch(TREE_LEFT, value < arena[cur].value);
            let slot = if go_left {
                arena[cur].left
            } else {
                arena[cur].right
            };
            match slot {
                Some(next) => {
                    rec.branch(TREE_DESCEND, true);
                    cur = next;
                }
                None => {
                    rec.branch(TREE_DESCEND, false);
                    let idx = arena.len();
                    arena.push(node);
                    if go_left {
                        arena[cur].left = Some(idx);
                    } else {
                        arena[cur].right = Some(idx);
                    }
                    break;
                }
            }
        }
    }

    let mut out = Vec::with_capacity(values.len());
    if !values.is_empty() {
        walk(&arena, Some(0), &mut out, rec);
    }
    out
}

fn walk(arena: &[TreeNode], node: Option<usize>, out: &mut Vec<u32>, rec: &mut Recorder) {
    if !rec.branch(TREE_WALK, node.is_some()) {
        return;
    }
    let idx = node.unwrap();
    walk(arena, arena[idx].left, out, rec);
    out.push(arena[idx].value);
    walk(arena, arena[idx].right, out, rec);
}
