//! Non-crossing partitions with singleton and pair blocks, their two-colored
//! variants, depth bookkeeping and the depth-restricted families used by the
//! moment engines.
//!
//! Positions are 1-based throughout, matching the text format
//! `(1,8):b (2,6):b (3,5):r (4):b (7):r`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::{NcError, Result};

/// A block of a partition: a singleton `{i}` or a pair `{i, j}` with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Block {
    Singleton(usize),
    Pair(usize, usize),
}

impl Block {
    pub fn lo(&self) -> usize {
        match *self {
            Block::Singleton(i) | Block::Pair(i, _) => i,
        }
    }

    pub fn hi(&self) -> usize {
        match *self {
            Block::Singleton(i) => i,
            Block::Pair(_, j) => j,
        }
    }

    pub fn is_pair(&self) -> bool {
        matches!(self, Block::Pair(..))
    }

    /// `self` is a pair strictly enclosing every element of `other`.
    pub fn covers(&self, other: &Block) -> bool {
        match *self {
            Block::Pair(a, b) => a < other.lo() && other.hi() < b,
            Block::Singleton(_) => false,
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Block::Singleton(i) => write!(f, "({i})"),
            Block::Pair(i, j) => write!(f, "({i},{j})"),
        }
    }
}

/// Block color in a two-colored partition. Blue blocks belong to the first
/// variable, red blocks to the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Blue,
    Red,
}

impl Color {
    pub fn flip(self) -> Color {
        match self {
            Color::Blue => Color::Red,
            Color::Red => Color::Blue,
        }
    }

    /// Variable index used in colored words: 1 for blue, 2 for red.
    pub fn index(self) -> u8 {
        match self {
            Color::Blue => 1,
            Color::Red => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Color> {
        match i {
            1 => Ok(Color::Blue),
            2 => Ok(Color::Red),
            _ => Err(NcError::InvalidArgument(format!("color index must be 1 or 2, got {i}"))),
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Color::Blue => "b",
            Color::Red => "r",
        }
    }
}

/// A non-crossing partition of `{1..n}` into singletons and pairs, stored in
/// canonical order (blocks sorted by their minimum).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition12 {
    n: usize,
    blocks: Vec<Block>,
}

impl Partition12 {
    /// Validates and canonicalizes a block list.
    pub fn new(n: usize, mut blocks: Vec<Block>) -> Result<Self> {
        blocks.sort_by_key(Block::lo);
        let mut seen = vec![false; n + 1];
        for b in &blocks {
            let elems: Vec<usize> = match *b {
                Block::Singleton(i) => vec![i],
                Block::Pair(i, j) => {
                    if i >= j {
                        return Err(NcError::InvalidArgument(format!("pair {b} is not increasing")));
                    }
                    vec![i, j]
                }
            };
            for e in elems {
                if e == 0 || e > n || seen[e] {
                    return Err(NcError::InvalidArgument(format!(
                        "block {b} is out of range or overlaps another block"
                    )));
                }
                seen[e] = true;
            }
        }
        if seen.iter().skip(1).any(|s| !s) {
            return Err(NcError::InvalidArgument("blocks do not cover the ground set".into()));
        }
        let pairs: Vec<(usize, usize)> = blocks
            .iter()
            .filter_map(|b| match *b {
                Block::Pair(i, j) => Some((i, j)),
                _ => None,
            })
            .collect();
        for (x, &(a, b)) in pairs.iter().enumerate() {
            for &(c, d) in &pairs[x + 1..] {
                if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                    return Err(NcError::InvalidArgument(format!(
                        "pairs ({a},{b}) and ({c},{d}) cross"
                    )));
                }
            }
        }
        Ok(Partition12 { n, blocks })
    }

    pub(crate) fn from_sorted_unchecked(n: usize, blocks: Vec<Block>) -> Self {
        Partition12 { n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_pairing(&self) -> bool {
        self.blocks.iter().all(Block::is_pair)
    }

    /// Absolute depth of each block: one plus the number of pairs covering it.
    pub fn depths(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .map(|v| 1 + self.blocks.iter().filter(|u| u.covers(v)).count())
            .collect()
    }

    /// Block index containing each position (index 0 unused).
    pub fn block_of(&self) -> Vec<usize> {
        let mut owner = vec![usize::MAX; self.n + 1];
        for (idx, b) in self.blocks.iter().enumerate() {
            match *b {
                Block::Singleton(i) => owner[i] = idx,
                Block::Pair(i, j) => {
                    owner[i] = idx;
                    owner[j] = idx;
                }
            }
        }
        owner
    }
}

impl fmt::Display for Partition12 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(Block::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// A partition in which every block carries one of two colors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColoredPartition {
    base: Partition12,
    colors: Vec<Color>,
}

impl ColoredPartition {
    pub fn new(base: Partition12, colors: Vec<Color>) -> Result<Self> {
        if colors.len() != base.blocks.len() {
            return Err(NcError::InvalidArgument(format!(
                "{} colors supplied for {} blocks",
                colors.len(),
                base.blocks.len()
            )));
        }
        Ok(ColoredPartition { base, colors })
    }

    /// Builds a colored partition from `(block, color)` pairs in any order.
    pub fn from_blocks(n: usize, mut blocks: Vec<(Block, Color)>) -> Result<Self> {
        blocks.sort_by_key(|(b, _)| b.lo());
        let (bs, cs): (Vec<Block>, Vec<Color>) = blocks.into_iter().unzip();
        ColoredPartition::new(Partition12::new(n, bs)?, cs)
    }

    pub fn base(&self) -> &Partition12 {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn iter(&self) -> impl Iterator<Item = (Block, Color)> + '_ {
        self.base.blocks.iter().copied().zip(self.colors.iter().copied())
    }

    /// Color of each position (index 0 unused).
    pub fn position_colors(&self) -> Vec<Option<Color>> {
        let mut out = vec![None; self.n() + 1];
        for (b, c) in self.iter() {
            out[b.lo()] = Some(c);
            out[b.hi()] = Some(c);
        }
        out
    }

    /// Relative depth of each block: one plus the number of same-color pairs
    /// covering it that lie inside the nearest opposite-color covering pair.
    pub fn relative_depths(&self) -> Vec<usize> {
        let blocks = &self.base.blocks;
        blocks
            .iter()
            .zip(&self.colors)
            .map(|(v, &c)| {
                // nearest opposite-color cover = the one with the largest minimum
                let barrier = blocks
                    .iter()
                    .zip(&self.colors)
                    .filter(|(u, &cu)| cu != c && u.covers(v))
                    .map(|(u, _)| u.lo())
                    .max()
                    .unwrap_or(0);
                1 + blocks
                    .iter()
                    .zip(&self.colors)
                    .filter(|(u, &cu)| cu == c && u.covers(v) && u.lo() > barrier)
                    .count()
            })
            .collect()
    }

    /// Membership in the depth-restricted family: every blue pair has relative
    /// depth below `k` and every red pair below `l`.
    pub fn is_depth_valid(&self, k: usize, l: usize) -> bool {
        self.relative_depths()
            .iter()
            .zip(self.iter())
            .all(|(&d, (b, c))| !b.is_pair() || d < if c == Color::Blue { k } else { l })
    }

    pub fn recolored(&self, f: impl Fn(Color) -> Color) -> ColoredPartition {
        ColoredPartition {
            base: self.base.clone(),
            colors: self.colors.iter().map(|&c| f(c)).collect(),
        }
    }
}

impl fmt::Display for ColoredPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(b, c)| format!("{b}:{}", c.suffix())).collect();
        f.write_str(&parts.join(" "))
    }
}

fn parse_block(tok: &str) -> Result<(Block, Option<Color>)> {
    let bad = || NcError::Schema(format!("cannot parse block `{tok}`"));
    let (body, color) = match tok.split_once(':') {
        Some((b, "b")) => (b, Some(Color::Blue)),
        Some((b, "r")) => (b, Some(Color::Red)),
        Some(_) => return Err(bad()),
        None => (tok, None),
    };
    let inner = body.strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(bad)?;
    let nums: Vec<usize> = inner
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let block = match nums[..] {
        [i] => Block::Singleton(i),
        [i, j] => Block::Pair(i, j),
        _ => return Err(bad()),
    };
    Ok((block, color))
}

fn parse_line(s: &str) -> Result<(usize, Vec<(Block, Option<Color>)>)> {
    let blocks: Vec<_> = s.split_whitespace().map(parse_block).collect::<Result<_>>()?;
    let n = blocks.iter().map(|(b, _)| b.hi()).max().unwrap_or(0);
    Ok((n, blocks))
}

impl FromStr for Partition12 {
    type Err = NcError;

    fn from_str(s: &str) -> Result<Self> {
        let (n, blocks) = parse_line(s)?;
        Partition12::new(n, blocks.into_iter().map(|(b, _)| b).collect())
    }
}

impl FromStr for ColoredPartition {
    type Err = NcError;

    fn from_str(s: &str) -> Result<Self> {
        let (n, blocks) = parse_line(s)?;
        let blocks = blocks
            .into_iter()
            .map(|(b, c)| c.map(|c| (b, c)).ok_or_else(|| NcError::Schema(format!("block {b} has no color"))))
            .collect::<Result<Vec<_>>>()?;
        ColoredPartition::from_blocks(n, blocks)
    }
}

/// Per-block depth data, in canonical block order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthProfile {
    pub absolute: Vec<usize>,
    /// Present for colored partitions only.
    pub relative: Option<Vec<usize>>,
}

/// Anything [`block_depths`] accepts.
pub enum DepthInput<'a> {
    Plain(&'a Partition12),
    Colored(&'a ColoredPartition),
}

impl<'a> From<&'a Partition12> for DepthInput<'a> {
    fn from(p: &'a Partition12) -> Self {
        DepthInput::Plain(p)
    }
}

impl<'a> From<&'a ColoredPartition> for DepthInput<'a> {
    fn from(p: &'a ColoredPartition) -> Self {
        DepthInput::Colored(p)
    }
}

pub fn block_depths<'a>(p: impl Into<DepthInput<'a>>) -> DepthProfile {
    match p.into() {
        DepthInput::Plain(p) => DepthProfile { absolute: p.depths(), relative: None },
        DepthInput::Colored(p) => DepthProfile {
            absolute: p.base.depths(),
            relative: Some(p.relative_depths()),
        },
    }
}

// ---------------------------------------------------------------------------
// Enumeration

/// Which colors the enumerator may assign.
#[derive(Clone, Debug)]
pub(crate) enum Coloring {
    /// Uncolored: every block is reported blue and no reset ever happens.
    Mono,
    /// Both colors for every block.
    Free,
    /// Every position has a prescribed color; blocks must match it.
    Fixed(Vec<Color>),
}

#[derive(Clone, Debug)]
pub(crate) struct Walk {
    pub n: usize,
    pub pairs_only: bool,
    pub coloring: Coloring,
    /// Pairs of relative depth `>= bound` are forbidden.
    pub blue_bound: Option<usize>,
    pub red_bound: Option<usize>,
}

#[derive(Clone, Copy)]
struct Seg {
    lo: usize,
    hi: usize,
    blue: usize,
    red: usize,
}

impl Walk {
    fn colors_at(&self, i: usize) -> &'static [Color] {
        match &self.coloring {
            Coloring::Mono => &[Color::Blue],
            Coloring::Free => &[Color::Blue, Color::Red],
            Coloring::Fixed(cs) => match cs[i - 1] {
                Color::Blue => &[Color::Blue],
                Color::Red => &[Color::Red],
            },
        }
    }

    fn pair_allowed(&self, c: Color, seg: &Seg) -> bool {
        let (depth, bound) = match c {
            Color::Blue => (seg.blue, self.blue_bound),
            Color::Red => (seg.red, self.red_bound),
        };
        bound.is_none_or(|b| depth < b)
    }

    fn inner(&self, c: Color, seg: &Seg, lo: usize, hi: usize) -> Seg {
        match (&self.coloring, c) {
            (Coloring::Mono, _) => Seg { lo, hi, blue: seg.blue + 1, red: 1 },
            (_, Color::Blue) => Seg { lo, hi, blue: seg.blue + 1, red: 1 },
            (_, Color::Red) => Seg { lo, hi, blue: 1, red: seg.red + 1 },
        }
    }

    /// Visits every admissible colored partition in canonical order. The
    /// visitor receives `(block, color, relative depth)` triples sorted by
    /// block minimum.
    pub fn visit(&self, f: &mut dyn FnMut(&[(Block, Color, usize)])) {
        if self.pairs_only && self.n % 2 == 1 {
            return;
        }
        if let Coloring::Fixed(cs) = &self.coloring {
            assert_eq!(cs.len(), self.n, "fixed coloring length");
        }
        let mut stack = vec![Seg { lo: 1, hi: self.n, blue: 1, red: 1 }];
        let mut blocks = Vec::with_capacity(self.n);
        self.step(&mut stack, &mut blocks, f);
    }

    fn step(
        &self,
        stack: &mut Vec<Seg>,
        blocks: &mut Vec<(Block, Color, usize)>,
        f: &mut dyn FnMut(&[(Block, Color, usize)]),
    ) {
        let Some(seg) = stack.pop() else {
            f(blocks);
            return;
        };
        if seg.lo > seg.hi {
            self.step(stack, blocks, f);
            stack.push(seg);
            return;
        }
        let l = seg.lo;
        if !self.pairs_only {
            for &c in self.colors_at(l) {
                let depth = if c == Color::Blue { seg.blue } else { seg.red };
                blocks.push((Block::Singleton(l), c, depth));
                stack.push(Seg { lo: l + 1, ..seg });
                self.step(stack, blocks, f);
                stack.pop();
                blocks.pop();
            }
        }
        let stride = if self.pairs_only { 2 } else { 1 };
        for j in (l + 1..=seg.hi).step_by(stride) {
            for &c in self.colors_at(l) {
                if !self.colors_at(j).contains(&c) || !self.pair_allowed(c, &seg) {
                    continue;
                }
                let depth = if c == Color::Blue { seg.blue } else { seg.red };
                blocks.push((Block::Pair(l, j), c, depth));
                stack.push(Seg { lo: j + 1, ..seg });
                stack.push(self.inner(c, &seg, l + 1, j - 1));
                self.step(stack, blocks, f);
                stack.pop();
                stack.pop();
                blocks.pop();
            }
        }
        stack.push(seg);
    }

    fn collect_plain(&self) -> Vec<Partition12> {
        let mut out = Vec::new();
        self.visit(&mut |bs| {
            out.push(Partition12::from_sorted_unchecked(self.n, bs.iter().map(|t| t.0).collect()));
        });
        out
    }

    fn collect_colored(&self) -> Vec<ColoredPartition> {
        let mut out = Vec::new();
        self.visit(&mut |bs| {
            out.push(ColoredPartition {
                base: Partition12::from_sorted_unchecked(self.n, bs.iter().map(|t| t.0).collect()),
                colors: bs.iter().map(|t| t.1).collect(),
            });
        });
        out
    }
}

/// All of `NC_{1,2}(n)`.
pub fn enumerate_nc12(n: usize) -> Vec<Partition12> {
    Walk { n, pairs_only: false, coloring: Coloring::Mono, blue_bound: None, red_bound: None }
        .collect_plain()
}

/// Pair partitions `NC_2(n)`; empty for odd `n`.
pub fn enumerate_nc2(n: usize) -> Vec<Partition12> {
    Walk { n, pairs_only: true, coloring: Coloring::Mono, blue_bound: None, red_bound: None }
        .collect_plain()
}

/// `NC^k_{1,2}(n)`: no chain of `k` nested pairs.
pub fn enumerate_nc12_depth(n: usize, k: usize) -> Vec<Partition12> {
    Walk { n, pairs_only: false, coloring: Coloring::Mono, blue_bound: Some(k), red_bound: None }
        .collect_plain()
}

/// `NC^k_2(n)`: depth-bounded pairings.
pub fn enumerate_nc2_depth(n: usize, k: usize) -> Vec<Partition12> {
    Walk { n, pairs_only: true, coloring: Coloring::Mono, blue_bound: Some(k), red_bound: None }
        .collect_plain()
}

/// `TCNC_{1,2}(n)`, or `TCNC_2(n)` when `pairs_only` (empty for odd `n`).
pub fn enumerate_tcnc(n: usize, pairs_only: bool) -> Vec<ColoredPartition> {
    Walk { n, pairs_only, coloring: Coloring::Free, blue_bound: None, red_bound: None }
        .collect_colored()
}

/// `TCNC^{k,l}_{1,2}(n)` (or the pairs-only subfamily): blue pairs of relative
/// depth below `k`, red pairs below `l`.
pub fn enumerate_tcnc_depth(n: usize, k: usize, l: usize, pairs_only: bool) -> Vec<ColoredPartition> {
    Walk { n, pairs_only, coloring: Coloring::Free, blue_bound: Some(k), red_bound: Some(l) }
        .collect_colored()
}

/// Colored partitions whose block colors agree with a prescribed color per
/// position, optionally depth-restricted.
pub fn enumerate_compatible(colors: &[Color], bounds: Option<(usize, usize)>) -> Vec<ColoredPartition> {
    Walk {
        n: colors.len(),
        pairs_only: false,
        coloring: Coloring::Fixed(colors.to_vec()),
        blue_bound: bounds.map(|b| b.0),
        red_bound: bounds.map(|b| b.1),
    }
    .collect_colored()
}

// ---------------------------------------------------------------------------
// Odd compositions

/// An ordered decomposition of `total` into odd positive parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddComposition {
    pub total: usize,
    pub parts: Vec<usize>,
}

/// All ordered `q`-tuples of odd positive integers summing to `p`.
pub fn odd_compositions(p: usize, q: usize) -> Vec<OddComposition> {
    fn rec(rest: usize, slots: usize, cur: &mut Vec<usize>, total: usize, out: &mut Vec<OddComposition>) {
        if slots == 0 {
            if rest == 0 {
                out.push(OddComposition { total, parts: cur.clone() });
            }
            return;
        }
        // the remaining slots - 1 parts need at least slots - 1
        let mut part = 1;
        while part + (slots - 1) <= rest {
            cur.push(part);
            rec(rest - part, slots - 1, cur, total, out);
            cur.pop();
            part += 2;
        }
    }
    let mut out = Vec::new();
    if q > p || (p - q) % 2 != 0 {
        return out;
    }
    rec(p, q, &mut Vec::with_capacity(q), p, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Counting

/// Partition families known to [`count_family`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Nc12,
    Nc2,
    Nc12Depth(usize),
    Nc2Depth(usize),
    Tcnc12,
    Tcnc2,
    Tcnc12Depth(usize, usize),
    Tcnc2Depth(usize, usize),
}

impl Family {
    fn walk(self, n: usize) -> Walk {
        let (pairs_only, coloring, blue, red) = match self {
            Family::Nc12 => (false, Coloring::Mono, None, None),
            Family::Nc2 => (true, Coloring::Mono, None, None),
            Family::Nc12Depth(k) => (false, Coloring::Mono, Some(k), None),
            Family::Nc2Depth(k) => (true, Coloring::Mono, Some(k), None),
            Family::Tcnc12 => (false, Coloring::Free, None, None),
            Family::Tcnc2 => (true, Coloring::Free, None, None),
            Family::Tcnc12Depth(k, l) => (false, Coloring::Free, Some(k), Some(l)),
            Family::Tcnc2Depth(k, l) => (true, Coloring::Free, Some(k), Some(l)),
        };
        Walk { n, pairs_only, coloring, blue_bound: blue, red_bound: red }
    }
}

/// Exact size of a family, by dynamic programming over the first-element case
/// split (never materializes the partitions).
pub fn count_family(family: Family, n: usize) -> BigUint {
    let walk = family.walk(n);
    let mut memo = HashMap::new();
    count_interval(&walk, n, 1, 1, &mut memo)
}

/// Stream length of the enumerator for `family`; independent of
/// [`count_family`].
pub fn count_by_enumeration(family: Family, n: usize) -> u64 {
    let mut count = 0u64;
    family.walk(n).visit(&mut |_| count += 1);
    count
}

fn count_interval(
    walk: &Walk,
    len: usize,
    blue: usize,
    red: usize,
    memo: &mut HashMap<(usize, usize, usize), BigUint>,
) -> BigUint {
    if len == 0 {
        return BigUint::one();
    }
    if walk.pairs_only && len % 2 == 1 {
        return BigUint::zero();
    }
    if let Some(v) = memo.get(&(len, blue, red)) {
        return v.clone();
    }
    let colors: &[Color] = match walk.coloring {
        Coloring::Mono => &[Color::Blue],
        _ => &[Color::Blue, Color::Red],
    };
    let seg = Seg { lo: 1, hi: len, blue, red };
    let mut total = BigUint::zero();
    if !walk.pairs_only {
        total += count_interval(walk, len - 1, blue, red, memo) * BigUint::from(colors.len());
    }
    for inner_len in 0..len - 1 {
        let rest = len - 2 - inner_len;
        for &c in colors {
            if !walk.pair_allowed(c, &seg) {
                continue;
            }
            let inner = walk.inner(c, &seg, 0, 0);
            let a = count_interval(walk, inner_len, inner.blue, inner.red, memo);
            if a.is_zero() {
                continue;
            }
            total += a * count_interval(walk, rest, blue, red, memo);
        }
    }
    memo.insert((len, blue, red), total.clone());
    total
}
