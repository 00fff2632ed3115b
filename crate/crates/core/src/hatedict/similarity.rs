//! Ratcliff/Obershelp ("gestalt pattern matching") similarity, computed the
//! same way as Python's `difflib.SequenceMatcher.ratio` with junk heuristics
//! disabled.

/// A maximal common block: `a[a_start..a_start + len] == b[b_start..b_start + len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub a_start: usize,
    pub b_start: usize,
    pub len: usize,
}

/// Longest common contiguous block of `a[alo..ahi]` and `b[blo..bhi]`.
///
/// Ties go to the smallest start in `a`, then the smallest start in `b`.
pub fn longest_block<T: PartialEq>(
    a: &[T],
    b: &[T],
    (alo, ahi): (usize, usize),
    (blo, bhi): (usize, usize),
) -> Block {
    let mut best = Block {
        a_start: alo,
        b_start: blo,
        len: 0,
    };
    let width = bhi.saturating_sub(blo);
    // run[j] = length of the common run ending at a[i-1], b[blo + j - 1]
    let mut prev = vec![0usize; width + 1];
    let mut cur = vec![0usize; width + 1];
    for i in alo..ahi {
        for j in blo..bhi {
            let slot = j - blo + 1;
            if a[i] == b[j] {
                let k = prev[slot - 1] + 1;
                cur[slot] = k;
                if k > best.len {
                    best = Block {
                        a_start: i + 1 - k,
                        b_start: j + 1 - k,
                        len: k,
                    };
                }
            } else {
                cur[slot] = 0;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Every matching block found by recursing on the remainders left and right
/// of the longest block, in `a` order.
pub fn matching_blocks<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Block> {
    let mut out = Vec::new();
    let mut pending = vec![((0, a.len()), (0, b.len()))];
    while let Some(((alo, ahi), (blo, bhi))) = pending.pop() {
        let block = longest_block(a, b, (alo, ahi), (blo, bhi));
        if block.len == 0 {
            continue;
        }
        out.push(block);
        if alo < block.a_start && blo < block.b_start {
            pending.push(((alo, block.a_start), (blo, block.b_start)));
        }
        let (a_end, b_end) = (block.a_start + block.len, block.b_start + block.len);
        if a_end < ahi && b_end < bhi {
            pending.push(((a_end, ahi), (b_end, bhi)));
        }
    }
    out.sort_by_key(|blk| blk.a_start);
    out
}

/// Number of characters covered by the matching blocks.
pub fn matched_chars<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    matching_blocks(a, b).iter().map(|blk| blk.len).sum()
}

/// `2·M / (|a| + |b|)` over Unicode scalar values. Two empty strings score 1.0.
///
/// The ratio is not symmetric in general: swapping arguments can change
/// which longest block is picked first and therefore `M`.
pub fn similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    ratio(&a, &b)
}

pub fn ratio<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matched_chars(a, b) as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_words_score_one() {
        assert_eq!(similarity("nigga", "nigga"), 1.0);
        assert_eq!(similarity("", ""), 1.0);
    }

    #[test]
    fn plural_suffix() {
        assert!((similarity("niggas", "nigga") - 10.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn censored_letter() {
        let blocks = matching_blocks(&['b', '!', 't', 'c', 'h'], &['b', 'i', 't', 'c', 'h']);
        assert_eq!(
            blocks,
            vec![
                Block { a_start: 0, b_start: 0, len: 1 },
                Block { a_start: 2, b_start: 2, len: 3 },
            ]
        );
        assert_eq!(similarity("b!tch", "bitch"), 0.8);
    }

    #[test]
    fn one_side_empty() {
        assert_eq!(similarity("abc", ""), 0.0);
        assert_eq!(similarity("", "abc"), 0.0);
    }

    #[test]
    fn tie_prefers_earliest_in_a_then_b() {
        // "ab" and "ba" both have single-char blocks; 'a' at a[0] wins.
        let blk = longest_block(&['a', 'b'], &['b', 'a'], (0, 2), (0, 2));
        assert_eq!(blk, Block { a_start: 0, b_start: 1, len: 1 });
        let blk = longest_block(&['x', 'a'], &['a', 'a'], (0, 2), (0, 2));
        assert_eq!(blk, Block { a_start: 1, b_start: 0, len: 1 });
    }

    #[test]
    fn ratio_can_depend_on_argument_order() {
        // difflib reports 6/13 one way and 8/13 the other.
        assert!((similarity("acbacc", "bcbbacb") - 6.0 / 13.0).abs() < 1e-15);
        assert!((similarity("bcbbacb", "acbacc") - 8.0 / 13.0).abs() < 1e-15);
    }
}
