use std::cmp::Ordering;

use super::PostId;

/// Engagement score: cube root of likes × reblogs × comments over the square
/// root of the author's follower count. Zero followers count as one so fresh
/// accounts stay rankable.
pub fn score_counts(likes: u32, reblogs: u32, comments: u32, followers: usize) -> f64 {
    let product = f64::from(likes) * f64::from(reblogs) * f64::from(comments);
    product.cbrt() / (followers.max(1) as f64).sqrt()
}

/// Sort key for recommendation candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankKey {
    pub post: PostId,
    pub score: f64,
    pub created_turn: u64,
}

impl RankKey {
    /// Higher score first, then newer, then lower id.
    pub fn cmp_rank(a: &RankKey, b: &RankKey) -> Ordering {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(b.created_turn.cmp(&a.created_turn))
            .then(a.post.cmp(&b.post))
    }
}
