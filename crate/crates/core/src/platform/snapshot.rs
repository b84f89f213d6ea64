use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Account, AccountId, Comment, Platform, PlatformError, Post, PostId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FollowEdge {
    pub follower: AccountId,
    pub followee: AccountId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LikeRecord {
    pub account: AccountId,
    pub post: PostId,
}

/// Complete platform state as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub accounts: Vec<Account>,
    pub posts: Vec<Post>,
    pub comments: Vec<Comment>,
    pub follow_edges: Vec<FollowEdge>,
    pub likes: Vec<LikeRecord>,
    pub read_ledgers: BTreeMap<AccountId, Vec<PostId>>,
}

impl Platform {
    pub fn snapshot(&self) -> Snapshot {
        let follow_edges = self
            .accounts
            .iter()
            .flat_map(|a| {
                a.following_ids.iter().map(move |&f| FollowEdge {
                    follower: a.id,
                    followee: f,
                })
            })
            .collect();
        Snapshot {
            accounts: self.accounts.clone(),
            posts: self.posts.clone(),
            comments: self.comments.clone(),
            follow_edges,
            likes: self
                .likes
                .iter()
                .map(|&(account, post)| LikeRecord { account, post })
                .collect(),
            read_ledgers: self
                .read
                .iter()
                .map(|(k, v)| (*k, v.iter().copied().collect()))
                .collect(),
        }
    }

    /// Rebuild a platform, checking every structural invariant.
    pub fn from_snapshot(snap: Snapshot) -> Result<Platform, PlatformError> {
        let bad = |m: String| Err(PlatformError::InvalidSnapshot(m));
        let mut handles = BTreeMap::new();
        for (i, a) in snap.accounts.iter().enumerate() {
            if a.id.0 as usize != i {
                return bad(format!("account ids must be dense, found {} at {i}", a.id.0));
            }
            if handles.insert(a.handle.clone(), a.id).is_some() {
                return bad(format!("duplicate handle {}", a.handle));
            }
        }
        let n_acc = snap.accounts.len();
        let valid_acc = |id: AccountId| (id.0 as usize) < n_acc;

        let mut edges = BTreeSet::new();
        for e in &snap.follow_edges {
            if !valid_acc(e.follower) || !valid_acc(e.followee) || e.follower == e.followee {
                return bad(format!("invalid follow edge {:?}", e));
            }
            edges.insert((e.follower, e.followee));
        }
        for a in &snap.accounts {
            for f in &a.following_ids {
                if !edges.contains(&(a.id, *f)) {
                    return bad(format!("{} follows {} without an edge", a.id, f));
                }
            }
            for f in &a.follower_ids {
                if !edges.contains(&(*f, a.id)) {
                    return bad(format!("{} lists follower {} without an edge", a.id, f));
                }
            }
        }
        if edges.len() != snap.accounts.iter().map(|a| a.following_ids.len()).sum::<usize>()
            || edges.len() != snap.accounts.iter().map(|a| a.follower_ids.len()).sum::<usize>()
        {
            return bad("follow sets disagree with edge list".into());
        }

        let n_posts = snap.posts.len();
        let mut likes_per_post = vec![0u32; n_posts];
        let mut reblogs_per_post = vec![0u32; n_posts];
        let mut comments_per_post = vec![0u32; n_posts];
        for (i, p) in snap.posts.iter().enumerate() {
            if p.id.0 as usize != i || !valid_acc(p.author) {
                return bad(format!("invalid post {}", p.id));
            }
            if p.body.chars().count() > super::MAX_POST_CHARS {
                return bad(format!("{} exceeds length limit", p.id));
            }
            if let Some(src) = p.reblog_of {
                if src.0 as usize >= n_posts {
                    return bad(format!("{} reblogs unknown {}", p.id, src));
                }
                reblogs_per_post[src.0 as usize] += 1;
            }
        }
        let mut likes = BTreeSet::new();
        for l in &snap.likes {
            if !valid_acc(l.account) || l.post.0 as usize >= n_posts {
                return bad(format!("invalid like {:?}", l));
            }
            if likes.insert((l.account, l.post)) {
                likes_per_post[l.post.0 as usize] += 1;
            }
        }
        for (i, c) in snap.comments.iter().enumerate() {
            if c.id.0 as usize != i || c.post_id.0 as usize >= n_posts || !valid_acc(c.author) {
                return bad(format!("invalid comment {}", c.id.0));
            }
            comments_per_post[c.post_id.0 as usize] += 1;
        }
        for p in &snap.posts {
            let i = p.id.0 as usize;
            if (p.like_count, p.reblog_count, p.comment_count)
                != (likes_per_post[i], reblogs_per_post[i], comments_per_post[i])
            {
                return bad(format!("{} counters disagree with recorded engagements", p.id));
            }
        }

        let mut read = BTreeMap::new();
        for a in &snap.accounts {
            read.insert(a.id, BTreeSet::new());
        }
        for (acc, ids) in snap.read_ledgers {
            if !valid_acc(acc) {
                return bad(format!("read ledger for unknown {acc}"));
            }
            let set: BTreeSet<PostId> = ids.iter().copied().collect();
            if set.len() != ids.len() || set.iter().any(|p| p.0 as usize >= n_posts) {
                return bad(format!("invalid read ledger for {acc}"));
            }
            read.insert(acc, set);
        }

        Ok(Platform {
            accounts: snap.accounts,
            handles,
            posts: snap.posts,
            comments: snap.comments,
            likes,
            read,
        })
    }
}
