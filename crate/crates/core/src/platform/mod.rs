//! Headless social-media sandbox.
//!
//! Holds accounts, posts, comments, likes, the follow graph and per-account
//! read ledgers. Mutations go through `&mut self`, so a `Platform` can be
//! moved between threads and read concurrently between mutation points.

mod model;
mod ranking;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};

pub use model::{Account, AccountId, AccountKind, Comment, CommentId, Post, PostId};
pub use ranking::{score_counts, RankKey};
pub use snapshot::{FollowEdge, LikeRecord, Snapshot};

use crate::exec::Execution;

pub const MAX_POST_CHARS: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlatformError {
    #[error("handle must not be empty")]
    EmptyHandle,
    #[error("handle already registered: {0}")]
    DuplicateHandle(String),
    #[error("unknown account {0}")]
    UnknownAccount(AccountId),
    #[error("unknown post {0}")]
    UnknownPost(PostId),
    #[error("post body must not be empty")]
    EmptyBody,
    #[error("post body is {0} characters, limit is 500")]
    BodyTooLong(usize),
    #[error("comment requires a body")]
    MissingCommentBody,
    #[error("account {0} cannot follow itself")]
    SelfFollow(AccountId),
    #[error("inconsistent snapshot: {0}")]
    InvalidSnapshot(String),
}

/// What an engagement does to a post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Engagement {
    Like,
    Reblog,
    Comment(String),
}

/// Identifier created by an engagement, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Created {
    Post(PostId),
    Comment(CommentId),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Platform {
    accounts: Vec<Account>,
    handles: BTreeMap<String, AccountId>,
    posts: Vec<Post>,
    comments: Vec<Comment>,
    likes: BTreeSet<(AccountId, PostId)>,
    read: BTreeMap<AccountId, BTreeSet<PostId>>,
}

impl Platform {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_account(&mut self, handle: &str, kind: AccountKind) -> Result<AccountId, PlatformError> {
        if handle.trim().is_empty() {
            return Err(PlatformError::EmptyHandle);
        }
        if self.handles.contains_key(handle) {
            return Err(PlatformError::DuplicateHandle(handle.to_string()));
        }
        let id = AccountId(self.accounts.len() as u32);
        self.accounts.push(Account {
            id,
            handle: handle.to_string(),
            kind,
            follower_ids: BTreeSet::new(),
            following_ids: BTreeSet::new(),
        });
        self.handles.insert(handle.to_string(), id);
        self.read.insert(id, BTreeSet::new());
        Ok(id)
    }

    pub fn account(&self, id: AccountId) -> Result<&Account, PlatformError> {
        self.accounts
            .get(id.0 as usize)
            .ok_or(PlatformError::UnknownAccount(id))
    }

    pub fn account_by_handle(&self, handle: &str) -> Option<&Account> {
        self.handles.get(handle).map(|id| &self.accounts[id.0 as usize])
    }

    pub fn accounts(&self) -> &[Account] {
        &self.accounts
    }

    pub fn post(&self, id: PostId) -> Result<&Post, PlatformError> {
        self.posts.get(id.0 as usize).ok_or(PlatformError::UnknownPost(id))
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    pub fn has_liked(&self, account: AccountId, post: PostId) -> bool {
        self.likes.contains(&(account, post))
    }

    pub fn read_ledger(&self, account: AccountId) -> Option<&BTreeSet<PostId>> {
        self.read.get(&account)
    }

    pub fn follower_count(&self, id: AccountId) -> Result<usize, PlatformError> {
        Ok(self.account(id)?.follower_ids.len())
    }

    fn validate_body(body: &str) -> Result<(), PlatformError> {
        if body.trim().is_empty() {
            return Err(PlatformError::EmptyBody);
        }
        let n = body.chars().count();
        if n > MAX_POST_CHARS {
            return Err(PlatformError::BodyTooLong(n));
        }
        Ok(())
    }

    fn push_post(&mut self, author: AccountId, body: String, turn: u64, reblog_of: Option<PostId>) -> PostId {
        let id = PostId(self.posts.len() as u64);
        self.posts.push(Post {
            id,
            author,
            body,
            created_turn: turn,
            reblog_of,
            like_count: 0,
            reblog_count: 0,
            comment_count: 0,
        });
        id
    }

    pub fn publish_post(&mut self, author: AccountId, body: &str, turn: u64) -> Result<PostId, PlatformError> {
        self.account(author)?;
        Self::validate_body(body)?;
        Ok(self.push_post(author, body.to_string(), turn, None))
    }

    /// Apply a like, reblog or comment. A repeated like by the same account
    /// leaves the counter unchanged and returns `None`.
    pub fn engage(
        &mut self,
        account: AccountId,
        post: PostId,
        engagement: Engagement,
        turn: u64,
    ) -> Result<Option<Created>, PlatformError> {
        self.account(account)?;
        self.post(post)?;
        let idx = post.0 as usize;
        match engagement {
            Engagement::Like => {
                if self.likes.insert((account, post)) {
                    self.posts[idx].like_count += 1;
                }
                Ok(None)
            }
            Engagement::Reblog => {
                let body = self.posts[idx].body.clone();
                self.posts[idx].reblog_count += 1;
                Ok(Some(Created::Post(self.push_post(account, body, turn, Some(post)))))
            }
            Engagement::Comment(body) => {
                if body.trim().is_empty() {
                    return Err(PlatformError::MissingCommentBody);
                }
                let id = CommentId(self.comments.len() as u64);
                self.comments.push(Comment {
                    id,
                    post_id: post,
                    author: account,
                    body,
                    created_turn: turn,
                });
                self.posts[idx].comment_count += 1;
                Ok(Some(Created::Comment(id)))
            }
        }
    }

    /// Add a follow edge. Returns whether the edge is new.
    pub fn follow(&mut self, follower: AccountId, followee: AccountId) -> Result<bool, PlatformError> {
        self.account(follower)?;
        self.account(followee)?;
        if follower == followee {
            return Err(PlatformError::SelfFollow(follower));
        }
        let added = self.accounts[follower.0 as usize].following_ids.insert(followee);
        self.accounts[followee.0 as usize].follower_ids.insert(follower);
        Ok(added)
    }

    /// Engagement score of a post given its author's current follower count.
    pub fn score_post(&self, post: &Post) -> f64 {
        let followers = self
            .accounts
            .get(post.author.0 as usize)
            .map_or(0, |a| a.follower_ids.len());
        score_counts(post.like_count, post.reblog_count, post.comment_count, followers)
    }

    /// Unread posts from visible authors (never the viewer), best first.
    /// Returned posts are marked as read for the viewer.
    pub fn recommend<F>(
        &mut self,
        viewer: AccountId,
        visible: F,
        n: usize,
        turn: u64,
    ) -> Result<Vec<PostId>, PlatformError>
    where
        F: Fn(&Account) -> bool + Sync,
    {
        self.recommend_with(Execution::default(), viewer, visible, n, turn)
    }

    pub fn recommend_with<F>(
        &mut self,
        exec: Execution,
        viewer: AccountId,
        visible: F,
        n: usize,
        turn: u64,
    ) -> Result<Vec<PostId>, PlatformError>
    where
        F: Fn(&Account) -> bool + Sync,
    {
        let ranked = self.rank_unread(exec, viewer, &visible, turn)?;
        let picked: Vec<PostId> = ranked.into_iter().take(n).map(|k| k.post).collect();
        let ledger = self.read.entry(viewer).or_default();
        ledger.extend(picked.iter().copied());
        Ok(picked)
    }

    /// Full ranking of the viewer's candidates without touching the ledger.
    pub fn rank_unread<F>(
        &self,
        exec: Execution,
        viewer: AccountId,
        visible: &F,
        turn: u64,
    ) -> Result<Vec<RankKey>, PlatformError>
    where
        F: Fn(&Account) -> bool + Sync,
    {
        self.account(viewer)?;
        let empty = BTreeSet::new();
        let read = self.read.get(&viewer).unwrap_or(&empty);
        let candidates: Vec<&Post> = self
            .posts
            .iter()
            .filter(|p| p.author != viewer && p.created_turn <= turn && !read.contains(&p.id))
            .filter(|p| visible(&self.accounts[p.author.0 as usize]))
            .collect();
        let mut keys = exec.map(&candidates, |p| RankKey {
            post: p.id,
            score: self.score_post(p),
            created_turn: p.created_turn,
        });
        exec.sort_by(&mut keys, RankKey::cmp_rank);
        Ok(keys)
    }

    /// Newest posts first; ties within a turn by descending id.
    pub fn live_feed(&self, n: usize) -> Vec<PostId> {
        let mut ids: Vec<&Post> = self.posts.iter().collect();
        ids.sort_by(|a, b| b.created_turn.cmp(&a.created_turn).then(b.id.cmp(&a.id)));
        ids.into_iter().take(n).map(|p| p.id).collect()
    }
}
