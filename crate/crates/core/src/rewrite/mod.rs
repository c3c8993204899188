//! Multi-query rewriting: context assembly, beam decoding that keeps every
//! tracked hypothesis, and length-normalized rewrite scores.

mod beam;
mod conversation;
mod model;
mod ngram;
mod rewrite_set;

pub use beam::{beam_search, compute_rs, greedy_decode, Hypothesis};
pub use conversation::{
    assemble_context, read_conversations, rewrite_conversation, rewrite_turn, write_conversations,
    Conversation, RewriteParams, Turn,
};
pub use model::{validate_distribution, TokenId, TokenProbModel, Vocabulary, EOS, SEP};
pub use ngram::NGramLM;
pub(crate) use rewrite_set::canonical_order;
pub use rewrite_set::{
    read_rewrite_file, read_rewrites, write_rewrite_file, write_rewrites, Rewrite, RewriteSet,
    Validated,
};
