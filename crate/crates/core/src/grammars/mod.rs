//! Grammar products and Parikh-image utilities.

pub mod cancel;
pub mod parikh;
pub mod product;

pub use cancel::{build_cancel_product, cancel_product_of, successor_buffer_cancel, CancelProductGrammar, HandlerSet};
pub use parikh::{bounded_index_parikh, context_language_parikh, max_word_len, parikh_member, parikh_sets};
pub use product::{build_product, Context, ContextGrammar, ProductGrammar};
