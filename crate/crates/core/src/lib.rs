//! Dashboard insight engine: typed data facts, the insight network built
//! over them, compound scores, narrative selection and LLM summarization.

pub mod dashboard;
pub mod insight;
pub mod llm;
pub mod narrative;
pub mod network;
pub mod scoring;
