//! Tokenized learned traffic agents: a 2 Hz motion-token vocabulary built
//! with k-means, a noisy trajectory tokenizer, a trainable categorical
//! next-token policy decoded greedily at 0.5 s cadence, and 2 Hz -> 10 Hz
//! upsampling.

mod corpus;
mod io;
mod policy;
mod tokenizer;
mod train;
mod vocab;

pub use corpus::{build_training_corpus, vocabulary_corpus};
pub use io::{load_model, load_vocabulary, save_model, save_vocabulary, ModelIoError};
pub use policy::{
    decode_logits, decode_step, decode_step_sampled, extract_features, initial_prev_token,
    ContextFeatures, DecodeMode, TokenPolicyModel, FEATURE_DIM, FRONT_SECTOR_HALF_ANGLE,
    SECTOR_RANGE,
};
pub use tokenizer::{
    apply_token, reconstruct_endpoints, tokenize_trajectory, upsample_token, TokenizeError,
};
pub use train::{cross_entropy, train, TrainConfig, TrainError, TrainSample, TrainingCorpus};
pub use vocab::{quantization_error, 
    build_vocabulary, MotionSegment, MotionToken, TokenVocabulary, VocabError, HEADING_WEIGHT,
    TOKEN_DT,
};
