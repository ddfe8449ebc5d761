//! Vocabulary and model files: versioned JSON documents that round-trip
//! losslessly. A model embeds the content hash of its vocabulary and
//! refuses to load against a different one.

use super::policy::TokenPolicyModel;
use super::vocab::{MotionToken, TokenVocabulary};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

const VOCAB_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported format version {found}, expected {expected}")]
    Version {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("vocabulary hash mismatch: model was trained against {model}, given {given}")]
    VocabularyHashMismatch { model: String, given: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyFile {
    version: u32,
    token_dt: f64,
    tokens: Vec<MotionToken>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    vocab_hash: String,
    model: TokenPolicyModel,
}

fn read(path: &Path) -> Result<String, ModelIoError> {
    std::fs::read_to_string(path).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), ModelIoError> {
    std::fs::write(path, contents).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn save_vocabulary(vocab: &TokenVocabulary, path: &Path) -> Result<(), ModelIoError> {
    let file = VocabularyFile {
        version: VOCAB_FORMAT_VERSION,
        token_dt: vocab.token_dt,
        tokens: vocab.tokens().to_vec(),
    };
    write(path, &serde_json::to_string_pretty(&file).unwrap())
}

pub fn load_vocabulary(path: &Path) -> Result<TokenVocabulary, ModelIoError> {
    let text = read(path)?;
    let file: VocabularyFile =
        serde_json::from_str(&text).map_err(|source| ModelIoError::Parse {
            path: path.display().to_string(),
            source,
        })?;
    if file.version != VOCAB_FORMAT_VERSION {
        return Err(ModelIoError::Version {
            path: path.display().to_string(),
            found: file.version,
            expected: VOCAB_FORMAT_VERSION,
        });
    }
    Ok(TokenVocabulary::from_segments(
        file.tokens.iter().map(|t| t.segment()).collect(),
    ))
}

pub fn save_model(
    model: &TokenPolicyModel,
    vocab: &TokenVocabulary,
    path: &Path,
) -> Result<(), ModelIoError> {
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        vocab_hash: vocab.content_hash(),
        model: model.clone(),
    };
    write(path, &serde_json::to_string(&file).unwrap())
}

/// Load a model and verify it belongs to the given vocabulary.
pub fn load_model(path: &Path, vocab: &TokenVocabulary) -> Result<TokenPolicyModel, ModelIoError> {
    let text = read(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|source| ModelIoError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    if file.version != MODEL_FORMAT_VERSION {
        return Err(ModelIoError::Version {
            path: path.display().to_string(),
            found: file.version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let given = vocab.content_hash();
    if file.vocab_hash != given {
        return Err(ModelIoError::VocabularyHashMismatch {
            model: file.vocab_hash,
            given,
        });
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::vocab::MotionSegment;

    fn vocab() -> TokenVocabulary {
        TokenVocabulary::from_segments(vec![
            MotionSegment::zero(),
            MotionSegment::new(2.5, 0.0, 0.0),
            MotionSegment::new(5.0, 0.1, 0.02),
        ])
    }

    #[test]
    fn vocabulary_round_trips_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.json");
        let v = vocab();
        save_vocabulary(&v, &path).unwrap();
        let loaded = load_vocabulary(&path).unwrap();
        assert_eq!(v, loaded);
        assert_eq!(v.content_hash(), loaded.content_hash());
    }

    #[test]
    fn model_round_trips_and_checks_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let v = vocab();
        let mut m = TokenPolicyModel::zeros(v.size());
        m.bias[1] = 0.123456789012345678;
        m.weights[2][4] = -3.9e-7;
        m.bigram[0][2] = 1.0 / 3.0;
        save_model(&m, &v, &path).unwrap();
        let loaded = load_model(&path, &v).unwrap();
        assert_eq!(m, loaded);

        // A different vocabulary must be refused.
        let other = TokenVocabulary::from_segments(vec![
            MotionSegment::zero(),
            MotionSegment::new(9.0, 0.0, 0.0),
        ]);
        assert!(matches!(
            load_model(&path, &other),
            Err(ModelIoError::VocabularyHashMismatch { .. })
        ));
    }
}
