//! Precomputed-matrix file backend.
//!
//! File format: one header line `V=<int>`, then one line per position of
//! V space-separated probabilities. A backend built from a matrix file
//! replays the first L rows for any L-token request; it cannot tokenize.

use std::path::Path;

use crate::backend::{BackendDescriptor, BackendKind, ModelBackend};
use crate::error::{Error, Result};
use crate::matrix::LogProbMatrix;
use crate::tokens::TokenSequence;

/// Parses a matrix file, applying the probability floor and row
/// renormalization. Parse errors carry 1-based file line numbers.
pub fn load_matrix_file(path: &Path) -> Result<LogProbMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<LogProbMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: Some(1),
        msg: "empty file, expected a V=<int> header".into(),
    })?;
    let vocab_size: usize = header
        .trim()
        .strip_prefix("V=")
        .and_then(|v| v.parse().ok())
        .filter(|&v| v > 0)
        .ok_or(Error::Parse {
            line: Some(1),
            msg: format!("expected header V=<int>, got {header:?}"),
        })?;

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: Some(line_no),
                    msg: format!("not a number: {tok:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != vocab_size {
            return Err(Error::ShapeError(format!(
                "line {line_no} has {} entries, expected V={vocab_size}",
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: Some(1),
            msg: "matrix file contains no rows".into(),
        });
    }
    // Shift the constructor's row-relative diagnostics to file lines.
    LogProbMatrix::from_probability_rows(rows).map_err(|e| match e {
        Error::Parse { line: Some(r), msg } => Error::Parse {
            line: Some(r + 1),
            msg,
        },
        other => other,
    })
}

#[derive(Debug, Clone)]
pub struct MatrixFileBackend {
    matrix: LogProbMatrix,
    descriptor: BackendDescriptor,
}

impl MatrixFileBackend {
    pub fn open(path: &Path) -> Result<Self> {
        let matrix = load_matrix_file(path)?;
        Ok(Self::from_matrix(matrix, &path.display().to_string()))
    }

    pub fn from_matrix(matrix: LogProbMatrix, identifier: &str) -> Self {
        let descriptor = BackendDescriptor {
            kind: BackendKind::MatrixFile,
            identifier: identifier.to_string(),
            vocab_size: matrix.vocab_size(),
            tokenizer: format!("matrix:V={}", matrix.vocab_size()),
        };
        Self { matrix, descriptor }
    }

    pub fn matrix(&self) -> &LogProbMatrix {
        &self.matrix
    }
}

impl ModelBackend for MatrixFileBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn tokenize(&self, _text: &str) -> Result<TokenSequence> {
        Err(Error::TokenizeUnsupported {
            kind: BackendKind::MatrixFile.to_string(),
        })
    }

    fn detokenize(&self, _tokens: &TokenSequence) -> Result<String> {
        Err(Error::TokenizeUnsupported {
            kind: BackendKind::MatrixFile.to_string(),
        })
    }

    fn next_token_logprobs(&self, tokens: &TokenSequence) -> Result<LogProbMatrix> {
        tokens.check_vocab(self.matrix.vocab_size())?;
        if tokens.len() > self.matrix.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} tokens requested but the matrix file holds {} rows",
                tokens.len(),
                self.matrix.rows()
            )));
        }
        self.matrix.truncated(tokens.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_probabilities_into_logs() {
        let m = parse_matrix("V=2\n0.5 0.5\n").unwrap();
        assert_eq!(m.rows(), 1);
        assert!((m.logprob(0, 0) - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bad_row_sum_reports_file_line() {
        let err = parse_matrix("V=2\n0.5 0.5\n0.7 0.2\n").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, Some(3));
                assert!(msg.contains("0.9"), "{msg}");
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_row_is_a_shape_error() {
        let err = parse_matrix("V=3\n0.2 0.3 0.5\n1.0\n").unwrap_err();
        assert!(matches!(err, Error::ShapeError(_)));
    }

    #[test]
    fn zero_entry_is_floored() {
        let m = parse_matrix("V=2\n1.0 0.0\n").unwrap();
        m.validate().unwrap();
        assert!(m.logprob(0, 1) > f64::NEG_INFINITY);
        assert!((m.logprob(0, 1) - 1e-12f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn replays_first_rows_for_shorter_requests() {
        let m = parse_matrix("V=4\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n0.25 0.25 0.25 0.25\n").unwrap();
        let backend = MatrixFileBackend::from_matrix(m, "test");
        let tokens = TokenSequence::new(vec![0, 1, 2]).unwrap();
        let out = backend.next_token_logprobs(&tokens).unwrap();
        assert_eq!(out.rows(), 3);
        assert!((out.logprob(2, 3) - 0.25f64.ln()).abs() < 1e-12);

        let too_many = TokenSequence::new(vec![0; 4]).unwrap();
        assert!(matches!(
            backend.next_token_logprobs(&too_many),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn tokenize_is_unsupported() {
        let m = parse_matrix("V=2\n0.5 0.5\n").unwrap();
        let backend = MatrixFileBackend::from_matrix(m, "test");
        assert!(matches!(
            backend.tokenize("some text"),
            Err(Error::TokenizeUnsupported { .. })
        ));
    }
}
