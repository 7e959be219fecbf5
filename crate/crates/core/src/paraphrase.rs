//! Pattern-breaking paraphrases of ranked hyperboles through an external
//! syntactically controlled paraphrase model.

use serde::{Deserialize, Serialize};

use crate::adapter::JsonProcess;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::prompt_parser;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseRequest {
    pub sentence: String,
    /// Passed to the model untouched.
    #[serde(default)]
    pub syntax_control: Option<String>,
    pub n_outputs: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseResponse {
    pub paraphrases: Vec<String>,
}

pub trait ParaphraseAdapter: Send + Sync {
    fn paraphrase(&self, request: &ParaphraseRequest) -> Result<ParaphraseResponse>;
}

/// Returns the input sentence unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoAdapter;

impl ParaphraseAdapter for EchoAdapter {
    fn paraphrase(&self, request: &ParaphraseRequest) -> Result<ParaphraseResponse> {
        Ok(ParaphraseResponse {
            paraphrases: vec![request.sentence.clone()],
        })
    }
}

impl ParaphraseAdapter for JsonProcess {
    fn paraphrase(&self, request: &ParaphraseRequest) -> Result<ParaphraseResponse> {
        self.call(request)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paraphrase {
    pub text: String,
    /// Still matches the `so...that` pattern.
    pub still_patterned: bool,
}

/// At most `n_outputs` paraphrases, each flagged when it keeps the pattern.
pub fn paraphrase_hyperbole(request: &ParaphraseRequest, adapter: &dyn ParaphraseAdapter) -> Result<Vec<Paraphrase>> {
    if request.n_outputs == 0 {
        return Err(Error::Argument("n_outputs must be at least 1".into()));
    }
    if request.sentence.trim().is_empty() {
        return Err(Error::Argument("cannot paraphrase an empty sentence".into()));
    }
    let response = adapter
        .paraphrase(request)
        .map_err(|e| Error::Paraphrase(e.to_string()))?;
    Ok(response
        .paraphrases
        .into_iter()
        .filter(|p| !p.trim().is_empty())
        .take(request.n_outputs)
        .map(|text| Paraphrase {
            still_patterned: prompt_parser::is_so_that(&text),
            text,
        })
        .collect())
}

/// Paraphrases a batch with at most `max_concurrency` adapter calls in flight.
pub fn paraphrase_batch(
    requests: &[ParaphraseRequest],
    adapter: &dyn ParaphraseAdapter,
    max_concurrency: usize,
    exec: Execution,
) -> Vec<Result<Vec<Paraphrase>>> {
    exec::map_bounded(requests, exec, max_concurrency.max(1), |r| paraphrase_hyperbole(r, adapter))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(sentence: &str, n: usize) -> ParaphraseRequest {
        ParaphraseRequest {
            sentence: sentence.into(),
            syntax_control: None,
            n_outputs: n,
            seed: 0,
        }
    }

    struct Fixed(Vec<&'static str>);

    impl ParaphraseAdapter for Fixed {
        fn paraphrase(&self, _: &ParaphraseRequest) -> Result<ParaphraseResponse> {
            Ok(ParaphraseResponse {
                paraphrases: self.0.iter().map(|s| s.to_string()).collect(),
            })
        }
    }

    #[test]
    fn echo_output_is_flagged() {
        let s = "The party is so lit that the city gets drunk";
        let out = paraphrase_hyperbole(&request(s, 3), &EchoAdapter).unwrap();
        assert_eq!(out, vec![Paraphrase { text: s.into(), still_patterned: true }]);
    }

    #[test]
    fn pattern_broken_paraphrase() {
        let adapter = Fixed(vec!["Why is party so lit that the city is drunk?", "The city got drunk at the lit party."]);
        let out = paraphrase_hyperbole(&request("The party is so lit that the city gets drunk", 5), &adapter).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out[0].still_patterned);
        assert!(!out[1].still_patterned);
    }

    #[test]
    fn output_count_is_bounded() {
        let adapter = Fixed(vec!["a b c", "d e f", "g h i"]);
        assert_eq!(paraphrase_hyperbole(&request("x y", 2), &adapter).unwrap().len(), 2);
        assert!(matches!(paraphrase_hyperbole(&request("x y", 0), &adapter), Err(Error::Argument(_))));
    }

    #[test]
    fn unreachable_adapter() {
        let adapter = JsonProcess::new("/nonexistent/paraphraser", vec![]);
        assert!(matches!(paraphrase_hyperbole(&request("x y", 1), &adapter), Err(Error::Paraphrase(_))));
    }

    #[test]
    fn batch_keeps_order() {
        let reqs: Vec<_> = (0..20).map(|i| request(&format!("sentence {i}"), 1)).collect();
        let out = paraphrase_batch(&reqs, &EchoAdapter, 3, Execution::Parallel);
        for (i, r) in out.into_iter().enumerate() {
            assert_eq!(r.unwrap()[0].text, format!("sentence {i}"));
        }
    }
}
