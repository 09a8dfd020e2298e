use thiserror::Error;

use super::{AgentRole, Backend, BackendError, ModelRequest, ResponseError};

pub const DEFAULT_RETRY_BUDGET: usize = 2;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{role} agent gave no usable answer at step {step} after {} attempts: {last}", raw_responses.len())]
    Exhausted {
        role: AgentRole,
        step: usize,
        last: ResponseError,
        raw_responses: Vec<String>,
    },
    #[error("{role} backend failed: {source}")]
    Backend {
        role: AgentRole,
        #[source]
        source: BackendError,
    },
}

/// A parsed answer plus the raw text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Completed<T> {
    pub value: T,
    pub raw: String,
    /// Total backend calls, including the successful one.
    pub calls: usize,
}

/// Calls the backend and parses its answer, re-asking up to `max_retries`
/// times on retryable parse errors. Backend errors are not retried.
pub fn call_with_retry<B, T, P>(
    backend: &B,
    request: &ModelRequest,
    parse: P,
    max_retries: usize,
) -> Result<Completed<T>, AgentError>
where
    B: Backend + ?Sized,
    P: Fn(&str) -> Result<T, ResponseError>,
{
    let mut raw_responses = Vec::new();
    let mut request = request.clone();
    for attempt in 0..=max_retries {
        request.attempt = attempt;
        let response = backend
            .complete(&request)
            .map_err(|source| AgentError::Backend { role: request.role, source })?;
        match parse(&response.text) {
            Ok(value) => {
                return Ok(Completed { value, raw: response.text, calls: attempt + 1 });
            }
            Err(err) => {
                log::debug!("{} step {} attempt {attempt}: {err}", request.role, request.step);
                raw_responses.push(response.text);
                if !err.is_retryable() || attempt == max_retries {
                    return Err(AgentError::Exhausted {
                        role: request.role,
                        step: request.step,
                        last: err,
                        raw_responses,
                    });
                }
            }
        }
    }
    unreachable!("loop returns on the final attempt")
}
