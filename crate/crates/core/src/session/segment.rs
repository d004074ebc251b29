use thiserror::Error;

use super::{LogEvent, Session};

pub const DEFAULT_MAX_GAP_SECS: i64 = 45;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("event {index} is out of (customer_id, timestamp) order")]
    Unordered { index: usize },
    #[error("max_gap must be non-negative, got {0}")]
    NegativeGap(i64),
}

/// Splits a customer-sorted event stream into sessions.
///
/// A session boundary is placed wherever the customer changes or two
/// consecutive turns are more than `max_gap` seconds apart. Outcomes are left
/// unset.
pub fn segment_sessions(events: &[LogEvent], max_gap: i64) -> Result<Vec<Session>, SegmentError> {
    if max_gap < 0 {
        return Err(SegmentError::NegativeGap(max_gap));
    }
    for (index, pair) in events.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        let key_prev = (&prev.customer_id, prev.turn.timestamp);
        let key_next = (&next.customer_id, next.turn.timestamp);
        if key_next < key_prev {
            return Err(SegmentError::Unordered { index: index + 1 });
        }
    }

    let mut sessions: Vec<Session> = Vec::new();
    for event in events {
        let extend = sessions.last().is_some_and(|current| {
            let last = current.turns.last().expect("sessions are never empty");
            current.customer_id == event.customer_id
                && event.turn.timestamp - last.timestamp <= max_gap
        });
        if extend {
            sessions
                .last_mut()
                .expect("checked above")
                .turns
                .push(event.turn.clone());
        } else {
            sessions.push(Session::new(event.customer_id.clone(), vec![event.turn.clone()]));
        }
    }
    Ok(sessions)
}
