use std::fmt::Write as _;

use super::ClusterState;

/// Five minutes of trace time.
pub const DEFAULT_INTERVAL_MICROS: u64 = 300 * 1_000_000;

/// Live-task census at an interval boundary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntervalStats {
    pub interval_start: u64,
    pub live_tasks: u64,
    /// Constrained tasks that fit at least one node.
    pub constrained_tasks: u64,
    /// Live tasks fitting no node; reported outside the histogram.
    pub orphaned: u64,
    /// Constrained tasks per group, `A` first.
    pub histogram: [u64; 26],
}

impl IntervalStats {
    pub fn csv_header() -> String {
        let mut h = String::from("interval_start,live_tasks,constrained_tasks");
        for c in 'A'..='Z' {
            h.push(',');
            h.push(c);
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut line = format!(
            "{},{},{}",
            self.interval_start, self.live_tasks, self.constrained_tasks
        );
        for n in &self.histogram {
            let _ = write!(line, ",{n}");
        }
        line
    }
}

/// Emits one [`IntervalStats`] per elapsed boundary of a fixed-width grid
/// starting at 0.
///
/// Call [`IntervalSampler::before_event`] with each event's timestamp before
/// applying it: every boundary at or before that timestamp is sampled from
/// the state as it stands, i.e. after all earlier events. [`finish`] samples
/// the first boundary after the last event.
///
/// [`finish`]: IntervalSampler::finish
#[derive(Debug, Clone)]
pub struct IntervalSampler {
    interval: u64,
    next_boundary: u64,
}

impl IntervalSampler {
    pub fn new(interval: u64) -> Self {
        assert!(interval > 0, "interval must be positive");
        IntervalSampler {
            interval,
            next_boundary: 0,
        }
    }

    pub fn before_event(&mut self, state: &ClusterState, timestamp: u64) -> Vec<IntervalStats> {
        let mut out = Vec::new();
        while self.next_boundary <= timestamp {
            out.push(state.stats_at(self.next_boundary));
            self.next_boundary += self.interval;
        }
        out
    }

    pub fn finish(&mut self, state: &ClusterState) -> IntervalStats {
        let boundary = self.next_boundary.max(state.clock().div_ceil(self.interval) * self.interval);
        let stats = state.stats_at(boundary);
        self.next_boundary = boundary + self.interval;
        stats
    }
}

/// Samples `state` once per boundary while replaying `events`.
pub fn emit_interval_stats<'a>(
    state: &mut ClusterState,
    events: impl IntoIterator<Item = &'a crate::trace::TraceEvent>,
    interval: u64,
) -> Result<Vec<IntervalStats>, super::MatchError> {
    let mut sampler = IntervalSampler::new(interval);
    let mut out = Vec::new();
    for e in events {
        out.extend(sampler.before_event(state, e.timestamp));
        state.apply_event(e)?;
    }
    out.push(sampler.finish(state));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::Mode;
    use crate::trace::{EventPayload, Node, TaskId, TaskSpec, TraceEvent};

    #[test]
    fn header_has_all_groups() {
        let h = IntervalStats::csv_header();
        assert!(h.starts_with("interval_start,live_tasks,constrained_tasks,A,B,"));
        assert!(h.ends_with(",Y,Z"));
        assert_eq!(h.split(',').count(), 29);
    }

    #[test]
    fn empty_state_gives_zeros() {
        let s = ClusterState::new(Mode::Lenient);
        let st = s.stats_at(0);
        assert_eq!(st.to_csv(), format!("0,0,0{}", ",0".repeat(26)));
    }

    #[test]
    fn sampler_emits_each_elapsed_boundary() {
        let mut s = ClusterState::new(Mode::Strict);
        let events = vec![
            TraceEvent::new(5, EventPayload::NodeAdd(Node::new("n1"))),
            TraceEvent::new(
                25,
                EventPayload::TaskSubmit(TaskSpec {
                    id: TaskId::new(1, 0),
                    cpu: 0.0,
                    mem: 0.0,
                    constraints: vec![],
                }),
            ),
        ];
        let stats = emit_interval_stats(&mut s, &events, 10).unwrap();
        let starts: Vec<u64> = stats.iter().map(|s| s.interval_start).collect();
        assert_eq!(starts, [0, 10, 20, 30]);
        assert_eq!(stats[2].live_tasks, 0);
        assert_eq!(stats[3].live_tasks, 1);
    }
}
