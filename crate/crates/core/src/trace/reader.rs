use std::io::{BufRead, Lines};

use super::format::{parse_node_event, parse_task_event, NODES_HEADER, TASKS_HEADER};
use super::{TraceError, TraceEvent};

struct LineSource<R> {
    lines: Lines<R>,
    header: &'static str,
    parse: fn(&str) -> Result<TraceEvent, TraceError>,
    line_no: usize,
    header_seen: bool,
    last_timestamp: u64,
    peeked: Option<Result<TraceEvent, TraceError>>,
    done: bool,
}

impl<R: BufRead> LineSource<R> {
    fn new(
        reader: R,
        header: &'static str,
        parse: fn(&str) -> Result<TraceEvent, TraceError>,
    ) -> Self {
        LineSource {
            lines: reader.lines(),
            header,
            parse,
            line_no: 0,
            header_seen: false,
            last_timestamp: 0,
            peeked: None,
            done: false,
        }
    }

    fn read_next(&mut self) -> Option<Result<TraceEvent, TraceError>> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !self.header_seen {
                self.header_seen = true;
                if line == self.header {
                    continue;
                }
                return Some(Err(TraceError::MalformedLine(format!(
                    "line {}: expected header {:?}",
                    self.line_no, self.header
                ))));
            }
            let event = match (self.parse)(&line) {
                Ok(e) => e,
                Err(e) => return Some(Err(e.at_line(self.line_no))),
            };
            if event.timestamp < self.last_timestamp {
                return Some(Err(TraceError::NonMonotonicTimestamp {
                    line: self.line_no,
                    previous: self.last_timestamp,
                    found: event.timestamp,
                }));
            }
            self.last_timestamp = event.timestamp;
            return Some(Ok(event));
        }
    }

    fn peek(&mut self) -> Option<&Result<TraceEvent, TraceError>> {
        if self.peeked.is_none() && !self.done {
            self.peeked = self.read_next();
            if self.peeked.is_none() {
                self.done = true;
            }
        }
        self.peeked.as_ref()
    }

    fn take(&mut self) -> Option<Result<TraceEvent, TraceError>> {
        self.peek();
        self.peeked.take()
    }
}

/// Merges a nodes trace and a tasks trace into one time-ordered stream.
///
/// Ties go to the nodes file; within a file, file order is kept. Decoding
/// errors (including timestamp regressions inside one file) are yielded in
/// place of the offending line and the stream continues after them.
pub struct EventStream<N, T> {
    nodes: LineSource<N>,
    tasks: LineSource<T>,
}

impl<N: BufRead, T: BufRead> EventStream<N, T> {
    pub fn new(nodes: N, tasks: T) -> Self {
        EventStream {
            nodes: LineSource::new(nodes, NODES_HEADER, parse_node_event),
            tasks: LineSource::new(tasks, TASKS_HEADER, parse_task_event),
        }
    }
}

impl<N: BufRead, T: BufRead> Iterator for EventStream<N, T> {
    type Item = Result<TraceEvent, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        let node_first = match (self.nodes.peek(), self.tasks.peek()) {
            (None, None) => return None,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(Err(_)), _) => true,
            (_, Some(Err(_))) => false,
            (Some(Ok(n)), Some(Ok(t))) => n.timestamp <= t.timestamp,
        };
        if node_first {
            self.nodes.take()
        } else {
            self.tasks.take()
        }
    }
}

/// Reads the merged stream, stopping at the first error.
pub fn read_all<N: BufRead, T: BufRead>(
    nodes: N,
    tasks: T,
) -> Result<Vec<TraceEvent>, TraceError> {
    EventStream::new(nodes, tasks).collect()
}
