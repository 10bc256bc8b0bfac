//! Line-oriented trace text format.
//!
//! One event per line, LF separated, no header:
//!
//! ```text
//! C 7        # switch to pid 7
//! B 1a0 T    # branch at 0x1a0, taken
//! B 1a4 N    # branch at 0x1a4, not taken
//! ```
//!
//! Addresses are lowercase hex without a prefix. Empty lines are
//! forbidden; a trace must begin with a switch marker. (The `#` comments
//! above are illustration only; the format itself has none.)

use std::fmt::Write as _;

use crate::counter::Outcome;
use crate::csaf::Pid;
use crate::error::{Error, Result};
use crate::workload::{BranchEvent, TraceEvent};

/// Render a trace in the line format. Every line ends with LF.
pub fn write_trace(events: &[TraceEvent]) -> String {
    let mut out = String::with_capacity(events.len() * 10);
    for event in events {
        match event {
            TraceEvent::Branch(BranchEvent { pc, outcome }) => {
                let dir = if outcome.is_taken() { 'T' } else { 'N' };
                let _ = writeln!(out, "B {pc:x} {dir}");
            }
            TraceEvent::Switch { next } => {
                let _ = writeln!(out, "C {}", next.0);
            }
        }
    }
    out
}

/// Parse the line format back into events, validating structure.
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>> {
    let mut events = Vec::new();
    let mut lines = text.split('\n').enumerate().peekable();
    while let Some((idx, line)) = lines.next() {
        let lineno = idx + 1;
        if line.is_empty() {
            // a single trailing empty segment is the final LF terminator
            if lines.peek().is_none() {
                break;
            }
            return Err(Error::TraceParse {
                line: lineno,
                message: "empty line".into(),
            });
        }
        let mut fields = line.split(' ');
        let tag = fields.next().unwrap_or("");
        match tag {
            "B" => {
                let pc_text = fields.next().ok_or_else(|| Error::TraceParse {
                    line: lineno,
                    message: "missing branch address".into(),
                })?;
                let pc = u64::from_str_radix(pc_text, 16).map_err(|_| Error::TraceParse {
                    line: lineno,
                    message: format!("bad branch address '{pc_text}'"),
                })?;
                let outcome = match fields.next() {
                    Some("T") => Outcome::Taken,
                    Some("N") => Outcome::NotTaken,
                    other => {
                        return Err(Error::TraceParse {
                            line: lineno,
                            message: format!("bad outcome '{}'", other.unwrap_or("")),
                        })
                    }
                };
                if fields.next().is_some() {
                    return Err(Error::TraceParse {
                        line: lineno,
                        message: "trailing fields".into(),
                    });
                }
                events.push(TraceEvent::Branch(BranchEvent { pc, outcome }));
            }
            "C" => {
                let pid_text = fields.next().ok_or_else(|| Error::TraceParse {
                    line: lineno,
                    message: "missing pid".into(),
                })?;
                let pid: u32 = pid_text.parse().map_err(|_| Error::TraceParse {
                    line: lineno,
                    message: format!("bad pid '{pid_text}'"),
                })?;
                if fields.next().is_some() {
                    return Err(Error::TraceParse {
                        line: lineno,
                        message: "trailing fields".into(),
                    });
                }
                events.push(TraceEvent::Switch { next: Pid(pid) });
            }
            other => {
                return Err(Error::TraceParse {
                    line: lineno,
                    message: format!("unknown event tag '{other}'"),
                })
            }
        }
    }
    match events.first() {
        Some(TraceEvent::Switch { .. }) => Ok(events),
        Some(_) => Err(Error::TraceStructure(
            "trace must begin with a context-switch marker".into(),
        )),
        None => Err(Error::TraceStructure("trace is empty".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_and_switch_lines_render_exactly() {
        let events = vec![
            TraceEvent::Switch { next: Pid(7) },
            TraceEvent::Branch(BranchEvent {
                pc: 0x1a0,
                outcome: Outcome::Taken,
            }),
        ];
        assert_eq!(write_trace(&events), "C 7\nB 1a0 T\n");
    }

    #[test]
    fn round_trip_identity() {
        let events = vec![
            TraceEvent::Switch { next: Pid(0) },
            TraceEvent::Branch(BranchEvent {
                pc: 0xdead_beef,
                outcome: Outcome::NotTaken,
            }),
            TraceEvent::Switch { next: Pid(3) },
            TraceEvent::Branch(BranchEvent {
                pc: 0,
                outcome: Outcome::Taken,
            }),
        ];
        let text = write_trace(&events);
        assert_eq!(parse_trace(&text).unwrap(), events);
        assert_eq!(write_trace(&parse_trace(&text).unwrap()), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_trace("C 1\nB zzz T\n").unwrap_err();
        assert!(matches!(err, Error::TraceParse { line: 2, .. }));
        let err = parse_trace("C 1\n\nB 10 T\n").unwrap_err();
        assert!(matches!(err, Error::TraceParse { line: 2, .. }));
        let err = parse_trace("C 1\nX 5\n").unwrap_err();
        assert!(matches!(err, Error::TraceParse { line: 2, .. }));
    }

    #[test]
    fn trace_must_start_with_a_switch() {
        assert!(matches!(
            parse_trace("B 10 T\n"),
            Err(Error::TraceStructure(_))
        ));
        assert!(matches!(parse_trace(""), Err(Error::TraceStructure(_))));
    }
}
