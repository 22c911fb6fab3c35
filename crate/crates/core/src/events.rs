//! Append-only record of what happened during a run.
//!
//! The log is the input to [`crate::metrics`]; every energy decrement a robot
//! suffers is recoverable from it.

use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetreatReason {
    LowEnergy,
    SearchBudget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Depart {
        level: f64,
    },
    Collect {
        cost: f64,
    },
    Retreat {
        reason: RetreatReason,
    },
    /// End of a round at the nest.
    Arrive {
        success: bool,
        delivered: bool,
        encounters: u32,
        energy_spent: f64,
        t_search: u64,
        t_retreat: u64,
    },
    Charged {
        target: f64,
        lower: f64,
        capacity: f64,
        extra_delay: u64,
    },
    Park {
        level: f64,
    },
    /// Energy ran out outside the nest; `energy_spent` covers the unfinished round.
    Death {
        energy_spent: f64,
    },
    /// Emitted once per robot when the run ends.
    Halt {
        level: f64,
        energy_spent: f64,
    },
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Depart { .. } => "depart",
            EventKind::Collect { .. } => "collect",
            EventKind::Retreat { .. } => "retreat",
            EventKind::Arrive { .. } => "arrive",
            EventKind::Charged { .. } => "charged",
            EventKind::Park { .. } => "park",
            EventKind::Death { .. } => "death",
            EventKind::Halt { .. } => "halt",
        }
    }
}

impl fmt::Display for EventKind {
    /// Payload as comma-separated `key=value` pairs.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EventKind::Depart { level } => write!(f, "level={level}"),
            EventKind::Collect { cost } => write!(f, "cost={cost}"),
            EventKind::Retreat { reason } => match reason {
                RetreatReason::LowEnergy => f.write_str("reason=low-energy"),
                RetreatReason::SearchBudget => f.write_str("reason=search-budget"),
            },
            EventKind::Arrive {
                success,
                delivered,
                encounters,
                energy_spent,
                t_search,
                t_retreat,
            } => write!(
                f,
                "success={success},delivered={delivered},encounters={encounters},\
                 energy_spent={energy_spent},t_search={t_search},t_retreat={t_retreat}"
            ),
            EventKind::Charged {
                target,
                lower,
                capacity,
                extra_delay,
            } => write!(
                f,
                "target={target},lower={lower},capacity={capacity},extra_delay={extra_delay}"
            ),
            EventKind::Park { level } => write!(f, "level={level}"),
            EventKind::Death { energy_spent } => write!(f, "energy_spent={energy_spent}"),
            EventKind::Halt {
                level,
                energy_spent,
            } => write!(f, "level={level},energy_spent={energy_spent}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub tick: u64,
    pub robot: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, tick: u64, robot: usize, kind: EventKind) {
        self.events.push(Event { tick, robot, kind });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn for_robot(&self, robot: usize) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.robot == robot)
    }

    /// Tab-separated `tick, robot, event, payload`, one event per line.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "tick\trobot\tevent\tpayload")?;
        for e in &self.events {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                e.tick,
                e.robot,
                e.kind.label(),
                e.kind
            )?;
        }
        Ok(())
    }
}
