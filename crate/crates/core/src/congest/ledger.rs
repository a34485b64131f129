use serde::{Deserialize, Serialize};

/// Counters for one labelled phase.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub phase: String,
    pub rounds: u64,
    pub messages: u64,
    pub max_bits: u64,
}

/// Round and message accounting, keyed by phase label.
///
/// Every simulated or charged round is attributed to exactly one phase (the
/// innermost active one), so phase totals always add up to [`total`].
///
/// [`total`]: RoundLedger::total
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLedger {
    phases: Vec<PhaseStats>,
}

impl RoundLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds counters to `phase`, creating it on first use.
    pub fn record(&mut self, phase: &str, rounds: u64, messages: u64, max_bits: u64) {
        let entry = match self.phases.iter().position(|p| p.phase == phase) {
            Some(i) => &mut self.phases[i],
            None => {
                self.phases.push(PhaseStats { phase: phase.to_string(), ..Default::default() });
                self.phases.last_mut().expect("just pushed")
            }
        };
        entry.rounds += rounds;
        entry.messages += messages;
        entry.max_bits = entry.max_bits.max(max_bits);
    }

    /// Phases in order of first use.
    pub fn phases(&self) -> &[PhaseStats] {
        &self.phases
    }

    pub fn phase(&self, name: &str) -> Option<&PhaseStats> {
        self.phases.iter().find(|p| p.phase == name)
    }

    /// Sum over all phases, labelled `"total"`.
    pub fn total(&self) -> PhaseStats {
        self.phases.iter().fold(PhaseStats { phase: "total".into(), ..Default::default() }, |mut acc, p| {
            acc.rounds += p.rounds;
            acc.messages += p.messages;
            acc.max_bits = acc.max_bits.max(p.max_bits);
            acc
        })
    }

    /// Folds another ledger in, scaling its round counts by `round_factor`.
    pub fn absorb(&mut self, other: &RoundLedger, round_factor: u64) {
        for p in &other.phases {
            self.record(&p.phase, p.rounds * round_factor, p.messages, p.max_bits);
        }
    }

    /// Folds several ledgers that ran side by side: rounds per phase are the
    /// maximum over the inputs (times `round_factor`), messages add up.
    pub fn absorb_parallel(&mut self, others: &[RoundLedger], round_factor: u64) {
        let mut merged = RoundLedger::new();
        for other in others {
            for p in &other.phases {
                merged.record(&p.phase, 0, p.messages, p.max_bits);
                let entry = merged.phases.iter_mut().find(|e| e.phase == p.phase).expect("recorded");
                entry.rounds = entry.rounds.max(p.rounds);
            }
        }
        self.absorb(&merged, round_factor);
    }

    /// JSON array of `{"phase", "rounds", "messages", "max_bits"}` objects.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.phases).expect("ledger serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_are_phase_sums() {
        let mut l = RoundLedger::new();
        l.record("a", 3, 10, 64);
        l.record("b", 2, 5, 128);
        l.record("a", 1, 1, 32);
        let t = l.total();
        assert_eq!((t.rounds, t.messages, t.max_bits), (6, 16, 128));
        assert_eq!(l.phase("a").unwrap().rounds, 4);
        let json = l.to_json();
        assert_eq!(json[0]["phase"], "a");
        assert_eq!(json[1]["max_bits"], 128);
    }

    #[test]
    fn parallel_absorb_takes_round_maximum() {
        let mut x = RoundLedger::new();
        x.record("walk", 5, 7, 64);
        let mut y = RoundLedger::new();
        y.record("walk", 9, 1, 64);
        let mut l = RoundLedger::new();
        l.absorb_parallel(&[x, y], 2);
        assert_eq!(l.phase("walk").unwrap().rounds, 18);
        assert_eq!(l.phase("walk").unwrap().messages, 8);
    }
}
