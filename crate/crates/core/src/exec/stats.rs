use std::fmt;

/// Per-operator counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OperatorStats {
    pub name: String,
    pub tuples_in: u64,
    pub tuples_out: u64,
    /// Distance evaluations performed by this operator itself.
    pub distance_calls: u64,
    /// Candidates pulled from the access path (sources only).
    pub tuples_scanned: u64,
}

impl OperatorStats {
    pub(crate) fn merge(&mut self, other: &OperatorStats) {
        self.tuples_in += other.tuples_in;
        self.tuples_out += other.tuples_out;
        self.distance_calls += other.distance_calls;
        self.tuples_scanned += other.tuples_scanned;
    }

    pub fn is_source(&self) -> bool {
        self.name.ends_with("Scan") || self.name == "IndexBatch"
    }
}

/// Counters of one query run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecStats {
    pub distance_calls: u64,
    pub tuples_scanned: u64,
    pub tuples_emitted: u64,
    pub operators: Vec<OperatorStats>,
}

impl ExecStats {
    /// Distance calls made by operators whose name starts with `prefix`.
    pub fn distance_calls_in(&self, prefix: &str) -> u64 {
        self.operators
            .iter()
            .filter(|o| o.name.starts_with(prefix))
            .map(|o| o.distance_calls)
            .sum()
    }

    pub fn tuples_into(&self, prefix: &str) -> u64 {
        self.operators
            .iter()
            .filter(|o| o.name.starts_with(prefix))
            .map(|o| o.tuples_in)
            .sum()
    }
}

impl fmt::Display for ExecStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "distance calls {}, scanned {}, emitted {}",
            self.distance_calls, self.tuples_scanned, self.tuples_emitted
        )?;
        for (i, o) in self.operators.iter().enumerate() {
            writeln!(
                f,
                "  #{i} {:<14} in {:>8} out {:>8} dist {:>9} scanned {:>8}",
                o.name, o.tuples_in, o.tuples_out, o.distance_calls, o.tuples_scanned
            )?;
        }
        Ok(())
    }
}
