use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{zero_evidence, BnError, BnErrorCode, BnModel};

/// Draws checked before the acceptance-rate guard may fire.
pub const REJECTION_PROBE: u64 = 100_000;
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-4;

/// Complete state assignments, columns in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    columns: Vec<String>,
    states: Vec<Vec<String>>,
    rows: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// State indices per record, aligned with [`Dataset::columns`].
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn state_name(&self, row: usize, col: usize) -> &str {
        &self.states[col][self.rows[row][col]]
    }

    /// Relative frequency of each state of `id`.
    pub fn empirical_marginal(&self, id: &str) -> Option<Vec<f64>> {
        let col = self.columns.iter().position(|c| c == id)?;
        let mut counts = vec![0.0; self.states[col].len()];
        for r in &self.rows {
            counts[r[col]] += 1.0;
        }
        let n = self.rows.len() as f64;
        Some(counts.into_iter().map(|c| c / n).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<&str> = r.iter().enumerate().map(|(c, &s)| self.states[c][s].as_str()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl BnModel {
    /// Ancestral sampling from a ChaCha stream seeded by `seed`; records that
    /// contradict `evidence` are rejected.
    pub fn sample(&self, n: usize, seed: u64, evidence: &[(&str, &str)]) -> Result<Dataset, BnError> {
        if n == 0 {
            return Err(BnError::new(BnErrorCode::InvalidQuery, "sample size must be at least 1"));
        }
        let ev = self.resolve_evidence(evidence)?;
        if !ev.is_empty() && self.marginal_table(&[], &ev).1 <= 0.0 {
            return Err(zero_evidence(evidence));
        }
        let order = self.diagram.topological_order();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut states = vec![0usize; self.cards.len()];
        let mut rows = Vec::with_capacity(n);
        let mut draws: u64 = 0;

        while rows.len() < n {
            for &v in &order {
                states[v] = self.draw(v, &states, &mut rng);
            }
            draws += 1;
            if ev.iter().all(|&(v, s)| states[v] == s) {
                rows.push(order.iter().map(|&v| states[v]).collect());
            }
            if draws == REJECTION_PROBE && (rows.len() as f64) < MIN_ACCEPTANCE_RATE * draws as f64 {
                return Err(BnError::new(
                    BnErrorCode::RejectionTooSlow,
                    format!(
                        "only {} of {draws} draws matched the evidence; acceptance rate below {MIN_ACCEPTANCE_RATE}",
                        rows.len()
                    ),
                ));
            }
        }
        Ok(Dataset {
            columns: order.iter().map(|&v| self.variables[v].id.clone()).collect(),
            states: order.iter().map(|&v| self.variables[v].states.clone()).collect(),
            rows,
        })
    }

    fn draw(&self, v: usize, states: &[usize], rng: &mut ChaCha8Rng) -> usize {
        let t = &self.tables[v];
        let mut row = 0;
        for &q in &t.parents {
            row = row * self.cards[q] + states[q];
        }
        let probs = &t.probs[row * self.cards[v]..(row + 1) * self.cards[v]];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (s, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = s;
                if u < acc {
                    return s;
                }
            }
        }
        // rounding left u above the cumulative sum
        last
    }
}
