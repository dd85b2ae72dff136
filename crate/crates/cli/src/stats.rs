/// Mean, population standard deviation and maximum of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    if values.is_empty() {
        return Summary {
            mean: 0.0,
            std: 0.0,
            max: 0.0,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Summary {
        mean,
        std: var.sqrt(),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Entries of the full goal-by-placement lookup table: one row per goal
/// times every ordered placement of `n` obstacles over that goal's
/// admissible positions. Saturates instead of overflowing.
pub fn strawman_entries(admissible_per_goal: &[u64], n: u32) -> u128 {
    admissible_per_goal
        .iter()
        .map(|&q| (q as u128).checked_pow(n).unwrap_or(u128::MAX))
        .fold(0u128, |acc, x| acc.saturating_add(x))
}
