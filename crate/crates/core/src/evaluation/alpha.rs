use super::{AnnotationRecord, EvaluationError};

/// Krippendorff's alpha with the interval metric over the three-rater labels.
pub fn krippendorff_alpha(records: &[AnnotationRecord]) -> Result<f64, EvaluationError> {
    if records.len() < 2 {
        return Err(EvaluationError::InsufficientData);
    }
    let units: Vec<Vec<f64>> = records.iter().map(|r| r.labels.iter().map(|l| l.value()).collect()).collect();
    krippendorff_alpha_units(&units)
}

/// Krippendorff's alpha with the interval metric `(a - b)^2`, computed from
/// the coincidence matrix. Each unit holds the values it received; units with
/// fewer than two values are not pairable and are skipped.
pub fn krippendorff_alpha_units(units: &[Vec<f64>]) -> Result<f64, EvaluationError> {
    let mut values: Vec<f64> = units.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let k = values.len();
    let index = |v: f64| values.binary_search_by(|x| x.total_cmp(&v)).expect("value present");

    let mut coincidence = vec![vec![0.0f64; k]; k];
    for unit in units.iter().filter(|u| u.len() >= 2) {
        let mut counts = vec![0.0f64; k];
        for &v in unit {
            counts[index(v)] += 1.0;
        }
        let weight = 1.0 / (unit.len() as f64 - 1.0);
        for c in 0..k {
            for d in 0..k {
                let pairs = if c == d { counts[c] * (counts[c] - 1.0) } else { counts[c] * counts[d] };
                coincidence[c][d] += pairs * weight;
            }
        }
    }

    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    if n < 2.0 {
        return Err(EvaluationError::InsufficientData);
    }
    let delta = |c: usize, d: usize| (values[c] - values[d]).powi(2);
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            observed += coincidence[c][d] * delta(c, d);
            expected += marginals[c] * marginals[d] * delta(c, d);
        }
    }
    observed /= n;
    expected /= n * (n - 1.0);
    if expected == 0.0 {
        // A single value overall: no disagreement is possible.
        return Ok(1.0);
    }
    Ok(1.0 - observed / expected)
}
