use crate::error::{check_len, invalid, Result};
use crate::math;

/// Pearson coefficient; `degenerate` is set (and the value forced to 0)
/// when either vector is constant.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

pub fn pearson_corr(y: &[f64], yhat: &[f64]) -> Result<Correlation> {
    check_len(y.len(), yhat.len())?;
    if y.len() < 2 {
        return Err(invalid("correlation needs at least two points"));
    }
    let (my, mh) = (math::mean(y), math::mean(yhat));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (da, db) = (a - my, b - mh);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let tiny = |ss: f64, m: f64| ss <= 1e-24 * (1.0 + m * m) * y.len() as f64;
    if tiny(sxx, my) || tiny(syy, mh) {
        return Ok(Correlation { value: 0.0, degenerate: true });
    }
    let r = sxy / math::sqrt(sxx * syy);
    Ok(Correlation { value: r.clamp(-1.0, 1.0), degenerate: false })
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_len(y.len(), yhat.len())?;
    if y.is_empty() {
        return Err(invalid("rmse of zero points"));
    }
    let ss: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(math::sqrt(ss / y.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        let y = [1.0, 2.0, 3.0];
        assert!((pearson_corr(&y, &y).unwrap().value - 1.0).abs() < 1e-15);
        assert!((pearson_corr(&y, &[-1.0, -2.0, -3.0]).unwrap().value + 1.0).abs() < 1e-15);
        // deviations (-1,0,1) and (-4/3,-1/3,5/3): r = 3 / sqrt(2 * 14/3) = 0.9819805060619657
        let r = pearson_corr(&y, &[1.0, 2.0, 4.0]).unwrap();
        assert!((r.value - 0.981_980_506_061_965_7).abs() < 1e-12);
        let c = pearson_corr(&y, &[2.0, 2.0, 2.0]).unwrap();
        assert!(c.degenerate && c.value == 0.0);
        assert!(pearson_corr(&y, &[1.0]).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0, 3.0], &[3.5, 4.5, 5.5]).unwrap() - 2.5).abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[0.0], &[]).is_err());
    }
}
