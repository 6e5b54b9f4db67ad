//! Weighted geometric combination of ASR-side and MT-side confidences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub alpha: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { alpha: 0.5 }
    }
}

impl FusionConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let c = FusionConfig { alpha };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// `x^e` with `0^0 = 1`.
fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

/// p_good of one token: u(q) = p_asr(q)^alpha * p_mt(q)^(1-alpha), normalized
/// over {good, bad}; 0.5 when both terms vanish.
pub fn combine(p_asr: f64, p_mt: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return p_asr;
    }
    if alpha == 0.0 {
        return p_mt;
    }
    let good = pow(p_asr, alpha) * pow(p_mt, 1.0 - alpha);
    let bad = pow(1.0 - p_asr, alpha) * pow(1.0 - p_mt, 1.0 - alpha);
    let z = good + bad;
    if z == 0.0 {
        0.5
    } else {
        good / z
    }
}

pub fn combine_posteriors(p_asr_good: &[f64], p_mt_good: &[f64], cfg: &FusionConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if p_asr_good.len() != p_mt_good.len() {
        return Err(Error::validation(format!(
            "{} ASR confidences for {} MT confidences",
            p_asr_good.len(),
            p_mt_good.len()
        )));
    }
    if let Some(p) = p_asr_good.iter().chain(p_mt_good).find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::validation(format!("confidence {p} is outside [0, 1]")));
    }
    Ok(p_asr_good
        .iter()
        .zip(p_mt_good)
        .map(|(&a, &m)| combine(a, m, cfg.alpha))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_value() {
        let p = combine(0.9, 0.4, 0.5);
        let want = 0.6 / (0.6 + (0.1f64 * 0.6).sqrt());
        assert!((p - want).abs() < 1e-12);
        assert!((p - 0.71010).abs() < 1e-5);
    }

    #[test]
    fn exponent_collapse_and_idempotence() {
        for &(a, m) in &[(0.3, 0.8), (0.0, 1.0), (1.0, 0.0), (0.123456789, 0.5)] {
            assert_eq!(combine(a, m, 1.0), a);
            assert_eq!(combine(a, m, 0.0), m);
        }
        for &p in &[0.0, 0.2, 0.5, 0.77, 1.0] {
            for &al in &[0.1, 0.5, 0.9] {
                assert!((combine(p, p, al) - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_terms() {
        // good term 0 (p_asr = 0), bad term 0 (p_mt = 1)
        assert_eq!(combine(0.0, 1.0, 0.5), 0.5);
    }

    #[test]
    fn checks_inputs() {
        let cfg = FusionConfig::default();
        assert!(combine_posteriors(&[0.5], &[0.5, 0.5], &cfg).is_err());
        assert!(combine_posteriors(&[1.5], &[0.5], &cfg).is_err());
        assert!(FusionConfig::new(1.2).is_err());
        assert_eq!(combine_posteriors(&[0.9], &[0.4], &cfg).unwrap().len(), 1);
    }
}
