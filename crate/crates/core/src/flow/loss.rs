//! Flow-matching objectives.
//!
//! Both losses are means so that the weighted loss with uniform weights is
//! exactly the standard one: per latent position the squared error is averaged
//! over channels, then positions are averaged (weighted for wFM).

use super::latent::{VelocityField, LATENT_CHANNELS};
use crate::error::{Error, Result};
use crate::weights::WeightMap;

fn check(pred: &VelocityField, target: &VelocityField) -> Result<()> {
    if !pred.same_shape(target) {
        return Err(Error::precondition("velocity fields differ in shape"));
    }
    Ok(())
}

/// Mean squared error over all latent elements.
pub fn fm_loss(pred: &VelocityField, target: &VelocityField) -> Result<f64> {
    check(pred, target)?;
    let n = pred.data.len() as f64;
    Ok(pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// `Σ_u W(u) e(u) / Σ_u W(u)` with `e(u)` the channel-mean squared error at `u`.
pub fn wfm_loss(pred: &VelocityField, target: &VelocityField, weights: &WeightMap) -> Result<f64> {
    let (loss, _) = weighted(pred, target, weights, false)?;
    Ok(loss)
}

/// Loss value and its gradient with respect to `pred`.
pub fn fm_loss_grad(pred: &VelocityField, target: &VelocityField) -> Result<(f64, Vec<f64>)> {
    let loss = fm_loss(pred, target)?;
    let n = pred.data.len() as f64;
    let grad = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect();
    Ok((loss, grad))
}

pub fn wfm_loss_grad(pred: &VelocityField, target: &VelocityField, weights: &WeightMap) -> Result<(f64, Vec<f64>)> {
    let (loss, grad) = weighted(pred, target, weights, true)?;
    Ok((loss, grad.expect("requested")))
}

fn weighted(
    pred: &VelocityField,
    target: &VelocityField,
    weights: &WeightMap,
    with_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    check(pred, target)?;
    if weights.height() != pred.height || weights.width() != pred.width {
        return Err(Error::precondition(format!(
            "weight map {}x{} does not match latent {}x{}",
            weights.height(),
            weights.width(),
            pred.height,
            pred.width
        )));
    }
    let total: f64 = weights.data().iter().map(|&w| w as f64).sum();
    if total <= 0.0 {
        return Err(Error::Data("weight map sums to zero; cannot normalize".into()));
    }
    let c = LATENT_CHANNELS as f64;
    let mut num = 0.0;
    let mut grad = with_grad.then(|| vec![0.0; pred.data.len()]);
    for (u, &w) in weights.data().iter().enumerate() {
        let w = w as f64;
        let base = u * LATENT_CHANNELS;
        let mut e = 0.0;
        for k in base..base + LATENT_CHANNELS {
            let d = pred.data[k] - target.data[k];
            e += d * d;
            if let Some(g) = grad.as_mut() {
                g[k] = 2.0 * w * d / (c * total);
            }
        }
        num += w * e / c;
    }
    Ok((num / total, grad))
}
