//! Scalar losses and their derivatives.

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit, in the overflow-free form
/// `max(z,0) − z·y + ln(1 + e^{−|z|})`.
pub fn bce_loss(logit: f64, label: f64) -> f64 {
    logit.max(0.0) - logit * label + (-logit.abs()).exp().ln_1p()
}

pub fn bce_grad(logit: f64, label: f64) -> f64 {
    sigmoid(logit) - label
}

pub fn huber_loss(pred: f64, target: f64, delta: f64) -> f64 {
    let e = (pred - target).abs();
    if e <= delta {
        0.5 * e * e
    } else {
        delta * (e - 0.5 * delta)
    }
}

pub fn huber_grad(pred: f64, target: f64, delta: f64) -> f64 {
    (pred - target).clamp(-delta, delta)
}
