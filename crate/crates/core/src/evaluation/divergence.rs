use crate::error::{OdpoError, Result};

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(OdpoError::DomainError(format!("probability {p} outside [0, 1]")))
    }
}

/// `KL(Ber(p) ‖ Ber(q))` with `0·log 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_p(p)?;
    check_p(q)?;
    if (q == 0.0 || q == 1.0) && p != q {
        return Err(OdpoError::DomainError(format!("KL(Ber({p}) || Ber({q})) is infinite")));
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    Ok((term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0))
}

/// `χ²(Ber(p) ‖ Ber(q)) = (p − q)² / (q(1 − q))`.
pub fn chi2_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_p(p)?;
    check_p(q)?;
    if q == 0.0 || q == 1.0 {
        if p == q {
            return Ok(0.0);
        }
        return Err(OdpoError::DomainError(format!("chi2(Ber({p}) || Ber({q})) is infinite")));
    }
    Ok((p - q).powi(2) / (q * (1.0 - q)))
}

/// Bretagnolle–Huber lower bound `exp(−KL)/2` on `P(A) + Q(Aᶜ)`.
pub fn bretagnolle_huber_rhs(kl: f64) -> f64 {
    (-kl).exp() / 2.0
}
