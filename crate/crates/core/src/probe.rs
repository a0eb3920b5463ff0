//! Deterministic approximation-order probes for `R(t/n)^n - S(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::generator::Multiplier;
use crate::scheme::TimeStepper;
use crate::space::{ModeGrid, SobolevWeight};

/// Errors at or below this level count as exact agreement.
pub const EXACT_FLOOR: f64 = 1e-13;

/// Predicted order of a scheme on a smoothness class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCatalogEntry {
    pub scheme: String,
    /// Smoothness in powers of the generator (`k` or `nu`).
    pub powers: f64,
    pub analytic: bool,
    /// `None` when no value is catalogued (exact scheme, or the excluded
    /// index `k = (l+1)/2`).
    pub predicted_order: Option<f64>,
}

/// `eta(l, k)` for integer `k` in `1..=l+1`, excluding `k = (l+1)/2`.
pub fn eta(l: u32, k: u32) -> Option<f64> {
    if k == 0 || k > l + 1 || 2 * k == l + 1 {
        return None;
    }
    let (l, k) = (l as f64, k as f64);
    if k < (l + 1.0) / 2.0 {
        Some(k - 0.5)
    } else {
        Some(k * l / (l + 1.0))
    }
}

pub fn catalog_entry(scheme: &dyn TimeStepper, analytic: bool, powers: f64) -> OrderCatalogEntry {
    let predicted_order = match scheme.classical_order() {
        _ if scheme.is_exponential() => None,
        None => None,
        Some(l) => {
            if analytic {
                (powers > 0.0).then(|| powers.min(l as f64))
            } else if powers.fract() == 0.0 && powers >= 1.0 {
                eta(l, powers as u32)
            } else {
                None
            }
        }
    };
    OrderCatalogEntry {
        scheme: scheme.name().to_string(),
        powers,
        analytic,
        predicted_order,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeSlope {
    /// Every error at or below [`EXACT_FLOOR`].
    Exact,
    Fitted(LineFit),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderProbe {
    pub rows: Vec<(usize, f64)>,
    pub slope: ProbeSlope,
    pub catalog: OrderCatalogEntry,
}

/// Per `n`, `sup_k |r(t mu_k / n)^n - e^{t mu_k}| (1+|k|^2)^{(lx - ly)/2}`,
/// plus a least-squares slope on the log-log table.
pub fn order_probe(
    scheme: &dyn TimeStepper,
    mult: &Multiplier,
    grid: &ModeGrid,
    source: SobolevWeight,
    target: SobolevWeight,
    t: f64,
    n_list: &[usize],
) -> Result<OrderProbe> {
    if source.lambda < target.lambda {
        return Err(Error::config(
            "source_weight",
            "source smoothness must be >= target smoothness",
        ));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "probe time must be positive, got {t}"
        )));
    }
    if n_list.len() < 3 {
        return Err(Error::FitRefused(format!(
            "need at least 3 n values, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::config(
            "n_list",
            "must be strictly ascending positive integers",
        ));
    }
    if mult.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: mult.len(),
        });
    }
    let gap = source.lambda - target.lambda;
    let decay: Vec<f64> = grid
        .sq_norms()
        .iter()
        .map(|&k2| (1.0 + k2).powf(-gap / 2.0))
        .collect();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let h = t / n as f64;
        let mut sup = 0.0f64;
        for (mu, w) in mult.symbols().iter().zip(&decay) {
            let approx = scheme.power(mu * h, n as u64)?;
            let exact = (mu * t).exp();
            sup = sup.max((approx - exact).norm() * w);
        }
        rows.push((n, sup));
    }
    let slope = if rows.iter().all(|&(_, e)| e <= EXACT_FLOOR) {
        ProbeSlope::Exact
    } else {
        let ns: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let es: Vec<f64> = rows.iter().map(|r| r.1).collect();
        ProbeSlope::Fitted(loglog_fit(&ns, &es, false, 3)?)
    };
    let powers = gap / mult.operator_order() as f64;
    Ok(OrderProbe {
        rows,
        slope,
        catalog: catalog_entry(scheme, mult.is_analytic(), powers),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{CrankNicolson, ImplicitEuler, Splitting};

    #[test]
    fn eta_table() {
        assert_eq!(eta(1, 1), None);
        assert_eq!(eta(1, 2), Some(1.0));
        assert_eq!(eta(2, 1), Some(0.5));
        assert!((eta(2, 2).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(eta(2, 3), Some(2.0));
        assert_eq!(eta(2, 4), None);
        assert_eq!(eta(3, 2), None);
        assert_eq!(eta(3, 1), Some(0.5));
        assert_eq!(eta(3, 4), Some(3.0));
        for l in 1..6 {
            for k in 1..=l + 1 {
                if let Some(o) = eta(l, k) {
                    assert!(o > 0.0 && o <= l as f64);
                }
            }
        }
    }

    #[test]
    fn catalog_entries() {
        let ie = ImplicitEuler::default();
        assert_eq!(catalog_entry(&ie, true, 1.0).predicted_order, Some(1.0));
        assert_eq!(catalog_entry(&ie, true, 3.0).predicted_order, Some(1.0));
        assert_eq!(catalog_entry(&ie, false, 1.0).predicted_order, None);
        assert_eq!(catalog_entry(&ie, false, 2.0).predicted_order, Some(1.0));
        let cn = CrankNicolson::default();
        assert_eq!(catalog_entry(&cn, false, 1.5).predicted_order, None);
        assert_eq!(catalog_entry(&Splitting, true, 1.0).predicted_order, None);
    }

    #[test]
    fn splitting_probe_is_exact() {
        let g = ModeGrid::one_dim(64).unwrap();
        let m = Multiplier::heat(&g).unwrap();
        let p = order_probe(
            &Splitting,
            &m,
            &g,
            SobolevWeight::new(2.0),
            SobolevWeight::new(0.0),
            1.0,
            &[8, 16, 32],
        )
        .unwrap();
        assert_eq!(p.slope, ProbeSlope::Exact);
    }

    #[test]
    fn probe_preconditions() {
        let g = ModeGrid::one_dim(4).unwrap();
        let m = Multiplier::heat(&g).unwrap();
        let ie = ImplicitEuler::default();
        let (hi, lo) = (SobolevWeight::new(2.0), SobolevWeight::new(0.0));
        assert!(matches!(
            order_probe(&ie, &m, &g, hi, lo, 1.0, &[8, 16]),
            Err(Error::FitRefused(_))
        ));
        assert!(order_probe(&ie, &m, &g, lo, hi, 1.0, &[8, 16, 32]).is_err());
        assert!(order_probe(&ie, &m, &g, hi, lo, 1.0, &[16, 8, 32]).is_err());
    }

    #[test]
    fn heat_implicit_euler_first_order() {
        let g = ModeGrid::one_dim(64).unwrap();
        let m = Multiplier::heat(&g).unwrap();
        let ns: Vec<usize> = (3..=10).map(|e| 1usize << e).collect();
        let p = order_probe(
            &ImplicitEuler::default(),
            &m,
            &g,
            SobolevWeight::new(2.0),
            SobolevWeight::new(0.0),
            1.0,
            &ns,
        )
        .unwrap();
        let ProbeSlope::Fitted(fit) = p.slope else {
            panic!("expected a fitted slope")
        };
        assert!((fit.slope + 1.0).abs() <= 0.1, "slope {}", fit.slope);
        assert_eq!(p.catalog.predicted_order, Some(1.0));
        // brute-force replay of the largest-n row
        let n = 1024usize;
        let h = 1.0 / n as f64;
        let mut sup = 0.0f64;
        for (i, mu) in m.symbols().iter().enumerate() {
            let mut r = num_complex::Complex64::new(1.0, 0.0);
            for _ in 0..n {
                r /= num_complex::Complex64::new(1.0, 0.0) - mu * h;
            }
            let d = (r - (mu * 1.0).exp()).norm() / (1.0 + g.sq_norms()[i]);
            sup = sup.max(d);
        }
        let got = p.rows.last().unwrap().1;
        assert!((got - sup).abs() <= 1e-10 * sup);
    }

    #[test]
    fn transport_crank_nicolson_order_four_thirds() {
        // the worst frequency grows like n^{2/3}, so the grid must outrun it
        let g = ModeGrid::one_dim(1024).unwrap();
        let m = Multiplier::transport(&g).unwrap();
        let ns: Vec<usize> = (3..=8).map(|e| 1usize << e).collect();
        let p = order_probe(
            &CrankNicolson::default(),
            &m,
            &g,
            SobolevWeight::new(2.0),
            SobolevWeight::new(0.0),
            1.0,
            &ns,
        )
        .unwrap();
        let ProbeSlope::Fitted(fit) = p.slope else {
            panic!("expected a fitted slope")
        };
        assert!((fit.slope + 4.0 / 3.0).abs() <= 0.15, "slope {}", fit.slope);
        assert!((p.catalog.predicted_order.unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }
}
