use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{pairwise_sum, total_variation, MeasureField, Region};

/// `|μ|(B_r(x)) / r^{n-1}` along a decreasing list of radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

fn check_radii(radii: &[f64], h: f64) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("at least one radius is required".into()));
    }
    for (i, &r) in radii.iter().enumerate() {
        if !(r >= 2.0 * h * (1.0 - 1e-12)) {
            return Err(Error::InadmissibleRadius {
                radius: r,
                reason: format!("below twice the grid spacing {h}"),
            });
        }
        if i > 0 && r >= radii[i - 1] {
            return Err(Error::InadmissibleRadius {
                radius: r,
                reason: "radii must be strictly decreasing".into(),
            });
        }
    }
    Ok(())
}

pub fn upper_density(mu: &MeasureField, x: &[f64], radii: &[f64]) -> Result<DensityProfile> {
    check_radii(radii, mu.grid().h())?;
    let n = mu.grid().n() as i32;
    let values = radii
        .iter()
        .map(|&r| {
            let region = Region::Ball {
                center: x.to_vec(),
                radius: r,
            };
            total_variation(mu, &region) / r.powi(n - 1)
        })
        .collect();
    Ok(DensityProfile {
        center: x.to_vec(),
        radii: radii.to_vec(),
        values,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `Σ_{c ≠ cell(x)} |x - c|^{-(n-s)} |μ_c|`; the cell containing `x` is
/// omitted.
pub fn riesz_potential(mu: &MeasureField, x: &[f64], s: f64) -> Result<f64> {
    let g = mu.grid();
    let n = g.n() as f64;
    if !(s > 0.0 && s < n) {
        return Err(Error::InvalidArgument(format!("Riesz order {s} must lie in (0, {n})")));
    }
    let own = g.locate(x).map(|idx| g.linear(&idx));
    let terms: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|lin| {
            if Some(lin) == own {
                return 0.0;
            }
            let m = mu.mass_norm(lin);
            if m == 0.0 {
                return 0.0;
            }
            let d = dist(&g.center_of(lin), x);
            if d == 0.0 {
                0.0
            } else {
                m * d.powf(-(n - s))
            }
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `r^m Σ_{r ≤ |c| < 1} |c|^{-(n-1+m)} |μ_c|` for each radius (annuli
/// centred at the origin).
pub fn annulus_bound(mu: &MeasureField, m: u32, radii: &[f64]) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("annulus exponent m must be ≥ 1".into()));
    }
    let g = mu.grid();
    let n = g.n();
    if !g.contains_ball(&vec![0.0; n], 0.0) {
        return Err(Error::InvalidArgument("the origin must lie in the grid".into()));
    }
    for &r in radii {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InadmissibleRadius {
                radius: r,
                reason: "annulus radii must lie in (0, 1)".into(),
            });
        }
    }
    let p = (n - 1) as f64 + m as f64;
    // (|c|, weighted mass) for every charged cell in B_1, sorted by radius.
    let mut charged: Vec<(f64, f64)> = (0..g.len())
        .into_par_iter()
        .filter_map(|lin| {
            let w = mu.mass_norm(lin);
            if w == 0.0 {
                return None;
            }
            let d = dist(&g.center_of(lin), &vec![0.0; n]);
            (d > 0.0 && d < 1.0).then(|| (d, w * d.powf(-p)))
        })
        .collect();
    charged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let weights: Vec<f64> = charged.iter().map(|c| c.1).collect();
    Ok(radii
        .iter()
        .map(|&r| {
            let start = charged.partition_point(|c| c.0 < r);
            r.powi(m as i32) * pairwise_sum(&weights[start..])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    fn point_mass(g: &Grid, idx: &[usize], m: f64) -> MeasureField {
        let mut masses = vec![0.0; g.len()];
        masses[g.linear(idx)] = m;
        MeasureField::new(g.clone(), 1, 0, masses).unwrap()
    }

    #[test]
    fn riesz_of_point_mass() {
        let g = Grid::new(2, -1.0, 1.0, 0.125).unwrap();
        let mu = point_mass(&g, &[10, 12], 3.0);
        let c = g.center(&[10, 12]);
        let x = [c[0] - 0.3, c[1] + 0.4];
        assert!((riesz_potential(&mu, &x, 1.0).unwrap() - 3.0 / 0.5).abs() < 1e-12);
        assert_eq!(riesz_potential(&mu, &c, 1.0).unwrap(), 0.0);
        assert!(riesz_potential(&mu, &x, 2.0).is_err());
    }

    #[test]
    fn riesz_of_lebesgue_disc() {
        let g = Grid::new(2, -1.0, 1.0, 1.0 / 256.0).unwrap();
        let mu = MeasureField::from_density(g, 1, 0, |y| {
            vec![if y[0] * y[0] + y[1] * y[1] <= 1.0 { 1.0 } else { 0.0 }]
        })
        .unwrap();
        let v = riesz_potential(&mu, &[0.0, 0.0], 1.0).unwrap();
        let tau = std::f64::consts::TAU;
        assert!((v - tau).abs() < 0.05 * tau, "{v}");
    }

    #[test]
    fn density_profile_checks_radii() {
        let g = Grid::new(2, -1.0, 1.0, 0.125).unwrap();
        let mu = point_mass(&g, &[8, 8], 1.0);
        assert!(upper_density(&mu, &[0.0, 0.0], &[0.5, 0.2]).is_err());
        assert!(upper_density(&mu, &[0.0, 0.0], &[0.3, 0.5]).is_err());
        let p = upper_density(&mu, &[0.9, 0.9], &[0.5, 0.25]).unwrap();
        assert_eq!(p.values, vec![0.0, 0.0]);
    }

    #[test]
    fn annulus_of_zero_measure() {
        let g = Grid::new(2, -1.0, 1.0, 0.125).unwrap();
        let mu = MeasureField::new(g.clone(), 1, 0, vec![0.0; g.len()]).unwrap();
        assert_eq!(annulus_bound(&mu, 1, &[0.5, 0.25]).unwrap(), vec![0.0, 0.0]);
    }
}
