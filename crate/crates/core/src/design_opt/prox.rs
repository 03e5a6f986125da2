//! Closed-form proximal maps used by the capacity update.

/// Euclidean projection onto `{u : |u|_1 <= radius}` by the sort-and-threshold rule.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "l1-ball radius must be positive");
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

/// `argmin_u lambda |u|_inf + |u - v|^2 / 2`, via the Moreau decomposition
/// `v - lambda P_{B1}(v / lambda)`.
pub fn prox_linf(v: &[f64], lambda: f64) -> Vec<f64> {
    assert!(lambda > 0.0, "prox weight must be positive");
    let scaled: Vec<f64> = v.iter().map(|x| x / lambda).collect();
    let p = project_l1_ball(&scaled, 1.0);
    v.iter().zip(&p).map(|(x, q)| x - lambda * q).collect()
}
