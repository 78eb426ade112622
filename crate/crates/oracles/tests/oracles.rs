use edm_oracles::{
    anchor_linearization, brute_force_potential, choquard_shooting, loglog_slope, AnchorGrid,
};

#[test]
fn shooting_reproduces_the_reference_slope() {
    let s = choquard_shooting(1e-3);
    assert!(
        (s.slope_at_origin - 1.02149303631).abs() < 1e-8,
        "{}",
        s.slope_at_origin
    );
    assert!(s.l2_mass > 0.0 && s.potential_at_origin > 0.0);
}

#[test]
fn potential_of_a_shell_is_flat_inside() {
    let r = [0.5, 1.0, 2.0, 3.0];
    let w = [1.0; 4];
    let rho = [0.0, 0.0, 1.0, 0.0];
    let p = brute_force_potential(&r, &w, &rho);
    assert_eq!(p[0], p[1]);
    assert_eq!(p[0], 0.5);
    assert_eq!(p[3], 1.0 / 3.0);
}

#[test]
fn loglog_slope_of_noisy_power_law() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y = [1.0, 4.01, 15.9, 64.2];
    assert!((loglog_slope(&x, &y) - 2.0).abs() < 0.01);
}

#[test]
fn anchor_linearization_layout() {
    let n = 6;
    let r: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let dr = vec![1.0; n];
    let d: Vec<f64> = r.iter().map(|x| x - 0.5).collect();
    let w = vec![1.0; n];
    let zero = vec![0.0; n];
    let a = anchor_linearization(
        &AnchorGrid {
            r: &r,
            dr: &dr,
            d: &d,
            w: &w,
        },
        1.0,
        0.5,
        &zero,
        &zero,
        &zero,
    );
    assert_eq!(a.len(), 4 * n);
    assert!(a.iter().all(|row| row.len() == 4 * n));
    // With phi0 = 0 the blocks decouple: rows of l and z touch only l and z.
    for row in &a[2 * n..3 * n] {
        assert!(row[..2 * n].iter().all(|v| *v == 0.0));
        assert!(row[3 * n..].iter().all(|v| *v == 0.0));
    }
    // Boundary row of h is h(R) / dr.
    assert_eq!(a[2 * n - 1][n - 1], 1.0);
}
