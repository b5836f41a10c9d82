//! Cross-module flows through the public API.

use dnmap_core::bridge::{extract_dn_symbol, EllipticOptions, LaplaceProbe};
use dnmap_core::calculus::{principal_dn_symbol, sub_principal_terms};
use dnmap_core::linalg::{CVec3, C64};
use dnmap_core::medium::{BoundaryChart, CotangentPoint, StratifiedProfile};
use dnmap_core::reconstruct::{probes_from_symbols, recover_jet, relative_errors};
use dnmap_core::split::decay_check;
use dnmap_core::symbol;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn csv_profile() -> StratifiedProfile {
    let text = "depth,lambda,mu,rho\n0,2.0,1.0,1.0\n2,2.4,1.6,1.2\n4,2.8,2.2,1.4\n10,4.0,4.0,2.0\n";
    StratifiedProfile::from_csv_reader(text.as_bytes(), 1).unwrap()
}

#[test]
fn elliptic_extraction_reconstructs_boundary_values() {
    let p = csv_profile();
    let probes: Vec<LaplaceProbe> = [40.0, 80.0, 160.0].iter().map(|&t| LaplaceProbe::new(c(t), 1.0).unwrap()).collect();
    let k = 1.0;
    let opts = EllipticOptions::default();
    let a = extract_dn_symbol(&p, [k, 0.0], &probes, &opts, 1e-4).unwrap();
    let b = extract_dn_symbol(&p, [2f64.sqrt() * k, 0.0], &probes, &opts, 1e-4).unwrap();
    let got = recover_jet(&probes_from_symbols(k, &a.lambda0[0], &b.lambda0[0])).unwrap();
    let err = relative_errors(&p.node_jet(0), &got);
    assert!(err.iter().all(|e| *e < 1e-4), "{err:?}");
}

#[test]
fn extracted_first_order_term_matches_calculus() {
    let p = csv_profile();
    let eta = [0.8, -0.6];
    let probes: Vec<LaplaceProbe> = [40.0, 80.0, 160.0].iter().map(|&t| LaplaceProbe::new(c(t), 1.0).unwrap()).collect();
    let sym = extract_dn_symbol(&p, eta, &probes, &EllipticOptions::default(), 1e-4).unwrap();
    let (t, f) = symbol::factorize(&p.node_jet(0), &BoundaryChart::flat(), eta, c(1.0)).unwrap();
    let l0 = principal_dn_symbol(&f, &t);
    assert!((sym.lambda0[0] - l0).norm() < 1e-5 * l0.norm());
    let lower = sub_principal_terms(&p, &CotangentPoint::new(eta, 0.0), c(1.0)).unwrap();
    let l1 = sym.lower_terms[0][0];
    assert!((l1 - lower.lambda_minus1).norm() < 1e-3 * lower.lambda_minus1.norm().max(1.0), "{l1} vs {}", lower.lambda_minus1);
}

#[test]
fn split_report_csv_for_layered_medium() {
    let p = csv_profile();
    let psi = CVec3::new(c(1.0), c(0.0), C64::new(0.0, 0.5));
    let r = decay_check(&p, [1.0, 0.0], &LaplaceProbe::new(c(20.0), 1.0).unwrap(), psi, &[2.0, 4.0, 6.0, 8.0]).unwrap();
    assert!(r.decaying);
    assert!(r.norm_minus.iter().zip(&r.norm_plus).all(|(m, p)| m < p));
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("depth,norm_plus,norm_minus,fitted_rate,expected_rate\n"));
    assert_eq!(text.lines().count(), 5);
}
