use lyap_core::base::{BaseSystem, Potential};
use lyap_core::cocycle::{self, Cocycle, LyapunovOptions};
use lyap_core::search::{self, SearchOptions, SearchOutcome};

fn site_basis() -> Vec<Potential> {
    vec![Potential::periodic(&[1.0, 0.0]), Potential::periodic(&[0.0, 1.0])]
}

/// `v ≡ 0` of period 2 at `E = 0` sits on a closed gap: `L = 0` there, and
/// any generic perturbation opens the gap.
fn closed_gap_search(opts: &SearchOptions) -> search::SearchReport {
    search::search_positive_schrodinger(&BaseSystem::periodic(2), &Potential::periodic(&[0.0, 0.0]), 0.0, 0.5, &site_basis(), opts)
        .unwrap()
}

#[test]
fn periodic_search_finds_a_gap() {
    let r = closed_gap_search(&SearchOptions::default());
    assert!(r.found, "{r:?}");
    assert_eq!(r.outcome, SearchOutcome::Found);
    assert!(r.perturbation_norm < 0.5);
    assert!(!r.warnings.is_empty(), "periodic bases are flagged");
    // the reported potential has the reported exponent
    let v2 = r.v2.clone().unwrap();
    let c = Cocycle::schrodinger(BaseSystem::periodic(2), &v2, 0.0.into()).unwrap();
    let exact = cocycle::lyapunov_periodic_exact(&c).unwrap();
    assert!((exact.value - r.reverified.unwrap().value).abs() < 1e-12);
    assert!(exact.value > 0.0);
    assert!((v2.sup_norm() - r.perturbation_norm).abs() < 1e-12);
}

#[test]
fn search_reports_do_not_depend_on_thread_count() {
    let opts = SearchOptions::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| closed_gap_search(&opts))
    };
    let one = serde_json::to_string(&run(1)).unwrap();
    let four = serde_json::to_string(&run(4)).unwrap();
    assert_eq!(one, four);
}

#[test]
fn budget_is_respected() {
    let opts = SearchOptions { budget: 1, ..SearchOptions::default() };
    let r = closed_gap_search(&opts);
    assert!(r.phi_evaluations <= 1);
    if !r.found {
        assert_eq!(r.outcome, SearchOutcome::BudgetExhausted);
    }
}

#[test]
fn quantita_scan_on_period_two() {
    let base = BaseSystem::periodic(2);
    let v = Potential::periodic(&[0.4, -0.9]);
    let w = Potential::periodic(&[0.25, -0.1]);
    let scan = search::quantita_scan(&base, &v, &w, 0.3, 64, 256, &LyapunovOptions::default()).unwrap();
    assert_eq!(scan.values.len(), 64);
    assert!(scan.values.iter().all(|row| row.len() == 256));
    assert!(scan.precondition.value > 0.0);
    assert!(scan.fraction >= 0.9, "{}", scan.fraction);
    // every row flagged as a hit really contains a positive exact exponent
    let hits = scan.values.iter().filter(|row| row.iter().any(|&l| l > 0.0)).count();
    assert_eq!(hits as f64 / 64.0, scan.fraction);
}

#[test]
fn basis_sizes() {
    assert_eq!(search::cosine_basis(6).len(), 7);
    assert_eq!(search::general_basis(0).len(), 2);
    assert_eq!(search::general_basis(2).len(), 10);
}
