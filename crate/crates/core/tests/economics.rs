use lottery_mfe::economics::{
    argmax_profit, break_even, cluster_savings, lsw, pareto_frontier, Scheme, SweepPoint, CLUSTER_HOMES,
    DAYS_PER_PERIOD,
};
use lottery_mfe::{ActionTable, PopulationProfile};
use proptest::prelude::*;

const STUDY_SAVINGS_CENTS: [f64; 6] = [0.0, 27.7, 22.7, 22.0, 19.0, 16.4];

fn profile() -> impl Strategy<Value = PopulationProfile> {
    prop::collection::vec(0.0f64..1.0, 6).prop_filter_map("empty", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-6).then(|| PopulationProfile::new(w.iter().map(|x| x / s).collect()).unwrap())
    })
}

#[test]
fn study_welfare_point() {
    assert!((lsw(189.8, 62.0, CLUSTER_HOMES) - 9552.0).abs() < 1e-9);
}

#[test]
fn table_savings_column() {
    let t = ActionTable::study_default();
    for (s, want) in t.savings_cents().iter().zip(STUDY_SAVINGS_CENTS) {
        assert!((s - want).abs() < 1e-12);
    }
}

#[test]
fn benchmark_point_arithmetic() {
    let t = ActionTable::study_default();
    let rho = PopulationProfile::point_mass(6, 5);
    let s = cluster_savings(&rho, &t, CLUSTER_HOMES, DAYS_PER_PERIOD).unwrap();
    assert!((s - 57.4).abs() < 1e-9);
    let p = SweepPoint::new(15.0, Scheme::Benchmark, rho, s, 56.2, CLUSTER_HOMES);
    assert!((p.profit - 42.4).abs() < 1e-9);
}

#[test]
fn sweep_summaries() {
    let mk = |r: f64, profit: f64, ev: f64| {
        SweepPoint::new(r, Scheme::Lottery, PopulationProfile::uniform(6), r + profit, ev, CLUSTER_HOMES)
    };
    let pts: Vec<_> = (1..=19).map(|i| {
        let r = 5.0 * i as f64;
        mk(r, 62.0 - (r - 15.0).abs() * 0.9, r / 10.0)
    }).collect();
    assert_eq!(argmax_profit(&pts).unwrap().reward, 15.0);
    let be = break_even(&pts).unwrap();
    let want = 15.0 + 62.0 / 0.9;
    assert!((be - want).abs() < 1e-9, "{be}");
    // profit falls while value rises past the peak, so those points trade off
    assert_eq!(pareto_frontier(&pts).len(), 19 - 2);
}

proptest! {
    #[test]
    fn welfare_identity_holds_exactly(rho in profile(), reward in 0.0f64..100.0, ev in -500.0f64..500.0) {
        let t = ActionTable::study_default();
        let s = cluster_savings(&rho, &t, CLUSTER_HOMES, DAYS_PER_PERIOD).unwrap();
        let p = SweepPoint::new(reward, Scheme::Lottery, rho, s, ev, CLUSTER_HOMES);
        prop_assert_eq!(p.lsw, CLUSTER_HOMES * ev + p.profit);
        prop_assert_eq!(p.profit, s - reward);
    }

    #[test]
    fn savings_is_a_linear_functional(rho in profile()) {
        let t = ActionTable::study_default();
        let s = cluster_savings(&rho, &t, CLUSTER_HOMES, DAYS_PER_PERIOD).unwrap();
        let mut oracle = 0.0;
        for (r, c) in rho.as_slice().iter().zip(STUDY_SAVINGS_CENTS) {
            oracle += 50.0 * 7.0 * r * c / 100.0;
        }
        prop_assert!((s - oracle).abs() < 1e-9);
        prop_assert!(s <= 50.0 * 7.0 * 27.7 / 100.0 + 1e-9);
    }
}
