use ymalpha::action::{force_from_observables, measure};
use ymalpha::cli_io::initial::{centered, make_instanton};
use ymalpha::flow::{FlowState, StepControl};
use ymalpha::geometry::{LatticeGeometry, Reduction};

fn radial_profile(label: &str, g: &LatticeGeometry, center: [f64; 4], vals: &[f64]) {
    let mut bins = vec![(0.0f64, 0usize); 12];
    for s in 0..g.num_sites() {
        let d = g.distance(s, center);
        let b = (d.floor() as usize).min(11);
        bins[b].0 += vals[s];
        bins[b].1 += 1;
    }
    print!("{label}: ");
    for (i, (tot, n)) in bins.iter().enumerate() {
        if *n > 0 { print!("r{i}:{:.3} ", tot); }
    }
    println!();
}

fn main() {
    let g = LatticeGeometry::new([16; 4], 1.0).unwrap();
    let c = centered(&g);
    let f = make_instanton(g.clone(), c, 2.0, 1).unwrap();
    let obs = measure(&f, 1.0, Reduction::Deterministic).unwrap();
    radial_profile("e(t=0)   ", &g, c, &obs.density);
    let force = force_from_observables(&f, &obs);
    let fsq: Vec<f64> = (0..g.num_sites())
        .map(|s| (0..4).map(|mu| force.at(s, mu).norm_sq()).sum())
        .collect();
    radial_profile("|force|^2", &g, c, &fsq);
    let mut st = FlowState::new(f, 1.0, StepControl::default(), Reduction::Deterministic).unwrap();
    for _ in 0..20 { st.step().unwrap(); }
    println!("after 20 steps: t={:.3} ym={:.3}", st.t, st.observables().ym);
    radial_profile("e(20)    ", &g, c, &st.observables().density);
}
