use ymalpha::action::measure;
use ymalpha::cli_io::initial::{centered, make_instanton};
use ymalpha::fields::{LinkField, PLANES};
use ymalpha::flow::{FlowState, StepControl};
use ymalpha::geometry::{LatticeGeometry, Reduction};

fn wilson_action(f: &LinkField) -> f64 {
    let mut s = 0.0;
    for x in 0..f.geometry.num_sites() {
        for (p, q) in PLANES {
            let pl = f.plaquette(x, p, q).unwrap();
            s += 2.0 * (2.0 - pl.re_trace());
        }
    }
    s
}

fn main() {
    let g = LatticeGeometry::new([12; 4], 1.0).unwrap();
    let f = make_instanton(g.clone(), centered(&g), 2.0, 1).unwrap();
    println!("t=0: clover ym={:.3}, wilson={:.3}",
        measure(&f, 1.0, Reduction::Deterministic).unwrap().ym, wilson_action(&f));
    let mut st = FlowState::new(f, 1.0, StepControl::default(), Reduction::Deterministic).unwrap();
    for steps in [50usize, 150, 300] {
        while st.accepted_steps() < steps { st.step().unwrap(); }
        let obs = st.observables();
        println!("after {steps} steps (t={:.2}): clover ym={:.4}, wilson={:.4}, q={:.3}",
            st.t, obs.ym, wilson_action(&st.field), obs.charge);
    }
}
