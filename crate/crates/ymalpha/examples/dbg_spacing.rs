use ymalpha::cli_io::initial::{centered, make_instanton};
use ymalpha::flow::{FlowState, StepControl, StepOutcome};
use ymalpha::geometry::{LatticeGeometry, Reduction};

fn run(l: usize, rho_lat: f64, alpha: f64, spacing: f64, max_steps: usize) {
    let g = LatticeGeometry::new([l; 4], spacing).unwrap();
    let f = make_instanton(g.clone(), centered(&g), rho_lat * spacing, 1).unwrap();
    let mut ctl = StepControl::default();
    ctl.saturation_fraction = 10.0;
    let mut st = FlowState::new(f, alpha, ctl, Reduction::Deterministic).unwrap();
    let d0 = st.initial_max_density();
    let q0 = st.observables().charge;
    let ym0 = st.observables().ym;
    for step in 0..max_steps {
        if let StepOutcome::Blowup(k) = st.step().unwrap() { println!("  blowup {k:?}"); break; }
        let h = *st.history.last().unwrap();
        if h.ym < 0.2 * ym0 {
            println!("L={l} rho={rho_lat}a a={spacing} alpha={alpha}: COLLAPSED at step {step} t={:.3} (q {q0:.2}->{:.2})", h.t, h.charge);
            return;
        }
    }
    let h = *st.history.last().unwrap();
    println!("L={l} rho={rho_lat}a a={spacing} alpha={alpha}: survived {} steps: ym {:.1}->{:.1} dens(x a^2) {:.3}->{:.3} q {:.2}->{:.2}",
        st.accepted_steps(), ym0, h.ym, d0 * spacing * spacing, h.max_density * spacing * spacing, q0, h.charge);
}

fn main() {
    for rho in [2.5f64, 3.0] {
        for a in [1.0f64, 0.25] {
            run(12, rho, 1.0, a, 2500);
            run(12, rho, 1.05, a, 2500);
            run(12, rho, 1.1, a, 2500);
        }
    }
}
