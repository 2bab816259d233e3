use ymalpha::cli_io::initial::{centered, make_instanton};
use ymalpha::flow::{FlowState, StepControl, StepOutcome};
use ymalpha::geometry::{LatticeGeometry, Reduction};

fn run(l: usize, rho: f64, alpha: f64, max_steps: usize) {
    let g = LatticeGeometry::new([l; 4], 1.0).unwrap();
    let f = make_instanton(g.clone(), centered(&g), rho, 1).unwrap();
    let mut ctl = StepControl::default();
    ctl.saturation_fraction = 10.0; // disable the trigger for the scan
    let mut st = FlowState::new(f, alpha, ctl, Reduction::Deterministic).unwrap();
    let d0 = st.initial_max_density();
    let mut peak: f64 = d0;
    let mut peak_t = 0.0;
    let mut peak_ym = st.observables().ym;
    for step in 0..max_steps {
        match st.step().unwrap() {
            StepOutcome::Blowup(k) => { println!("  unexpected blowup {k:?}"); break; }
            _ => {}
        }
        let h = *st.history.last().unwrap();
        if h.max_density > peak {
            peak = h.max_density;
            peak_t = h.t;
            peak_ym = h.ym;
        }
        if alpha == 1.0 && h.ym < 1.0 {
            println!("L={l} rho={rho} alpha={alpha}: collapsed at step {step} t={:.2}; init_dens={d0:.3} peak_dens={peak:.3} ({:.2}x) at t={peak_t:.2} (ym there {peak_ym:.1})", h.t, peak/d0);
            return;
        }
    }
    let h = *st.history.last().unwrap();
    println!("L={l} rho={rho} alpha={alpha}: after {} steps t={:.1}: ym={:.2} dens={:.3} init={:.3} peak={:.3} ({:.2}x)",
        st.accepted_steps(), h.t, h.ym, h.max_density, d0, peak, peak/d0);
}

fn main() {
    run(16, 2.0, 1.0, 4000);
    run(16, 2.5, 1.0, 6000);
    run(12, 1.5, 1.0, 4000);
    run(12, 1.5, 1.05, 1500);
    run(12, 1.5, 1.1, 1500);
}
