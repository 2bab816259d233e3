use ymalpha::action::measure;
use ymalpha::cli_io::initial::{centered, make_instanton};
use ymalpha::flow::{FlowState, StepControl, StepOutcome};
use ymalpha::geometry::{LatticeGeometry, Reduction};

fn main() {
    for rho in [2.5f64, 3.0] {
        let g = LatticeGeometry::new([16; 4], 1.0).unwrap();
        let c = centered(&g);
        let f = make_instanton(g.clone(), c, rho, 1).unwrap();
        let obs = measure(&f, 1.0, Reduction::Deterministic).unwrap();
        println!("rho={rho}: ym={:.3} q={:.4} maxdens={:.4}", obs.ym, obs.charge, obs.max_density);
        let mut st = FlowState::new(f, 1.0, StepControl::default(), Reduction::Deterministic).unwrap();
        let mut step = 0;
        loop {
            match st.step().unwrap() {
                StepOutcome::Blowup(kind) => { println!("  BLOWUP {kind:?} at step {step} t={:.2}", st.t); break; }
                _ => {}
            }
            step += 1;
            if step % 100 == 0 {
                let h = *st.history.last().unwrap();
                println!("  step {step}: t={:.2} ym={:.3} q={:.3} maxdens={:.3}", h.t, h.ym, h.charge, h.max_density);
            }
            if step >= 1200 { println!("  no blowup in 1200 steps"); break; }
        }
    }
}
