use ymalpha::action::{measure, smear, topological_charge};
use ymalpha::cli_io::initial::{centered, make_instanton};
use ymalpha::fields::clover_field_strength;
use ymalpha::flow::{density_ceiling, FlowState, StepControl, StepOutcome};
use ymalpha::geometry::{LatticeGeometry, Reduction};

fn main() {
    // Gentler smearing scan for the charge measurement.
    let g = LatticeGeometry::new([16; 4], 1.0).unwrap();
    let f = make_instanton(g.clone(), centered(&g), 2.0, 1).unwrap();
    for (sweeps, eps) in [(10usize, 0.01), (10, 0.02), (20, 0.01), (40, 0.005)] {
        let sm = smear(&f, sweeps, eps).unwrap();
        let q = topological_charge(&clover_field_strength(&sm));
        let obs = measure(&sm, 1.0, Reduction::Deterministic).unwrap();
        println!("smear {sweeps}x{eps}: q={q:.4} ym={:.3} maxdens={:.3}", obs.ym, obs.max_density);
    }
    // Alpha=1 flow: how fast does the 2a instanton shrink / saturate?
    let mut st = FlowState::new(f, 1.0, StepControl::default(), Reduction::Deterministic).unwrap();
    println!("ceiling = {:.4}", density_ceiling(1.0));
    let mut step = 0usize;
    loop {
        match st.step().unwrap() {
            StepOutcome::Blowup(kind) => {
                println!("BLOWUP {kind:?} at step {step} t={:.3}", st.t);
                break;
            }
            _ => {}
        }
        step += 1;
        if step % 50 == 0 {
            let h = st.history.last().unwrap();
            println!("step {step}: t={:.3} ym={:.3} q={:.3} maxdens={:.3} dt={:.3e}", h.t, h.ym, h.charge, h.max_density, st.dt);
        }
        if step > 4000 { println!("no blowup in 4000 steps"); break; }
    }
}
