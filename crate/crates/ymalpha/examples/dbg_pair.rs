use ymalpha::action::measure;
use ymalpha::cli_io::initial::make_instanton_with_window;
use ymalpha::fields::LinkField;
use ymalpha::flow::{FlowState, StepControl, StepOutcome};
use ymalpha::geometry::{LatticeGeometry, Reduction};

fn main() {
    let g = LatticeGeometry::new([16; 4], 1.0).unwrap();
    let inst = make_instanton_with_window(g.clone(), [4.5; 4], 2.0, 1, false).unwrap();
    let anti = make_instanton_with_window(g.clone(), [12.5; 4], 3.5, -1, false).unwrap();
    let links = inst.links().iter().zip(anti.links()).map(|(u, v)| (*u * *v).normalized()).collect();
    let f = LinkField::from_links(g.clone(), links).unwrap();
    let obs = measure(&f, 1.0, Reduction::Deterministic).unwrap();
    println!("pair: ym={:.3} q={:.4} maxdens={:.4}", obs.ym, obs.charge, obs.max_density);
    let mut st = FlowState::new(f, 1.0, StepControl::default(), Reduction::Deterministic).unwrap();
    let mut step = 0;
    loop {
        match st.step().unwrap() {
            StepOutcome::Blowup(kind) => {
                println!("BLOWUP {kind:?} at step {step} t={:.2} maxdens={:.3}", st.t, st.observables().max_density);
                break;
            }
            _ => {}
        }
        step += 1;
        if step % 60 == 0 {
            let h = *st.history.last().unwrap();
            println!("step {step}: t={:.2} ym={:.3} q={:.3} maxdens={:.3}", h.t, h.ym, h.charge, h.max_density);
        }
        if step >= 1600 { println!("survived 1600 steps"); break; }
    }
}
