use ymalpha::flow::{FlowState, StepControl};
use ymalpha::geometry::{AlgebraElement, LatticeGeometry, Reduction};
use ymalpha::fields::LinkField;

fn main() {
    let g = LatticeGeometry::new([4; 4], 1.0).unwrap();
    let n = g.num_sites();
    let mut xs = vec![[0.0f64; 3]; n * 4];
    let mut mean = [[0.0f64; 3]; 4];
    for s in 0..n { for mu in 0..4 { let key = (s*4+mu) as u64; for k in 0..3 {
        let v = 1e-2 * ymalpha::util::counter_gaussian(7, key, k as u64);
        xs[s*4+mu][k] = v; mean[mu][k] += v / n as f64; } } }
    let links = (0..n*4).map(|i| { let mu = i % 4; AlgebraElement::new([
        xs[i][0]-mean[mu][0], xs[i][1]-mean[mu][1], xs[i][2]-mean[mu][2]]).exp_map() }).collect();
    let f = LinkField::from_links(g, links).unwrap();
    let mut state = FlowState::new(f, 1.2, StepControl::default(), Reduction::Deterministic).unwrap();
    for i in 0..20000 {
        state.step().unwrap();
        if i % 500 == 0 || i < 10 {
            println!("step {i}: t={:.3} dt={:.4e} residual={:.4e} ym={:.6e} kin_rate={:.3e}", state.t, state.dt, state.residual(), state.observables().ym, state.kinetic_rate());
        }
        if state.residual() < 1e-8 { println!("converged at step {i}"); break; }
    }
}
