use ymalpha::action::measure;
use ymalpha::fields::LinkField;
use ymalpha::flow::{FlowState, StepControl, StepOutcome};
use ymalpha::geometry::{AlgebraElement, GroupElement, LatticeGeometry, Reduction};

/// Regular-gauge BPST with abrupt minimal-image wrap: no window, no gauge glue.
fn abrupt_regular(g: LatticeGeometry, center: [f64; 4], rho: f64) -> LinkField {
    let geo = g.clone();
    LinkField::from_fn(g, move |s, mu| {
        let x = geo.delinearize(s);
        const SEG: usize = 8;
        let mut u = GroupElement::IDENTITY;
        for seg in (0..SEG).rev() {
            let frac = (seg as f64 + 0.5) / SEG as f64;
            let mut d = [0.0f64; 4];
            let mut rr = 0.0;
            for k in 0..4 {
                let l = geo.dims[k] as f64;
                let mut delta = x[k] as f64 + if k == mu { frac } else { 0.0 } - center[k];
                delta -= l * (delta / l).round();
                d[k] = delta;
                rr += delta * delta;
            }
            let r = rr.sqrt().max(1e-30);
            let q = [d[0] / r, d[1] / r, d[2] / r, d[3] / r];
            // du/dx_mu
            let mut e = [0.0; 4];
            e[mu] = 1.0;
            let du = [
                e[0] / r - d[mu] / rr * q[0],
                e[1] / r - d[mu] / rr * q[1],
                e[2] / r - d[mu] / rr * q[2],
                e[3] / r - d[mu] / rr * q[3],
            ];
            // A_reg = rr/(rr+rho^2) * u * d(u^dagger)
            let uq = GroupElement::new(q);
            let duq = GroupElement::new(du).dagger();
            let prod = uq * duq;
            let f = rr / (rr + rho * rho);
            let step = 1.0 / SEG as f64;
            u = AlgebraElement::new([prod.q[1] * f * step, prod.q[2] * f * step, prod.q[3] * f * step])
                .exp_map()
                .multiply(&u);
        }
        u.normalized()
    })
}

fn main() {
    let g = LatticeGeometry::new([16; 4], 1.0).unwrap();
    let c = [8.5, 8.5, 8.5, 8.5];
    for rho in [2.0f64, 3.0] {
        let f = abrupt_regular(g.clone(), c, rho);
        let obs = measure(&f, 1.0, Reduction::Deterministic).unwrap();
        println!("abrupt regular rho={rho}: ym={:.3} q={:.4} maxdens={:.4}", obs.ym, obs.charge, obs.max_density);
        let mut st = FlowState::new(f, 1.0, StepControl::default(), Reduction::Deterministic).unwrap();
        let mut step = 0;
        loop {
            match st.step().unwrap() {
                StepOutcome::Blowup(kind) => { println!("  BLOWUP {kind:?} at step {step} t={:.2} q={:.3}", st.t, st.observables().charge); break; }
                _ => {}
            }
            step += 1;
            if step % 60 == 0 {
                let h = *st.history.last().unwrap();
                println!("  step {step}: t={:.2} ym={:.3} q={:.3} maxdens={:.3}", h.t, h.ym, h.charge, h.max_density);
            }
            if step >= 900 { println!("  survived 900 steps"); break; }
        }
    }
}
