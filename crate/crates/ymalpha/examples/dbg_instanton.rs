use ymalpha::action::{measure, smear, topological_charge};
use ymalpha::cli_io::initial::{centered, make_instanton};
use ymalpha::fields::clover_field_strength;
use ymalpha::flow::density_ceiling;
use ymalpha::geometry::{LatticeGeometry, Reduction};

fn main() {
    // Charge and action for rho = 2a on 16^4, both orientations.
    for orient in [1i8, -1] {
        let g = LatticeGeometry::new([16; 4], 1.0).unwrap();
        let f = make_instanton(g.clone(), centered(&g), 2.0, orient).unwrap();
        let obs = measure(&f, 1.0, Reduction::Deterministic).unwrap();
        println!(
            "16^4 rho=2a orient={orient}: ym={:.4} (8pi^2={:.4}) q_raw={:.4} maxdens={:.4} ceil={:.4}",
            obs.ym, 8.0 * std::f64::consts::PI.powi(2), obs.charge, obs.max_density, density_ceiling(1.0)
        );
        let sm = smear(&f, 10, 0.05).unwrap();
        let q_sm = topological_charge(&clover_field_strength(&sm));
        println!("   after 10 smears eps=0.05: q={q_sm:.4}");
    }
    // Refinement study at fixed rho/(L a) = 1/6.
    println!("refinement at rho = L/6:");
    for l in [8usize, 12, 16, 24] {
        let g = LatticeGeometry::new([l; 4], 1.0).unwrap();
        let rho = l as f64 / 6.0;
        let f = make_instanton(g.clone(), centered(&g), rho, 1).unwrap();
        let obs = measure(&f, 1.0, Reduction::Deterministic).unwrap();
        println!("  L={l}: ym={:.5} q={:.5} maxdens={:.4}", obs.ym, obs.charge, obs.max_density);
    }
    // Density of the small instanton used by the blow-up scenario.
    let g12 = LatticeGeometry::new([12; 4], 1.0).unwrap();
    let f = make_instanton(g12.clone(), centered(&g12), 1.5, 1).unwrap();
    let obs = measure(&f, 1.0, Reduction::Deterministic).unwrap();
    println!(
        "12^4 rho=1.5a: ym={:.4} q={:.4} maxdens={:.4} (ceiling {:.4}, frac {:.3})",
        obs.ym, obs.charge, obs.max_density, density_ceiling(1.0), obs.max_density / density_ceiling(1.0)
    );
}
