//! Invariant checks run by `spinsplit verify`. Small lattices, a few
//! seconds in total.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{
    convergence_order, gilbert_reference, reversibility_defect, run, stability_scan, time_reversal_defect,
};
use crate::fields::total_energy;
use crate::flows::gilbert_flow;
use crate::integrators::{Scheme, ThermoState};
use crate::lattice::{BoundaryCondition, ModelParams, SpinLattice};
use crate::reference::Tolerance;
use crate::vec3::Vec3;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }

    fn failed(name: &'static str, err: impl std::fmt::Display) -> Self {
        Check::new(name, false, format!("error: {err}"))
    }
}

fn random_state(n: usize, seed: u64) -> ThermoState {
    ThermoState::new(
        SpinLattice::random(n, seed, BoundaryCondition::Periodic).expect("even n"),
        0.0,
    )
}

fn thermo_params(n: usize) -> ModelParams {
    ModelParams {
        temperature: 0.04,
        ..ModelParams::ferromagnet(n, 0.9)
    }
}

fn spin_lengths() -> Check {
    let name = "spin lengths (thermostat, 16x16, 500 steps)";
    match run(random_state(16, 1), &thermo_params(16), Scheme::Thermostatted, 0.01, 500, 1) {
        Ok(out) => {
            let drift = out.records.iter().map(|r| r.max_norm_drift).fold(0.0, f64::max);
            Check::new(name, drift <= 1e-10 && !out.blew_up(), format!("max drift {drift:.3e}"))
        }
        Err(e) => Check::failed(name, e),
    }
}

fn isotropic_energy() -> Check {
    let name = "isotropic energy (conservative, 16x16, 2000 steps)";
    let p = ModelParams::ferromagnet(16, 1.0);
    match run(random_state(16, 2), &p, Scheme::Conservative, 0.1, 2000, 1) {
        Ok(out) => {
            let e0 = out.records[0].energy;
            let drift = out
                .records
                .iter()
                .map(|r| ((r.energy - e0) / e0).abs())
                .fold(0.0, f64::max);
            Check::new(name, drift <= 1e-8, format!("relative drift {drift:.3e}"))
        }
        Err(e) => Check::failed(name, e),
    }
}

fn gilbert_oracle() -> Check {
    let name = "gilbert flow vs reference (100 cases)";
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let z = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalized();
        let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalized();
        let b = dir * rng.gen_range(0.1..10.0);
        let alpha = rng.gen_range(-2.0..2.0);
        let t = rng.gen_range(0.0..5.0);
        match gilbert_reference(z, b, alpha, t, Tolerance::default()) {
            Ok(r) => worst = worst.max(gilbert_flow(z, b, alpha, t).max_abs_diff(r)),
            Err(e) => return Check::failed(name, e),
        }
    }
    let spot = gilbert_flow(Vec3::new(1.0, 0.0, 0.0), Vec3::UP, 1.0, 1.0);
    let spot_err = spot.max_abs_diff(Vec3::new(1.0 / 1f64.cosh(), 0.0, -(1f64.tanh())));
    Check::new(
        name,
        worst <= 1e-7 && spot_err <= 1e-12,
        format!("max error {worst:.3e}, sech/tanh spot {spot_err:.3e}"),
    )
}

fn reversibility() -> Check {
    let name = "reversibility (thermostat R-map, conservative forward/back)";
    let s = ThermoState {
        alpha: 0.3,
        ..random_state(8, 3)
    };
    // See `second_order` for the coupling: with 1/8 the forward run contracts
    // by ~e^-25 and the reflected run amplifies rounding by the same factor.
    let p = ModelParams {
        coupling: 1.0 / 50.0,
        ..thermo_params(8)
    };
    let r = reversibility_defect(&s, &p, Scheme::Thermostatted, 0.01, 10);
    let c = time_reversal_defect(&s, &thermo_params(8), Scheme::Conservative, 0.01, 1);
    Check::new(name, r <= 1e-8 && c <= 1e-12, format!("R-defect {r:.3e}, forward/back {c:.3e}"))
}

fn second_order() -> Check {
    let name = "second order (three splittings, 8x8)";
    let dts = [0.02, 0.01, 0.005, 0.0025];
    let s = random_state(8, 4);
    let cases = [
        (Scheme::Conservative, ModelParams::ferromagnet(8, 0.9)),
        (
            Scheme::Dissipative,
            ModelParams {
                alpha0: -0.5,
                ..ModelParams::ferromagnet(8, 1.1)
            },
        ),
        // Thermostat coupling of the 50x50 runs; 1/8 makes alpha stiff
        // enough that these step sizes are not yet asymptotic.
        (
            Scheme::Thermostatted,
            ModelParams {
                coupling: 1.0 / 50.0,
                ..thermo_params(8)
            },
        ),
    ];
    let mut orders = Vec::new();
    for (scheme, p) in cases {
        match convergence_order(&s, &p, scheme, 1.0, &dts) {
            Ok(o) => orders.push(o),
            Err(e) => return Check::failed(name, e),
        }
    }
    let ok = orders.iter().all(|o| (o - 2.0).abs() <= 0.2);
    Check::new(name, ok, format!("orders {orders:.3?}"))
}

fn damping_dissipates() -> Check {
    let name = "energy decay with alpha0 * jk > 0 (16x16)";
    let p = ModelParams {
        alpha0: 0.5,
        ..ModelParams::ferromagnet(16, 1.1)
    };
    match run(random_state(16, 5), &p, Scheme::Dissipative, 0.1, 300, 1) {
        Ok(out) => {
            let ups = out
                .records
                .windows(2)
                .filter(|w| w[1].energy > w[0].energy + 1e-10 * w[0].energy.abs())
                .count();
            Check::new(name, ups == 0, format!("{ups} increases"))
        }
        Err(e) => Check::failed(name, e),
    }
}

fn large_step_stability() -> Check {
    let name = "splitting survives lambda=3, dt=0.3 to t=10 (16x16)";
    let p = ModelParams {
        temperature: 0.04,
        ..ModelParams::ferromagnet(16, 3.0)
    };
    match stability_scan(&p, Scheme::Thermostatted, 16, &BoundaryCondition::Periodic, &[0.3], 10.0, &[1, 2]) {
        Ok(res) => {
            let ok = res.iter().all(|r| !r.blew_up);
            Check::new(name, ok, format!("{} runs", res.len()))
        }
        Err(e) => Check::failed(name, e),
    }
}

fn fixed_border_energy() -> Check {
    // Exact conservation holds for any boundary condition in the isotropic case.
    let name = "isotropic energy with fixed border (9x9)";
    let p = ModelParams::ferromagnet(9, 1.0);
    let border = crate::lattice::Border::uniform(9, Vec3::new(0.6, 0.0, 0.8));
    let lat = match SpinLattice::random(9, 6, BoundaryCondition::Fixed(border)) {
        Ok(l) => l,
        Err(e) => return Check::failed(name, e),
    };
    let mut s = ThermoState::new(lat, 0.0);
    let e0 = total_energy(&s.lattice, &p);
    for _ in 0..1000 {
        Scheme::Conservative.step(&mut s, &p, 0.1);
    }
    let drift = ((total_energy(&s.lattice, &p) - e0) / e0).abs();
    Check::new(name, drift <= 1e-8, format!("relative drift {drift:.3e}"))
}

pub fn verification_suite() -> Vec<Check> {
    vec![
        spin_lengths(),
        isotropic_energy(),
        fixed_border_energy(),
        gilbert_oracle(),
        reversibility(),
        second_order(),
        damping_dissipates(),
        large_step_stability(),
    ]
}
