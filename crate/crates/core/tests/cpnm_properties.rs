use porestokes::cpnm::{conductance_2d, solve_network, NetworkPore, NetworkThroat, PoreNetwork, PoreRole};
use proptest::prelude::*;

fn pore(x: f64, role: PoreRole) -> NetworkPore<f64> {
    NetworkPore { position: [x, 0.0], role }
}

fn throat(i: usize, j: usize, g: f64) -> NetworkThroat<f64> {
    NetworkThroat { pores: (i, j), conductance: g, length: 1.0, width: 0.0 }
}

/// Inlet - interior - outlet chain with conductances `g1`, `g2`.
fn series(g1: f64, g2: f64, p_in: f64, p_out: f64) -> PoreNetwork<f64> {
    PoreNetwork {
        pores: vec![pore(0.0, PoreRole::Inlet), pore(1.0, PoreRole::Interior), pore(2.0, PoreRole::Outlet)],
        throats: vec![throat(0, 1, g1), throat(1, 2, g2)],
        p_in,
        p_out,
    }
}

#[test]
fn series_flux_is_harmonic() {
    let (g1, g2) = (conductance_2d(0.3, 1.0, 1.0).unwrap(), conductance_2d(0.5, 2.0, 1.0).unwrap());
    let sol = solve_network(&series(g1, g2, 1.0, 0.0)).unwrap();
    // q_ij = -g (p_i - p_j): flow from the inlet side is negative.
    let q = -1.0 / (1.0 / g1 + 1.0 / g2);
    for f in &sol.fluxes {
        assert!((f - q).abs() <= 1e-12 * q.abs(), "{f} vs {q}");
    }
    let p_mid = g1 / (g1 + g2);
    assert!((sol.pressures[1] - p_mid).abs() <= 1e-12);
}

/// Random connected network: a path 0..n plus extra chords.
fn random_network() -> impl Strategy<Value = PoreNetwork<f64>> {
    (4usize..12)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(0.1f64..10.0, n - 1),
                prop::collection::vec((0..n, 0..n, 0.1f64..10.0), 0..8),
            )
        })
        .prop_map(|(n, path, chords)| {
            let mut pores: Vec<NetworkPore<f64>> = (0..n).map(|i| pore(i as f64, PoreRole::Interior)).collect();
            pores[0].role = PoreRole::Inlet;
            pores[n - 1].role = PoreRole::Outlet;
            let mut throats: Vec<NetworkThroat<f64>> =
                path.iter().enumerate().map(|(i, &g)| throat(i, i + 1, g)).collect();
            for (a, b, g) in chords {
                if a != b {
                    throats.push(throat(a.min(b), a.max(b), g));
                }
            }
            PoreNetwork { pores, throats, p_in: 1.0, p_out: 0.0 }
        })
}

proptest! {
    #[test]
    fn interior_pores_conserve_mass(net in random_network()) {
        let sol = solve_network(&net).unwrap();
        let net_q = sol.net_fluxes(&net);
        let scale: f64 = sol.fluxes.iter().map(|q| q.abs()).sum::<f64>() + 1e-300;
        for (i, p) in net.pores.iter().enumerate() {
            if p.role == PoreRole::Interior {
                prop_assert!(net_q[i].abs() <= 1e-12 * scale);
            }
            prop_assert!(sol.pressures[i] >= -1e-12 && sol.pressures[i] <= 1.0 + 1e-12);
        }
        // Inflow equals outflow.
        let total: f64 = net_q.iter().sum();
        prop_assert!(total.abs() <= 1e-12 * scale);
    }

    #[test]
    fn reversing_the_drive_mirrors_pressures(net in random_network()) {
        let sol = solve_network(&net).unwrap();
        let mut rev = net.clone();
        rev.p_in = net.p_out;
        rev.p_out = net.p_in;
        let sol_r = solve_network(&rev).unwrap();
        for (a, b) in sol.pressures.iter().zip(&sol_r.pressures) {
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }
        for (a, b) in sol.fluxes.iter().zip(&sol_r.fluxes) {
            prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn scaling_conductances_scales_fluxes(net in random_network(), s in 0.01f64..100.0) {
        let sol = solve_network(&net).unwrap();
        let mut scaled = net.clone();
        for t in scaled.throats.iter_mut() {
            t.conductance *= s;
        }
        let sol_s = solve_network(&scaled).unwrap();
        for (a, b) in sol.pressures.iter().zip(&sol_s.pressures) {
            prop_assert!((a - b).abs() <= 1e-11);
        }
        for (a, b) in sol.fluxes.iter().zip(&sol_s.fluxes) {
            prop_assert!((s * a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }
}
