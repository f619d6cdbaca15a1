use dfs_kerr::dfs_gates::{logical_basis_state, random_logical_state, GateKind, GateProbes, LogicalGate};
use dfs_kerr::kerr_homodyne::{gate_success_probability, success_probability, ProbeDescriptor};
use dfs_kerr::loss_fidelity::{surface_grid, surface_point, uniform_input};
use dfs_kerr::photonic_state::fidelity_pure;
use dfs_kerr::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Command, RunConfig};
use crate::error::{Result, EXIT_OK, EXIT_VERIFICATION};
use crate::grid::scalar;
use crate::output::{Cell, Table};

pub const FIDELITY_FLOOR: f64 = 1.0 - 1e-9;
const Z95: f64 = 1.959963984540054;

pub struct CommandOutput {
    pub table: Table,
    pub exit_code: u8,
}

/// RNG for task `index`: the master seed on its own ChaCha stream.
pub fn task_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn run(config: &RunConfig) -> Result<CommandOutput> {
    match config.command {
        Command::TruthTable => truth_table(config),
        Command::SweepAlpha => sweep(config, Sweep::Alpha),
        Command::SweepTheta => sweep(config, Sweep::Theta),
        Command::FidelitySurface => fidelity_surface(config),
        Command::Sample => sample(config),
        Command::Branches => branches(config),
    }
}

fn base_table(config: &RunConfig, columns: Vec<&'static str>) -> Table {
    Table { parameters: config.parameters(), columns, ..Table::default() }
}

fn probes(config: &RunConfig) -> Result<GateProbes> {
    let alpha = scalar("alpha", &config.alpha)?;
    let theta = scalar("theta", &config.theta)?;
    let gamma_t = scalar("gamma-t", &config.gamma_t)?;
    Ok(GateProbes::uniform(config.gate, alpha, theta, gamma_t)?)
}

fn bits(index: usize, n: usize) -> String {
    (0..n).map(|q| if (index >> (n - 1 - q)) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Basis inputs first, then `random` seeded superpositions.
fn labelled_inputs(config: &RunConfig) -> Vec<(String, Vec<Complex64>)> {
    let n = config.gate.qubit_count();
    let dim = 1usize << n;
    let basis = (0..dim).map(|i| (format!("basis:{}", bits(i, n)), logical_basis_state(dim, i)));
    let random = (0..config.random).map(|i| (format!("random:{i}"), random_logical_state(n, &mut task_rng(config.seed, i))));
    basis.chain(random).collect()
}

fn class_label(classes: &[u32]) -> String {
    classes.iter().map(u32::to_string).collect::<Vec<_>>().join("-")
}

fn truth_table(config: &RunConfig) -> Result<CommandOutput> {
    let gate = LogicalGate::new(config.gate)?;
    let probes = probes(config)?;
    let inputs = labelled_inputs(config);
    let per_input: Vec<Vec<Vec<Cell>>> = inputs
        .par_iter()
        .map(|(label, coeffs)| {
            let ideal = gate.ideal_output(coeffs)?;
            let outcomes = gate.enumerate_branches(&gate.encode(coeffs)?, &probes)?;
            outcomes
                .iter()
                .map(|o| {
                    let f = fidelity_pure(&o.output_state, &ideal)?;
                    Ok(vec![label.as_str().into(), class_label(&o.class_sequence).into(), o.probability.into(), f.into()])
                })
                .collect::<dfs_kerr::Result<Vec<_>>>()
        })
        .collect::<dfs_kerr::Result<_>>()?;
    let rows: Vec<Vec<Cell>> = per_input.into_iter().flatten().collect();
    let worst = rows
        .iter()
        .filter_map(|r| match r[3] {
            Cell::Float(f) => Some(f),
            _ => None,
        })
        .fold(1.0, f64::min);
    let pass = worst >= FIDELITY_FLOOR;
    let mut table = base_table(config, vec!["input", "classes", "probability", "fidelity"]);
    table.notes = vec![
        ("inputs", inputs.len().to_string()),
        ("worst_fidelity", format!("{worst:.15}")),
        ("verdict", if pass { "pass" } else { "fail" }.into()),
    ];
    table.rows = rows;
    Ok(CommandOutput { table, exit_code: if pass { EXIT_OK } else { EXIT_VERIFICATION } })
}

#[derive(Clone, Copy)]
enum Sweep {
    Alpha,
    Theta,
}

fn sweep(config: &RunConfig, axis: Sweep) -> Result<CommandOutput> {
    let (swept, fixed_name, fixed) = match axis {
        Sweep::Alpha => (&config.alpha, "theta", scalar("theta", &config.theta)?),
        Sweep::Theta => (&config.theta, "alpha", scalar("alpha", &config.alpha)?),
    };
    let points: Vec<(f64, f64)> = config.gamma_t.iter().flat_map(|&g| swept.iter().map(move |&v| (g, v))).collect();
    let rows = points
        .par_iter()
        .map(|&(gamma_t, v)| {
            let (alpha, theta) = match axis {
                Sweep::Alpha => (v, fixed),
                Sweep::Theta => (fixed, v),
            };
            ProbeDescriptor::new(alpha, theta, gamma_t)?;
            let p = success_probability(alpha, theta, gamma_t)?;
            let mut row: Vec<Cell> = vec![v.into(), gamma_t.into(), fixed.into(), p.into()];
            for kind in GateKind::ALL {
                row.push(gate_success_probability(kind, alpha, theta, gamma_t)?.into());
            }
            Ok(row)
        })
        .collect::<dfs_kerr::Result<Vec<_>>>()?;
    let swept_name = match axis {
        Sweep::Alpha => "alpha",
        Sweep::Theta => "theta",
    };
    let mut table =
        base_table(config, vec![swept_name, "gamma_t", fixed_name, "p_suc", "p_cnot", "p_toffoli", "p_fredkin"]);
    table.notes.push(("p_gate", "p_suc^2 (cnot), p_suc^5 (toffoli), p_suc^4 (fredkin)".into()));
    if let Sweep::Theta = axis {
        let reference = success_probability(70.0, 0.35, 1.0)?;
        table.notes.push((
            "note",
            format!(
                "p_suc = 1 - erfc(A*alpha*(1-cos(theta))/sqrt(2))/2 with A = exp(-gamma_t/2); the often quoted \
                 0.9801 at alpha=70 theta=0.35 gamma_t=1 does not follow from it (this expression gives {reference:.6})"
            ),
        ));
    }
    table.rows = rows;
    Ok(CommandOutput { table, exit_code: EXIT_OK })
}

fn fidelity_surface(config: &RunConfig) -> Result<CommandOutput> {
    let alpha = scalar("alpha", &config.alpha)?;
    let theta = scalar("theta", &config.theta)?;
    let grid = surface_grid(&config.gamma_t, &config.delta_over_d)?;
    let rows = grid
        .par_iter()
        .map(|&(gamma_t, dd)| {
            let p = surface_point(config.gate, alpha, theta, gamma_t, dd, config.steps)?;
            Ok(vec![
                p.delta_over_d.into(),
                p.gamma_t.into(),
                p.alpha.into(),
                p.theta.into(),
                p.n_steps.into(),
                p.fidelity.into(),
            ])
        })
        .collect::<dfs_kerr::Result<Vec<_>>>()?;
    let mut table = base_table(config, vec!["delta_over_d", "gamma_t", "alpha", "theta", "N", "fidelity"]);
    table.notes = vec![
        ("readout", "every stage reads x = m0 - (delta/d)*d, d half the gap from class 0 to its nearest class".into()),
        ("note", "probe amplitude is a free parameter here; alpha, theta and N are echoed above".into()),
    ];
    table.rows = rows;
    Ok(CommandOutput { table, exit_code: EXIT_OK })
}

/// Wilson score interval at 95 %.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn sample(config: &RunConfig) -> Result<CommandOutput> {
    let gate = LogicalGate::new(config.gate)?;
    let probes = probes(config)?;
    let coeffs = uniform_input(config.gate);
    let input = gate.encode(&coeffs)?;
    let ideal = gate.ideal_output(&coeffs)?;
    let runs = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let run = gate.run_sampled(&input, &probes, &mut task_rng(config.seed, i))?;
            Ok((run.success(), fidelity_pure(&run.output_state.normalized()?, &ideal)?))
        })
        .collect::<dfs_kerr::Result<Vec<_>>>()?;
    let n = runs.len();
    let successes = runs.iter().filter(|r| r.0).count();
    let mean_fidelity = runs.iter().map(|r| r.1).sum::<f64>() / n as f64;
    let rate = successes as f64 / n as f64;
    let (lo, hi) = wilson_interval(successes, n);
    let analytic = dfs_kerr::dfs_gates::analytic_success(&probes)?;
    let sigma = (analytic * (1.0 - analytic) / n as f64).sqrt();
    let z = if sigma > 0.0 { (rate - analytic) / sigma } else { 0.0 };
    let mut table = base_table(
        config,
        vec![
            "samples",
            "successes",
            "success_rate",
            "ci95_low",
            "ci95_high",
            "p_analytic",
            "sigma_analytic",
            "z_score",
            "mean_fidelity",
        ],
    );
    table.notes = vec![
        ("input", "uniform superposition of the logical basis".into()),
        ("success", "every readout classified into the class it was drawn from".into()),
    ];
    table.rows = vec![vec![
        n.into(),
        successes.into(),
        rate.into(),
        lo.into(),
        hi.into(),
        analytic.into(),
        sigma.into(),
        z.into(),
        mean_fidelity.into(),
    ]];
    table.summary = true;
    Ok(CommandOutput { table, exit_code: EXIT_OK })
}

fn branches(config: &RunConfig) -> Result<CommandOutput> {
    let gate = LogicalGate::new(config.gate)?;
    let probes = probes(config)?;
    let mut inputs = vec![("uniform".to_string(), uniform_input(config.gate))];
    inputs.extend((0..config.random).map(|i| {
        (format!("random:{i}"), random_logical_state(config.gate.qubit_count(), &mut task_rng(config.seed, i)))
    }));
    let mut rows = Vec::new();
    for (label, coeffs) in &inputs {
        let ideal = gate.ideal_output(coeffs)?;
        for o in gate.enumerate_branches(&gate.encode(coeffs)?, &probes)? {
            let xs: Vec<String> = o.records.iter().map(|r| dfs_kerr::loss_fidelity::format_sig(r.x)).collect();
            rows.push(vec![
                label.as_str().into(),
                class_label(&o.class_sequence).into(),
                o.probability.into(),
                fidelity_pure(&o.output_state, &ideal)?.into(),
                xs.join(";").into(),
                o.output_state.dump().trim_end().replace('\n', ";").into(),
            ]);
        }
    }
    let mut table = base_table(config, vec!["input", "classes", "probability", "fidelity", "readouts", "output_state"]);
    table.notes = vec![("output_state", "terms pols|paths|k|re|im separated by ';'".into())];
    table.rows = rows;
    Ok(CommandOutput { table, exit_code: EXIT_OK })
}

/// Plot script for the data file at `data_path`.
pub fn gnuplot_script(config: &RunConfig, data_path: &str) -> Option<String> {
    let head = format!("set datafile separator ','\nset key autotitle columnhead\nfile = '{data_path}'\n");
    let per_gamma = |x_label: &str, ylabel: &str| {
        let gammas: Vec<String> =
            config.gamma_t.iter().map(|g| dfs_kerr::loss_fidelity::format_sig(*g)).collect();
        format!(
            "{head}set xlabel '{x_label}'\nset ylabel '{ylabel}'\ngammas = \"{}\"\n\
             plot for [col=4:7] for [g in gammas] file using 1:(abs($2 - g) < 1e-12 ? column(col) : 1/0) \
             with lines title columnhead(col).' gamma_t='.g\n",
            gammas.join(" ")
        )
    };
    match config.command {
        Command::SweepAlpha => Some(per_gamma("alpha", "success probability")),
        Command::SweepTheta => Some(per_gamma("theta", "success probability")),
        Command::FidelitySurface => Some(format!(
            "{head}set xlabel 'delta/d'\nset ylabel 'gamma t'\nset zlabel 'F'\nset dgrid3d\n\
             splot file using 1:2:6 with lines title 'fidelity'\n"
        )),
        Command::TruthTable | Command::Sample | Command::Branches => None,
    }
}
