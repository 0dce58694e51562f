//! Command-line front end: classify resource states, run teleportation
//! protocols, report entanglement, and exercise the randomized
//! self-checks.
//!
//! Every run prints one JSON envelope to stdout (see [`report`]); human
//! warnings go to stderr. Exit codes for `classify`: 0 the resource is
//! capable, 2 not capable, 3 undecided, 1 any error. Other subcommands
//! use 0/1 (and `check` exits 1 when a suite fails).

use clap::{Parser, Subcommand, ValueEnum};
use qutel_cli::{report, statefile};
use qutel_core::channels::{fold_blocks, teleportation_capability_after_channel, KrausChannel};
use qutel_core::checks;
use qutel_core::classify::classify;
use qutel_core::entanglement::eof_pure;
use qutel_core::linalg::Side;
use qutel_core::measure::block_basis;
use qutel_core::protocol::{
    average_fidelity, best_effort_simulate, bob_first_simulate, expected_fidelity,
    flatten_leaves, simulate, TeleportOutcome,
};
use qutel_core::states::{fixtures, random_input};
use qutel_core::{
    BipartiteMixed, CapableKind, Classification, ComplexMatrix, EntanglementReport, InputState,
    ProtocolCertificate, Verdict,
};
use report::Report;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "qutel",
    version,
    about = "Qudit teleportation simulator and entangled-resource classifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a resource supports faithful teleportation of
    /// d-level inputs, with a certificate or a concrete refutation.
    Classify {
        /// JSON state file holding the resource (kind "pure" or "mixed").
        #[arg(long)]
        resource: PathBuf,
        /// Dimension d of the states to teleport.
        #[arg(long, default_value_t = 2)]
        input_dim: usize,
    },
    /// Teleport an input through a resource: exactly when certified,
    /// best-effort (with average fidelity) otherwise.
    Simulate {
        #[arg(long)]
        resource: PathBuf,
        /// Optional JSON input state (kind "input"); defaults to a seeded
        /// random input.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        input_dim: usize,
        /// Seed for the default random input.
        #[arg(long, default_value_t = 17)]
        input_seed: u64,
        /// Trials for the best-effort average fidelity estimate.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Seed for the best-effort trial inputs.
        #[arg(long, default_value_t = 2718)]
        seed: u64,
    },
    /// Entanglement-of-formation report against the log2(d) threshold.
    Entanglement {
        #[arg(long)]
        resource: PathBuf,
        #[arg(long, default_value_t = 2)]
        input_dim: usize,
    },
    /// Built-in walkthrough scenarios.
    Demo {
        #[arg(value_enum)]
        scenario: Scenario,
        /// Mixing parameter for the five-level scenario (0 < a < 1).
        #[arg(long, default_value_t = 0.5)]
        mixing: f64,
    },
    /// Randomized structural self-checks (deterministic under a fixed
    /// seed); exits 1 if any suite finds a counterexample.
    Check {
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = 20260819)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    /// Mixture of two Bell pairs on orthogonal sender blocks, classified
    /// and teleported through exactly.
    TwoBlock,
    /// Pure five-level resource with a two-group Schmidt spectrum,
    /// teleporting qubits faithfully without maximal entanglement.
    FiveLevel,
    /// A pinching channel that breaks a maximally entangled state into a
    /// capable block mixture, versus depolarizing noise that does not.
    Channel,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32, String> {
    match command {
        Command::Classify { resource, input_dim } => {
            let report = Report::start("classify");
            let state = statefile::load_resource(&resource)?;
            let classification = classify(&state, input_dim).map_err(|e| e.to_string())?;
            let code = verdict_exit(&classification.verdict);
            Ok(report.finish(classification_json(&classification), code))
        }
        Command::Simulate {
            resource,
            input,
            input_dim,
            input_seed,
            trials,
            seed,
        } => {
            let report = Report::start("simulate");
            let state = statefile::load_resource(&resource)?;
            let (input_state, input_source) = match input {
                Some(path) => (statefile::load_input(&path)?, serde_json::json!("file")),
                None => (
                    random_input(input_dim, input_seed),
                    serde_json::json!({ "seed": input_seed }),
                ),
            };
            if input_state.d() != input_dim {
                return Err(format!(
                    "input state has dimension {}, but --input-dim is {input_dim}",
                    input_state.d()
                ));
            }
            let mut result = simulate_json(&state, &input_state, input_dim, trials, seed)?;
            result["input"] = serde_json::json!({
                "source": input_source,
                "amplitudes": amplitudes_json(input_state.amplitudes()),
            });
            Ok(report.finish(result, 0))
        }
        Command::Entanglement { resource, input_dim } => {
            let report = Report::start("entanglement");
            let state = statefile::load_resource(&resource)?;
            let classification = classify(&state, input_dim).map_err(|e| e.to_string())?;
            let result = serde_json::json!({
                "input_dim": input_dim,
                "resource_dims": [classification.dims.0, classification.dims.1],
                "entanglement": entanglement_json(&classification.entanglement),
                "classification_summary": classification.summary(),
            });
            Ok(report.finish(result, 0))
        }
        Command::Demo { scenario, mixing } => match scenario {
            Scenario::TwoBlock => demo_two_block(),
            Scenario::FiveLevel => demo_five_level(mixing),
            Scenario::Channel => demo_channel(),
        },
        Command::Check { samples, seed } => {
            let report = Report::start("check");
            if samples == 0 {
                return Err("--samples must be positive".into());
            }
            let reports = checks::run_all(samples, seed).map_err(|e| e.to_string())?;
            let all_passed = reports.iter().all(|r| r.passed());
            let result = serde_json::json!({
                "samples": samples,
                "seed": seed,
                "suites": reports
                    .iter()
                    .map(|r| {
                        serde_json::json!({
                            "name": r.name,
                            "samples": r.samples,
                            "failures": r.failures,
                            "passed": r.passed(),
                            "first_counterexample": r.first_counterexample,
                        })
                    })
                    .collect::<Vec<_>>(),
                "all_passed": all_passed,
            });
            Ok(report.finish(result, if all_passed { 0 } else { 1 }))
        }
    }
}

fn verdict_exit(verdict: &Verdict) -> i32 {
    match verdict {
        Verdict::Capable { .. } => 0,
        Verdict::NotCapable { .. } => 2,
        Verdict::Unknown { .. } => 3,
    }
}

fn amplitudes_json(amplitudes: &[qutel_core::C64]) -> serde_json::Value {
    serde_json::Value::Array(
        amplitudes.iter().map(|z| serde_json::json!([z.re, z.im])).collect(),
    )
}

fn entanglement_json(report: &EntanglementReport) -> serde_json::Value {
    serde_json::json!({
        "bits": report.bits,
        "exact": report.exact,
        "threshold_bits": report.threshold_bits,
        "threshold_met": report.threshold_met,
    })
}

fn classification_json(classification: &Classification) -> serde_json::Value {
    let mut result = serde_json::json!({
        "input_dim": classification.d,
        "resource_dims": [classification.dims.0, classification.dims.1],
        "summary": classification.summary(),
        "entanglement": entanglement_json(&classification.entanglement),
    });
    match &classification.verdict {
        Verdict::Capable { kind, certificate } => {
            result["verdict"] = serde_json::json!("capable");
            let (kind_name, detail) = match kind {
                CapableKind::PureMaxEnt => ("pure-max-ent", serde_json::json!({})),
                CapableKind::MixedMaxEnt { structure, blocks_on } => (
                    "mixed-max-ent",
                    serde_json::json!({
                        "blocks": structure.blocks.len(),
                        "weights": structure.weights(),
                        "blocks_on": match blocks_on {
                            Side::A => "sender",
                            Side::B => "receiver",
                        },
                    }),
                ),
                CapableKind::GroupedSchmidt { groups } => (
                    "grouped-schmidt",
                    serde_json::json!({
                        "groups": groups
                            .iter()
                            .map(|(v, m)| serde_json::json!([v, m]))
                            .collect::<Vec<_>>(),
                    }),
                ),
                CapableKind::CertifiedMixture => ("certified-mixture", serde_json::json!({})),
            };
            result["kind"] = serde_json::json!(kind_name);
            result["detail"] = detail;
            result["certificate"] = match certificate {
                ProtocolCertificate::AliceFirst(cert) => {
                    let live = cert
                        .probabilities()
                        .iter()
                        .filter(|&&p| p > qutel_core::tol::PROB_CUTOFF)
                        .count();
                    serde_json::json!({
                        "protocol": "sender-first",
                        "outcomes": cert.probabilities().len(),
                        "live_outcomes": live,
                    })
                }
                ProtocolCertificate::BobFirst { projectors, leaves } => serde_json::json!({
                    "protocol": "receiver-first",
                    "branches": projectors.len(),
                    "certified_branches": leaves.len(),
                }),
            };
        }
        Verdict::NotCapable { reason } => {
            result["verdict"] = serde_json::json!("not-capable");
            result["reason"] = serde_json::json!(reason);
        }
        Verdict::Unknown { reason } => {
            result["verdict"] = serde_json::json!("unknown");
            result["reason"] = serde_json::json!(reason);
        }
    }
    result
}

fn outcomes_json(outcomes: &[TeleportOutcome]) -> serde_json::Value {
    serde_json::Value::Array(
        outcomes
            .iter()
            .map(|o| {
                serde_json::json!({
                    "outcome": o.outcome,
                    "probability": o.probability,
                    "fidelity": o.fidelity,
                })
            })
            .collect(),
    )
}

fn simulate_json(
    resource: &BipartiteMixed,
    input: &InputState,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<serde_json::Value, String> {
    let classification = classify(resource, d).map_err(|e| e.to_string())?;
    match &classification.verdict {
        Verdict::Capable {
            certificate: ProtocolCertificate::AliceFirst(cert),
            ..
        } => {
            let outcomes = simulate(resource, input, cert).map_err(|e| e.to_string())?;
            Ok(serde_json::json!({
                "mode": "sender-first",
                "faithful": true,
                "input_dim": d,
                "resource_dims": [classification.dims.0, classification.dims.1],
                "outcomes": outcomes_json(&outcomes),
                "expected_fidelity": expected_fidelity(&outcomes),
            }))
        }
        Verdict::Capable {
            certificate: ProtocolCertificate::BobFirst { projectors, .. },
            ..
        } => {
            let leaves =
                bob_first_simulate(resource, projectors, input, d).map_err(|e| e.to_string())?;
            let flat = flatten_leaves(&leaves);
            Ok(serde_json::json!({
                "mode": "receiver-first",
                "faithful": leaves.iter().all(|l| l.certified),
                "input_dim": d,
                "resource_dims": [classification.dims.0, classification.dims.1],
                "branches": leaves
                    .iter()
                    .map(|l| {
                        serde_json::json!({
                            "receiver_outcome": l.bob_outcome,
                            "probability": l.probability,
                            "certified": l.certified,
                        })
                    })
                    .collect::<Vec<_>>(),
                "outcomes": outcomes_json(&flat),
                "expected_fidelity": expected_fidelity(&flat),
            }))
        }
        _ => {
            let (m, _) = resource.dims();
            let basis = block_basis(d, &[ComplexMatrix::identity(m)], m)
                .map_err(|e| e.to_string())?;
            let outcomes =
                best_effort_simulate(resource, input, &basis, d).map_err(|e| e.to_string())?;
            let average =
                average_fidelity(resource, &basis, d, trials, seed).map_err(|e| e.to_string())?;
            Ok(serde_json::json!({
                "mode": "best-effort",
                "faithful": false,
                "input_dim": d,
                "resource_dims": [classification.dims.0, classification.dims.1],
                "classification_summary": classification.summary(),
                "outcomes": outcomes_json(&outcomes),
                "expected_fidelity": expected_fidelity(&outcomes),
                "average_fidelity": average,
                "trials": trials,
            }))
        }
    }
}

fn demo_two_block() -> Result<i32, String> {
    let report = Report::start("demo two-block");
    let resource = fixtures::two_block_mixture();
    let classification = classify(&resource, 2).map_err(|e| e.to_string())?;
    let input = random_input(2, 7);
    let simulation = simulate_json(&resource, &input, 2, 400, 2718)?;
    let result = serde_json::json!({
        "scenario": "two-block",
        "description": "an equal mixture of two Bell pairs carried on orthogonal \
                        sender-side blocks teleports qubits exactly",
        "classification": classification_json(&classification),
        "simulation": simulation,
    });
    Ok(report.finish(result, verdict_exit(&classification.verdict)))
}

fn demo_five_level(mixing: f64) -> Result<i32, String> {
    if !(mixing > 0.0 && mixing < 1.0) {
        return Err(format!("--mixing must lie strictly between 0 and 1, got {mixing}"));
    }
    let report = Report::start("demo five-level");
    let pure = fixtures::five_level(mixing).map_err(|e| e.to_string())?;
    let closed_form = eof_pure(&pure);
    let resource = BipartiteMixed::from_pure(&pure);
    let classification = classify(&resource, 2).map_err(|e| e.to_string())?;
    let input = random_input(2, 7);
    let simulation = simulate_json(&resource, &input, 2, 400, 2718)?;
    let result = serde_json::json!({
        "scenario": "five-level",
        "description": "a pure resource whose Schmidt spectrum has two plateaus of \
                        width 2 and 3 teleports qubits faithfully despite not being \
                        maximally entangled",
        "mixing": mixing,
        "entanglement_bits": closed_form,
        "classification": classification_json(&classification),
        "simulation": simulation,
    });
    Ok(report.finish(result, verdict_exit(&classification.verdict)))
}

fn demo_channel() -> Result<i32, String> {
    let report = Report::start("demo channel");
    let start = BipartiteMixed::from_pure(&fixtures::maximally_entangled_pure(4));

    let pinch = KrausChannel::block_pinching(4, 2).map_err(|e| e.to_string())?;
    let pinched = pinch.apply_one_sided(&start, Side::B).map_err(|e| e.to_string())?;
    let (_, pinched_class) = teleportation_capability_after_channel(&start, &pinch, Side::B, 2)
        .map_err(|e| e.to_string())?;

    let folded = fold_blocks(&pinched, Side::B, 2).map_err(|e| e.to_string())?;
    let fold_residual = folded.density().distance(fixtures::two_block_mixture().density());
    let folded_class = classify(&folded, 2).map_err(|e| e.to_string())?;

    let noise = KrausChannel::depolarizing(4, 0.35).map_err(|e| e.to_string())?;
    let (_, noisy_class) = teleportation_capability_after_channel(&start, &noise, Side::B, 2)
        .map_err(|e| e.to_string())?;

    let result = serde_json::json!({
        "scenario": "channel",
        "description": "pinching the receiver side of a maximally entangled state \
                        leaves a capable block mixture (foldable onto a single \
                        qubit), while depolarizing noise destroys the capability",
        "stages": [
            {
                "stage": "pinched",
                "channel": "block pinching (two 2-level sectors)",
                "classification": classification_json(&pinched_class),
            },
            {
                "stage": "folded",
                "residual_vs_reference_mixture": fold_residual,
                "classification": classification_json(&folded_class),
            },
            {
                "stage": "depolarized",
                "channel": "depolarizing, strength 0.35",
                "classification": classification_json(&noisy_class),
            },
        ],
    });
    Ok(report.finish(result, verdict_exit(&folded_class.verdict)))
}
