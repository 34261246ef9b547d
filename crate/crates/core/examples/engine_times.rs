// SPDX-License-Identifier: Apache-2.0

//! Single-engine wall times on multiplier miters.
//!
//! Usage: engine_times <sat|es|bdd|dnc> <width>... [--cap SECONDS] [--threads N]

use std::time::{Duration, Instant};

use cec_core::bdd::{bdd_check, compile_nodes, BddLimits};
use cec_core::es::es_check;
use cec_core::gen::{gen_multiplier_miter, MultArch};
use cec_core::sat::dnc::{dnc_solve, DncConfig};
use cec_core::sat::{sat_check, SolveLimits};
use cec_core::Budget;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let engine = args.first().cloned().unwrap_or_else(|| "sat".into());
    let mut cap = 600.0;
    let mut threads = 1;
    let mut widths = Vec::new();
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        match a.as_str() {
            "--cap" => {
                cap = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .expect("--cap SECONDS")
            }
            "--threads" => threads = it.next().and_then(|v| v.parse().ok()).expect("--threads N"),
            w => widths.push(w.parse::<usize>().expect("width")),
        }
    }
    for w in widths {
        let m =
            gen_multiplier_miter(w, MultArch::Array, MultArch::Diagonal).expect("width in range");
        let budget = Budget::with_timeout(Duration::from_secs_f64(cap));
        let start = Instant::now();
        let r = match engine.as_str() {
            "sat" => {
                let (r, s) = sat_check(
                    &m,
                    &SolveLimits {
                        budget,
                        max_conflicts: None,
                    },
                );
                eprintln!("{:?}", s.stats);
                r
            }
            "dnc" => {
                dnc_solve(
                    &m,
                    &DncConfig {
                        threads,
                        ..DncConfig::default()
                    },
                    &budget,
                )
                .verdict
            }
            "es" => es_check(&m, threads, &budget),
            "bdd" => bdd_check(&m, BddLimits::default(), &budget),
            "bdd-peak" => {
                let order: Vec<usize> = (0..m.num_pis()).collect();
                match compile_nodes(&m, &order, BddLimits::default(), &budget) {
                    Ok((mgr, _)) => eprintln!("peak live nodes {}", mgr.peak_live_nodes()),
                    Err(e) => eprintln!("stopped: {e}"),
                }
                bdd_check(&m, BddLimits::default(), &Budget::unlimited())
            }
            other => panic!("unknown engine {other}"),
        };
        println!(
            "{engine} n={w} gates={} {:?} {:.3}s",
            m.num_gates(),
            r,
            start.elapsed().as_secs_f64()
        );
    }
}
