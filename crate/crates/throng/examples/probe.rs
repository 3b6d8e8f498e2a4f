//! Scratch diagnostics for fixture tuning. Not part of the public surface.

use std::collections::BTreeMap;

use throng::world::Directive;
use throng::harness::{
    detour_scenario, escalation_scenario, evacuation_scenario, localized_scenario, run,
    table_scenario, RunOptions, Scenario, Strategy, TraceRecord, TABLE_ROWS,
};

fn control_probe(scenario: &Scenario) {
    let mut records: Vec<TraceRecord> = Vec::new();
    let report = run(scenario, &RunOptions::default(), &mut records).unwrap();

    let mut last_phase = String::new();
    for record in &records {
        match record {
            TraceRecord::Instruction { tick, instruction } => {
                println!(
                    "t{tick} instr {:?} group={} members={:?}",
                    instruction.directive, instruction.group_id, instruction.members
                );
            }
            TraceRecord::Controller { tick, key, state } => {
                let phase = format!("{:?}", state.phase);
                let head = phase.split(['{', '(']).next().unwrap_or("").to_string();
                if head != last_phase {
                    let line = format!(
                        "t{tick} ctl {key:?} phase={} led={:?} waiting={:?}",
                        &phase[..phase.len().min(120)],
                        state.led_group,
                        state.waiting_groups
                    );
                    println!("{}", &line[..line.len().min(300)]);
                    last_phase = head;
                }
            }
            _ => {}
        }
    }
    println!("--- report {} ---", scenario.name);
    println!("ticks run {}", report.metrics.ticks_run);
    for row in &report.metrics.rows {
        println!(
            "region {:?} detected t{} outcome {:?} secs {:?}",
            row.key, row.detected_tick, row.outcome, row.seconds_to_resolve
        );
    }
    for (tick, event) in &report.events {
        let line = format!("event t{tick} {event:?}");
        println!("{}", &line[..line.len().min(200)]);
    }
    println!("final disobedience: {}", report.metrics.final_disobedience);
}

fn evac_probe() {
    for strategy in [
        Strategy::Naive,
        Strategy::FreeFlow,
        Strategy::Trapped,
        Strategy::MacroMicro,
    ] {
        let scenario = evacuation_scenario();
        let options = RunOptions { strategy, ..RunOptions::default() };
        let mut records: Vec<TraceRecord> = Vec::new();
        run(&scenario, &options, &mut records).unwrap();
        let mut positives = 0usize;
        let mut first: Option<(u64, String)> = None;
        let mut by_grid: BTreeMap<String, usize> = BTreeMap::new();
        for record in &records {
            if let TraceRecord::Verdict { tick, grid, .. } = record {
                positives += 1;
                let label = format!("{grid:?}");
                *by_grid.entry(label.clone()).or_default() += 1;
                if first.is_none() {
                    first = Some((*tick, label));
                }
            }
        }
        println!(
            "{strategy:?}: positives {positives} first {first:?} grids {}",
            by_grid.len()
        );
    }
}

fn table_probe(rows: &[usize]) {
    for &i in rows {
        let (humans, groups, v_max) = TABLE_ROWS[i];
        let scenario = table_scenario(humans, groups, v_max);
        let mut records: Vec<TraceRecord> = Vec::new();
        let start = std::time::Instant::now();
        let report = run(&scenario, &RunOptions::default(), &mut records).unwrap();
        let wall = start.elapsed().as_secs_f64();
        let resolved: Vec<f64> = report
            .metrics
            .rows
            .iter()
            .filter_map(|r| r.seconds_to_resolve)
            .collect();
        let bad: Vec<String> = report
            .metrics
            .rows
            .iter()
            .filter(|r| r.seconds_to_resolve.is_none())
            .map(|r| format!("{:?}@{:?}", r.outcome, r.key))
            .collect();
        let episodes = records
            .iter()
            .filter(|r| {
                matches!(r, TraceRecord::Instruction { instruction, .. }
                    if matches!(instruction.directive, Directive::FollowSpotlight { .. }))
            })
            .count();
        println!(
            "({humans},{groups}) ticks {} rows {} max_secs {:?} leads {episodes} bad {bad:?} wall {wall:.1}s",
            report.metrics.ticks_run,
            report.metrics.rows.len(),
            resolved.iter().cloned().fold(None::<f64>, |acc, s| Some(acc.map_or(s, |a| a.max(s)))),
        );
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "detour".into());
    match which.as_str() {
        "localized" => control_probe(&localized_scenario()),
        "detour" => control_probe(&detour_scenario()),
        "escalation" => control_probe(&escalation_scenario()),
        "evac" => evac_probe(),
        "tablev" => {
            let i: usize = std::env::args().nth(2).unwrap().parse().unwrap();
            let (humans, groups, v_max) = TABLE_ROWS[i];
            control_probe(&table_scenario(humans, groups, v_max));
        }
        "table" => {
            let rows: Vec<usize> = std::env::args()
                .skip(2)
                .map(|a| a.parse().unwrap())
                .collect();
            let rows = if rows.is_empty() { (0..TABLE_ROWS.len()).collect() } else { rows };
            table_probe(&rows);
        }
        other => eprintln!("unknown probe {other}"),
    }
}
