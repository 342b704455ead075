//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on bad input or an infeasible scenario,
//! 2 when a plan fails verification.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wpcn_core::eh_model::Harvester;
use wpcn_core::oracle::VerifyTolerances;
use wpcn_core::planner::{solve, EnergySignalPlan, Scheme};
use wpcn_core::system_model::SystemInstance;

use crate::plan_io::{check_plan, PlanCheck, PlanRecord};
use crate::scenario::Scenario;
use crate::sweep::{run_sweep, write_csv, SweepOptions, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "wpcn", version, about = "Downlink energy signal design for wireless-powered networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario and print the plan.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
        /// Channel seed; defaults to the scenario's.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the plan as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a Monte-Carlo sweep and write CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write zeros in the timing column so output is reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Check a saved plan against its scenario.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|_| format!("expected one of: {}", Scheme::ALL.map(Scheme::as_str).join(", ")))
}

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_VERIFY: u8 = 2;

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

pub fn execute(command: &Command) -> anyhow::Result<ExitCode> {
    let stdout = std::io::stdout();
    match command {
        Command::Run { scenario, scheme, seed, json } => {
            let scenario = Scenario::load(scenario)?;
            let seed = seed.unwrap_or(scenario.seed);
            let inst = scenario.instance(seed)?;
            let plan = solve(&inst, *scheme)?;
            let check = check_plan(&inst, &plan, &VerifyTolerances::default())?;
            if let Some(path) = json {
                PlanRecord::from_plan(&plan, seed).save(path)?;
            }
            stdout.lock().write_all(render_run(&inst, &plan, seed, &check).as_bytes())?;
            Ok(if check.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY) })
        }
        Command::Sweep { spec, out, no_timing } => {
            let spec = SweepSpec::load(spec)?;
            let rows = run_sweep(&spec, SweepOptions { timing: !no_timing })?;
            match out {
                Some(path) => write_csv(&rows, std::fs::File::create(path)?)?,
                None => write_csv(&rows, stdout.lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { scenario, plan } => {
            let scenario = Scenario::load(scenario)?;
            let record = PlanRecord::load(plan)?;
            let inst = scenario.instance(record.seed)?;
            let plan = record.to_plan()?;
            anyhow::ensure!(
                plan.uplink_powers.len() == inst.num_users(),
                "plan has {} uplink powers for {} users",
                plan.uplink_powers.len(),
                inst.num_users()
            );
            let check = check_plan(&inst, &plan, &VerifyTolerances::default())?;
            stdout.lock().write_all(render_check(&check).as_bytes())?;
            Ok(if check.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY) })
        }
    }
}

pub fn render_run(inst: &SystemInstance, plan: &EnergySignalPlan, seed: u64, check: &PlanCheck) -> String {
    let mut s = String::new();
    let h = inst.channel();
    let _ = writeln!(s, "scheme     {}", plan.scheme);
    let _ = writeln!(s, "seed       {seed}");
    let _ = writeln!(s, "users      {}  antennas {}", inst.num_users(), inst.num_antennas());
    let _ = writeln!(s, "tau_bar    {:.6}", plan.tau_bar);
    let _ = writeln!(s, "cost_dl_w  {:.6e}", plan.cost_dl);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>4}  {:>10}  {:>12}  {:<8}  {:>12}  {:>12}",
        "slot", "duration", "|w|^2 W", "user", "recv W", "harvest W"
    );
    for (n, slot) in plan.slots.iter().enumerate() {
        let recv = slot.beam.received_powers(h);
        for (k, r) in recv.iter().enumerate() {
            let harvested = inst.user(k).eh_model.harvest(*r);
            if k == 0 {
                let _ = write!(s, "{:>4}  {:>10.4e}  {:>12.4e}  ", n + 1, slot.duration, slot.beam.power);
            } else {
                let _ = write!(s, "{:>4}  {:>10}  {:>12}  ", "", "", "");
            }
            let _ = writeln!(s, "{:<8}  {:>12.4e}  {:>12.4e}", k + 1, r, harvested);
        }
    }
    let _ = writeln!(s);
    for (k, p) in plan.uplink_powers.iter().enumerate() {
        let _ = writeln!(s, "uplink power user {}  {:.6e} W", k + 1, p);
    }
    s.push_str(&render_check(check));
    s
}

pub fn render_check(check: &PlanCheck) -> String {
    let mut s = String::new();
    let r = &check.report;
    let tol = VerifyTolerances::default();
    for (k, (rate, energy)) in r.rate_margins.iter().zip(&r.energy_margins_j).enumerate() {
        let _ = writeln!(s, "user {}  rate margin {:+.3e} bit/use  energy margin {:+.3e} J", k + 1, rate, energy);
    }
    let _ = writeln!(s, "duration residual {:+.3e}", r.duration_residual);
    for (n, c) in &check.certificates {
        let _ = writeln!(
            s,
            "slot {}  duality gap {:.3e}  slackness {}",
            n + 1,
            c.gap,
            if c.slackness_holds { "ok" } else { "violated" }
        );
    }
    if !check.pass {
        for k in r.failing_users(&tol) {
            let _ = writeln!(s, "violation: user {} misses its rate or energy requirement", k + 1);
        }
        if r.duration_residual.abs() > tol.duration {
            let _ = writeln!(s, "violation: slot durations do not add up to tau_bar");
        }
        if r.min_duration < 0.0 {
            let _ = writeln!(s, "violation: negative slot duration");
        }
    }
    let _ = writeln!(
        s,
        "verification {} (worst violation {:.3e})",
        if check.pass { "PASS" } else { "FAIL" },
        r.worst_violation
    );
    s
}
