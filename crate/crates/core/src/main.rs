use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use greedy_rs::analytics::{efg_bound_params, greedy_pcs_bounds, SeriesControl};
use greedy_rs::harness::{
    emit_csv, estimate, run_experiment, write_csv, EstimateRow, ExperimentConfig, ProcedureSpec,
};
use greedy_rs::parallel::{
    run_asyn_efg_pp, run_efg_pp, EfgPpConfig, PoolMode, ServiceTime, WorkerPool,
};
use greedy_rs::problems::{
    enumerate_flowline, flowline::flowline_means, good_set, tp_table_row, FlowSamplerKind,
    ProblemSpec,
};
use greedy_rs::procedures::{effective_groups, EfgPlusSplit, EfgSplit, Phase, DEFAULT_GROUPS};
use greedy_rs::rng::derive_stream;
use greedy_rs::{Error, Result};

#[derive(Parser)]
#[command(
    name = "greedy-rs",
    version,
    about = "Greedy-family fixed-budget selection procedures"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Boundary-crossing PCS bounds, printed as one JSON line.
    Bounds(BoundsArgs),
    /// Flow-line testbed utilities.
    Tp {
        #[command(subcommand)]
        cmd: TpCmd,
    },
    /// Estimate PCS/PGS of a sequential procedure.
    Run(RunArgs),
    /// Estimate PCS/PGS and utilization of EFG++ / Asyn-EFG++.
    Parallel(ParallelArgs),
    /// Run a JSON-configured sweep.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_bar: f64,
    /// Standard deviation of the best alternative (defaults to sigma-bar).
    #[arg(long)]
    sigma1: Option<f64>,
    /// Budget per alternative.
    #[arg(long, default_value_t = 100.0)]
    c: f64,
    /// With --ng, report the EFG bound for exploration size n0 instead.
    #[arg(long)]
    n0: Option<u64>,
    #[arg(long)]
    ng: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    tail_tol: f64,
}

#[derive(Subcommand)]
enum TpCmd {
    /// Count (or list) the designs of an instance.
    Enumerate {
        #[arg(long)]
        s1: u32,
        #[arg(long)]
        s2: u32,
        #[arg(long)]
        list: bool,
    },
    /// Exact steady-state throughput of every design, as CSV.
    Means {
        #[arg(long)]
        s1: u32,
        #[arg(long)]
        s2: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary row: size, best mean, gap, best and good counts.
    Check {
        #[arg(long)]
        s1: u32,
        #[arg(long)]
        s2: u32,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// greedy, efg, efg+, ea, sh or msh.
    #[arg(long)]
    procedure: String,
    /// Gaussian kind (sc-cv, em-cv, ...) or tp:S1,S2.
    #[arg(long)]
    config: String,
    #[arg(long, default_value_t = 1024)]
    k: usize,
    /// Budget per alternative; B = c k.
    #[arg(long, default_value_t = 100)]
    budget_c: u64,
    /// EFG exploration proportion.
    #[arg(long)]
    p: Option<f64>,
    /// Exploration size per alternative (EFG and EFG+).
    #[arg(long)]
    n0: Option<u64>,
    /// Seeding size per alternative (EFG+).
    #[arg(long)]
    nsd: Option<u64>,
    /// Greedy size per alternative (EFG+); must complete nsd + n0 to c.
    #[arg(long)]
    ng: Option<u64>,
    /// Number of exploration groups (EFG+).
    #[arg(long = "G", default_value_t = DEFAULT_GROUPS)]
    groups: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Good-set tolerance for PGS.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value = "fast")]
    flow_sampler: FlowSamplerKind,
}

#[derive(Args)]
struct ParallelArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 4)]
    q: usize,
    #[arg(long, default_value_t = 1)]
    z: u64,
    #[arg(long, default_value = "sim")]
    mode: PoolMode,
    #[arg(long, default_value = "uniform:0.5,1.5")]
    service_time: ServiceTime,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Bounds(a) => bounds(a)?,
        Cmd::Tp { cmd } => tp(cmd)?,
        Cmd::Run(a) => {
            let row = run(&a)?;
            write_csv(&[row], std::io::stdout().lock())?;
        }
        Cmd::Parallel(a) => parallel(a)?,
        Cmd::Experiment { config, out } => return experiment(config, out),
    }
    Ok(ExitCode::SUCCESS)
}

fn bounds(a: BoundsArgs) -> Result<()> {
    let ctl = SeriesControl {
        tail_tol: a.tail_tol,
        ..SeriesControl::default()
    };
    let report = match (a.n0, a.ng) {
        (Some(n0), Some(ng)) => {
            efg_bound_params(a.gamma, a.sigma_bar, n0, ng, a.reps, a.seed, &ctl)?
        }
        (None, None) => greedy_pcs_bounds(
            a.gamma,
            a.sigma_bar,
            a.sigma1.unwrap_or(a.sigma_bar),
            a.c,
            &ctl,
        )?,
        _ => return Err(Error::InvalidParameter("--n0 and --ng go together".into())),
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn tp(cmd: TpCmd) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match cmd {
        TpCmd::Enumerate { s1, s2, list } => {
            let designs = enumerate_flowline(s1, s2)?;
            if list {
                let mut w = csv::Writer::from_writer(out);
                for d in &designs {
                    w.serialize(d)?;
                }
                w.flush()?;
            } else {
                writeln!(out, "{}", designs.len())?;
            }
        }
        TpCmd::Means { s1, s2, out: path } => {
            #[derive(Serialize)]
            struct Row {
                index: usize,
                x1: u32,
                x2: u32,
                x3: u32,
                b2: u32,
                b3: u32,
                throughput: f64,
            }
            let designs = enumerate_flowline(s1, s2)?;
            let means = flowline_means(&designs)?;
            let sink: Box<dyn Write> = match path {
                Some(p) => Box::new(std::fs::File::create(p)?),
                None => Box::new(out),
            };
            let mut w = csv::Writer::from_writer(sink);
            for (index, (d, &throughput)) in designs.iter().zip(&means).enumerate() {
                w.serialize(Row {
                    index,
                    x1: d.x1,
                    x2: d.x2,
                    x3: d.x3,
                    b2: d.b2,
                    b3: d.b3,
                    throughput,
                })?;
            }
            w.flush()?;
        }
        TpCmd::Check { s1, s2, delta } => {
            writeln!(
                out,
                "{}",
                serde_json::to_string(&tp_table_row(s1, s2, delta)?)?
            )?;
        }
    }
    Ok(())
}

/// Map the procedure flags onto a [`ProcedureSpec`].
fn procedure_from(a: &RunArgs, k: usize) -> Result<ProcedureSpec> {
    let c = a.budget_c;
    Ok(match a.procedure.as_str() {
        "greedy" => ProcedureSpec::Greedy,
        "ea" => ProcedureSpec::Ea,
        "sh" => ProcedureSpec::Sh,
        "msh" => ProcedureSpec::ModifiedSh,
        "efg" => ProcedureSpec::Efg {
            split: match (a.p, a.n0) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidParameter("give --p or --n0, not both".into()))
                }
                (_, Some(n0)) => EfgSplit::N0(n0),
                (p, None) => EfgSplit::Proportion(p.unwrap_or(0.8)),
            },
        },
        "efg+" => {
            let (f_sd, f_0) = efg_plus_fractions(a, c)?;
            let groups = effective_groups(a.groups, k, (f_0 * c as f64).round() as u64);
            ProcedureSpec::EfgPlus { f_sd, f_0, groups }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown procedure {other}"
            )))
        }
    })
}

fn efg_plus_fractions(a: &RunArgs, c: u64) -> Result<(f64, f64)> {
    let nsd = a.nsd.unwrap_or(c / 5);
    let n0 = a.n0.unwrap_or(c * 7 / 10);
    if nsd + n0 > c {
        return Err(Error::InvalidParameter(format!(
            "nsd + n0 = {} exceeds c = {c}",
            nsd + n0
        )));
    }
    if let Some(ng) = a.ng {
        if nsd + n0 + ng != c {
            return Err(Error::InvalidParameter(format!(
                "nsd + n0 + ng must equal c = {c}"
            )));
        }
    }
    Ok((nsd as f64 / c as f64, n0 as f64 / c as f64))
}

fn run(a: &RunArgs) -> Result<EstimateRow> {
    let problem: ProblemSpec = a.config.parse()?;
    let inst = problem.build(a.k, a.seed, a.flow_sampler)?;
    let proc = procedure_from(a, inst.k())?;
    let budget = a.budget_c * inst.k() as u64;
    estimate(
        &problem.id(),
        &inst,
        budget,
        &proc,
        a.reps,
        a.seed,
        0,
        a.delta,
    )
}

#[derive(Serialize)]
struct ParallelRow {
    config: String,
    k: usize,
    #[serde(rename = "B")]
    budget: u64,
    procedure: String,
    reps: usize,
    pcs: f64,
    pcs_se: f64,
    pgs: Option<f64>,
    pgs_se: Option<f64>,
    mean_wall_ms: f64,
    touched_frac: Option<f64>,
    best_share: Option<f64>,
    min_mean_touched: Option<f64>,
    q: usize,
    z: u64,
    mode: &'static str,
    utilization_seed: f64,
    utilization_explore: f64,
    utilization_greedy: f64,
    wall_ms: f64,
    sim_ms: f64,
}

fn parallel(a: ParallelArgs) -> Result<()> {
    let r = &a.run;
    let asyn = match r.procedure.as_str() {
        "efg++" => false,
        "asyn-efg++" => true,
        other => {
            return Err(Error::InvalidParameter(format!(
                "parallel runs efg++ or asyn-efg++, got {other}"
            )))
        }
    };
    let problem: ProblemSpec = r.config.parse()?;
    let inst = problem.build(r.k, r.seed, r.flow_sampler)?;
    let k = inst.k();
    let budget = r.budget_c * k as u64;
    let (f_sd, f_0) = efg_plus_fractions(r, r.budget_c)?;
    let cfg = EfgPpConfig {
        split: EfgPlusSplit::from_fractions(budget, k, f_sd, f_0, r.groups)?,
        z: a.z,
    };
    let pool = WorkerPool {
        q: a.q,
        mode: a.mode,
        service: a.service_time,
    };
    let good = r.delta.map(|d| good_set(&inst, d)).transpose()?;
    let (mut hits, mut goods) = (0usize, 0usize);
    let mut util = [0.0f64; 3];
    let (mut wall, mut sim, mut virt) = (0.0, 0.0, 0.0);
    let (mut tf, mut bs) = (0.0, 0.0);
    for rep in 0..r.reps as u64 {
        let stream = derive_stream(r.seed, &[0, rep]);
        let out = if asyn {
            run_asyn_efg_pp(&inst, budget, &cfg, &pool, &stream)?
        } else {
            run_efg_pp(&inst, budget, &cfg, &pool, &stream)?
        };
        hits += usize::from(inst.is_best(out.result.selected));
        goods += usize::from(
            good.as_ref()
                .is_some_and(|g| g.contains(out.result.selected)),
        );
        for (u, ph) in util
            .iter_mut()
            .zip([Phase::Seeding, Phase::Exploration, Phase::Greedy])
        {
            *u += out.utilization.phases[&ph].utilization;
        }
        wall += out.result.wall_time.as_secs_f64() * 1e3;
        sim += out.result.sim_time.as_secs_f64() * 1e3;
        virt += out.utilization.overall.wall.as_secs_f64() * 1e3;
        if let Some(d) = &out.result.diagnostics {
            tf += d.touched_frac;
            bs += d.best_share;
        }
    }
    let n = r.reps as f64;
    let pcs = hits as f64 / n;
    let pgs = good.as_ref().map(|_| goods as f64 / n);
    let row = ParallelRow {
        config: problem.id(),
        k,
        budget,
        procedure: r.procedure.clone(),
        reps: r.reps,
        pcs,
        pcs_se: greedy_rs::harness::binomial_se(pcs, r.reps),
        pgs,
        pgs_se: pgs.map(|p| greedy_rs::harness::binomial_se(p, r.reps)),
        mean_wall_ms: wall / n,
        touched_frac: Some(tf / n),
        best_share: Some(bs / n),
        min_mean_touched: None,
        q: a.q,
        z: a.z,
        mode: match a.mode {
            PoolMode::Simulated => "sim",
            PoolMode::Real => "real",
        },
        utilization_seed: util[0] / n,
        utilization_explore: util[1] / n,
        utilization_greedy: util[2] / n,
        // pool time: virtual in sim mode, elapsed in real mode
        wall_ms: virt / n,
        sim_ms: sim / n,
    };
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.serialize(row)?;
    w.flush()?;
    Ok(())
}

fn experiment(config: PathBuf, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(&config)?;
    let outcomes = run_experiment(&cfg)?;
    let mut rows = Vec::new();
    let mut failed = false;
    for o in outcomes {
        match o.result {
            Ok(r) => rows.push(r),
            Err(e) => {
                failed = true;
                eprintln!(
                    "{} k={} B={} {}: {e}",
                    o.problem, o.k, o.budget, o.procedure
                );
            }
        }
    }
    let path = out.or_else(|| cfg.output.as_ref().map(PathBuf::from));
    if !rows.is_empty() {
        match path {
            Some(p) => emit_csv(&rows, p)?,
            None => write_csv(&rows, std::io::stdout().lock())?,
        }
    }
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}
