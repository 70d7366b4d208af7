//! `pbcq` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::measurement::{
    attach_symmetries, partition_commuting, MeasurementPlan, ParityTarget, PlanFile, ShotTable,
    ShotTableFile, Strategy,
};
use crate::mitigation::{pmsv_postselect, ConfusionMode, Mitigation};

use super::config::{BackendKind, ExperimentConfig, Overrides, ProblemKind, DEFAULT_SEED};
use super::io::{self, HamiltonianInput, SymmetryFile, SymmetrySpec};
use super::pipeline::prepare_qubit_problem;
use super::report::write_report;
use super::reproduce::{reproduce_table, ProbabilityTable, TABLE_SHOTS};
use super::run::{calibrate, execute, unit_factor, write_run_dir};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "pbcq", version, about = "Periodic-system VQE workbench")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalOpts {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shots per circuit [default: 24000].
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    /// none, spam, pmsv or spam+pmsv.
    #[arg(long, global = true, value_parser = parse_mitigation)]
    pub mitigation: Option<Mitigation>,
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum BackendArg {
    Statevector,
    Shots,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum StrategyArg {
    General,
    Qubitwise,
}

fn parse_mitigation(s: &str) -> std::result::Result<Mitigation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hamiltonian file checks.
    Ham {
        #[command(subcommand)]
        action: HamAction,
    },
    /// Remove qubits using Z2 symmetries.
    Taper(OperatorArgs),
    /// Group terms into commuting sets and synthesize measurement circuits.
    Partition(OperatorArgs),
    /// Readout calibration.
    Spam {
        #[command(subcommand)]
        action: SpamAction,
    },
    /// Run an experiment from --config.
    Run {
        #[arg(value_enum)]
        problem: Option<ProblemArg>,
    },
    /// Symmetry post-selection of recorded shots.
    Pmsv {
        #[command(subcommand)]
        action: PmsvAction,
    },
    /// Energy CSV and convergence plot for a run directory.
    Report {
        /// Run directory [default: --out].
        run_dir: Option<PathBuf>,
    },
    /// Noiseless outcome probabilities of the two-qubit ansatz.
    Reproduce {
        #[arg(long, value_parser = parse_table)]
        table: ProbabilityTable,
    },
}

fn parse_table(s: &str) -> std::result::Result<ProbabilityTable, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand, Debug)]
pub enum HamAction {
    Validate { path: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum SpamAction {
    Calibrate {
        #[arg(long)]
        qubits: usize,
        #[arg(long, value_enum, default_value = "per-qubit")]
        mode: ModeArg,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModeArg {
    PerQubit,
    Full,
}

#[derive(Subcommand, Debug)]
pub enum PmsvAction {
    Filter {
        /// Shot-count file.
        counts: PathBuf,
        /// Plan file written by `partition` or `run`.
        #[arg(long)]
        plan: PathBuf,
        /// Operator label inside a run's plans file.
        #[arg(long, default_value = "h")]
        operator: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ProblemArg {
    Vqe,
    Transqse,
}

#[derive(Args, Debug)]
pub struct OperatorArgs {
    /// Hamiltonian file [default: the config's].
    pub hamiltonian: Option<PathBuf>,
    #[arg(long)]
    pub symmetries: Option<PathBuf>,
    /// Reference occupation, qubit 0 leftmost.
    #[arg(long)]
    pub reference: Option<String>,
}

impl GlobalOpts {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            shots: self.shots,
            backend: self.backend.map(|b| match b {
                BackendArg::Statevector => BackendKind::Statevector,
                BackendArg::Shots => BackendKind::Shots,
            }),
            mitigation: self.mitigation,
            strategy: self.strategy.map(strategy),
        }
    }

    fn load_config(&self) -> Result<Option<ExperimentConfig>> {
        match &self.config {
            Some(p) => {
                let mut c = ExperimentConfig::load(p)?;
                c.apply(&self.overrides());
                Ok(Some(c))
            }
            None => Ok(None),
        }
    }
}

fn strategy(s: StrategyArg) -> Strategy {
    match s {
        StrategyArg::General => Strategy::General,
        StrategyArg::Qubitwise => Strategy::Qubitwise,
    }
}

/// Exit status for an error: bad inputs give 1, failed computations 2.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::Symmetry(_) | Error::Dimension(_)) {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Parse and run; returns the process exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Ham {
            action: HamAction::Validate { path },
        } => ham_validate(path, out),
        Command::Taper(a) => taper_cmd(g, a, out),
        Command::Partition(a) => partition_cmd(g, a, out),
        Command::Spam {
            action: SpamAction::Calibrate { qubits, mode },
        } => spam_cmd(g, *qubits, *mode, out),
        Command::Run { problem } => run_cmd(g, *problem, out),
        Command::Pmsv {
            action: PmsvAction::Filter { counts, plan, operator },
        } => pmsv_cmd(g, counts, plan, operator, out),
        Command::Report { run_dir } => {
            let dir = run_dir
                .clone()
                .or_else(|| g.out.clone())
                .ok_or_else(|| Error::input("report needs a run directory (positional or --out)"))?;
            let (csv, svg) = write_report(&dir)?;
            writeln!(out, "wrote {} and {}", csv.display(), svg.display())?;
            Ok(())
        }
        Command::Reproduce { table } => {
            let r = reproduce_table(
                *table,
                g.shots.unwrap_or(TABLE_SHOTS),
                g.seed.unwrap_or(DEFAULT_SEED),
            )?;
            writeln!(out, "{r}")?;
            if let Some(dir) = &g.out {
                io::write_text(&dir.join(format!("table_{}.txt", table.name())), &format!("{r}\n"))?;
            }
            Ok(())
        }
    }
}

fn ham_validate(path: &Path, out: &mut dyn Write) -> Result<()> {
    match io::load_hamiltonian(path)? {
        HamiltonianInput::Fermion(d) => {
            writeln!(out, "ok: {}", path.display())?;
            writeln!(out, "{}", io::FermionSummary::of(&d))?;
        }
        HamiltonianInput::Pauli { op, unit } => {
            unit_factor(&unit)?;
            if let Some((w, c)) = op.terms().find(|(_, c)| c.im.abs() > 1e-8) {
                return Err(Error::validation(
                    format!("{}: term {w}", path.display()),
                    format!("imaginary coefficient {} makes the operator non-Hermitian", c.im),
                ));
            }
            writeln!(out, "ok: {}", path.display())?;
            writeln!(
                out,
                "{} qubits, {} terms ({} non-identity), unit {unit}",
                op.n_qubits(),
                op.len(),
                op.non_identity_words().len()
            )?;
        }
    }
    Ok(())
}

/// Hamiltonian, symmetry specs, reference and sector from arguments or the config.
struct OperatorInputs {
    h: crate::pauli::PauliSum,
    specs: Vec<SymmetrySpec>,
    reference: Option<u64>,
    sector: Vec<i8>,
    strategy: Strategy,
}

fn operator_inputs(g: &GlobalOpts, a: &OperatorArgs) -> Result<OperatorInputs> {
    let cfg = g.load_config()?;
    let ham_path = a
        .hamiltonian
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.files.hamiltonian.clone()))
        .ok_or_else(|| Error::input("no Hamiltonian given (positional or --config)"))?;
    let sym_path = a
        .symmetries
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.files.symmetries.clone()));
    let specs = match sym_path {
        Some(p) => io::read_json::<SymmetryFile>(&p)?.symmetries,
        None => Vec::new(),
    };
    let reference = match (&a.reference, &cfg) {
        (Some(r), _) => Some(crate::bitstring::parse_bits(r)?),
        (None, Some(c)) => c.reference_bits()?,
        _ => None,
    };
    let ham = io::load_hamiltonian(&ham_path)?;
    let factor = unit_factor(ham.unit())?;
    let h = ham.qubit_operator()?.scale(num_complex::Complex64::new(factor, 0.0));
    let strategy = g
        .strategy
        .map(strategy)
        .or_else(|| cfg.as_ref().map(|c| c.mitigation.strategy))
        .unwrap_or(Strategy::General);
    Ok(OperatorInputs {
        h,
        specs,
        reference,
        sector: cfg.map(|c| c.sector).unwrap_or_default(),
        strategy,
    })
}

fn taper_cmd(g: &GlobalOpts, a: &OperatorArgs, out: &mut dyn Write) -> Result<()> {
    let inp = operator_inputs(g, a)?;
    let p = prepare_qubit_problem(&inp.h, &inp.specs, inp.reference, &inp.sector)?;
    writeln!(
        out,
        "{} -> {} qubits, {} terms",
        inp.h.n_qubits(),
        p.hamiltonian.n_qubits(),
        p.hamiltonian.len()
    )?;
    writeln!(out, "{}", p.hamiltonian)?;
    if let Some(m) = &p.tapering {
        writeln!(out, "removed qubits: {:?}", m.removed_qubits)?;
    }
    writeln!(
        out,
        "reference: {}",
        crate::bitstring::format_bits(p.reference, p.hamiltonian.n_qubits())
    )?;
    for s in &p.symmetries {
        writeln!(out, "verification symmetry: {s}")?;
    }
    if let Some(dir) = &g.out {
        let mut f = p.hamiltonian.to_file();
        f.unit = Some("kJ/mol".into());
        io::write_json(&dir.join("tapered.json"), &f)?;
        if let Some(m) = &p.tapering {
            io::write_json(&dir.join("tapering_map.json"), m)?;
        }
        let syms = SymmetryFile {
            symmetries: p
                .symmetries
                .iter()
                .map(|s| SymmetrySpec {
                    pauli: s.word.to_string(),
                    sign: Some(s.sign),
                    role: io::SymmetryRole::Verify,
                })
                .collect(),
        };
        io::write_json(&dir.join("tapered_symmetries.json"), &syms)?;
    }
    Ok(())
}

fn partition_cmd(g: &GlobalOpts, a: &OperatorArgs, out: &mut dyn Write) -> Result<()> {
    let inp = operator_inputs(g, a)?;
    let p = prepare_qubit_problem(&inp.h, &inp.specs, inp.reference, &inp.sector)?;
    let words = p.hamiltonian.non_identity_words();
    let sets = attach_symmetries(&partition_commuting(&words, inp.strategy)?, &p.symmetries)?;
    writeln!(out, "{} sets ({} strategy, {} terms)", sets.len(), inp.strategy, words.len())?;
    for (i, s) in sets.iter().enumerate() {
        let members: Vec<String> = s.members.iter().map(|w| w.to_string()).collect();
        let syms: Vec<String> = s.attached_symmetries.iter().map(|s| s.to_string()).collect();
        write!(out, "  [{i}] {}", members.join(" "))?;
        if !syms.is_empty() {
            write!(out, "  | verify {}", syms.join(" "))?;
        }
        writeln!(out)?;
    }
    if let Some(dir) = &g.out {
        let plan = MeasurementPlan::from_sets(&sets)?;
        io::write_json(&dir.join("plan.json"), &plan.to_file())?;
    }
    Ok(())
}

fn spam_cmd(g: &GlobalOpts, qubits: usize, mode: ModeArg, out: &mut dyn Write) -> Result<()> {
    let cfg = g.load_config()?;
    let noise = cfg.as_ref().map(|c| c.noise.clone()).unwrap_or_default();
    let seed = g.seed.or(cfg.as_ref().map(|c| c.backend.seed)).unwrap_or(DEFAULT_SEED);
    let shots = g
        .shots
        .or(cfg.as_ref().map(|c| c.mitigation.calibration_shots))
        .unwrap_or(super::config::DEFAULT_SHOTS);
    let mode = match mode {
        ModeArg::PerQubit => ConfusionMode::PerQubit,
        ModeArg::Full => ConfusionMode::Full,
    };
    let model = calibrate(qubits, shots, mode, &noise, seed)?;
    let file = model.to_file();
    writeln!(out, "calibrated {qubits} qubits with {shots} shots per preparation")?;
    for (i, m) in file.matrices.iter().enumerate() {
        let rows: Vec<String> = m
            .iter()
            .map(|r| r.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" "))
            .collect();
        writeln!(out, "  M[{i}] = [{}]", rows.join("; "))?;
    }
    if let Some(dir) = &g.out {
        io::write_json(&dir.join("confusion.json"), &file)?;
    }
    Ok(())
}

fn run_cmd(g: &GlobalOpts, problem: Option<ProblemArg>, out: &mut dyn Write) -> Result<()> {
    let mut cfg = g
        .load_config()?
        .ok_or_else(|| Error::input("run needs --config"))?;
    if let Some(p) = problem {
        cfg.problem = match p {
            ProblemArg::Vqe => ProblemKind::Vqe,
            ProblemArg::Transqse => ProblemKind::Transqse,
        };
    }
    let res = execute(&cfg)?;
    let r = &res.result;
    writeln!(
        out,
        "{:?} on {:?} ({}): {} steps, converged = {}",
        r.problem, r.backend, r.mitigation, r.steps, r.converged
    )?;
    let theta: Vec<String> = r.final_theta.iter().map(|t| format!("{t:.6}")).collect();
    writeln!(out, "theta = [{}]", theta.join(", "))?;
    write!(out, "E = {:.4} ± {:.4} kJ/mol", r.final_energy, r.stddev)?;
    if let Some(d) = r.delta_e {
        write!(out, ", ΔE = {d:.4} kJ/mol")?;
    }
    writeln!(out)?;
    if let Some(dir) = &g.out {
        write_run_dir(&cfg, &res, dir)?;
        writeln!(out, "wrote {}", dir.display())?;
    }
    Ok(())
}

fn pmsv_cmd(g: &GlobalOpts, counts: &Path, plan: &Path, operator: &str, out: &mut dyn Write) -> Result<()> {
    let src = counts.display().to_string();
    let table = ShotTable::from_file(&io::read_json::<ShotTableFile>(counts)?, &src)?;
    let value: serde_json::Value = io::read_json(plan)?;
    let node = if value.get("circuits").is_some() {
        value
    } else {
        value.get(operator).cloned().ok_or_else(|| {
            Error::validation(plan.display().to_string(), format!("no operator {operator:?}"))
        })?
    };
    let plan_file: PlanFile =
        serde_json::from_value(node).map_err(|e| Error::parse(plan.display().to_string(), e))?;
    let entry = plan_file
        .circuits
        .iter()
        .find(|c| c.circuit_id == table.circuit_id)
        .ok_or_else(|| {
            Error::validation(
                &src,
                format!("circuit_id {} is not in {}", table.circuit_id, plan.display()),
            )
        })?;
    let targets = entry
        .symmetries
        .iter()
        .map(|s| ParityTarget::new(s.bits.clone(), s.sign))
        .collect::<Result<Vec<_>>>()?;
    let (kept, discard) = pmsv_postselect(&table, &targets);
    writeln!(
        out,
        "circuit {}: kept {} of {} shots, discard_fraction = {discard:.6}",
        table.circuit_id,
        kept.total(),
        table.total()
    )?;
    if let Some(dir) = &g.out {
        let name = counts.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "counts.json".into());
        io::write_json(&dir.join(format!("filtered_{name}")), &kept.to_file())?;
    }
    Ok(())
}

