//! `mdclab`: seal and open files under the chained MDC modes, forge
//! ciphertexts, run seeded attack experiments and print the analyses.
//!
//! Exit codes: 0 accept or success, 2 integrity reject, 3 usage error,
//! 4 format error.

mod analyze;
mod files;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mdclab::attacks::{
    forge_general_insert, forge_iobc_shorten, forge_iv_reuse, forge_pes_insert, ForgeryPlan,
};
use mdclab::bitblocks::{Block, BlockWidth};
use mdclab::ciphers::{BlockCipher, CipherBackend};
use mdclab::experiment::{
    run_experiment_with, AttackName, AttackParams, Execution, ExperimentConfig,
};
use mdclab::modes::{Container, IvPolicy, ModeInstance, ModeKind, SequenceIvs, Verdict};

const EXIT_REJECT: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_FORMAT: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "mdclab", version, about = "Chained MDC modes and their forgeries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encrypt a block-aligned file and append the MDC block.
    Seal(SealArgs),
    /// Decrypt a container and check its MDC block.
    Open(OpenArgs),
    /// Build a forged container from captured ones.
    Forge(ForgeArgs),
    /// Run a seeded Monte-Carlo attack experiment.
    Attack(AttackArgs),
    /// Print exact analysis reports.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CipherKind {
    Ideal,
    Feistel,
    External,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args, Debug)]
struct CipherArgs {
    #[arg(long, value_enum, default_value = "ideal")]
    cipher: CipherKind,
    /// Feistel round count.
    #[arg(long, default_value_t = 8)]
    rounds: u32,
    /// External primitive: aes128, aes192 or aes256.
    #[arg(long, default_value = "aes128")]
    primitive: String,
}

impl CipherArgs {
    fn backend(&self) -> CipherBackend {
        match self.cipher {
            CipherKind::Ideal => CipherBackend::Ideal,
            CipherKind::Feistel => CipherBackend::Feistel {
                rounds: self.rounds,
            },
            CipherKind::External => CipherBackend::External {
                name: self.primitive.clone(),
            },
        }
    }
}

#[derive(Args, Debug)]
struct KeyArgs {
    #[command(flatten)]
    cipher: CipherArgs,
    /// Key for the chaining cipher.
    #[arg(long)]
    key_hex: String,
    /// Key for deriving IVs from sequence numbers; defaults to --key-hex.
    #[arg(long)]
    aux_key_hex: Option<String>,
}

impl KeyArgs {
    fn instance(&self, mode: ModeKind, width: BlockWidth, first: u64) -> anyhow::Result<ModeInstance> {
        let backend = self.cipher.backend();
        let build = |hex_key: &str| -> anyhow::Result<Arc<dyn BlockCipher>> {
            let key = hex::decode(hex_key.trim_start_matches("0x"))
                .map_err(|e| mdclab::Error::Hex(format!("key: {e}")))?;
            Ok(backend.spec_from_key(&key)?.build(width)?)
        };
        let cipher = build(&self.key_hex)?;
        let aux = build(self.aux_key_hex.as_deref().unwrap_or(&self.key_hex))?;
        let policy = IvPolicy::DerivedFromSequence(SequenceIvs::new(aux, first));
        Ok(ModeInstance::new(mode, cipher, policy)?)
    }
}

#[derive(Args, Debug)]
struct SealArgs {
    #[arg(long)]
    mode: ModeKind,
    #[arg(long)]
    width: u32,
    #[command(flatten)]
    keys: KeyArgs,
    /// Sequence number the IVs are derived from.
    #[arg(long, default_value = "0", value_parser = parse_u64)]
    sequence: u64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct OpenArgs {
    #[command(flatten)]
    keys: KeyArgs,
    #[arg(long = "in")]
    input: PathBuf,
    /// Where to write the message on accept.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ForgeArgs {
    /// pes-insert, general-insert, iobc-shorten or iv-reuse.
    #[arg(long)]
    attack: AttackName,
    /// Captured container; for iv-reuse the one whose suffix is kept.
    #[arg(long = "in")]
    input: PathBuf,
    /// Second container (iv-reuse: supplies C'_1, C'_2).
    #[arg(long = "in2")]
    input2: Option<PathBuf>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Known plaintext blocks, in the order the attack lists them.
    #[arg(long = "known-hex", num_args = 1..)]
    known: Vec<String>,
    /// general-insert: the delta `G_j ^ g(G_j)`.
    #[arg(long)]
    delta_hex: Option<String>,
    /// Forged container; the JSON sidecar goes to the same path plus ".json".
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(long)]
    attack: AttackName,
    #[arg(long)]
    mode: ModeKind,
    #[arg(long, default_value_t = 8)]
    width: u32,
    #[command(flatten)]
    cipher: CipherArgs,
    /// Experiment seed, decimal or 0x-prefixed hex.
    #[arg(long, default_value = "0", value_parser = parse_u64)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Ciphertext length t, MDC block included.
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    u: Option<usize>,
    #[arg(long)]
    v: Option<usize>,
    /// Oracle queries (epbc-guess) or sealed messages (birthday).
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    weight_limit: Option<u32>,
    /// Spoil the attack's key step to measure chance acceptance.
    #[arg(long)]
    control: bool,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    report: analyze::Report,
    /// Block widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    widths: Vec<u32>,
    /// Powers for the fixed-point report, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Vec<u64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_u64(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("{s:?}: {e}"))
}

/// Raised for malformed input files.
#[derive(Debug)]
struct FormatError(String);

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FormatError {}

/// Raised when a container fails its integrity check.
#[derive(Debug)]
struct Rejected;

impl fmt::Display for Rejected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("reject: integrity check failed")
    }
}

impl std::error::Error for Rejected {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Rejected>().is_some() {
        return EXIT_REJECT;
    }
    if e.downcast_ref::<FormatError>().is_some() {
        return EXIT_FORMAT;
    }
    match e.downcast_ref::<mdclab::Error>() {
        Some(mdclab::Error::Format(_) | mdclab::Error::Hex(_)) => EXIT_FORMAT,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_REJECT {
                println!("reject");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Seal(args) => seal(args),
        Command::Open(args) => open(args),
        Command::Forge(args) => forge(args),
        Command::Attack(args) => attack(args),
        Command::Analyze(args) => {
            let text = analyze::render(args.report, &args.widths, &args.k, args.format)?;
            emit(&text, args.out.as_deref())
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn seal(args: SealArgs) -> anyhow::Result<()> {
    let width = BlockWidth::new(args.width)?;
    let m = args.keys.instance(args.mode, width, args.sequence)?;
    let bytes = files::read(&args.input)?;
    let message = files::blocks_from_bytes(width, &bytes)?;
    let sealed = m.seal(&message)?;
    let container = Container::new(args.mode, sealed.ciphertext)?;
    files::write(&args.out, &container.to_bytes())?;
    log::info!("sealed {} blocks into {}", container.ciphertext.len(), args.out.display());
    Ok(())
}

fn open(args: OpenArgs) -> anyhow::Result<()> {
    let container = files::read_container(&args.input)?;
    let m = args.keys.instance(container.mode, container.width(), 0)?;
    match m.open_verify(&container.ciphertext)? {
        Verdict::Accept(message) => {
            if let Some(out) = &args.out {
                files::write(out, &files::bytes_from_blocks(&message))?;
            }
            println!("accept");
            Ok(())
        }
        Verdict::Reject => Err(Rejected.into()),
    }
}

fn known_blocks(width: BlockWidth, hex: &[String]) -> anyhow::Result<Vec<Block>> {
    Ok(hex.iter().map(|h| Block::from_hex(width, h)).collect::<Result<_, _>>()?)
}

fn forge(args: ForgeArgs) -> anyhow::Result<()> {
    let container = files::read_container(&args.input)?;
    let (mode, width, c) = (container.mode, container.width(), &container.ciphertext);
    let known = known_blocks(width, &args.known)?;
    let need = |count: usize| -> anyhow::Result<()> {
        if known.len() != count {
            bail!("{} needs {count} --known-hex blocks, got {}", args.attack, known.len());
        }
        Ok(())
    };
    let j = || args.j.context("--j is required");
    let plan: ForgeryPlan = match args.attack {
        AttackName::PesInsert => {
            need(1)?;
            forge_pes_insert(mode, c, j()?, known[0])?
        }
        AttackName::GeneralInsert => {
            need(1)?;
            let delta = args.delta_hex.as_deref().context("--delta-hex is required")?;
            forge_general_insert(c, j()?, known[0], Block::from_hex(width, delta)?)?
        }
        AttackName::IobcShorten => {
            let k = args.k.context("--k is required")?;
            need(k)?;
            forge_iobc_shorten(mode, c, &known, j()?, k)?
        }
        AttackName::IvReuse => {
            need(2)?;
            let other = files::read_container(args.input2.as_deref().context("--in2 is required")?)?;
            if other.mode != mode {
                bail!("containers use different modes");
            }
            forge_iv_reuse(mode, c, &other.ciphertext, known[0], known[1])?
        }
        other => bail!("{other} is not a single-shot forgery; use `mdclab attack`"),
    };
    files::write(&args.out, &plan.container(mode)?.to_bytes())?;
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".json");
    let json = serde_json::to_string_pretty(&plan.sidecar(mode))?;
    files::write(Path::new(&sidecar), format!("{json}\n").as_bytes())?;
    Ok(())
}

fn attack(args: AttackArgs) -> anyhow::Result<()> {
    let config = ExperimentConfig {
        mode: args.mode,
        width: args.width,
        cipher: args.cipher.backend(),
        seed: args.seed,
        trials: args.trials,
        attack: args.attack,
        params: AttackParams {
            blocks: args.blocks,
            j: args.j,
            k: args.k,
            u: args.u,
            v: args.v,
            budget: args.budget,
            weight_limit: args.weight_limit,
            control: args.control,
        },
    };
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    log::info!("{} trials of {} on {}", config.trials, config.attack, config.mode);
    let result = run_experiment_with(&config, exec)?;
    let text = match args.format {
        Format::Json => format!("{}\n", result.to_json()),
        Format::Table => result.to_table(),
    };
    emit(&text, args.out.as_deref())
}
