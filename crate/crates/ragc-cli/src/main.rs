//! `ragc`: grammar-based compression of files, plus a benchmark harness
//! that compares constructors and encodings over a corpus directory.

mod bench;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use ragc_core::container::{self, Algorithm, Encoding};
use ragc_core::Error;

// Exit codes: 0 ok, 1 usage, 2 I/O, 3 corrupt input.
const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_CORRUPT: u8 = 3;

#[derive(Parser)]
#[command(name = "ragc", version, about = "Grammar-based compression toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compress a file into a self-describing container.
    Compress {
        /// Input file.
        input: PathBuf,
        /// Grammar constructor: repair, mr, or rlmr.
        #[arg(long, default_value = "rlmr")]
        algo: String,
        /// Bit encoding: 32bit, fble, huffman, pge, pairpge, poppt-ible,
        /// poppt-pge. A trailing number overrides the block size, e.g.
        /// pge6 or poppt-pge8.
        #[arg(long, default_value = "poppt-pge")]
        encoding: String,
        /// Block size for the packed gamma encodings.
        #[arg(long, default_value_t = 8)]
        epsilon: u8,
        /// Output file (defaults to INPUT.ragc).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decompress a container back to the original bytes.
    Decompress {
        input: PathBuf,
        /// Output file (defaults to INPUT without its .ragc suffix).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print grammar and size statistics of a container.
    Stats { input: PathBuf },
    /// Compress every file of a corpus under several constructors and
    /// encodings, verify each cell round-trips, and report sizes, ratios
    /// and timings.
    Bench {
        /// Directory of input files.
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated constructors to run.
        #[arg(long, default_value = "repair,mr,rlmr")]
        algos: String,
        /// Comma-separated encodings to run.
        #[arg(
            long,
            default_value = "32bit,fble,huffman,pge8,poppt-ible,poppt-pge6,poppt-pge8"
        )]
        encodings: String,
        /// Timing repetitions per cell; the median is reported.
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Where to write the JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ragc: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Core(e) if e.is_corrupt() => EXIT_CORRUPT,
        CliError::Core(_) | CliError::Usage(_) => EXIT_USAGE,
        CliError::Io(..) => EXIT_IO,
    }
}

/// Accepts an encoding name with an optional trailing block size, like
/// `pge6` or `poppt-pge8`.
fn parse_encoding(s: &str) -> Result<(Encoding, Option<u8>), CliError> {
    if let Ok(enc) = Encoding::from_str(s) {
        return Ok((enc, None));
    }
    let trimmed = s.trim_end_matches(|c: char| c.is_ascii_digit());
    if trimmed.len() < s.len() {
        if let Ok(enc) = Encoding::from_str(trimmed) {
            if !enc.uses_epsilon() {
                return Err(CliError::Usage(format!(
                    "encoding {trimmed:?} does not take a block size suffix"
                )));
            }
            let eps: u8 = s[trimmed.len()..]
                .parse()
                .map_err(|_| CliError::Usage(format!("bad block size in {s:?}")))?;
            return Ok((enc, Some(eps)));
        }
    }
    Err(CliError::Usage(format!(
        "unknown encoding {s:?} (expected one of {})",
        Encoding::ALL.map(|e| e.as_str()).join(", ")
    )))
}

fn parse_algo(s: &str) -> Result<Algorithm, CliError> {
    Algorithm::from_str(s).map_err(|_| {
        CliError::Usage(format!(
            "unknown algorithm {s:?} (expected one of {})",
            Algorithm::ALL.map(|a| a.as_str()).join(", ")
        ))
    })
}

fn read(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Io(path.clone(), e))
}

fn write(path: &PathBuf, data: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, data).map_err(|e| CliError::Io(path.clone(), e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Compress {
            input,
            algo,
            encoding,
            epsilon,
            output,
        } => {
            let algo = parse_algo(&algo)?;
            let (enc, eps_override) = parse_encoding(&encoding)?;
            let epsilon = eps_override.unwrap_or(epsilon);
            if enc == Encoding::PairPge && algo != Algorithm::Repair {
                return Err(CliError::Usage(format!(
                    "encoding pairpge stores one max/delta/side triple per length-2 rule body, \
                     so it applies only to --algo repair (got --algo {})",
                    algo.as_str()
                )));
            }
            let data = read(&input)?;
            let file = container::compress(&data, algo, enc, epsilon)?;
            let out = output.unwrap_or_else(|| {
                let mut p = input.clone().into_os_string();
                p.push(".ragc");
                PathBuf::from(p)
            });
            write(&out, &file)?;
            let s = container::stats(&file)?;
            println!("{}", stats_line(&out.display().to_string(), &s));
            Ok(())
        }
        Cmd::Decompress { input, output } => {
            let file = read(&input)?;
            let data = container::decompress(&file)?;
            let out = output.unwrap_or_else(|| match input.extension().and_then(|e| e.to_str()) {
                Some("ragc") => input.with_extension(""),
                _ => {
                    let mut p = input.clone().into_os_string();
                    p.push(".out");
                    PathBuf::from(p)
                }
            });
            write(&out, &data)?;
            println!(
                "{} -> {} ({} bytes)",
                input.display(),
                out.display(),
                data.len()
            );
            Ok(())
        }
        Cmd::Stats { input } => {
            let file = read(&input)?;
            let s = container::stats(&file)?;
            println!("file            {}", input.display());
            println!("algorithm       {}", s.algo.as_str());
            println!("encoding        {}{}", s.enc.as_str(), eps_suffix(&s));
            println!("input bytes     {}", s.input_len);
            println!("sigma           {}", s.sigma);
            println!("d               {}", s.rule_count);
            println!("sum|alpha|      {}", s.sum_alpha);
            println!("|tau|           {}", s.tau_len);
            println!("grammar size    {}", s.grammar_size);
            println!("payload bits    {}", s.payload_bits);
            println!("file bytes      {}", s.file_bytes);
            match s.ratio_percent() {
                Some(r) => println!("ratio           {r:.4}%"),
                None => println!("ratio           n/a (empty input)"),
            }
            Ok(())
        }
        Cmd::Bench {
            corpus,
            algos,
            encodings,
            reps,
            report,
        } => {
            let algos = algos
                .split(',')
                .filter(|s| !s.is_empty())
                .map(parse_algo)
                .collect::<Result<Vec<_>, _>>()?;
            let encodings = encodings
                .split(',')
                .filter(|s| !s.is_empty())
                .map(parse_encoding)
                .collect::<Result<Vec<_>, _>>()?;
            if algos.is_empty() || encodings.is_empty() {
                return Err(CliError::Usage("nothing to benchmark".into()));
            }
            if reps == 0 {
                return Err(CliError::Usage("--reps must be at least 1".into()));
            }
            bench::run(&corpus, &algos, &encodings, reps, report.as_deref())
        }
    }
}

fn eps_suffix(s: &container::Stats) -> String {
    if s.enc.uses_epsilon() {
        format!(" (epsilon {})", s.epsilon)
    } else {
        String::new()
    }
}

fn stats_line(name: &str, s: &container::Stats) -> String {
    let ratio = s
        .ratio_percent()
        .map(|r| format!("{r:.4}%"))
        .unwrap_or_else(|| "n/a".into());
    format!(
        "{name}: {} -> {} bytes ({ratio}) d={} sum|alpha|={} |tau|={} size={}",
        s.input_len, s.file_bytes, s.rule_count, s.sum_alpha, s.tau_len, s.grammar_size
    )
}
