//! Benchmark harness: builds every requested (constructor, encoding) cell
//! for every corpus file, verifies each cell round-trips before reporting
//! it, and emits a JSON report plus an aligned comparison table. Files can
//! be processed on parallel workers (capped by RAGC_THREADS); each cell is
//! constructed and encoded single-threaded so the timings stay honest.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use ragc_core::container::{self, Algorithm, Encoding};

use crate::CliError;

#[derive(Serialize)]
pub struct BenchReport {
    corpus: String,
    reps: usize,
    generated_at_epoch_secs: u64,
    /// Container overhead is included in every reported size.
    sizes_include_container_header: bool,
    files: Vec<FileReport>,
}

#[derive(Serialize)]
struct FileReport {
    name: String,
    bytes: u64,
    algos: Vec<AlgoReport>,
    external: Vec<ExternalReport>,
}

#[derive(Serialize)]
struct AlgoReport {
    algo: String,
    d: u64,
    sum_alpha: u64,
    tau_len: u64,
    grammar_size: u64,
    construct_seconds: f64,
    encodings: Vec<EncReport>,
}

#[derive(Serialize)]
struct EncReport {
    encoding: String,
    bytes: Option<u64>,
    ratio_percent: Option<f64>,
    encode_seconds: Option<f64>,
    verified: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct ExternalReport {
    tool: String,
    bytes: u64,
    ratio_percent: Option<f64>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn enc_label(enc: Encoding, eps: u8) -> String {
    if enc.uses_epsilon() {
        format!("{}{}", enc.as_str(), eps)
    } else {
        enc.as_str().to_string()
    }
}

fn worker_count(files: usize) -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("RAGC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(hw);
    cap.min(files).max(1)
}

pub fn run(
    corpus: &Path,
    algos: &[Algorithm],
    encodings: &[(Encoding, Option<u8>)],
    reps: usize,
    report_path: Option<&Path>,
) -> Result<(), CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus)
        .map_err(|e| CliError::Io(corpus.to_path_buf(), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "corpus directory {} contains no files",
            corpus.display()
        )));
    }

    let results: Mutex<Vec<Option<FileReport>>> =
        Mutex::new((0..paths.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    let workers = worker_count(paths.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= paths.len() {
                    break;
                }
                let report = bench_file(&paths[i], algos, encodings, reps);
                results.lock().unwrap()[i] = Some(report);
            });
        }
    });
    let files: Vec<FileReport> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.unwrap())
        .collect();

    let report = BenchReport {
        corpus: corpus.display().to_string(),
        reps,
        generated_at_epoch_secs: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        sizes_include_container_header: true,
        files,
    };

    print_table(&report);

    let failed: usize = report
        .files
        .iter()
        .flat_map(|f| &f.algos)
        .flat_map(|a| &a.encodings)
        .filter(|e| e.error.is_some())
        .count();
    if failed > 0 {
        eprintln!("ragc: {failed} cell(s) failed; see the report for details");
    }

    if let Some(path) = report_path {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, json).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn bench_file(
    path: &Path,
    algos: &[Algorithm],
    encodings: &[(Encoding, Option<u8>)],
    reps: usize,
) -> FileReport {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let data = match std::fs::read(path) {
        Ok(d) => d,
        Err(e) => {
            return FileReport {
                name,
                bytes: 0,
                algos: Vec::new(),
                external: vec![ExternalReport {
                    tool: format!("read error: {e}"),
                    bytes: 0,
                    ratio_percent: None,
                }],
            }
        }
    };
    let bytes = data.len() as u64;
    let ratio = |out: u64| (bytes > 0).then(|| out as f64 / bytes as f64 * 100.0);

    let mut algo_reports = Vec::new();
    for &algo in algos {
        let mut times = Vec::with_capacity(reps);
        let mut grammar = None;
        for _ in 0..reps {
            let t0 = Instant::now();
            let g = container::build_grammar(&data, algo);
            times.push(t0.elapsed().as_secs_f64());
            grammar = Some(g);
        }
        let g = grammar.expect("at least one repetition");
        let mut enc_reports = Vec::new();
        for &(enc, eps_override) in encodings {
            let eps = eps_override.unwrap_or(8);
            let label = enc_label(enc, eps);
            if !enc.compatible_with(algo) {
                enc_reports.push(EncReport {
                    encoding: label,
                    bytes: None,
                    ratio_percent: None,
                    encode_seconds: None,
                    verified: false,
                    error: Some("incompatible with this constructor".into()),
                });
                continue;
            }
            let mut enc_times = Vec::with_capacity(reps);
            let mut encoded = Ok(Vec::new());
            for _ in 0..reps {
                let t0 = Instant::now();
                encoded = container::encode_with_grammar(&g, bytes, algo, enc, eps);
                enc_times.push(t0.elapsed().as_secs_f64());
            }
            match encoded {
                Ok(file) => {
                    let verified = container::decompress(&file).map(|d| d == data);
                    match verified {
                        Ok(true) => enc_reports.push(EncReport {
                            encoding: label,
                            bytes: Some(file.len() as u64),
                            ratio_percent: ratio(file.len() as u64),
                            encode_seconds: Some(median(enc_times)),
                            verified: true,
                            error: None,
                        }),
                        Ok(false) => enc_reports.push(EncReport {
                            encoding: label,
                            bytes: None,
                            ratio_percent: None,
                            encode_seconds: None,
                            verified: false,
                            error: Some("round trip produced different bytes".into()),
                        }),
                        Err(e) => enc_reports.push(EncReport {
                            encoding: label,
                            bytes: None,
                            ratio_percent: None,
                            encode_seconds: None,
                            verified: false,
                            error: Some(format!("round trip failed: {e}")),
                        }),
                    }
                }
                Err(e) => enc_reports.push(EncReport {
                    encoding: label,
                    bytes: None,
                    ratio_percent: None,
                    encode_seconds: None,
                    verified: false,
                    error: Some(e.to_string()),
                }),
            }
        }
        algo_reports.push(AlgoReport {
            algo: algo.as_str().to_string(),
            d: g.variable_rule_count() as u64,
            sum_alpha: g.sum_alpha(),
            tau_len: g.tau.len() as u64,
            grammar_size: g.size(),
            construct_seconds: median(times),
            encodings: enc_reports,
        });
    }

    let mut external = Vec::new();
    for (tool, args) in [("gzip", ["-9", "-c"]), ("bzip2", ["-9", "-c"])] {
        if let Some(out) = pipe_through(tool, &args, &data) {
            external.push(ExternalReport {
                tool: format!("{tool} -9"),
                bytes: out,
                ratio_percent: ratio(out),
            });
        }
    }

    FileReport {
        name,
        bytes,
        algos: algo_reports,
        external,
    }
}

/// Runs an external compressor over the data if the tool exists; returns
/// the compressed byte count.
fn pipe_through(tool: &str, args: &[&str], data: &[u8]) -> Option<u64> {
    let mut child = Command::new(tool)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .ok()?;
    let mut stdin = child.stdin.take()?;
    let chunk = data.to_vec();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(&chunk);
    });
    let out = child.wait_with_output().ok()?;
    let _ = writer.join();
    out.status.success().then_some(out.stdout.len() as u64)
}

fn print_table(report: &BenchReport) {
    for file in &report.files {
        println!("\n{} ({} bytes)", file.name, file.bytes);
        if file.algos.is_empty() {
            continue;
        }
        let col = 16usize;
        print!("  {:<18}", "");
        for a in &file.algos {
            print!("{:>col$}", a.algo);
        }
        println!();
        for (label, pick) in [
            ("d", 0usize),
            ("sum|alpha|", 1),
            ("|tau|", 2),
            ("grammar size", 3),
            ("construct (s)", 4),
        ] {
            print!("  {label:<18}");
            for a in &file.algos {
                match pick {
                    0 => print!("{:>col$}", a.d),
                    1 => print!("{:>col$}", a.sum_alpha),
                    2 => print!("{:>col$}", a.tau_len),
                    3 => print!("{:>col$}", a.grammar_size),
                    _ => print!("{:>col$.3}", a.construct_seconds),
                }
            }
            println!();
        }
        let enc_count = file.algos[0].encodings.len();
        for i in 0..enc_count {
            let label = &file.algos[0].encodings[i].encoding;
            print!("  {label:<18}");
            for a in &file.algos {
                let cell = &a.encodings[i];
                match (cell.bytes, &cell.error) {
                    (Some(b), _) => {
                        let r = cell
                            .ratio_percent
                            .map(|r| format!(" ({r:.3}%)"))
                            .unwrap_or_default();
                        print!("{:>col$}", format!("{b}{r}"));
                    }
                    (None, Some(_)) => print!("{:>col$}", "-"),
                    (None, None) => print!("{:>col$}", "?"),
                }
            }
            println!();
        }
        for ext in &file.external {
            let r = ext
                .ratio_percent
                .map(|r| format!(" ({r:.3}%)"))
                .unwrap_or_default();
            println!("  {:<18}{:>col$}", ext.tool, format!("{}{r}", ext.bytes));
        }
    }
    println!();
}
