use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use affinity_core::classifiers::ClassifierKind;
use affinity_core::container::sha256_hex;
use affinity_core::ensemble::{run_protocol, write_model, ModelArtifact, ModelFile, ModelMeta};
use affinity_core::features::{
    build_dictionary, compress, encode_all, rows_from_text, write_dataset, write_rows, DataRow, Dataset, DatasetMeta,
    RowsMeta,
};
use affinity_core::matcher::{ClusterState, Diagnostics, IntervalSampler, Mode, DEFAULT_INTERVAL_MICROS};
use affinity_core::trace::{
    format_node_event, format_task_event, generate_synthetic_trace, EventStream, NODES_HEADER, TASKS_HEADER,
};

use crate::config::{FileConfig, Settings};
use crate::{AnalyzeArgs, EncodeArgs, EvaluateArgs, Failure, GenArgs, PredictArgs, TrainArgs};

/// Rejects runs where an output would overwrite an input or another output.
fn check_paths(inputs: &[&Path], outputs: &[&Path]) -> Result<(), Failure> {
    let norm = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let mut seen: Vec<PathBuf> = inputs.iter().map(|p| norm(p)).collect();
    for out in outputs {
        let out = norm(out);
        if seen.contains(&out) {
            return Err(Failure::usage(
                "PathConflict",
                format!("{} is used more than once", out.display()),
            ));
        }
        seen.push(out);
    }
    Ok(())
}

/// File contents and their SHA-256.
fn read_input(path: &Path) -> Result<(String, String), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let sum = sha256_hex(text.as_bytes());
    Ok((text, sum))
}

fn parse_learner(name: Option<&str>) -> Result<Option<ClassifierKind>, Failure> {
    match name {
        None => Ok(None),
        Some(n) if n.eq_ignore_ascii_case("ensemble") => Ok(None),
        Some(n) => n
            .parse()
            .map(Some)
            .map_err(|e: affinity_core::classifiers::ClassifierError| Failure::usage("InvalidSpec", e.to_string())),
    }
}

pub fn gen(settings: &Settings, file: &FileConfig, a: GenArgs) -> Result<(), Failure> {
    check_paths(&[], &[&a.nodes_out, &a.tasks_out])?;
    let mut cfg = file.gen.clone().unwrap_or_default();
    if let Some(n) = a.nodes {
        cfg.n_nodes = n;
    }
    if let Some(n) = a.jobs {
        cfg.n_jobs = n;
    }
    cfg.seed = settings.seed;
    let trace = generate_synthetic_trace(&cfg)?;
    let config_sum = sha256_hex(serde_json::to_string(&cfg).expect("config serializes").as_bytes());
    let stamp = format!("# seed={} config_sha256={config_sum}\n", cfg.seed);
    let mut nodes = format!("{NODES_HEADER}\n{stamp}");
    for e in &trace.node_events {
        nodes.push_str(&format_node_event(e));
        nodes.push('\n');
    }
    let mut tasks = format!("{TASKS_HEADER}\n{stamp}");
    for e in &trace.task_events {
        tasks.push_str(&format_task_event(e));
        tasks.push('\n');
    }
    std::fs::write(&a.nodes_out, nodes)?;
    std::fs::write(&a.tasks_out, tasks)?;
    Ok(())
}

fn diagnostics_line(d: &Diagnostics) -> String {
    format!(
        "# diagnostics stale_events={} unknown_nodes={} unknown_tasks={} duplicate_nodes={} duplicate_tasks={} \
         unsatisfiable_tasks={} rejected_lines={} total_warnings={}",
        d.stale_events,
        d.unknown_nodes,
        d.unknown_tasks,
        d.duplicate_nodes,
        d.duplicate_tasks,
        d.unsatisfiable_tasks,
        d.rejected_lines,
        d.total_warnings()
    )
}

pub fn analyze(settings: &Settings, file: &FileConfig, a: AnalyzeArgs) -> Result<(), Failure> {
    check_paths(&[&a.nodes, &a.tasks], &[&a.stats_out, &a.rows_out])?;
    let interval = a.interval_micros.or(file.interval_micros).unwrap_or(DEFAULT_INTERVAL_MICROS);
    if interval == 0 {
        return Err(Failure::usage("InvalidConfig", "interval_micros must be positive"));
    }
    let (nodes_text, nodes_sum) = read_input(&a.nodes)?;
    let (tasks_text, tasks_sum) = read_input(&a.tasks)?;
    let mode = if settings.strict { Mode::Strict } else { Mode::Lenient };
    let mut state = ClusterState::new(mode);
    let mut sampler = IntervalSampler::new(interval);
    let mut stats = Vec::new();
    let mut events = 0u64;
    for item in EventStream::new(nodes_text.as_bytes(), tasks_text.as_bytes()) {
        match item {
            Ok(e) => {
                stats.extend(sampler.before_event(&state, e.timestamp));
                state.apply_event(&e)?;
                events += 1;
            }
            Err(err) if settings.strict => return Err(err.into()),
            Err(_) => state.diagnostics_mut().rejected_lines += 1,
        }
    }
    stats.push(sampler.finish(&state));

    let mut out = affinity_core::matcher::IntervalStats::csv_header();
    out.push('\n');
    for s in &stats {
        out.push_str(&s.to_csv());
        out.push('\n');
    }
    let _ = writeln!(out, "# seed={}", settings.seed);
    let _ = writeln!(out, "# nodes_sha256={nodes_sum}");
    let _ = writeln!(out, "# tasks_sha256={tasks_sum}");
    let _ = writeln!(out, "# mode={}", if settings.strict { "strict" } else { "lenient" });
    let _ = writeln!(out, "# interval_micros={interval} events={events} clock_micros={}", state.clock());
    let _ = writeln!(out, "{}", diagnostics_line(state.diagnostics()));
    let _ = writeln!(out, "# orphaned={}", state.orphaned().len());
    std::fs::write(&a.stats_out, out)?;

    let rows: Vec<DataRow> = state.snapshot_dataset_rows().iter().map(DataRow::from_snapshot).collect();
    let meta = RowsMeta {
        seed: settings.seed,
        nodes_checksum: nodes_sum,
        tasks_checksum: tasks_sum,
        clock_micros: state.clock(),
    };
    write_rows(&a.rows_out, &meta, &rows)?;
    Ok(())
}

pub fn encode(settings: &Settings, a: EncodeArgs) -> Result<(), Failure> {
    check_paths(&[&a.rows], &[&a.out])?;
    let (text, sum) = read_input(&a.rows)?;
    let (meta, rows) = rows_from_text(&text)?;
    let compressed = compress(&rows);
    let dictionary = build_dictionary(&compressed)?;
    let encoded = encode_all(&compressed, &dictionary)?;
    let ds = Dataset {
        dictionary,
        rows: encoded,
        meta: DatasetMeta {
            source_checksum: sum,
            seed: settings.seed,
            created_micros: meta.clock_micros,
            uncompressed_rows: rows.len() as u64,
        },
    };
    write_dataset(&ds, &a.out)?;
    Ok(())
}

fn read_dataset_input(path: &Path) -> Result<(Dataset, String), Failure> {
    let (text, sum) = read_input(path)?;
    Ok((Dataset::from_text(&text)?, sum))
}

pub fn train(settings: &Settings, file: &FileConfig, a: TrainArgs) -> Result<(), Failure> {
    check_paths(&[&a.dataset], &[&a.out])?;
    let learner = parse_learner(a.model.as_deref().or(file.model.as_deref()))?;
    let (ds, sum) = read_dataset_input(&a.dataset)?;
    let model = ModelArtifact::train(&ds, settings.seed, learner)?;
    let out = ModelFile {
        meta: ModelMeta {
            seed: settings.seed,
            dataset_checksum: sum,
        },
        model,
    };
    write_model(&out, &a.out)?;
    Ok(())
}

pub fn evaluate(settings: &Settings, file: &FileConfig, a: EvaluateArgs) -> Result<(), Failure> {
    let mut outputs: Vec<&Path> = vec![&a.report_out, &a.metrics_out];
    if let Some(t) = &a.timings_out {
        outputs.push(t);
    }
    check_paths(&[&a.dataset], &outputs)?;
    let learner = parse_learner(a.model.as_deref().or(file.model.as_deref()))?;
    let runs = a.runs.or(file.runs).unwrap_or(10);
    let (ds, sum) = read_dataset_input(&a.dataset)?;
    let report = run_protocol(&ds, runs, settings.seed, learner)?;
    let text = format!("# seed={} dataset_sha256={sum}\n{}", settings.seed, report.render_text());
    std::fs::write(&a.report_out, text)?;
    let mut metrics = report.metrics_csv();
    let _ = writeln!(metrics, "seed,,{}", settings.seed);
    let _ = writeln!(metrics, "dataset_sha256,,{sum}");
    std::fs::write(&a.metrics_out, metrics)?;
    if let Some(t) = &a.timings_out {
        let text = format!("# seed={} dataset_sha256={sum}\n{}", settings.seed, report.timings_csv());
        std::fs::write(t, text)?;
    }
    Ok(())
}

pub fn predict(_settings: &Settings, a: PredictArgs) -> Result<(), Failure> {
    check_paths(&[&a.model, &a.dataset], &[&a.out])?;
    let (model_text, model_sum) = read_input(&a.model)?;
    let model = ModelFile::from_text(&model_text)?;
    let (ds, data_sum) = read_dataset_input(&a.dataset)?;
    let predicted = model.model.predict(&ds)?;
    let mut out = format!(
        "# seed={} model_sha256={model_sum} dataset_sha256={data_sum}\nrow,group,predicted\n",
        model.meta.seed
    );
    for (i, (row, p)) in ds.rows.iter().zip(&predicted).enumerate() {
        let _ = writeln!(out, "{i},{},{p}", row.label);
    }
    std::fs::write(&a.out, out)?;
    Ok(())
}
