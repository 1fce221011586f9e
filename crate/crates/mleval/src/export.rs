//! CSV encodings of the tuple confusion matrix and the metrics report.

use mleval_core::{Dataset, TupleConfusionMatrix};

use crate::report::MetricsReport;

pub const ROW_SUM: &str = "row_sum";
pub const COL_SUM: &str = "col_sum";
pub const DIAGONAL: &str = "diagonal";
pub const CORNER: &str = "truth\\predicted";

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

/// Rows are ground-truth classes and columns predicted classes, both named
/// by their signature. The two trailing columns hold the row sums and the
/// diagonal; the trailing row holds column sums.
pub fn tuple_confusion_csv(ds: &Dataset, m: &TupleConfusionMatrix) -> String {
    let sigs: Vec<String> = (0..m.dimension())
        .map(|c| m.table.signature(c, ds.registry()))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![CORNER.to_string()];
    header.extend(sigs.iter().cloned());
    header.push(ROW_SUM.into());
    header.push(DIAGONAL.into());
    w.write_record(&header).expect("in-memory write");
    for (r, sig) in sigs.iter().enumerate() {
        let mut record = vec![sig.clone()];
        record.extend(m.counts[r].iter().map(u64::to_string));
        record.push(m.row_sums[r].to_string());
        record.push(m.diagonal[r].to_string());
        w.write_record(&record).expect("in-memory write");
    }
    let mut last = vec![COL_SUM.to_string()];
    last.extend(m.col_sums.iter().map(u64::to_string));
    last.push(m.total().to_string());
    last.push(m.diagonal.iter().sum::<u64>().to_string());
    w.write_record(&last).expect("in-memory write");
    finish(w)
}

/// A tuple confusion matrix read back from [`tuple_confusion_csv`] output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedConfusion {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub diagonal: Vec<u64>,
}

pub fn parse_tuple_confusion_csv(text: &str) -> Result<ParsedConfusion, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let records: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let (header, rest) = records.split_first().ok_or("empty csv")?;
    let n = header.len().checked_sub(3).ok_or("header too short")?;
    let classes: Vec<String> = header.iter().skip(1).take(n).map(String::from).collect();
    if rest.len() != n + 1 {
        return Err(format!("expected {} rows, found {}", n + 1, rest.len()));
    }
    let num = |s: &str| {
        s.parse::<u64>()
            .map_err(|e| format!("bad count `{s}`: {e}"))
    };
    let mut counts = Vec::with_capacity(n);
    let mut row_sums = Vec::with_capacity(n);
    let mut diagonal = Vec::with_capacity(n);
    for (r, rec) in rest[..n].iter().enumerate() {
        if rec.get(0) != Some(classes[r].as_str()) {
            return Err(format!("row {r} label does not match column header"));
        }
        let cells: Vec<u64> = rec.iter().skip(1).map(num).collect::<Result<_, _>>()?;
        counts.push(cells[..n].to_vec());
        row_sums.push(cells[n]);
        diagonal.push(cells[n + 1]);
    }
    let col_sums = rest[n]
        .iter()
        .skip(1)
        .take(n)
        .map(num)
        .collect::<Result<_, _>>()?;
    Ok(ParsedConfusion {
        classes,
        counts,
        row_sums,
        col_sums,
        diagonal,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Three CSV tables separated by blank lines, each preceded by a `# name`
/// line: `labels` (one row per label and run, in report order),
/// `summaries` and `similarity`. Undefined measures are empty cells.
pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut out = String::new();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "label_id",
        "label",
        "run",
        "tp",
        "fp",
        "fn",
        "tn",
        "precision",
        "recall",
        "f1",
    ])
    .expect("in-memory write");
    for row in &report.labels.rows {
        for cell in &row.runs {
            w.write_record([
                row.label.to_string(),
                row.name.clone(),
                cell.run.clone(),
                cell.tp.to_string(),
                cell.fp.to_string(),
                cell.fn_.to_string(),
                cell.tn.to_string(),
                opt(cell.precision),
                opt(cell.recall),
                cell.f1.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    out.push_str("# labels\n");
    out.push_str(&finish(w));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run",
        "cardinality",
        "mean_f1",
        "mean_precision",
        "mean_recall",
        "mean_jaccard_vs_truth",
    ])
    .expect("in-memory write");
    w.write_record([
        "Ref".to_string(),
        report.summary.truth_cardinality.to_string(),
        String::new(),
        String::new(),
        String::new(),
        "1".to_string(),
    ])
    .expect("in-memory write");
    for s in &report.summary.summaries {
        w.write_record([
            s.name.clone(),
            s.cardinality.to_string(),
            s.mean_f1.to_string(),
            opt(s.mean_precision),
            opt(s.mean_recall),
            s.mean_jaccard_vs_truth.to_string(),
        ])
        .expect("in-memory write");
    }
    out.push_str("\n# summaries\n");
    out.push_str(&finish(w));

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["party".to_string()];
    header.extend(report.similarity.parties.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (party, row) in report
        .similarity
        .parties
        .iter()
        .zip(&report.similarity.values)
    {
        let mut record = vec![party.clone()];
        record.extend(row.iter().map(f64::to_string));
        w.write_record(&record).expect("in-memory write");
    }
    out.push_str("\n# similarity\n");
    out.push_str(&finish(w));
    out
}

/// A named table of string cells.
pub type CsvTable = (String, Vec<Vec<String>>);

/// Splits [`metrics_csv`] output into `(name, rows)` tables.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<CsvTable>, String> {
    let mut tables = Vec::new();
    for block in text.split("\n\n") {
        let (title, body) = block.split_once('\n').ok_or("table without body")?;
        let name = title
            .strip_prefix("# ")
            .ok_or("table without `# name` line")?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(body.as_bytes());
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| e.to_string())?;
        tables.push((name.to_string(), rows));
    }
    Ok(tables)
}
