// SPDX-License-Identifier: MIT
//! Study files, exploratory KS statistics, graph files and JSON reports.

pub mod dataset;
pub mod graph_file;
pub mod ks;
pub mod report;

use nalgebra::DMatrix;

pub use dataset::{
    export_study, find_duplicates, load_study, read_design, write_study, DuplicateRun, Study,
};
pub use graph_file::{
    edge_list, export_graph, frequencies_to_dot, graph_to_dot, parse_graph, read_graph, GraphExport,
};
pub use ks::{ks_two_sample, KsResult, NEG_LOG_P_CEILING};

use crate::error::Result;

/// `K × D` table of `-ln p` for the KS test of each condition's column against
/// the same column of the first (observational) condition.
pub fn explore(data: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let k = data.len();
    let d = data.first().map_or(0, |x| x.ncols());
    let mut out = DMatrix::zeros(k, d);
    let Some(base) = data.first() else {
        return Ok(out);
    };
    for c in 1..k {
        for i in 0..d {
            let x: Vec<f64> = data[c].column(i).iter().copied().collect();
            let y: Vec<f64> = base.column(i).iter().copied().collect();
            out[(c, i)] = ks_two_sample(&x, &y)?.neg_log_p;
        }
    }
    Ok(out)
}

/// `explore` as CSV: a `condition` column followed by one column per compound.
pub fn explore_table(study: &Study) -> Result<String> {
    let table = explore(&study.data)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["condition".to_string()];
    header.extend(study.compound_names.iter().cloned());
    w.write_record(&header).map_err(std::io::Error::other)?;
    for (c, name) in study.design.names().iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(table.row(c).iter().map(|v| format!("{v:.6}")));
        w.write_record(&row).map_err(std::io::Error::other)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_row_is_zero() {
        let a = DMatrix::from_fn(30, 2, |r, c| (r * (c + 1)) as f64);
        let b = DMatrix::from_fn(30, 2, |r, c| if c == 0 { r as f64 + 100.0 } else { r as f64 * 2.0 });
        let t = explore(&[a, b]).unwrap();
        assert_eq!(t.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert!(t[(1, 0)] > 10.0);
        assert_eq!(t[(1, 1)], 0.0);
    }
}
