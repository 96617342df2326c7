use std::fmt::Write as _;

use super::run::RunResult;

fn pct(v: f64) -> String {
    format!("{:.6}", 100.0 * v)
}

/// One row per run: `method,seed,repeat,oa,aa,kappa,acc_1..acc_K`, in percent.
/// Classes without test pixels leave their accuracy field empty.
pub fn metrics_csv(runs: &[(usize, &RunResult)]) -> String {
    let classes = runs.first().map_or(0, |(_, r)| r.last().per_class.len());
    let mut out = String::from("method,seed,repeat,oa,aa,kappa");
    for k in 1..=classes {
        let _ = write!(out, ",acc_{k}");
    }
    out.push('\n');
    for (repeat, r) in runs {
        let cp = r.last();
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            r.seed,
            repeat,
            pct(cp.scores.oa),
            pct(cp.scores.aa),
            pct(cp.scores.kappa)
        );
        for acc in &cp.per_class {
            out.push(',');
            if let Some(a) = acc {
                out.push_str(&pct(*a));
            }
        }
        out.push('\n');
    }
    out
}

/// Scores at every label update: `method,seed,repeat,epoch,oa,aa,kappa,argmax_oa`.
pub fn checkpoints_csv(runs: &[(usize, &RunResult)]) -> String {
    let mut out = String::from("method,seed,repeat,epoch,oa,aa,kappa,argmax_oa\n");
    for (repeat, r) in runs {
        for cp in &r.checkpoints {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.method,
                r.seed,
                repeat,
                cp.epoch,
                pct(cp.scores.oa),
                pct(cp.scores.aa),
                pct(cp.scores.kappa),
                pct(cp.cnn_scores.oa)
            );
        }
    }
    out
}

/// Mean training loss per epoch: `repeat,epoch,loss`.
pub fn loss_csv(runs: &[(usize, &RunResult)]) -> String {
    let mut out = String::from("repeat,epoch,loss\n");
    for (repeat, r) in runs {
        for (e, l) in r.losses.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.9}", repeat, e + 1, l);
        }
    }
    out
}

/// Wall-clock seconds per stage; kept apart from the reproducible reports.
pub fn timings_csv(runs: &[(usize, &RunResult)]) -> String {
    let mut out = String::from("method,seed,repeat,train_s,predict_s,regularize_s,total_s\n");
    for (repeat, r) in runs {
        let t = r.timings;
        let _ = writeln!(
            out,
            "{},{},{},{:.3},{:.3},{:.3},{:.3}",
            r.method, r.seed, repeat, t.train, t.predict, t.regularize, t.total
        );
    }
    out
}
