use std::io::{self, Write};

use serde::Serialize;

use crate::Scalar;

/// Recorded signals of one follower. Each field holds one vector per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentSeries<T> {
    pub x: Vec<Vec<T>>,
    pub e: Vec<Vec<T>>,
    pub xi: Vec<Vec<T>>,
    pub z: Vec<Vec<T>>,
    pub u: Vec<Vec<T>>,
    /// `d_i` or `c_i`; empty for informed followers.
    pub gain: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TraceMeta {
    pub scenario_hash: String,
    pub seed: u64,
    pub certificates_passed: usize,
    pub certificates_total: usize,
    /// `"d"` for the state observer, `"c"` for the output observer.
    pub gain_name: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace<T> {
    pub times: Vec<T>,
    pub v: Vec<Vec<T>>,
    pub agents: Vec<AgentSeries<T>>,
    /// Whether follower `i` carries an adaptive gain.
    pub adaptive: Vec<bool>,
    pub meta: TraceMeta,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

impl<T: Scalar> Trace<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_i ‖e_i‖` at sample `k`.
    pub fn output_norm(&self, k: usize) -> T {
        self.agents
            .iter()
            .map(|a| norm(&a.e[k]))
            .fold(T::zero(), T::max)
    }

    /// `max_i ‖ξ_i - v‖` at sample `k`.
    pub fn estimation_error(&self, k: usize) -> T {
        self.agents
            .iter()
            .map(|a| {
                let d: Vec<T> = a.xi[k].iter().zip(&self.v[k]).map(|(&x, &v)| x - v).collect();
                norm(&d)
            })
            .fold(T::zero(), T::max)
    }

    /// Index of the sample closest to time `t`.
    pub fn index_at(&self, t: T) -> usize {
        let mut best = 0;
        for (k, &tk) in self.times.iter().enumerate() {
            if (tk - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.v.first().map_or(0, Vec::len)).map(|k| format!("v_{k}")));
        for (i, a) in self.agents.iter().enumerate() {
            let name = format!("a{}", i + 1);
            let width = |s: &Vec<Vec<T>>| s.first().map_or(0, Vec::len);
            h.extend((1..=width(&a.x)).map(|k| format!("{name}_x_{k}")));
            h.extend((1..=width(&a.e)).map(|k| format!("{name}_e_{k}")));
            h.extend((1..=width(&a.xi)).map(|k| format!("{name}_xi_{k}")));
            if self.adaptive[i] {
                h.push(format!("{name}_{}", self.meta.gain_name));
            }
            h.extend((1..=width(&a.u)).map(|k| format!("{name}_u_{k}")));
        }
        h
    }

    /// Writes the trace as CSV with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = io::BufWriter::new(out);
        writeln!(w, "{}", self.csv_header().join(","))?;
        for k in 0..self.len() {
            let mut row = Vec::with_capacity(64);
            row.push(self.times[k]);
            row.extend_from_slice(&self.v[k]);
            for (i, a) in self.agents.iter().enumerate() {
                row.extend_from_slice(&a.x[k]);
                row.extend_from_slice(&a.e[k]);
                row.extend_from_slice(&a.xi[k]);
                if self.adaptive[i] {
                    row.push(a.gain[k]);
                }
                row.extend_from_slice(&a.u[k]);
            }
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    }
}

/// Convergence summary of a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// `max_i ‖e_i(t_final)‖`
    pub final_output_norm: f64,
    /// First sample time after which `max_i ‖e_i‖ < ε` holds for the rest
    /// of the trace; `None` if the last sample is not below `ε`.
    pub settled_time: Option<f64>,
    pub settle_epsilon: f64,
    /// `max_i ‖ξ_i(t_final) - v(t_final)‖`
    pub estimation_error_final: f64,
    /// `max_i (g_i(t_final) - g_i(t_final / 2))` over the adaptive gains.
    pub gain_plateau: f64,
    /// Every adaptive gain is nondecreasing between consecutive samples.
    pub gains_monotone: bool,
    /// All recorded values are finite.
    pub bounded: bool,
    pub t_final: f64,
    pub samples: usize,
}

fn f<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn compute_metrics<T: Scalar>(trace: &Trace<T>, epsilon: T) -> Metrics {
    let n = trace.len();
    if n == 0 {
        return Metrics {
            final_output_norm: 0.0,
            settled_time: None,
            settle_epsilon: f(epsilon),
            estimation_error_final: 0.0,
            gain_plateau: 0.0,
            gains_monotone: true,
            bounded: true,
            t_final: 0.0,
            samples: 0,
        };
    }
    let last = n - 1;
    let norms: Vec<T> = (0..n).map(|k| trace.output_norm(k)).collect();
    let settled_time = match norms.iter().rposition(|&e| !(e < epsilon)) {
        None => Some(f(trace.times[0])),
        Some(k) if k < last => Some(f(trace.times[k + 1])),
        Some(_) => None,
    };
    let t_final = trace.times[last];
    let half = trace.index_at(t_final * T::lit(0.5));
    let adaptive: Vec<&AgentSeries<T>> = trace
        .agents
        .iter()
        .zip(&trace.adaptive)
        .filter(|(_, &a)| a)
        .map(|(s, _)| s)
        .collect();
    let gain_plateau = adaptive
        .iter()
        .map(|a| f(a.gain[last] - a.gain[half]))
        .fold(0.0, f64::max);
    let gains_monotone = adaptive
        .iter()
        .all(|a| a.gain.windows(2).all(|w| w[1] >= w[0]));
    let finite = |s: &Vec<Vec<T>>| s.iter().flatten().all(|x| x.is_finite());
    let bounded = trace.v.iter().flatten().all(|x| x.is_finite())
        && trace.agents.iter().all(|a| {
            finite(&a.x) && finite(&a.e) && finite(&a.xi) && finite(&a.z) && finite(&a.u)
                && a.gain.iter().all(|x| x.is_finite())
        });
    Metrics {
        final_output_norm: f(norms[last]),
        settled_time,
        settle_epsilon: f(epsilon),
        estimation_error_final: f(trace.estimation_error(last)),
        gain_plateau,
        gains_monotone,
        bounded,
        t_final: f(t_final),
        samples: n,
    }
}
