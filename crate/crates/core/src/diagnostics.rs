//! Per-sample diagnostics: functionals, virial quantities, resolution.

use serde::{Deserialize, Serialize};

use crate::dynamics::SimState;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::functionals::{evaluate, FunctionalReport, CSV_HEADER};
use crate::params::PhysicsParams;
use crate::spectral::{self, integrate_with};

/// Columns appended after the functional report columns.
pub const DIAGNOSTICS_EXTRA: [&str; 7] = ["J", "Jp", "Jpp_vfm", "grad_norm", "grad_product", "tail_fraction", "l_running_min"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub report: FunctionalReport,
    /// `int |x|^2 |u|^2`.
    pub j: f64,
    /// `2 Im int (grad u . x) conj(u)`.
    pub jp: f64,
    pub jpp_vfm: f64,
    pub grad_norm: f64,
    /// `||grad u||^{s_c} ||u||^{1 - s_c}`; zero when `s_c` is undefined or nonpositive.
    pub grad_product: f64,
    pub tail_fraction: f64,
    pub l_running_min: f64,
}

/// `Im int (grad u . x) conj(u)`, doubled.
pub fn virial_first_derivative(u: &ComplexField) -> f64 {
    let grid = u.grid();
    let d = grid.dim();
    let grads = spectral::gradient(u);
    let v = u.values();
    2.0 * integrate_with(grid, |i| {
        let x = grid.position(i);
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        for a in 0..d {
            s += grads[a].values()[i] * x[a];
        }
        (s * v[i].conj()).im
    })
}

/// `J''` written through the energy and angular momentum:
/// `(4 - N(p-1))/2 K - (N(p-1) + 4)/2 int V|u|^2 + N(p-1) (E - l)`.
pub fn jpp_vfm(report: &FunctionalReport, params: &PhysicsParams) -> f64 {
    let a = params.dim as f64 * (params.p - 1.0);
    0.5 * (4.0 - a) * report.kinetic - 0.5 * (a + 4.0) * report.potential + a * (report.energy - report.ang_mom)
}

/// `J''` in the direct virial form `2K - 2 int V|u|^2 - 2N (p-1)/(p+1) lp1`.
pub fn jpp_direct(report: &FunctionalReport, params: &PhysicsParams) -> f64 {
    let n = params.dim as f64;
    let p = params.p;
    2.0 * report.kinetic - 2.0 * report.potential - 2.0 * n * (p - 1.0) / (p + 1.0) * report.lp1
}

pub fn grad_product(kinetic: f64, mass: f64, s_c: f64) -> f64 {
    if !(s_c > 0.0) {
        return 0.0;
    }
    kinetic.sqrt().powf(s_c) * mass.sqrt().powf(1.0 - s_c)
}

/// Diagnostics of one state; `prev_l_min` is the running minimum of `l` before it.
pub fn diagnostics(state: &SimState, prev_l_min: f64) -> DiagnosticsRow {
    let params = &state.params;
    let u = &state.field;
    let report = evaluate(u, params).expect("state grid matches its parameters");
    DiagnosticsRow {
        t: state.t,
        j: report.second_moment,
        jp: virial_first_derivative(u),
        jpp_vfm: jpp_vfm(&report, params),
        grad_norm: report.kinetic.sqrt(),
        grad_product: grad_product(report.kinetic, report.mass, params.s_c()),
        tail_fraction: spectral::tail_fraction(u),
        l_running_min: prev_l_min.min(report.ang_mom),
        report,
    }
}

impl DiagnosticsRow {
    pub fn csv_header() -> String {
        CSV_HEADER.iter().chain(DIAGNOSTICS_EXTRA.iter()).cloned().collect::<Vec<_>>().join(",")
    }

    pub fn csv_row(&self) -> String {
        let extra = [self.j, self.jp, self.jpp_vfm, self.grad_norm, self.grad_product, self.tail_fraction, self.l_running_min];
        let mut s = self.report.csv_row(self.t);
        for v in extra {
            s.push(',');
            s.push_str(&format!("{v:.17e}"));
        }
        s
    }

    pub fn parse_csv_row(row: &str) -> Result<Self> {
        let cols: Vec<&str> = row.trim().split(',').collect();
        let base = CSV_HEADER.len();
        if cols.len() != base + DIAGNOSTICS_EXTRA.len() {
            return Err(Error::Format(format!(
                "expected {} columns, found {}",
                base + DIAGNOSTICS_EXTRA.len(),
                cols.len()
            )));
        }
        let (t, report) = FunctionalReport::parse_csv_row(&cols[..base].join(","))?;
        let mut x = [0.0; 7];
        for (slot, c) in x.iter_mut().zip(&cols[base..]) {
            *slot = c.parse().map_err(|_| Error::Format(format!("not a number: {c}")))?;
        }
        Ok(Self {
            t,
            report,
            j: x[0],
            jp: x[1],
            jpp_vfm: x[2],
            grad_norm: x[3],
            grad_product: x[4],
            tail_fraction: x[5],
            l_running_min: x[6],
        })
    }
}

/// Write rows as CSV with the fixed header.
pub fn write_csv<W: std::io::Write>(mut w: W, rows: &[DiagnosticsRow]) -> Result<()> {
    writeln!(w, "{}", DiagnosticsRow::csv_header())?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<DiagnosticsRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty trajectory".into()))?;
    if header.trim() != DiagnosticsRow::csv_header() {
        return Err(Error::Format(format!("unexpected header: {header}")));
    }
    lines.filter(|l| !l.trim().is_empty()).map(DiagnosticsRow::parse_csv_row).collect()
}

/// `d^2 J/dt^2` by three-point differences over consecutive samples, which need not be
/// equally spaced.
pub fn jpp_finite_difference(rows: &[DiagnosticsRow]) -> Vec<(f64, f64)> {
    rows.windows(3)
        .map(|w| {
            let (h0, h1) = (w[1].t - w[0].t, w[2].t - w[1].t);
            let d = 2.0 * ((w[2].j - w[1].j) / h1 - (w[1].j - w[0].j) / h0) / (h0 + h1);
            (w[1].t, d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::random::{rng_from_seed, smooth_random_field};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn state(field: ComplexField, omega_rot: f64) -> SimState {
        SimState::new(field, PhysicsParams::new(2, 5.0, &[1.0, 1.2], omega_rot).unwrap()).unwrap()
    }

    #[test]
    fn radial_real_state_has_no_virial_flux() {
        let grid = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        let u = ComplexField::from_fn(&grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0));
        assert!(virial_first_derivative(&u).abs() < 1e-14);
    }

    #[test]
    fn outgoing_chirp_has_positive_flux() {
        // u = g e^{i b |x|^2 / 2}: J' = 2 b J.
        let grid = make_grid(2, &[8.0, 8.0], &[128, 128]).unwrap();
        let b = 0.3;
        let u = ComplexField::from_fn(&grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            Complex64::from_polar((-r2).exp(), 0.5 * b * r2)
        });
        let v = u.values();
        let j = integrate_with(&grid, |i| {
            let x = grid.position(i);
            (x[0] * x[0] + x[1] * x[1]) * v[i].norm_sqr()
        });
        assert!((virial_first_derivative(&u) - 2.0 * b * j).abs() < 1e-10);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let grid = make_grid(2, &[6.0, 6.0], &[32, 32]).unwrap();
        let f = smooth_random_field(&grid, &mut rng_from_seed(5), 3);
        let mut s = state(f, 0.3);
        s.t = 0.125;
        let row = diagnostics(&s, f64::INFINITY);
        let mut buf = Vec::new();
        write_csv(&mut buf, std::slice::from_ref(&row)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "t,M,kinetic,potential,lp1,ang_mom,quad_form,energy,sigma_norm2,J,Jp,Jpp_vfm,grad_norm,grad_product,tail_fraction,l_running_min\n"
        ));
        let back = read_csv(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].t, row.t);
        assert_eq!(back[0].jpp_vfm, row.jpp_vfm);
        assert_eq!(back[0].report.energy, row.report.energy);
        assert!(read_csv("").is_err());
        assert!(read_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn running_minimum_tracks_angular_momentum() {
        let grid = make_grid(2, &[6.0, 6.0], &[32, 32]).unwrap();
        let f = smooth_random_field(&grid, &mut rng_from_seed(9), 3);
        let row = diagnostics(&state(f, 0.3), -100.0);
        assert_eq!(row.l_running_min, -100.0);
        assert!(row.j >= 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn virial_forms_agree(seed in 0u64..100_000, w in 0.0f64..0.9) {
            let grid = make_grid(2, &[6.0, 6.0], &[32, 32]).unwrap();
            let f = smooth_random_field(&grid, &mut rng_from_seed(seed), 3);
            let s = state(f, w);
            let r = evaluate(&s.field, &s.params).unwrap();
            let a = jpp_vfm(&r, &s.params);
            let b = jpp_direct(&r, &s.params);
            let scale = 2.0 * r.kinetic + 2.0 * r.potential + 2.0 * r.lp1;
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
}
