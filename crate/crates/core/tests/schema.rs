//! Byte- and column-level contracts consumed by external readers.

use num_complex::Complex64;
use rotnls::diagnostics::{read_csv, write_csv, DiagnosticsRow};
use rotnls::dynamics::{evolve, EvolveConfig, SimState};
use rotnls::snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
use rotnls::{make_grid, ComplexField, PhysicsParams};

const TRAJECTORY_COLUMNS: &str =
    "t,M,kinetic,potential,lp1,ang_mom,quad_form,energy,sigma_norm2,J,Jp,Jpp_vfm,grad_norm,grad_product,tail_fraction,l_running_min";

fn short_trajectory() -> Vec<DiagnosticsRow> {
    let grid = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
    let u = ComplexField::from_fn(&grid, |x| {
        Complex64::from_polar((-(0.5 * x[0] * x[0] + x[1] * x[1])).exp(), 0.3 * x[0])
    });
    let params = PhysicsParams::new(2, 5.0, &[1.0, 1.3], 0.2).unwrap();
    evolve(SimState::new(u, params).unwrap(), &EvolveConfig::new(0.05, 1e-3, 10)).unwrap().rows
}

#[test]
fn trajectory_csv_column_order_is_fixed() {
    assert_eq!(DiagnosticsRow::csv_header(), TRAJECTORY_COLUMNS);
    let rows = short_trajectory();
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TRAJECTORY_COLUMNS);

    // Read by column position, as an external consumer would.
    let cols: Vec<&str> = TRAJECTORY_COLUMNS.split(',').collect();
    let at = |name: &str| cols.iter().position(|c| *c == name).unwrap();
    for (line, row) in lines.zip(&rows) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(v.len(), cols.len());
        assert_eq!(v[at("t")], row.t);
        assert_eq!(v[at("M")], row.report.mass);
        assert_eq!(v[at("energy")], row.report.energy);
        assert_eq!(v[at("ang_mom")], row.report.ang_mom);
        assert_eq!(v[at("grad_product")], row.grad_product);
        assert_eq!(v[at("l_running_min")], row.l_running_min);
    }
}

#[test]
fn trajectory_csv_round_trips_exactly() {
    let rows = short_trajectory();
    assert_eq!(rows.len(), 6);
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    let back = read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.csv_row(), b.csv_row());
        assert_eq!(a.report.lp1.to_bits(), b.report.lp1.to_bits());
    }
    let swapped = String::from_utf8(buf).unwrap().replacen("t,M", "M,t", 1);
    assert!(read_csv(&swapped).is_err());
    assert!(read_csv("").is_err());
}

/// Minimal independent reader for the snapshot layout.
struct Parsed {
    dim: u8,
    points: Vec<u32>,
    half_widths: Vec<f64>,
    gammas: Vec<f64>,
    tail: [f64; 3],
    samples: Vec<Complex64>,
}

fn parse(bytes: &[u8]) -> Parsed {
    assert_eq!(&bytes[..6], b"RNLS1\0");
    assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 1);
    let dim = bytes[8];
    let mut pos = 9;
    let f64_at = |pos: &mut usize| {
        let v = f64::from_le_bytes(bytes[*pos..*pos + 8].try_into().unwrap());
        *pos += 8;
        v
    };
    let mut points = Vec::new();
    let mut half_widths = Vec::new();
    for _ in 0..dim {
        points.push(u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()));
        pos += 4;
        half_widths.push(f64_at(&mut pos));
    }
    let gammas: Vec<f64> = (0..dim).map(|_| f64_at(&mut pos)).collect();
    let tail = [f64_at(&mut pos), f64_at(&mut pos), f64_at(&mut pos)];
    let n: usize = points.iter().map(|&p| p as usize).product();
    assert_eq!(bytes.len() - pos, 16 * n);
    let samples = (0..n).map(|_| Complex64::new(f64_at(&mut pos), f64_at(&mut pos))).collect();
    Parsed { dim, points, half_widths, gammas, tail, samples }
}

#[test]
fn snapshot_layout_is_little_endian_row_major() {
    let grid = make_grid(3, &[4.0, 5.0, 6.0], &[8, 16, 32]).unwrap();
    let f = ComplexField::from_fn(&grid, |x| Complex64::new(x[0] + 10.0 * x[1], 100.0 * x[2]));
    let header = SnapshotHeader { gammas: vec![1.0, 1.5, 2.0], omega_rot: 0.25, p: 3.0, t: 1.75 };
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, &f, &header).unwrap();
    let parsed = parse(&bytes);
    assert_eq!(parsed.dim, 3);
    assert_eq!(parsed.points, [8, 16, 32]);
    assert_eq!(parsed.half_widths, [4.0, 5.0, 6.0]);
    assert_eq!(parsed.gammas, [1.0, 1.5, 2.0]);
    assert_eq!(parsed.tail, [0.25, 3.0, 1.75]);
    // Last axis fastest; coordinates start at -L_j.
    let idx = |i: usize, j: usize, k: usize| (i * 16 + j) * 32 + k;
    let x = |l: f64, n: f64, i: usize| -l + 2.0 * l * i as f64 / n;
    for (i, j, k) in [(0, 0, 0), (3, 7, 21), (7, 15, 31)] {
        let z = parsed.samples[idx(i, j, k)];
        assert_eq!(z.re, x(4.0, 8.0, i) + 10.0 * x(5.0, 16.0, j));
        assert_eq!(z.im, 100.0 * x(6.0, 32.0, k));
    }
}

#[test]
fn snapshot_round_trips_bit_exactly() {
    let grid = make_grid(2, &[6.0, 6.0], &[32, 32]).unwrap();
    let f = ComplexField::from_fn(&grid, |x| Complex64::from_polar((-x[0] * x[0]).exp() / 3.0, x[1].sin()));
    let header = SnapshotHeader { gammas: vec![1.0, 1.1], omega_rot: 0.3, p: 5.0, t: 0.1 };
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, &f, &header).unwrap();
    let (g, h) = read_snapshot(bytes.as_slice()).unwrap();
    assert_eq!(h, header);
    assert_eq!(g.grid().spec(), grid.spec());
    assert!(f.values().iter().zip(g.values()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    let mut again = Vec::new();
    write_snapshot(&mut again, &g, &h).unwrap();
    assert_eq!(again, bytes);

    assert!(read_snapshot(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(read_snapshot(bad.as_slice()).is_err());
}
